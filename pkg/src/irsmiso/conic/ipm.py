"""Dense primal-dual interior-point method on the homogeneous self-dual embedding.

Nesterov-Todd scaling with a Mehrotra predictor-corrector step, in the style
of the CVXOPT ``conelp`` and ECOS solvers. Zero-cone rows are handled as
equality constraints, rotated second-order cones are mapped to ordinary ones
by the orthogonal transform ``(u, v) -> ((u+v)/sqrt2, (u-v)/sqrt2)``.
"""
from __future__ import annotations

import logging
import math
import time

import numpy as np
import scipy.linalg as la

from .cones import ProductCone
from .program import ConeDimensionError, ConicProgram, SolveResult

log = logging.getLogger(__name__)

PSD_CAP = 200
REFINE_STEPS = 8
REFINE_TOL = 1e-12
# the best iterate is reported "near-optimal" when its residuals are within
# this factor of the tolerance
NEAR_OPTIMAL_FACTOR = 1e3
_STEP = 0.99


class _Layout:
    """Row permutation from a ConicProgram to the solver's internal order."""

    def __init__(self, prog: ConicProgram, psd_cap: int):
        zero, nonneg, soc, psd = [], [], [], []
        soc_dims, psd_orders, rot_heads = [], [], []
        for cone, sl in prog.cone_slices():
            rows = list(range(sl.start, sl.stop))
            if cone.kind == "zero":
                zero += rows
            elif cone.kind == "nonneg":
                nonneg += rows
            elif cone.kind in ("soc", "rsoc"):
                if cone.kind == "rsoc":
                    rot_heads.append(len(soc))
                soc += rows
                soc_dims.append(cone.dim)
            else:
                if cone.order > psd_cap:
                    raise ConeDimensionError(f"psd block of order {cone.order} exceeds cap {psd_cap}")
                psd += rows
                psd_orders.append(cone.order)
        self.zero = np.asarray(zero, dtype=int)
        self.cone_rows = np.asarray(nonneg + soc + psd, dtype=int)
        self.cone = ProductCone(len(nonneg), soc_dims, psd_orders)
        # positions (in the internal cone vector) of rotated-cone heads
        self.rot = np.asarray(rot_heads, dtype=int) + len(nonneg)

    def rotate(self, v):
        """Apply the involution T on rotated-cone heads (rows of v)."""
        if self.rot.size == 0:
            return v
        v = v.copy()
        i, j = self.rot, self.rot + 1
        a, b = v[i].copy(), v[j].copy()
        v[i] = (a + b) / math.sqrt(2.0)
        v[j] = (a - b) / math.sqrt(2.0)
        return v


class _KKT:
    """Solver for ``[[Gs^T Gs, Ae^T], [Ae, 0]] [dx; dy] = [bx; by]``.

    Factors the regularized normal matrix by Cholesky, falling back to a QR
    of the stacked ``[Gs; D]`` when that breaks down. Iterative refinement
    against the unreduced system recovers the accuracy lost to squaring the
    condition number. Equality rows are eliminated through the small matrix ``B B^T`` with
    ``B = Ae R^{-1}``.
    """

    def __init__(self, Gs, Ae, reg=1e-13):
        n = Gs.shape[1]
        p = Ae.shape[0]
        self.n, self.p = n, p
        self.Gs, self.Ae = Gs, Ae
        # per-column regularization keeps R nonsingular (also for variables
        # absent from Gs) without swamping weakly scaled columns
        col = np.linalg.norm(Gs, axis=0) if Gs.size else np.zeros(n)
        floor = 1e-8 * max(1.0, float(col.max(initial=0.0)))
        diag = math.sqrt(reg) * np.maximum(col, floor)
        try:
            N = Gs.T @ Gs
            N[np.diag_indices(n)] += diag ** 2
            self.R = la.cholesky(N, lower=False, check_finite=False)
        except la.LinAlgError:
            stacked = np.vstack([Gs, np.diag(diag)])
            self.R = la.qr(stacked, mode="r", check_finite=False)[0][:n]
        if not np.all(np.isfinite(self.R)):
            raise la.LinAlgError("non-finite QR factor")
        if p:
            self.B = la.solve_triangular(self.R, Ae.T, trans="T", check_finite=False).T
            BBt = self.B @ self.B.T
            BBt += reg * max(1.0, float(np.max(np.diag(BBt)))) * np.eye(p)
            self.fac = la.cho_factor(BBt, lower=True, check_finite=False)

    def _once(self, rhs):
        n = self.n
        bx, by = rhs[:n], rhs[n:]
        g = la.solve_triangular(self.R, bx, trans="T", check_finite=False)
        if self.p:
            dy = la.cho_solve(self.fac, self.B @ g - by, check_finite=False)
            g = g - self.B.T @ dy
        else:
            dy = np.zeros(0)
        dx = la.solve_triangular(self.R, g, check_finite=False)
        return np.concatenate([dx, dy])

    def _apply(self, v):
        n = self.n
        dx, dy = v[:n], v[n:]
        top = self.Gs.T @ (self.Gs @ dx) + self.Ae.T @ dy
        return np.concatenate([top, self.Ae @ dx])

    def solve(self, rhs):
        x = self._once(rhs)
        for _ in range(2):
            r = rhs - self._apply(x)
            if not np.all(np.isfinite(r)):
                break
            x = x + self._once(r)
        return x


def solve(prog: ConicProgram, tol: float = 1e-8, max_iters: int = 100,
          psd_cap: int = PSD_CAP) -> SolveResult:
    """Solve ``min c^T x s.t. A x + s = b, s in K``.

    The returned ``z`` is the dual variable (``A^T z + c = 0``, ``z`` in the
    dual cone). On infeasibility ``certificate`` holds the normalised ray.
    """
    t_start = time.perf_counter()
    lay = _Layout(prog, psd_cap)
    cone = lay.cone
    A = prog.dense_A()
    c = prog.c
    Ae = A[lay.zero]
    be = prog.b[lay.zero]
    G = lay.rotate(A[lay.cone_rows])
    h = lay.rotate(prog.b[lay.cone_rows])
    p = len(lay.zero)

    res = _hsde(c, G, h, Ae, be, cone, tol, max_iters)
    res.tol = tol
    # map back to the caller's row order
    if res.s is not None or res.z is not None:
        for name in ("s", "z"):
            v_int = getattr(res, name)
            if v_int is None:
                continue
            full = np.zeros(prog.m)
            full[lay.cone_rows] = lay.rotate(v_int[p:])
            full[lay.zero] = v_int[:p]
            setattr(res, name, full)
    if res.certificate is not None:
        cert = res.certificate
        if "z" in cert:
            full = np.zeros(prog.m)
            full[lay.cone_rows] = lay.rotate(cert["z"][p:])
            full[lay.zero] = cert["z"][:p]
            cert["z"] = full
        if "s" in cert:
            full = np.zeros(prog.m)
            full[lay.cone_rows] = lay.rotate(cert["s"][p:])
            cert["s"] = full
    if res.x is not None:
        res.objective += prog.offset
        res.dual_objective += prog.offset
    res.wall_time = time.perf_counter() - t_start
    return res


def _hsde(c, G, h, Ae, be, cone: ProductCone, tol, max_iters) -> SolveResult:
    n, p = c.size, be.size
    nu = cone.degree
    e = cone.identity()
    bnorm = max(1.0, math.hypot(np.linalg.norm(be), np.linalg.norm(h)))
    cnorm = max(1.0, np.linalg.norm(c))

    def pack(v_eq, v_cone):
        return np.concatenate([v_eq, v_cone])

    # initial point: least-norm primal and dual solutions under identity scaling
    try:
        kkt0 = _KKT(G, Ae)
        xy = kkt0.solve(np.concatenate([G.T @ h, be]))
        x = xy[:n]
        s = h - G @ x
        xy = kkt0.solve(np.concatenate([-c, np.zeros(p)]))
        # dual: min ||z|| s.t. G^T z + Ae^T y = -c  ->  z = G dx with dx from normal equations
        y = xy[n:]
        z = G @ xy[:n]
    except (la.LinAlgError, ValueError) as exc:
        return SolveResult("numerical-failure", message=f"initial factorisation failed: {exc}")
    for v in (s, z):
        shift = -cone.min_eig(v)
        if shift >= -1e-8 * max(1.0, np.linalg.norm(v)):
            v += (1.0 + max(shift, 0.0)) * e
    tau, kappa = 1.0, 1.0

    status = "max-iters"
    cert = None
    it = 0
    pres = dres = gap = float("inf")
    pcost = dcost = float("nan")
    best = (float("inf"),)
    for it in range(max_iters + 1):
        # residuals of the embedding
        rx = Ae.T @ y + G.T @ z + c * tau
        ry = Ae @ x - be * tau
        rz = G @ x + s - h * tau
        cx, by_, hz = c @ x, be @ y, h @ z
        rt = kappa + cx + by_ + hz
        sz = s @ z
        mu = (sz + tau * kappa) / (nu + 1)

        pcost = cx / tau
        dcost = -(hz + by_) / tau
        # residuals relative to the size of the terms that produce them
        Ax_norm = math.hypot(np.linalg.norm(Ae @ x), np.linalg.norm(G @ x)) / tau
        ATz_norm = np.linalg.norm(Ae.T @ y + G.T @ z) / tau
        pres = math.hypot(np.linalg.norm(ry), np.linalg.norm(rz)) / tau / max(bnorm, Ax_norm)
        dres = np.linalg.norm(rx) / tau / max(cnorm, ATz_norm)
        gap = sz / tau ** 2
        relgap = abs(pcost - dcost) / max(1.0, abs(pcost), abs(dcost))
        score = max(pres, dres, relgap)
        if score < best[0]:
            best = (score, x / tau, s / tau, y / tau, z / tau, pcost, dcost, pres, dres, gap)
        log.debug("it %2d pcost %+.8e dcost %+.8e pres %.1e dres %.1e gap %.1e tau %.1e kap %.1e",
                  it, pcost, dcost, pres, dres, gap, tau, kappa)

        if pres <= tol and dres <= tol and relgap <= tol:
            status = "optimal"
            break
        # infeasibility certificates
        if hz + by_ < 0:
            pinf = np.linalg.norm(Ae.T @ y + G.T @ z) / cnorm / (-(hz + by_))
            if pinf <= tol:
                scale = -(hz + by_)
                status = "primal-infeasible"
                cert = {"z": pack(y, z) / scale}
                break
        if cx < 0:
            dinf = math.hypot(np.linalg.norm(Ae @ x), np.linalg.norm(G @ x + s)) / bnorm / (-cx)
            if dinf <= tol:
                status = "dual-infeasible"
                cert = {"x": x / -cx, "s": pack(np.zeros(p), s / -cx)}
                break
        if it == max_iters:
            break

        try:
            W = cone.nt_scaling(s, z)
            Gs = W.WinvT(G)
            kkt = _KKT(Gs, Ae)
        except (la.LinAlgError, FloatingPointError, ValueError) as exc:
            status = "numerical-failure"
            log.debug("factorisation failed: %s", exc)
            break

        def reduced(bx, by, bz):
            wbz = W.WinvT(bz)
            sol = kkt.solve(np.concatenate([bx + Gs.T @ wbz, by]))
            dx = sol[:n]
            u = Gs @ dx - wbz
            return dx, sol[n:], W.Winv(u)

        def kkt_solve(bx, by, bz):
            # iterative refinement against the unreduced system
            dx, dy, dz = reduced(bx, by, bz)
            target = REFINE_TOL * max(1.0, np.abs(bx).max(initial=0), np.abs(bz).max(initial=0))
            prev = float("inf")
            for _ in range(REFINE_STEPS):
                ex = bx - Ae.T @ dy - G.T @ dz
                ey = by - Ae @ dx
                ez = bz - G @ dx + W.WT(W.W(dz))
                err = max(np.abs(ex).max(initial=0), np.abs(ey).max(initial=0), np.abs(ez).max(initial=0))
                # stop once accurate, or when refinement no longer pays off
                if err <= target or err > 0.5 * prev:
                    break
                prev = err
                cx_, cy_, cz_ = reduced(ex, ey, ez)
                dx, dy, dz = dx + cx_, dy + cy_, dz + cz_
            return dx, dy, dz, None

        x1, y1, z1, _ = kkt_solve(-c, be, h)
        denom_base = c @ x1 + be @ y1 + h @ z1

        def newton(sigma, ds_rhs, dk_rhs):
            eta = 1.0 - sigma
            v = W.lam_inv_prod(ds_rhs)
            bz = -eta * rz - W.WT(v)
            bt = -eta * rt - dk_rhs / tau
            x2, y2, z2, u2 = kkt_solve(-eta * rx, -eta * ry, bz)
            denom = denom_base - kappa / tau
            dtau = (bt - c @ x2 - be @ y2 - h @ z2) / denom
            dx = x2 + dtau * x1
            dy = y2 + dtau * y1
            dz = z2 + dtau * z1
            dz_s = W.W(dz)
            # ds from the linear rows keeps the primal residual reduction exact
            ds = -eta * rz - G @ dx + h * dtau
            ds_s = W.WinvT(ds)
            dkap = (dk_rhs - kappa * dtau) / tau
            return dx, dy, dz, dz_s, ds_s, dtau, dkap

        def step_len(dz_s, ds_s, dtau, dkap):
            a = min(W.max_step(dz_s), W.max_step(ds_s))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkap < 0:
                a = min(a, -kappa / dkap)
            return a

        lam_sq = W.lam_sq()
        aff = newton(0.0, -lam_sq, -tau * kappa)
        if not all(np.all(np.isfinite(v)) for v in aff[:5]):
            status = "numerical-failure"
            break
        a_aff = min(1.0, step_len(*aff[3:]))
        sigma = (1.0 - a_aff) ** 3
        corr = cone.jdot(aff[4], aff[3])
        step = newton(sigma, -lam_sq - corr + sigma * mu * e, -tau * kappa - aff[5] * aff[6] + sigma * mu)
        dx, dy, dz, dz_s, ds_s, dtau, dkap = step
        if not all(np.all(np.isfinite(v)) for v in step[:5]):
            status = "numerical-failure"
            break
        alpha = min(1.0, _STEP * step_len(dz_s, ds_s, dtau, dkap))
        if alpha < 1e-10:
            status = "numerical-failure"
            log.debug("step length collapsed")
            break
        ds = W.WT(ds_s)
        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkap

    if status in ("max-iters", "numerical-failure") and len(best) > 1:
        # fall back to the most accurate iterate seen; it may still meet tol
        _, xb, sb, yb, zb, pcost, dcost, pres, dres, gap = best
        if best[0] <= tol:
            status = "optimal"
        elif best[0] <= NEAR_OPTIMAL_FACTOR * tol:
            status = "near-optimal"
        x, s, y, z, tau = xb, sb, yb, zb, 1.0
    result = SolveResult(status, iterations=it, primal_residual=pres, dual_residual=dres, gap=gap,
                         certificate=cert)
    if status in ("optimal", "near-optimal", "max-iters", "numerical-failure") and tau > 0:
        result.x = x / tau
        result.s = pack(np.zeros(p), s / tau)
        result.z = pack(y / tau, z / tau)
        result.objective = pcost
        result.dual_objective = dcost
    return result
