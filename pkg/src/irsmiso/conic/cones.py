"""Vectorised algebra on a product of symmetric cones.

The interior-point solver works on vectors laid out as
``[nonneg | soc blocks | psd blocks]``; rotated cones are turned into
ordinary second-order cones before they reach this module and zero cones
become equality constraints.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.linalg as la

SQRT2 = math.sqrt(2.0)


def _tril_scale(d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    i, j = np.tril_indices(d)
    scale = np.where(i == j, 1.0, SQRT2)
    return i, j, scale


class ProductCone:
    """Layout and Jordan-algebra helpers for ``R+^l x Q^{q1} x ... x S^{d1} x ...``."""

    def __init__(self, nonneg: int, soc: list[int], psd: list[int]):
        self.l = int(nonneg)
        self.soc = [int(q) for q in soc]
        self.psd = [int(d) for d in psd]
        self.q_total = sum(self.soc)
        self.q_off = self.l
        lens = np.asarray(self.soc, dtype=int)
        self.q_starts = np.concatenate(([0], np.cumsum(lens)[:-1])).astype(int) if len(lens) else np.zeros(0, int)
        self.q_lens = lens
        self.q_head_mask = np.zeros(self.q_total, dtype=bool)
        self.q_head_mask[self.q_starts] = True
        self.psd_slices = []
        self.psd_index = []
        off = self.l + self.q_total
        for d in self.psd:
            size = d * (d + 1) // 2
            self.psd_slices.append(slice(off, off + size))
            self.psd_index.append(_tril_scale(d))
            off += size
        self.dim = off
        self.degree = self.l + len(self.soc) + sum(self.psd)

    # -- svec helpers -------------------------------------------------
    def _mats(self, k: int, v: np.ndarray) -> np.ndarray:
        """Columns of ``v`` (size x ncol) as a stack of symmetric matrices (ncol, d, d)."""
        d = self.psd[k]
        i, j, scale = self.psd_index[k]
        cols = v.reshape(v.shape[0], -1)
        out = np.zeros((cols.shape[1], d, d))
        vals = (cols / scale[:, None]).T
        out[:, i, j] = vals
        out[:, j, i] = vals
        return out

    def _vecs(self, k: int, M: np.ndarray) -> np.ndarray:
        i, j, scale = self.psd_index[k]
        return (M[:, i, j] * scale).T

    def soc_part(self, v):
        return v[self.q_off:self.q_off + self.q_total]

    def _soc_reduce(self, v):
        return np.add.reduceat(v, self.q_starts, axis=0)

    def _rep(self, per_block, extra_dims=0):
        return np.repeat(per_block, self.q_lens, axis=0)

    # -- basic quantities ---------------------------------------------
    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[:self.l] = 1.0
        if self.soc:
            e[self.q_off + self.q_starts] = 1.0
        for k, sl in enumerate(self.psd_slices):
            i, j, _ = self.psd_index[k]
            e[sl] = (i == j).astype(float)
        return e

    def min_eig(self, v: np.ndarray) -> float:
        """Smallest Jordan eigenvalue of ``v`` (negative outside the cone)."""
        vals = []
        if self.l:
            vals.append(v[:self.l].min())
        if self.soc:
            q = self.soc_part(v)
            head = q[self.q_starts]
            tail_sq = self._soc_reduce(q * q) - head * head
            vals.append((head - np.sqrt(np.maximum(tail_sq, 0.0))).min())
        for k, sl in enumerate(self.psd_slices):
            vals.append(la.eigvalsh(self._mats(k, v[sl])[0])[0])
        return min(vals) if vals else 0.0

    def jdot(self, u, v):
        """Jordan product ``u o v`` (in scaled coordinates for psd blocks)."""
        out = np.empty(self.dim)
        out[:self.l] = u[:self.l] * v[:self.l]
        if self.soc:
            qu, qv = self.soc_part(u), self.soc_part(v)
            dots = self._soc_reduce(qu * qv)
            hu, hv = qu[self.q_starts], qv[self.q_starts]
            res = self._rep(hu) * qv + self._rep(hv) * qu
            res[self.q_starts] = dots
            out[self.q_off:self.q_off + self.q_total] = res
        for k, sl in enumerate(self.psd_slices):
            U = self._mats(k, u[sl])[0]
            V = self._mats(k, v[sl])[0]
            P = 0.5 * (U @ V + V @ U)
            out[sl] = self._vecs(k, P[None])[:, 0]
        return out

    # -- scaling --------------------------------------------------------
    def nt_scaling(self, s: np.ndarray, z: np.ndarray) -> "NTScaling":
        return NTScaling(self, s, z)


class NTScaling:
    """Nesterov-Todd scaling ``W`` with ``W z = W^{-T} s = lambda``."""

    def __init__(self, cone: ProductCone, s: np.ndarray, z: np.ndarray):
        self.cone = cone
        lam = np.empty(cone.dim)
        l = cone.l
        self.d = np.sqrt(s[:l] / z[:l])
        lam[:l] = np.sqrt(s[:l] * z[:l])
        if cone.soc:
            qs, qz = cone.soc_part(s), cone.soc_part(z)
            st = cone.q_starts
            s_sc = np.sqrt(np.maximum(qs[st] ** 2 - (cone._soc_reduce(qs * qs) - qs[st] ** 2), 0.0))
            z_sc = np.sqrt(np.maximum(qz[st] ** 2 - (cone._soc_reduce(qz * qz) - qz[st] ** 2), 0.0))
            if np.any(s_sc <= 0) or np.any(z_sc <= 0):
                raise FloatingPointError("iterate left the second-order cone interior")
            sbar = qs / cone._rep(s_sc)
            zbar = qz / cone._rep(z_sc)
            gamma = np.sqrt(np.maximum((1.0 + cone._soc_reduce(sbar * zbar)) / 2.0, 0.0))
            jz = -zbar
            jz[st] = zbar[st]
            wbar = (sbar + jz) / (2.0 * cone._rep(gamma))
            self.eta = np.sqrt(s_sc / z_sc)
            self.w0 = wbar[st]
            self.wt = wbar.copy()
            self.wt[st] = 0.0
            lam[cone.q_off:cone.q_off + cone.q_total] = self._soc_apply(qz, inverse=False)
        self.R = []
        self.Rinv = []
        self.lam_psd = []
        for k, sl in enumerate(cone.psd_slices):
            S = cone._mats(k, s[sl])[0]
            Z = cone._mats(k, z[sl])[0]
            Ls = la.cholesky(S, lower=True)
            Lz = la.cholesky(Z, lower=True)
            U, sv, Vt = la.svd(Lz.T @ Ls)
            R = (Ls @ Vt.T) / np.sqrt(sv)[None, :]
            Rinv = (np.sqrt(sv)[:, None] * Vt) @ la.solve_triangular(Ls, np.eye(len(sv)), lower=True)
            self.R.append(R)
            self.Rinv.append(Rinv)
            self.lam_psd.append(sv)
            lam[sl] = cone._vecs(k, np.diag(sv)[None])[:, 0]
        self.lam = lam

    def _soc_apply(self, q, inverse):
        cone = self.cone
        two_d = q.ndim == 2
        Q = q if two_d else q[:, None]
        st = cone.q_starts
        wt = self.wt[:, None]
        w0 = self.w0[:, None]
        head = Q[st]
        tdot = cone._soc_reduce(wt * Q)
        if not inverse:
            new_head = w0 * head + tdot
            out = Q + wt * cone._rep(head + tdot / (1.0 + w0))
            out[st] = new_head
            out = out * cone._rep(self.eta)[:, None]
        else:
            new_head = w0 * head - tdot
            out = Q + wt * cone._rep(-head + tdot / (1.0 + w0))
            out[st] = new_head
            out = out / cone._rep(self.eta)[:, None]
        return out if two_d else out[:, 0]

    def _apply(self, v, which):
        """which: 'W', 'Winv', 'WT', 'WinvT'. Works on vectors and column stacks."""
        cone = self.cone
        out = np.empty_like(v, dtype=float)
        l = cone.l
        dd = self.d if v.ndim == 1 else self.d[:, None]
        if which in ("W", "WT"):
            out[:l] = v[:l] * dd
        else:
            out[:l] = v[:l] / dd
        if cone.soc:
            qs = slice(cone.q_off, cone.q_off + cone.q_total)
            out[qs] = self._soc_apply(v[qs], inverse=which in ("Winv", "WinvT"))
        for k, sl in enumerate(cone.psd_slices):
            X = cone._mats(k, v[sl])
            R, Ri = self.R[k], self.Rinv[k]
            if which == "W":
                Y = R.T @ X @ R
            elif which == "WT":
                Y = R @ X @ R.T
            elif which == "Winv":
                Y = Ri.T @ X @ Ri
            else:
                Y = Ri @ X @ Ri.T
            res = cone._vecs(k, Y)
            out[sl] = res[:, 0] if v.ndim == 1 else res
        return out

    def W(self, v):
        return self._apply(v, "W")

    def WT(self, v):
        return self._apply(v, "WT")

    def Winv(self, v):
        return self._apply(v, "Winv")

    def WinvT(self, v):
        return self._apply(v, "WinvT")

    # -- operations in the scaled space -------------------------------
    def lam_sq(self):
        return self.cone.jdot(self.lam, self.lam)

    def lam_inv_prod(self, d: np.ndarray) -> np.ndarray:
        """Solve ``lambda o u = d`` for ``u``."""
        cone = self.cone
        lam = self.lam
        u = np.empty(cone.dim)
        l = cone.l
        u[:l] = d[:l] / lam[:l]
        if cone.soc:
            st = cone.q_starts
            ql = cone.soc_part(lam)
            qd = cone.soc_part(d)
            l0 = ql[st]
            d0 = qd[st]
            lt_dot_dt = cone._soc_reduce(ql * qd) - l0 * d0
            det = l0 ** 2 - (cone._soc_reduce(ql * ql) - l0 ** 2)
            u0 = (l0 * d0 - lt_dot_dt) / det
            res = (qd - cone._rep(u0) * ql) / cone._rep(l0)
            res[st] = u0
            u[cone.q_off:cone.q_off + cone.q_total] = res
        for k, sl in enumerate(cone.psd_slices):
            ev = self.lam_psd[k]
            i, j, _ = cone.psd_index[k]
            u[sl] = d[sl] * 2.0 / (ev[i] + ev[j])
        return u

    def max_step(self, v: np.ndarray) -> float:
        """Largest ``alpha`` with ``lambda + alpha v`` in the cone (inf if unbounded)."""
        cone = self.cone
        lam = self.lam
        alpha = np.inf
        l = cone.l
        if l:
            neg = v[:l] < 0
            if np.any(neg):
                alpha = min(alpha, np.min(-lam[:l][neg] / v[:l][neg]))
        if cone.soc:
            st = cone.q_starts
            ql, qv = cone.soc_part(lam), cone.soc_part(v)
            l0, v0 = ql[st], qv[st]
            a = v0 ** 2 - (cone._soc_reduce(qv * qv) - v0 ** 2)
            b = l0 * v0 - (cone._soc_reduce(ql * qv) - l0 * v0)
            c = l0 ** 2 - (cone._soc_reduce(ql * ql) - l0 ** 2)
            alpha = min(alpha, _soc_first_root(a, b, c))
        for k, sl in enumerate(cone.psd_slices):
            ev = self.lam_psd[k]
            X = cone._mats(k, v[sl])[0]
            isq = 1.0 / np.sqrt(ev)
            M = isq[:, None] * X * isq[None, :]
            emin = la.eigvalsh(M)[0]
            if emin < 0:
                alpha = min(alpha, -1.0 / emin)
        return alpha


def _soc_first_root(a, b, c):
    """Smallest positive root of ``a t^2 + 2 b t + c`` with ``c > 0``, per block."""
    out = np.full(a.shape, np.inf)
    scale = np.maximum(np.abs(a) + np.abs(b), 1e-300)
    lin = np.abs(a) <= 1e-14 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        lin_root = np.where(b < 0, -c / (2.0 * b), np.inf)
        disc = b * b - a * c
        sq = np.sqrt(np.maximum(disc, 0.0))
        q = -(b + np.where(b >= 0, sq, -sq))
        r1 = np.where(a != 0, q / a, np.inf)
        r2 = np.where(q != 0, c / q, np.inf)
    r1 = np.where(r1 > 0, r1, np.inf)
    r2 = np.where(r2 > 0, r2, np.inf)
    quad_root = np.where(disc >= 0, np.minimum(r1, r2), np.inf)
    out = np.where(lin, lin_root, quad_root)
    return float(np.min(out)) if out.size else np.inf
