"""Joint beamformer and phase design by successive convex approximation.

Every iteration solves one SOCP in which all beamformers and all IRS phases
are updated together. Unit modulus is relaxed to ``|phi_i| <= 1`` and pushed
back to the boundary by the penalty ``-xi ||phi||^2``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import conic
from .baselines import initial_point, w_update
from .bounds import ExpansionPoint, VarLayout, surrogate_coefficients
from .channel import ProblemInstance
from .conic.builder import ProgramBuilder
from .errors import InfeasibleError, SolverFailure
from .sysmodel import TOL_MOD, DesignPoint, check_feasibility, transmit_power
from .trace import ScaTrace

MAJORANT_SLACK = {"mu": "t", "mu_hat": "t", "nu": "tbar", "nu_hat": "tbar"}


@dataclass(frozen=True)
class ScaSettings:
    xi: float = 1e-3
    rel_obj_tol: float = 1e-5
    max_iters: int = 20
    scale_and_resolve: bool = True
    tol_mod: float = TOL_MOD
    solver_tol: float = 1e-8

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("xi must be positive")
        if not self.rel_obj_tol > 0:
            raise ValueError("rel_obj_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class SubproblemLayout:
    """Variables ``[Re w; Im w; Re phi; Im phi; t; tbar; tau]``.

    ``t`` and ``tbar`` hold one entry per ordered pair (k, l), k != l, in
    row-major order.
    """

    base: VarLayout

    @property
    def pairs(self) -> list[tuple[int, int]]:
        K = self.base.K
        return [(k, l) for k in range(K) for l in range(K) if l != k]

    @property
    def n_pairs(self) -> int:
        return self.base.K * (self.base.K - 1)

    @property
    def t(self) -> slice:
        return slice(self.base.n, self.base.n + self.n_pairs)

    @property
    def tbar(self) -> slice:
        off = self.base.n + self.n_pairs
        return slice(off, off + self.n_pairs)

    @property
    def tau(self) -> int:
        return self.base.n + 2 * self.n_pairs

    @property
    def n(self) -> int:
        return self.base.n + 2 * self.n_pairs + 1

    def pair_index(self, k: int, l: int) -> int:
        K = self.base.K
        return k * (K - 1) + (l if l < k else l - 1)


def expected_counts(K: int, N_t: int, N_s: int) -> tuple[int, int]:
    """Closed-form (variables, cones) of the compiled subproblem."""
    return 2 * (K * N_t + N_s + K * (K - 1)) + 1, K + 4 * K * (K - 1) + N_s + 1


def assemble_subproblem(inst: ProblemInstance, ep: ExpansionPoint, xi: float) -> conic.ConicProgram:
    """Convex subproblem around ``ep`` as a conic program.

    Cones, in order: the power epigraph ``tau >= ||w||^2``; one SINR cone per
    user; four interference cones per ordered pair; one ``|phi_i| <= 1`` cone
    per element.
    """
    if not xi > 0:
        raise ValueError("xi must be positive")
    base = VarLayout.of(inst)
    lay = SubproblemLayout(base)
    n = lay.n
    K, N_s = inst.K, inst.N_s

    def widen(M):
        out = np.zeros((M.shape[0], n))
        out[:, :base.n] = M
        return out

    bld = ProgramBuilder(n)

    # tau >= ||w||^2  as  2 tau (1/2) >= ||w||^2
    nw = base.w_part.stop
    F = np.zeros((2 + nw, n))
    F[0, lay.tau] = 1.0
    F[2:, :nw] = np.eye(nw)
    f0 = np.zeros(2 + nw)
    f0[1] = 0.5
    bld.add("rsoc", F, f0)

    # f_k / Gamma_k - 1 >= 1/2 ||L x + l0||^2 / Gamma_k + sum_l (t_kl^2 + tbar_kl^2)
    for k in range(K):
        q = surrogate_coefficients(inst, ep, k, None, "f", base)
        g = inst.gamma[k]
        others = [lay.pair_index(k, l) for l in range(K) if l != k]
        rows = 2 + q.L.shape[0] + 2 * len(others)
        F = np.zeros((rows, n))
        f0 = np.zeros(rows)
        F[0, :base.n] = q.lin / g
        f0[0] = q.const / g - 1.0
        f0[1] = 1.0
        r = 2 + q.L.shape[0]
        F[2:r] = widen(q.L / math.sqrt(g))
        f0[2:r] = q.l0 / math.sqrt(g)
        for i, p in enumerate(others):
            F[r + i, lay.t.start + p] = math.sqrt(2.0)
            F[r + len(others) + i, lay.tbar.start + p] = math.sqrt(2.0)
        bld.add("rsoc", F, f0)

    # t_kl, tbar_kl >= surrogate  as  2 (slack - lin x - const) >= ||L x + l0||^2
    for k, l in lay.pairs:
        p = lay.pair_index(k, l)
        for which, slack in MAJORANT_SLACK.items():
            q = surrogate_coefficients(inst, ep, k, l, which, base)
            col = (lay.t if slack == "t" else lay.tbar).start + p
            F = np.zeros((2 + q.L.shape[0], n))
            f0 = np.zeros(2 + q.L.shape[0])
            F[0, :base.n] = -q.lin
            F[0, col] = 1.0
            f0[0] = -q.const
            f0[1] = 1.0
            F[2:] = widen(q.L)
            f0[2:] = q.l0
            bld.add("rsoc", F, f0)

    # |phi_i| <= 1
    for i in range(N_s):
        F = np.zeros((3, n))
        F[1, base.re_phi.start + i] = 1.0
        F[2, base.im_phi.start + i] = 1.0
        bld.add("soc", F, np.array([1.0, 0.0, 0.0]))

    # tau - xi (2 Re{phi_n^H phi} - ||phi_n||^2)
    c = np.zeros(n)
    c[lay.tau] = 1.0
    c[base.re_phi] = -2.0 * xi * ep.phi.real
    c[base.im_phi] = -2.0 * xi * ep.phi.imag
    offset = xi * float(np.vdot(ep.phi, ep.phi).real)
    names = {"w": base.w_part, "phi_re": base.re_phi, "phi_im": base.im_phi,
             "t": lay.t, "tbar": lay.tbar, "tau": slice(lay.tau, lay.tau + 1)}
    return bld.build(c, offset=offset, var_names=names)


def tight_point(inst: ProblemInstance, ep: ExpansionPoint) -> np.ndarray:
    """The expansion point itself as a subproblem variable vector.

    Slacks take their tight values ``t_kl = |Re{g_k w_l}|``,
    ``tbar_kl = |Im{g_k w_l}|`` and ``tau = ||w||^2``.
    """
    base = VarLayout.of(inst)
    lay = SubproblemLayout(base)
    x = np.zeros(lay.n)
    x[:base.n] = base.stack(DesignPoint(ep.w, ep.phi, False))
    G = ep.g @ ep.w.T
    for k, l in lay.pairs:
        p = lay.pair_index(k, l)
        x[lay.t.start + p] = abs(G[k, l].real)
        x[lay.tbar.start + p] = abs(G[k, l].imag)
    x[lay.tau] = float(np.sum(np.abs(ep.w) ** 2))
    return x


def penalized_objective(dp: DesignPoint, xi: float) -> float:
    """``||w||^2 - xi ||phi||^2``."""
    return transmit_power(dp) - xi * float(np.sum(np.abs(dp.phi) ** 2))


def initialize(inst: ProblemInstance, rng_seed, max_retries: int = 10) -> DesignPoint:
    """Random unit-modulus phases with the minimum-power beamformers for them."""
    return initial_point(inst, rng_seed, max_retries)


def project_unit_modulus(phi: np.ndarray) -> np.ndarray:
    """``phi_i / |phi_i|``; exact zeros map to 1."""
    mag = np.abs(phi)
    out = np.ones_like(phi)
    nz = mag > 0
    out[nz] = phi[nz] / mag[nz]
    return out


def run(inst: ProblemInstance, settings: ScaSettings = ScaSettings(), rng_seed=0,
        start: DesignPoint | None = None) -> tuple[DesignPoint, ScaTrace]:
    """Run the SCA iterations from a random feasible start (or ``start``)."""
    trace = ScaTrace(algorithm="sca")
    t0 = time.perf_counter()
    dp = initialize(inst, rng_seed) if start is None else start.copy()
    elapsed = time.perf_counter() - t0
    base = VarLayout.of(inst)

    def record(i, solve_time):
        rep = check_feasibility(inst, dp, tol_mod=settings.tol_mod)
        trace.append(iter=i, power=transmit_power(dp), penalized=penalized_objective(dp, settings.xi),
                     min_sinr_margin=float(rep.margin.min()), max_modulus_gap=rep.modulus_violation,
                     solve_time=solve_time, cumulative_time=elapsed)

    record(0, elapsed)
    trace.status = "max-iters"
    f_prev = penalized_objective(dp, settings.xi)
    for it in range(1, settings.max_iters + 1):
        t1 = time.perf_counter()
        ep = ExpansionPoint.at(inst, dp)
        prog = assemble_subproblem(inst, ep, settings.xi)
        res = conic.solve(prog, tol=settings.solver_tol)
        dt = time.perf_counter() - t1
        if not res.usable:
            trace.status = "solver-failure"
            raise SolverFailure(f"SCA iteration {it}: subproblem ended with status {res.status}",
                                trace=trace, design=dp)
        elapsed += dt
        dp = base.unstack(res.x[:base.n], unit_modulus=False)
        record(it, dt)
        f_new = penalized_objective(dp, settings.xi)
        if abs(f_prev - f_new) / max(1.0, abs(f_prev)) < settings.rel_obj_tol:
            trace.status = "converged"
            trace.converged = True
            break
        f_prev = f_new

    gap = float(np.max(np.abs(np.abs(dp.phi) - 1.0), initial=0.0))
    trace.modulus_gap_before_projection = gap
    if gap <= settings.tol_mod:
        dp = DesignPoint(dp.w, dp.phi, unit_modulus=True)
    elif settings.scale_and_resolve:
        phi = project_unit_modulus(dp.phi)
        t1 = time.perf_counter()
        try:
            w = w_update(inst, phi)
        except InfeasibleError:
            trace.status = "relaxed-fallback"
        else:
            dp = DesignPoint(w, phi, unit_modulus=True)
            trace.status = "projected"
        trace.post_time = time.perf_counter() - t1
    return dp, trace
