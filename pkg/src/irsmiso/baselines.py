"""Alternating-optimization baseline: SOCP beamformer update and SDR phase update."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import conic
from .channel import ProblemInstance
from .conic.builder import ProgramBuilder
from .errors import InfeasibleError, InitializationInfeasible, SolverFailure
from .sysmodel import TOL_MOD, DesignPoint, check_feasibility, effective_channels, transmit_power
from .trace import ScaTrace

# stream ids for seeding, appended to the caller's seed
STREAM_INIT = 101
STREAM_RANDOMIZATION = 102


@dataclass(frozen=True)
class SdrSettings:
    n_randomizations: int = 1000
    ao_max_rounds: int = 20
    ao_rel_tol: float = 1e-5
    # largest lifted dimension N_s + 1 accepted by the phase update
    psd_cap: int = 200
    solver_tol: float = 1e-8

    def __post_init__(self):
        if self.n_randomizations < 1:
            raise ValueError("n_randomizations must be at least 1")
        if self.ao_max_rounds < 1 or not self.ao_rel_tol > 0:
            raise ValueError("ao_max_rounds must be >= 1 and ao_rel_tol > 0")


def rng_for(rng_seed, *stream) -> np.random.Generator:
    seed = [int(s) for s in np.atleast_1d(rng_seed)] + [int(s) for s in stream]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def random_phases(N_s: int, rng: np.random.Generator) -> np.ndarray:
    return np.exp(2j * np.pi * rng.random(N_s))


# -- beamformer update -------------------------------------------------------

def w_update_program(inst: ProblemInstance, phi) -> conic.ConicProgram:
    """Fixed-phase power minimization as an SOCP over ``[Re w; Im w; tau]``.

    Each user's own gain ``g_k w_k`` is rotated to be real, so the SINR
    constraint becomes ``Re{g_k w_k} >= sqrt(Gamma_k) ||[1; g_k w_l (l != k)]||``.
    """
    K, N_t = inst.K, inst.N_t
    KN = K * N_t
    n = 2 * KN + 1
    G = effective_channels(inst, phi)
    bld = ProgramBuilder(n)

    def gain_rows(k, l):
        # real and imaginary parts of g_k w_l as rows over the variables
        re = np.zeros(n)
        im = np.zeros(n)
        cols = slice(l * N_t, (l + 1) * N_t)
        icols = slice(KN + l * N_t, KN + (l + 1) * N_t)
        re[cols], re[icols] = G[k].real, -G[k].imag
        im[cols], im[icols] = G[k].imag, G[k].real
        return re, im

    # objective epigraph: 2 tau (1/2) >= ||w||^2
    F = np.zeros((2 + 2 * KN, n))
    F[0, -1] = 1.0
    F[2:, :2 * KN] = np.eye(2 * KN)
    f0 = np.zeros(2 + 2 * KN)
    f0[1] = 0.5
    bld.add("rsoc", F, f0)
    for k in range(K):
        sg = math.sqrt(inst.gamma[k])
        rows = [gain_rows(k, k)[0], np.zeros(n)]
        f0 = [0.0, sg]
        for l in range(K):
            if l != k:
                re, im = gain_rows(k, l)
                rows += [sg * re, sg * im]
                f0 += [0.0, 0.0]
        bld.add("soc", np.array(rows), np.array(f0))
    c = np.zeros(n)
    c[-1] = 1.0
    return bld.build(c, var_names={"w_re": slice(0, KN), "w_im": slice(KN, 2 * KN), "tau": slice(2 * KN, n)})


def w_update(inst: ProblemInstance, phi, tol_mod: float = TOL_MOD, tol: float = 1e-8) -> np.ndarray:
    """Minimum-power beamformers (K, N_t) meeting every SINR target at fixed ``phi``.

    Raises :class:`InfeasibleError` when the targets are unattainable.
    """
    phi = np.asarray(phi, dtype=complex).ravel()
    if np.max(np.abs(np.abs(phi) - 1.0), initial=0.0) > tol_mod:
        raise ValueError("w_update expects a unit-modulus phase vector")
    prog = w_update_program(inst, phi)
    res = conic.solve(prog, tol=tol)
    if res.status == "primal-infeasible":
        raise InfeasibleError("SINR targets are unattainable for this phase vector")
    if not res.usable:
        raise SolverFailure(f"beamformer SOCP ended with status {res.status}")
    KN = inst.K * inst.N_t
    return (res.x[:KN] + 1j * res.x[KN:2 * KN]).reshape(inst.K, inst.N_t)


def initial_point(inst: ProblemInstance, rng_seed, max_retries: int = 10) -> DesignPoint:
    """Random unit-modulus phases and the matching minimum-power beamformers."""
    rng = rng_for(rng_seed, STREAM_INIT)
    for _ in range(max_retries):
        phi = random_phases(inst.N_s, rng)
        try:
            w = w_update(inst, phi)
        except InfeasibleError:
            continue
        return DesignPoint(w, phi, unit_modulus=True)
    raise InitializationInfeasible(f"no feasible start found in {max_retries} random phase draws")


# -- phase update via semidefinite relaxation --------------------------------

def _lift(inst: ProblemInstance, w: np.ndarray):
    """Coefficients with ``g_k w_l = A[k, l] . phi + B[k, l]``."""
    Hw = inst.H_ts @ w.T  # (N_s, K), column l is H_ts w_l
    A = inst.h_s[:, None, :] * Hw.T[None, :, :]  # (K, K, N_s)
    B = inst.h_t @ w.T
    return A, B


def _quad_form(inst: ProblemInstance, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Hermitian M with ``v^H M v = sum_k |g_k w_k|^2 - Gamma_k sum_{l != k} |g_k w_l|^2``, v = [phi; 1]."""
    K = inst.K
    C = np.concatenate([A, B[:, :, None]], axis=2)  # c_kl = [a_kl; b_kl]
    weight = -np.outer(inst.gamma, np.ones(K))
    np.fill_diagonal(weight, 1.0)
    # |c^T v|^2 = v^H conj(c) c^T v
    return np.einsum("kl,kli,klj->ij", weight, C.conj(), C)


def min_sinr_slack(inst: ProblemInstance, A: np.ndarray, B: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """``min_k |g_k w_k|^2 / Gamma_k - 1 - sum_{l != k} |g_k w_l|^2`` for each column of ``phis``."""
    vals = np.abs(np.einsum("kli,ir->klr", A, phis) + B[:, :, None]) ** 2
    own = np.einsum("kkr->kr", vals)
    slack = own / inst.gamma[:, None] - 1.0 - (vals.sum(axis=1) - own)
    return slack.min(axis=0)


def _embed_svec_index(d: int):
    """Row indices in svec order of the real embedding of a d x d Hermitian matrix."""
    i, j = np.tril_indices(2 * d)
    return i, j


def sdr_program(M: np.ndarray) -> conic.ConicProgram:
    """``min sum(y) s.t. diag(y) - M >= 0`` in the real embedding ``[[Re, -Im], [Im, Re]]``.

    This is the dual of ``max tr(M V) s.t. diag(V) = 1, V >= 0``; the optimal
    ``V`` is read off the returned cone multiplier.
    """
    d = M.shape[0]
    E = np.block([[M.real, -M.imag], [M.imag, M.real]])
    i, j = _embed_svec_index(d)
    size = i.size
    A = np.zeros((size, d))
    # diag(y) enters the embedding at (t, t) and (t + d, t + d)
    diag_rows = np.flatnonzero(i == j)
    A[diag_rows, np.arange(2 * d) % d] = -1.0
    b = -conic.svec(E)
    c = np.ones(d)
    return conic.ConicProgram(c, A, b, [conic.Cone("psd", size)], var_names={"y": slice(0, d)})


def _recover_V(z: np.ndarray, d: int) -> np.ndarray:
    Z = conic.smat(z)
    Z11, Z12, Z21, Z22 = Z[:d, :d], Z[:d, d:], Z[d:, :d], Z[d:, d:]
    V = (Z11 + Z22) + 1j * (Z21 - Z12)
    return 0.5 * (V + V.conj().T)


@dataclass
class PhiUpdateInfo:
    sdp_value: float
    best_candidate_value: float
    incumbent_slack: float
    best_slack: float
    accepted: bool
    V: np.ndarray = field(repr=False)


def phi_update_sdr_detailed(inst: ProblemInstance, w: np.ndarray, phi_incumbent,
                            settings: SdrSettings, rng_seed) -> tuple[np.ndarray, PhiUpdateInfo]:
    """SDR phase update with Gaussian randomization; also returns diagnostics.

    ``sdp_value`` and ``best_candidate_value`` are in units of ``sum_k alpha_k``.
    """
    d = inst.N_s + 1
    if d > settings.psd_cap:
        raise conic.ConeDimensionError(f"lifted dimension {d} exceeds the cap {settings.psd_cap}")
    w = np.asarray(w, dtype=complex).reshape(inst.K, inst.N_t)
    A, B = _lift(inst, w)
    M = _quad_form(inst, A, B)
    res = conic.solve(sdr_program(M), tol=settings.solver_tol, psd_cap=2 * settings.psd_cap)
    if not res.usable:
        raise SolverFailure(f"SDR program ended with status {res.status}")
    V = _recover_V(res.z, d)
    lam, U = np.linalg.eigh(V)
    lam = np.clip(lam, 0.0, None)

    rng = rng_for(rng_seed, STREAM_RANDOMIZATION)
    R = settings.n_randomizations
    r = (rng.standard_normal((d, R)) + 1j * rng.standard_normal((d, R))) / math.sqrt(2.0)
    xi = (U * np.sqrt(lam)) @ r
    # principal eigenvector as one extra candidate; exact when V has rank one
    xi = np.concatenate([U[:, -1:], xi], axis=1)
    cands = np.exp(1j * (np.angle(xi[:-1]) - np.angle(xi[-1])))

    slack = min_sinr_slack(inst, A, B, cands)
    best = int(np.argmax(slack))
    phi_inc = np.asarray(phi_incumbent, dtype=complex).ravel()
    inc_slack = float(min_sinr_slack(inst, A, B, phi_inc[:, None])[0])
    accepted = bool(slack[best] > inc_slack)
    phi = cands[:, best] if accepted else phi_inc.copy()
    v = np.append(cands[:, best], 1.0)
    sum_gamma = float(inst.gamma.sum())
    info = PhiUpdateInfo(sdp_value=res.objective - sum_gamma,
                         best_candidate_value=float(np.real(v.conj() @ M @ v)) - sum_gamma,
                         incumbent_slack=inc_slack, best_slack=float(slack[best]),
                         accepted=accepted, V=V)
    return phi, info


def phi_update_sdr(inst: ProblemInstance, w: np.ndarray, phi_incumbent, settings: SdrSettings,
                   rng_seed) -> np.ndarray:
    """Unit-modulus phases from the relaxation; never worse than ``phi_incumbent``
    in the minimum SINR slack."""
    return phi_update_sdr_detailed(inst, w, phi_incumbent, settings, rng_seed)[0]


def run_ao(inst: ProblemInstance, settings: SdrSettings = SdrSettings(), rng_seed=0,
           start: DesignPoint | None = None) -> tuple[DesignPoint, ScaTrace]:
    """Alternate the phase and beamformer updates from a random start."""
    trace = ScaTrace(algorithm="sdr-ao")
    t0 = time.perf_counter()
    dp = initial_point(inst, rng_seed) if start is None else start.copy()
    elapsed = time.perf_counter() - t0

    def record(i, solve_time):
        rep = check_feasibility(inst, dp)
        p = transmit_power(dp)
        trace.append(iter=i, power=p, penalized=p, min_sinr_margin=float(rep.margin.min()),
                     max_modulus_gap=rep.modulus_violation, solve_time=solve_time,
                     cumulative_time=elapsed)

    record(0, elapsed)
    trace.status = "max-iters"
    for rnd in range(1, settings.ao_max_rounds + 1):
        t1 = time.perf_counter()
        try:
            phi = phi_update_sdr(inst, dp.w, dp.phi, settings, list(np.atleast_1d(rng_seed)) + [rnd])
            w = w_update(inst, phi) if not np.array_equal(phi, dp.phi) else dp.w
        except (SolverFailure, InfeasibleError) as exc:
            trace.status = "solver-failure"
            raise SolverFailure(f"AO round {rnd}: {exc}", trace=trace, design=dp) from exc
        dt = time.perf_counter() - t1
        elapsed += dt
        prev = transmit_power(dp)
        dp = DesignPoint(w, phi, unit_modulus=True)
        record(rnd, dt)
        if abs(prev - transmit_power(dp)) / max(1.0, abs(prev)) < settings.ao_rel_tol:
            trace.status = "converged"
            trace.converged = True
            break
    return dp, trace


def complexity_estimate(method: str, K: int, N_t: int, N_s: int) -> float:
    """Per-iteration flop-order estimate of the SOCP method or the SDR update."""
    if min(K, N_t, N_s) < 1:
        raise ValueError("counts must be at least 1")
    if method == "socp":
        return (2.0 * math.sqrt(4 * K ** 2 + N_s) * (K ** 2 + K * N_t + N_s)
                * (4 * K ** 5 + 16 * K ** 3 * N_t + 8 * K ** 2 * N_s + 20 * K ** 2 * N_t ** 2
                   + 8 * K * N_t * N_s + 4 * N_s ** 2))
    if method == "sdr":
        return float(N_s) ** 7
    raise ValueError(f"unknown method {method!r}; expected 'socp' or 'sdr'")
