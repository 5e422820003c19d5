"""Monte-Carlo experiments comparing the SCA method with the AO/SDR baseline.

Power units. Channels are divided by the noise standard deviation sigma
(in sqrt(W)) when an instance is generated, while the beamformers are left
untouched. Scaling the received signal by 1/sigma does not change any SINR,
so ``||w||^2`` of a design for the normalized instance is the physical
transmit power in watts, and the report converts it with
``P_dBm = 10 log10(||w||^2) + 30``; :func:`dbm_to_power` inverts this.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import baselines, sca
from ..channel import ProblemInstance, generate_instance
from ..conic import ConicProgram
from ..errors import InitializationInfeasible, PlacementError, SolverFailure
from ..sysmodel import check_feasibility, transmit_power
from .config import ExperimentConfig


def power_to_dbm(p):
    """Normalized transmit power ``||w||^2`` (watts) to dBm."""
    return 10.0 * np.log10(p) + 30.0


def dbm_to_power(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def validate_counts(inst: ProblemInstance, prog: ConicProgram) -> bool:
    """True iff the compiled subproblem has the closed-form variable and cone counts."""
    n_vars, n_cones = sca.expected_counts(inst.K, inst.N_t, inst.N_s)
    return prog.n == n_vars and len(prog.cones) == n_cones


@dataclass
class RunRecord:
    """Outcome of one algorithm on one realization."""

    N_s: int
    gamma_db: float
    realization: int
    algorithm: str
    digest: str
    status: str                     # ok | init-infeasible | placement-failure | solver-failure | infeasible-output
    power: float = float("nan")     # watts
    iterations: int = 0
    solve_time: float = 0.0
    converged: bool = False
    feasible: bool = False
    modulus_gap: float = float("nan")
    trace_power: tuple = ()
    trace_penalized: tuple = ()
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def power_dbm(self) -> float:
        return float(power_to_dbm(self.power)) if self.power > 0 else float("nan")


@dataclass
class SummaryRow:
    N_s: int
    gamma_db: float
    algorithm: str
    mean_power: float
    mean_power_dbm: float
    std_power_dbm: float
    mean_iterations: float
    mean_time: float
    std_time: float
    n_used: int
    failures: int
    excluded: int


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list[RunRecord] = field(default_factory=list)
    wall_time: float = 0.0

    def records_at(self, N_s: int, gamma_db: float) -> list[RunRecord]:
        return [r for r in self.records if r.N_s == N_s and r.gamma_db == gamma_db]

    def kept_realizations(self, N_s: int, gamma_db: float) -> list[int]:
        """Realizations where every algorithm succeeded, so comparisons stay paired."""
        recs = self.records_at(N_s, gamma_db)
        bad = {r.realization for r in recs if not r.ok}
        return sorted({r.realization for r in recs} - bad)

    def paired(self, N_s: int, gamma_db: float, algorithm: str) -> list[RunRecord]:
        keep = set(self.kept_realizations(N_s, gamma_db))
        return sorted((r for r in self.records_at(N_s, gamma_db)
                       if r.algorithm == algorithm and r.realization in keep),
                      key=lambda r: r.realization)

    def summary(self) -> list[SummaryRow]:
        out = []
        for N_s, g in self.config.points():
            recs = self.records_at(N_s, g)
            realizations = {r.realization for r in recs}
            kept = self.kept_realizations(N_s, g)
            for alg in self.config.algorithms:
                mine = self.paired(N_s, g, alg)
                fails = sum(1 for r in recs if r.algorithm == alg and not r.ok)
                if mine:
                    p = np.array([r.power for r in mine])
                    t = np.array([r.solve_time for r in mine])
                    it = np.array([r.iterations for r in mine])
                    row = SummaryRow(N_s, g, alg, float(p.mean()), float(power_to_dbm(p.mean())),
                                     float(np.std(power_to_dbm(p))), float(it.mean()), float(t.mean()),
                                     float(t.std()), len(mine), fails, len(realizations) - len(kept))
                else:
                    nan = float("nan")
                    row = SummaryRow(N_s, g, alg, nan, nan, nan, nan, nan, nan, 0, fails,
                                     len(realizations) - len(kept))
                out.append(row)
        return out

    def mean_power(self, N_s: int, gamma_db: float, algorithm: str) -> float:
        return float(np.mean([r.power for r in self.paired(N_s, gamma_db, algorithm)]))

    def mean_time(self, N_s: int, gamma_db: float, algorithm: str) -> float:
        return float(np.mean([r.solve_time for r in self.paired(N_s, gamma_db, algorithm)]))


def _run_one(inst: ProblemInstance, cfg: ExperimentConfig, alg: str, seed):
    if alg == "sca":
        return sca.run(inst, cfg.sca, seed)
    return baselines.run_ao(inst, cfg.sdr, seed)


def run_realization(cfg: ExperimentConfig, N_s: int, gamma_db: float, r: int) -> list[RunRecord]:
    """Generate realization ``r`` once and run every selected algorithm on it."""
    seed = (cfg.master_seed, r)
    gamma = 10.0 ** (gamma_db / 10.0)
    base = dict(N_s=N_s, gamma_db=gamma_db, realization=r)
    try:
        inst = generate_instance(cfg.geometry, cfg.fading, cfg.K, cfg.N_t, N_s, gamma, seed)
    except PlacementError as exc:
        return [RunRecord(**base, algorithm=a, digest="", status="placement-failure", message=str(exc))
                for a in cfg.algorithms]
    digest = inst.digest()
    out = []
    for alg in cfg.algorithms:
        rec = RunRecord(**base, algorithm=alg, digest=digest, status="ok")
        try:
            dp, tr = _run_one(inst, cfg, alg, seed)
        except InitializationInfeasible as exc:
            rec.status, rec.message = "init-infeasible", str(exc)
        except SolverFailure as exc:
            rec.status, rec.message = "solver-failure", str(exc)
            if exc.trace is not None:
                rec.iterations, rec.solve_time = exc.trace.iterations, exc.trace.total_time
        else:
            rep = check_feasibility(inst, dp, tol_sinr=cfg.tol_sinr, tol_mod=cfg.tol_mod)
            rec.power = transmit_power(dp)
            rec.iterations = tr.iterations
            rec.solve_time = tr.total_time
            rec.converged = tr.converged
            rec.feasible = bool(rep.feasible and dp.unit_modulus)
            rec.modulus_gap = tr.modulus_gap_before_projection if alg == "sca" else rep.modulus_violation
            rec.trace_power = tuple(tr.column("power"))
            rec.trace_penalized = tuple(tr.column("penalized"))
            if not rec.feasible:
                rec.status, rec.message = "infeasible-output", f"final status {tr.status}"
        out.append(rec)
    return out


def _job(args):
    return run_realization(*args)


def run_experiment(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    """Run every (sweep point, realization) job and collect the records.

    Jobs run in a process pool when ``cfg.workers > 1``. Results are gathered
    in job order, so the report does not depend on the worker count.
    ``progress``, if given, is called with each finished job's records.
    """
    jobs = [(cfg, N_s, g, r) for N_s, g in cfg.points() for r in range(cfg.n_realizations)]
    t0 = time.perf_counter()
    report = ExperimentReport(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = pool.map(_job, jobs)
            for recs in results:
                report.records.extend(recs)
                if progress:
                    progress(recs)
    else:
        for job in jobs:
            recs = _job(job)
            report.records.extend(recs)
            if progress:
                progress(recs)
    report.wall_time = time.perf_counter() - t0
    return report


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])
