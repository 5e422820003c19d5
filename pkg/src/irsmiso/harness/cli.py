"""Command-line entry points: generate | solve | benchmark | verify.

Results go to stdout as JSON. Any failure prints
``{"status": "error", "category": ..., "message": ...}`` to stderr and exits
with a nonzero code.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .. import baselines, sca
from ..channel import generate_instance
from ..errors import FormatError, InfeasibleSolution, IrsError
from ..sysmodel import check_feasibility, transmit_power
from ..textio import load_design, load_instance, save_design, save_instance
from .config import ExperimentConfig, load_config
from .experiment import power_to_dbm, run_experiment
from .figures import emit_figures

EXIT_CODES = {"config-error": 2, "format-error": 2, "io-error": 2, "infeasible": 3,
              "initialization-infeasible": 3, "placement-failure": 3, "infeasible-solution": 4,
              "solver-failure": 5}


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_generate(args) -> int:
    cfg = _config(args)
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    written = []
    for N_s, g in cfg.points():
        for r in range(cfg.n_realizations):
            inst = generate_instance(cfg.geometry, cfg.fading, cfg.K, cfg.N_t, N_s, 10.0 ** (g / 10.0),
                                     (cfg.master_seed, r))
            path = os.path.join(out, f"instance_ns{N_s}_g{g:g}_r{r:03d}.txt")
            save_instance(path, inst)
            written.append({"path": path, "digest": inst.digest()})
    _emit({"status": "ok", "instances": written})
    return 0


def cmd_solve(args) -> int:
    cfg = _config(args)
    inst = load_instance(args.instance)
    seed = cfg.master_seed
    if args.algorithm == "sca":
        dp, tr = sca.run(inst, cfg.sca, seed)
    else:
        dp, tr = baselines.run_ao(inst, cfg.sdr, seed)
    rep = check_feasibility(inst, dp, tol_sinr=cfg.tol_sinr, tol_mod=cfg.tol_mod)
    if args.out:
        save_design(args.out, dp)
    power = transmit_power(dp)
    _emit({"status": "ok" if rep.feasible else "infeasible", "algorithm": args.algorithm,
           "power_w": power, "power_dbm": float(power_to_dbm(power)) if power > 0 else None,
           "iterations": tr.iterations, "run_status": tr.status, "unit_modulus": dp.unit_modulus,
           "report": rep.as_dict()})
    if not (rep.feasible and dp.unit_modulus):
        raise InfeasibleSolution(f"the returned design is not feasible (run status {tr.status})")
    return 0


def cmd_benchmark(args) -> int:
    cfg = _config(args)
    if args.paper_scale:
        cfg = cfg.paper_scale()
    out = args.out or cfg.out_dir

    def progress(recs):
        r = recs[0]
        print(f"N_s={r.N_s} gamma_db={r.gamma_db:g} realization={r.realization}: "
              + ", ".join(f"{x.algorithm} {x.status}" for x in recs), file=sys.stderr)

    report = run_experiment(cfg, progress=progress if args.verbose else None)
    paths = emit_figures(report, out)
    rows = [{k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in vars(s).items()}
            for s in report.summary()]
    _emit({"status": "ok", "files": paths, "summary": rows})
    return 0


def cmd_verify(args) -> int:
    cfg = _config(args)
    inst = load_instance(args.instance)
    try:
        dp = load_design(args.solution)
    except (FormatError, ValueError) as exc:
        raise InfeasibleSolution(f"unreadable solution: {exc}") from None
    if dp.w.shape != (inst.K, inst.N_t) or dp.phi.size != inst.N_s:
        raise InfeasibleSolution("solution dimensions do not match the instance")
    if not (np.all(np.isfinite(dp.w)) and np.all(np.isfinite(dp.phi))):
        raise InfeasibleSolution("solution has non-finite entries")
    rep = check_feasibility(inst, dp, tol_sinr=cfg.tol_sinr, tol_mod=cfg.tol_mod)
    unit = rep.modulus_violation <= cfg.tol_mod
    result = {"status": "ok" if rep.feasible and unit else "infeasible",
              "power_w": transmit_power(dp), "unit_modulus": bool(unit), "report": rep.as_dict()}
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(result, fh, indent=2, sort_keys=True)
    _emit(result)
    if not (rep.feasible and unit):
        worst = int(np.argmin(rep.margin))
        raise InfeasibleSolution(f"user {worst} misses its SINR target by margin {rep.margin[worst]:.3e}"
                                 if not rep.feasible else
                                 f"phase modulus off by {rep.modulus_violation:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="irsmiso", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help="overrides master_seed of the config")
        sp.add_argument("--config", default=None, help="experiment config file")
        sp.add_argument("--out", default=None, help="output file or directory")

    sp = sub.add_parser("generate", help="write channel realizations for a config")
    common(sp)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("solve", help="run one algorithm on one instance")
    common(sp)
    sp.add_argument("instance")
    sp.add_argument("--algorithm", choices=("sca", "sdr-ao"), default="sca")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("benchmark", help="run an experiment and write the figure data")
    common(sp)
    sp.add_argument("--paper-scale", action="store_true",
                    help="100 realizations, 1000 randomizations and the larger N_s sweep")
    sp.add_argument("--verbose", action="store_true", help="report each realization on stderr")
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("verify", help="check a design file against an instance")
    common(sp)
    sp.add_argument("instance")
    sp.add_argument("solution")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IrsError as exc:
        category, msg = exc.category, str(exc)
    except OSError as exc:
        category, msg = "io-error", str(exc)
    json.dump({"status": "error", "category": category, "message": msg}, sys.stderr)
    sys.stderr.write("\n")
    return EXIT_CODES.get(category, 1)
