"""Per-iteration records shared by the SCA method and the AO baseline."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

TRACE_COLUMNS = ("iter", "power", "penalized", "min_sinr_margin", "max_modulus_gap",
                 "solve_time", "cumulative_time")
TRACE_HEADER = "# trace v1"


@dataclass
class TraceRow:
    iter: int
    power: float
    penalized: float
    min_sinr_margin: float
    max_modulus_gap: float
    solve_time: float
    cumulative_time: float


@dataclass
class ScaTrace:
    """Iteration history plus how the run ended.

    ``status`` is one of ``converged``, ``max-iters``, ``projected`` (phases
    were rescaled to unit modulus and the beamformers re-solved) or
    ``relaxed-fallback`` (that re-solve was infeasible, so the relaxed point
    was returned).
    """

    algorithm: str = "sca"
    rows: list[TraceRow] = field(default_factory=list)
    status: str = ""
    converged: bool = False
    modulus_gap_before_projection: float = float("nan")
    # time spent after the last iteration (projection and beamformer re-solve)
    post_time: float = 0.0

    def append(self, **kw) -> None:
        self.rows.append(TraceRow(**kw))

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    @property
    def iterations(self) -> int:
        """Number of iterations (row 0 is the starting point)."""
        return max(0, len(self.rows) - 1)

    @property
    def total_time(self) -> float:
        return (self.rows[-1].cumulative_time if self.rows else 0.0) + self.post_time

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(TRACE_HEADER + f" algorithm={self.algorithm} status={self.status}\n")
        wr = csv.DictWriter(buf, fieldnames=TRACE_COLUMNS, lineterminator="\n")
        wr.writeheader()
        for r in self.rows:
            wr.writerow({k: repr(v) if isinstance(v, float) else v for k, v in asdict(r).items()})
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())
