"""Standard-form conic programs.

A program is ``minimize c^T x + offset`` subject to ``A x + s = b`` with the
slack ``s`` in a product of cones laid out in ``cones`` order.

Cone conventions
----------------
zero      ``s = 0``
nonneg    ``s >= 0`` elementwise
soc       ``s[0] >= ||s[1:]||``
rsoc      ``2 s[0] s[1] >= ||s[2:]||^2``, ``s[0], s[1] >= 0``
psd       ``s = svec(S)`` with ``S`` real symmetric PSD. ``svec`` stacks the
          lower triangle row by row (``numpy.tril_indices`` order) and scales
          off-diagonal entries by ``sqrt(2)`` so that
          ``svec(X) . svec(Y) == trace(X Y)``. The cone size is ``d(d+1)/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

CONE_TYPES = ("zero", "nonneg", "soc", "rsoc", "psd")


class ConeDimensionError(ValueError):
    pass


def psd_order(size: int) -> int:
    """Matrix order ``d`` of a psd cone with ``size = d(d+1)/2`` entries."""
    d = int(round((math.sqrt(8 * size + 1) - 1) / 2))
    if d < 1 or d * (d + 1) // 2 != size:
        raise ConeDimensionError(f"psd cone size {size} is not a triangle number")
    return d


def svec(X: np.ndarray) -> np.ndarray:
    d = X.shape[0]
    i, j = np.tril_indices(d)
    v = X[i, j].astype(float)
    v[i != j] *= math.sqrt(2.0)
    return v


def smat(v: np.ndarray) -> np.ndarray:
    d = psd_order(len(v))
    i, j = np.tril_indices(d)
    vals = np.asarray(v, dtype=float).copy()
    vals[i != j] /= math.sqrt(2.0)
    X = np.zeros((d, d))
    X[i, j] = vals
    X[j, i] = vals
    return X


@dataclass(frozen=True)
class Cone:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in CONE_TYPES:
            raise ValueError(f"unknown cone type {self.kind!r}")
        lower = {"zero": 1, "nonneg": 1, "soc": 2, "rsoc": 3, "psd": 1}[self.kind]
        if self.dim < lower:
            raise ConeDimensionError(f"{self.kind} cone needs dim >= {lower}, got {self.dim}")
        if self.kind == "psd":
            psd_order(self.dim)

    @property
    def order(self) -> int:
        return psd_order(self.dim) if self.kind == "psd" else self.dim


@dataclass
class ConicProgram:
    c: np.ndarray
    A: np.ndarray | sp.spmatrix
    b: np.ndarray
    cones: list[Cone]
    offset: float = 0.0
    var_names: dict[str, slice] = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.b = np.asarray(self.b, dtype=float).ravel()
        if not sp.issparse(self.A):
            self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        m, n = self.A.shape
        if n != self.c.size or m != self.b.size:
            raise ValueError(f"shape mismatch: A is {m}x{n}, c has {self.c.size}, b has {self.b.size}")
        total = sum(cone.dim for cone in self.cones)
        if total != m:
            raise ConeDimensionError(f"cone dimensions sum to {total}, but A has {m} rows")

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.b.size

    def dense_A(self) -> np.ndarray:
        return self.A.toarray() if sp.issparse(self.A) else self.A

    def cone_slices(self):
        start = 0
        for cone in self.cones:
            yield cone, slice(start, start + cone.dim)
            start += cone.dim

    def count(self, kind: str) -> int:
        return sum(1 for cone in self.cones if cone.kind == kind)


@dataclass
class SolveResult:
    status: str
    x: np.ndarray | None = None
    s: np.ndarray | None = None
    z: np.ndarray | None = None
    objective: float = float("nan")
    dual_objective: float = float("nan")
    primal_residual: float = float("inf")
    dual_residual: float = float("inf")
    gap: float = float("inf")
    iterations: int = 0
    wall_time: float = 0.0
    tol: float = 1e-8
    certificate: dict | None = None
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def usable(self) -> bool:
        """Optimal, or within the looser near-optimal tolerance."""
        return self.status in ("optimal", "near-optimal")
