"""Incremental assembly of ``F x + f0 in cone`` blocks into a ConicProgram."""
from __future__ import annotations

import numpy as np

from .program import Cone, ConicProgram


class ProgramBuilder:
    def __init__(self, n: int):
        self.n = n
        self._F: list[np.ndarray] = []
        self._f0: list[np.ndarray] = []
        self.cones: list[Cone] = []

    def add(self, kind: str, F: np.ndarray, f0: np.ndarray) -> None:
        """Require ``F x + f0`` to lie in a cone of the given kind."""
        F = np.atleast_2d(np.asarray(F, dtype=float))
        f0 = np.atleast_1d(np.asarray(f0, dtype=float))
        if F.shape != (f0.size, self.n):
            raise ValueError(f"block has shape {F.shape}, expected ({f0.size}, {self.n})")
        self._F.append(F)
        self._f0.append(f0)
        self.cones.append(Cone(kind, f0.size))

    def build(self, c: np.ndarray, offset: float = 0.0, var_names: dict | None = None) -> ConicProgram:
        F = np.vstack(self._F) if self._F else np.zeros((0, self.n))
        f0 = np.concatenate(self._f0) if self._f0 else np.zeros(0)
        # A x + s = b with s = F x + f0
        return ConicProgram(c, -F, f0, list(self.cones), offset=offset, var_names=dict(var_names or {}))
