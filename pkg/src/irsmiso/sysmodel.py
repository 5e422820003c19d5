"""Design points and exact evaluation of SINR, transmit power and feasibility."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ProblemInstance

TOL_SINR = 1e-6
TOL_MOD = 1e-3


@dataclass
class DesignPoint:
    """Beamformers ``w`` with shape (K, N_t), row k being w_k, and IRS vector ``phi``.

    ``unit_modulus`` records whether the point claims |phi_i| = 1 or only the
    relaxed |phi_i| <= 1.
    """

    w: np.ndarray
    phi: np.ndarray
    unit_modulus: bool = True

    def __post_init__(self):
        self.w = np.atleast_2d(np.asarray(self.w, dtype=complex))
        self.phi = np.atleast_1d(np.asarray(self.phi, dtype=complex)).ravel()

    @classmethod
    def from_stacked(cls, w_stacked, K: int, phi, unit_modulus: bool = True) -> "DesignPoint":
        w = np.asarray(w_stacked, dtype=complex).reshape(K, -1)
        return cls(w, phi, unit_modulus)

    @property
    def stacked_w(self) -> np.ndarray:
        """``[w_1; ...; w_K]`` as one vector of length K N_t."""
        return self.w.ravel()

    def copy(self) -> "DesignPoint":
        return DesignPoint(self.w.copy(), self.phi.copy(), self.unit_modulus)

    def validate(self, inst: ProblemInstance | None = None, tol_mod: float = TOL_MOD) -> None:
        if inst is not None:
            _check_dims(inst, self)
        mod = np.abs(self.phi)
        if self.unit_modulus:
            if np.max(np.abs(mod - 1.0), initial=0.0) > tol_mod:
                raise ValueError("design point claims unit modulus but |phi_i| deviates from 1")
        elif np.max(mod, initial=0.0) > 1.0 + tol_mod:
            raise ValueError("relaxed design point has |phi_i| > 1")


@dataclass
class FeasibilityReport:
    sinr: np.ndarray
    margin: np.ndarray
    modulus_violation: float
    feasible: bool
    tol_sinr: float
    tol_mod: float

    def as_dict(self) -> dict:
        return {"feasible": bool(self.feasible), "sinr": self.sinr.tolist(),
                "margin": self.margin.tolist(), "modulus_violation": float(self.modulus_violation),
                "tol_sinr": self.tol_sinr, "tol_mod": self.tol_mod}


def _check_dims(inst: ProblemInstance, dp: DesignPoint) -> None:
    if dp.w.shape != (inst.K, inst.N_t):
        raise ValueError(f"w has shape {dp.w.shape}, expected {(inst.K, inst.N_t)}")
    if dp.phi.shape != (inst.N_s,):
        raise ValueError(f"phi has length {dp.phi.size}, expected {inst.N_s}")


def effective_channels(inst: ProblemInstance, phi) -> np.ndarray:
    """All ``g_k`` stacked as rows, shape (K, N_t)."""
    phi = np.asarray(phi, dtype=complex).ravel()
    if phi.shape != (inst.N_s,):
        raise ValueError(f"phi has length {phi.size}, expected {inst.N_s}")
    return inst.h_t + (inst.h_s * phi) @ inst.H_ts


def effective_channel(inst: ProblemInstance, phi, k: int) -> np.ndarray:
    """``h_t[k] + h_s[k] diag(phi) H_ts`` (k is zero-based)."""
    if not 0 <= k < inst.K:
        raise IndexError(f"user index {k} out of range for K={inst.K}")
    phi = np.asarray(phi, dtype=complex).ravel()
    if phi.shape != (inst.N_s,):
        raise ValueError(f"phi has length {phi.size}, expected {inst.N_s}")
    return inst.h_t[k] + (inst.h_s[k] * phi) @ inst.H_ts


def cross_gains(inst: ProblemInstance, dp: DesignPoint) -> np.ndarray:
    """Matrix with entry (k, l) equal to ``g_k w_l``."""
    _check_dims(inst, dp)
    return effective_channels(inst, dp.phi) @ dp.w.T


def sinrs(inst: ProblemInstance, dp: DesignPoint) -> np.ndarray:
    P = np.abs(cross_gains(inst, dp)) ** 2
    sig = np.diag(P).copy()
    return sig / (1.0 + P.sum(axis=1) - sig)


def sinr(inst: ProblemInstance, dp: DesignPoint, k: int) -> float:
    if not 0 <= k < inst.K:
        raise IndexError(f"user index {k} out of range for K={inst.K}")
    return float(sinrs(inst, dp)[k])


def transmit_power(dp: DesignPoint) -> float:
    return float(np.sum(np.abs(dp.w) ** 2))


def check_feasibility(inst: ProblemInstance, dp: DesignPoint, tol_sinr: float = TOL_SINR,
                      tol_mod: float = TOL_MOD) -> FeasibilityReport:
    """SINR margins ``gamma_k - Gamma_k`` and the largest ``||phi_i| - 1|``.

    ``tol_sinr`` is relative to Gamma_k.
    """
    if tol_sinr < 0 or tol_mod < 0:
        raise ValueError("tolerances must be nonnegative")
    s = sinrs(inst, dp)
    margin = s - inst.gamma
    viol = float(np.max(np.abs(np.abs(dp.phi) - 1.0), initial=0.0))
    ok = bool(np.all(margin >= -tol_sinr * inst.gamma) and viol <= tol_mod)
    return FeasibilityReport(s, margin, viol, ok, tol_sinr, tol_mod)
