"""Convex surrogates of the SINR constraint terms around an expansion point.

Five surrogates are built at an expansion point (w^(n), phi^(n)):

* ``f_k``: concave minorant of ``|g_k w_k|^2``;
* ``mu_kl`` / ``mu_hat_kl``: convex majorants of ``+Re{g_k w_l}`` / ``-Re{g_k w_l}``;
* ``nu_kl`` / ``nu_hat_kl``: convex majorants of ``+Im{g_k w_l}`` / ``-Im{g_k w_l}``.

The four majorants share one form. With ``c`` in {1, -1, -j, +j} the target is
``Re{c g_k w_l} = 1/4 (||g_k^H + c w_l||^2 - ||g_k^H - c w_l||^2)`` and the
concave part is linearized around ``y = g_k^(n)H - c w_l^(n)``.

Real variables are stacked as ``x = [Re w; Im w; Re phi; Im phi]`` with
``w = [w_1; ...; w_K]``. Since ``g_k^H`` depends on ``conj(phi)``, its
coefficient on ``Im phi`` carries a minus sign.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ProblemInstance
from .sysmodel import DesignPoint, effective_channel, effective_channels

# rotation c per majorant: the target is Re{c g_k w_l}
MAJORANT_ROTATION = {"mu": 1.0 + 0j, "mu_hat": -1.0 + 0j, "nu": -1j, "nu_hat": 1j}
SURROGATES = ("f",) + tuple(MAJORANT_ROTATION)


def linearize_norm_sq(x, y) -> float:
    """First-order minorant ``2 Re{y^H x} - ||y||^2`` of ``||x||^2``."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    return float(2.0 * np.real(np.vdot(y, x)) - np.vdot(y, y).real)


@dataclass(frozen=True)
class VarLayout:
    """Offsets of the real-stacked variables ``[Re w; Im w; Re phi; Im phi]``."""

    K: int
    N_t: int
    N_s: int

    @property
    def n(self) -> int:
        return 2 * self.K * self.N_t + 2 * self.N_s

    def re_w(self, l: int) -> slice:
        return slice(l * self.N_t, (l + 1) * self.N_t)

    def im_w(self, l: int) -> slice:
        off = self.K * self.N_t
        return slice(off + l * self.N_t, off + (l + 1) * self.N_t)

    @property
    def re_phi(self) -> slice:
        off = 2 * self.K * self.N_t
        return slice(off, off + self.N_s)

    @property
    def im_phi(self) -> slice:
        off = 2 * self.K * self.N_t + self.N_s
        return slice(off, off + self.N_s)

    @property
    def w_part(self) -> slice:
        return slice(0, 2 * self.K * self.N_t)

    def stack(self, dp: DesignPoint) -> np.ndarray:
        w = dp.stacked_w
        return np.concatenate([w.real, w.imag, dp.phi.real, dp.phi.imag])

    def unstack(self, x: np.ndarray, unit_modulus: bool = False) -> DesignPoint:
        KN = self.K * self.N_t
        w = x[:KN] + 1j * x[KN:2 * KN]
        phi = x[self.re_phi] + 1j * x[self.im_phi]
        return DesignPoint.from_stacked(w, self.K, phi, unit_modulus)

    @classmethod
    def of(cls, inst: ProblemInstance) -> "VarLayout":
        return cls(inst.K, inst.N_t, inst.N_s)


@dataclass(frozen=True)
class ComplexAffine:
    """Complex vector ``P x + q`` over the real variable ``x``."""

    P: np.ndarray
    q: np.ndarray

    def __call__(self, x):
        return self.P @ x + self.q

    def __add__(self, other: "ComplexAffine") -> "ComplexAffine":
        return ComplexAffine(self.P + other.P, self.q + other.q)

    def scale(self, c: complex) -> "ComplexAffine":
        return ComplexAffine(c * self.P, c * self.q)

    def real_stack(self) -> tuple[np.ndarray, np.ndarray]:
        """Real map whose output norm equals ``||P x + q||``."""
        return np.vstack([self.P.real, self.P.imag]), np.concatenate([self.q.real, self.q.imag])

    def re_inner(self, y) -> tuple[np.ndarray, float]:
        """Coefficients of the real-affine function ``Re{y^H (P x + q)}``."""
        y = np.asarray(y, dtype=complex)
        return np.real(y.conj() @ self.P), float(np.real(np.vdot(y, self.q)))


def w_affine(lay: VarLayout, l: int) -> ComplexAffine:
    P = np.zeros((lay.N_t, lay.n), complex)
    P[:, lay.re_w(l)] = np.eye(lay.N_t)
    P[:, lay.im_w(l)] = 1j * np.eye(lay.N_t)
    return ComplexAffine(P, np.zeros(lay.N_t, complex))


def g_herm_affine(inst: ProblemInstance, lay: VarLayout, k: int) -> ComplexAffine:
    """``g_k^H = conj(h_t[k]) + conj(D_k) conj(phi)`` with ``D_k = H_ts^T diag(h_s[k])``."""
    Dc = (inst.H_ts.T * inst.h_s[k]).conj()
    P = np.zeros((lay.N_t, lay.n), complex)
    P[:, lay.re_phi] = Dc
    P[:, lay.im_phi] = -1j * Dc
    return ComplexAffine(P, inst.h_t[k].conj().copy())


@dataclass(frozen=True)
class ExpansionPoint:
    """Iterate (w^(n), phi^(n)) with cached ``g_k^(n)``, ``a_k^(n)`` and ``b_k^(n)``."""

    w: np.ndarray
    phi: np.ndarray
    g: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)

    @classmethod
    def at(cls, inst: ProblemInstance, dp: DesignPoint) -> "ExpansionPoint":
        w = dp.w.copy()
        phi = dp.phi.copy()
        if w.shape != (inst.K, inst.N_t) or phi.shape != (inst.N_s,):
            raise ValueError("expansion point dimensions do not match the instance")
        g = effective_channels(inst, phi)
        a = np.einsum("kn,kn->k", g, w)
        b = a[:, None] * g.conj() + w
        for arr in (w, phi, g, a, b):
            arr.setflags(write=False)
        return cls(w, phi, g, a, b)

    def consistent(self, inst: ProblemInstance, tol: float = 1e-12) -> bool:
        ref = ExpansionPoint.at(inst, DesignPoint(self.w, self.phi, False))
        scale = max(1.0, float(np.max(np.abs(ref.b))), float(np.max(np.abs(ref.g))))
        return all(np.max(np.abs(u - v), initial=0.0) <= tol * scale
                   for u, v in ((self.g, ref.g), (self.a, ref.a), (self.b, ref.b)))


@dataclass(frozen=True)
class QuadraticSurrogate:
    """``lin . x + const + sign * 1/2 ||L x + l0||^2`` over the real-stacked variables."""

    lin: np.ndarray
    const: float
    L: np.ndarray
    l0: np.ndarray
    sign: int

    def __call__(self, x) -> float:
        r = self.L @ x + self.l0
        return float(self.lin @ x + self.const + self.sign * 0.5 * (r @ r))


def _check_pair(inst: ProblemInstance, k: int, l: int | None) -> None:
    if not 0 <= k < inst.K:
        raise IndexError(f"user index {k} out of range for K={inst.K}")
    if l is not None:
        if not 0 <= l < inst.K:
            raise IndexError(f"user index {l} out of range for K={inst.K}")
        if k == l:
            raise ValueError("interference surrogates need k != l")


def f_k(inst: ProblemInstance, dp: DesignPoint, ep: ExpansionPoint, k: int) -> float:
    """Concave minorant of ``|g_k w_k|^2``, tight at the expansion point."""
    _check_pair(inst, k, None)
    gH = effective_channel(inst, dp.phi, k).conj()
    a, b = ep.a[k], ep.b[k]
    wk = dp.w[k]
    plus = a * gH + wk
    minus = a * gH - wk
    return float(np.real(np.vdot(b, plus)) - 0.5 * np.vdot(b, b).real
                 - 0.5 * np.vdot(minus, minus).real - abs(a) ** 2)


def _majorant(inst, dp, ep, k, l, c) -> float:
    _check_pair(inst, k, l)
    gH = effective_channel(inst, dp.phi, k).conj()
    y = ep.g[k].conj() - c * ep.w[l]
    plus = gH + c * dp.w[l]
    minus = gH - c * dp.w[l]
    return 0.25 * (np.vdot(plus, plus).real - 2.0 * np.real(np.vdot(y, minus)) + np.vdot(y, y).real)


def mu_kl(inst, dp, ep, k, l) -> float:
    """Convex majorant of ``Re{g_k w_l}``."""
    return _majorant(inst, dp, ep, k, l, MAJORANT_ROTATION["mu"])


def mu_hat_kl(inst, dp, ep, k, l) -> float:
    """Convex majorant of ``-Re{g_k w_l}``."""
    return _majorant(inst, dp, ep, k, l, MAJORANT_ROTATION["mu_hat"])


def nu_kl(inst, dp, ep, k, l) -> float:
    """Convex majorant of ``Im{g_k w_l}``."""
    return _majorant(inst, dp, ep, k, l, MAJORANT_ROTATION["nu"])


def nu_hat_kl(inst, dp, ep, k, l) -> float:
    """Convex majorant of ``-Im{g_k w_l}``."""
    return _majorant(inst, dp, ep, k, l, MAJORANT_ROTATION["nu_hat"])


EVALUATORS = {"mu": mu_kl, "mu_hat": mu_hat_kl, "nu": nu_kl, "nu_hat": nu_hat_kl}


def surrogate_coefficients(inst: ProblemInstance, ep: ExpansionPoint, k: int, l: int | None,
                           which: str, lay: VarLayout | None = None) -> QuadraticSurrogate:
    """Coefficient form of one surrogate over ``[Re w; Im w; Re phi; Im phi]``."""
    lay = VarLayout.of(inst) if lay is None else lay
    if (lay.K, lay.N_t, lay.N_s) != (inst.K, inst.N_t, inst.N_s):
        raise ValueError("layout does not match the instance")
    if ep.w.shape != (inst.K, inst.N_t) or ep.phi.shape != (inst.N_s,):
        raise ValueError("expansion point dimensions do not match the instance")
    gH = g_herm_affine(inst, lay, k)
    if which == "f":
        _check_pair(inst, k, None)
        a, b = ep.a[k], ep.b[k]
        wk = w_affine(lay, k)
        lin, c0 = (gH.scale(a) + wk).re_inner(b)
        L, l0 = (gH.scale(a) + wk.scale(-1.0)).real_stack()
        const = c0 - 0.5 * np.vdot(b, b).real - abs(a) ** 2
        return QuadraticSurrogate(lin, float(const), L, l0, -1)
    if which not in MAJORANT_ROTATION:
        raise ValueError(f"unknown surrogate {which!r}; expected one of {SURROGATES}")
    if l is None:
        raise ValueError(f"surrogate {which!r} needs an interfering user index")
    _check_pair(inst, k, l)
    c = MAJORANT_ROTATION[which]
    wl = w_affine(lay, l)
    y = ep.g[k].conj() - c * ep.w[l]
    lin, c0 = (gH + wl.scale(-c)).re_inner(y)
    L, l0 = (gH + wl.scale(c)).real_stack()
    s = 1.0 / np.sqrt(2.0)
    return QuadraticSurrogate(-0.5 * lin, float(-0.5 * c0 + 0.25 * np.vdot(y, y).real), s * L, s * l0, 1)
