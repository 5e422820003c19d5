"""Scenario geometry, large-scale path loss and Rician small-scale fading.

Channels follow the convention ``g_k = h_t[k] + h_s[k] diag(phi) H_ts``.
``H_ts`` and ``h_t`` are divided by the noise standard deviation so that the
noise power is one and ``||w||^2`` comes out directly in watts.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PlacementError

SPEED_OF_LIGHT = 299_792_458.0
# Rician factors above this are rejected: the NLoS weight would underflow
KAPPA_MAX = 1e9

# link ids used to derive independent random streams
LINK_PLACEMENT = 0
LINK_BS_IRS = 1
LINK_IRS_USER = 2
LINK_BS_USER = 3


@dataclass(frozen=True)
class ScenarioGeometry:
    bs_center: tuple[float, float, float] = (0.0, 20.0, 10.0)
    irs_center: tuple[float, float, float] = (30.0, 0.0, 5.0)
    user_disk_center: tuple[float, float, float] = (350.0, 10.0, 2.0)
    user_disk_radius: float = 5.0
    carrier_freq: float = 2e9
    bandwidth: float = 20e6
    # None means half a wavelength (antennas) and two wavelengths (users)
    bs_antenna_spacing: float | None = None
    irs_element_spacing: float | None = None
    min_user_separation: float | None = None

    def __post_init__(self):
        for name in ("bs_center", "irs_center", "user_disk_center"):
            v = tuple(float(c) for c in getattr(self, name))
            if len(v) != 3 or not all(math.isfinite(c) for c in v):
                raise ValueError(f"{name} must be a finite 3D position")
            object.__setattr__(self, name, v)
        if not self.user_disk_radius > 0:
            raise ValueError("user_disk_radius must be positive")
        if not (self.carrier_freq > 0 and self.bandwidth > 0):
            raise ValueError("carrier_freq and bandwidth must be positive")
        lam = self.wavelength
        defaults = {"bs_antenna_spacing": lam / 2, "irs_element_spacing": lam / 2,
                    "min_user_separation": 2 * lam}
        for name, default in defaults.items():
            v = getattr(self, name)
            v = default if v is None else float(v)
            if not v > 0:
                raise ValueError(f"{name} must be positive")
            object.__setattr__(self, name, v)
        if np.allclose(self.bs_center, self.irs_center):
            raise ValueError("BS and IRS must not coincide")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq


@dataclass(frozen=True)
class FadingParams:
    """Large- and small-scale channel parameters. Rician factors are linear."""

    rician_factor_bs_irs: float = 10 ** 0.3
    rician_factor_irs_user: float = 10 ** 0.3
    rician_factor_bs_user: float = 0.0
    pathloss_exp_bs_irs: float = 2.2
    pathloss_exp_irs_user: float = 2.2
    pathloss_exp_bs_user: float = 3.6
    reference_pathloss_db: float = 30.0
    noise_psd_dbm_per_hz: float = -174.0

    def __post_init__(self):
        for name in ("rician_factor_bs_irs", "rician_factor_irs_user", "rician_factor_bs_user"):
            k = float(getattr(self, name))
            if not 0.0 <= k <= KAPPA_MAX:
                raise ValueError(f"{name} must lie in [0, {KAPPA_MAX:g}], got {k}")
        for name in ("pathloss_exp_bs_irs", "pathloss_exp_irs_user", "pathloss_exp_bs_user"):
            if not float(getattr(self, name)) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class ProblemInstance:
    """Noise-normalized channels and SINR targets of one power-minimization problem.

    Shapes: ``H_ts`` (N_s, N_t), ``h_t`` (K, N_t), ``h_s`` (K, N_s), ``gamma`` (K,).
    """

    H_ts: np.ndarray
    h_t: np.ndarray
    h_s: np.ndarray
    gamma: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.H_ts = np.atleast_2d(np.asarray(self.H_ts, dtype=complex))
        self.h_t = np.atleast_2d(np.asarray(self.h_t, dtype=complex))
        self.h_s = np.atleast_2d(np.asarray(self.h_s, dtype=complex))
        self.gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        K, N_t = self.h_t.shape
        if self.H_ts.shape[1] != N_t:
            raise ValueError(f"H_ts has {self.H_ts.shape[1]} columns, expected N_t={N_t}")
        if self.h_s.shape != (K, self.H_ts.shape[0]):
            raise ValueError(f"h_s has shape {self.h_s.shape}, expected {(K, self.H_ts.shape[0])}")
        if self.gamma.shape != (K,):
            raise ValueError(f"gamma has shape {self.gamma.shape}, expected ({K},)")
        if not np.all(self.gamma > 0):
            raise ValueError("SINR targets must be positive")
        for name in ("H_ts", "h_t", "h_s", "gamma"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} has non-finite entries")

    @property
    def K(self) -> int:
        return self.h_t.shape[0]

    @property
    def N_t(self) -> int:
        return self.h_t.shape[1]

    @property
    def N_s(self) -> int:
        return self.H_ts.shape[0]

    def digest(self) -> str:
        """SHA-256 of the exact array contents, used to check pairing."""
        h = hashlib.sha256()
        for a in (self.H_ts, self.h_t, self.h_s, self.gamma):
            h.update(np.ascontiguousarray(a).tobytes())
            h.update(str(a.shape).encode())
        return h.hexdigest()


def _stream(rng_seed, link: int) -> np.random.Generator:
    seed = [int(s) for s in np.atleast_1d(rng_seed)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed + [link])))


def place_users(geom: ScenarioGeometry, K: int, rng_seed, max_tries: int = 20000) -> np.ndarray:
    """Uniform positions in the user disk with pairwise distance >= min separation.

    Returns a (K, 3) array. Rejection sampling, one candidate at a time.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    rng = _stream(rng_seed, LINK_PLACEMENT)
    center = np.asarray(geom.user_disk_center)
    pts: list[np.ndarray] = []
    for _ in range(max_tries):
        r = geom.user_disk_radius * math.sqrt(rng.random())
        theta = 2 * math.pi * rng.random()
        p = center + np.array([r * math.cos(theta), r * math.sin(theta), 0.0])
        if all(np.linalg.norm(p - q) >= geom.min_user_separation for q in pts):
            pts.append(p)
            if len(pts) == K:
                return np.array(pts)
    raise PlacementError(
        f"could not place {K} users with separation {geom.min_user_separation:.4g} m "
        f"in a disk of radius {geom.user_disk_radius:.4g} m after {max_tries} draws")


def pathloss_db(d: float, exponent: float, ref_db: float = 30.0) -> float:
    """Log-distance path loss ``ref_db + 10 exponent log10(d)`` with d in meters."""
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    return ref_db + 10.0 * exponent * math.log10(d)


def noise_power_dbm(psd_dbm_per_hz: float, bandwidth_hz: float) -> float:
    if not bandwidth_hz > 0:
        raise ValueError("bandwidth must be positive")
    return psd_dbm_per_hz + 10.0 * math.log10(bandwidth_hz)


def dbm_to_watts(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(p_w):
    return 10.0 * np.log10(np.asarray(p_w, dtype=float)) + 30.0


def ula_positions(center, n: int, spacing: float) -> np.ndarray:
    """Uniform linear array along the x axis."""
    offs = (np.arange(n) - (n - 1) / 2) * spacing
    return np.asarray(center) + np.outer(offs, [1.0, 0.0, 0.0])


def upa_positions(center, n: int, spacing: float) -> np.ndarray:
    """Square planar array in the x-z plane; n must be a perfect square."""
    side = math.isqrt(n)
    if side * side != n:
        raise ValueError(f"a square planar array needs a perfect-square element count, got {n}")
    offs = (np.arange(side) - (side - 1) / 2) * spacing
    ix, iz = np.meshgrid(offs, offs, indexing="ij")
    return np.asarray(center) + np.stack([ix.ravel(), np.zeros(n), iz.ravel()], axis=1)


def steering(positions: np.ndarray, center, direction: np.ndarray, wavelength: float) -> np.ndarray:
    """Far-field response ``exp(j 2 pi / lambda * (p - center) . u)`` for unit vector u."""
    u = direction / np.linalg.norm(direction)
    return np.exp(2j * math.pi / wavelength * ((positions - np.asarray(center)) @ u))


def _rician(rng, los: np.ndarray, kappa: float) -> np.ndarray:
    nlos = (rng.standard_normal(los.shape) + 1j * rng.standard_normal(los.shape)) / math.sqrt(2.0)
    return math.sqrt(kappa / (1 + kappa)) * los + math.sqrt(1 / (1 + kappa)) * nlos


def generate_instance(geom: ScenarioGeometry, fading: FadingParams, K: int, N_t: int, N_s: int,
                      gamma, rng_seed) -> ProblemInstance:
    """Draw one channel realization.

    ``rng_seed`` is an int or a sequence of ints such as (master seed, realization);
    each link gets its own stream derived from it.
    """
    if min(K, N_t, N_s) < 1:
        raise ValueError("K, N_t and N_s must be at least 1")
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (K,)).copy()
    users = place_users(geom, K, rng_seed)
    lam = geom.wavelength
    bs = ula_positions(geom.bs_center, N_t, geom.bs_antenna_spacing)
    need_upa = fading.rician_factor_bs_irs > 0 or fading.rician_factor_irs_user > 0
    irs = upa_positions(geom.irs_center, N_s, geom.irs_element_spacing) if need_upa else None

    sigma = math.sqrt(dbm_to_watts(noise_power_dbm(fading.noise_psd_dbm_per_hz, geom.bandwidth)))
    ref = fading.reference_pathloss_db

    def amp(a, b, exponent):
        return 10.0 ** (-pathloss_db(float(np.linalg.norm(np.subtract(b, a))), exponent, ref) / 20.0)

    # BS -> IRS
    if irs is not None:
        d = np.subtract(geom.irs_center, geom.bs_center)
        los = np.outer(steering(irs, geom.irs_center, -d, lam), steering(bs, geom.bs_center, d, lam).conj())
    else:
        los = np.zeros((N_s, N_t), complex)
    H_ts = amp(geom.bs_center, geom.irs_center, fading.pathloss_exp_bs_irs) \
        * _rician(_stream(rng_seed, LINK_BS_IRS), los, fading.rician_factor_bs_irs)

    # IRS -> users
    rng = _stream(rng_seed, LINK_IRS_USER)
    h_s = np.empty((K, N_s), complex)
    for k, u in enumerate(users):
        los = steering(irs, geom.irs_center, u - np.asarray(geom.irs_center), lam).conj() \
            if irs is not None else np.zeros(N_s, complex)
        h_s[k] = amp(geom.irs_center, u, fading.pathloss_exp_irs_user) \
            * _rician(rng, los, fading.rician_factor_irs_user)

    # BS -> users
    rng = _stream(rng_seed, LINK_BS_USER)
    h_t = np.empty((K, N_t), complex)
    for k, u in enumerate(users):
        los = steering(bs, geom.bs_center, u - np.asarray(geom.bs_center), lam).conj()
        h_t[k] = amp(geom.bs_center, u, fading.pathloss_exp_bs_user) \
            * _rician(rng, los, fading.rician_factor_bs_user)

    meta = {"seed": [int(s) for s in np.atleast_1d(rng_seed)], "noise_std": sigma,
            "users": users.tolist()}
    return ProblemInstance(H_ts / sigma, h_t / sigma, h_s, gamma, meta=meta)
