"""Experiment configuration and its ``key = value`` file format.

One setting per line, ``#`` starts a comment. Nested settings use a dotted
prefix (``sca.``, ``sdr.``, ``geometry.``, ``fading.``) and take the field
names of the corresponding settings classes. Lists and 3D positions are
whitespace or comma separated::

    # experiment config v1
    name = fig3
    K = 6
    N_t = 6
    gamma_db = 10
    sweep = N_s                 # N_s | gamma_db | none
    values = 16 25 36 49 64
    algorithms = sca sdr-ao
    n_realizations = 25
    master_seed = 2023
    sdr.n_randomizations = 200
    geometry.bs_center = 0 20 10

Every error names the offending line.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from ..baselines import SdrSettings
from ..channel import FadingParams, ScenarioGeometry
from ..errors import ConfigError
from ..sca import ScaSettings
from ..sysmodel import TOL_MOD, TOL_SINR

ALGORITHMS = ("sca", "sdr-ao")
SWEEPS = ("N_s", "gamma_db", "none")

DESK_NS = (16, 25, 36, 49, 64)
DESK_GAMMA_DB = (5.0, 10.0, 15.0, 20.0)
PAPER_NS = (16, 36, 64, 100, 144)
# element count of the convergence study at full scale
PAPER_CONVERGENCE_NS = 100


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    K: int = 4
    N_t: int = 4
    # fixed values, used for whichever axis is not swept
    N_s: int = 16
    gamma_db: float = 10.0
    sweep: str = "N_s"
    values: tuple = DESK_NS
    algorithms: tuple = ALGORITHMS
    n_realizations: int = 25
    master_seed: int = 0
    out_dir: str = "results"
    workers: int = 1
    geometry: ScenarioGeometry = field(default_factory=ScenarioGeometry)
    fading: FadingParams = field(default_factory=FadingParams)
    sca: ScaSettings = field(default_factory=ScaSettings)
    sdr: SdrSettings = field(default_factory=lambda: SdrSettings(n_randomizations=200))
    tol_sinr: float = TOL_SINR
    tol_mod: float = TOL_MOD

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {', '.join(SWEEPS)}")
        values = tuple(self.values) if self.sweep != "none" else ()
        if self.sweep == "N_s":
            values = tuple(int(v) for v in values)
        else:
            values = tuple(float(v) for v in values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.sweep != "none" and not values:
            raise ValueError("a sweep needs at least one value")
        if self.sweep == "N_s" and not all(v > 0 for v in values):
            raise ValueError("sweep values must be positive")
        if not all(math.isfinite(v) for v in values) or not math.isfinite(self.gamma_db):
            raise ValueError("SINR targets in dB must be finite")
        if min(self.K, self.N_t, self.N_s) < 1:
            raise ValueError("K, N_t and N_s must be at least 1")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if not self.algorithms:
            raise ValueError("select at least one algorithm")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}; expected one of {', '.join(ALGORITHMS)}")
        needs_upa = self.fading.rician_factor_bs_irs > 0 or self.fading.rician_factor_irs_user > 0
        if needs_upa:
            for n in self.ns_values:
                if math.isqrt(n) ** 2 != n:
                    raise ValueError(f"N_s={n} is not a perfect square, as the planar array requires")

    @property
    def ns_values(self) -> tuple[int, ...]:
        return self.values if self.sweep == "N_s" else (self.N_s,)

    @property
    def gamma_db_values(self) -> tuple[float, ...]:
        return self.values if self.sweep == "gamma_db" else (self.gamma_db,)

    def points(self) -> list[tuple[int, float]]:
        """Every (N_s, gamma_db) pair of the sweep, in sweep order."""
        if self.sweep == "N_s":
            return [(n, self.gamma_db) for n in self.values]
        if self.sweep == "gamma_db":
            return [(self.N_s, g) for g in self.values]
        return [(self.N_s, self.gamma_db)]

    def paper_scale(self) -> "ExperimentConfig":
        """Same experiment at the original study's size."""
        values, N_s = self.values, self.N_s
        if self.sweep == "N_s":
            values = PAPER_NS
        elif self.sweep == "gamma_db":
            N_s = PAPER_CONVERGENCE_NS
        return dataclasses.replace(self, values=values, N_s=N_s, n_realizations=100,
                                   sdr=dataclasses.replace(self.sdr, n_randomizations=1000))

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, master_seed=int(seed))


# -- parsing -------------------------------------------------------------------

# message fragment of a whole-config check -> key to blame
_BLAME = (("sweep values", "values"), ("perfect square", "values"), ("a sweep needs", "values"),
          ("sweep", "sweep"), ("algorithm", "algorithms"), ("n_realizations", "n_realizations"),
          ("workers", "workers"), ("dB", "gamma_db"), ("N_s", "N_s"), ("K,", "K"), ("N_t", "N_t"))

_SECTIONS = {"geometry": ScenarioGeometry, "fading": FadingParams, "sca": ScaSettings, "sdr": SdrSettings}


def _parse_bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _split(s: str) -> list[str]:
    return s.replace(",", " ").split()


def _convert(type_name: str, raw: str):
    """Convert ``raw`` to the annotated field type (annotations are strings here)."""
    t = type_name.replace(" ", "")
    if t.endswith("|None") and raw.lower() == "none":
        return None
    t = t.removesuffix("|None")
    if t == "bool":
        return _parse_bool(raw)
    if t == "int":
        return int(raw)
    if t == "float":
        return float(raw)
    if t == "str":
        return raw
    if t.startswith("tuple"):
        parts = _split(raw)
        inner = int if "int" in t else float
        if t.count(",") >= 1 and "..." not in t:
            n = t.count(",") + 1
            if len(parts) != n:
                raise ValueError(f"expected {n} numbers, got {len(parts)}")
        return tuple(inner(p) for p in parts)
    raise ValueError(f"unsupported field type {type_name}")


_TOP_TYPES = {"name": "str", "K": "int", "N_t": "int", "N_s": "int", "gamma_db": "float",
              "sweep": "str", "n_realizations": "int", "master_seed": "int", "out_dir": "str",
              "workers": "int", "tol_sinr": "float", "tol_mod": "float"}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse the ``key = value`` format into a validated ExperimentConfig."""
    top: dict = {}
    sections: dict[str, dict] = {name: {} for name in _SECTIONS}
    lines: dict[str, int] = {}
    values_raw = None

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: line {lineno}: expected 'key = value'")
        key, _, val = (part.strip() for part in line.partition("="))
        if not key:
            raise ConfigError(f"{source}: line {lineno}: missing key")
        if not val:
            raise ConfigError(f"{source}: line {lineno}: missing value for {key!r}")
        if key in lines:
            raise ConfigError(f"{source}: line {lineno}: {key!r} already set on line {lines[key]}")
        lines[key] = lineno
        try:
            if "." in key:
                sec, _, fname = key.partition(".")
                if sec not in _SECTIONS:
                    raise ConfigError(f"{source}: line {lineno}: unknown section {sec!r}")
                cls = _SECTIONS[sec]
                ftypes = {f.name: f.type for f in dataclasses.fields(cls)}
                if fname not in ftypes:
                    raise ConfigError(f"{source}: line {lineno}: unknown setting {key!r}")
                sections[sec][fname] = _convert(str(ftypes[fname]), val)
                # defaults are valid, so the first failing key is the culprit
                cls(**sections[sec])
            elif key == "values":
                values_raw = _split(val)
                [float(v) for v in values_raw]
            elif key == "algorithms":
                top["algorithms"] = tuple(_split(val))
            elif key in _TOP_TYPES:
                top[key] = _convert(_TOP_TYPES[key], val)
            else:
                raise ConfigError(f"{source}: line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{source}: line {lineno}: {key}: {exc}") from None

    sweep = top.get("sweep", "N_s")
    if values_raw is not None:
        try:
            top["values"] = tuple(int(v) for v in values_raw) if sweep == "N_s" else \
                tuple(float(v) for v in values_raw)
        except ValueError:
            raise ConfigError(f"{source}: line {lines['values']}: values: N_s values must be integers") \
                from None
    elif sweep == "gamma_db":
        top["values"] = DESK_GAMMA_DB
    for sec, cls in _SECTIONS.items():
        if sections[sec] or sec != "sdr":
            top[sec] = cls(**sections[sec])
        else:
            top[sec] = ExperimentConfig().sdr

    try:
        return ExperimentConfig(**top)
    except ValueError as exc:
        # point at the line most likely responsible
        msg = str(exc)
        key = next((k for needle, k in _BLAME if needle in msg and k in lines), None)
        where = f"line {lines[key]}" if key else "config"
        raise ConfigError(f"{source}: {where}: {msg}") from None


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), source=str(path))


def dumps_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` (every setting written explicitly)."""
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, tuple):
            return " ".join(fmt(x) for x in v)
        if isinstance(v, float):
            return repr(v)
        return str(v)

    out = ["# experiment config v1"]
    for key in ("name", "K", "N_t", "N_s", "gamma_db", "sweep"):
        out.append(f"{key} = {fmt(getattr(cfg, key))}")
    if cfg.sweep != "none":
        out.append(f"values = {fmt(cfg.values)}")
    for key in ("algorithms", "n_realizations", "master_seed", "out_dir", "workers", "tol_sinr", "tol_mod"):
        out.append(f"{key} = {fmt(getattr(cfg, key))}")
    for sec in _SECTIONS:
        obj = getattr(cfg, sec)
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            out.append(f"{sec}.{f.name} = {'none' if v is None else fmt(v)}")
    return "\n".join(out) + "\n"
