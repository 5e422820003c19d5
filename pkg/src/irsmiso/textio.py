"""Plain-text files for problem instances and design points.

Complex entries are written as ``re,im`` pairs, matrices row-major with one
row per line. Floats use ``repr`` so files round-trip bit-exactly::

    irs-instance v1
    K 2
    N_t 2
    N_s 4
    gamma 10.0 10.0
    H_ts            # N_s rows of N_t entries
    1.0,0.5 -0.25,0.0
    ...
    h_t             # K rows of N_t entries
    ...
    h_s             # K rows of N_s entries
    ...

Design points use the header ``irs-design v1`` with keys ``K``, ``N_t``,
``N_s``, ``unit_modulus`` (0 or 1), then the blocks ``w`` (K rows of N_t) and
``phi`` (one row of N_s).
"""
from __future__ import annotations

import numpy as np

from .channel import ProblemInstance
from .errors import FormatError
from .sysmodel import DesignPoint

INSTANCE_HEADER = "irs-instance v1"
DESIGN_HEADER = "irs-design v1"


def _row(v) -> str:
    return " ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in np.ravel(v))


def _parse_row(tok_line: str, lineno: int, width: int) -> np.ndarray:
    toks = tok_line.split()
    if len(toks) != width:
        raise FormatError(f"line {lineno}: expected {width} entries, got {len(toks)}")
    out = np.empty(width, complex)
    for i, t in enumerate(toks):
        try:
            re, im = t.split(",")
            out[i] = complex(float(re), float(im))
        except ValueError:
            raise FormatError(f"line {lineno}: bad complex entry {t!r}") from None
    return out


def _lines(text: str):
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s:
            yield i, s


class _Reader:
    def __init__(self, text: str, header: str):
        self.items = list(_lines(text))
        self.pos = 0
        if not self.items or self.items[0][1] != header:
            raise FormatError(f"line 1: expected header {header!r}")
        self.pos = 1

    def next(self):
        if self.pos >= len(self.items):
            raise FormatError("unexpected end of file")
        item = self.items[self.pos]
        self.pos += 1
        return item

    def key(self, name: str) -> str:
        lineno, s = self.next()
        k, _, rest = s.partition(" ")
        if k != name:
            raise FormatError(f"line {lineno}: expected {name!r}, got {k!r}")
        return rest.strip()

    def int_key(self, name: str) -> int:
        lineno = self.items[self.pos][0] if self.pos < len(self.items) else -1
        v = self.key(name)
        try:
            n = int(v)
        except ValueError:
            raise FormatError(f"line {lineno}: {name} must be an integer") from None
        if n < 1:
            raise FormatError(f"line {lineno}: {name} must be positive")
        return n

    def block(self, name: str, rows: int, cols: int) -> np.ndarray:
        self.key(name)
        return np.array([_parse_row(s, ln, cols) for ln, s in (self.next() for _ in range(rows))])


def dumps_instance(inst: ProblemInstance) -> str:
    lines = [INSTANCE_HEADER, f"K {inst.K}", f"N_t {inst.N_t}", f"N_s {inst.N_s}",
             "gamma " + " ".join(repr(float(g)) for g in inst.gamma), "H_ts"]
    lines += [_row(r) for r in inst.H_ts]
    lines.append("h_t")
    lines += [_row(r) for r in inst.h_t]
    lines.append("h_s")
    lines += [_row(r) for r in inst.h_s]
    return "\n".join(lines) + "\n"


def loads_instance(text: str) -> ProblemInstance:
    rd = _Reader(text, INSTANCE_HEADER)
    K, N_t, N_s = rd.int_key("K"), rd.int_key("N_t"), rd.int_key("N_s")
    lineno = rd.items[rd.pos][0] if rd.pos < len(rd.items) else -1
    try:
        gamma = np.array([float(v) for v in rd.key("gamma").split()])
    except ValueError:
        raise FormatError(f"line {lineno}: gamma must be a list of floats") from None
    if gamma.size != K:
        raise FormatError(f"line {lineno}: expected {K} SINR targets, got {gamma.size}")
    H_ts = rd.block("H_ts", N_s, N_t)
    h_t = rd.block("h_t", K, N_t)
    h_s = rd.block("h_s", K, N_s)
    try:
        return ProblemInstance(H_ts, h_t, h_s, gamma)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def dumps_design(dp: DesignPoint) -> str:
    K, N_t = dp.w.shape
    lines = [DESIGN_HEADER, f"K {K}", f"N_t {N_t}", f"N_s {dp.phi.size}",
             f"unit_modulus {int(dp.unit_modulus)}", "w"]
    lines += [_row(r) for r in dp.w]
    lines += ["phi", _row(dp.phi)]
    return "\n".join(lines) + "\n"


def loads_design(text: str) -> DesignPoint:
    rd = _Reader(text, DESIGN_HEADER)
    K, N_t, N_s = rd.int_key("K"), rd.int_key("N_t"), rd.int_key("N_s")
    lineno = rd.items[rd.pos][0] if rd.pos < len(rd.items) else -1
    um = rd.key("unit_modulus")
    if um not in ("0", "1"):
        raise FormatError(f"line {lineno}: unit_modulus must be 0 or 1")
    w = rd.block("w", K, N_t)
    phi = rd.block("phi", 1, N_s)[0]
    return DesignPoint(w, phi, unit_modulus=um == "1")


def save_instance(path, inst: ProblemInstance) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_instance(inst))


def load_instance(path) -> ProblemInstance:
    with open(path) as fh:
        return loads_instance(fh.read())


def save_design(path, dp: DesignPoint) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_design(dp))


def load_design(path) -> DesignPoint:
    with open(path) as fh:
        return loads_design(fh.read())
