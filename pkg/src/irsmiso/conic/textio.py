"""Plain-text interchange format for :class:`ConicProgram`.

Layout (one item per line, ``#`` starts a comment)::

    conic-program v1
    n <n>
    m <m>
    offset <float>
    cones <kind>:<dim> <kind>:<dim> ...
    c <n floats>
    b <m floats>
    A <nnz>
    <row> <col> <value>        # nnz lines, 0-based indices

Floats are written with ``repr`` so a round trip is exact.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .program import Cone, ConicProgram

HEADER = "conic-program v1"


def dumps(prog: ConicProgram) -> str:
    A = sp.coo_matrix(prog.A)
    lines = [HEADER, f"n {prog.n}", f"m {prog.m}", f"offset {prog.offset!r}",
             "cones " + " ".join(f"{cone.kind}:{cone.dim}" for cone in prog.cones),
             "c " + " ".join(repr(float(v)) for v in prog.c),
             "b " + " ".join(repr(float(v)) for v in prog.b),
             f"A {A.nnz}"]
    lines += [f"{i} {j} {float(v)!r}" for i, j, v in zip(A.row, A.col, A.data)]
    return "\n".join(lines) + "\n"


def loads(text: str) -> ConicProgram:
    rows = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    rows = [r for r in rows if r]
    if not rows or rows[0] != HEADER:
        raise ValueError(f"expected header {HEADER!r}")
    fields = {}
    it = iter(rows[1:])
    for line in it:
        key, _, rest = line.partition(" ")
        if key == "A":
            nnz = int(rest)
            trip = [next(it).split() for _ in range(nnz)]
            fields["A"] = trip
            break
        fields[key] = rest
    n, m = int(fields["n"]), int(fields["m"])
    cones = [Cone(kind, int(dim)) for kind, dim in (tok.split(":") for tok in fields["cones"].split())]
    c = np.array([float(v) for v in fields.get("c", "").split()])
    b = np.array([float(v) for v in fields.get("b", "").split()])
    trip = fields.get("A", [])
    if trip:
        i, j, v = zip(*trip)
        A = sp.coo_matrix((np.array(v, float), (np.array(i, int), np.array(j, int))), shape=(m, n)).tocsr()
    else:
        A = sp.csr_matrix((m, n))
    return ConicProgram(c, A, b, cones, offset=float(fields.get("offset", 0.0)))
