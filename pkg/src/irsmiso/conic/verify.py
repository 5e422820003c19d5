"""Independent re-check of solver output against the program data."""
from __future__ import annotations

import numpy as np
import scipy.linalg as la

from .program import ConicProgram, SolveResult, smat


def cone_violation(prog: ConicProgram, v: np.ndarray, dual: bool = False) -> float:
    """Largest distance-style violation of ``v`` from the (dual) product cone.

    Zero cones are the only non-self-dual blocks: their dual is free.
    """
    worst = 0.0
    for cone, sl in prog.cone_slices():
        u = v[sl]
        if cone.kind == "zero":
            viol = 0.0 if dual else float(np.max(np.abs(u)))
        elif cone.kind == "nonneg":
            viol = float(max(0.0, -u.min()))
        elif cone.kind == "soc":
            viol = float(max(0.0, np.linalg.norm(u[1:]) - u[0]))
        elif cone.kind == "rsoc":
            # distance to {(a, b, w): 2ab >= |w|^2, a, b >= 0} via the equivalent soc
            a, b = u[0], u[1]
            head = (a + b) / np.sqrt(2.0)
            tail = np.hypot((a - b) / np.sqrt(2.0), np.linalg.norm(u[2:]))
            viol = float(max(0.0, tail - head))
        else:
            viol = float(max(0.0, -la.eigvalsh(smat(u))[0]))
        worst = max(worst, viol)
    return worst


def verify_certificate(prog: ConicProgram, result: SolveResult, tol: float | None = None) -> bool:
    """Recompute residuals, cone membership and the duality gap from scratch.

    For an optimal result, with ``s = b - A x``:

    * cone violation of ``s`` <= tol * max(1, ||b||, ||A x||);
    * dual-cone violation of ``z`` <= tol * max(1, ||z||);
    * ``||A^T z + c||`` <= tol * max(1, ||c||, ||A^T z||);
    * ``|c^T x + b^T z|`` <= tol * max(1, |c^T x|, |b^T z|).
    """
    tol = result.tol if tol is None else tol
    A = prog.dense_A()
    b, c = prog.b, prog.c
    bnorm = max(1.0, np.linalg.norm(b))
    cnorm = max(1.0, np.linalg.norm(c))
    if result.status == "optimal":
        if result.x is None or result.z is None:
            return False
        x, z = result.x, result.z
        Ax = A @ x
        ATz = A.T @ z
        s = b - Ax
        if cone_violation(prog, s) > tol * max(bnorm, np.linalg.norm(Ax)):
            return False
        if cone_violation(prog, z, dual=True) > tol * max(1.0, np.linalg.norm(z)):
            return False
        if np.linalg.norm(ATz + c) > tol * max(cnorm, np.linalg.norm(ATz)):
            return False
        pobj = c @ x
        dobj = -b @ z
        return abs(pobj - dobj) <= tol * max(1.0, abs(pobj), abs(dobj))
    cert = result.certificate or {}
    if result.status == "primal-infeasible" and "z" in cert:
        z = cert["z"]
        bz = b @ z
        if bz >= 0:
            return False
        z = z / -bz
        return (np.linalg.norm(A.T @ z) <= tol * cnorm
                and cone_violation(prog, z, dual=True) <= tol * max(1.0, np.linalg.norm(z)))
    if result.status == "dual-infeasible" and "x" in cert:
        x = cert["x"]
        cx = c @ x
        if cx >= 0:
            return False
        x = x / -cx
        s = -A @ x
        return cone_violation(prog, s) <= tol * bnorm
    return False
