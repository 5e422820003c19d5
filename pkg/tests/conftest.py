import numpy as np
import pytest

from irsmiso.channel import ProblemInstance
from irsmiso.sysmodel import DesignPoint

# (status, criterion, detail) lines filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def record_acceptance(status, criterion, detail):
    ACCEPTANCE_LINES.append((status, criterion, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for status, criterion, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{status} {criterion}: {detail}")


def cn(rng, *shape):
    """Unit-variance circularly-symmetric complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_instance(rng, K, N_t, N_s, gamma=1.0):
    return ProblemInstance(cn(rng, N_s, N_t), cn(rng, K, N_t), cn(rng, K, N_s), np.full(K, float(gamma)))


def random_design(rng, inst, relaxed=True):
    phi = np.exp(2j * np.pi * rng.random(inst.N_s))
    if relaxed:
        phi = phi * rng.random(inst.N_s)
    return DesignPoint(cn(rng, inst.K, inst.N_t), phi, unit_modulus=not relaxed)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _cone_point(rng, cone):
    """A strictly interior point of one cone block (zero blocks give zeros)."""
    from irsmiso.conic import svec
    if cone.kind == "zero":
        return np.zeros(cone.dim)
    if cone.kind == "nonneg":
        return rng.uniform(0.1, 2.0, cone.dim)
    if cone.kind == "soc":
        v = rng.standard_normal(cone.dim)
        v[0] = np.linalg.norm(v[1:]) + rng.uniform(0.1, 1.0)
        return v
    if cone.kind == "rsoc":
        z = rng.standard_normal(cone.dim - 2)
        a = rng.uniform(0.2, 2.0)
        return np.concatenate([[a, z @ z / (2 * a) + rng.uniform(0.1, 1.0)], z])
    B = rng.standard_normal((cone.order, cone.order))
    return svec(B @ B.T + 0.1 * np.eye(cone.order))


def random_conic_program(rng, psd=False, kinds=None):
    """Feasible program with a known strictly feasible primal and dual pair.

    A random ``x0`` and interior slack ``s0`` give ``b = A x0 + s0``; an
    interior dual ``z0`` gives ``c = -A^T z0``, so both sides are strictly
    feasible and an optimum exists.
    """
    from irsmiso.conic import Cone, ConicProgram
    kinds = kinds or ["nonneg", "soc", "rsoc", "zero"] + (["psd"] if psd else [])
    cones = []
    for _ in range(rng.integers(2, 7)):
        k = str(rng.choice(kinds))
        dim = {"nonneg": rng.integers(1, 4), "soc": rng.integers(2, 6), "rsoc": rng.integers(3, 6),
               "zero": 1, "psd": (3, 6, 10)[rng.integers(0, 3)]}[k]
        cones.append(Cone(k, int(dim)))
    m = sum(c.dim for c in cones)
    nz = sum(c.dim for c in cones if c.kind == "zero")
    n = max(int(rng.integers(1, max(2, m - nz) + 1)), nz, 1)
    A = rng.standard_normal((m, n))
    x0 = rng.standard_normal(n)
    s0 = np.concatenate([_cone_point(rng, c) for c in cones])
    z0 = np.concatenate([rng.standard_normal(c.dim) if c.kind == "zero" else _cone_point(rng, c)
                         for c in cones])
    return ConicProgram(-A.T @ z0, A, A @ x0 + s0, cones)


def single_user_grid_power(inst, n_grid=720):
    """Exhaustive oracle for K = 1, N_s = 2: best phase pair on a grid.

    For fixed phases the minimum power is ``gamma / ||g||^2`` (matched
    filter beamforming), so only the phases need to be searched.
    """
    assert inst.K == 1 and inst.N_s == 2
    th = np.exp(2j * np.pi * np.arange(n_grid) / n_grid)
    rows = inst.h_s[0][:, None] * inst.H_ts            # (2, N_t)
    g = (inst.h_t[0][None, None, :] + th[:, None, None] * rows[0][None, None, :]
         + th[None, :, None] * rows[1][None, None, :])
    gain = np.sum(np.abs(g) ** 2, axis=-1)
    return float(inst.gamma[0] / gain.max())
