import math

import numpy as np
import pytest

from conftest import cn, random_instance, single_user_grid_power
from irsmiso import baselines
from irsmiso.baselines import (SdrSettings, complexity_estimate, initial_point, min_sinr_slack, phi_update_sdr,
                               phi_update_sdr_detailed, random_phases, run_ao, w_update, w_update_program)
from irsmiso.channel import ProblemInstance
from irsmiso.conic import ConeDimensionError, solve, verify_certificate
from irsmiso.errors import InfeasibleError
from irsmiso.sysmodel import DesignPoint, check_feasibility, effective_channels, sinrs, transmit_power

FAST = SdrSettings(n_randomizations=200)


def test_single_user_closed_form(rng):
    for N_t in (1, 3):
        inst = random_instance(rng, 1, N_t, 4, gamma=3.0)
        phi = random_phases(4, rng)
        g = effective_channels(inst, phi)[0]
        w = w_update(inst, phi)[0]
        assert np.sum(np.abs(w) ** 2) == pytest.approx(3.0 / np.sum(np.abs(g) ** 2), rel=1e-6)
        # matched filter: w is parallel to conj(g)
        assert abs(np.vdot(g.conj(), w)) == pytest.approx(np.linalg.norm(w) * np.linalg.norm(g), rel=1e-6)


def test_sinr_constraints_are_active(rng):
    inst = random_instance(rng, 3, 4, 5, gamma=2.5)
    phi = random_phases(5, rng)
    w = w_update(inst, phi)
    np.testing.assert_allclose(sinrs(inst, DesignPoint(w, phi)), inst.gamma, rtol=1e-5)


def test_vanishing_targets_need_vanishing_power(rng):
    inst = random_instance(rng, 2, 3, 4, gamma=1e-8)
    assert np.sum(np.abs(w_update(inst, random_phases(4, rng))) ** 2) < 1e-6


def test_beamformer_program_has_a_valid_certificate(rng):
    inst = random_instance(rng, 3, 3, 4, gamma=2.0)
    prog = w_update_program(inst, random_phases(4, rng))
    res = solve(prog)
    assert res.optimal and verify_certificate(prog, res)


def test_unattainable_targets_are_infeasible(rng):
    H_ts, h_t, h_s = cn(rng, 3, 1), cn(rng, 1, 1), cn(rng, 1, 3)
    inst = ProblemInstance(H_ts, np.vstack([h_t, h_t]), np.vstack([h_s, h_s]), [2.0, 2.0])
    with pytest.raises(InfeasibleError):
        w_update(inst, random_phases(3, rng))


def test_w_update_needs_unit_modulus(rng):
    inst = random_instance(rng, 1, 1, 2)
    with pytest.raises(ValueError):
        w_update(inst, np.full(2, 0.5))


def test_single_element_phase_aligns_the_paths(rng):
    for _ in range(5):
        inst = random_instance(rng, 1, 1, 1)
        w = cn(rng, 1, 1)
        direct = inst.h_t[0] @ w[0]
        reflected = inst.h_s[0, 0] * (inst.H_ts[0] @ w[0])
        best = np.angle(direct) - np.angle(reflected)
        incumbent = np.array([np.exp(1j * (best + np.pi))])
        phi = phi_update_sdr(inst, w, incumbent, SdrSettings(), 0)
        err = np.angle(phi[0] * np.exp(-1j * best))
        assert abs(err) < math.radians(5)


def test_rank_one_relaxation_is_recovered(rng):
    checked = 0
    for _ in range(20):
        inst = random_instance(rng, 1, 2, 2)
        w = cn(rng, 1, 2)
        _, info = phi_update_sdr_detailed(inst, w, random_phases(2, rng), FAST, 0)
        lam = np.linalg.eigvalsh(info.V)
        if lam[-2] <= 1e-6 * lam[-1]:
            checked += 1
            assert info.best_candidate_value == pytest.approx(info.sdp_value, rel=1e-4)
    assert checked >= 10


def test_relaxation_bounds_the_candidates_and_keeps_the_incumbent(rng):
    for _ in range(10):
        inst = random_instance(rng, 3, 2, 6, gamma=1.5)
        w = cn(rng, 3, 2)
        inc = random_phases(6, rng)
        phi, info = phi_update_sdr_detailed(inst, w, inc, FAST, 1)
        assert info.sdp_value >= info.best_candidate_value - 1e-6 * max(1.0, abs(info.sdp_value))
        A, B = baselines._lift(inst, w)
        new = min_sinr_slack(inst, A, B, phi[:, None])[0]
        assert new >= min_sinr_slack(inst, A, B, inc[:, None])[0]
        np.testing.assert_allclose(np.abs(phi), 1.0, atol=1e-12)


def test_phase_update_is_deterministic(rng):
    inst = random_instance(rng, 2, 2, 5)
    w, inc = cn(rng, 2, 2), random_phases(5, rng)
    np.testing.assert_array_equal(phi_update_sdr(inst, w, inc, FAST, 3), phi_update_sdr(inst, w, inc, FAST, 3))


def test_phase_update_dimension_cap(rng):
    inst = random_instance(rng, 1, 1, 4)
    with pytest.raises(ConeDimensionError):
        phi_update_sdr(inst, cn(rng, 1, 1), random_phases(4, rng), SdrSettings(psd_cap=4), 0)


@pytest.mark.parametrize("seed", range(3))
def test_ao_is_monotone_and_feasible(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 3, 3, 8, gamma=2.0)
    dp, tr = run_ao(inst, FAST, seed)
    p = np.array(tr.column("power"))
    assert np.all(np.diff(p) <= 1e-7 * np.maximum(1.0, p[:-1]))
    assert dp.unit_modulus and check_feasibility(inst, dp).feasible
    assert tr.algorithm == "sdr-ao"


def test_ao_single_user_matches_the_grid_oracle(rng):
    for N_t in (1, 2):
        inst = random_instance(rng, 1, N_t, 2, gamma=1.0)
        dp, _ = run_ao(inst, SdrSettings(), 0)
        assert transmit_power(dp) == pytest.approx(single_user_grid_power(inst), rel=1e-2)


def test_initial_point_is_deterministic(rng):
    inst = random_instance(rng, 2, 2, 3)
    a, b = initial_point(inst, (4, 1)), initial_point(inst, (4, 1))
    np.testing.assert_array_equal(a.phi, b.phi)
    np.testing.assert_array_equal(a.w, b.w)


def test_complexity_examples():
    assert complexity_estimate("socp", 1, 1, 1) == pytest.approx(360 * math.sqrt(5), rel=1e-9)
    assert complexity_estimate("sdr", 1, 1, 2) == 128.0
    ratio = complexity_estimate("socp", 4, 4, 2 ** 11) / complexity_estimate("socp", 4, 4, 2 ** 10)
    assert ratio == pytest.approx(2 ** 3.5, rel=0.1)
    with pytest.raises(ValueError):
        complexity_estimate("qp", 1, 1, 1)
    with pytest.raises(ValueError):
        complexity_estimate("socp", 0, 1, 1)


def test_settings_validation():
    with pytest.raises(ValueError):
        SdrSettings(n_randomizations=0)
    with pytest.raises(ValueError):
        SdrSettings(ao_rel_tol=0.0)
