import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cn, random_design, random_instance
from irsmiso.bounds import (EVALUATORS, SURROGATES, ExpansionPoint, VarLayout, f_k, linearize_norm_sq,
                            mu_hat_kl, mu_kl, nu_hat_kl, nu_kl, surrogate_coefficients)
from irsmiso.channel import ProblemInstance
from irsmiso.sysmodel import DesignPoint, effective_channel

TARGETS = {"mu": lambda z: z.real, "mu_hat": lambda z: -z.real, "nu": lambda z: z.imag,
           "nu_hat": lambda z: -z.imag}


def gain(inst, dp, k, l):
    return np.sum(effective_channel(inst, dp.phi, k) * dp.w[l])


def test_linearization_examples(rng):
    x = cn(rng, 5)
    assert linearize_norm_sq(x, x) == pytest.approx(np.vdot(x, x).real, rel=1e-14)
    assert linearize_norm_sq(x, np.zeros(5)) == 0.0
    assert linearize_norm_sq([1.0], [2.0]) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        linearize_norm_sq(np.ones(2), np.ones(3))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
def test_linearization_never_exceeds_the_norm(seed, n):
    rng = np.random.default_rng(seed)
    x, y = cn(rng, n) * rng.exponential(), cn(rng, n) * rng.exponential()
    assert linearize_norm_sq(x, y) <= np.vdot(x, x).real + 1e-12


def test_polarization_identities(rng):
    for _ in range(50):
        x, y = cn(rng, 7), cn(rng, 7)
        n2 = lambda v: np.vdot(v, v).real
        assert np.vdot(x, y).real == pytest.approx(0.25 * (n2(x + y) - n2(x - y)), abs=1e-12)
        assert np.vdot(x, y).imag == pytest.approx(0.25 * (n2(x - 1j * y) - n2(x + 1j * y)), abs=1e-12)


def test_expansion_point_caches(rng):
    inst = random_instance(rng, 3, 2, 4)
    dp = random_design(rng, inst)
    ep = ExpansionPoint.at(inst, dp)
    assert ep.consistent(inst)
    for k in range(3):
        g = effective_channel(inst, dp.phi, k)
        assert ep.a[k] == pytest.approx(np.sum(g * dp.w[k]), abs=1e-12)
        np.testing.assert_allclose(ep.b[k], ep.a[k] * g.conj() + dp.w[k], atol=1e-12)
    with pytest.raises(ValueError):
        ep.a[0] = 0.0


def _triples(rng, n, dims=((1, 1, 1), (2, 2, 4), (3, 2, 5), (4, 4, 16))):
    for i in range(n):
        K, N_t, N_s = dims[i % len(dims)]
        inst = random_instance(rng, K, N_t, N_s)
        dp = random_design(rng, inst)
        ep = ExpansionPoint.at(inst, random_design(rng, inst, relaxed=rng.random() < 0.5))
        yield inst, dp, ep


def test_minorant_and_majorants_are_global_bounds(rng):
    for inst, dp, ep in _triples(rng, 400):
        for k in range(inst.K):
            assert f_k(inst, dp, ep, k) <= abs(gain(inst, dp, k, k)) ** 2 + 1e-10
            for l in range(inst.K):
                if l != k:
                    z = gain(inst, dp, k, l)
                    for name, fn in EVALUATORS.items():
                        assert fn(inst, dp, ep, k, l) >= TARGETS[name](z) - 1e-10


def test_surrogates_are_tight_at_the_expansion_point(rng):
    for inst, _, ep in _triples(rng, 100):
        dp = DesignPoint(ep.w, ep.phi, unit_modulus=False)
        for k in range(inst.K):
            assert f_k(inst, dp, ep, k) == pytest.approx(abs(ep.a[k]) ** 2, abs=1e-10)
            for l in range(inst.K):
                if l != k:
                    z = gain(inst, dp, k, l)
                    for name, fn in EVALUATORS.items():
                        assert fn(inst, dp, ep, k, l) == pytest.approx(TARGETS[name](z), abs=1e-10)


def test_zero_beamformer_expansion_point(rng):
    inst = random_instance(rng, 2, 3, 4)
    ep = ExpansionPoint.at(inst, DesignPoint(np.zeros((2, 3)), np.ones(4)))
    np.testing.assert_array_equal(ep.a, 0.0)
    np.testing.assert_array_equal(ep.b, 0.0)
    dp = random_design(rng, inst)
    for k in range(2):
        assert f_k(inst, dp, ep, k) == pytest.approx(-0.5 * np.vdot(dp.w[k], dp.w[k]).real, abs=1e-12)
        sur = surrogate_coefficients(inst, ep, k, None, "f")
        np.testing.assert_array_equal(sur.lin, 0.0)
        assert sur.const == 0.0


def _segment_points(rng, inst):
    a, b = random_design(rng, inst), random_design(rng, inst)
    mid = DesignPoint((a.w + b.w) / 2, (a.phi + b.phi) / 2, unit_modulus=False)
    return a, b, mid


def test_curvature(rng):
    inst = random_instance(rng, 3, 2, 4)
    ep = ExpansionPoint.at(inst, random_design(rng, inst))
    for _ in range(100):
        a, b, mid = _segment_points(rng, inst)
        for k in range(3):
            assert f_k(inst, mid, ep, k) >= 0.5 * (f_k(inst, a, ep, k) + f_k(inst, b, ep, k)) - 1e-12
            l = (k + 1) % 3
            for fn in (mu_kl, mu_hat_kl, nu_kl, nu_hat_kl):
                assert fn(inst, mid, ep, k, l) <= 0.5 * (fn(inst, a, ep, k, l) + fn(inst, b, ep, k, l)) + 1e-12


def test_coefficient_form_matches_direct_evaluation(rng):
    for K, N_t, N_s in ((1, 1, 1), (2, 3, 4), (3, 2, 6)):
        inst = random_instance(rng, K, N_t, N_s)
        lay = VarLayout.of(inst)
        ep = ExpansionPoint.at(inst, random_design(rng, inst))
        for _ in range(100):
            dp = random_design(rng, inst)
            x = lay.stack(dp)
            for k in range(K):
                sur = surrogate_coefficients(inst, ep, k, None, "f", lay)
                assert sur(x) == pytest.approx(f_k(inst, dp, ep, k), abs=1e-10)
                for l in range(K):
                    if l != k:
                        for name, fn in EVALUATORS.items():
                            sur = surrogate_coefficients(inst, ep, k, l, name, lay)
                            assert sur(x) == pytest.approx(fn(inst, dp, ep, k, l), abs=1e-10)


def test_f_coefficients_are_tight(rng):
    inst = random_instance(rng, 2, 2, 3)
    dp = random_design(rng, inst)
    ep = ExpansionPoint.at(inst, dp)
    x = VarLayout.of(inst).stack(dp)
    for k in range(2):
        assert surrogate_coefficients(inst, ep, k, None, "f")(x) == pytest.approx(abs(ep.a[k]) ** 2, abs=1e-10)


def test_layout_round_trip(rng):
    inst = random_instance(rng, 3, 2, 4)
    lay = VarLayout.of(inst)
    dp = random_design(rng, inst)
    x = lay.stack(dp)
    assert x.size == lay.n == 2 * (3 * 2 + 4)
    back = lay.unstack(x)
    np.testing.assert_array_equal(back.w, dp.w)
    np.testing.assert_array_equal(back.phi, dp.phi)


def test_same_user_interference_is_rejected(rng):
    inst = random_instance(rng, 2, 2, 2)
    dp = random_design(rng, inst)
    ep = ExpansionPoint.at(inst, dp)
    for fn in EVALUATORS.values():
        with pytest.raises(ValueError):
            fn(inst, dp, ep, 1, 1)
    with pytest.raises(ValueError):
        surrogate_coefficients(inst, ep, 0, 0, "mu")
    with pytest.raises(ValueError):
        surrogate_coefficients(inst, ep, 0, 1, "rho")
    with pytest.raises(ValueError):
        surrogate_coefficients(inst, ep, 0, None, "nu")
    assert set(SURROGATES) == {"f", "mu", "mu_hat", "nu", "nu_hat"}


def test_dimension_mismatch_is_rejected(rng):
    inst = random_instance(rng, 2, 2, 3)
    with pytest.raises(ValueError):
        ExpansionPoint.at(inst, DesignPoint(np.ones((2, 2)), np.ones(4)))


def test_real_valued_instance_gives_nonnegative_nu(rng):
    K, N_t, N_s = 2, 2, 3
    inst = ProblemInstance(rng.standard_normal((N_s, N_t)), rng.standard_normal((K, N_t)),
                           rng.standard_normal((K, N_s)), np.ones(K))
    for _ in range(50):
        dp = DesignPoint(rng.standard_normal((K, N_t)), rng.uniform(-1, 1, N_s), unit_modulus=False)
        ep = ExpansionPoint.at(inst, DesignPoint(rng.standard_normal((K, N_t)), rng.uniform(-1, 1, N_s),
                                                 unit_modulus=False))
        assert gain(inst, dp, 0, 1).imag == 0.0
        assert nu_kl(inst, dp, ep, 0, 1) >= -1e-12
        assert nu_hat_kl(inst, dp, ep, 0, 1) >= -1e-12
        assert nu_kl(inst, dp, ExpansionPoint.at(inst, dp), 0, 1) == pytest.approx(0.0, abs=1e-12)
