import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from qcnhc.model import (
    ALL_PAIRS,
    BathSpec,
    ExtendedPhasePoint,
    SpinBoson,
    SpinBosonParams,
    SurfacePair,
    adiabatic_eval,
    bohr_frequency,
    build_ohmic_bath,
    eigenvectors,
    extended_energy,
    subsystem_matrix,
    with_params,
)

finite = st.floats(-5, 5, allow_nan=False)


def small_bath(n=3):
    return BathSpec(masses=np.array([1.0, 2.0, 0.5])[:n], frequencies=np.array([0.5, 1.1, 2.3])[:n],
                    couplings=np.array([0.4, 0.0, 1.3])[:n])


@pytest.mark.parametrize("kw", [dict(omega=0), dict(kondo=-1e-3), dict(beta=0), dict(omega_max=-1),
                                dict(n_bath=0), dict(n_bath=1.5), dict(m_eta1=-1.0),
                                dict(m_eta2=0.0), dict(gamma_s=math.inf)])
def test_params_reject_invalid(kw):
    with pytest.raises(ValueError):
        SpinBosonParams(**kw)


def test_default_thermostat_masses():
    p = SpinBosonParams(beta=0.5, omega_max=2.0, n_bath=4)
    assert p.m_eta1 == pytest.approx(4 * 2.0 * 0.25)
    assert p.m_eta2 == pytest.approx(2.0 * 0.25)
    q = with_params(p, n_bath=2)
    assert q.m_eta1 == pytest.approx(2 * 2.0 * 0.25)


def test_bath_spec_validation():
    with pytest.raises(ValueError):
        BathSpec([1, 1], [2.0, 1.0], [0, 0])
    with pytest.raises(ValueError):
        BathSpec([1], [1.0], [-0.1])
    with pytest.raises(ValueError):
        BathSpec([1], [0.0], [0.1])
    bath = small_bath()
    with pytest.raises(ValueError):
        bath.frequencies[0] = 3.0


def test_ohmic_bath_fig1_size():
    bath = build_ohmic_bath(SpinBosonParams(n_bath=200, kondo=0.007, omega_max=3.0))
    assert len(bath) == 200
    assert np.all(bath.frequencies > 0) and np.all(bath.frequencies <= 3.0 + 1e-12)
    assert bath.frequencies[-1] == pytest.approx(3.0, rel=1e-12)


def test_ohmic_bath_decoupled():
    bath = build_ohmic_bath(SpinBosonParams(n_bath=1, kondo=0.0))
    assert bath.couplings[0] == 0.0


def test_ohmic_bath_single_mode_values():
    bath = build_ohmic_bath(SpinBosonParams(n_bath=1, kondo=0.1, omega_max=3.0))
    w0 = 1.0 - math.exp(-3.0)
    assert bath.frequencies[0] == pytest.approx(3.0, rel=1e-12)
    assert bath.couplings[0] == pytest.approx(3.0 * math.sqrt(0.1 * w0), rel=1e-12)


def continuum_reorganization(kondo, omega_max):
    # (1/pi) int J(w)/w dw with J(w) = (pi/2) xi w exp(-w) up to the cutoff
    value, _ = quad(lambda w: 0.5 * kondo * math.exp(-w), 0.0, omega_max)
    return value


@pytest.mark.parametrize("n", [1, 10, 500, 1000])
def test_reorganization_matches_quadrature(n):
    p = SpinBosonParams(n_bath=n, kondo=0.1, omega_max=3.0)
    assert build_ohmic_bath(p).reorganization_sum() == pytest.approx(
        continuum_reorganization(0.1, 3.0), rel=1e-10)


def test_reorganization_converges():
    s = [build_ohmic_bath(SpinBosonParams(n_bath=n, kondo=0.007)).reorganization_sum()
         for n in (500, 1000)]
    assert abs(s[1] - s[0]) / s[1] < 0.01


def test_ohmic_bath_rejects_degenerate():
    with pytest.raises(ValueError):
        build_ohmic_bath(SpinBosonParams(n_bath=2, omega_max=800.0))


def test_symmetric_point():
    params = SpinBosonParams(omega=1 / 3, kondo=0.1, n_bath=1)
    bath = build_ohmic_bath(params)
    ad = adiabatic_eval(np.zeros(1), bath, params)
    assert ad.e1 == pytest.approx(-1 / 3) and ad.e2 == pytest.approx(1 / 3)
    np.testing.assert_allclose(ad.f1, 0.0)
    np.testing.assert_allclose(ad.f2, 0.0)
    np.testing.assert_allclose(ad.d12, bath.couplings / (2 / 3))


def test_gap_example():
    params = SpinBosonParams(omega=1 / 3, gamma_s=1.0)
    ad = adiabatic_eval(np.zeros(1), build_ohmic_bath(params), params)
    assert ad.gap_g == pytest.approx(math.sqrt(1 / 9 + 1))
    assert round(float(ad.gap_g), 4) == 1.0541


def test_eigen_closed_form_matches_solver(rng):
    params = SpinBosonParams(omega=0.7, gamma_s=0.2)
    bath = small_bath()
    for R in rng.normal(size=(50, 3)):
        ad = adiabatic_eval(R, bath, params)
        h = subsystem_matrix(ad.gamma_eff, params)
        evals, _ = np.linalg.eigh(h)
        np.testing.assert_allclose([ad.e1, ad.e2], evals, atol=1e-12)
        v = eigenvectors(ad)
        np.testing.assert_allclose(h @ v, v @ np.diag(evals), atol=1e-12)


def test_forces_match_finite_differences(rng):
    params = SpinBosonParams(omega=1 / 3, gamma_s=0.1)
    bath = small_bath()
    h = 1e-6
    for R in rng.normal(scale=1.5, size=(100, 3)):
        ad = adiabatic_eval(R, bath, params)
        for force, sign in ((ad.f1, -1), (ad.f2, 1)):
            fd = np.empty(3)
            for j in range(3):
                e = np.zeros(3)
                e[j] = h
                gp = adiabatic_eval(R + e, bath, params).gap_g
                gm = adiabatic_eval(R - e, bath, params).gap_g
                fd[j] = -sign * (gp - gm) / (2 * h)
            scale = max(np.max(np.abs(fd)), 1e-12)
            assert np.max(np.abs(force - fd)) / scale <= 1e-5


def _phase_fixed_eigh(R, bath, params, ref):
    ad = adiabatic_eval(R, bath, params)
    _, vecs = np.linalg.eigh(subsystem_matrix(ad.gamma_eff, params))
    for k in range(2):
        if vecs[:, k] @ ref[:, k] < 0:
            vecs[:, k] = -vecs[:, k]
    return vecs


def test_coupling_vector_matches_numeric_derivative(rng):
    params = SpinBosonParams(omega=1 / 3)
    bath = small_bath()
    h = 1e-5
    for R in rng.normal(size=(100, 3)):
        ad = adiabatic_eval(R, bath, params)
        ref = eigenvectors(ad)
        v0 = _phase_fixed_eigh(R, bath, params, ref)
        fd = np.empty(3)
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            vp = _phase_fixed_eigh(R + e, bath, params, ref)
            vm = _phase_fixed_eigh(R - e, bath, params, ref)
            fd[j] = v0[:, 0] @ (vp[:, 1] - vm[:, 1]) / (2 * h)
        scale = max(np.max(np.abs(fd)), 1e-12)
        assert np.max(np.abs(ad.d12 - fd)) / scale <= 1e-4
        np.testing.assert_array_equal(ad.d21, -ad.d12)


@given(st.lists(finite, min_size=3, max_size=3))
def test_gap_bounded_below(R):
    params = SpinBosonParams(omega=0.4)
    ad = adiabatic_eval(np.array(R), small_bath(), params)
    assert ad.e1 == -ad.e2
    assert 2 * ad.gap_g >= 2 * 0.4


def test_energy_examples():
    params = SpinBosonParams(omega=1 / 3, kondo=0.1)
    bath = build_ohmic_bath(params)
    x = ExtendedPhasePoint.zeros(1)
    assert extended_energy(x, SurfacePair(1, 1), bath, params) == pytest.approx(-1 / 3)
    x = ExtendedPhasePoint(R=[0.0], P=[0.5], eta1=0.2, eta2=-0.1, p_eta1=0.3, p_eta2=0.4)
    expected = (0.125 + 0.09 / (2 * params.m_eta1) + 0.16 / (2 * params.m_eta2)
                + params.kT * 0.2 - params.kT * 0.1)
    assert extended_energy(x, SurfacePair(1, 2), bath, params) == pytest.approx(expected)
    assert extended_energy(x, SurfacePair(1, 2), bath, params, thermostat=False) == \
        pytest.approx(0.125)


@given(st.lists(finite, min_size=3, max_size=3), st.lists(finite, min_size=3, max_size=3),
       st.tuples(finite, finite, finite, finite))
def test_energy_swap_invariant(R, P, nose):
    params = SpinBosonParams(n_bath=3)
    bath = small_bath()
    x = ExtendedPhasePoint(np.array(R), np.array(P), *nose)
    for pair in ALL_PAIRS:
        assert extended_energy(x, pair, bath, params) == extended_energy(
            x, pair.swapped(), bath, params)


def test_bohr_frequency():
    params = SpinBosonParams(omega=1 / 3)
    ad = adiabatic_eval(np.zeros(1), build_ohmic_bath(params), params)
    assert bohr_frequency((1, 1), ad) == 0.0
    assert bohr_frequency((1, 2), ad) == pytest.approx(-2 / 3)
    assert bohr_frequency((2, 1), ad) == -bohr_frequency((1, 2), ad)


def test_mean_force_flat_for_coherence():
    model = SpinBoson.ohmic(SpinBosonParams(kondo=0.1, n_bath=3))
    R = np.array([0.3, -0.2, 0.5])
    force, _ = model.mean_force(R, 1, 2)
    np.testing.assert_allclose(force, -model.bath.frequencies**2 * R)


def test_phase_point_vector_roundtrip():
    x = ExtendedPhasePoint(R=[1.0, 2.0], P=[3.0, 4.0], eta1=5, eta2=6, p_eta1=7, p_eta2=8)
    v = x.as_vector()
    np.testing.assert_array_equal(v, [1, 2, 5, 6, 3, 4, 7, 8])
    y = ExtendedPhasePoint.from_vector(v, 2)
    np.testing.assert_array_equal(y.as_vector(), v)
    assert x.is_finite()
    with pytest.raises(ValueError):
        ExtendedPhasePoint(R=[1.0], P=[1.0, 2.0])
