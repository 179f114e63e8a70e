import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcnhc.ensemble import sigma_z_matrix
from qcnhc.model import (
    ALL_PAIRS,
    AdiabaticData,
    BathSpec,
    SpinBosonParams,
    SurfacePair,
    adiabatic_eval,
    build_ohmic_bath,
    subsystem_matrix,
)
from qcnhc.rng import TrajectoryStreams
from qcnhc.sampling import (
    draw_initial,
    initial_pair_weights,
    sample_bath_wigner,
    wigner_variances,
)


def single_mode(w=3.0):
    return BathSpec(masses=[1.0], frequencies=[w], couplings=[0.0])


def adata_for(gamma, omega=1 / 3):
    return AdiabaticData(gamma_eff=np.asarray(gamma, dtype=float),
                         gap_g=np.sqrt(omega**2 + np.asarray(gamma, dtype=float) ** 2),
                         omega=omega, couplings=np.zeros(1))


def test_wigner_limits():
    bath = single_mode(2.0)
    _, vp = wigner_variances(bath, beta=200.0)
    assert vp[0] == pytest.approx(1.0, rel=1e-12)  # zero point: hbar w M / 2
    _, vp = wigner_variances(bath, beta=1e-4)
    assert vp[0] == pytest.approx(1e4, rel=1e-6)  # equipartition M / beta


def test_wigner_sample_variances(rng):
    bath = single_mode(3.0)
    R, P = sample_bath_wigner(bath, 0.3, rng, size=1_000_000)
    coth = 1 / np.tanh(0.45)
    assert np.var(P) == pytest.approx(1.5 * coth, rel=0.01)
    assert np.var(R) == pytest.approx(coth / 6, rel=0.01)


def test_wigner_moments_multimode():
    bath = build_ohmic_bath(SpinBosonParams(n_bath=3, kondo=0.1))
    streams = TrajectoryStreams(7, np.arange(1_000_000))
    R, P = sample_bath_wigner(bath, 3.0, streams, size=1_000_000)
    vr, vp = wigner_variances(bath, 3.0)
    np.testing.assert_allclose(R.var(axis=0), vr, rtol=0.01)
    np.testing.assert_allclose(P.var(axis=0), vp, rtol=0.01)
    assert abs(np.corrcoef(R[:, 0], P[:, 0])[0, 1]) < 0.005


def test_wigner_rejects_bad_beta(rng):
    with pytest.raises(ValueError):
        sample_bath_wigner(single_mode(), 0.0, rng)


def weight_matrix(ad):
    w = initial_pair_weights(ad)
    return np.array([[w[SurfacePair(a, b)] for b in (1, 2)] for a in (1, 2)])


def test_weights_symmetric_point():
    w = weight_matrix(adata_for(0.0))
    np.testing.assert_allclose(np.diag(w), [0.5, 0.5])
    np.testing.assert_allclose(np.abs(w[0, 1]), 0.5)
    assert w[0, 1] == w[1, 0]


def test_weights_aligned_limit():
    w = weight_matrix(adata_for(1e8))
    np.testing.assert_allclose(w, [[1, 0], [0, 0]], atol=1e-8)


@given(st.floats(-50, 50, allow_nan=False), st.floats(0.05, 5))
def test_weights_hermitian_rank_one(gamma, omega):
    w = weight_matrix(adata_for(gamma, omega))
    assert np.array_equal(w, w.conj().T)
    assert np.trace(w).real == pytest.approx(1.0, abs=1e-12)
    evals = np.linalg.eigvalsh(w)
    assert evals[0] == pytest.approx(0.0, abs=1e-12)
    assert evals[1] == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-20, 20, allow_nan=False))
def test_weights_match_eigensolver(gamma):
    params = SpinBosonParams(omega=1 / 3)
    ad = adata_for(gamma)
    _, vecs = np.linalg.eigh(subsystem_matrix(gamma, params))
    w = weight_matrix(ad)
    # <alpha'|up><up|alpha> is invariant under the eigenvector sign choice only on the diagonal
    np.testing.assert_allclose(np.diag(w).real, vecs[0] ** 2, atol=1e-12)
    np.testing.assert_allclose(abs(w[0, 1]), abs(vecs[0, 0] * vecs[0, 1]), atol=1e-12)


@given(st.floats(-20, 20, allow_nan=False))
def test_sigma_z_expectation_of_up_state(gamma):
    # Tr(w sigma_z) = <up|sigma_z|up> = 1 for any bath configuration
    ad = adata_for(gamma)
    w = weight_matrix(ad)
    sz = sigma_z_matrix(ad)
    assert np.sum(w.T * sz).real == pytest.approx(1.0, abs=1e-12)


def test_draw_initial_uniform_at_symmetric_point(rng):
    params = SpinBosonParams(kondo=0.0, n_bath=1)
    bath = build_ohmic_bath(params)
    n = 200_000
    s = draw_initial(bath, params, rng, size=n)
    w = initial_pair_weights(adiabatic_eval(np.zeros(1), bath, params))
    for pair in ALL_PAIRS:
        hit = (s.alpha == pair.alpha) & (s.alpha_prime == pair.alpha_prime)
        assert hit.mean() == pytest.approx(0.25, abs=0.005)
        np.testing.assert_allclose(np.abs(s.weight[hit]), 2.0)
        est = np.mean(np.where(hit, s.weight, 0.0))
        assert est == pytest.approx(complex(w[pair]), abs=0.01)
    assert np.all(s.point.eta1 == 0) and np.all(s.point.p_eta2 == 0)


@pytest.mark.parametrize("beta,kondo", [(0.3, 0.007), (3.0, 0.1), (1.0, 1.0)])
def test_initial_sigma_z_is_one(beta, kondo):
    params = SpinBosonParams(beta=beta, kondo=kondo, n_bath=5)
    bath = build_ohmic_bath(params)
    n = 100_000
    s = draw_initial(bath, params, TrajectoryStreams(3, np.arange(n)), size=n)
    sz = sigma_z_matrix(adiabatic_eval(s.point.R, bath, params))
    contrib = (s.weight * sz[np.arange(n), s.alpha - 1, s.alpha_prime - 1]).real
    se = contrib.std(ddof=1) / np.sqrt(n)
    assert abs(contrib.mean() - 1.0) <= 3 * se + 1e-12


def test_populations_only(rng):
    params = SpinBosonParams(kondo=0.1, beta=3.0, n_bath=2)
    s = draw_initial(build_ohmic_bath(params), params, rng, size=10_000, populations_only=True)
    assert np.all(s.alpha == s.alpha_prime)
    np.testing.assert_allclose(s.weight, 1.0)


def test_draw_initial_scalar(rng):
    params = SpinBosonParams(n_bath=3)
    s = draw_initial(build_ohmic_bath(params), params, rng)
    assert s.point.R.shape == (3,)
    assert isinstance(s.pair, SurfacePair) and len(s) == 1


def test_streams_are_batch_independent():
    a = TrajectoryStreams(11, np.arange(10))
    b = TrajectoryStreams(11, [4])
    ua, ub = a.random((10, 3)), b.random((1, 3))
    np.testing.assert_array_equal(ua[4], ub[0])
    np.testing.assert_array_equal(a.standard_normal((10, 2))[4], b.standard_normal((1, 2))[0])
    c = TrajectoryStreams(12, np.arange(10))
    assert not np.any(c.random((10, 3)) == ua)


def test_streams_subset_and_shape():
    a = TrajectoryStreams(1, np.arange(6))
    a.random((6, 2))
    sub = a.subset([1, 3])
    np.testing.assert_array_equal(sub.random((2, 4)), a.random((6, 4))[[1, 3]])
    with pytest.raises(ValueError):
        a.random((5,))


def test_stream_statistics():
    s = TrajectoryStreams(0, np.arange(1000))
    u = s.random((1000, 1000))
    assert 0.0 <= u.min() and u.max() < 1.0
    assert u.mean() == pytest.approx(0.5, abs=0.002)
    z = s.standard_normal((1000, 1000))
    assert z.mean() == pytest.approx(0.0, abs=0.005)
    assert z.var() == pytest.approx(1.0, abs=0.005)
