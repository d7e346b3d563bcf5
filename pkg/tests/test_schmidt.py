import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import correlated_gaussian, grid, joint, mehler_mu
from colorqubit.errors import ContractError
from colorqubit.schmidt import orthonormality_error, purity, purity_bounds, schmidt_decompose, schmidt_number
from colorqubit.spectra import JointAmplitude


@pytest.fixture(scope="module")
def correlated():
    return joint(correlated_gaussian(0.6), grid(201, 201))


def test_full_rank_reconstruction(correlated):
    d = schmidt_decompose(correlated, threshold=1.0)
    rms = np.sqrt(np.mean(np.abs(d.reconstruct() - correlated.values) ** 2))
    assert rms < 1e-10


def test_modes_orthonormal(correlated):
    d = schmidt_decompose(correlated, threshold=0.999999)
    assert orthonormality_error(d.modes_a, d.step_a) < 1e-8
    assert orthonormality_error(d.modes_b, d.step_b) < 1e-8


def test_coefficients_match_mehler_expansion(correlated):
    mu = mehler_mu(0.6)
    expected = (1 - mu**2) * mu ** (2 * np.arange(5))
    d = schmidt_decompose(correlated, threshold=1.0)
    np.testing.assert_allclose(d.coefficients[:5], expected, atol=1e-4)


def test_separable_input_is_rank_one():
    j = joint(lambda x, y: np.exp(-x * x / 2) * np.exp(-(y - 1) ** 2 / 3 + 0.4j * y), grid(96, 128))
    d = schmidt_decompose(j)
    assert d.rank == 1
    assert purity(d) == pytest.approx(1.0, abs=1e-12)
    assert schmidt_number(d) == pytest.approx(1.0, abs=1e-12)


def test_global_phase_invariance(correlated):
    a = schmidt_decompose(correlated)
    b = schmidt_decompose(JointAmplitude(correlated.grid, correlated.values * np.exp(0.73j)))
    np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-14)
    np.testing.assert_allclose(a.modes_a, b.modes_a, atol=1e-10)


def test_transpose_swaps_modes(correlated):
    g = correlated.grid
    a = schmidt_decompose(correlated)
    b = schmidt_decompose(JointAmplitude(g, correlated.values.T.copy()))
    np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-12)
    for m in range(a.rank):
        overlap = np.vdot(a.modes_b[m], b.modes_a[m]) * g.step_b
        assert abs(overlap) == pytest.approx(1.0, abs=1e-8)


def test_unnormalized_input_rejected():
    g = grid()
    with pytest.raises(ContractError):
        schmidt_decompose(JointAmplitude(g, np.ones((128, 128), complex), normalized=False))


def test_truncation_bookkeeping(correlated):
    d = schmidt_decompose(correlated, threshold=0.99)
    assert d.coefficients.sum() >= 0.99
    assert d.coefficients.sum() + d.residual == pytest.approx(1.0, abs=1e-12)
    lo, hi = purity_bounds(d)
    assert lo <= hi


@settings(max_examples=30, deadline=None)
@given(rho=st.floats(-0.9, 0.9), shift=st.floats(-2.0, 2.0), chirp=st.floats(-1.0, 1.0))
def test_purity_is_inverse_schmidt_number(rho, shift, chirp):
    j = joint(lambda x, y: correlated_gaussian(rho)(x - shift, y) * np.exp(1j * chirp * x * y), grid(96, 96))
    d = schmidt_decompose(j, threshold=1.0)
    assert schmidt_number(d) == pytest.approx(1.0 / purity(d), rel=1e-12)
    assert 0 < purity(d) <= 1 + 1e-12
    assert d.coefficients.sum() + d.residual == pytest.approx(1.0, abs=1e-12)
