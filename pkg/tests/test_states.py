import numpy as np
import pytest

from symplectomo import states as st
from symplectomo.errors import DimMismatch, InvalidParameter, TruncationTooSmall, UnsupportedVariant


def test_vacuum_density_matrix_is_ground_projector():
    rho = st.density_matrix(st.Vacuum(), 4)
    expected = np.zeros((4, 4))
    expected[0, 0] = 1.0
    assert np.allclose(rho.entries, expected)


def test_thermal_density_matrix_geometric_populations():
    lam = 0.4
    eta = (1 - lam) / (1 + lam)
    rho = st.density_matrix(st.Thermal(lam), 30)
    pops = np.diag(rho.entries).real
    assert np.allclose(pops, (1 - eta) * eta ** np.arange(30), atol=1e-14)
    assert np.allclose(rho.entries, np.diag(pops))


def test_thermal_lambda_one_is_vacuum():
    rho = st.density_matrix(st.Thermal(1.0), 5)
    assert rho.entries[0, 0].real == pytest.approx(1.0)
    assert abs(rho.entries[1:, 1:]).max() == 0.0


@pytest.mark.parametrize("lam", [0.0, -0.3, 1.2])
def test_thermal_parameter_range(lam):
    with pytest.raises(InvalidParameter):
        st.Thermal(lam)


def test_degenerate_cat_is_vacuum_projector():
    rho = st.density_matrix(st.EvenCat(0.0, 0.0), 4)
    assert rho.entries[0, 0].real == pytest.approx(1.0, abs=1e-14)
    assert abs(rho.entries - np.diag([1, 0, 0, 0])).max() < 1e-14


def test_coherent_truncation_guard():
    with pytest.raises(TruncationTooSmall):
        st.density_matrix(st.Coherent(2.0), 4)
    rho = st.density_matrix(st.Coherent(2.0), 40)
    assert rho.trace() == pytest.approx(1.0, abs=1e-6)


def test_cat_coefficients_match_coherent_expansion():
    a, b = 1.0, 0.7
    alpha = a + 1j * b
    v = st.fock_coefficients(st.EvenCat(a, b), 25)
    direct = (st.coherent_amplitudes(alpha, 25) + st.coherent_amplitudes(alpha.conjugate(), 25))
    direct /= np.sqrt(2 * (1 + np.cos(2 * a * b) * np.exp(-2 * b**2)))
    assert np.allclose(v, direct, atol=1e-15)
    assert np.allclose(v.imag, 0.0, atol=1e-15)  # conjugate pair gives real amplitudes


@pytest.mark.parametrize(
    "state",
    [
        st.Vacuum(),
        st.NumberState(3),
        st.Coherent(1.0 + 0.8j),
        st.EvenCat(1.5, 1.0),
        st.EvenCat(0.3, 1.5),
        st.Thermal(0.3),
        st.Thermal(0.9),
    ],
)
def test_density_matrix_trace_and_positivity(state):
    rho = st.density_matrix(state, 40)
    assert abs(rho.trace() - 1.0) < 1e-6
    assert rho.min_eigenvalue() >= -1e-8
    rho.validate()


def test_custom_roundtrip_and_dim_guard():
    base = st.density_matrix(st.Thermal(0.5), 6)
    rho = st.density_matrix(st.Custom(base), 6)
    assert rho is base
    with pytest.raises(DimMismatch):
        st.density_matrix(st.Custom(base), 8)


# ---------------------------------------------------------------------------
# Wigner functions
# ---------------------------------------------------------------------------


def test_thermal_wigner_peak():
    for lam in (0.3, 0.5, 1.0):
        assert st.wigner(st.Thermal(lam), 0.0, 0.0) == pytest.approx(2 * lam)


def test_vacuum_wigner_values():
    assert st.wigner(st.Vacuum(), 0.0, 0.0) == pytest.approx(2.0)
    assert st.wigner(st.Vacuum(), 1.0, 1.0) == pytest.approx(2 * np.exp(-2.0))


@pytest.mark.parametrize(
    "state",
    [
        st.Vacuum(),
        st.Thermal(0.3),
        st.Thermal(0.7),
        st.EvenCat(1.0, 1.0),
        st.EvenCat(1.5, 0.5),
        st.Coherent(0.7 - 0.4j),
        st.NumberState(2),
    ],
)
def test_wigner_normalization_two_pi(state):
    g = np.linspace(-8, 8, 801)
    Q, P = np.meshgrid(g, g, indexing="ij")
    W = st.wigner(state, Q, P)
    total = np.trapezoid(np.trapezoid(W, g, axis=1), g, axis=0)
    assert total == pytest.approx(2 * np.pi, abs=1e-4)


def test_cat_wigner_is_real_valued():
    g = np.linspace(-4, 4, 41)
    Q, P = np.meshgrid(g, g, indexing="ij")
    W = st.wigner(st.EvenCat(1.2, 0.9), Q, P)
    assert np.isrealobj(W)


def test_custom_wigner_unsupported():
    rho = st.density_matrix(st.Vacuum(), 4)
    with pytest.raises(UnsupportedVariant):
        st.wigner(st.Custom(rho), 0.0, 0.0)


def test_characteristic_matches_wigner_transform():
    # direct 2-d Fourier integral of W against the closed forms
    g = np.linspace(-8, 8, 601)
    Q, P = np.meshgrid(g, g, indexing="ij")
    for state in (st.Vacuum(), st.Thermal(0.5), st.Coherent(0.6 + 0.3j), st.EvenCat(1.0, 0.8), st.NumberState(2)):
        W = st.wigner(state, Q, P)
        for wq, wp in ((0.0, 0.0), (0.7, -0.3), (1.5, 1.0)):
            integrand = W * np.exp(1j * (wq * Q + wp * P))
            val = np.trapezoid(np.trapezoid(integrand, g, axis=1), g, axis=0) / (2 * np.pi)
            assert abs(val - st.characteristic_one_mode(state, wq, wp)) < 1e-6


# ---------------------------------------------------------------------------
# two-mode states
# ---------------------------------------------------------------------------


def test_gaussian_two_mode_peak_and_symmetry(rng):
    Q = np.linalg.qr(rng.normal(size=(4, 4)))[0]
    M = Q @ np.diag(rng.uniform(0.4, 1.5, 4)) @ Q.T
    means = rng.normal(size=4) * 0.5
    state = st.GaussianTwoMode(M, means)
    peak = st.wigner_two_mode(state, means[:2], means[2:])
    assert peak == pytest.approx(1 / np.sqrt(np.linalg.det(M)))
    v = rng.normal(size=4)
    w1 = st.wigner_two_mode(state, v[:2], v[2:])
    mirrored = 2 * means - v
    w2 = st.wigner_two_mode(state, mirrored[:2], mirrored[2:])
    assert w1 == pytest.approx(w2, rel=1e-12)


def test_gaussian_identity_over_two_value():
    state = st.GaussianTwoMode(np.eye(4) * 0.5)
    assert st.wigner_two_mode(state, np.zeros(2), np.zeros(2)) == pytest.approx(4.0)


def test_minus_cat_needs_nonzero_amplitude():
    with pytest.raises(InvalidParameter):
        st.TwoModeCat(np.zeros(2), parity="minus")


def test_two_mode_cat_wigner_against_term_sum(rng):
    # independent four-term expansion assembled inline
    A = np.array([0.9 + 0.2j, -0.4 + 0.6j])
    state = st.TwoModeCat(A, parity="plus")

    def dyad(Avec, Bvec, q, p):
        al = (q + 1j * p) / np.sqrt(2)
        s = (
            -2 * (al * al.conj()).sum()
            + 2 * (Avec * al.conj()).sum()
            + 2 * (Bvec.conj() * al).sum()
            - (Avec * Bvec.conj()).sum()
            - (abs(Avec) ** 2).sum() / 2
            - (abs(Bvec) ** 2).sum() / 2
        )
        return 4 * np.exp(s)

    a2 = (abs(A) ** 2).sum()
    n2 = np.exp(a2) / (4 * np.cosh(a2))
    for _ in range(5):
        q = rng.normal(size=2)
        p = rng.normal(size=2)
        expected = n2 * (dyad(A, A, q, p) + dyad(A, -A, q, p) + dyad(-A, A, q, p) + dyad(-A, -A, q, p))
        assert abs(expected.imag) < 1e-12
        assert st.wigner_two_mode(state, q, p) == pytest.approx(expected.real, rel=1e-12)


def test_two_mode_cat_origin_value():
    state = st.TwoModeCat(np.array([1.0, 0.0]), parity="plus")
    assert st.wigner_two_mode(state, np.zeros(2), np.zeros(2)) == pytest.approx(4.0)


def test_product_state_wigner_factorizes():
    state = st.ProductState(st.Thermal(0.5), st.Coherent(0.5j))
    q = np.array([0.3, -0.7])
    p = np.array([1.1, 0.2])
    expected = st.wigner(st.Thermal(0.5), q[0], p[0]) * st.wigner(st.Coherent(0.5j), q[1], p[1])
    assert st.wigner_two_mode(state, q, p) == pytest.approx(expected)


def test_covariance_matrix_validation():
    with pytest.raises(InvalidParameter):
        st.CovarianceMatrix(np.eye(3))
    bad = np.eye(4)
    bad[0, 1] = 0.5  # not symmetric
    with pytest.raises(InvalidParameter):
        st.CovarianceMatrix(bad)
    with pytest.raises(InvalidParameter):
        st.CovarianceMatrix(np.diag([1.0, 1.0, 1.0, -0.1]))


# ---------------------------------------------------------------------------
# container behaviour
# ---------------------------------------------------------------------------


def test_density_matrix_hermitized_on_construction():
    raw = np.array([[1.0, 0.5j], [0.0, 0.0]])
    rho = st.FockDensityMatrix(raw)
    assert np.allclose(rho.entries, rho.entries.conj().T)
    assert rho.entries[1, 0] == pytest.approx(-0.25j)
    with pytest.raises(ValueError):
        rho.entries[0, 0] = 2.0  # read-only storage


def test_coherent_element_matches_direct_sum():
    rho = st.density_matrix(st.Thermal(0.5), 25)
    alpha, beta = 0.4 + 0.2j, -0.6 + 0.1j
    va = st.coherent_amplitudes(alpha, 25)
    vb = st.coherent_amplitudes(beta, 25)
    assert rho.coherent_element(alpha, beta) == pytest.approx(complex(va.conj() @ rho.entries @ vb))


def test_number_state_truncation_guard():
    with pytest.raises(TruncationTooSmall):
        st.density_matrix(st.NumberState(5), 4)
    rho = st.density_matrix(st.NumberState(3), 4)
    assert rho.entries[3, 3].real == pytest.approx(1.0)
