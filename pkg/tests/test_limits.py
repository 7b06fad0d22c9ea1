import numpy as np
import pytest
from scipy import integrate, special

from dropletlab import limits


def test_erf_matches_real_erf():
    x = np.linspace(-4, 4, 17)
    assert np.allclose(np.real(limits.complex_erf(x + 0j)), special.erf(x), atol=1e-15)


def test_profile_at_zero_is_gaussian_mass():
    for s in (2.0, 5.0, 8.0):
        q = integrate.quad(lambda t: np.exp(-t * t / 2) / np.sqrt(2 * np.pi), -s / 2, s / 2)[0]
        assert abs(np.real(limits.profile_phi(s, 0.0)) - q) < 1e-12
    assert abs(np.real(limits.profile_phi(2.0, 0.0)) - 0.682689492) < 1e-8


def test_edge_profile_half_at_boundary():
    assert limits.edge_profile(0.0) == pytest.approx(0.5)
    assert limits.edge_profile(-5.0) == pytest.approx(1.0)


def test_ginibre_limit_kernel_density_one():
    K = limits.ginibre_kernel()
    z = np.array([0.0, 1 + 1j, -2.5j])
    assert np.allclose(K.R(z), 1.0)


def test_ti_kernel_hermitian():
    K = limits.ti_kernel_obj(5.0)
    z, w = 0.3 + 0.7j, -1.1 + 0.2j
    assert np.isclose(K.K(z, w), np.conj(K.K(w, z)))
    assert np.isclose(np.real(K.R(0.4 + 2j)), np.real(K.R(0.4 - 1j)))


def test_hard_edge_cutoff_and_bulk():
    assert abs(np.real(limits.hard_edge_H(8.0, 0.0)) - 1) < 0.01
    x = np.array([-2.5, -2.0, 2.0, 2.5, 1.9, 0.0])
    R = limits.hard_edge_R(2.0, x + 0j)
    assert np.all(R[:4] == 0.0) and np.all(R[4:] > 0)


def test_decay_bound_check_on_exact_gaussian():
    x = np.linspace(0, 6, 601)
    R = 0.5 * np.exp(-2 * (x - 1) ** 2)
    C, k = limits.decay_bound_check(x, R, T=1.0, window=3.0)
    assert C == pytest.approx(0.5) and k > 0
