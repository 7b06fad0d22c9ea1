import numpy as np
import pytest

from dropletlab import finite, limits, model
from dropletlab.errors import IllConditioned


@pytest.fixture(scope="module")
def k16():
    return finite.FiniteKernel(finite.build_basis(model.ginibre(), 16))


def test_basis_matches_closed_form(k16):
    rng = np.random.default_rng(0)
    z = 1.5 * np.sqrt(rng.random(100)) * np.exp(2j * np.pi * rng.random(100))
    w = 1.5 * np.sqrt(rng.random(100)) * np.exp(2j * np.pi * rng.random(100))
    ex = finite.ginibre_kernel_oracle(16, z, w)
    assert np.max(np.abs(k16.K(z, w) - ex) / np.abs(ex)) <= 1e-8
    assert k16.trace() == pytest.approx(16, rel=1e-6)


def test_kernel_positive_semidefinite(k16):
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(20, 3)) * 0.6 + 1j * rng.normal(size=(20, 3)) * 0.6
    assert finite.min_det3(k16, pts) >= -1e-12


def test_edge_profile_convergence():
    x = np.linspace(-3, 3, 121)
    err = []
    for n in (16, 32):
        _, R = finite.profile(finite.fixed_frame(finite.GinibreKernel(n), 1.0, 0.0), x)
        err.append(np.max(np.abs(R - limits.edge_profile(x))))
    assert err[1] < err[0] < 0.05


def test_gauge_makes_reference_value_positive(k16):
    rk = finite.fixed_frame(k16, 0.5, 0.3)
    v = rk.K(np.array([1.0 + 0j]), np.array([0j]))
    assert abs(v.imag[0]) < 1e-12 and v.real[0] > 0


def test_ill_conditioned_quadrature_detected():
    q = finite.Quadrature(1.2, 12, 24)
    with pytest.raises(IllConditioned):
        finite.build_basis(model.ginibre(), 16, quad=q)


def test_decay_fit_fixed_window():
    x = np.linspace(0, 3, 301)
    R = 0.2 * np.exp(-2 * x ** 2)
    assert finite.decay_fit(x, R)["C"] == pytest.approx(0.2)
