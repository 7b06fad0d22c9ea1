import numpy as np
import pytest

from dropletlab import model
from dropletlab.errors import OutOfRegion


def test_ginibre_values_and_laplacian():
    P = model.ginibre()
    z = np.array([0.3 + 0.4j, 1.5, -2j])
    assert np.allclose(P(z), np.abs(z) ** 2)
    assert np.allclose(P.laplacian(z), 1.0)
    assert np.allclose(model.fd_laplacian(P, z), 1.0, atol=1e-6)


def test_point_charge_singularity_and_region():
    P = model.point_charge(0.25, 0.5)
    assert np.isinf(P(0.5 + 0j))
    assert np.isclose(P(0.0 + 0j), 2 * 0.25 * np.log(2.0))
    with pytest.raises(OutOfRegion):
        P.laplacian(0.5 + 0j)
    assert np.isclose(P.laplacian(0.1 + 0.1j), 1.0)


def test_harmonic_laplacian_matches_stencil():
    P = model.harmonic_moment({3: 0.1, 2: 0.05j}, guard_radius=1.5)
    z = np.array([0.2 + 0.1j, -0.4 + 0.3j])
    assert np.allclose(model.fd_laplacian(P, z), P.laplacian(z), atol=1e-5)
    with pytest.raises(OutOfRegion):
        P.laplacian(np.array([2.5, 3j]))


def test_potential_dict_round_trip():
    for P in (model.ginibre(), model.point_charge(0.0625, 0.5 + 0.1j),
              model.harmonic_moment({3: 0.1}, guard_axes=(1.5, 2.0))):
        Q = model.Potential.from_dict(P.to_dict())
        assert Q.to_dict() == P.to_dict()
        z = np.array([0.1 + 0.2j, 1.7 - 0.3j])
        assert np.allclose(Q(z), P(z))


def test_growth_exceeds_one():
    P = model.harmonic_moment({3: 0.2}, guard_radius=1.5)
    g = model.growth_report(P, [10.0, 100.0])
    assert g["ok"] and min(g["min_ratio"]) > 1.0
