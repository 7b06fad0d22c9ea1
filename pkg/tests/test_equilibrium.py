import numpy as np
import pytest

from dropletlab import equilibrium as eq
from dropletlab import model
from dropletlab.errors import OutOfGrid


def test_projection_capped_simplex():
    rng = np.random.default_rng(0)
    v = rng.normal(size=200)
    cap = np.full(200, 0.01)
    x = eq.project_capped_simplex(v, cap)
    assert x.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(x >= 0) and np.all(x <= cap + 1e-15)


def test_log_convolver_matches_direct_sum():
    g = eq.Grid.square(0.5, 0.1)
    rng = np.random.default_rng(1)
    m = rng.random((g.ny, g.nx))
    m /= m.sum()
    U = eq.LogConvolver(g)(m)
    z = g.centers()
    zs = z.ravel()
    i = 37
    d = np.abs(zs[i] - np.delete(zs, i))
    a = g.h / np.sqrt(np.pi)
    direct = np.sum(np.delete(m.ravel(), i) * np.log(1 / d)) + m.ravel()[i] * (np.log(1 / a) + 0.5)
    assert U.ravel()[i] == pytest.approx(direct, rel=1e-10)


@pytest.fixture(scope="module")
def ginibre_field():
    P = model.ginibre()
    g = eq.Grid.square(1.4, 0.08)
    s = eq.minimize_energy(P, g)
    return P, s, eq.obstacle_function(P, s)


def test_ginibre_measure(ginibre_field):
    P, s, f = ginibre_field
    assert s.total_mass == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(s.history) <= 1e-12)
    assert f.frostman == pytest.approx(1.0, abs=5e-3)
    assert f.complementarity() >= 0.99


def test_ginibre_droplet_radius(ginibre_field):
    _, _, f = ginibre_field
    d = eq.extract_droplet(f)
    r = np.abs(d._verts)
    assert np.max(np.abs(r - 1)) <= 2 * 0.08
    assert d.singular_points == []


def test_exterior_gap(ginibre_field):
    P, _, f = ginibre_field
    exact = 1.2 ** 2 - 1 - np.log(1.2 ** 2)
    assert f.gap(1.2 + 0j) == pytest.approx(exact, abs=5e-3)
    with pytest.raises(OutOfGrid):
        f.gap(5.0 + 0j)


def test_point_charge_tangency_flagged():
    c = 0.0625
    P = model.point_charge(c, np.sqrt(1 + c) - np.sqrt(c))
    g = eq.Grid.square(1.15, 0.04)
    f = eq.obstacle_function(P, eq.minimize_energy(P, g))
    d = eq.extract_droplet(f, P)
    kinds = [s["kind"] for s in d.singular_points]
    assert "double" in kinds
