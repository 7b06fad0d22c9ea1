import numpy as np
import pytest

from dropletlab import equilibrium
from dropletlab.geometry import Droplet, polygon_area


def circle(R, n=2048, c=0j):
    return c + R * np.exp(2j * np.pi * np.arange(n) / n)


def test_polygon_area_and_containment():
    d = Droplet([circle(1.0)])
    assert d.area == pytest.approx(np.pi, rel=1e-5)
    assert list(d.contains(np.array([0.0, 0.9j, 1.1]))) == [True, True, False]
    assert polygon_area(circle(1.0)) > 0


def test_distance_to_circle():
    d = Droplet([circle(1.0)])
    assert np.allclose(d.distance(np.array([0.0, 2.0, 0.5j])), [1.0, 1.0, 0.5], atol=1e-5)


def test_annulus_area_with_touching_hole():
    pc = equilibrium.point_charge_droplet(0.0625, np.sqrt(1.0625) - 0.25)
    assert pc.area == pytest.approx(np.pi, rel=1e-6)
    assert pc.singular_points[0]["kind"] == "double"
    assert not pc.contains(np.array([np.sqrt(1.0625) - 0.25 + 0j]))[0]
