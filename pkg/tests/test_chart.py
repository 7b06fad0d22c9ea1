import numpy as np
import pytest

from dropletlab import chart


@pytest.fixture(scope="module")
def cusp():
    m = chart.tune_cusp(t=0.04)
    P = chart.potential_from_map(m)
    d = chart.droplet_from_map(m)
    return m, P, d


def test_tuned_map_is_univalent_with_two_cusps(cusp):
    m, _, d = cusp
    assert chart.check_univalent(m)
    assert len(chart.cusp_points(m)) == 2
    assert [s["nu"] for s in d.singular_points] == [5, 5]


def test_classify_cusp(cusp):
    m, _, _ = cusp
    cls = chart.classify_cusp(chart.halfplane_chart(m, 1j))
    assert cls.nu == 5 and cls.b > 0


def test_gap_leading_term_and_expansion(cusp):
    m, P, _ = cusp
    ch = chart.halfplane_chart(m, 1j)
    ob = chart.ConformalObstacle(m, P)
    errs = []
    for r in (0.1, 0.05):
        lam = r * np.exp(1j * np.pi / 4)
        M = float(chart.m_function(ch, ob, np.array(lam)))
        errs.append(abs(M / chart.cusp_gap_leading(P, ch, lam.real, lam.imag) - 1))
    assert errs[1] <= 0.6 * errs[0]
    M = float(chart.m_function(ch, ob, np.array(0.2 + 0.02j)))
    assert abs(chart.m_expansion(ch, P, 0.2, 0.02) - M) <= 0.05 * abs(M)


def test_moving_point_distance_scaling(cusp):
    _, P, d = cusp
    p = d.singular_points[0]["location"]
    ns = [100, 1000, 10000]
    dist = [abs(chart.moving_point(d, P, p, n, 3.0, "cusp_inner").location - p) for n in ns]
    slope = np.polyfit(np.log(ns), np.log(dist), 1)[0]
    assert abs(slope + 0.2) <= 0.05


def test_moving_point_keeps_distance_T_over_sqrt_n(cusp):
    _, P, d = cusp
    p = d.singular_points[0]["location"]
    mp = chart.moving_point(d, P, p, 1000, 3.0, "cusp_inner")
    assert d.distance(np.array([mp.location]))[0] == pytest.approx(3 / np.sqrt(1000), rel=0.05)
    assert d.contains(np.array([mp.location]))[0]
