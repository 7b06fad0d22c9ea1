import numpy as np
import pytest

from dropletlab import limits, ward


def test_ginibre_cauchy_transform_vanishes():
    C, info = ward.cauchy_transform(limits.ginibre_kernel(), 0.3 + 0.2j)
    assert abs(C) < 1e-12


def test_ward_dichotomy_small_grid():
    rg = ward.ward_residual(limits.ti_kernel_obj(5.0), (-1, 1), (-1, 1), 0.1)
    ng = ward.ward_residual(limits.LimitKernel("ti", limits.step_profile([-2.5, 2.5], [0.5])),
                            (-1, 1), (-1, 1), 0.1)
    assert rg.sup_residual < 1e-2
    assert ng.sup_residual > 5e-2


def test_mass_one():
    g = ward.mass_one_defect(limits.ginibre_kernel(), 0.5 + 0j)
    assert abs(g["defect"]) <= 1e-10
    k = ward.mass_one_defect(limits.ti_kernel_obj(2.0), 1.0 + 0j)
    assert k["defect"] >= -1e-6


def test_log_subharmonicity():
    assert ward.log_subharmonicity(limits.ginibre_kernel(), (-1, 1), (-1, 1), 0.1)["min"] == \
        pytest.approx(1.0, abs=1e-6)
    assert ward.log_subharmonicity(limits.ti_kernel_obj(5.0), (-1, 1), (-1, 1), 0.1)["min"] >= -1e-6


def test_one_eighth():
    val, tail = ward.one_eighth(limits.edge_profile, 8.0)
    assert abs(val - 0.125) <= 1e-8


def test_fit_interval_recovers_width():
    xi = np.linspace(-8, 8, 321)
    phi = np.real(limits.interval_profile(s=4.0)(xi))
    fit = ward.fit_interval(xi, phi, T=3.0, resolution=0.05)
    assert fit["s"] == pytest.approx(4.0, abs=1e-6)
    assert fit["contained"]
