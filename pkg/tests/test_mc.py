import numpy as np
import pytest

from dropletlab import mc, model
from dropletlab.errors import Collision, InsufficientSamples


def test_hamiltonian_two_points():
    P = model.ginibre()
    H = mc.hamiltonian(P, [1, -1])
    assert H == pytest.approx(-2 * np.log(2) + 2 * 2)
    with pytest.raises(Collision):
        mc.hamiltonian(P, [0.5, 0.5])


@pytest.mark.parametrize("P", [model.ginibre(), model.point_charge(0.25, 0.5),
                               model.harmonic_moment({3: 0.1}, guard_radius=1.5)])
def test_backends_bit_identical(P):
    a = mc.GibbsChain(6, P, seed=3, backend="python")
    b = mc.GibbsChain(6, P, seed=3, backend="compiled")
    ra = a.run(3000, 6)
    rb = b.run(3000, 6)
    assert a.accepted == b.accepted
    assert np.array_equal(ra, rb)


def test_seed_reproducible():
    P = model.ginibre()
    r1 = mc.GibbsChain(5, P, seed=11).run(1000, 5)
    r2 = mc.GibbsChain(5, P, seed=11).run(1000, 5)
    assert np.array_equal(r1, r2)


def test_radial_oracle_total_mass():
    e = np.linspace(0, 8, 401)
    d = mc.ginibre_radial_oracle(6, e)
    assert np.sum(d * np.diff(e ** 2)) == pytest.approx(6, rel=1e-9)


def test_burn_in_tunes_acceptance():
    ch = mc.GibbsChain(8, model.ginibre(), seed=1)
    mc.burn_in(ch, 2000)
    ch.run(20000)
    assert 0.25 <= ch.acceptance <= 0.55


def test_small_density_estimate_matches_oracle():
    ch = mc.GibbsChain(4, model.ginibre(), seed=5)
    e = np.linspace(0, 3, 4)
    fe = mc.estimate_density(ch, bins=("radial", e), burn=5000, samples=20000, batches=20)
    z = (fe.density - mc.ginibre_radial_oracle(4, e)) / fe.se
    assert np.all(np.abs(z) < 4)


def test_insufficient_samples():
    ch = mc.GibbsChain(4, model.ginibre(), seed=5)
    with pytest.raises(InsufficientSamples):
        mc.estimate_density(ch, burn=10)
    with pytest.raises(InsufficientSamples):
        mc.estimate_density(ch, samples=100, batches=10)


def test_pure_fallback_selected_by_environment():
    import os
    import subprocess
    import sys
    env = dict(os.environ, DROPLETLAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from dropletlab import _backend; print(_backend.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
