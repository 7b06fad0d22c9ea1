"""Compiled core vs pure-Python twin: Metropolis sweeps and segment distances.

Usage: python benchmarks/bench_core.py [--steps N] [--repeat R]
"""
import argparse
import time

import numpy as np

from dropletlab import _backend, model
from dropletlab.mc import GibbsChain


def best_of(fn, repeat):
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return min(out)


def bench_chain(P, n, steps, repeat):
    res = {}
    states = {}
    for name in ("python", "compiled"):
        def go():
            ch = GibbsChain(n, P, seed=1, backend=name)
            ch.run(steps)
            states[name] = ch.state
        res[name] = best_of(go, repeat)
    assert np.array_equal(states["python"], states["compiled"])
    return res


def bench_distance(m, repeat):
    rng = np.random.default_rng(0)
    th = 2 * np.pi * np.arange(m) / m
    s0 = np.exp(1j * th)
    s1 = np.roll(s0, -1)
    z = rng.normal(size=200) + 1j * rng.normal(size=200)
    res = {}
    vals = {}
    for name in ("python", "compiled"):
        impl = _backend.get_impl(name)
        res[name] = best_of(lambda: vals.__setitem__(
            name, _backend.polyline_min_distance(z, s0, s1, impl)), repeat)
    assert np.allclose(vals["python"], vals["compiled"], rtol=0, atol=1e-14)
    return res


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=100000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    cases = [("ginibre n=8", model.ginibre(), 8),
             ("pointcharge n=16", model.point_charge(0.0625, 0.78), 16),
             ("harmonic n=16", model.harmonic_moment({3: 0.1}, guard_radius=1.5), 16)]
    print("%-22s %12s %12s %9s" % ("case", "python [s]", "compiled [s]", "speedup"))
    for label, P, n in cases:
        r = bench_chain(P, n, args.steps, args.repeat)
        print("%-22s %12.4f %12.4f %8.1fx" % ("mh " + label, r["python"], r["compiled"],
                                              r["python"] / r["compiled"]))
    r = bench_distance(512, args.repeat)
    print("%-22s %12.4f %12.4f %8.1fx" % ("distance 200x512", r["python"], r["compiled"],
                                          r["python"] / r["compiled"]))


if __name__ == "__main__":
    main()
