"""Acceptance criteria 1-16, one test (and one PASS/FAIL line) per criterion.

Each experiment runs once per session with its default configuration; the
criteria are read from the records it returns.
"""
import pytest

from conftest import ACCEPTANCE
from dropletlab.experiments import ExperimentConfig, run_experiment

_CACHE = {}


@pytest.fixture(scope="session")
def outdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def records(name, outdir):
    if name not in _CACHE:
        crits, _, _ = run_experiment(ExperimentConfig(name, seed=12345), str(outdir / name))
        _CACHE[name] = {c["id"]: c for c in crits}
    return _CACHE[name]


CRITERIA = [
    (1, "1/8-formula", "ward-suite", ["C1"]),
    (2, "translation-invariant profiles", "limits-figures", ["C2"]),
    (3, "Ward dichotomy", "ward-suite", ["C3"]),
    (4, "mass-one inequality", "ward-suite", ["C4"]),
    (5, "kernel oracle equivalence", "decay-suite", ["C5"]),
    (6, "MC cross-check", "mc-crosscheck", ["C6-n8"]),
    (7, "regular-edge convergence", "decay-suite", ["C7"]),
    (8, "exterior decay constants", "decay-suite", ["C8a", "C8b"]),
    (9, "cusp triviality trend", "cusp-triviality", ["C9"]),
    (10, "moving-point non-triviality", "moving-point", ["C10-cusp_inner", "C10-double_prime"]),
    (11, "gap leading term", "cusp-triviality", ["C11"]),
    (12, "gap expansion", "cusp-triviality", ["C12"]),
    (13, "equilibrium solver", "droplet", ["C13a", "C13b", "C13c"]),
    (14, "log-subharmonicity", "ward-suite", ["C14"]),
    (15, "hard-edge profiles", "limits-figures", ["C15"]),
    (16, "moving-point scaling", "moving-point", ["C16a", "C16b"]),
]


@pytest.mark.slow
@pytest.mark.parametrize("num,name,exp,ids", CRITERIA, ids=["criterion_%02d" % c[0] for c in CRITERIA])
def test_criterion(num, name, exp, ids, outdir):
    rec = records(exp, outdir)
    parts = [rec[i] for i in ids]
    ok = all(p["passed"] for p in parts)
    detail = "; ".join("%s=%s" % (p["id"], _short(p["value"])) for p in parts)
    line = "%s criterion %2d (%s): %s" % ("PASS" if ok else "FAIL", num, name, detail)
    ACCEPTANCE[num] = line
    print(line)
    assert ok, line


def _short(v):
    if isinstance(v, float):
        return "%.4g" % v
    if isinstance(v, list):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join("%s: %s" % (k, _short(x)) for k, x in v.items()) + "}"
    return str(v)
