"""Named experiments binding the modules into reproducible runs.

Each experiment takes an ExperimentConfig, writes CSV/JSON data into the
output directory and returns a list of criterion records
{id, name, passed, value, threshold, ...}.
"""
import copy
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from . import chart, equilibrium, finite, limits, mc, ward
from .errors import ConfigError
from .geometry import Droplet
from .model import Potential, ginibre, point_charge
from .output import grid_rows, write_csv, write_json

DESCRIPTIONS = {
    "droplet": "lattice equilibrium measure, obstacle function and droplet with singular flags",
    "cusp-triviality": "R_n(0) at the tuned (5,2) cusp for growing n; gap-function checks",
    "moving-point": "moving points near the cusp and the double point: scaling and R_n(0)",
    "ward-suite": "Ward residual, mass-one defect, log-subharmonicity and 1/8 integral",
    "limits-figures": "translation-invariant and hard-edge profile tables",
    "mc-crosscheck": "Metropolis radial density against the exact finite-n kernel",
    "decay-suite": "kernel oracle equivalence, edge convergence and exterior decay fits",
}

EXPERIMENTS = tuple(DESCRIPTIONS)

PC_TANGENT = {"family": "pointcharge", "c": 0.0625, "a": "tangent"}
CUSP_MODEL = {"family": "cusp-model", "t": 0.04}

DEFAULTS = {
    "droplet": {"potentials": [{"family": "ginibre"}, PC_TANGENT],
                "grid": {"h": 0.02, "half_width": 1.6},
                "params": {"tol": 1e-7, "max_iter": 4000}},
    "cusp-triviality": {"n": [16, 32, 64], "potentials": [CUSP_MODEL],
                        "params": {"theta": 0.0, "x_half": 3.0, "dx": 0.05,
                                   "gap_r": [0.1, 0.05], "sigma": 0.2, "tau": 0.02}},
    "moving-point": {"n": [16, 32, 64], "T": 3.0, "potentials": [CUSP_MODEL, PC_TANGENT],
                     "params": {"n_geometry": [100, 1000, 10000], "x_half": 6.0, "dx": 0.05}},
    "ward-suite": {"s": [2.0, 5.0, 8.0], "grid": {"h": 0.05, "half_width": 3.0},
                   "params": {"rho_c": 8.0, "negative_control": [0.5, -2.5, 2.5],
                              "log_sub_half_width": 2.0, "log_sub_s": 5.0,
                              "mass_one_z": [0.0, 1.0, 2.0], "X": 8.0}},
    "limits-figures": {"s": [2.0, 5.0, 8.0],
                       "params": {"T_list": [2.0, 5.0, 8.0], "dx": 0.01, "x_max": 6.0,
                                  "hard_margin": 2.0}},
    "mc-crosscheck": {"n": [8], "potentials": [{"family": "ginibre"}],
                      "params": {"samples": 200000, "burn": 50000, "bins": 10,
                                 "r_max": 4.0, "batches": 50}},
    "decay-suite": {"n": [16, 32, 64], "T": 3.0, "potentials": [CUSP_MODEL],
                    "params": {"n_oracle": 16, "pairs": 100, "pair_radius": 1.5,
                               "x_half": 3.0, "dx": 0.01, "moving_x_half": 6.0,
                               "triples": 50}},
}

KERNEL_EXPERIMENTS = ("cusp-triviality", "moving-point", "decay-suite", "mc-crosscheck")


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    out: str = "out"
    n: list = None
    T: float = None
    s: list = None
    potentials: list = None
    grid: dict = None
    params: dict = field(default_factory=dict)

    def with_defaults(self):
        if self.experiment not in DEFAULTS:
            raise ConfigError("unknown experiment %r" % self.experiment)
        d = copy.deepcopy(DEFAULTS[self.experiment])
        c = copy.deepcopy(self)
        for k in ("n", "T", "s", "potentials", "grid"):
            if getattr(c, k) is None and k in d:
                setattr(c, k, d[k])
        merged = dict(d.get("params", {}))
        merged.update(c.params or {})
        c.params = merged
        return c

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError("unknown config keys: %s" % ", ".join(sorted(extra)))
        if "experiment" not in d:
            raise ConfigError("config needs an 'experiment' tag")
        try:
            c = cls(**d)
        except TypeError as e:
            raise ConfigError(str(e))
        if c.experiment not in DEFAULTS:
            raise ConfigError("unknown experiment %r" % c.experiment)
        if not isinstance(c.seed, int) or isinstance(c.seed, bool):
            raise ConfigError("seed must be an integer")
        if c.params is None:
            c.params = {}
        return c

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError("malformed JSON: %s" % e)
        return cls.from_dict(d)


# ----------------------------------------------------------------------------
# models

@dataclass
class Model:
    tag: str
    P: Potential
    droplet: Droplet = None
    dmap: object = None
    singular: complex = None


def _circle(R, samples=1 << 14, center=0j):
    th = 2 * np.pi * np.arange(samples) / samples
    return center + R * np.exp(1j * th)


def make_model(pot):
    fam = pot.get("family")
    if fam == "ginibre":
        return Model("ginibre", ginibre(), Droplet([_circle(1.0)], source="exact"))
    if fam == "pointcharge":
        c = float(pot["c"])
        a = pot.get("a", "tangent")
        if a == "tangent":
            a = np.sqrt(1 + c) - np.sqrt(c)
        elif isinstance(a, (list, tuple)):
            a = complex(a[0], a[1])
        a = complex(a)
        P = point_charge(c, a)
        d = None
        if abs(a) + np.sqrt(c) <= np.sqrt(1 + c) + 1e-12:
            d = equilibrium.point_charge_droplet(c, a)
        sing = d.singular_points[0]["location"] if d is not None and d.singular_points else None
        return Model("pointcharge", P, d, None, sing)
    if fam == "cusp-model":
        m = chart.tune_cusp(t=float(pot.get("t", 0.04)))
        P = chart.potential_from_map(m)
        d = chart.droplet_from_map(m)
        return Model("cusp", P, d, m, d.singular_points[0]["location"])
    if fam == "harmonic":
        return Model("harmonic", Potential.from_dict(pot))
    raise ConfigError("unknown potential family %r" % fam)


def coverage_radius(model):
    P = model.P
    if P.family == "ginibre":
        return 1.0
    if P.family == "pointcharge":
        return float(np.sqrt(1 + P.c))
    return float(P.extent)


def crit(cid, name, passed, value, threshold, **detail):
    d = {"id": cid, "name": name, "passed": bool(passed), "value": value,
         "threshold": threshold}
    d.update(detail)
    return d


def pmap(fn, args, jobs=1):
    """Order-preserving map, in worker processes when jobs > 1."""
    if jobs <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, args))


_BASIS_CACHE = {}


def kernel_for(pot, n):
    key = (json.dumps(pot, sort_keys=True), n)
    if key not in _BASIS_CACHE:
        model = make_model(pot)
        _BASIS_CACHE[key] = (model, finite.FiniteKernel(finite.build_basis(model.P, n)))
    return _BASIS_CACHE[key]


def validate(cfg):
    """Static checks; returns a list of human-readable violations."""
    out = []
    if cfg.experiment not in DEFAULTS:
        return ["unknown experiment %r" % cfg.experiment]
    c = cfg.with_defaults()
    ns = list(c.n or [])
    for n in ns:
        if not isinstance(n, int) or n < 1:
            out.append("n must be a positive integer, got %r" % (n,))
        elif c.experiment in KERNEL_EXPERIMENTS and n > finite.MAX_N:
            out.append("n = %d exceeds the conditioning limit %d" % (n, finite.MAX_N))
    if c.T is not None and c.T <= 0:
        out.append("T must be positive")
    if c.grid is not None:
        h = c.grid.get("h", 0)
        if not h or h <= 0:
            out.append("grid spacing h must be positive")
    for pot in c.potentials or []:
        if not isinstance(pot, dict) or pot.get("family") not in (
                "ginibre", "pointcharge", "cusp-model", "harmonic"):
            out.append("unknown potential %r" % (pot,))
    if out:
        return out
    if c.experiment == "droplet":
        h, hw = c.grid["h"], c.grid["half_width"]
        for pot in c.potentials:
            model = make_model(pot)
            need = coverage_radius(model) + 2 * h
            if hw < need:
                out.append("grid half width %.3g does not cover the %s droplet region "
                           "(needs %.3g)" % (hw, model.tag, need))
    if c.experiment == "moving-point":
        for pot in c.potentials:
            model = make_model(pot)
            if model.droplet is None:
                out.append("moving points need closed-form geometry for %s" % model.tag)
                continue
            res = model.droplet.resolution
            for n in list(c.params.get("n_geometry", [])) + ns:
                if c.T / np.sqrt(n) <= 2 * res:
                    out.append("T/sqrt(n) below twice the boundary resolution at n = %d" % n)
    if c.experiment == "mc-crosscheck":
        if c.params["batches"] < 20:
            out.append("batch means need at least 20 batches")
        if c.params["samples"] * min(ns) < 10 ** 6:
            out.append("fewer than 10^6 post-burn-in steps")
    return out


# ----------------------------------------------------------------------------
# droplet

def _droplet_task(args):
    pot, h, hw, tol, max_iter = args
    model = make_model(pot)
    grid = equilibrium.Grid.square(hw, h)
    sig = equilibrium.minimize_energy(model.P, grid, max_iter=max_iter, tol=tol,
                                      raise_on_fail=False)
    fld = equilibrium.obstacle_function(model.P, sig)
    d = equilibrium.extract_droplet(fld, model.P)
    verts = d._verts
    return {"tag": model.tag, "pot": pot, "grid": grid.to_dict(), "x": grid.x, "y": grid.y,
            "fill": fld.fill, "qcheck": fld.qcheck, "energy": sig.energy, "gap": sig.gap,
            "iterations": sig.iterations, "frostman": fld.frostman,
            "complementarity": fld.complementarity(), "droplet": d.to_dict(),
            "radius_dev": float(np.max(np.abs(np.abs(verts) - 1.0))),
            "radius_mean": float(np.mean(np.abs(verts))),
            "singular": d.singular_points, "expected": model.singular}


def exp_droplet(cfg, out, jobs):
    p = cfg.params
    h, hw = cfg.grid["h"], cfg.grid["half_width"]
    res = pmap(_droplet_task, [(s, h, hw, p["tol"], p["max_iter"]) for s in cfg.potentials], jobs)
    crits, files = [], []
    comp = []
    for r in res:
        name = "%s_%d" % (r["tag"], res.index(r))
        files.append(write_csv(os.path.join(out, "droplet_%s_grid.csv" % name),
                               ["x", "y", "fill", "qcheck"],
                               grid_rows(r["x"], r["y"], fill=r["fill"], qcheck=r["qcheck"])))
        meta = {k: r[k] for k in ("tag", "pot", "grid", "energy", "gap", "iterations",
                                  "frostman", "complementarity", "droplet")}
        if r["tag"] == "ginibre":
            meta["radius_mean"] = r["radius_mean"]
            meta["radius_max_deviation"] = r["radius_dev"]
        files.append(write_json(os.path.join(out, "droplet_%s.json" % name), meta))
        comp.append(r["complementarity"])
        if r["tag"] == "ginibre":
            crits.append(crit("C13a", "Ginibre droplet radius 1 +- 2h", r["radius_dev"] <= 2 * h,
                              r["radius_dev"], 2 * h, h=h))
        if r["tag"] == "pointcharge" and r["expected"] is not None:
            dbl = [s for s in r["singular"] if s["kind"] == "double"]
            dist = min([abs(s["location"] - r["expected"]) for s in dbl], default=np.inf)
            crits.append(crit("C13c", "point-charge tangency flagged as double point",
                              len(dbl) >= 1, len(dbl), ">= 1",
                              distance_to_exact=dist, h=h))
    crits.append(crit("C13b", "Frostman complementarity on >= 99% of cells",
                      min(comp) >= 0.99, min(comp), 0.99))
    return crits, files


# ----------------------------------------------------------------------------
# cusp triviality

def _cusp_task(args):
    pot, n, theta, xs = args
    model, k = kernel_for(pot, n)
    rk = finite.fixed_frame(k, model.singular, theta)
    _, R = finite.profile(rk, xs)
    return {"n": n, "R0": float(rk.R(0j)), "profile": R, "trace": k.trace(),
            "residual": k.basis.residual}


def exp_cusp_triviality(cfg, out, jobs):
    p = cfg.params
    pot = cfg.potentials[0]
    xs = np.round(np.arange(-p["x_half"], p["x_half"] + p["dx"] / 2, p["dx"]), 12)
    res = pmap(_cusp_task, [(pot, n, p["theta"], xs) for n in cfg.n], jobs)
    files = [write_csv(os.path.join(out, "cusp_triviality.csv"),
                       ["n", "R_n0", "trace", "residual"],
                       [(r["n"], r["R0"], r["trace"], r["residual"]) for r in res]),
             write_csv(os.path.join(out, "cusp_profiles.csv"), ["n", "x", "R_n"],
                       [(r["n"], x, v) for r in res for x, v in zip(xs, r["profile"])])]
    crits = []
    by_n = {r["n"]: r["R0"] for r in res}
    if 16 in by_n and 64 in by_n:
        ratio = by_n[16] / by_n[64]
        mono = all(res[i + 1]["R0"] < res[i]["R0"] for i in range(len(res) - 1))
        crits.append(crit("C9", "cusp R_n(0) drops by >= 2 from n=16 to n=64", ratio >= 2.0,
                          ratio, 2.0, R0=by_n, monotone=mono))
    # gap function near the cusp
    model = make_model(pot)
    m, P = model.dmap, model.P
    ch = chart.halfplane_chart(m, 1j)
    ob = chart.ConformalObstacle(m, P)
    cls = chart.classify_cusp(ch)
    errs = []
    for r in p["gap_r"]:
        lam = r * np.exp(1j * np.pi / 4)
        M = float(chart.m_function(ch, ob, np.array(lam)))
        L = chart.cusp_gap_leading(P, ch, lam.real, lam.imag)
        errs.append(abs(M / L - 1))
    crits.append(crit("C11", "gap ratio error at r=0.05 <= 0.6 x error at r=0.1",
                      errs[1] <= 0.6 * errs[0], errs[1] / errs[0], 0.6,
                      errors=errs, radii=p["gap_r"], nu=cls.nu))
    s, t = p["sigma"], p["tau"]
    M = float(chart.m_function(ch, ob, np.array(s + 1j * t)))
    X = chart.m_expansion(ch, P, s, t)
    rel = abs(X - M) / abs(M)
    crits.append(crit("C12", "gap expansion relative error <= 5%", rel <= 0.05, rel, 0.05,
                      sigma=s, tau=t))
    write_json(os.path.join(out, "cusp_chart.json"),
               {"chart": ch.to_dict(), "class": {"nu": cls.nu, "b": cls.b},
                "gap_ratio_errors": errs, "expansion_rel_error": rel})
    files.append(os.path.join(out, "cusp_chart.json"))
    return crits, files


# ----------------------------------------------------------------------------
# moving points

_KINDS = {"cusp": ("cusp_inner", "cusp_tangency"), "pointcharge": ("double_prime", "double_second")}


def _moving_task(args):
    pot, n, T, xs = args
    model, k = kernel_for(pot, n)
    out = {"n": n, "tag": model.tag, "kinds": {}}
    kind = _KINDS[model.tag][0]
    mp = chart.moving_point(model.droplet, model.P, model.singular, n, T, kind)
    rk = finite.rescale_kernel(k, mp)
    _, R = finite.profile(rk, xs)
    out["kinds"][kind] = {"R0": float(rk.R(0j)), "profile": R, "mp": mp.to_dict()}
    return out


def exp_moving_point(cfg, out, jobs):
    p = cfg.params
    T = cfg.T
    crits, files = [], []
    geo_rows = []
    slopes = {}
    for pot in cfg.potentials:
        model = make_model(pot)
        for kind in _KINDS[model.tag]:
            dist = []
            for n in p["n_geometry"]:
                mp = chart.moving_point(model.droplet, model.P, model.singular, n, T, kind)
                dist.append(abs(mp.location - model.singular))
                geo_rows.append((model.tag, kind, n, mp.location.real, mp.location.imag,
                                 mp.theta, mp.distance, T / mp.scale, dist[-1]))
            slopes[kind] = float(np.polyfit(np.log(p["n_geometry"]), np.log(dist), 1)[0])
    files.append(write_csv(os.path.join(out, "moving_geometry.csv"),
                           ["model", "kind", "n", "x", "y", "theta", "distance",
                            "target_distance", "offset"], geo_rows))
    if "cusp_inner" in slopes:
        crits.append(crit("C16a", "cusp moving-point slope -1/5 +- 0.05",
                          abs(slopes["cusp_inner"] + 0.2) <= 0.05, slopes["cusp_inner"], -0.2))
    if "double_prime" in slopes:
        crits.append(crit("C16b", "double-point moving-point slope -1/4 +- 0.05",
                          abs(slopes["double_prime"] + 0.25) <= 0.05, slopes["double_prime"],
                          -0.25))
    xs = np.round(np.arange(-p["x_half"], p["x_half"] + p["dx"] / 2, p["dx"]), 12)
    tasks = [(pot, n, T, xs) for pot in cfg.potentials for n in cfg.n]
    res = pmap(_moving_task, tasks, jobs)
    rows, prow = [], []
    table = {}
    for r in res:
        for kind, v in r["kinds"].items():
            rows.append((r["tag"], kind, r["n"], v["R0"]))
            prow += [(r["tag"], kind, r["n"], x, y) for x, y in zip(xs, v["profile"])]
            table.setdefault(kind, {})[r["n"]] = (v["R0"], v["profile"])
    files.append(write_csv(os.path.join(out, "moving_R0.csv"), ["model", "kind", "n", "R_n0"], rows))
    files.append(write_csv(os.path.join(out, "moving_profiles.csv"),
                           ["model", "kind", "n", "x", "R_n"], prow))
    fits = {}
    for kind, tab in table.items():
        ns = sorted(tab)
        nmax = ns[-1]
        R0 = {n: tab[n][0] for n in ns}
        ok = 0.3 <= R0[nmax] <= 1.7
        if 16 in R0 and 64 in R0:
            ok = ok and abs(1 - R0[64]) < abs(1 - R0[16])
        crits.append(crit("C10-%s" % kind, "moving-point R_n(0) in [0.3, 1.7] and closer to 1 "
                          "at n=64 than n=16", ok, R0[nmax], [0.3, 1.7], R0=R0))
        # best-fit interval of the largest-n profile: Phi(xi) = R(xi / 2)
        fits[kind] = ward.fit_interval(2 * xs, tab[nmax][1], T=T, resolution=2 * p["dx"])
    files.append(write_json(os.path.join(out, "moving_fit.json"),
                            {"slopes": slopes, "interval_fit": fits, "T": T}))
    return crits, files


# ----------------------------------------------------------------------------
# Ward suite

def _ward_task(args):
    name, K, hw, h, rho_c, z_list, ls_hw, do_ls = args
    rep = ward.ward_residual(K, (-hw, hw), (-hw, hw), h, rho_c)
    m1 = [ward.mass_one_defect(K, z, rho_c) for z in z_list]
    ls = ward.log_subharmonicity(K, (-ls_hw, ls_hw), (-ls_hw, ls_hw), h)["min"] if do_ls else None
    return {"name": name, "x": rep.x, "y": rep.y, "res": np.abs(rep.residual), "C": rep.C,
            "sup": rep.sup_residual, "rule": rep.rule, "mass_one": m1, "log_sub": ls,
            "skipped": rep.skipped}


def exp_ward_suite(cfg, out, jobs):
    p = cfg.params
    h, hw = cfg.grid["h"], cfg.grid["half_width"]
    kernels = [("ginibre", limits.ginibre_kernel(), "ginibre")]
    for s in cfg.s:
        kernels.append(("K%g" % s, limits.ti_kernel_obj(s), "ti"))
    c, a, b = p["negative_control"]
    kernels.append(("negative", limits.LimitKernel("ti", limits.step_profile([a, b], [c]),
                                                   name="negative-control"), "neg"))
    ls_names = {"ginibre", "K%g" % p["log_sub_s"]}
    tasks = [(nm, K, hw, h, p["rho_c"], p["mass_one_z"], p["log_sub_half_width"], nm in ls_names)
             for nm, K, _ in kernels]
    res = pmap(_ward_task, tasks, jobs)
    files, crits = [], []
    summary = []
    for (nm, K, kind), r in zip(kernels, res):
        files.append(write_csv(os.path.join(out, "ward_%s.csv" % nm),
                               ["x", "y", "abs_residual", "re_C", "im_C"],
                               grid_rows(r["x"], r["y"], res=r["res"], re=r["C"].real,
                                         im=r["C"].imag)))
        summary.append((nm, r["sup"], r["skipped"]) + tuple(m["defect"] for m in r["mass_one"])
                       + tuple(m["tail"] for m in r["mass_one"])
                       + ((r["log_sub"],) if r["log_sub"] is not None else (float("nan"),)))
    zl = p["mass_one_z"]
    files.append(write_csv(os.path.join(out, "ward_summary.csv"),
                           ["kernel", "sup_residual", "skipped"]
                           + ["defect_z%g" % z for z in zl] + ["tail_z%g" % z for z in zl]
                           + ["min_log_laplacian"], summary))
    by = {k[0]: r for k, r in zip(kernels, res)}
    g = by["ginibre"]["sup"]
    ks = {nm: by[nm]["sup"] for nm, _, kind in kernels if kind == "ti"}
    neg = by["negative"]["sup"]
    ok = g <= 1e-6 and all(v <= 5e-3 for v in ks.values()) and neg >= 5e-2
    crits.append(crit("C3", "Ward dichotomy: Ginibre <= 1e-6, K_s <= 5e-3, control >= 5e-2", ok,
                      {"ginibre": g, **ks, "negative": neg}, [1e-6, 5e-3, 5e-2]))
    defects = {nm: [m["defect"] for m in by[nm]["mass_one"]]
               for nm, _, kind in kernels if kind in ("ginibre", "ti")}
    gd = defects["ginibre"]
    ok = all(d >= -1e-6 for v in defects.values() for d in v) and all(abs(d) <= 1e-10 for d in gd)
    crits.append(crit("C4", "mass-one defect >= -1e-6 (Ginibre |defect| <= 1e-10)", ok,
                      defects, -1e-6, z=zl,
                      tails={nm: [m["tail"] for m in by[nm]["mass_one"]] for nm in defects}))
    ls = {nm: by[nm]["log_sub"] for nm in ls_names}
    crits.append(crit("C14", "min discrete Delta log L >= -1e-6", all(v >= -1e-6 for v in ls.values()),
                      ls, -1e-6))
    val, tail = ward.one_eighth(limits.edge_profile, p["X"])
    crits.append(crit("C1", "1/8-formula", abs(val - 0.125) <= 1e-8, val, 0.125, tail=tail, X=p["X"]))
    files.append(write_json(os.path.join(out, "ward_report.json"),
                            {"h": h, "half_width": hw, "rho_c": p["rho_c"],
                             "rule": res[0]["rule"], "one_eighth": val, "one_eighth_tail": tail,
                             "sup_residual": {k[0]: r["sup"] for k, r in zip(kernels, res)},
                             "mass_one": {k[0]: r["mass_one"] for k, r in zip(kernels, res)},
                             "log_subharmonicity": ls}))
    return crits, files


# ----------------------------------------------------------------------------
# limit profiles

def exp_limits_figures(cfg, out, jobs):
    p = cfg.params
    dx = p["dx"]
    xs = np.round(np.arange(-p["x_max"], p["x_max"] + dx / 2, dx), 12)
    files, crits = [], []
    profs = {}
    errs = {}
    for s in cfg.s:
        R = np.real(limits.profile_phi(s, 2 * xs))
        profs[s] = R
        files.append(write_csv(os.path.join(out, "ti_profile_s%g.csv" % s), ["x", "R_s"], zip(xs, R)))
        q = integrate.quad(lambda t: np.exp(-t * t / 2) / np.sqrt(2 * np.pi), -s / 2, s / 2,
                           epsabs=1e-14, epsrel=1e-13)[0]
        errs[s] = abs(float(np.real(limits.profile_phi(s, 0.0))) - q)
    pos = xs >= 0
    mono = all(np.all(np.diff(R[pos]) <= 0) and np.all(np.diff(R[~pos]) >= 0) for R in profs.values())
    ss = sorted(profs)
    inc = all(np.all(profs[ss[i + 1]] >= profs[ss[i]]) for i in range(len(ss) - 1))
    ok = max(errs.values()) <= 1e-9 and mono and inc
    r2 = float(np.real(limits.profile_phi(2.0, 0.0)))
    crits.append(crit("C2", "R_s(0) matches quadrature to 1e-9; monotone in |x|, increasing in s",
                      ok, max(errs.values()), 1e-9, R2_0=r2, monotone=mono, increasing_in_s=inc))
    cut_ok = True
    for T in p["T_list"]:
        xh = np.round(np.arange(-(T + p["hard_margin"]), T + p["hard_margin"] + dx / 2, dx), 12)
        R = limits.hard_edge_R(T, xh + 0j)
        files.append(write_csv(os.path.join(out, "hard_edge_T%g.csv" % T), ["x", "R_T_h"], zip(xh, R)))
        outside = np.abs(xh) >= T
        inside = np.abs(xh) < T
        cut_ok = cut_ok and bool(np.all(R[outside] == 0.0) and np.all(R[inside] > 0))
    H8 = float(np.real(limits.hard_edge_H(8.0, 0.0)))
    crits.append(crit("C15", "H_8(0) = 1 +- 0.01 and exact indicator cutoff at |Re z| = T",
                      abs(H8 - 1) <= 0.01 and cut_ok, H8, [0.99, 1.01], cutoff_exact=cut_ok))
    return crits, files


# ----------------------------------------------------------------------------
# Monte Carlo

def _mc_task(args):
    n, pot, seed, p = args
    model = make_model(pot)
    chain = mc.GibbsChain(n, model.P, seed)
    edges = np.linspace(0, p["r_max"], p["bins"] + 1)
    fe = mc.estimate_density(chain, bins=("radial", edges), burn=p["burn"],
                             samples=p["samples"], batches=p["batches"])
    return {"n": n, "edges": edges, "density": fe.density, "se": fe.se, "counts": fe.counts,
            "acceptance": fe.acceptance, "scale": chain.scale,
            "steps": fe.samples * chain.n}


def exp_mc_crosscheck(cfg, out, jobs):
    p = cfg.params
    pot = cfg.potentials[0]
    if pot.get("family") != "ginibre":
        raise ConfigError("the radial cross-check needs the Ginibre potential")
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(cfg.n))
    tasks = [(n, pot, int(s.generate_state(1)[0]), p) for n, s in zip(cfg.n, seeds)]
    res = pmap(_mc_task, tasks, jobs)
    files, crits = [], []
    for r in res:
        ex = mc.ginibre_radial_oracle(r["n"], r["edges"])
        z = (r["density"] - ex) / r["se"]
        rows = [(0.5 * (r["edges"][i] + r["edges"][i + 1]), r["density"][i], r["se"][i], ex[i],
                 z[i], int(r["counts"][i])) for i in range(len(ex))]
        files.append(write_csv(os.path.join(out, "mc_radial_n%d.csv" % r["n"]),
                               ["r", "density", "se", "exact", "z_score", "counts"], rows))
        ok = bool(np.all(np.abs(z) <= 3)) and r["steps"] >= 10 ** 6
        crits.append(crit("C6-n%d" % r["n"], "MC radial density within 3 SE on all bins", ok,
                          float(np.max(np.abs(z))), 3.0, steps=r["steps"],
                          acceptance=r["acceptance"]))
    return crits, files


# ----------------------------------------------------------------------------
# decay suite

def _edge_task(args):
    n, xs = args
    rk = finite.fixed_frame(finite.GinibreKernel(n), 1.0, 0.0)
    _, R = finite.profile(rk, xs)
    return R


def _moving_decay_task(args):
    pot, n, T, xs = args
    model, k = kernel_for(pot, n)
    mp = chart.moving_point(model.droplet, model.P, model.singular, n, T, "cusp_inner")
    _, R = finite.profile(finite.rescale_kernel(k, mp), xs)
    return R


def exp_decay_suite(cfg, out, jobs):
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    files, crits = [], []
    # oracle equivalence
    n0 = p["n_oracle"]
    k = finite.FiniteKernel(finite.build_basis(ginibre(), n0))
    m = p["pairs"]

    def rnd(size):
        return p["pair_radius"] * np.sqrt(rng.random(size)) * np.exp(2j * np.pi * rng.random(size))
    z, w = rnd(m), rnd(m)
    rel = float(np.max(np.abs(k.K(z, w) - finite.ginibre_kernel_oracle(n0, z, w))
                       / np.abs(finite.ginibre_kernel_oracle(n0, z, w))))
    tr = k.trace()
    crits.append(crit("C5", "basis kernel vs closed form <= 1e-8; trace = n +- 1e-6 n",
                      rel <= 1e-8 and abs(tr - n0) <= 1e-6 * n0, rel, 1e-8, trace=tr,
                      residual=k.basis.residual))
    tri = rnd(3 * p["triples"]).reshape(-1, 3)
    det = finite.min_det3(k, tri)
    # regular edge convergence
    xs = np.round(np.arange(-p["x_half"], p["x_half"] + p["dx"] / 2, p["dx"]), 12)
    prof = pmap(_edge_task, [(n, xs) for n in cfg.n], jobs)
    sup = [float(np.max(np.abs(R - limits.edge_profile(xs)))) for R in prof]
    dec = all(sup[i + 1] < sup[i] for i in range(len(sup) - 1))
    crits.append(crit("C7", "edge sup error decreasing and <= 0.05 at n=64", dec and sup[-1] <= 0.05,
                      sup, 0.05, n=cfg.n))
    fixed = [finite.decay_fit(xs, R, "fixed") for R in prof]
    rows = [(n, x, v) for n, R in zip(cfg.n, prof) for x, v in zip(xs, R)]
    files.append(write_csv(os.path.join(out, "edge_profiles.csv"), ["n", "x", "R_n"], rows))
    # moving point at the cusp
    xm = np.round(np.arange(-p["moving_x_half"], p["moving_x_half"] + 0.025, 0.05), 12)
    mprof = pmap(_moving_decay_task, [(cfg.potentials[0], n, cfg.T, xm) for n in cfg.n], jobs)
    moving = [finite.decay_fit(xm, R, "moving", cfg.T) for R in mprof]
    rows = [(n, x, v) for n, R in zip(cfg.n, mprof) for x, v in zip(xm, R)]
    files.append(write_csv(os.path.join(out, "cusp_moving_profiles.csv"), ["n", "x", "R_n"], rows))
    Ca = [f["C"] for f in fixed]
    Cb = [f["C"] for f in moving]
    crits.append(crit("C8a", "Ginibre edge decay constant C <= 10", max(Ca) <= 10, Ca, 10,
                      window=fixed[0]["window"]))
    crits.append(crit("C8b", "cusp moving-point decay constant C <= 10", max(Cb) <= 10, Cb, 10,
                      window=moving[0]["window"], T=cfg.T))
    files.append(write_csv(os.path.join(out, "decay_constants.csv"), ["n", "C_edge", "C_moving"],
                           zip(cfg.n, Ca, Cb)))
    files.append(write_json(os.path.join(out, "decay_report.json"),
                            {"oracle_rel_error": rel, "trace": tr, "min_det3": det,
                             "edge_sup_error": sup, "C_edge": Ca, "C_moving": Cb}))
    return crits, files


RUNNERS = {
    "droplet": exp_droplet,
    "cusp-triviality": exp_cusp_triviality,
    "moving-point": exp_moving_point,
    "ward-suite": exp_ward_suite,
    "limits-figures": exp_limits_figures,
    "mc-crosscheck": exp_mc_crosscheck,
    "decay-suite": exp_decay_suite,
}


def run_experiment(cfg, out=None, jobs=1):
    """Run a configured experiment; returns (criteria, files, resolved config)."""
    c = cfg.with_defaults()
    out = out or c.out
    os.makedirs(out, exist_ok=True)
    crits, files = RUNNERS[c.experiment](c, out, jobs)
    return crits, files, c
