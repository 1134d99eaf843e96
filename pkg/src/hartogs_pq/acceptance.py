"""The bundled acceptance suite behind ``hartogs-pq verify``.

Each check returns a ``CriterionResult``.  Wall-clock times are kept in memory
and printed, never written to the artifacts, so two runs are byte-comparable.
"""
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import artifacts
from .config import config_hash, load_config
from .diagnostics import (BOUNDED, DIVERGENT, calibrate_hardy_constant, dichotomy_report,
                          dirichlet_growth_test, hardy_littlewood_check,
                          negative_norm)
from .geometry import build_grid, disk, domain_from_dict, rectangle
from .hartogs import WEAK, classify_point, predicate_weak, sample_boundary_points
from .kernels import BACKEND
from .oracles import exact_identity_table, mc_lattice_suite, orthogonality_suite
from .presets import FLAT_CORE, PRESETS
from .spectral import (SolverParams, assemble_magnetic_form, laplacian, magnetic_eigenvalue,
                       nonmagnetic_eigenvalue, smallest_eigenvalue, sweep_spectra, worker_count)
from .weights import weight_from_dict

EPS = np.finfo(float).eps
J01_SQ = 2.404825557695773 ** 2

# seconds; checked by the test-suite, reported by the CLI
BUDGETS = {1: 5.0, 2: 60.0, 3: 30.0, 5: 600.0, 9: 120.0}

TITLES = {
    1: "discrete square eigenvalue",
    2: "disk convergence to j01^2",
    3: "constant-shift identity",
    4: "rescaling invariance",
    5: "dichotomy observation",
    6: "diamagnetic comparison",
    7: "gauge flatness",
    8: "Levi classification",
    9: "closed-form oracle suite",
    10: "monomial orthogonality",
    11: "negative-norm oracle",
    12: "strip bound",
    13: "determinism",
}


@dataclass
class CriterionResult:
    number: int
    passed: bool
    details: dict
    seconds: float = 0.0
    tables: dict = field(default_factory=dict)

    @property
    def title(self):
        return TITLES[self.number]

    @property
    def budget(self):
        return BUDGETS.get(self.number)

    @property
    def in_budget(self):
        return self.budget is None or self.seconds <= self.budget

    def line(self):
        status = "PASS" if self.passed and self.in_budget else "FAIL"
        t = f"{self.seconds:.2f} s" + (f" / budget {self.budget:.0f} s" if self.budget else "")
        extra = "" if self.in_budget else " [over budget]"
        return f"{status} criterion {self.number:2d} {self.title} ({t}){extra}"

    def to_record(self):
        return {"criterion": self.number, "title": self.title, "pass": bool(self.passed),
                "details": self.details}


def _preset(name):
    p = PRESETS[name]
    return domain_from_dict(p["domain"]), weight_from_dict(p["weight"])


def _params(cfg):
    return SolverParams(**cfg["solver"])


def square_eigenvalue(h=1 / 32):
    grid = build_grid(rectangle(0.0, 1.0, 0.0, 1.0), h)
    lam = smallest_eigenvalue(laplacian(grid)).value
    exact = 8 / h**2 * math.sin(math.pi * h / 2) ** 2
    rel = abs(lam - exact) / exact
    return CriterionResult(1, rel <= 1e-10, {"h": h, "lambda": lam, "exact": exact,
                                             "relative_error": rel, "tolerance": 1e-10})


def richardson(values, ratio=2.0):
    """Three-grid extrapolation with the observed order; returns (limit, order)."""
    a, b, c = values
    q = (b - a) / (c - b)
    p = math.log(q) / math.log(ratio)
    return c + (c - b) / (ratio**p - 1), p


def disk_convergence(hs=(1 / 32, 1 / 64, 1 / 128)):
    lams = [smallest_eigenvalue(laplacian(build_grid(disk(1.0), h))).value for h in hs]
    limit, order = richardson(lams)
    rel = abs(limit - J01_SQ) / J01_SQ
    return CriterionResult(2, rel <= 5e-3, {"h": list(hs), "lambda": lams, "extrapolated": limit,
                                            "observed_order": order, "target": J01_SQ,
                                            "relative_error": rel, "tolerance": 5e-3})


def constant_shift(cfg, ms=(0, 1, 2, 3)):
    domain, weight = _preset("quadratic")
    grid = build_grid(domain, cfg["grid"]["h"])
    params = _params(cfg)
    base = nonmagnetic_eigenvalue(grid, weight, 0, params).value
    rows, ok = [], True
    for m in ms:
        lam = nonmagnetic_eigenvalue(grid, weight, m, params).value
        target = base + 4 * m
        err = abs(lam - target)
        good = err <= 64 * EPS * target
        ok &= good
        rows.append({"m": m, "lambda0": lam, "lambda_D_plus_4m": target, "abs_error": err,
                     "pass": good})
    return CriterionResult(3, ok, {"h": grid.h, "lambda_D": base, "tolerance": "64 eps relative",
                                   "rows": rows})


def rescaling(cfg, cs=(-3.0, 1.0, math.log(7)), ms=(1, 8), h=1 / 64):
    params = _params(cfg)
    rows, ok = [], True
    for name in PRESETS:
        domain, weight = _preset(name)
        grid = build_grid(domain, h)
        for m in ms:
            ref = assemble_magnetic_form(grid, weight, m)
            lam = magnetic_eigenvalue(grid, weight, m, params).value
            for c in cs:
                w2 = weight.shifted(c)
                same = assemble_magnetic_form(grid, w2, m).equal_entries(ref)
                lam2 = magnetic_eigenvalue(grid, w2, m, params).value
                good = bool(same and lam2 == lam)
                ok &= good
                rows.append({"preset": name, "m": m, "c": c, "pencil_identical": bool(same),
                             "lambda": lam, "lambda_shifted": lam2, "pass": good})
    return CriterionResult(4, ok, {"h": h, "rows": rows})


def run_sweeps(cfg, workers):
    params = _params(cfg)
    out = {}
    for name in PRESETS:
        domain, weight = _preset(name)
        out[name] = sweep_spectra(domain, weight, cfg["sweep"]["m_values"], cfg["grid"]["h"],
                                  params, workers, weight_id=name, domain_id=name)
    return out


def flat_ceiling(h):
    return smallest_eigenvalue(laplacian(build_grid(domain_from_dict(FLAT_CORE), h))).value


def dichotomy(cfg, sweeps):
    th = cfg["diagnostics"]["thresholds"]
    gf, br = th["growth_factor"], th["bounded_ratio"]
    ceiling = flat_ceiling(cfg["grid"]["h"])
    expected = {"quadratic": DIVERGENT, "thin_segment": DIVERGENT,
                "harmonic": BOUNDED, "flat_disk": BOUNDED}
    rows, ok = [], True
    for name, sw in sweeps.items():
        v = dichotomy_report(sw, gf, br, ceiling if name == "flat_disk" else None)
        conv = all(r.converged for r in sw.rows)
        good = conv and v.verdict == expected[name]
        if expected[name] == DIVERGENT:
            good = good and v.growth_nonmagnetic >= gf
        else:
            good = good and v.range_ratio < br
        if name == "flat_disk":
            good = good and bool(v.below_ceiling)
        ok &= good
        rows.append({"preset": name, "expected": expected[name], "all_converged": conv,
                     "pass": good, **v.to_dict()})
    return CriterionResult(5, ok, {"h": cfg["grid"]["h"], "m_values": cfg["sweep"]["m_values"],
                                   "flat_disk_ceiling": ceiling, "rows": rows})


def diamagnetic(sweeps):
    worst, ok = {}, True
    for name, sw in sweeps.items():
        l0 = sw.column("lambda_nonmagnetic")
        l1 = sw.column("lambda_magnetic")
        ok &= bool(np.all(l1 >= 0.95 * l0))
        worst[name] = float(np.min(l1 / l0))
    return CriterionResult(6, ok, {"min_ratio_magnetic_over_nonmagnetic": worst,
                                   "bound": 0.95})


def gauge_flatness(sweeps):
    sw = sweeps["harmonic"]
    l1 = sw.column("lambda_magnetic")
    lam_d = float(sw.rows[0].lambda_nonmagnetic)  # m = 0: plain Dirichlet Laplacian
    spread = float(l1.max() - l1.min())
    return CriterionResult(7, spread <= 0.02 * lam_d,
                           {"lambda_D": lam_d, "max": float(l1.max()), "min": float(l1.min()),
                            "spread": spread, "spread_over_lambda_D": spread / lam_d,
                            "tolerance": 0.02})


def levi_classification(cfg):
    d = cfg["diagnostics"]
    tl, td = d["thresholds"]["levi"], d["thresholds"]["laplacian"]
    rows, ok = [], True
    for k, name in enumerate(PRESETS):
        domain, weight = _preset(name)
        agree = total = weak = 0
        lo = math.inf
        for n in d["n_values"]:
            pts = sample_boundary_points(domain, weight, n, d["boundary_points"],
                                         seed=cfg["solver"]["seed"] + 1000 * k + n,
                                         margin=d["margin"])
            for pt in pts:
                rep = classify_point(pt, weight, tl)
                w = rep.classification == WEAK
                agree += w == predicate_weak(weight, pt.z, td)
                weak += w
                total += 1
                lo = min(lo, rep.min_levi_eigenvalue)
        good = agree == total and lo >= -1e-10
        ok &= good
        rows.append({"preset": name, "points": total, "agree": agree, "weak": weak,
                     "min_levi_eigenvalue": lo, "pass": good})
    return CriterionResult(8, ok, {"tau_levi": tl, "tau_laplacian": td, "rows": rows})


def oracle_suite(cfg, workers):
    o = cfg["oracles"]
    table = exact_identity_table(o["n_max"], o["m_max"])
    exact_ok = all(r["pass"] for r in table)
    mc = mc_lattice_suite(o["samples"], o["seed"], workers, o["sigmas"])
    mc_ok = all(r["pass"] for r in mc)
    res = CriterionResult(9, exact_ok and mc_ok,
                          {"exact_checks": len(table), "exact_pass": exact_ok,
                           "mc_checks": len(mc), "mc_pass": mc_ok, "samples": o["samples"]})
    res.tables["oracles"] = {"exact": table, "monte_carlo": mc}
    return res


def orthogonality(cfg, workers):
    o = cfg["oracles"]
    recs = orthogonality_suite(o["pairs"], o["samples"], o["seed"], workers=workers,
                               sigmas=o["sigmas"])
    ok = len(recs) == o["pairs"] and all(r["pass"] for r in recs)
    res = CriterionResult(10, ok, {"pairs": len(recs), "passed": sum(r["pass"] for r in recs)})
    res.tables["orthogonality"] = recs
    return res


def discrete_sine_mode(grid, p, q):
    """L2-normalised discrete eigenfunction sin(p pi x) sin(q pi y) on the unit square."""
    X, Y = grid.points[:, 0], grid.points[:, 1]
    v = np.sin(p * math.pi * X) * np.sin(q * math.pi * Y)
    v /= math.sqrt(np.sum(v**2)) * grid.h
    lam = 4 / grid.h**2 * (math.sin(p * math.pi * grid.h / 2) ** 2
                           + math.sin(q * math.pi * grid.h / 2) ** 2)
    return v, lam


def negnorm(cfg, h_modes=1 / 64):
    d = cfg["diagnostics"]
    sq = rectangle(0.0, 1.0, 0.0, 1.0)
    grid = build_grid(sq, h_modes)
    modes, ok = [], True
    for p, q in ((1, 1), (2, 1)):
        v, lam = discrete_sine_mode(grid, p, q)
        got = negative_norm(v, grid)
        want = 1 / math.sqrt(lam + 1)
        rel = abs(got - want) / want
        ok &= rel <= 1e-8
        modes.append({"mode": [p, q], "lambda": lam, "neg_norm": got, "closed_form": want,
                      "relative_error": rel})
    hdom = domain_from_dict(d["hardy_domain"])
    hs = sorted(d["hardy_h"], reverse=True)
    C = calibrate_hardy_constant(hdom, hs[-1], d["trials"], cfg["solver"]["seed"])
    tol = d["thresholds"]["hardy_tolerance"]
    hl = []
    for h in hs:
        rep = hardy_littlewood_check(build_grid(hdom, h), d["trials"], cfg["solver"]["seed"], C,
                                     tol)
        ok &= rep.passed
        hl.append(rep.to_dict())
    return CriterionResult(11, ok, {"h_modes": h_modes, "modes": modes, "tolerance": 1e-8,
                                    "calibrated_constant": C, "hardy_littlewood": hl})


def strip_bound(cfg, workers):
    domain, weight = _preset("thin_segment")
    d = cfg["diagnostics"]
    widths = PRESETS["thin_segment"]["diagnostics"]["widths"]
    rep = dirichlet_growth_test(weight, domain, widths, cfg["grid"]["h"], d["tau"], _params(cfg),
                                d["thresholds"]["growth_factor"],
                                d["thresholds"]["bounded_exponent"], workers)
    lams = rep.eigenvalues
    above = [lam >= b for lam, b in zip(lams, rep.strip_bounds)]
    growth = [lams[j + 2] / lams[j] for j in range(len(lams) - 2)]
    ok = all(above) and bool(growth) and all(g >= 4 for g in growth) and rep.verdict == DIVERGENT
    res = CriterionResult(12, ok, {**rep.to_dict(), "above_strip_bound": above,
                                   "growth_over_two_halvings": growth, "min_growth": 4.0})
    res.tables["growth"] = rep
    return res


def _timed(fn, *args):
    t = time.perf_counter()
    res = fn(*args)
    res.seconds = time.perf_counter() - t
    return res


def run_suite(cfg=None, workers=None, log=None):
    """Criteria 1-12 in order; returns (results, sweeps)."""
    cfg = cfg or verify_config()
    workers = worker_count(workers)
    say = log or (lambda s: None)
    out = []

    def add(res):
        out.append(res)
        say(res.line())

    add(_timed(square_eigenvalue))
    add(_timed(disk_convergence))
    add(_timed(constant_shift, cfg))
    add(_timed(rescaling, cfg))
    t = time.perf_counter()
    sweeps = run_sweeps(cfg, workers)
    res5 = dichotomy(cfg, sweeps)
    res5.seconds = time.perf_counter() - t
    add(res5)
    add(_timed(diamagnetic, sweeps))
    add(_timed(gauge_flatness, sweeps))
    add(_timed(levi_classification, cfg))
    add(_timed(oracle_suite, cfg, workers))
    add(_timed(orthogonality, cfg, workers))
    add(_timed(negnorm, cfg))
    add(_timed(strip_bound, cfg, workers))
    return out, sweeps


def verify_config(overrides=()):
    """Defaults at the preset resolution and m range; overrides may tune solver/oracles."""
    from .presets import H, M_VALUES
    base = [f"grid.h={H!r}", "sweep.m_values=" + repr(M_VALUES)]
    return load_config(None, base + list(overrides))


def write_results(out_dir, cfg, results, sweeps):
    paths = []
    for name, sw in sweeps.items():
        paths.append(artifacts.write_sweep_csv(os.path.join(out_dir, f"spectra_{name}.csv"), sw))
    tables = {}
    for r in results:
        tables.update(r.tables)
    if "growth" in tables:
        paths.append(artifacts.write_growth_csv(os.path.join(out_dir, "growth_thin_segment.csv"),
                                                tables["growth"]))
    oracle_recs = {k: tables[k] for k in ("oracles", "orthogonality") if k in tables}
    if oracle_recs:
        paths.append(artifacts.write_json(os.path.join(out_dir, "oracles.json"), oracle_recs))
    summary = {"criteria": [r.to_record() for r in results],
               "all_pass": all(r.passed for r in results)}
    paths.append(artifacts.write_json(os.path.join(out_dir, "verify.json"), summary))
    seeds = {"solver": cfg["solver"]["seed"], "oracles": cfg["oracles"]["seed"]}
    paths.append(artifacts.write_manifest(out_dir, "verify", config_hash(cfg), seeds, paths,
                                          BACKEND))
    return paths


def run_verify(out_dir, cfg=None, workers=None, log=None):
    cfg = cfg or verify_config()
    results, sweeps = run_suite(cfg, workers, log)
    paths = write_results(out_dir, cfg, results, sweeps)
    return results, paths


def compare_dirs(a, b):
    """Names of artifact files whose bytes differ between two output directories."""
    names = sorted(set(os.listdir(a)) | set(os.listdir(b)))
    diff = []
    for n in names:
        pa, pb = os.path.join(a, n), os.path.join(b, n)
        if not (os.path.isfile(pa) and os.path.isfile(pb)):
            diff.append(n)
            continue
        with open(pa, "rb") as fa, open(pb, "rb") as fb:
            if fa.read() != fb.read():
                diff.append(n)
    return diff


def determinism(dir_a, dir_b):
    diff = compare_dirs(dir_a, dir_b)
    return CriterionResult(13, not diff, {"files": sorted(os.listdir(dir_a)), "differing": diff})
