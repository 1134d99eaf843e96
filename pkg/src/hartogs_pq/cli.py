"""hartogs-pq: config-driven runner.

Exit codes: 0 ok, 1 config/validation error, 2 solver non-convergence,
3 oracle or verification failure.
"""
import argparse
import os
import sys
import tempfile

import numpy as np

from . import __version__, acceptance, artifacts
from .config import ConfigError, config_hash, load_config
from .diagnostics import (MaskSet, calibrate_hardy_constant, dichotomy_report,
                          dirichlet_growth_test, fine_interior_scan, hardy_littlewood_check)
from .geometry import build_grid, domain_from_dict
from .hartogs import WEAK, classify_point, predicate_weak, sample_boundary_points
from .kernels import BACKEND
from .oracles import exact_identity_table, mc_lattice_suite, orthogonality_suite
from .spectral import SolverParams, sweep_spectra, worker_count
from .weights import weight_from_dict, zero_set

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ORACLE = 0, 1, 2, 3


class Run:
    def __init__(self, cfg, out_dir, subcommand, workers):
        self.cfg = cfg
        self.out = out_dir
        self.sub = subcommand
        self.workers = workers
        self.paths = []

    @property
    def domain(self):
        return domain_from_dict(self.cfg["domain"])

    @property
    def weight(self):
        return weight_from_dict(self.cfg["weight"])

    @property
    def params(self):
        return SolverParams(**self.cfg["solver"])

    @property
    def formats(self):
        return self.cfg["outputs"]["formats"]

    def path(self, name):
        return os.path.join(self.out, name)

    def json(self, name, obj):
        self.paths.append(artifacts.write_json(self.path(name), obj))

    def finish(self, seeds):
        artifacts.write_manifest(self.out, self.sub, config_hash(self.cfg), seeds, self.paths,
                                 BACKEND)


def cmd_spectra(run):
    cfg = run.cfg
    sweep = sweep_spectra(run.domain, run.weight, cfg["sweep"]["m_values"], cfg["grid"]["h"],
                          run.params, run.workers, weight_id=cfg["name"], domain_id=cfg["name"])
    if "csv" in run.formats:
        run.paths.append(artifacts.write_sweep_csv(run.path("spectra.csv"), sweep))
    if "json" in run.formats:
        th = cfg["diagnostics"]["thresholds"]
        summary = {"h": sweep.h, "rows": [r.__dict__ for r in sweep.rows]}
        if len(sweep.rows) >= 4 and any(r.converged for r in sweep.rows):
            summary["verdict"] = dichotomy_report(sweep, th["growth_factor"],
                                                  th["bounded_ratio"]).to_dict()
        run.json("spectra.json", summary)
    run.finish({"solver": cfg["solver"]["seed"]})
    bad = [r.m for r in sweep.rows if not r.converged]
    for r in sweep.rows:
        print(f"m={r.m:g} lambda0={r.lambda_nonmagnetic:.10g} lambda={r.lambda_magnetic:.10g}")
    if bad:
        print(f"solver did not converge for m in {bad}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_classify(run):
    cfg, d = run.cfg, run.cfg["diagnostics"]
    th = d["thresholds"]
    weight, domain = run.weight, run.domain
    out, agree, total = [], 0, 0
    for n in d["n_values"]:
        seed = cfg["solver"]["seed"] + n
        for pt in sample_boundary_points(domain, weight, n, d["boundary_points"], seed,
                                         d["margin"]):
            rep = classify_point(pt, weight, th["levi"])
            pred = predicate_weak(weight, pt.z, th["laplacian"])
            rec = rep.to_record()
            rec["n"] = n
            rec["predicate_weak"] = pred
            rec["agree"] = (rep.classification == WEAK) == pred
            agree += rec["agree"]
            total += 1
            out.append(rec)
    run.json("classify.json", {"tau_levi": th["levi"], "tau_laplacian": th["laplacian"],
                               "points": total, "agree": agree, "records": out})
    run.finish({"sampling": {str(n): cfg["solver"]["seed"] + n for n in d["n_values"]}})
    print(f"{agree}/{total} boundary points agree with the Laplacian predicate")
    return EXIT_OK if agree == total else EXIT_ORACLE


def cmd_property_p(run):
    cfg, d = run.cfg, run.cfg["diagnostics"]
    th = d["thresholds"]
    h = cfg["grid"]["h"]
    rep = dirichlet_growth_test(run.weight, run.domain, d["widths"], h, d["tau"], run.params,
                                th["growth_factor"], th["bounded_exponent"], run.workers)
    grid = build_grid(run.domain, h)
    Z = zero_set(run.weight, grid, d["tau"])
    scan = None
    if Z.any():
        idx = np.argwhere(Z)
        pick = idx[np.linspace(0, len(idx) - 1, min(d["scan_points"], len(idx))).astype(int)]
        pts = [complex(grid.x0 + i * h, grid.y0 + j * h) for i, j in pick]
        scan = fine_interior_scan(MaskSet(grid, Z), pts, d["radii"], d["samples"],
                                  th["fine_interior"]).to_dict()
    if "csv" in run.formats:
        run.paths.append(artifacts.write_growth_csv(run.path("growth.csv"), rep))
    run.json("property_p.json", {"growth": rep.to_dict(), "fine_interior": scan,
                                 "zero_set_nodes": int(Z.sum())})
    run.finish({"solver": cfg["solver"]["seed"]})
    print(f"verdict: {rep.verdict}")
    if not all(rep.converged):
        return EXIT_SOLVER
    return EXIT_OK


def cmd_oracles(run):
    o = run.cfg["oracles"]
    table = exact_identity_table(o["n_max"], o["m_max"])
    mc = mc_lattice_suite(o["samples"], o["seed"], run.workers, o["sigmas"])
    orth = orthogonality_suite(o["pairs"], o["samples"], o["seed"], workers=run.workers,
                               sigmas=o["sigmas"])
    recs = table + mc + orth
    ok = all(r["pass"] for r in recs)
    run.json("oracles.json", {"all_pass": ok, "records": recs})
    run.finish({"oracles": o["seed"]})
    print(f"{sum(r['pass'] for r in recs)}/{len(recs)} oracle checks pass")
    return EXIT_OK if ok else EXIT_ORACLE


def cmd_negnorm(run):
    cfg, d = run.cfg, run.cfg["diagnostics"]
    dom = domain_from_dict(d["hardy_domain"])
    hs = sorted(d["hardy_h"], reverse=True)
    seed = cfg["solver"]["seed"]
    C = calibrate_hardy_constant(dom, hs[-1], d["trials"], seed)
    reps = [hardy_littlewood_check(build_grid(dom, h), d["trials"], seed, C,
                                   d["thresholds"]["hardy_tolerance"]) for h in hs]
    ok = all(r.passed for r in reps)
    run.json("negnorm.json", {"calibrated_constant": C, "all_pass": ok,
                              "reports": [r.to_dict() for r in reps]})
    run.finish({"trials": seed})
    for r in reps:
        print(f"h={r.h:g} ratio={r.ratio:.6g} C={C:.6g} {'pass' if r.passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_ORACLE


def cmd_verify(run, repeat=False):
    cfg = run.cfg
    results, _ = acceptance.run_verify(run.out, cfg, run.workers, log=print)
    ok = all(r.passed for r in results)
    if repeat:
        with tempfile.TemporaryDirectory() as tmp:
            acceptance.run_verify(tmp, cfg, run.workers)
            res = acceptance.determinism(run.out, tmp)
        print(res.line())
        ok &= res.passed
    slow = [r.number for r in results if not r.in_budget]
    if slow:
        print(f"over runtime budget: criteria {slow}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_ORACLE


COMMANDS = {
    "spectra": (cmd_spectra, "smallest eigenvalues over the m sweep (CSV)"),
    "classify": (cmd_classify, "Levi classification of sampled Hartogs boundary points (JSON)"),
    "property-p": (cmd_property_p, "Dirichlet growth test and fine-interior scan (JSON+CSV)"),
    "oracles": (cmd_oracles, "closed-form identities vs exact and Monte Carlo checks (JSON)"),
    "negnorm": (cmd_negnorm, "Hardy-Littlewood check of the discrete H^-1 norm (JSON)"),
    "verify": (cmd_verify, "run the bundled acceptance suite"),
}


def parser():
    p = argparse.ArgumentParser(prog="hartogs-pq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="JSON config path or bundled preset name")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted override, value parsed as JSON when possible")
        s.add_argument("--out", help="output directory (default: outputs.directory)")
        s.add_argument("--workers", type=int, help="worker cap (PQ_WORKERS also applies)")
        if name == "verify":
            s.add_argument("--repeat", action="store_true",
                           help="run twice and compare artifacts byte for byte")
    return p


def main(argv=None):
    args = parser().parse_args(argv)
    try:
        if args.command == "verify" and args.config is None:
            cfg = acceptance.verify_config(args.set)
        else:
            cfg = load_config(args.config, args.set)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg["outputs"]["directory"]
    run = Run(cfg, out, args.command, worker_count(args.workers))
    fn = COMMANDS[args.command][0]
    try:
        if args.command == "verify":
            return fn(run, args.repeat)
        return fn(run)
    except ArithmeticError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
