"""Command-line front door.

Exit codes: 0 all checks pass, 1 some check failed, 2 usage error,
3 configuration or input error, 4 runtime or numerical abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional

import numpy as np

from . import __version__
from .report import emit_report, load_report, merge_reports
from .suites import (GH_PROBES, SUITE_NAMES, TWO_CENTER, ConfigError, Recorder, Report, RunConfig,
                     bpst_checks, ec_fixture_checks, gh_checks, selfduality_trials, load_config, run_suite)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3, 4
log = logging.getLogger("geomlab")


# ---------------------------------------------------------------------------
# argument types


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}")
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v
    return parse


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer: {text!r}")
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _points(width):
    def parse(text):
        try:
            rows = [[float(v) for v in part.split(",")] for part in text.split(";") if part.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad point list: {text!r}")
        if not rows or any(len(r) != width for r in rows):
            raise argparse.ArgumentTypeError(f"expected ';'-separated points with {width} coordinates")
        return np.array(rows)
    return parse


def _floats(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list: {text!r}")


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=None, help="64-bit seed (default 0)")
    common.add_argument("--tol-scale", type=_positive(float), default=None,
                        help="multiply numerical tolerances by this factor")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--timings", action="store_true", help="include per-check wall time")

    p = argparse.ArgumentParser(prog="geomlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=SUITE_NAMES)
    v.add_argument("--config", default=None, help="INI file with [run] and per-suite sections")

    d = sub.add_parser("dbar", help="matrix dbar problem").add_subparsers(dest="action", required=True)
    ds = d.add_parser("solve", parents=[common], help="solve dG/dzbar = G A by the Neumann series")
    src = ds.add_mutually_exclusive_group()
    src.add_argument("--fixture", choices=("nilpotent", "noncommuting"), default="nilpotent")
    src.add_argument("--input", default=None, help="grid JSON with a matrix payload for A")
    ds.add_argument("--grid", type=_positive(int), default=64)
    ds.add_argument("--half-width", type=_positive(float), default=1.0)
    ds.add_argument("--refine", action="store_true", help="also solve on 2x and 4x grids and report orders")
    ds.add_argument("--solution", default=None, help="write G as grid JSON")

    s = sub.add_parser("sigma", help="sigma-model fields").add_subparsers(dest="action", required=True)
    sc = s.add_parser("classify", parents=[common], help="classify one projector field")
    g = sc.add_mutually_exclusive_group(required=True)
    g.add_argument("--field", help="grid JSON with a matrix payload")
    g.add_argument("--fixture", help="name of a builtin fixture")
    sc.add_argument("--grid", type=_positive(int), default=64)
    sc.add_argument("--expect", choices=("holomorphic", "antiholomorphic", "neither"))
    sr = s.add_parser("report", parents=[common], help="full diagnostics for fixtures")
    sr.add_argument("--fixtures", nargs="+", default=["builtin"], help="'builtin' or grid JSON files")
    sr.add_argument("--grid", type=_positive(int), default=64)

    j = sub.add_parser("jspace", help="complex structures").add_subparsers(dest="action", required=True)
    jl = j.add_parser("lemma77", parents=[common], help="self-duality versus pure-type criterion")
    jl.add_argument("--ell", type=int, choices=(1, 2, 3, 4), default=2)
    jl.add_argument("--samples", type=_positive(int), default=200)
    jl.add_argument("--trials", type=_positive(int), default=3)

    sp = sub.add_parser("spinor", help="pure spinors").add_subparsers(dest="action", required=True)
    sp_rt = sp.add_parser("roundtrip", parents=[common], help="J -> vacuum -> J roundtrip")
    sp_rt.add_argument("--ell", type=int, choices=(1, 2, 3, 4, 5, 6), default=3)
    sp_rt.add_argument("--samples", type=_positive(int), default=50)

    c = sub.add_parser("curvlab", help="curvature checks").add_subparsers(dest="action", required=True)
    gh = c.add_parser("gh", parents=[common], help="multi-center Gibbons-Hawking metric")
    gh.add_argument("--epsilon", type=float, default=TWO_CENTER["epsilon"])
    gh.add_argument("--centers", type=_points(3), default=np.array(TWO_CENTER["centers"]))
    gh.add_argument("--masses", type=_floats, default=TWO_CENTER["masses"])
    gh.add_argument("--probe", type=_points(3), default=GH_PROBES, help="'x,y,z;x,y,z;...'")
    gh.add_argument("--report", action="store_true", help="include per-probe measurements")

    ga = sub.add_parser("gauge", help="gauge and Einstein-Cartan checks").add_subparsers(dest="action", required=True)
    gb = ga.add_parser("bpst", parents=[common], help="BPST instanton")
    gb.add_argument("--rho", type=_positive(float), default=1.0)
    gb.add_argument("--probes", type=_positive(int), default=100)
    gb.add_argument("--radius", type=_positive(float), default=50.0, help="charge radius in units of rho")
    gt = ga.add_parser("tau", parents=[common], help="tau/sigma forms of a frame fixture")
    gt.add_argument("--metric", required=True, help="JSON fixture description")

    r = sub.add_parser("report", parents=[common], help="merge and re-emit JSON reports")
    r.add_argument("inputs", nargs="+")
    return p


# ---------------------------------------------------------------------------
# helpers


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc


def _read_grid(path: str):
    from .tensor_core import GridField
    try:
        with open(path, encoding="utf-8") as fh:
            return GridField.from_json(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"malformed grid file {path}: {exc}") from exc


def _as_config(fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# commands


def cmd_verify(a, rec):
    cfg = load_config(a.config) if a.config else RunConfig()
    seed = a.seed if a.seed is not None else (cfg.seed if cfg.seed is not None else 0)
    scale = a.tol_scale if a.tol_scale is not None else (cfg.tol_scale if cfg.tol_scale is not None else 1.0)
    return run_suite(a.suite, seed, scale, cfg)


def cmd_dbar_solve(a, rec):
    from .dbar import BUILTIN_POTENTIALS, ComplexGridFunction, gauge_residual, gauge_solve
    if a.input:
        if a.refine:
            raise _Usage("--refine needs a builtin fixture, not --input")
        A = _as_config(ComplexGridFunction.from_grid_field, _read_grid(a.input))
        grids, source = [A.m], a.input
    else:
        grids = [a.grid * 2 ** k for k in range(3 if a.refine else 1)]
        source = a.fixture
    res, sol = [], None
    for m in grids:
        if not a.input:
            A = ComplexGridFunction.from_function(BUILTIN_POTENTIALS[a.fixture], m, a.half_width)
        sol = gauge_solve(A)
        res.append(gauge_residual(sol, A))
        rec.measure(f"dbar.solve.residual_m{m}", res[-1])
    rec.measure("dbar.solve.iterations", len(sol.ratios))
    rec.measure("dbar.solve.support_radius", sol.quadrature.support_radius or 0.0)
    rec.below("dbar.solve.contraction_bound", sol.K, 0.5, "paper", "dbar/neumann-contraction", scaled=False)
    rec.below("dbar.solve.max_ratio", max(sol.ratios, default=0.0), 0.5, "paper", "dbar/neumann-contraction",
              scaled=False)
    rec.holds("dbar.solve.iterates_within_bound", sol.bound_ok, "paper", "dbar/neumann-contraction")
    if a.refine:
        orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
        rec.above("dbar.solve.order_min", float(orders.min()), 1.0, "derived-oracle", "dbar/manufactured-gauge")
    if a.solution:
        with open(a.solution, "w", encoding="utf-8") as fh:
            fh.write(sol.G.to_grid_field().to_json())
    return {"source": source, "grids": grids, "half_width": a.half_width}


def _sigma_field(a):
    from .sigma import ProjectorField, builtin_fixtures
    if a.field:
        return a.field, _as_config(ProjectorField.from_grid_field, _read_grid(a.field))
    fx = builtin_fixtures(a.grid)
    if a.fixture not in fx:
        raise ConfigError(f"unknown fixture {a.fixture!r}; choose from {', '.join(sorted(fx))}")
    return a.fixture, fx[a.fixture]


def cmd_sigma_classify(a, rec):
    from .sigma import harmonic_residual, holomorphy_classify
    name, f = _sigma_field(a)
    c = holomorphy_classify(f)
    rec.measure("sigma.classify.label", c.label)
    rec.measure("sigma.classify.degenerate", bool(c.degenerate))
    rec.measure("sigma.classify.holomorphic_residual", c.holomorphic_residual)
    rec.measure("sigma.classify.antiholomorphic_residual", c.antiholomorphic_residual)
    rec.measure("sigma.classify.harmonic_residual", harmonic_residual(f))
    if a.expect:
        rec.holds(f"sigma.classify.is_{a.expect}", c.label == a.expect, "derived-oracle", "sigma/holomorphy-classes")
    return {"field": name, "grid": list(f.shape)}


SIGMA_EXPECTED = {"cp1-holomorphic": "holomorphic", "cp1-antiholomorphic": "antiholomorphic",
                  "cp1-nonharmonic": "neither", "cp2-veronese-middle": "neither"}
SIGMA_DEGREES = {"cp1-degree-one-large": 1, "cp1-degree-two-large": 2}


def cmd_sigma_report(a, rec):
    from .sigma import ProjectorField, builtin_fixtures, sigma_report
    fields = {}
    for spec in a.fixtures:
        if spec == "builtin":
            fields.update(builtin_fixtures(a.grid))
        else:
            fields[spec] = _as_config(ProjectorField.from_grid_field, _read_grid(spec))
    for name, f in fields.items():
        rep = sigma_report(f, name).to_dict()
        for key, val in rep.items():
            if key != "name":
                rec.measure(f"sigma.{name}.{key}", val if not isinstance(val, bool) else int(val))
        if name in SIGMA_EXPECTED:
            rec.holds(f"sigma.{name}.classification", rep["classification"] == SIGMA_EXPECTED[name],
                      "derived-oracle", "sigma/holomorphy-classes")
        if name in SIGMA_DEGREES:
            rec.below(f"sigma.{name}.charge_integer_distance", abs(rep["topological_charge"] - SIGMA_DEGREES[name]),
                      0.02, "paper", "sigma/charge-integral")
    return {"fixtures": list(a.fixtures), "grid": a.grid}


def cmd_jspace_selfduality(a, rec):
    selfduality_trials(rec, a.ell, a.samples, a.seed or 0, a.trials)
    return {"ell": a.ell, "samples": a.samples, "trials": a.trials}


def cmd_spinor_roundtrip(a, rec):
    from .spinor import spinor_roundtrip
    rt = spinor_roundtrip(a.ell, a.samples, a.seed or 0)
    anchor = "spinor/pure-spinor-correspondence"
    rec.below(f"spinor.l{a.ell}.roundtrip_j_error", rt.max_j_error, 1e-9, "paper", anchor)
    rec.below(f"spinor.l{a.ell}.roundtrip_direction_error", rt.max_direction_error, 1e-9, "paper", anchor)
    return {"ell": a.ell, "samples": a.samples}


def cmd_curvlab_gh(a, rec):
    from .curvlab import GibbonsHawkingData, curvature, gibbons_hawking_chart, selfduality_parts
    if len(a.masses) != len(a.centers):
        raise _Usage("--masses needs one value per center")
    data = _as_config(GibbonsHawkingData, a.epsilon, a.centers, a.masses)
    gh_checks(rec, data, a.probe, "curvlab.gh")
    if a.report:
        chart = gibbons_hawking_chart(data)
        for i, y in enumerate(a.probe):
            cp = curvature(chart, np.r_[0.0, y])
            Rf = cp.frame_riemann()
            nrm = float(np.linalg.norm(Rf))
            sd, asd = selfduality_parts(Rf)
            rec.measure(f"curvlab.gh.probe{i:03d}.riemann_norm", nrm)
            rec.measure(f"curvlab.gh.probe{i:03d}.ricci_norm", cp.frame_ricci_norm())
            rec.measure(f"curvlab.gh.probe{i:03d}.self_dual_norm", float(np.linalg.norm(sd)))
            rec.measure(f"curvlab.gh.probe{i:03d}.anti_self_dual_norm", float(np.linalg.norm(asd)))
    return {"epsilon": a.epsilon, "centers": a.centers.tolist(), "masses": list(a.masses),
            "probes": np.atleast_2d(a.probe).tolist()}


def cmd_gauge_bpst(a, rec):
    rng = np.random.default_rng(a.seed or 0)
    bpst_checks(rec, a.rho, a.probes, rng, a.radius)
    return {"rho": a.rho, "probes": a.probes, "radius": a.radius}


TAU_FIXTURES = {
    "flat": ({}, True),
    "schwarzschild": ({"mass": 1.0}, True),
    "gibbons-hawking": ({"epsilon": 1.0, "centers": TWO_CENTER["centers"], "masses": TWO_CENTER["masses"]}, True),
    "round-sphere": ({"radius": 1.0}, False),
    "random": ({"seed": 0, "amplitude": 0.15}, None),
}


def build_tau_fixture(doc: dict):
    """Frame section and default point from a JSON fixture description."""
    from .curvlab import GibbonsHawkingData
    from .gaugelab import (conformal_sphere_section, flat_section, gibbons_hawking_section, random_section,
                           schwarzschild_section)
    if not isinstance(doc, dict) or "fixture" not in doc:
        raise ConfigError("fixture file must be a JSON object with a 'fixture' key")
    kind = doc["fixture"]
    if kind not in TAU_FIXTURES:
        raise ConfigError(f"unknown fixture {kind!r}; choose from {', '.join(TAU_FIXTURES)}")
    defaults, vacuum = TAU_FIXTURES[kind]
    extra = set(doc) - set(defaults) - {"fixture", "points", "expect"}
    if extra:
        raise ConfigError(f"unknown keys for {kind}: {', '.join(sorted(extra))}")
    p = {**defaults, **{k: doc[k] for k in defaults if k in doc}}
    point = np.array([0.1, 0.3, 0.9, 0.4])
    if kind == "flat":
        sec = flat_section()
    elif kind == "schwarzschild":
        sec = _as_config(schwarzschild_section, float(p["mass"]))
        point = np.array([0.1, 3.0, 1.0, 0.5]) * max(1.0, float(p["mass"]))
    elif kind == "gibbons-hawking":
        sec = gibbons_hawking_section(_as_config(GibbonsHawkingData, float(p["epsilon"]), p["centers"], p["masses"]))
    elif kind == "round-sphere":
        sec = _as_config(conformal_sphere_section, float(p["radius"]))
    else:
        sec = random_section(np.random.default_rng(int(p["seed"])), float(p["amplitude"]))
    if "expect" in doc:
        if doc["expect"] not in ("vacuum", "non-vacuum"):
            raise ConfigError("expect must be 'vacuum' or 'non-vacuum'")
        vacuum = doc["expect"] == "vacuum"
    try:
        points = np.array(doc["points"], dtype=float) if "points" in doc else point[None]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad points: {exc}") from exc
    if points.ndim != 2 or points.shape[1] != 4:
        raise ConfigError("points must be a list of 4-vectors")
    return kind, p, sec, points, vacuum


def cmd_gauge_tau(a, rec):
    from .curvlab import curvature
    from .gaugelab import section_metric_chart
    kind, p, sec, points, vacuum = build_tau_fixture(_read_json(a.metric))
    prov = "trivial" if kind == "flat" else "derived-oracle"
    for i, x in enumerate(points):
        prefix = f"ec.{kind}.point{i:03d}"
        if vacuum and kind != "flat":
            cp = curvature(section_metric_chart(sec), x)
            rec.below(f"{prefix}.metric_ricci_ratio", cp.frame_ricci_norm() / max(1.0, cp.norm()), 1e-6,
                      "derived-oracle", "ec/vacuum-fixture")
        ec_fixture_checks(rec, prefix, sec, x, vacuum, prov)
    return {"fixture": kind, **p, "points": points.tolist()}


def cmd_report(a, rec):
    return merge_reports([load_report(path) for path in a.inputs])


COMMANDS = {
    ("verify", None): cmd_verify,
    ("dbar", "solve"): cmd_dbar_solve,
    ("sigma", "classify"): cmd_sigma_classify,
    ("sigma", "report"): cmd_sigma_report,
    ("jspace", "lemma77"): cmd_jspace_selfduality,
    ("spinor", "roundtrip"): cmd_spinor_roundtrip,
    ("curvlab", "gh"): cmd_curvlab_gh,
    ("gauge", "bpst"): cmd_gauge_bpst,
    ("gauge", "tau"): cmd_gauge_tau,
    ("report", None): cmd_report,
}


class _Usage(Exception):
    pass


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    action = getattr(a, "action", None)
    label = " ".join(x for x in (a.command, action) if x)
    try:
        rec = Recorder(a.tol_scale if a.tol_scale is not None else 1.0)
        out = COMMANDS[(a.command, action)](a, rec)
        if isinstance(out, Report):
            report = out
        else:
            report = Report(label, a.seed if a.seed is not None else 0, rec.tol_scale, rec.checks,
                            rec.measurements, out)
        emit_report(report, a.format, a.out, a.timings)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"geomlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"geomlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # numerical aborts and IO failures, reported verbatim
        log.debug("aborted", exc_info=True)
        print(f"geomlab: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    failed = [c.name for c in report.checks if not c.passed]
    summary = f"{report.command}: {len(report.checks) - len(failed)}/{len(report.checks)} checks passed"
    print(summary + (f" -> {a.out}" if a.out else ""), file=sys.stderr)
    for name in sorted(failed):
        print(f"  FAIL {name}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
