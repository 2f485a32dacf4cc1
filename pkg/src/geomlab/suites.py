"""Verification suites: named checks with bounds, provenance tags and claim anchors.

A suite is a function ``(recorder, rng, params)`` that measures quantities and
records them as checks.  Numerical tolerances (upper bounds on residuals) are
multiplied by the run's ``tol_scale``; structural thresholds (contraction
bounds, convergence orders, exact counts) are not.

Anchors are stable claim identifiers.  Each check name maps to exactly one
anchor, which is recorded in the report metadata.
"""

from __future__ import annotations

import configparser
import itertools
import math
import time
import zlib
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

PROVENANCE = ("paper", "trivial", "derived-oracle")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    lower: Optional[float]
    upper: Optional[float]
    provenance: str
    anchor: str
    runtime: float = 0.0

    def __post_init__(self):
        if self.provenance not in PROVENANCE:
            raise ValueError(f"unknown provenance tag {self.provenance!r}")

    @property
    def passed(self) -> bool:
        v = self.value
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return False
        return (self.lower is None or v >= self.lower) and (self.upper is None or v <= self.upper)


@dataclass
class Report:
    command: str
    seed: Optional[int]
    tol_scale: float
    checks: list = field(default_factory=list)
    measurements: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def sorted_checks(self) -> list:
        return sorted(self.checks, key=lambda c: c.name)


class Recorder:
    """Collects checks and measurements for one suite or command."""

    def __init__(self, tol_scale: float = 1.0):
        if not tol_scale > 0:
            raise ConfigError("tol-scale must be positive")
        self.tol_scale = float(tol_scale)
        self.checks: list = []
        self.measurements: dict = {}
        self._names: set = set()
        self._clock = time.perf_counter()

    def _add(self, name, value, lower, upper, provenance, anchor):
        if name in self._names:
            raise ValueError(f"duplicate check name {name!r}")
        now = time.perf_counter()
        self._names.add(name)
        self.checks.append(Check(name, _num(value), lower, upper, provenance, anchor, now - self._clock))
        self._clock = now

    def below(self, name, value, tol, provenance, anchor, scaled: bool = True):
        self._add(name, value, None, tol * self.tol_scale if scaled else tol, provenance, anchor)

    def above(self, name, value, bound, provenance, anchor):
        self._add(name, value, bound, None, provenance, anchor)

    def between(self, name, value, lo, hi, provenance, anchor):
        self._add(name, value, lo, hi, provenance, anchor)

    def equal(self, name, value, expected, provenance, anchor):
        self._add(name, value, expected, expected, provenance, anchor)

    def holds(self, name, flag, provenance, anchor):
        self._add(name, int(bool(flag)), 1, 1, provenance, anchor)

    def measure(self, name, value):
        self.measurements[name] = _num(value) if not isinstance(value, str) else value
        self._clock = time.perf_counter()


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def suite_rng(seed: int, name: str) -> np.random.Generator:
    """Per-suite stream: independent of which other suites run and in what order."""
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


def _int_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2 ** 31))


def _orders(res) -> np.ndarray:
    r = np.asarray(res, dtype=float)
    return np.log2(r[:-1] / r[1:])


# ---------------------------------------------------------------------------
# spencer


def riemann_symmetry_dim(n: int) -> int:
    """Brute-force dimension of algebraic curvature tensors on R^n (linear constraints)."""
    idx = lambda a, b, c, d: ((a * n + b) * n + c) * n + d
    rows = []
    for a, b, c, d in itertools.product(range(n), repeat=4):
        for other, sgn in (((b, a, c, d), 1), ((a, b, d, c), 1), ((c, d, a, b), -1)):
            r = np.zeros(n ** 4)
            r[idx(a, b, c, d)] += 1
            r[idx(*other)] += sgn
            rows.append(r)
        r = np.zeros(n ** 4)
        r[idx(a, b, c, d)] += 1
        r[idx(a, c, d, b)] += 1
        r[idx(a, d, b, c)] += 1
        rows.append(r)
    return n ** 4 - int(np.linalg.matrix_rank(np.array(rows)))


def suite_spencer(rec: Recorder, rng, p: dict):
    from .spencer import gl, o, spencer_cohomology_dim
    top = p["max_total"]
    for n in p["gl_dims"]:
        g = gl(n)
        for r in range(top + 1):
            for s in range(min(n, top - r) + 1):
                if r + s:
                    rec.equal(f"spencer.gl{n}.H_{r}_{s}", spencer_cohomology_dim(g, r, s), 0,
                              "paper", "spencer/gl-acyclic")
    for n in p["o_dims"]:
        rec.equal(f"spencer.o{n}.H_0_2", spencer_cohomology_dim(o(n), 0, 2), 0, "paper", "spencer/orthogonal-h02")
    oracle = riemann_symmetry_dim(4)
    rec.measure("spencer.o4.H_1_2.oracle", oracle)
    rec.equal("spencer.o4.H_1_2", spencer_cohomology_dim(o(4), 1, 2), oracle,
              "derived-oracle", "spencer/orthogonal-h12")


# ---------------------------------------------------------------------------
# dbar


def suite_dbar(rec: Recorder, rng, p: dict):
    from .dbar import BUILTIN_POTENTIALS, ComplexGridFunction, gauge_residual, gauge_solve
    for name in ("nilpotent", "noncommuting"):
        res = []
        for m in p["grids"]:
            A = ComplexGridFunction.from_function(BUILTIN_POTENTIALS[name], m, p["half_width"])
            r = gauge_residual(gauge_solve(A), A)
            rec.measure(f"dbar.{name}.residual_m{m}", r)
            res.append(r)
        if name == "nilpotent":
            rec.below(f"dbar.{name}.residual_finest", res[-1], 1e-3, "derived-oracle", "dbar/manufactured-gauge")
        rec.above(f"dbar.{name}.order_min", float(_orders(res).min()), 1.0, "derived-oracle",
                  "dbar/manufactured-gauge")
    A = ComplexGridFunction.from_function(BUILTIN_POTENTIALS["noncommuting"], p["neumann_grid"], p["half_width"])
    sol = gauge_solve(A)
    rec.measure("dbar.neumann.iterations", len(sol.ratios))
    rec.below("dbar.neumann.contraction_bound", sol.K, 0.5, "paper", "dbar/neumann-contraction", scaled=False)
    rec.below("dbar.neumann.max_ratio", max(sol.ratios), 0.5, "paper", "dbar/neumann-contraction", scaled=False)
    rec.holds("dbar.neumann.iterates_within_bound", sol.bound_ok, "paper", "dbar/neumann-contraction")


# ---------------------------------------------------------------------------
# projgeo


def _psi_family(amp: float = 0.2):
    rng = np.random.default_rng(0)
    A, B, C = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))

    def Zf(t):
        x, y, z = (t[..., i, None, None] for i in range(3))
        return amp * (A * np.sin(x) + B * y * x + C * np.cos(z + y))
    return Zf


def suite_projgeo(rec: Recorder, rng, p: dict):
    from .projgeo import (almost_complex, chart_family_field, chart_of, complex_hessian, fundamental_form_closure,
                          kahler_potential, metric_from_chart, projector_from_chart, ricci_from_potential,
                          tangent_project)
    herm = idem = trace = trip = tang = jsq = 0.0
    for _ in range(p["draws"]):
        for N, k in ((2, 1), (3, 1), (4, 2), (5, 2)):
            Z = rng.normal(size=(N - k, k)) + 1j * rng.normal(size=(N - k, k))
            P = projector_from_chart(Z)
            M = P.matrix
            herm = max(herm, np.abs(M - M.conj().T).max())
            idem = max(idem, np.abs(M @ M - M).max())
            trace = max(trace, abs(np.trace(M) - k))
            trip = max(trip, np.abs(chart_of(P) - Z).max() / max(1.0, np.abs(Z).max()))
            H = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
            T = tangent_project(P, H + H.conj().T)
            tang = max(tang, np.abs(tangent_project(P, T) - T).max() / max(1.0, np.abs(T).max()))
            jsq = max(jsq, np.abs(almost_complex(P, almost_complex(P, T)) + T).max() / max(1.0, np.abs(T).max()))
    anchor = "projgeo/projector-model"
    rec.below("projgeo.projector.hermitian_residual", herm, 1e-10, "trivial", anchor)
    rec.below("projgeo.projector.idempotent_residual", idem, 1e-10, "paper", anchor)
    rec.below("projgeo.projector.trace_residual", trace, 1e-10, "paper", anchor)
    rec.below("projgeo.chart.roundtrip_residual", trip, 1e-10, "derived-oracle", "projgeo/chart")
    rec.below("projgeo.tangent.projection_idempotent_residual", tang, 1e-10, "paper", "projgeo/tangent-space")
    rec.below("projgeo.tangent.complex_structure_square_residual", jsq, 1e-10, "paper", "projgeo/tangent-space")

    worst = abs(complex_hessian(kahler_potential, np.zeros((1, 1)), 1e-3)[0, 0] - metric_from_chart(np.zeros((1, 1)))[0, 0])
    for N, k in ((2, 1), (3, 1), (4, 2)):
        Z = 0.5 * (rng.normal(size=(N - k, k)) + 1j * rng.normal(size=(N - k, k)))
        worst = max(worst, np.abs(complex_hessian(kahler_potential, Z, 1e-2) - metric_from_chart(Z)).max())
    rec.below("projgeo.kahler.potential_vs_metric", worst, 1e-6, "derived-oracle", "projgeo/kahler-potential")

    Zf = _psi_family()
    r = [fundamental_form_closure(chart_family_field(Zf, [(0, 1)] * 3, (m + 1,) * 3)) for m in p["psi_grids"]]
    rec.measure("projgeo.psi.closure_finest", r[-1])
    rec.between("projgeo.psi.refinement_ratio", r[-2] / r[-1], 3.5, 4.5, "derived-oracle", "projgeo/psi-closed")

    ratios = []
    for z in p["einstein_points"]:
        Z = np.array([[z]])
        ratios.append((ricci_from_potential(kahler_potential, Z)[0, 0] / complex_hessian(kahler_potential, Z)[0, 0]).real)
    rec.measure("projgeo.einstein.ratio_mean", float(np.mean(ratios)))
    rec.below("projgeo.einstein.ratio_spread", max(ratios) - min(ratios), 1e-3, "paper", "projgeo/fubini-study-einstein")


# ---------------------------------------------------------------------------
# sigma


def suite_sigma(rec: Recorder, rng, p: dict):
    from .sigma import (ProjectorField, cubic_identity_residual, harmonic_residual, holomorphy_classify,
                        nilpotency_order, stress_holomorphy, topological_charge, veronese_frame)
    box = ((-1.0, 1.0), (-1.0, 1.0))
    chart = lambda fn, m, b=box: ProjectorField.from_chart(
        lambda z, w: np.asarray(fn(np.asarray(z), np.asarray(w)))[..., None, None], b, (m, m))
    m = p["grid"]
    worst = 0.0
    for fn in (lambda z, w: z, lambda z, w: z + 0.3 * w ** 2, lambda z, w: np.sin(z) * w):
        for d in ((0.5, -0.5j), (1.0, 0.0), (0.3 + 0.1j, -0.7)):
            worst = max(worst, cubic_identity_residual(chart(fn, 24), d))
    worst = max(worst, cubic_identity_residual(ProjectorField.from_frame(veronese_frame(1), box, (24, 24))))
    rec.below("sigma.cubic_identity.max_residual", worst, 1e-9, "paper", "sigma/cubic-identity")

    def rank_two(z, w):
        z = np.asarray(z)
        return np.stack([np.stack([z, z ** 2], -1), np.stack([1 + 0 * z, z ** 3], -1)], -2)
    fixtures = {
        "holomorphic": [chart(lambda z, w: z, 64), chart(lambda z, w: z ** 2, 64),
                        ProjectorField.from_chart(rank_two, box, (24, 24)),
                        ProjectorField.from_frame(veronese_frame(0), box, (64, 64))],
        "antiholomorphic": [chart(lambda z, w: w, 64), ProjectorField.from_frame(veronese_frame(2), box, (64, 64))],
    }
    for label, fields in fixtures.items():
        wrong = sum(holomorphy_classify(f).label != label for f in fields)
        neither = sum(holomorphy_classify(f).label == "neither" for f in fields)
        rec.equal(f"sigma.classify.{label}.misclassified", wrong, 0, "paper", "sigma/holomorphy-classes")
        rec.equal(f"sigma.classify.{label}.false_neither", neither, 0, "paper", "sigma/holomorphy-classes")

    for k, R in ((1, 16.0), (2, 8.0)):
        q = topological_charge(chart(lambda z, w, k=k: z ** k, m, ((-R, R), (-R, R)))).value
        rec.measure(f"sigma.charge.degree{k}", q)
        rec.below(f"sigma.charge.degree{k}.integer_distance", abs(q - k), 0.02, "paper", "sigma/charge-integral")
    q8 = topological_charge(chart(lambda z, w: z, 96, ((-8, 8), (-8, 8)))).value
    q16 = topological_charge(chart(lambda z, w: z, 192, ((-16, 16), (-16, 16)))).value
    rec.holds("sigma.charge.degree1.converges_with_domain", abs(q16 - 1) < abs(q8 - 1), "derived-oracle",
              "sigma/charge-integral")

    v = ProjectorField.from_frame(veronese_frame(1), box, (m, m))
    anchor = "sigma/cp2-harmonic-sequence"
    rec.below("sigma.cp2.harmonic_residual", harmonic_residual(v), 1e-6, "derived-oracle", anchor)
    rec.holds("sigma.cp2.classified_neither", holomorphy_classify(v).label == "neither", "paper", anchor)
    rec.equal("sigma.cp2.nilpotency_order", nilpotency_order(v), 3, "paper", anchor)
    rec.below("sigma.cp2.stress_holomorphy", stress_holomorphy(v, trace_differences=True).value, 1e-3,
              "paper", "sigma/stress-holomorphic")


# ---------------------------------------------------------------------------
# jspace


def selfduality_trials(rec: Recorder, ell: int, samples: int, seed: int, trials: int = 3):
    """Split random middle forms into both duality parts and test the criterion on each."""
    from .jspace import duality_split, selfduality_batch
    from math import comb
    rng = np.random.default_rng(seed)
    size = comb(2 * ell, ell)
    forms, kinds = [], []
    for t in range(trials):
        w = rng.normal(size=size) + 1j * rng.normal(size=size)
        wp, wm = duality_split(w, ell)
        forms += [wp, wm, w]
        kinds += [("plus", t), ("minus", t), ("mixed", t)]
    reps = selfduality_batch(forms, samples, _int_seed(rng))
    plus_res = max(r.max_plus for r, (k, _) in zip(reps, kinds) if k == "plus")
    minus_res = max(r.max_minus for r, (k, _) in zip(reps, kinds) if k == "minus")
    mixed = [r for r, (k, _) in zip(reps, kinds) if k == "mixed"]
    found = sum(r.violating_plus is not None and r.violating_minus is not None for r in mixed)
    anchor = "jspace/selfduality-pure-type"
    rec.below(f"jspace.l{ell}.plus_part.vanishing_residual", plus_res, 1e-9, "paper", anchor)
    rec.below(f"jspace.l{ell}.minus_part.vanishing_residual", minus_res, 1e-9, "paper", anchor)
    rec.equal(f"jspace.l{ell}.mixed.trials_with_violating_J", found, trials, "paper", anchor)
    rec.equal(f"jspace.l{ell}.inconsistent_reports", sum(not r.consistent for r in reps), 0, "paper", anchor)


def suite_jspace(rec: Recorder, rng, p: dict):
    for ell in p["ells"]:
        selfduality_trials(rec, ell, p["samples"], _int_seed(rng), p["trials"])


# ---------------------------------------------------------------------------
# spinor


def suite_spinor(rec: Recorder, rng, p: dict):
    from .jspace import random_isometric, standard_j
    from .spinor import (annihilator, antiholomorphic_basis, build_gamma, fock_pack, is_simple,
                         random_chiral_spinor, spinor_roundtrip, vacuum_from_J)
    for ell in range(1, p["max_ell"] + 1):
        rep = build_gamma(ell)
        rec.below(f"spinor.l{ell}.clifford_residual", rep.clifford_residual(), 1e-12, "paper", "spinor/clifford")
        rec.equal(f"spinor.l{ell}.commutant_dimension", rep.commutant_dimension(), 1, "paper", "spinor/clifford")
    ell = p["roundtrip_ell"]
    rt = spinor_roundtrip(ell, p["samples"], _int_seed(rng))
    rec.below(f"spinor.l{ell}.roundtrip_j_error", rt.max_j_error, 1e-9, "paper", "spinor/pure-spinor-correspondence")
    rec.below(f"spinor.l{ell}.roundtrip_direction_error", rt.max_direction_error, 1e-9, "paper",
              "spinor/pure-spinor-correspondence")
    rep3 = build_gamma(3)
    n = p["chiral_samples"]
    simple = sum(is_simple(rep3, random_chiral_spinor(rep3, rng, 1 if i % 2 == 0 else -1)) for i in range(n))
    rec.equal("spinor.l3.simple_semispinors", simple, n, "paper", "spinor/low-dimension-pure")
    rep4 = build_gamma(4)
    rec.holds("spinor.l4.generic_semispinor_not_simple",
              not annihilator(rep4, random_chiral_spinor(rep4, rng)).simple, "paper", "spinor/low-dimension-pure")
    rec.holds("spinor.l4.vacuum_simple", is_simple(rep4, vacuum_from_J(rep4, standard_j(4))), "trivial",
              "spinor/low-dimension-pure")
    for ell in (2, 3):
        rep = build_gamma(ell)
        J = random_isometric(ell, rng)
        psi = vacuum_from_J(rep, J)
        images = np.array([fock_pack(rep, J, f, psi) for f in antiholomorphic_basis(J)])
        gram = np.abs(images.conj() @ images.T - np.eye(rep.dim)).max()
        rec.below(f"spinor.l{ell}.fock_gram_residual", gram, 1e-10, "paper", "spinor/fock-isometry")


# ---------------------------------------------------------------------------
# curvlab

TWO_CENTER = dict(epsilon=1.0, centers=[[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0]], masses=[1.0, 1.0])
GH_PROBES = np.array([[0.1, 0.5, 0.3], [-0.7, 0.4, -0.6], [0.9, 0.8, 0.2], [0.0, 0.35, -0.9], [1.5, -0.9, 0.4]])


def gh_checks(rec: Recorder, data, probes, prefix: str):
    from .curvlab import curl_residual, hyperkahler_probe
    hk = hyperkahler_probe(data, probes)
    rec.measure(f"{prefix}.min_curvature_scale", hk.min_scale)
    rec.measure(f"{prefix}.max_riemann", hk.max_riemann)
    rec.below(f"{prefix}.curl_residual", curl_residual(data, probes), 1e-10, "paper", "curvlab/gh-monopole")
    if hk.min_scale > 0:
        rec.below(f"{prefix}.ricci_ratio", hk.max_ricci_ratio, 1e-3, "paper", "curvlab/gh-ricci-flat")
        rec.below(f"{prefix}.wrong_duality_ratio", hk.max_asd_ratio, 1e-3, "paper", "curvlab/gh-half-flat")
    return hk


def suite_curvlab(rec: Recorder, rng, p: dict):
    from .curvlab import GibbonsHawkingData, asd_triplet_closure, curvature, gibbons_hawking_chart
    one = GibbonsHawkingData(0.0, [[0.0, 0.0, 0.0]], [1.0])
    ch = gibbons_hawking_chart(one)
    worst = max(curvature(ch, np.r_[0.0, y]).norm() for y in GH_PROBES)
    rec.below("curvlab.gh1.riemann_norm", worst, 1e-6, "paper", "curvlab/gh-one-center-flat")
    two = GibbonsHawkingData(**TWO_CENTER)
    gh_checks(rec, two, GH_PROBES, "curvlab.gh2")
    box = [tuple(b) for b in p["closure_box"]]
    res = [asd_triplet_closure(two, box, m, order=p["closure_order"]) for m in p["closure_grids"]]
    rec.measure("curvlab.gh2.triplet_closure_finest", res[-1])
    rec.above("curvlab.gh2.triplet_closure_order", float(_orders(res).min()), 2.0, "derived-oracle",
              "curvlab/gh-triplet-closed")


# ---------------------------------------------------------------------------
# gaugelab


def bpst_checks(rec: Recorder, rho: float, probes: int, rng, radius: float = 50.0):
    from .gaugelab import (bpst, conservation_form_residual, selfduality_residual, topological_charge,
                           ym_residual)
    b = bpst(rho)
    pts = rng.normal(size=(probes, 4)) * 1.5 * rho
    rec.below("gauge.bpst.selfduality_residual", max(selfduality_residual(b, x) for x in pts), 1e-10,
              "paper", "gauge/bpst-anti-self-dual")
    rec.below("gauge.bpst.ym_residual", max(ym_residual(b, x) for x in pts), 1e-8, "paper", "gauge/self-dual-implies-ym")
    rec.below("gauge.bpst.conservation_residual", max(conservation_form_residual(b, x) for x in pts), 1e-6,
              "paper", "gauge/conservation-form")
    q1, _ = topological_charge(b, R=radius * rho)
    q2, _ = topological_charge(bpst(2 * rho), R=2 * radius * rho)
    rec.measure("gauge.bpst.charge", q1)
    rec.below("gauge.bpst.charge_relative_error", abs(abs(q1) - 1), 0.02, "paper", "gauge/instanton-charge")
    rec.below("gauge.bpst.charge_scale_invariance", abs(q1 - q2), 1e-3, "derived-oracle", "gauge/instanton-charge")


def suite_gaugelab(rec: Recorder, rng, p: dict):
    from .gaugelab import (bianchi_residual, conformal_sphere_section, einstein_cartan_check, flat_section,
                           gibbons_hawking_section, linearized_identity_residual, random_polynomial_potential,
                           random_section, schwarzschild_section, section_metric_chart)
    from .curvlab import GibbonsHawkingData, curvature
    bpst_checks(rec, p["rho"], p["probes"], rng, p["charge_radius"])
    lin = bian = 0.0
    for _ in range(p["random_pairs"]):
        A, B = random_polynomial_potential(rng), random_polynomial_potential(rng)
        x = rng.normal(size=4)
        lin = max(lin, linearized_identity_residual(A, B, x))
        bian = max(bian, bianchi_residual(A, x))
    rec.below("gauge.random.linearized_identity_residual", lin, 1e-6, "paper", "gauge/linearized-identity")
    rec.below("gauge.random.bianchi_residual", bian, 1e-9, "paper", "gauge/bianchi")

    x0 = np.array([0.1, 0.3, 0.9, 0.4])
    for i in range(p["random_sections"]):
        sec = random_section(rng)
        r = [einstein_cartan_check(sec, x0, h=h, order=2).identity_residual for h in (2e-2, 1e-2)]
        rec.measure(f"ec.random{i}.identity_residual_h0.01", r[1])
        rec.between(f"ec.random{i}.identity_order", float(np.log2(r[0] / r[1])), 1.8, 2.2, "paper",
                    "ec/tau-sigma-identity")
    fixtures = [
        ("flat", flat_section(), x0, True, "trivial"),
        ("gibbons_hawking", gibbons_hawking_section(GibbonsHawkingData(**TWO_CENTER)), x0, True, "derived-oracle"),
        ("schwarzschild", schwarzschild_section(1.0), np.array([0.1, 3.0, 1.0, 0.5]), True, "derived-oracle"),
        ("round_sphere", conformal_sphere_section(), x0, False, "derived-oracle"),
    ]
    for name, sec, x, vacuum, prov in fixtures:
        if vacuum and name != "flat":
            cp = curvature(section_metric_chart(sec), x)
            rec.below(f"ec.{name}.metric_ricci_ratio", cp.frame_ricci_norm() / max(1.0, cp.norm()), 1e-6,
                      "derived-oracle", "ec/vacuum-fixture")
        ec_fixture_checks(rec, f"ec.{name}", sec, x, vacuum, prov)


def ec_fixture_checks(rec: Recorder, prefix: str, sec, x, vacuum: Optional[bool], prov: str):
    from .gaugelab import einstein_cartan_check
    rep = einstein_cartan_check(sec, x)
    rec.measure(f"{prefix}.dtau", rep.dtau)
    rec.measure(f"{prefix}.tau_minus_dsigma", rep.tau_minus_dsigma)
    rec.measure(f"{prefix}.einstein", rep.einstein)
    rec.below(f"{prefix}.identity_residual", rep.identity_residual, 1e-6, "paper", "ec/tau-sigma-identity")
    rec.holds(f"{prefix}.verdicts_consistent", rep.consistent, "paper", "ec/vacuum-equivalence")
    if vacuum is not None:
        want = (vacuum,) * 3
        rec.holds(f"{prefix}.verdicts_expected", (rep.verdict_a, rep.verdict_b, rep.verdict_c) == want, prov,
                  "ec/vacuum-equivalence")
    return rep


# ---------------------------------------------------------------------------
# registry and configuration


@dataclass(frozen=True)
class Suite:
    name: str
    run: Callable
    defaults: dict


SUITES = {s.name: s for s in (
    Suite("spencer", suite_spencer, {"max_total": 4, "gl_dims": (2, 3), "o_dims": (3, 4)}),
    Suite("dbar", suite_dbar, {"grids": (16, 32, 64, 128), "half_width": 1.0, "neumann_grid": 64}),
    Suite("projgeo", suite_projgeo, {"draws": 10, "psi_grids": (32, 64), "einstein_points": (0.0, 0.5 + 0.3j, -0.8 + 1.1j)}),
    Suite("sigma", suite_sigma, {"grid": 128}),
    Suite("jspace", suite_jspace, {"ells": (2, 3), "samples": 200, "trials": 3}),
    Suite("spinor", suite_spinor, {"max_ell": 4, "roundtrip_ell": 3, "samples": 50, "chiral_samples": 100}),
    Suite("curvlab", suite_curvlab, {"closure_grids": (16, 32), "closure_order": 4,
                                     "closure_box": ((-1.0, 0.0), (1.0, 2.0), (1.0, 2.0))}),
    Suite("gaugelab", suite_gaugelab, {"rho": 1.0, "probes": 100, "charge_radius": 50.0, "random_pairs": 5,
                                       "random_sections": 3}),
)}
SUITE_NAMES = tuple(SUITES) + ("all",)


def _coerce(default, text: str, key: str):
    text = text.strip()
    try:
        if isinstance(default, bool):
            if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return text.lower() in ("true", "1", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            if default and isinstance(default[0], tuple):
                return tuple(tuple(float(v) for v in part.split(",")) for part in text.split(";"))
            kind = type(default[0]) if default else float
            return tuple(kind(v) for v in text.split(","))
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc


@dataclass
class RunConfig:
    seed: Optional[int] = None
    tol_scale: Optional[float] = None
    params: dict = field(default_factory=dict)


def load_config(path) -> RunConfig:
    """INI-style file: optional [run] (seed, tol_scale) and one section per suite."""
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    cfg = RunConfig()
    for sec in cp.sections():
        if sec == "run":
            for key, val in cp[sec].items():
                if key == "seed":
                    cfg.seed = _check_seed(_coerce(0, val, "run.seed"))
                elif key in ("tol_scale", "tol-scale"):
                    cfg.tol_scale = _coerce(1.0, val, "run.tol_scale")
                else:
                    raise ConfigError(f"unknown key run.{key}")
        elif sec in SUITES:
            defaults = SUITES[sec].defaults
            for key, val in cp[sec].items():
                if key not in defaults:
                    raise ConfigError(f"unknown key {sec}.{key}")
                cfg.params.setdefault(sec, {})[key] = _coerce(defaults[key], val, f"{sec}.{key}")
        else:
            raise ConfigError(f"unknown config section [{sec}]")
    return cfg


def _check_seed(seed) -> int:
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return seed


def run_suite(name: str, seed: int = 0, tol_scale: float = 1.0, config: Optional[RunConfig] = None) -> Report:
    """Run one suite (or ``all``) and return its report; deterministic given the seed."""
    if name not in SUITE_NAMES:
        raise KeyError(f"unknown suite {name!r}")
    config = config or RunConfig()
    seed = _check_seed(seed)
    names = list(SUITES) if name == "all" else [name]
    rec = Recorder(tol_scale)
    params = {}
    for n in names:
        p = {**SUITES[n].defaults, **config.params.get(n, {})}
        params[n] = p
        SUITES[n].run(rec, suite_rng(seed, n), p)
    return Report(f"verify {name}", seed, rec.tol_scale, rec.checks, rec.measurements, params)
