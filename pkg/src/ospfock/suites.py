"""Named verification suites shared by the CLI and the acceptance tests."""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import counterexamples as cx
from .fock import FockVector, fock_space, rho_full, triplet_text
from .reports import IdentityReport
from .series import (
    bch_slope,
    check_interpolation_bounds,
    exp_apply,
    orbit_series,
    radius_estimate,
)
from .superalgebra import (
    EVEN,
    ODD,
    CentralElement,
    OspElement,
    TruncatedSpace,
    canonical_generators,
    cocycle_identity_residual,
    cocycle_symmetry_residual,
    jacobi_residual,
    osp_norm,
    random_element,
    superbracket,
)
from .verify import (
    RestrictionError,
    check_conjugacy,
    check_prerep,
    commutator_defect,
    element_checks,
    kappa_statistics,
    restrict,
)

DEFAULT_TOLERANCES = {
    "jacobi": 1e-9,
    "hermitian": 1e-10,
    "square": 1e-9,
    "defect": 1e-8,
    "kappa": 1e-6,
    "conjugacy": 1e-7,
    "series": 1e-12,
    "bch_slope": 4.5,
    "interpolation": 1e-12,
    "moments": 1e-6,
    "analytic": 1e-8,
    "divergence": 1e6,
}

DEFAULT_SAMPLES = {
    "triples": 200,
    "defect_pairs": 200,
    "conjugacy_pairs": 50,
    "series_directions": 100,
    "interpolation_cases": 1000,
    "analytic_functions": 20,
}

# conjugacy ensemble: unit lin part, conj part kept small so the truncation
# error on degrees <= D - 4 stays below the tolerance at D = 8
CONJUGACY_T = 0.3
CONJUGACY_CONJ_NORM = 0.15
BCH_DEPTH = 12
BCH_WINDOW = 4
DIVERGENCE_TS = (0.5, 1.0, 2.0)
DIVERGENCE_EPS = 0.5
DIVERGENCE_LEVELS = 40

SUITES = ("algebra", "counterexamples", "oscillator", "restriction", "series")
NEEDS_INTERIOR = frozenset({"oscillator", "restriction", "series"})


@dataclass
class SuiteResult:
    name: str
    reports: list[IdentityReport] = field(default_factory=list)
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


@dataclass(frozen=True)
class SuiteParams:
    m_f: int = 2
    m_b: int = 2
    D: int = 8
    seed: int = 42
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    samples: dict = field(default_factory=lambda: dict(DEFAULT_SAMPLES))

    @property
    def space(self) -> TruncatedSpace:
        return TruncatedSpace(self.m_f, self.m_b)

    def rng(self, suite: str) -> np.random.Generator:
        # one stream per (seed, suite) so suites are independent of run order
        tag = int.from_bytes(hashlib.sha256(suite.encode()).digest()[:4], "little")
        return np.random.default_rng(np.random.SeedSequence([self.seed, tag]))


def generator_table(space: TruncatedSpace) -> dict[str, CentralElement]:
    """Canonical generators plus the central element and the number operator."""
    table = {name: CentralElement(g, 0.0) for name, g in canonical_generators(space)}
    table["central"] = CentralElement.central(space, 1.0)
    ident = 1j * np.eye(space.d)
    table["number"] = CentralElement(OspElement.from_parts(space, ident, np.zeros_like(ident), EVEN), 0.0)
    return table


def _max_report(name, values, tol, safe_degree=None, **extra) -> IdentityReport:
    values = list(values)
    return IdentityReport(name, max(values, default=0.0), tol, safe_degree, extra={"count": len(values), **extra})


def _random_parity(rng) -> int:
    return int(rng.integers(2))


def _random_vector(fs, rng, max_degree: int) -> FockVector:
    x = np.zeros(fs.dim, dtype=complex)
    m = fs.mask(max_degree)
    x[m] = rng.standard_normal(m.sum()) + 1j * rng.standard_normal(m.sum())
    return fs.from_array(x / np.linalg.norm(x))


def conjugacy_direction(space: TruncatedSpace, rng: np.random.Generator, conj_norm: float = CONJUGACY_CONJ_NORM) -> OspElement:
    """Even element with unit lin part and conj part of norm ``conj_norm``."""
    y = random_element(space, EVEN, rng, norm=None)
    zeros = np.zeros_like(y.lin)
    lin = OspElement.from_parts(space, y.lin, zeros, EVEN)
    conj = OspElement.from_parts(space, zeros, y.conj, EVEN)
    return lin * (1.0 / osp_norm(lin)) + conj * (conj_norm / osp_norm(conj))


def run_algebra(p: SuiteParams) -> SuiteResult:
    rng = p.rng("algebra")
    sp = p.space
    tol = p.tolerances["jacobi"]
    jac, coc, sym, closure, normineq = [], [], [], [], []
    for _ in range(p.samples["triples"]):
        x, y, z = (random_element(sp, _random_parity(rng), rng, norm=float(rng.uniform(0.1, 2.0))) for _ in range(3))
        jac.append(jacobi_residual(x, y, z))
        coc.append(cocycle_identity_residual(x, y, z))
        sym.append(cocycle_symmetry_residual(x, y))
        b = superbracket(x, y)
        closure.append(b.residual)
        normineq.append(max(osp_norm(b) - osp_norm(x) * osp_norm(y), 0.0))
    res = SuiteResult("algebra")
    res.reports += [
        _max_report("algebra.jacobi", jac, tol),
        _max_report("algebra.cocycle_identity", coc, tol),
        _max_report("algebra.cocycle_symmetry", sym, tol),
        _max_report("algebra.bracket_closure", closure, tol),
        _max_report("algebra.norm_inequality", normineq, tol),
    ]
    gens = canonical_generators(sp)
    res.reports.append(_max_report("algebra.generators_certified", (g.residual for _, g in gens), tol, dimension=len(gens)))
    return res


def run_oscillator(p: SuiteParams) -> SuiteResult:
    rng = p.rng("oscillator")
    sp, D = p.space, p.D
    tol = p.tolerances
    res = SuiteResult("oscillator")

    herm, square = [], []
    elems = [g for g in generator_table(sp).values()]
    # the centre is even, so only even elements carry a central part
    elems += [CentralElement(random_element(sp, EVEN, rng), float(rng.standard_normal())) for _ in range(20)]
    elems += [CentralElement(random_element(sp, ODD, rng), 0.0) for _ in range(20)]
    for u in elems:
        for r in element_checks(u, D):
            (square if r.name.startswith("square") else herm).append(r.residual)
    res.reports.append(_max_report("oscillator.symmetry", herm, tol["hermitian"], D - 2))
    res.reports.append(_max_report("oscillator.square_relation", square, tol["square"], D - 4))

    defects = []
    for _ in range(p.samples["defect_pairs"]):
        par = _random_parity(rng)
        u = random_element(sp, par, rng)
        v = random_element(sp, par if rng.random() < 0.8 else 1 - par, rng)
        defects.append(commutator_defect(u, v, D))
    res.reports.append(_max_report("oscillator.defect_scalar", (r.off_scalar for r in defects), tol["defect"], D - 4))
    res.reports.append(_max_report("oscillator.defect_matches_cocycle", (r.residual for r in defects), tol["defect"], D - 4))
    mean, rel, count = kappa_statistics(defects)
    res.reports.append(IdentityReport("oscillator.kappa_constant", rel, tol["kappa"], D - 4, fitted_scalar=mean, extra={"count": count}))
    res.tables["kappa"] = (
        ["pair", "omega", "fitted_re", "fitted_im"],
        [[i, r.extra["omega"], r.fitted_scalar.real, r.fitted_scalar.imag] for i, r in enumerate(defects)],
    )

    prerep = check_prerep(dict(generator_table(sp)), D, rng=rng)
    res.reports += [IdentityReport("oscillator." + r.name, r.residual, r.tolerance, r.safe_degree, note=r.note) for r in prerep]

    rows, at_d, decreased = [], [], []
    for i in range(p.samples["conjugacy_pairs"]):
        x = random_element(sp, _random_parity(rng), rng)
        y = conjugacy_direction(sp, rng)
        base = check_conjugacy(x, y, CONJUGACY_T, D, tol=tol["conjugacy"]).residual
        # same block of degrees <= D - 4, one truncation step higher
        finer = check_conjugacy(x, y, CONJUGACY_T, D + 2, window=D - 4).residual
        at_d.append(base)
        decreased.append(finer < base)
        rows.append([i, base, finer])
    res.reports.append(_max_report("oscillator.conjugacy", at_d, tol["conjugacy"], D - 4, t=CONJUGACY_T))
    res.reports.append(
        IdentityReport(
            "oscillator.conjugacy_refines",
            float(sum(not d for d in decreased)),
            0.0,
            D - 4,
            note=f"residual on degrees <= {D - 4} at D={D} vs D={D + 2}",
        )
    )
    res.tables["conjugacy"] = (["pair", f"residual_D{D}", f"residual_D{D + 2}"], rows)
    return res


def run_series(p: SuiteParams) -> SuiteResult:
    rng = p.rng("series")
    sp, D = p.space, p.D
    tol = p.tolerances
    res = SuiteResult("series")
    fs = fock_space(sp, D)

    excess = []
    for _ in range(p.samples["series_directions"]):
        r = float(rng.uniform(0.05, 0.9))
        z = float(rng.uniform(-0.1, 0.1))
        u = CentralElement(random_element(sp, EVEN, rng, norm=r), z)
        v = _random_vector(fs, rng, D)
        s = orbit_series(v, u, 1.0, 40, D)
        err = float(np.linalg.norm(s.vector - exp_apply(v, u, 1.0, D)))
        excess.append(max(err - s.tail_bound, 0.0))
    res.reports.append(_max_report("series.orbit_vs_expm", excess, tol["series"], D))

    y = CentralElement(random_element(sp, EVEN, rng), float(rng.standard_normal()))
    y2 = CentralElement(random_element(sp, EVEN, rng), float(rng.standard_normal()))
    slope = bch_slope(y, y2, 4, BCH_DEPTH, BCH_WINDOW)
    res.reports.append(
        IdentityReport("series.bch_slope", max(tol["bch_slope"] - slope, 0.0), 0.0, BCH_WINDOW, extra={"slope": slope, "D": BCH_DEPTH, "min_slope": tol["bch_slope"]})
    )

    fs_i = fock_space(sp, D + 2)
    slack = []
    for _ in range(p.samples["interpolation_cases"]):
        v = _random_vector(fs_i, rng, D - 2)
        yo = random_element(sp, ODD, rng, norm=float(rng.uniform(0.1, 2.0)))
        slack.append(check_interpolation_bounds(v, yo, D + 2).residual)
    res.reports.append(_max_report("series.interpolation_bound", slack, tol["interpolation"], D - 2, D=D + 2))

    gens = generator_table(sp)
    u = gens["number"] + gens["even.conj.b.1.1.re"] + gens["even.conj.f.1.2.re"]
    vac = FockVector.vacuum(sp)
    rows = []
    for depth in (D, D + 4, D + 8):
        est = radius_estimate(vac, u, 40, depth)
        rows.append([depth, est.radius, est.terms_used, int(est.truncation_limited)])
    res.tables["radius"] = (["D", "radius", "terms_used", "truncation_limited"], rows)
    return res


def run_counterexamples(p: SuiteParams) -> SuiteResult:
    rng = p.rng("counterexamples")
    tol = p.tolerances
    res = SuiteResult("counterexamples")

    grid = [0.0, 1e-12, 1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 4.0, 10.0, 50.0, 200.0]
    res.reports.append(_max_report("counterexamples.G_closed_vs_quadrature", (abs(cx.G_eval(x) - cx.G_quad(x)) for x in grid), 1e-10))
    xs = np.linspace(1e-3, 1.0, 1000)
    hs = np.array([cx.h_eval(float(x)) for x in xs])
    res.reports.append(IdentityReport("counterexamples.h_decreasing", float(np.sum(np.diff(hs) >= 0)), 0.0))
    res.reports.append(_max_report("counterexamples.h_round_trip", (abs(cx.G_eval(h) - (1 - x)) for h, x in zip(hs, xs)), 1e-10))

    mom = []
    rows = []
    for n in range(0, 7):
        val = cx.moment_integral(n)
        exact = math.factorial(2 * n + 1) if n else 1
        mom.append(abs(val / exact - 1))
        rows.append([n, val, exact])
    res.reports.append(_max_report("counterexamples.h_moments", mom, tol["moments"]))
    res.tables["moments"] = (["n", "integral", "factorial_2n_plus_1"], rows)

    logm = [abs(cx.lp_integral(cx.LOG, n) / math.factorial(n) - 1) for n in range(1, 9)]
    res.reports.append(_max_report("counterexamples.log_moments", logm, tol["moments"]))

    na = cx.banach_norm(cx.H, "A", 8)
    nb = cx.banach_norm(cx.LOG, "B", 8)
    n3 = cx.banach_norm(cx.constant(3.0), "B", 8)
    res.reports.append(IdentityReport("counterexamples.norm_A_of_h", abs(na.value - 1), tol["moments"]))
    res.reports.append(IdentityReport("counterexamples.norm_B_of_log", abs(nb.value - 1), tol["moments"]))
    res.reports.append(IdentityReport("counterexamples.norm_B_of_const3", abs(n3.value - 3) + (n3.argmax != 1), tol["moments"]))
    res.reports.append(IdentityReport("counterexamples.factorial_inequality", float(not cx.factorial_inequality()), 0.0))

    bounds = []
    for i in range(p.samples["analytic_functions"]):
        f = cx.random_bounded_log_function(rng, float(rng.uniform(0.05, 0.4)))
        rep = cx.analytic_bound_check(f)
        bounds.append(rep)
    res.reports.append(_max_report("counterexamples.analytic_bound", (r.residual for r in bounds), tol["analytic"]))
    res.tables["analytic_bound"] = (["sample", "norm", "sum", "bound"], [[i, r.extra["norm"], r.extra["sum"], r.extra["bound"]] for i, r in enumerate(bounds)])

    rows = []
    bad = 0
    for t in DIVERGENCE_TS:
        w = cx.divergence_witness(t, DIVERGENCE_EPS, DIVERGENCE_LEVELS, tol["divergence"])
        bad += (w.status != "diverges") + (not w.monotone)
        rows += [[t, lvl, delta, lg] for lvl, delta, lg in w.rows]
    control = cx.divergence_witness(0.0, DIVERGENCE_EPS, DIVERGENCE_LEVELS, tol["divergence"])
    bad += control.status != "settles"
    res.reports.append(IdentityReport("counterexamples.divergence_witness", float(bad), 0.0, note="t in {0.5, 1, 2} diverge; t = 0 settles"))
    res.tables["divergence"] = (["t", "level", "delta", "log10_integral"], rows)
    return res


def run_restriction(p: SuiteParams) -> SuiteResult:
    rng = p.rng("restriction")
    sp, D = p.space, p.D
    res = SuiteResult("restriction")
    table = generator_table(sp)
    even = sorted(n for n, g in table.items() if g.parity == EVEN)
    sub, reports = restrict(table, even, D, rng=rng)
    res.reports += [IdentityReport("restriction." + r.name, r.residual, r.tolerance, r.safe_degree, note=r.note) for r in reports]
    mismatched = sum(triplet_text(rho_full(table[n], D), n) != triplet_text(rho_full(sub[n], D), n) for n in even)
    res.reports.append(IdentityReport("restriction.literal_triplets", float(mismatched), 0.0, extra={"generators": len(even)}))
    try:
        restrict(table, ["odd.lin.1.1.re"], D)
        rejected = False
    except RestrictionError:
        rejected = True
    res.reports.append(IdentityReport("restriction.rejects_unclosed", float(not rejected), 0.0))
    return res


RUNNERS = {
    "algebra": run_algebra,
    "counterexamples": run_counterexamples,
    "oscillator": run_oscillator,
    "restriction": run_restriction,
    "series": run_series,
}


def run_suites(names, params: SuiteParams, workers: int | None = None) -> list[SuiteResult]:
    """Run suites concurrently; results come back ordered by suite name."""
    names = sorted(set(names))
    unknown = [n for n in names if n not in RUNNERS]
    if unknown:
        raise KeyError(f"unknown suites: {unknown}")
    with ThreadPoolExecutor(max_workers=workers or len(names) or 1) as pool:
        futures = {n: pool.submit(RUNNERS[n], params) for n in names}
        return [futures[n].result() for n in names]
