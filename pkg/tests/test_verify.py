import numpy as np
import pytest

from ospfock.fock import fock_space
from ospfock.superalgebra import (
    EVEN,
    ODD,
    CentralElement,
    OspElement,
    ParityError,
    TruncatedSpace,
    canonical_generators,
    cocycle,
    random_element,
    superbracket,
)
from ospfock.suites import conjugacy_direction, generator_table
from ospfock.verify import (
    NoSafeInterior,
    RestrictionError,
    check_conjugacy,
    check_prerep,
    commutator_defect,
    element_checks,
    kappa_statistics,
    parity_check,
    require_interior,
    restrict,
)

SPACE = TruncatedSpace(2, 2)


def GEN(name):
    return dict(canonical_generators(SPACE))[name]


def test_interior_threshold():
    require_interior(6)
    with pytest.raises(NoSafeInterior):
        require_interior(5)
    with pytest.raises(NoSafeInterior):
        element_checks(random_element(SPACE, ODD, np.random.default_rng(0)), 4)


def test_element_checks_pass(rng):
    for parity in (EVEN, ODD):
        for r in element_checks(random_element(SPACE, parity, rng), 8):
            assert r.passed, r


def test_square_relation_uses_extended_bracket(rng):
    # dropping the central term of [x, x] breaks the relation for odd x with a conj part
    x = OspElement.from_parts(SPACE, np.zeros((4, 4)), GEN("odd.conj.1.1.re").conj, ODD)
    assert abs(cocycle(x, x)) > 0.1
    (_, square) = element_checks(x, 8)
    assert square.passed
    fs = fock_space(SPACE, 8)
    s = fs.mask(4)
    M = fs.rho_matrix(x)
    without_centre = fs.rho_matrix(superbracket(x, x) * 0.5)
    assert np.abs((M @ M - without_centre)[np.ix_(s, s)]).max() > 0.05


def test_defect_is_cocycle(rng):
    reports = []
    for _ in range(20):
        par = int(rng.integers(2))
        u, v = random_element(SPACE, par, rng), random_element(SPACE, par, rng)
        r = commutator_defect(u, v, 8)
        assert r.passed, r
        reports.append(r)
    mean, rel, count = kappa_statistics(reports)
    assert count == 20
    assert mean == pytest.approx(1.0, abs=1e-10)
    assert rel < 1e-10


def test_defect_zero_for_mixed_parity(rng):
    r = commutator_defect(random_element(SPACE, EVEN, rng), random_element(SPACE, ODD, rng), 8)
    assert abs(r.fitted_scalar) < 1e-12
    assert "kappa" not in r.extra


def test_grading(rng):
    for parity in (EVEN, ODD):
        assert parity_check(random_element(SPACE, parity, rng), 6).passed


def test_prerep_on_generators(rng):
    reports = check_prerep(generator_table(SPACE), 8, rng=rng)
    names = [r.name for r in reports]
    assert names == [
        "prerep.i-ii.grading",
        "prerep.iii.linearity",
        "prerep.iii.bracket",
        "prerep.iv.skew_adjoint",
        "prerep.v.phase_symmetric",
        "prerep.vi.conjugation",
    ]
    assert all(r.passed for r in reports)
    assert "skipped" in reports[-1].note


def test_prerep_flags_broken_family(rng):
    x = GEN("even.lin.f.1.1.im")
    bad = CentralElement(OspElement.from_parts(SPACE, x.lin * -1j, x.conj, EVEN))  # Hermitian, not skew
    reports = {r.name: r for r in check_prerep({"bad": bad}, 6, rng=rng)}
    assert not reports["prerep.iv.skew_adjoint"].passed


def test_conjugacy_converges_with_cap(rng):
    x = random_element(SPACE, ODD, rng)
    y = conjugacy_direction(SPACE, rng)
    r8 = check_conjugacy(x, y, 0.3, 8)
    r10 = check_conjugacy(x, y, 0.3, 10, window=4)
    assert r8.passed
    assert r10.residual < r8.residual


def test_conjugacy_refusals(rng):
    x = random_element(SPACE, ODD, rng)
    with pytest.raises(ParityError):
        check_conjugacy(x, random_element(SPACE, ODD, rng), 0.3, 8)
    with pytest.raises(ValueError):
        check_conjugacy(x, random_element(SPACE, EVEN, rng, norm=200.0), 1.0, 8)


def test_restriction_to_even_part():
    table = generator_table(SPACE)
    even = [n for n, g in table.items() if g.parity == EVEN]
    sub, reports = restrict(table, even, 6)
    assert set(sub) == set(even)
    assert all(sub[n] is table[n] for n in even)
    assert all(r.passed for r in reports)


def test_restriction_rejects_unclosed_and_unknown():
    table = generator_table(SPACE)
    with pytest.raises(RestrictionError) as err:
        restrict(table, ["odd.conj.1.1.re"], 6)
    assert err.value.triple[:2] == ("odd.conj.1.1.re", "odd.conj.1.1.re")
    with pytest.raises(KeyError):
        restrict(table, ["nope"], 6)
