"""Pre-representation axioms and operator identities on the safe interior of a truncation.

At cap D the matrix of rho^F is the compression of the untruncated operator.
A product of two operators that each raise the degree by at most two agrees with the
untruncated product on columns of degree <= D - 4; every identity involving
two applications is checked there.
"""

from __future__ import annotations

import itertools
import math
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .fock import fock_space
from .reports import IdentityReport
from .superalgebra import (
    EVEN,
    ODD,
    CentralElement,
    OspElement,
    ParityError,
    cocycle,
    extended_bracket,
    osp_norm,
    orbit_terms_needed,
    superbracket,
)

HERMITIAN_TOL = 1e-10
SQUARE_TOL = 1e-9
DEFECT_TOL = 1e-8
CONJUGACY_TOL = 1e-7
CLOSURE_TOL = 1e-9

_PHASE = np.exp(-1j * np.pi / 4)


class NoSafeInterior(ValueError):
    pass


class RestrictionError(ValueError):
    def __init__(self, message, triple):
        super().__init__(message)
        self.triple = triple


def require_interior(D: int):
    if D < 6:
        raise NoSafeInterior(f"no safe interior: degree cap D={D} leaves nothing below D-4 beyond the vacuum (need D >= 6)")


def _as_central(u) -> CentralElement:
    return u if isinstance(u, CentralElement) else CentralElement(u, 0.0)


def _fro(M) -> float:
    return float(np.linalg.norm(M))


def element_checks(u, D: int, label: str = "u") -> list[IdentityReport]:
    """Skew-adjointness (even), symmetry after e^{-i pi/4} (odd) and the odd square relation."""
    require_interior(D)
    u = _as_central(u)
    fs = fock_space(u.space, D)
    M = fs.rho_matrix(u)
    s2 = fs.mask(D - 2)
    block = M[np.ix_(s2, s2)]
    out = []
    if u.parity == EVEN:
        out.append(IdentityReport(f"skew_hermitian[{label}]", _fro(block + block.conj().T), HERMITIAN_TOL, D - 2))
    else:
        P = _PHASE * block
        out.append(IdentityReport(f"phase_hermitian[{label}]", _fro(P - P.conj().T), HERMITIAN_TOL, D - 2))
        s4 = fs.mask(D - 4)
        half = extended_bracket(u, u) * 0.5
        lhs = M @ M[:, s4]
        rhs = fs.rho_matrix(half)[:, s4]
        out.append(IdentityReport(f"square_relation[{label}]", _fro(lhs - rhs), SQUARE_TOL, D - 4))
    return out


def commutator_defect(u, v, D: int, label: str = "u,v") -> IdentityReport:
    """[rho(T), rho(T')]_+- - rho([T, T']) fitted to c * Id on degrees <= D - 4."""
    require_interior(D)
    u, v = _as_central(u), _as_central(v)
    fs = fock_space(u.space, D)
    s4 = fs.mask(D - 4)
    n4 = int(s4.sum())
    X, Y = fs.rho_matrix(u.body), fs.rho_matrix(v.body)
    sign = (-1.0) ** (u.parity * v.parity)
    comm = X @ Y[:, s4] - sign * (Y @ X[:, s4])
    target = fs.rho_matrix(superbracket(u.body, v.body))[:, s4]
    defect = comm - target
    c = complex(np.trace(defect[s4]) / n4)
    incl = np.eye(fs.dim)[:, s4]
    scale = max(_fro(comm), _fro(target), 1.0)
    off = _fro(defect - c * incl) / scale
    omega = cocycle(u.body, v.body)
    mismatch = abs(c - 1j * omega) / max(1.0, abs(omega))
    extra = {"omega": omega}
    if abs(omega) > 1e-12:
        extra["kappa"] = c / (1j * omega)
    return IdentityReport(
        f"commutator_defect[{label}]",
        max(off, mismatch),
        DEFECT_TOL,
        D - 4,
        fitted_scalar=c,
        off_scalar=off,
        extra=extra,
    )


def verify_identities(u, v, D: int) -> list[IdentityReport]:
    return element_checks(u, D, "u") + element_checks(v, D, "v") + [commutator_defect(u, v, D)]


def parity_check(u, D: int, label: str = "u") -> IdentityReport:
    """Largest matrix entry connecting monomials of the wrong relative parity."""
    u = _as_central(u)
    fs = fock_space(u.space, D)
    M = fs.rho_matrix(u)
    par = fs.ks % 2
    wrong = (par[:, None] ^ par[None, :]) != u.parity
    return IdentityReport(f"grading[{label}]", float(np.abs(M[wrong]).max(initial=0.0)), HERMITIAN_TOL, D)


def _as_named(reps) -> dict[str, CentralElement]:
    if isinstance(reps, Mapping):
        return {k: _as_central(g) for k, g in reps.items()}
    return {f"g{i}": _as_central(g) for i, g in enumerate(reps)}


def check_prerep(reps, D: int, rng: np.random.Generator | None = None, n_random: int = 8) -> list[IdentityReport]:
    """Verify the pre-representation axioms for a generator family at cap D.

    Sub-check names carry the axiom label; failures are reported, not raised.
    """
    require_interior(D)
    gens = _as_named(reps)
    rng = np.random.default_rng(0) if rng is None else rng
    fs = fock_space(next(iter(gens.values())).space, D)
    names = sorted(gens)
    out = []

    grading = max((parity_check(gens[n], D, n).residual for n in names), default=0.0)
    out.append(
        IdentityReport(
            "prerep.i-ii.grading",
            grading,
            HERMITIAN_TOL,
            D,
            note="graded Fock space; operators everywhere defined at truncation",
        )
    )

    lin_res = 0.0
    for parity in (EVEN, ODD):
        group = [gens[n] for n in names if gens[n].parity == parity]
        if not group:
            continue
        for _ in range(n_random):
            c = rng.standard_normal(len(group))
            combo = sum((g * float(ci) for g, ci in zip(group[1:], c[1:])), group[0] * float(c[0]))
            direct = fs.rho_matrix(combo)
            summed = sum(float(ci) * fs.rho_matrix(g) for g, ci in zip(group, c))
            lin_res = max(lin_res, _fro(direct - summed) / max(1.0, _fro(direct)))
    out.append(IdentityReport("prerep.iii.linearity", lin_res, SQUARE_TOL, D))

    s4 = fs.mask(D - 4)
    mats = {n: fs.rho_matrix(gens[n]) for n in names}
    br_res = 0.0
    worst = None
    for a, b in itertools.combinations_with_replacement(names, 2):
        ga, gb = gens[a], gens[b]
        sign = (-1.0) ** (ga.parity * gb.parity)
        comm = mats[a] @ mats[b][:, s4] - sign * (mats[b] @ mats[a][:, s4])
        target = fs.rho_matrix(extended_bracket(ga, gb))[:, s4]
        r = _fro(comm - target) / max(1.0, _fro(target))
        if r > br_res:
            br_res, worst = r, (a, b)
    out.append(
        IdentityReport(
            "prerep.iii.bracket",
            br_res,
            DEFECT_TOL,
            D - 4,
            note=f"worst pair {worst[0]},{worst[1]}" if worst else "",
        )
    )

    s2 = fs.mask(D - 2)
    skew = 0.0
    sym = 0.0
    for n in names:
        blk = mats[n][np.ix_(s2, s2)]
        if gens[n].parity == EVEN:
            skew = max(skew, _fro(blk + blk.conj().T))
        else:
            P = _PHASE * blk
            sym = max(sym, _fro(P - P.conj().T))
    out.append(IdentityReport("prerep.iv.skew_adjoint", skew, HERMITIAN_TOL, D - 2))
    out.append(IdentityReport("prerep.v.phase_symmetric", sym, HERMITIAN_TOL, D - 2))
    out.append(
        IdentityReport(
            "prerep.vi.conjugation",
            0.0,
            0.0,
            note="skipped: connected case, the condition holds trivially",
        )
    )
    return out


def adjoint_orbit_extended(y: OspElement, x: CentralElement, n_max: int) -> CentralElement:
    """sum_n ad_{(y,0)}^n (x) / n! in the central extension."""
    yc = CentralElement(y, 0.0)
    total = x
    term = x
    for n in range(1, n_max + 1):
        term = extended_bracket(yc, term) * (1.0 / n)
        total = total + term
    return total


def check_conjugacy(
    x,
    y: OspElement,
    t: float,
    D: int,
    window: int | None = None,
    tol: float = CONJUGACY_TOL,
) -> IdentityReport:
    """Compare E rho(x) E^{-1} with rho(Ad(exp(t y)) x), E = expm(t rho(y)) at cap D.

    ``window`` is the largest degree compared (default D - 4); pass a fixed
    value to watch one block converge as D grows.
    """
    require_interior(D)
    if isinstance(y, CentralElement):
        y = y.body
    if y.parity != EVEN:
        raise ParityError("conjugation needs an even direction")
    x = _as_central(x)
    ty = y * t
    n_max = orbit_terms_needed(ty, x.body, tol=1e-12, n_cap=60)
    if n_max is None:
        raise ValueError(f"adjoint series tail cannot reach 1e-12 within 60 terms (||t y|| = {osp_norm(ty):.3g})")
    window = D - 4 if window is None else window
    fs = fock_space(x.space, D)
    Y = fs.rho_matrix(ty)
    E = expm(Y)
    Einv = expm(-Y)
    lhs = E @ fs.rho_matrix(x) @ Einv
    rhs = fs.rho_matrix(adjoint_orbit_extended(ty, x, n_max))
    sw = fs.mask(window)
    res = _fro((lhs - rhs)[np.ix_(sw, sw)])
    return IdentityReport("conjugacy", res, tol, window, extra={"t": float(t), "n_max": n_max, "D": D})


def _coords(u: CentralElement) -> np.ndarray:
    return np.concatenate([u.body.op.coords(), [u.z]])


def restrict(reps, names: Sequence[str], D: int, rng: np.random.Generator | None = None):
    """Restrict a generator family to a bracket-closed sub-collection.

    Returns (sub_family, reports).  The restricted operators are the same
    Fock matrices as before; only the index set shrinks.
    """
    gens = _as_named(reps)
    missing = [n for n in names if n not in gens]
    if missing:
        raise KeyError(f"unknown generators: {missing}")
    sub = {n: gens[n] for n in sorted(set(names))}
    keys = sorted(sub)
    basis = np.array([_coords(sub[n]) for n in keys]).T
    for a, b in itertools.combinations_with_replacement(keys, 2):
        br = extended_bracket(sub[a], sub[b])
        target = _coords(br)
        scale = max(1.0, float(np.linalg.norm(target)))
        coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
        res = float(np.linalg.norm(basis @ coef - target)) / scale
        if res > CLOSURE_TOL:
            raise RestrictionError(
                f"sub-collection is not bracket-closed: [{a}, {b}] leaves the span (residual {res:.3g})",
                (a, b, res),
            )
    return sub, check_prerep(sub, D, rng=rng)


def kappa_statistics(reports: Sequence[IdentityReport]) -> tuple[float, float, int]:
    """(mean, std/|mean|, count) of the fitted kappa values in defect reports."""
    ks = np.array([r.extra["kappa"] for r in reports if "kappa" in r.extra])
    if ks.size == 0:
        return math.nan, math.nan, 0
    mean = ks.mean()
    rel = float(np.abs(ks - mean).std() / abs(mean)) if abs(mean) > 0 else math.inf
    return complex(mean), rel, int(ks.size)
