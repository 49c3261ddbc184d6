"""Analytic-vector series and seminorm estimates at finite truncation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.special import comb, gammainc

from .fock import FockVector, fock_space
from .reports import IdentityReport
from .superalgebra import EVEN, ODD, CentralElement, OspElement, ParityError, extended_bracket, osp_norm, superbracket
from .verify import require_interior

INTERPOLATION_SLACK = -1e-12


@dataclass(frozen=True)
class SeriesResult:
    value: FockVector
    vector: np.ndarray
    terms_used: int
    tail_bound: float
    converged: bool


def _central(u) -> CentralElement:
    return u if isinstance(u, CentralElement) else CentralElement(u, 0.0)


def _tail(a: float, n: int) -> float:
    # sum_{k > n} a^k / k!
    if a == 0.0:
        return 0.0
    return float(math.exp(a) * gammainc(n + 1, a))


def orbit_series(v: FockVector, u, t: float, n_max: int, D: int, tol: float = 1e-12) -> SeriesResult:
    """Partial sum of sum_n t^n/n! rho(u)^n v at cap D, with a factorial tail bound."""
    u = _central(u)
    if u.parity != EVEN:
        raise ParityError("orbit series needs an even direction (odd elements generate no one-parameter group)")
    fs = fock_space(u.space, D)
    M = fs.rho_matrix(u)
    x = fs.to_array(v)
    total = x.copy()
    term = x
    for n in range(1, n_max + 1):
        term = (t / n) * (M @ term)
        total = total + term
    a = abs(t) * np.linalg.norm(M, 2)
    tail = float(np.linalg.norm(x)) * _tail(a, n_max)
    return SeriesResult(fs.from_array(total), total, n_max, tail, tail <= tol)


def exp_apply(v: FockVector, u, t: float, D: int) -> np.ndarray:
    """expm(t rho(u)) v in orthonormal coordinates (reference path)."""
    u = _central(u)
    fs = fock_space(u.space, D)
    return expm(t * fs.rho_matrix(u)) @ fs.to_array(v)


@dataclass(frozen=True)
class RadiusEstimate:
    radius: float
    terms_used: int
    truncation_limited: bool
    growth: tuple[float, ...]


def safe_depth(v: FockVector, u, D: int) -> int | None:
    """Number of applications of rho(u) to v that stay exact at cap D (None = unlimited)."""
    u = _central(u)
    if not u.body.conj.any():
        return None
    return max((D - v.max_degree()) // 2, 0)


def radius_estimate(v: FockVector, u, n_max: int, D: int) -> RadiusEstimate:
    """Radius implied by max_n (||rho(u)^n v|| / n!)^{1/n} over the exact range of n.

    Returns +inf when the orbit of v is finite-dimensional in the untruncated
    space (no conjugate-linear part) or the series terminates.
    """
    u = _central(u)
    fs = fock_space(u.space, D)
    M = fs.rho_matrix(u)
    depth = safe_depth(v, u, D)
    limited = depth is not None and n_max > depth
    n_use = n_max if depth is None else min(n_max, depth)
    x = fs.to_array(v)
    growth = []
    term = x
    log_fact = 0.0
    for n in range(1, n_use + 1):
        term = M @ term
        log_fact += math.log(n)
        nrm = float(np.linalg.norm(term))
        if nrm <= 1e-300:
            return RadiusEstimate(math.inf, n, limited, tuple(growth))
        growth.append(math.exp((math.log(nrm) - log_fact) / n))
    if depth is None or not growth:
        return RadiusEstimate(math.inf, n_use, limited, tuple(growth))
    return RadiusEstimate(1.0 / max(growth), n_use, limited, tuple(growth))


def bch(y, y2, order: int = 4):
    """Baker-Campbell-Hausdorff series log(e^y e^y2) truncated at ``order``.

    Accepts OspElement or CentralElement pairs; the bracket follows the type.
    """
    if order < 1 or order > 4:
        raise ValueError(f"BCH order must be in 1..4, got {order}")
    if isinstance(y, CentralElement):
        br = extended_bracket
    else:
        br = superbracket
        if y.parity != EVEN or y2.parity != EVEN:
            raise ParityError("BCH is taken between even elements")
    out = y + y2
    if order >= 2:
        c = br(y, y2)
        out = out + c * 0.5
    if order >= 3:
        out = out + br(y, c) * (1.0 / 12) - br(y2, c) * (1.0 / 12)
    if order >= 4:
        out = out - br(y2, br(y, c)) * (1.0 / 24)
    return out


def bch_defect(y: CentralElement, y2: CentralElement, order: int, D: int, window: int) -> float:
    """|| expm(rho(bch)) - expm(rho(y)) expm(rho(y2)) || on degrees <= window."""
    fs = fock_space(y.space, D)
    lhs = expm(fs.rho_matrix(bch(y, y2, order)))
    rhs = expm(fs.rho_matrix(y)) @ expm(fs.rho_matrix(y2))
    s = fs.mask(window)
    return float(np.linalg.norm((lhs - rhs)[np.ix_(s, s)]))


def bch_slope(y: CentralElement, y2: CentralElement, order: int, D: int, window: int, eps=(0.1, 0.05)) -> float:
    """Observed order p in defect ~ eps^p from a two-point log-log fit."""
    e1, e2 = eps
    d1 = bch_defect(y * e1, y2 * e1, order, D, window)
    d2 = bch_defect(y * e2, y2 * e2, order, D, window)
    return math.log(d1 / d2) / math.log(e1 / e2)


@dataclass(frozen=True)
class SeminormEstimate:
    n: int
    value: float
    samples: int
    seed: int


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def seminorm_estimate(
    v: FockVector,
    n: int,
    samples: int,
    seed: int,
    family: Sequence[OspElement],
    D: int,
) -> SeminormEstimate:
    """Monte-Carlo lower bound for q_n(v) over unit-norm combinations of ``family``.

    Sample i depends only on (seed, i), so the estimate never decreases when
    ``samples`` grows.
    """
    if not family:
        raise ValueError("empty generating family")
    fs = fock_space(family[0].space, D)
    x = fs.to_array(v)
    if n == 0:
        return SeminormEstimate(0, float(np.linalg.norm(x)), samples, seed)
    mats = np.array([fs.rho_matrix(g) for g in family])
    best = 0.0
    for i in range(samples):
        rng = _sample_rng(seed, i)
        w = x
        for _ in range(n):
            c = rng.standard_normal(len(family))
            elem = family[0] * float(c[0])
            for g, ci in zip(family[1:], c[1:]):
                elem = elem + g * float(ci)
            scale = osp_norm(elem)
            if scale == 0:
                w = np.zeros_like(w)
                break
            w = np.tensordot(c / scale, mats, axes=1) @ w
        best = max(best, float(np.linalg.norm(w)))
    return SeminormEstimate(n, best, samples, seed)


def check_interpolation_bounds(v: FockVector, y, D: int) -> IdentityReport:
    """||rho(y) v|| <= 2^{-1/2} ||v||^{1/2} ||rho([y,y]) v||^{1/2} for odd y."""
    require_interior(D)
    y = _central(y)
    if y.parity != ODD:
        raise ParityError("interpolation bound needs an odd element")
    if v.max_degree() > D - 4:
        raise ValueError(f"vector reaches degree {v.max_degree()} beyond the safe interior D-4={D - 4}")
    fs = fock_space(y.space, D)
    x = fs.to_array(v)
    lhs = float(np.linalg.norm(fs.rho_matrix(y) @ x))
    sq = fs.rho_matrix(extended_bracket(y, y)) @ x
    rhs = math.sqrt(float(np.linalg.norm(x)) * float(np.linalg.norm(sq))) / math.sqrt(2.0)
    slack = rhs - lhs
    return IdentityReport(
        "interpolation_bound",
        max(-slack, 0.0),
        -INTERPOLATION_SLACK,
        D - 4,
        extra={"lhs": lhs, "rhs": rhs, "slack": slack},
    )


def seminorm_chain_report(
    v: FockVector,
    y: OspElement,
    n: int,
    samples: int,
    seed: int,
    family: Sequence[OspElement],
    D: int,
) -> dict:
    """Empirical slack in q_n(rho(y) v) <= ||y|| / (2 sqrt 2) * sum_k C(n+1, k) q_k(v).

    Both sides are Monte-Carlo lower bounds, so this is a measurement only.
    """
    fs = fock_space(y.space, D)
    yv = fs.from_array(fs.rho_matrix(y) @ fs.to_array(v))
    lhs = seminorm_estimate(yv, n, samples, seed, family, D).value
    qs = [seminorm_estimate(v, k, samples, seed, family, D).value for k in range(n + 2)]
    rhs = osp_norm(y) / (2 * math.sqrt(2)) * sum(comb(n + 1, k, exact=True) * q for k, q in enumerate(qs))
    return {"n": n, "lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "exact_range": v.max_degree() + 2 * (n + 1) <= D}
