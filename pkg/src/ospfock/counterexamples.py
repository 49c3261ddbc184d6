"""Closed forms and divergence witnesses for the singular function h = G^{-1}(1 - x)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize, special

from .reports import IdentityReport

MAX_MOMENT = 8
FACTORIAL_CHECK_MAX = 20


class DivergenceError(ArithmeticError):
    """Quadrature refinement did not settle; the integral appears infinite."""


def G_eval(x: float) -> float:
    """G(x) = 1/2 int_0^x e^{-sqrt t} dt = 1 - e^{-sqrt x}(1 + sqrt x)."""
    if x < 0:
        raise ValueError(f"G is defined on [0, inf), got {x}")
    # regularised lower incomplete gamma P(2, u) = 1 - e^{-u}(1 + u)
    return float(special.gammainc(2.0, math.sqrt(x)))


def G_quad(x: float) -> float:
    """G by adaptive quadrature after t = u^2 (independent of the closed form)."""
    if x < 0:
        raise ValueError(f"G is defined on [0, inf), got {x}")
    val, _ = integrate.quad(lambda u: u * math.exp(-u), 0.0, math.sqrt(x), epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def _root_of_log(s: float) -> float:
    # sqrt(h) as the root u >= 0 of u - log(1 + u) = s, i.e. e^{-u}(1 + u) = e^{-s}
    if s == 0.0:
        return 0.0
    hi = 2.0 * s + 2.0
    return optimize.brentq(lambda u: u - math.log1p(u) - s, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def h_of_log(s: float) -> float:
    """h(e^{-s}) for s >= 0, avoiding underflow near the singular endpoint."""
    if s < 0:
        raise ValueError("h is defined on (0, 1]")
    return _root_of_log(s) ** 2


def h_eval(x: float) -> float:
    """h(x) = G^{-1}(1 - x) for 0 < x <= 1."""
    if not 0.0 < x <= 1.0:
        raise ValueError(f"h is defined on (0, 1], got {x}")
    return h_of_log(-math.log(x))


def moment_integral(n: int) -> float:
    """int_0^1 h(x)^n dx by quadrature in s = -log x."""
    if n < 0:
        raise ValueError("moment order must be nonnegative")
    if n > MAX_MOMENT:
        raise ValueError(f"moment order {n} > {MAX_MOMENT} is refused (quadrature conditioning)")
    if n == 0:
        return 1.0
    val, _ = integrate.quad(lambda s: h_of_log(s) ** n * math.exp(-s), 0.0, np.inf, epsabs=0.0, epsrel=1e-11, limit=400)
    return val


@dataclass(frozen=True)
class SampledFunction:
    """Function on (0, 1]; ``at_log(s)`` evaluates it at x = e^{-s}."""

    name: str
    at_log: Callable[[float], float]
    singular_at_zero: bool = False

    def __call__(self, x: float) -> float:
        return self.at_log(-math.log(x))

    def scaled(self, c: float) -> SampledFunction:
        return SampledFunction(f"{c!r}*{self.name}", lambda s, f=self.at_log: c * f(s), self.singular_at_zero)


def constant(c: float) -> SampledFunction:
    return SampledFunction(f"const({c!r})", lambda s: c)


LOG = SampledFunction("log", lambda s: -s, singular_at_zero=True)
H = SampledFunction("h", h_of_log, singular_at_zero=True)


def lp_integral(f: SampledFunction, n: int) -> float:
    """int_0^1 |f|^n dx; raises DivergenceError if refinement toward 0 never settles."""
    def g(s):
        v = abs(f.at_log(s))
        return math.exp(n * math.log(v) - s) if v > 0 else 0.0

    if not f.singular_at_zero:
        # Gauss-Kronrod nodes are interior, so x = 0 is never evaluated
        val, _ = integrate.quad(lambda x: abs(f(x)) ** n, 0.0, 1.0, epsabs=0.0, epsrel=1e-11, limit=400)
        return val
    total = 0.0
    lo = 0.0
    hi = 16.0
    while hi <= 4096.0:
        try:
            piece, _ = integrate.quad(g, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)
        except OverflowError:
            break
        total += piece
        if total > 0 and piece <= 1e-14 * total:
            return total
        if not math.isfinite(total):
            break
        lo, hi = hi, 2.0 * hi
    raise DivergenceError(f"int_0^1 |{f.name}|^{n} did not settle")


def lp_norm(f: SampledFunction, n: int) -> float:
    if n < 1:
        raise ValueError("L^n norm needs n >= 1")
    return lp_integral(f, n) ** (1.0 / n)


@dataclass(frozen=True)
class BanachNorm:
    value: float
    argmax: int
    settled: bool
    ratios: tuple[float, ...]


def _c_n(scheme: str, n: int) -> float:
    if scheme == "A":
        # ||h||_n = ((2n+1)!)^{1/n}
        return math.exp(math.lgamma(2 * n + 2) / n)
    if scheme == "B":
        return math.exp(math.lgamma(n + 1) / n)
    raise ValueError(f"unknown scheme {scheme!r}; use 'A' or 'B'")


def banach_norm(f: SampledFunction, scheme: str, n_max: int) -> BanachNorm:
    """sup_{n <= n_max} ||f||_n / c_n with c_n = ||h||_n (A) or (n!)^{1/n} (B)."""
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    ratios = tuple(lp_norm(f, n) / _c_n(scheme, n) for n in range(1, n_max + 1))
    k = int(np.argmax(ratios))
    return BanachNorm(ratios[k], k + 1, k + 1 < n_max, ratios)


def factorial_inequality(n_max: int = FACTORIAL_CHECK_MAX) -> bool:
    """(2n)! <= 2^{2n} (n!)^2 in exact integers for n <= n_max."""
    return all(math.factorial(2 * n) <= 4**n * math.factorial(n) ** 2 for n in range(n_max + 1))


def analytic_bound_check(f: SampledFunction, n_max: int = 20) -> IdentityReport:
    """sum_{n <= n_max} ||f||_{2n}^n / n! <= 1 / (1 - 2||f||) with the scheme-B norm.

    The norm is taken over all orders up to 2 n_max, which covers every order
    the partial sum touches.
    """
    norm = banach_norm(f, "B", max(2 * n_max, 4)).value
    if norm >= 0.5:
        raise ValueError(f"scheme-B norm {norm:.6g} must be < 1/2")
    total = 1.0
    for n in range(1, n_max + 1):
        total += lp_norm(f, 2 * n) ** n / math.factorial(n)
    bound = 1.0 / (1.0 - 2.0 * norm)
    fact_ok = factorial_inequality()
    excess = max(total - bound, 0.0)
    return IdentityReport(
        f"analytic_bound[{f.name}]",
        excess if fact_ok else math.inf,
        1e-8,
        extra={"sum": total, "bound": bound, "norm": norm, "factorial_inequality": fact_ok},
    )


def random_bounded_log_function(rng: np.random.Generator, target_norm: float) -> SampledFunction:
    """Cosine polynomial plus a log term, rescaled to the given scheme-B norm."""
    a = rng.standard_normal(4)
    c = rng.standard_normal()

    def at_log(s, a=a, c=c):
        x = math.exp(-s)
        return sum(ak * math.cos(k * math.pi * x) for k, ak in enumerate(a)) - c * s

    f = SampledFunction("sample", at_log, singular_at_zero=True)
    norm = banach_norm(f, "B", 40).value
    return f.scaled(target_norm / norm)


@dataclass(frozen=True)
class DivergenceWitness:
    t: float
    eps: float
    rows: tuple[tuple[int, float, float], ...]  # (level, delta, log10 integral)
    status: str  # "diverges", "settles" or "inconclusive"
    threshold: float

    @property
    def monotone(self) -> bool:
        vals = [r[2] for r in self.rows]
        return all(b > a for a, b in zip(vals, vals[1:]))


def divergence_witness(t: float, eps: float, levels: int = 40, threshold: float = 1e6) -> DivergenceWitness:
    """int_delta^eps e^{t h(x)} dx for delta = eps / 2^level, level = 1..levels.

    Values are kept as log10 so the table survives overflow.  Only reports
    "diverges" once the threshold is crossed.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    s0 = -math.log(eps)
    log_total = -math.inf
    rows = []
    crossed = False
    last_rel = math.inf
    for level in range(1, levels + 1):
        a, b = s0 + (level - 1) * math.log(2.0), s0 + level * math.log(2.0)
        g = lambda s: t * h_of_log(s) - s  # noqa: E731  log of the integrand in s
        peak = max(g(a), g(b), g(0.5 * (a + b)))
        piece, _ = integrate.quad(lambda s: math.exp(g(s) - peak), a, b, epsabs=0.0, epsrel=1e-12, limit=200)
        log_piece = math.log(piece) + peak
        new_total = np.logaddexp(log_total, log_piece)
        last_rel = math.exp(log_piece - new_total)
        log_total = new_total
        delta = eps * 2.0**-level
        rows.append((level, delta, float(log_total) / math.log(10.0)))
        if log_total > math.log(threshold):
            crossed = True
    if crossed:
        status = "diverges"
    elif last_rel < 1e-9:
        status = "settles"
    else:
        status = "inconclusive"
    return DivergenceWitness(float(t), float(eps), tuple(rows), status, threshold)
