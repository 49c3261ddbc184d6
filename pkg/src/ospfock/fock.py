"""Truncated super Fock space and the oscillator action of the extended osp_res.

Vectors are written over reduced monomials f_1^{r_1}...f_mf^{r_mf} b_1^{s_1}...b_mb^{s_mb}.
Fermionic factors anticommute, bosonic factors commute and mixed factors
commute.  A monomial is identified with the (super)symmetrised tensor of its
factors, which fixes the Hilbert structure:

    <M_{r,s}, M_{r,s}> = prod(s_m!) / (k + l)!

and makes the quadratic creation operator carry the weight
lambda_{k,l} = sqrt((k+l+1)(k+l+2)) / 2.  Operator matrices are assembled in
the orthonormal basis M_{r,s} / ||M_{r,s}||, so adjoints are conjugate
transposes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, NamedTuple

import numpy as np
from scipy import sparse

from .superalgebra import EVEN, ODD, CentralElement, OspElement, TruncatedSpace

ENUMERATION_TAG = "graded-lex-v1"


class FockIndex(NamedTuple):
    """Occupation record of a reduced monomial."""

    ferm: tuple[int, ...]
    bos: tuple[int, ...]

    @property
    def k(self) -> int:
        return sum(self.ferm)

    @property
    def l(self) -> int:  # noqa: E743
        return sum(self.bos)

    @property
    def degree(self) -> int:
        return self.k + self.l

    @property
    def grade(self) -> tuple[int, int]:
        return self.k, self.l

    @property
    def parity(self) -> int:
        return self.k % 2

    def word(self) -> list[int]:
        """Factor list in reduced order, as mode indices (fermions first)."""
        mf = len(self.ferm)
        out = [i for i, r in enumerate(self.ferm) if r]
        for j, s in enumerate(self.bos):
            out.extend([mf + j] * s)
        return out

    def norm2(self) -> float:
        return math.prod(math.factorial(s) for s in self.bos) / math.factorial(self.degree)

    def label(self) -> str:
        parts = [f"f{i + 1}" for i, r in enumerate(self.ferm) if r]
        for j, s in enumerate(self.bos):
            if s == 1:
                parts.append(f"b{j + 1}")
            elif s > 1:
                parts.append(f"b{j + 1}^{s}")
        return "*".join(parts) if parts else "1"

    def sort_key(self) -> tuple:
        bits = sum(r << i for i, r in enumerate(self.ferm))
        return (self.degree, self.k, bits, self.bos)


def vacuum_index(space: TruncatedSpace) -> FockIndex:
    return FockIndex((0,) * space.m_f, (0,) * space.m_b)


def reduce_word(word: Iterable[int], space: TruncatedSpace) -> tuple[FockIndex, int] | None:
    """Reduce a product of basis vectors (mode indices) to (index, sign).

    Returns None when a fermionic mode repeats.
    """
    mf = space.m_f
    ferm = [0] * mf
    bos = [0] * space.m_b
    sign = 1
    for m in word:
        if m < mf:
            if ferm[m]:
                return None
            # moving f_m left past the already-placed fermions with larger index
            if sum(ferm[m + 1 :]) % 2:
                sign = -sign
            ferm[m] = 1
        else:
            bos[m - mf] += 1
    return FockIndex(tuple(ferm), tuple(bos)), sign


class FockVector:
    """Finitely supported combination of reduced monomials."""

    __slots__ = ("_amps",)

    def __init__(self, amplitudes: dict[FockIndex, complex] | None = None):
        self._amps = {}
        if amplitudes:
            for idx, a in amplitudes.items():
                if a != 0:
                    self._amps[idx] = complex(a)

    @classmethod
    def monomial(cls, idx: FockIndex, coefficient: complex = 1.0) -> FockVector:
        return cls({idx: coefficient})

    @classmethod
    def vacuum(cls, space: TruncatedSpace) -> FockVector:
        return cls.monomial(vacuum_index(space))

    def items(self):
        return self._amps.items()

    def __getitem__(self, idx: FockIndex) -> complex:
        return self._amps.get(idx, 0j)

    def __len__(self):
        return len(self._amps)

    def __iter__(self):
        return iter(self._amps)

    def _add_term(self, idx: FockIndex, a: complex):
        new = self._amps.get(idx, 0j) + a
        if new == 0:
            self._amps.pop(idx, None)
        else:
            self._amps[idx] = new

    def __add__(self, other: FockVector) -> FockVector:
        out = FockVector(self._amps)
        for idx, a in other.items():
            out._add_term(idx, a)
        return out

    def __sub__(self, other: FockVector) -> FockVector:
        return self + other * -1

    def __mul__(self, c: complex) -> FockVector:
        return FockVector({idx: c * a for idx, a in self._amps.items()})

    __rmul__ = __mul__

    def max_degree(self) -> int:
        return max((idx.degree for idx in self._amps), default=0)

    def by_grade(self) -> dict[tuple[int, int], FockVector]:
        out: dict[tuple[int, int], FockVector] = {}
        for idx, a in self._amps.items():
            out.setdefault(idx.grade, FockVector())._add_term(idx, a)
        return out

    def allclose(self, other: FockVector, atol: float = 1e-12) -> bool:
        keys = set(self._amps) | set(other._amps)
        return all(abs(self[k] - other[k]) <= atol for k in keys)

    def norm(self) -> float:
        return math.sqrt(max(fock_inner(self, self).real, 0.0))

    def __repr__(self):
        terms = " + ".join(f"({a:.6g})*{idx.label()}" for idx, a in sorted(self._amps.items(), key=lambda t: t[0].sort_key()))
        return f"FockVector({terms or '0'})"


def reduce_monomial(factors, space: TruncatedSpace, coefficient: complex = 1.0) -> FockVector:
    """Expand a product of vectors of K into reduced monomials."""
    comps = []
    for v in factors:
        v = np.asarray(v, dtype=complex)
        if v.shape != (space.d,):
            raise ValueError(f"factor of shape {v.shape} is not a vector of the truncated K (d={space.d})")
        comps.append([(m, v[m]) for m in np.flatnonzero(v)])
    out = FockVector()
    for choice in itertools.product(*comps):
        coeff = coefficient * math.prod((c for _, c in choice), start=1.0 + 0j)
        red = reduce_word([m for m, _ in choice], space)
        if red is not None:
            idx, sign = red
            out._add_term(idx, sign * coeff)
    return out


def fock_inner(v: FockVector, w: FockVector) -> complex:
    """<v, w>, conjugate-linear in v."""
    total = 0j
    for idx, a in v.items():
        b = w[idx]
        if b:
            total += a.conjugate() * b * idx.norm2()
    return total


def lam(k: int, l: int) -> float:  # noqa: E741
    return 0.5 * math.sqrt((k + l + 1) * (k + l + 2))


def _derive(lin: np.ndarray, parity: int, v: FockVector, space: TruncatedSpace) -> FockVector:
    # graded derivation; the sign counts the fermionic factors passed, which is
    # what keeps it consistent with f_m f_n = -f_n f_m and f b = b f
    mf = space.m_f
    out = FockVector()
    for idx, amp in v.items():
        word = idx.word()
        passed = 0
        for pos, m in enumerate(word):
            sign = -1 if (parity and passed % 2) else 1
            col = lin[:, m]
            for j in np.flatnonzero(col):
                red = reduce_word(word[:pos] + [j] + word[pos + 1 :], space)
                if red is not None:
                    new, s = red
                    out._add_term(new, amp * sign * s * col[j])
            if m < mf:
                passed += 1
    return out


def _quadratic(conj: np.ndarray, v: FockVector, space: TruncatedSpace) -> FockVector:
    # lambda_{k,l} (i sum_r (T b_r) b_r + sum_r (T f_r) f_r) v, multiplied on the left
    mf = space.m_f
    out = FockVector()
    pairs = [(j, r, conj[j, r] * (1j if r >= mf else 1.0)) for j, r in zip(*np.nonzero(conj))]
    for idx, amp in v.items():
        weight = lam(idx.k, idx.l) * amp
        word = idx.word()
        for j, r, c in pairs:
            red = reduce_word([j, r] + word, space)
            if red is not None:
                new, s = red
                out._add_term(new, weight * s * c)
    return out


def rho_lin(x: OspElement, v: FockVector) -> FockVector:
    """Action of the complex-linear part of x as a graded derivation."""
    return _derive(x.lin, x.parity, v, x.space)


def a_op(x: OspElement, v: FockVector) -> FockVector:
    """Quadratic creation operator a(x_conj) applied to v, grade by grade."""
    return _quadratic(x.conj, v, x.space)


class FockSpace:
    """Basis enumeration and cached generator matrices at degree cap D."""

    def __init__(self, space: TruncatedSpace, D: int):
        if D < 0:
            raise ValueError("degree cap must be nonnegative")
        self.space = space
        self.D = D
        basis = []
        for m in range(D + 1):
            for k in range(min(m, space.m_f) + 1):
                for ferm_modes in itertools.combinations(range(space.m_f), k):
                    ferm = tuple(1 if i in ferm_modes else 0 for i in range(space.m_f))
                    for bos in _compositions(m - k, space.m_b):
                        basis.append(FockIndex(ferm, bos))
        basis.sort(key=FockIndex.sort_key)
        self.basis: list[FockIndex] = basis
        self.index = {idx: i for i, idx in enumerate(basis)}
        self.degrees = np.array([idx.degree for idx in basis])
        self.ks = np.array([idx.k for idx in basis])
        self.ls = np.array([idx.l for idx in basis])
        self.norms = np.sqrt([idx.norm2() for idx in basis])

    def __repr__(self):
        return f"FockSpace(m_f={self.space.m_f}, m_b={self.space.m_b}, D={self.D}, dim={self.dim})"

    @property
    def dim(self) -> int:
        return len(self.basis)

    def mask(self, max_degree: int) -> np.ndarray:
        return self.degrees <= max_degree

    def to_array(self, v: FockVector) -> np.ndarray:
        """Orthonormal coordinates of v."""
        out = np.zeros(self.dim, dtype=complex)
        for idx, a in v.items():
            i = self.index.get(idx)
            if i is None:
                raise ValueError(f"{idx.label()} lies beyond the degree cap D={self.D}")
            out[i] = a * self.norms[i]
        return out

    def from_array(self, arr) -> FockVector:
        arr = np.asarray(arr)
        return FockVector({self.basis[i]: arr[i] / self.norms[i] for i in np.flatnonzero(arr)})

    def _column(self, fv: FockVector, j: int) -> list[tuple[int, complex]]:
        out = []
        for idx, a in fv.items():
            i = self.index.get(idx)
            if i is not None:  # raising terms beyond D are clipped
                out.append((i, a * self.norms[i] / self.norms[j]))
        return out

    @cached_property
    def lin_units(self) -> np.ndarray:
        """Matrices of the derivation induced by each matrix unit E_{ji}; shape (d*d, N*N)."""
        d, N, par = self.space.d, self.dim, self.space.parity
        out = np.zeros((d, d, N, N), dtype=complex)
        for J, idx in enumerate(self.basis):
            mono = FockVector.monomial(idx)
            for j in range(d):
                for i in range(d):
                    E = np.zeros((d, d))
                    E[j, i] = 1.0
                    for K, a in self._column(_derive(E, int(par[j] ^ par[i]), mono, self.space), J):
                        out[j, i, K, J] += a
        return out.reshape(d * d, N * N)

    @cached_property
    def quad_units(self) -> np.ndarray:
        """Matrices of a(B) for each matrix unit B = E_{jr}; shape (d*d, N*N)."""
        d, N = self.space.d, self.dim
        out = np.zeros((d, d, N, N), dtype=complex)
        for J, idx in enumerate(self.basis):
            mono = FockVector.monomial(idx)
            for j in range(d):
                for r in range(d):
                    E = np.zeros((d, d))
                    E[j, r] = 1.0
                    for K, a in self._column(_quadratic(E, mono, self.space), J):
                        out[j, r, K, J] += a
        return out.reshape(d * d, N * N)

    def lin_matrix(self, x: OspElement) -> np.ndarray:
        N = self.dim
        return (x.lin.ravel() @ self.lin_units).reshape(N, N)

    def a_matrix(self, x: OspElement) -> np.ndarray:
        N = self.dim
        return (x.conj.ravel() @ self.quad_units).reshape(N, N)

    def a_dagger_matrix(self, x: OspElement) -> np.ndarray:
        phase = 1.0 if x.parity == EVEN else -1j
        return phase * self.a_matrix(x).conj().T

    def rho_matrix(self, u: CentralElement | OspElement) -> np.ndarray:
        """Dense matrix of rho^F(u) at this cap."""
        if isinstance(u, OspElement):
            u = CentralElement(u, 0.0)
        x = u.body
        M = self.lin_matrix(x)
        if x.conj.any():
            M = M + self.a_matrix(x) - self.a_dagger_matrix(x)
        if u.z:
            M = M + 1j * u.z * np.eye(self.dim)
        return M


@lru_cache(maxsize=32)
def fock_space(space: TruncatedSpace, D: int) -> FockSpace:
    return FockSpace(space, D)


def _compositions(total: int, parts: int):
    """Occupation tuples of `parts` modes summing to `total`, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def degree_shifts(x: OspElement) -> frozenset[tuple[int, int]]:
    shifts = set()
    mf = x.space.m_f
    if x.lin.any():
        if x.parity == EVEN:
            shifts.add((0, 0))
        else:
            if x.lin[mf:, :mf].any() or x.lin[:mf, mf:].any():
                shifts |= {(1, -1), (-1, 1)}
    B = x.conj
    if B.any():
        if x.parity == EVEN:
            if B[:mf, :mf].any():
                shifts |= {(2, 0), (-2, 0)}
            if B[mf:, mf:].any():
                shifts |= {(0, 2), (0, -2)}
        else:
            shifts |= {(1, 1), (-1, -1)}
    return frozenset(shifts)


@dataclass(frozen=True, eq=False)
class FockOperator:
    matrix: sparse.csr_matrix
    fock: FockSpace
    degree_shifts: frozenset
    safe_degree: int

    @classmethod
    def from_dense(cls, M: np.ndarray, fock: FockSpace, shifts, safe_degree: int) -> FockOperator:
        S = sparse.csr_matrix(M)
        S.eliminate_zeros()
        S.sort_indices()
        return cls(S, fock, frozenset(shifts), safe_degree)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, v: FockVector) -> FockVector:
        return self.fock.from_array(self.matrix @ self.fock.to_array(v))

    def to_triplet_text(self, name: str) -> str:
        return triplet_text(self, name)


def _safe(x: OspElement, D: int) -> int:
    return D - 2 if x.conj.any() else D


def rho_full(u: CentralElement | OspElement, D: int) -> FockOperator:
    if isinstance(u, OspElement):
        u = CentralElement(u, 0.0)
    fs = fock_space(u.space, D)
    shifts = set(degree_shifts(u.body))
    if u.z:
        shifts.add((0, 0))
    return FockOperator.from_dense(fs.rho_matrix(u), fs, shifts, _safe(u.body, D))


def a_operator(x: OspElement, D: int) -> FockOperator:
    fs = fock_space(x.space, D)
    raising = {s for s in degree_shifts(x) if s[0] + s[1] == 2}
    return FockOperator.from_dense(fs.a_matrix(x), fs, raising, _safe(x, D))


def a_dagger(x: OspElement, D: int) -> FockOperator:
    """Superadjoint a(x_conj)^dagger: a^* for even x, -i a^* for odd x."""
    fs = fock_space(x.space, D)
    lowering = {s for s in degree_shifts(x) if s[0] + s[1] == -2}
    return FockOperator.from_dense(fs.a_dagger_matrix(x), fs, lowering, _safe(x, D))


def _fmt(v: float) -> str:
    return repr(float(v))


def triplet_text(op: FockOperator, name: str) -> str:
    """Grade-annotated sparse-triplet serialisation (see README)."""
    fs = op.fock
    S = op.matrix.tocoo()
    order = np.lexsort((S.col, S.row))
    lines = [
        "# ospfock sparse-triplet",
        "format 1",
        f"enumeration {ENUMERATION_TAG}",
        f"operator {name}",
        f"space m_f={fs.space.m_f} m_b={fs.space.m_b} D={fs.D}",
        f"shape {fs.dim} {fs.dim}",
        f"safe_degree {op.safe_degree}",
        "degree_shifts " + " ".join(f"{a},{b}" for a, b in sorted(op.degree_shifts)),
        f"basis {fs.dim}",
    ]
    for i, idx in enumerate(fs.basis):
        ferm = "".join(str(r) for r in idx.ferm)
        bos = ",".join(str(s) for s in idx.bos)
        lines.append(f"{i} {idx.k} {idx.l} {ferm} {bos}")
    lines.append(f"entries {len(order)}")
    for t in order:
        val = S.data[t]
        lines.append(f"{S.row[t]} {S.col[t]} {_fmt(val.real)} {_fmt(val.imag)}")
    return "\n".join(lines) + "\n"


def parse_triplet_text(text: str) -> tuple[dict, sparse.csr_matrix]:
    """Inverse of :func:`triplet_text`; returns (header, matrix)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header: dict = {}
    it = iter(lines)
    for ln in it:
        key, _, rest = ln.partition(" ")
        if key == "basis":
            n = int(rest)
            header["basis"] = [next(it) for _ in range(n)]
            continue
        if key == "entries":
            n = int(rest)
            rows, cols, vals = [], [], []
            for _ in range(n):
                r, c, re, im = next(it).split()
                rows.append(int(r))
                cols.append(int(c))
                vals.append(complex(float(re), float(im)))
            shape = tuple(int(s) for s in header["shape"].split())
            return header, sparse.csr_matrix((vals, (rows, cols)), shape=shape)
        header[key] = rest
    raise ValueError("missing entries section")
