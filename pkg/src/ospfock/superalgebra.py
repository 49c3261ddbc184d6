"""Truncated restricted orthosymplectic Lie superalgebra and its central extension.

A real-linear operator on the complex space K = K0 + K1 is stored as a pair
``(lin, conj)`` of complex matrices acting by ``v -> lin @ v + conj @ conj(v)``.
K0 carries the fermionic modes f_1..f_mf (the real form Re<.,.>), K1 the
bosonic modes b_1..b_mb (the symplectic form Im<.,.>).  Coordinates are
ordered fermions first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import gammainc

EVEN = 0
ODD = 1

MEMBERSHIP_TOL = 1e-10

# ||[x, y]||' <= 2 ||x||' ||y||' (product rule for the lin/conj pair, two
# products per bracket), so 2 * ||.||' satisfies the bracket norm inequality.
NORM_SCALE = 2.0


class ParityError(ValueError):
    """Raised when an operator's block structure disagrees with its parity."""


@dataclass(frozen=True)
class TruncatedSpace:
    m_f: int
    m_b: int

    def __post_init__(self):
        if self.m_f < 1 or self.m_b < 1:
            raise ValueError(f"need m_f >= 1 and m_b >= 1, got {self.m_f}, {self.m_b}")

    @property
    def d(self) -> int:
        return self.m_f + self.m_b

    @cached_property
    def parity(self) -> np.ndarray:
        """Parity of each basis vector: 0 for f_r, 1 for b_r."""
        return np.array([0] * self.m_f + [1] * self.m_b)

    @cached_property
    def J_plus(self) -> np.ndarray:
        return 1j * np.eye(self.d)

    @cached_property
    def J_minus(self) -> np.ndarray:
        # J_- v = -(-1)^{p(v)} i v
        return np.diag(-1j * (-1.0) ** self.parity)

    def f(self, r: int) -> np.ndarray:
        """Fermionic basis vector f_r (1-based)."""
        if not 1 <= r <= self.m_f:
            raise IndexError(f"f_{r} outside 1..{self.m_f}")
        e = np.zeros(self.d, dtype=complex)
        e[r - 1] = 1.0
        return e

    def b(self, r: int) -> np.ndarray:
        """Bosonic basis vector b_r (1-based)."""
        if not 1 <= r <= self.m_b:
            raise IndexError(f"b_{r} outside 1..{self.m_b}")
        e = np.zeros(self.d, dtype=complex)
        e[self.m_f + r - 1] = 1.0
        return e

    def parity_mask(self, parity: int) -> np.ndarray:
        """Boolean d x d mask of matrix entries allowed for the given parity."""
        p = self.parity
        return (p[:, None] ^ p[None, :]) == parity

    @cached_property
    def form_matrix(self) -> np.ndarray:
        """Real 2d x 2d Gram matrix of (.,.) = Re<.,.> on K0 plus Im<.,.> on K1.

        Real coordinates of z are [Re z, Im z].
        """
        d = self.d
        even = np.diag((self.parity == 0).astype(float))
        odd = np.diag((self.parity == 1).astype(float))
        return np.block([[even, odd], [-odd, even]])


@dataclass(frozen=True, eq=False)
class RealLinearOperator:
    lin: np.ndarray
    conj: np.ndarray

    def __post_init__(self):
        lin = np.array(self.lin, dtype=complex)
        conj = np.array(self.conj, dtype=complex)
        if lin.ndim != 2 or lin.shape[0] != lin.shape[1] or lin.shape != conj.shape:
            raise ValueError(f"lin/conj must be equal square matrices, got {lin.shape}, {conj.shape}")
        lin.setflags(write=False)
        conj.setflags(write=False)
        object.__setattr__(self, "lin", lin)
        object.__setattr__(self, "conj", conj)

    @classmethod
    def zeros(cls, d: int) -> RealLinearOperator:
        return cls(np.zeros((d, d)), np.zeros((d, d)))

    @property
    def d(self) -> int:
        return self.lin.shape[0]

    def __call__(self, v):
        v = np.asarray(v, dtype=complex)
        return self.lin @ v + self.conj @ v.conj()

    def __matmul__(self, other: RealLinearOperator) -> RealLinearOperator:
        # (A1 + B1 K)(A2 + B2 K) with K complex conjugation, K A = conj(A) K
        A1, B1, A2, B2 = self.lin, self.conj, other.lin, other.conj
        return RealLinearOperator(A1 @ A2 + B1 @ B2.conj(), A1 @ B2 + B1 @ A2.conj())

    def __add__(self, other: RealLinearOperator) -> RealLinearOperator:
        return RealLinearOperator(self.lin + other.lin, self.conj + other.conj)

    def __sub__(self, other: RealLinearOperator) -> RealLinearOperator:
        return RealLinearOperator(self.lin - other.lin, self.conj - other.conj)

    def __neg__(self) -> RealLinearOperator:
        return RealLinearOperator(-self.lin, -self.conj)

    def scale(self, c: float) -> RealLinearOperator:
        """Multiply by a real scalar (complex scalars do not commute with conj)."""
        if np.iscomplexobj(c) and np.imag(c) != 0:
            raise TypeError("real-linear operators only admit real scalars")
        c = float(np.real(c))
        return RealLinearOperator(c * self.lin, c * self.conj)

    def real_matrix(self) -> np.ndarray:
        """2d x 2d real matrix in the coordinates [Re z, Im z]."""
        Ar, Ai = self.lin.real, self.lin.imag
        Br, Bi = self.conj.real, self.conj.imag
        return np.block([[Ar + Br, -Ai + Bi], [Ai + Bi, Ar - Br]])

    @classmethod
    def from_real_matrix(cls, R: np.ndarray) -> RealLinearOperator:
        R = np.asarray(R, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] % 2:
            raise ValueError(f"expected a 2d x 2d real matrix, got {R.shape}")
        d = R.shape[0] // 2
        # images of the real basis e_j and i e_j as complex columns
        images = R[:d] + 1j * R[d:]
        return decompose(images)

    def coords(self) -> np.ndarray:
        """Real coordinate vector; Frobenius geometry on the (lin, conj) pair."""
        return np.concatenate(
            [self.lin.real.ravel(), self.lin.imag.ravel(), self.conj.real.ravel(), self.conj.imag.ravel()]
        )

    @classmethod
    def from_coords(cls, c: np.ndarray, d: int) -> RealLinearOperator:
        n = d * d
        c = np.asarray(c, dtype=float)
        lin = (c[:n] + 1j * c[n : 2 * n]).reshape(d, d)
        conj = (c[2 * n : 3 * n] + 1j * c[3 * n :]).reshape(d, d)
        return cls(lin, conj)

    def allclose(self, other: RealLinearOperator, atol: float = 1e-12) -> bool:
        return np.allclose(self.lin, other.lin, atol=atol) and np.allclose(self.conj, other.conj, atol=atol)


def decompose(images) -> RealLinearOperator:
    """Split a real-linear map into its complex-linear and conjugate-linear parts.

    ``images`` is a complex d x 2d array whose columns are T(e_1), ..., T(e_d),
    T(i e_1), ..., T(i e_d).  Uses T_lin = (T - J T J)/2, T_conj = (T + J T J)/2
    with J multiplication by i.
    """
    images = np.asarray(images, dtype=complex)
    if images.ndim != 2 or images.shape[1] != 2 * images.shape[0]:
        raise ValueError(f"expected a d x 2d array of images, got shape {images.shape}")
    d = images.shape[0]
    Te, Tie = images[:, :d], images[:, d:]
    # T_lin(e_j) = (T e_j - i T(i e_j))/2 ; T_conj(e_j) = B conj(e_j) = B e_j
    lin = 0.5 * (Te - 1j * Tie)
    conj = 0.5 * (Te + 1j * Tie)
    return RealLinearOperator(lin, conj)


def _structure_defect(space: TruncatedSpace, op: RealLinearOperator, parity: int) -> float:
    forbidden = ~space.parity_mask(parity)
    return float(max(np.abs(op.lin[forbidden]).max(initial=0.0), np.abs(op.conj[forbidden]).max(initial=0.0)))


def orthosymplectic_defect(space: TruncatedSpace, op: RealLinearOperator, parity: int) -> float:
    """max |(Tv,w) + (-1)^{p(T)p(v)} (v,Tw)| over the real basis pairs."""
    R = op.real_matrix()
    Phi = space.form_matrix
    sign = (-1.0) ** (parity * np.concatenate([space.parity, space.parity]))
    # rows index v, columns index w
    defect = R.T @ Phi + sign[:, None] * (Phi @ R)
    return float(np.abs(defect).max())


@dataclass(frozen=True, eq=False)
class OspElement:
    """Parity-homogeneous element of the truncated osp_res(K)."""

    space: TruncatedSpace
    op: RealLinearOperator
    parity: int
    residual: float = field(init=False)

    def __post_init__(self):
        if self.parity not in (EVEN, ODD):
            raise ValueError(f"parity must be 0 or 1, got {self.parity}")
        if self.op.d != self.space.d:
            raise ValueError(f"operator dimension {self.op.d} does not match space dimension {self.space.d}")
        bad = _structure_defect(self.space, self.op, self.parity)
        if bad > MEMBERSHIP_TOL:
            raise ParityError(f"block structure violates parity {self.parity} (max stray entry {bad:.3g})")
        object.__setattr__(self, "residual", orthosymplectic_defect(self.space, self.op, self.parity))

    @classmethod
    def zero(cls, space: TruncatedSpace, parity: int = EVEN) -> OspElement:
        return cls(space, RealLinearOperator.zeros(space.d), parity)

    @classmethod
    def from_parts(cls, space: TruncatedSpace, lin, conj, parity: int) -> OspElement:
        return cls(space, RealLinearOperator(lin, conj), parity)

    @property
    def lin(self) -> np.ndarray:
        return self.op.lin

    @property
    def conj(self) -> np.ndarray:
        return self.op.conj

    @property
    def certified(self) -> bool:
        return self.residual <= MEMBERSHIP_TOL

    def raw_norm(self) -> float:
        return raw_norm(self)

    def norm(self) -> float:
        return osp_norm(self)

    def _check_compatible(self, other: OspElement):
        if self.space != other.space:
            raise ValueError("elements live on different truncated spaces")
        if self.parity != other.parity:
            raise ParityError("sum of elements of different parity is not homogeneous")

    def __add__(self, other: OspElement) -> OspElement:
        self._check_compatible(other)
        return OspElement(self.space, self.op + other.op, self.parity)

    def __sub__(self, other: OspElement) -> OspElement:
        self._check_compatible(other)
        return OspElement(self.space, self.op - other.op, self.parity)

    def __neg__(self) -> OspElement:
        return OspElement(self.space, -self.op, self.parity)

    def __mul__(self, c: float) -> OspElement:
        return OspElement(self.space, self.op.scale(c), self.parity)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> OspElement:
        return self * (1.0 / c)

    def allclose(self, other: OspElement, atol: float = 1e-12) -> bool:
        return self.parity == other.parity and self.op.allclose(other.op, atol=atol)

    def __repr__(self):
        return f"OspElement(parity={self.parity}, norm={self.norm():.6g}, residual={self.residual:.3g})"


@dataclass(frozen=True, eq=False)
class CentralElement:
    """Element (T, z) of the central extension osp_res + R."""

    body: OspElement
    z: float = 0.0

    def __post_init__(self):
        if self.body.parity == ODD and self.z != 0.0:
            raise ParityError("the centre is even; an odd element cannot carry a central part")

    @property
    def parity(self) -> int:
        return self.body.parity

    @property
    def space(self) -> TruncatedSpace:
        return self.body.space

    @classmethod
    def central(cls, space: TruncatedSpace, z: float = 1.0) -> CentralElement:
        return cls(OspElement.zero(space, EVEN), float(z))

    def __add__(self, other: CentralElement) -> CentralElement:
        return CentralElement(self.body + other.body, self.z + other.z)

    def __sub__(self, other: CentralElement) -> CentralElement:
        return CentralElement(self.body - other.body, self.z - other.z)

    def __neg__(self) -> CentralElement:
        return CentralElement(-self.body, -self.z)

    def __mul__(self, c: float) -> CentralElement:
        return CentralElement(self.body * c, float(c) * self.z)

    __rmul__ = __mul__

    def allclose(self, other: CentralElement, atol: float = 1e-12) -> bool:
        return self.body.allclose(other.body, atol=atol) and abs(self.z - other.z) <= atol


def osp_residual(x: OspElement) -> float:
    return x.residual


def raw_norm(x: OspElement) -> float:
    """||T_lin||_Op + ||T_conj||_HS, the HS norm taken over the real structure."""
    op_norm = np.linalg.norm(x.lin, 2) if x.lin.any() else 0.0
    return float(op_norm + math.sqrt(2.0) * np.linalg.norm(x.conj))


def osp_norm(x: OspElement) -> float:
    """Rescaled norm satisfying ||[x, y]|| <= ||x|| ||y||."""
    return NORM_SCALE * raw_norm(x)


def superbracket(x: OspElement, y: OspElement) -> OspElement:
    if x.space != y.space:
        raise ValueError("elements live on different truncated spaces")
    sign = (-1.0) ** (x.parity * y.parity)
    op = (x.op @ y.op) - (y.op @ x.op).scale(sign)
    return OspElement(x.space, op, (x.parity + y.parity) % 2)


def realtrace(L: np.ndarray) -> float:
    """Trace of a complex-linear map over the underlying real space."""
    return 2.0 * float(np.trace(L).real)


def cocycle(x: OspElement, y: OspElement) -> float:
    """omega(x, y) = -1/2 realtrace(J_- x_conj y_conj) for equal parity, else 0.

    J_- is used for both parities: with J_+ on even pairs the form fails the
    2-cocycle identity on (even, odd, odd) triples.
    """
    if x.parity != y.parity:
        return 0.0
    J = x.space.J_minus
    # x_conj y_conj v = Bx conj(By conj v) = Bx conj(By) v
    return -0.5 * realtrace(J @ x.conj @ y.conj.conj())


def extended_bracket(u: CentralElement, v: CentralElement) -> CentralElement:
    return CentralElement(superbracket(u.body, v.body), cocycle(u.body, v.body))


def _op_size(x: OspElement) -> float:
    return float(np.linalg.norm(x.lin) + np.linalg.norm(x.conj))


def jacobi_residual(x: OspElement, y: OspElement, z: OspElement) -> float:
    """Relative residual of the graded Jacobi identity, cyclic form."""
    px, py, pz = x.parity, y.parity, z.parity
    terms = [
        superbracket(x, superbracket(y, z)) * (-1.0) ** (px * pz),
        superbracket(y, superbracket(z, x)) * (-1.0) ** (py * px),
        superbracket(z, superbracket(x, y)) * (-1.0) ** (pz * py),
    ]
    total = terms[0] + terms[1] + terms[2]
    scale = max(1.0, *(_op_size(t) for t in terms))
    return _op_size(total) / scale


def cocycle_identity_residual(x: OspElement, y: OspElement, z: OspElement) -> float:
    """Relative residual of the graded 2-cocycle identity for omega."""
    px, py, pz = x.parity, y.parity, z.parity
    terms = [
        (-1.0) ** (px * pz) * cocycle(x, superbracket(y, z)),
        (-1.0) ** (py * px) * cocycle(y, superbracket(z, x)),
        (-1.0) ** (pz * py) * cocycle(z, superbracket(x, y)),
    ]
    return abs(sum(terms)) / max(1.0, *(abs(t) for t in terms))


def cocycle_symmetry_residual(x: OspElement, y: OspElement) -> float:
    """omega(x, y) + (-1)^{p(x)p(y)} omega(y, x), which must vanish."""
    a, b = cocycle(x, y), cocycle(y, x)
    return abs(a + (-1.0) ** (x.parity * y.parity) * b) / max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class OrbitSum:
    value: OspElement
    terms: int
    tail_bound: float


def adjoint_orbit(y: OspElement, x: OspElement, n_max: int) -> OrbitSum:
    """Partial sum of e^{ad_y} x = sum_n ad_y^n(x)/n! up to n_max."""
    if y.parity != EVEN:
        raise ParityError("adjoint orbit needs an even direction")
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    total = x
    term = x
    for n in range(1, n_max + 1):
        term = superbracket(y, term) / n
        total = total + term
    a = osp_norm(y)
    tail = osp_norm(x) * _poisson_tail(a, n_max)
    return OrbitSum(total, n_max, tail)


def _poisson_tail(a: float, n_max: int) -> float:
    """sum_{n > n_max} a^n / n!."""
    if a == 0.0:
        return 0.0
    return float(math.exp(a) * gammainc(n_max + 1, a))


def orbit_terms_needed(y: OspElement, x: OspElement, tol: float = 1e-12, n_cap: int = 60) -> int | None:
    """Smallest n_max with tail bound <= tol, or None if n_cap does not suffice."""
    a = osp_norm(y)
    scale = osp_norm(x)
    for n in range(n_cap + 1):
        if scale * _poisson_tail(a, n) <= tol:
            return n
    return None


def complexification_bounds(v1, v2, norm=np.linalg.norm) -> tuple[float, float]:
    """Sandwich max(|v1|, |v2|) <= |v1 + i v2|_C <= |v1| + |v2|."""
    n1, n2 = float(norm(v1)), float(norm(v2))
    return max(n1, n2), n1 + n2


# --- canonical generators and projection -------------------------------------------------


def _unit(d, i, j, c=1.0):
    M = np.zeros((d, d), dtype=complex)
    M[i, j] = c
    return M


@lru_cache(maxsize=None)
def canonical_generators(space: TruncatedSpace) -> tuple[tuple[str, OspElement], ...]:
    """A fixed real basis of the truncated osp_res, with stable names.

    Mode labels are 1-based.  Names look like ``even.lin.f.1.2.re``.
    """
    d, mf = space.d, space.m_f
    Z = np.zeros((d, d), dtype=complex)
    out: list[tuple[str, OspElement]] = []

    def add(name, lin, conj, parity):
        out.append((name, OspElement(space, RealLinearOperator(lin, conj), parity)))

    blocks = [("f", range(mf)), ("b", range(mf, d))]
    # even, complex-linear: skew-Hermitian blocks
    for tag, idx in blocks:
        off = 0 if tag == "f" else mf
        for i in idx:
            for j in idx:
                if i < j:
                    add(f"even.lin.{tag}.{i - off + 1}.{j - off + 1}.re", _unit(d, i, j) - _unit(d, j, i), Z, EVEN)
                    add(f"even.lin.{tag}.{i - off + 1}.{j - off + 1}.im", _unit(d, i, j, 1j) + _unit(d, j, i, 1j), Z, EVEN)
                elif i == j:
                    add(f"even.lin.{tag}.{i - off + 1}.{i - off + 1}.im", _unit(d, i, i, 1j), Z, EVEN)
    # even, conjugate-linear: antisymmetric on K0, symmetric on K1
    for tag, idx in blocks:
        off = 0 if tag == "f" else mf
        sym = -1.0 if tag == "f" else 1.0
        for i in idx:
            for j in idx:
                if i < j or (i == j and tag == "b"):
                    for part, c in (("re", 1.0), ("im", 1j)):
                        B = _unit(d, i, j, c) + sym * _unit(d, j, i, c)
                        if i == j:
                            B = _unit(d, i, i, c)
                        add(f"even.conj.{tag}.{i - off + 1}.{j - off + 1}.{part}", Z, B, EVEN)
    # odd, complex-linear: A_10 free (K0 -> K1), A_01 = i A_10^*
    for a in range(mf):
        for r in range(space.m_b):
            j = mf + r
            for part, c in (("re", 1.0), ("im", 1j)):
                A10 = _unit(d, j, a, c)
                A = A10 + 1j * A10.conj().T
                add(f"odd.lin.{a + 1}.{r + 1}.{part}", A, Z, ODD)
    # odd, conjugate-linear: B_01 free (K1 -> K0), B_10 = i B_01^T
    for a in range(mf):
        for r in range(space.m_b):
            j = mf + r
            for part, c in (("re", 1.0), ("im", 1j)):
                B01 = _unit(d, a, j, c)
                B = B01 + 1j * B01.T
                add(f"odd.conj.{a + 1}.{r + 1}.{part}", Z, B, ODD)
    return tuple(out)


def osp_dimension(space: TruncatedSpace, parity: int) -> int:
    mf, mb = space.m_f, space.m_b
    if parity == EVEN:
        return mf * mf + mb * mb + mf * (mf - 1) + mb * (mb + 1)
    return 4 * mf * mb


@lru_cache(maxsize=None)
def _orthonormal_coords(space: TruncatedSpace, parity: int) -> np.ndarray:
    gens = [g for _, g in canonical_generators(space) if g.parity == parity]
    M = np.array([g.op.coords() for g in gens]).T
    Q, _ = np.linalg.qr(M)
    Q.setflags(write=False)
    return Q


def project_to_osp(T: RealLinearOperator, parity: int, space: TruncatedSpace) -> OspElement:
    """Frobenius-nearest element of the given parity in the truncated osp_res."""
    if T.d != space.d:
        raise ValueError(f"operator dimension {T.d} does not match space dimension {space.d}")
    Q = _orthonormal_coords(space, parity)
    c = Q @ (Q.T @ T.coords())
    return OspElement(space, RealLinearOperator.from_coords(c, space.d), parity)


def random_element(space: TruncatedSpace, parity: int, rng: np.random.Generator, norm: float | None = 1.0) -> OspElement:
    """Gaussian element of the given parity, rescaled to ``norm`` when given."""
    Q = _orthonormal_coords(space, parity)
    c = Q @ rng.standard_normal(Q.shape[1])
    x = OspElement(space, RealLinearOperator.from_coords(c, space.d), parity)
    if norm is None:
        return x
    return x * (norm / osp_norm(x))


def element_from_coords(space: TruncatedSpace, parity: int, coeffs) -> OspElement:
    """Real combination of the canonical generators of one parity."""
    gens = [g for _, g in canonical_generators(space) if g.parity == parity]
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (len(gens),):
        raise ValueError(f"expected {len(gens)} coefficients, got {coeffs.shape}")
    op = RealLinearOperator.zeros(space.d)
    for c, g in zip(coeffs, gens):
        op = op + g.op.scale(c)
    return OspElement(space, op, parity)
