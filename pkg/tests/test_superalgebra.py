import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from ospfock.superalgebra import (
    EVEN,
    ODD,
    CentralElement,
    OspElement,
    ParityError,
    RealLinearOperator,
    TruncatedSpace,
    adjoint_orbit,
    canonical_generators,
    cocycle,
    cocycle_identity_residual,
    complexification_bounds,
    decompose,
    element_from_coords,
    extended_bracket,
    jacobi_residual,
    orbit_terms_needed,
    osp_dimension,
    osp_norm,
    project_to_osp,
    random_element,
    realtrace,
    superbracket,
)

SPACE = TruncatedSpace(2, 2)


def random_op(rng, d):
    return RealLinearOperator(
        rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)),
        rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)),
    )


def test_composition_matches_real_matrices(rng):
    for _ in range(10):
        S, T = random_op(rng, 4), random_op(rng, 4)
        assert np.allclose((S @ T).real_matrix(), S.real_matrix() @ T.real_matrix())


def test_action_matches_real_matrix(rng):
    T = random_op(rng, 3)
    v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    w = T.real_matrix() @ np.concatenate([v.real, v.imag])
    assert np.allclose(T(v), w[:3] + 1j * w[3:])


def test_decompose_from_images(rng):
    T = random_op(rng, 4)
    eye = np.eye(4)
    images = np.column_stack([T(eye[:, j]) for j in range(4)] + [T(1j * eye[:, j]) for j in range(4)])
    assert decompose(images).allclose(T)
    assert RealLinearOperator.from_real_matrix(T.real_matrix()).allclose(T)


def test_decompose_rejects_bad_shape():
    with pytest.raises(ValueError):
        decompose(np.zeros((3, 3)))


def test_real_scalars_only(rng):
    T = random_op(rng, 2)
    with pytest.raises(TypeError):
        T.scale(1j)


@pytest.mark.parametrize("mf,mb", [(1, 1), (2, 2), (2, 3), (3, 1)])
def test_generator_count_and_independence(mf, mb):
    sp = TruncatedSpace(mf, mb)
    gens = canonical_generators(sp)
    expected = mf**2 + mb**2 + mf * (mf - 1) + mb * (mb + 1) + 4 * mf * mb
    assert len(gens) == expected == osp_dimension(sp, EVEN) + osp_dimension(sp, ODD)
    assert len({name for name, _ in gens}) == len(gens)
    coords = np.array([g.op.coords() for _, g in gens])
    assert np.linalg.matrix_rank(coords) == len(gens)
    assert all(g.certified for _, g in gens)


def test_reference_dimension():
    assert len(canonical_generators(SPACE)) == 32


def test_wrong_block_rejected():
    lin = np.zeros((4, 4), complex)
    lin[0, 2] = 1.0  # fermion <- boson entry in an even element
    with pytest.raises(ParityError):
        OspElement.from_parts(SPACE, lin, np.zeros((4, 4)), EVEN)


def test_non_member_reports_residual():
    lin = np.zeros((4, 4), complex)
    lin[0, 0] = 1.0  # Hermitian, not skew
    x = OspElement.from_parts(SPACE, lin, np.zeros((4, 4)), EVEN)
    assert not x.certified
    assert x.residual > 0.5


def test_projection_is_idempotent(rng):
    for parity in (EVEN, ODD):
        T = random_op(rng, 4)
        x = project_to_osp(T, parity, SPACE)
        assert x.certified
        assert project_to_osp(x.op, parity, SPACE).allclose(x)


def test_element_from_coords_round_trip(rng):
    gens = [g for _, g in canonical_generators(SPACE) if g.parity == ODD]
    c = rng.standard_normal(len(gens))
    x = element_from_coords(SPACE, ODD, c)
    assert x.certified and x.parity == ODD
    with pytest.raises(ValueError):
        element_from_coords(SPACE, ODD, c[:-1])


def test_centre_is_even():
    x = random_element(SPACE, ODD, np.random.default_rng(0))
    with pytest.raises(ParityError):
        CentralElement(x, 1.0)


parities = st.integers(0, 1)
seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds, parities, parities, parities)
def test_graded_jacobi(seed, p1, p2, p3):
    rng = np.random.default_rng(seed)
    x, y, z = (random_element(SPACE, p, rng) for p in (p1, p2, p3))
    assert jacobi_residual(x, y, z) <= 1e-12
    assert cocycle_identity_residual(x, y, z) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(seeds, parities, parities)
def test_bracket_closure_and_symmetry(seed, p1, p2):
    rng = np.random.default_rng(seed)
    x, y = random_element(SPACE, p1, rng), random_element(SPACE, p2, rng)
    b = superbracket(x, y)
    assert b.parity == (p1 + p2) % 2
    assert b.certified
    sign = -((-1.0) ** (p1 * p2))
    assert b.allclose(superbracket(y, x) * sign, atol=1e-12)
    assert osp_norm(b) <= osp_norm(x) * osp_norm(y) * (1 + 1e-12)


def test_cocycle_vanishes_without_conj_part(rng):
    x, y = random_element(SPACE, EVEN, rng), random_element(SPACE, EVEN, rng)
    xl = OspElement.from_parts(SPACE, x.lin, np.zeros((4, 4)), EVEN)
    assert cocycle(xl, y) == 0.0
    assert cocycle(x, random_element(SPACE, ODD, rng)) == 0.0


def test_cocycle_with_j_plus_fails_the_identity(rng):
    # the even-pair form with J_+ breaks the identity on (even, odd, odd) triples
    def omega_plus(a, b):
        if a.parity != b.parity:
            return 0.0
        J = SPACE.J_plus if a.parity == EVEN else SPACE.J_minus
        return -0.5 * realtrace(J @ a.conj @ b.conj.conj())

    worst = 0.0
    for _ in range(10):
        x = random_element(SPACE, EVEN, rng)
        y, z = random_element(SPACE, ODD, rng), random_element(SPACE, ODD, rng)
        total = omega_plus(x, superbracket(y, z)) + omega_plus(y, superbracket(z, x)) - omega_plus(z, superbracket(x, y))
        worst = max(worst, abs(total))
    assert worst > 1e-3


def test_extended_bracket_carries_cocycle(rng):
    x, y = random_element(SPACE, ODD, rng), random_element(SPACE, ODD, rng)
    u = extended_bracket(CentralElement(x), CentralElement(y))
    assert u.z == pytest.approx(cocycle(x, y))
    assert u.body.allclose(superbracket(x, y))


def test_adjoint_orbit_matches_group_conjugation(rng):
    y = random_element(SPACE, EVEN, rng, norm=0.8)
    x = random_element(SPACE, ODD, rng)
    out = adjoint_orbit(y, x, 40)
    E = expm(y.op.real_matrix())
    ref = E @ x.op.real_matrix() @ np.linalg.inv(E)
    assert np.abs(out.value.op.real_matrix() - ref).max() <= out.tail_bound + 1e-12
    assert out.value.certified


def test_orbit_terms_needed():
    rng = np.random.default_rng(1)
    x = random_element(SPACE, EVEN, rng)
    assert orbit_terms_needed(random_element(SPACE, EVEN, rng, norm=0.5), x) is not None
    assert orbit_terms_needed(random_element(SPACE, EVEN, rng, norm=80.0), x, n_cap=30) is None
    with pytest.raises(ParityError):
        adjoint_orbit(random_element(SPACE, ODD, rng), x, 3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=8, max_size=8))
def test_complexification_sandwich(vals):
    v1, v2 = np.array(vals[:4]), np.array(vals[4:])
    lo, hi = complexification_bounds(v1, v2)
    mid = np.linalg.norm(v1 + 1j * v2)
    assert lo <= mid * (1 + 1e-12) + 1e-300
    assert mid <= hi * (1 + 1e-12) + 1e-300


def test_generators_bracket_closed():
    gens = [g for _, g in canonical_generators(SPACE)]
    for a, b in itertools.combinations(gens[::3], 2):
        assert superbracket(a, b).certified
