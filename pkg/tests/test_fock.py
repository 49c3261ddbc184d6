import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ospfock.fock import (
    ENUMERATION_TAG,
    FockIndex,
    FockVector,
    a_dagger,
    a_operator,
    degree_shifts,
    fock_inner,
    fock_space,
    lam,
    parse_triplet_text,
    reduce_monomial,
    reduce_word,
    rho_full,
    rho_lin,
    triplet_text,
    vacuum_index,
)
from ospfock.superalgebra import EVEN, ODD, CentralElement, OspElement, TruncatedSpace, canonical_generators, random_element

SPACE = TruncatedSpace(2, 2)
GENS = dict(canonical_generators(SPACE))


def ladder_ops(fs):
    """Creation operators c_m^dagger on the occupation basis of ``fs``.

    Jordan-Wigner strings for fermions, sqrt(n+1) for bosons, raising past
    the cap dropped.  Built from occupation numbers only.
    """
    mf, d = fs.space.m_f, fs.space.d
    index = {(idx.ferm, idx.bos): i for i, idx in enumerate(fs.basis)}
    ops = []
    for m in range(d):
        C = np.zeros((fs.dim, fs.dim))
        for j, idx in enumerate(fs.basis):
            ferm, bos = list(idx.ferm), list(idx.bos)
            if m < mf:
                if ferm[m]:
                    continue
                amp = (-1) ** sum(ferm[:m])
                ferm[m] = 1
            else:
                amp = math.sqrt(bos[m - mf] + 1)
                bos[m - mf] += 1
            i = index.get((tuple(ferm), tuple(bos)))
            if i is not None:
                C[i, j] = amp
        ops.append(C)
    return ops


def test_basis_size():
    for D in (0, 3, 8):
        fs = fock_space(SPACE, D)
        expected = sum(math.comb(2, k) * (m - k + 1) for m in range(D + 1) for k in range(min(m, 2) + 1))
        assert fs.dim == expected
    assert fock_space(SPACE, 8).dim == 145


def test_enumeration_order():
    fs = fock_space(SPACE, 4)
    keys = [idx.sort_key() for idx in fs.basis]
    assert keys == sorted(keys)
    assert fs.basis[0] == vacuum_index(SPACE)
    assert list(fs.degrees) == sorted(fs.degrees)


def test_reduce_word_signs():
    f1, f2, b1 = 0, 1, 2
    assert reduce_word([f1, f1], SPACE) is None
    idx, s = reduce_word([f2, f1], SPACE)
    assert idx.ferm == (1, 1) and s == -1
    assert reduce_word([b1, f1], SPACE) == reduce_word([f1, b1], SPACE)
    idx, s = reduce_word([f2, b1, f1], SPACE)
    assert s == -1 and idx.bos == (1, 0)


def test_reduce_monomial_is_multilinear(rng):
    u = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    uv = reduce_monomial([u, v], SPACE)
    vu = reduce_monomial([v, u], SPACE)
    # fermion-fermion parts anticommute, everything else commutes
    ff = FockIndex((1, 1), (0, 0))
    assert uv[ff] == pytest.approx(-vu[ff])
    for idx in uv:
        if idx != ff:
            assert uv[idx] == pytest.approx(vu[idx])
    with pytest.raises(ValueError):
        reduce_monomial([np.ones(3)], SPACE)


def test_inner_product_weights():
    b1sq = FockVector.monomial(FockIndex((0, 0), (2, 0)))
    f1b1 = FockVector.monomial(FockIndex((1, 0), (1, 0)))
    b1b2 = FockVector.monomial(FockIndex((0, 0), (1, 1)))
    assert fock_inner(b1sq, b1sq) == pytest.approx(1.0)
    assert fock_inner(f1b1, f1b1) == pytest.approx(0.5)
    assert fock_inner(b1b2, b1b2) == pytest.approx(0.5)
    assert fock_inner(f1b1, b1sq) == 0
    assert FockVector.vacuum(SPACE).norm() == 1.0


def test_lambda_values():
    assert lam(0, 0) == pytest.approx(math.sqrt(2) / 2)
    assert lam(1, 2) == pytest.approx(0.5 * math.sqrt(20))


@pytest.mark.parametrize("D", [4, 7])
def test_derivation_matches_ladder_oracle(D, rng):
    fs = fock_space(SPACE, D)
    c = ladder_ops(fs)
    d = SPACE.d
    T = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    ours = (T.ravel() @ fs.lin_units).reshape(fs.dim, fs.dim)
    oracle = sum(T[a, b] * c[a] @ c[b].T for a in range(d) for b in range(d))
    assert np.abs(ours - oracle).max() < 1e-12


@pytest.mark.parametrize("D", [4, 7])
def test_pair_creation_matches_ladder_oracle(D, rng):
    fs = fock_space(SPACE, D)
    c = ladder_ops(fs)
    d, mf = SPACE.d, SPACE.m_f
    B = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    ours = (B.ravel() @ fs.quad_units).reshape(fs.dim, fs.dim)
    phase = [1.0 if r < mf else 1j for r in range(d)]
    oracle = 0.5 * sum(B[j, r] * phase[r] * c[j] @ c[r] for j in range(d) for r in range(d))
    assert np.abs(ours - oracle).max() < 1e-12


def test_dict_and_matrix_actions_agree(rng):
    fs = fock_space(SPACE, 6)
    for parity in (EVEN, ODD):
        x = random_element(SPACE, parity, rng)
        v = fs.from_array(np.where(fs.mask(4), rng.standard_normal(fs.dim), 0))
        lhs = fs.to_array(rho_lin(x, v))
        assert np.allclose(lhs, fs.lin_matrix(x) @ fs.to_array(v))


def test_central_and_number_diagonals():
    fs = fock_space(SPACE, 6)
    M = rho_full(CentralElement.central(SPACE, 1.0), 6).dense()
    assert np.allclose(M, 1j * np.eye(fs.dim))
    num = OspElement.from_parts(SPACE, 1j * np.eye(4), np.zeros((4, 4)), EVEN)
    N = rho_full(num, 6).dense()
    assert np.allclose(N, np.diag(1j * fs.degrees))


def test_symmetry_on_safe_block(rng):
    fs = fock_space(SPACE, 8)
    s = fs.mask(6)
    phase = np.exp(-1j * np.pi / 4)
    for _ in range(5):
        X = fs.rho_matrix(random_element(SPACE, EVEN, rng))[np.ix_(s, s)]
        assert np.abs(X + X.conj().T).max() < 1e-12
        Y = phase * fs.rho_matrix(random_element(SPACE, ODD, rng))[np.ix_(s, s)]
        assert np.abs(Y - Y.conj().T).max() < 1e-12


def test_a_and_a_dagger_shift_degree(rng):
    x = random_element(SPACE, EVEN, rng)
    A, Ad = a_operator(x, 6), a_dagger(x, 6)
    fs = A.fock
    rows, cols = A.matrix.nonzero()
    assert np.all(fs.degrees[rows] == fs.degrees[cols] + 2)
    rows, cols = Ad.matrix.nonzero()
    assert np.all(fs.degrees[rows] == fs.degrees[cols] - 2)
    assert A.safe_degree == 4


def test_degree_shifts_by_type():
    assert degree_shifts(GENS["even.lin.f.1.2.re"]) == {(0, 0)}
    assert degree_shifts(GENS["even.conj.b.1.1.re"]) == {(0, 2), (0, -2)}
    assert degree_shifts(GENS["even.conj.f.1.2.re"]) == {(2, 0), (-2, 0)}
    assert degree_shifts(GENS["odd.lin.1.1.re"]) == {(1, -1), (-1, 1)}
    assert degree_shifts(GENS["odd.conj.1.1.re"]) == {(1, 1), (-1, -1)}


def test_vector_beyond_cap_rejected():
    fs = fock_space(SPACE, 2)
    with pytest.raises(ValueError):
        fs.to_array(FockVector.monomial(FockIndex((0, 0), (3, 0))))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(sorted(GENS)), st.integers(2, 7))
def test_triplet_round_trip(name, D):
    op = rho_full(GENS[name], D)
    text = triplet_text(op, name)
    assert text == triplet_text(rho_full(GENS[name], D), name)
    header, M = parse_triplet_text(text)
    assert header["enumeration"] == ENUMERATION_TAG
    assert int(header["safe_degree"]) == op.safe_degree
    assert len(header["basis"]) == op.fock.dim
    assert (M != op.matrix).nnz == 0


def test_parse_rejects_truncated_file():
    text = triplet_text(rho_full(GENS["odd.lin.1.1.re"], 3), "x")
    with pytest.raises(ValueError):
        parse_triplet_text(text.split("entries")[0])
