from math import comb

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from artifact import intmat as im
from artifact.ci_lattice import (
    BlockNotUnitriangular,
    CompleteIntersection,
    LatticeOperator,
    NotExceptional,
    NotFano,
    SplitRequired,
    build_lattice,
    check_spherical_collection,
    compare,
    fano_family,
    gram_filtration,
    hypersurface_rotation_check,
    left_mutation,
    mutate_through_block,
    rectangular_block,
    residual_operator_suite,
    residual_sublattice,
    right_mutation,
    rotation_operator,
    serre_operator,
    verify_identities,
)
from artifact.euler_ring import AmbientSpace, pair
from artifact.quadric_spinor import quadric_divisor_pair, suite_from_pair

CI = CompleteIntersection.in_pn
FAMILY = fano_family(7, 3)


def test_normalization_and_basic_data():
    X = CI(6, (2, 3, 1))
    assert X.n == 5 and X.degrees == (3, 2) and X.dim == 3 and X.index == 1
    assert X.d_max == 3 and X.d_min == 2 and X.degree == 6
    assert CI(5, (3, 2), split=-1).split == 1
    assert len(CI(7, (2, 2, 3)).splits()) == 2
    with pytest.raises(NotFano):
        CI(3, (3, 2))
    with pytest.raises(SplitRequired):
        CI(5, (3,)).presentation()
    assert CI(5, (3,), split=0).presentation() == (CI(5, ()), 3)


def test_family_is_fano_and_normalized():
    assert FAMILY
    for X in FAMILY:
        assert X.index >= 0 and all(d >= 2 for d in X.degrees) and X.dim >= 0


def _window_gram_rank(X):
    size = X.n + 1
    g = sympy.Matrix(size, size, lambda i, j: pair(X.space, X.degrees, i, j))
    return g.rank()


@pytest.mark.parametrize("X", FAMILY[::5], ids=str)
def test_rank_is_dim_plus_one_against_sympy_oracle(X):
    L = build_lattice(X)
    assert L.rank == X.dim + 1 == _window_gram_rank(X)


def test_rank_examples():
    assert build_lattice(CI(5, (3,))).rank == 5
    assert build_lattice(CI(5, (2, 3))).rank == 4
    for n in range(1, 6):
        L = build_lattice(CI(n, ()))
        assert L.rank == n + 1
        o = [L.label(f"O({i})") for i in range(n + 1)]
        assert all(L.chi(o[i], o[j]) == (comb(n + j - i, n) if j >= i else 0) for i in range(n + 1) for j in range(n + 1))


@pytest.mark.parametrize("X", FAMILY, ids=str)
def test_lattice_invariants(X):
    L = build_lattice(X)
    assert all(L.check_invariants().values())
    R = residual_sublattice(L, X)
    assert R.rank == sum(d - 1 for d in X.degrees)
    for i, b in enumerate(rectangular_block(L, X.index)):
        for v in R.basis:
            assert L.chi(b, v) == 0


def test_weighted_lattice_invariants():
    for w, degs in [((1, 1, 2), (2,)), ((1, 1, 1, 2), (3,)), ((1, 1, 2, 3), (4,))]:
        X = CompleteIntersection(AmbientSpace(w), degs)
        L = build_lattice(X)
        assert all(L.check_invariants().values())


def test_serre_operator_examples():
    S = serre_operator(build_lattice(CI(3, (2,))))
    assert S.shift_sign == 1 and S.matrix == im.power(build_lattice(CI(3, (2,))).alpha, -2)
    L = build_lattice(CI(4, ()))
    assert serre_operator(L).shift_sign == 1 and serre_operator(L).matrix == im.power(L.alpha, -5)
    L = build_lattice(CI(5, (2, 3)))
    S = serre_operator(L)
    assert S.shift_sign == -1 and S.matrix == im.power(L.alpha, -1)


def test_mutation_examples():
    L = build_lattice(CI(5, (3,)))
    e, v = L.label("O(0)"), L.label("O(1)")
    assert L.chi(e, v) == 6
    assert left_mutation(L, e, v) == im.vsub(v, im.vscale(6, e))
    w = left_mutation(L, e, v)
    assert left_mutation(L, e, w) == w
    assert L.chi(e, w) == 0 and L.chi(right_mutation(L, e, v), e) == 0
    with pytest.raises(NotExceptional):
        left_mutation(L, im.vscale(2, e), v)
    assert mutate_through_block(L, [], v) == v
    assert mutate_through_block(L, [e], v) == left_mutation(L, e, v)
    with pytest.raises(BlockNotUnitriangular):
        mutate_through_block(L, [L.label("O(1)"), e], v)


@settings(max_examples=40)
@given(
    st.sampled_from([CI(5, (2, 3)), CI(5, (3,)), CI(6, (2, 2)), CI(7, (3, 2))]),
    st.lists(st.integers(-5, 5), min_size=8, max_size=8),
    st.sampled_from(["left", "right"]),
)
def test_block_projection_idempotent_and_orthogonal(X, coeffs, side):
    L = build_lattice(X)
    block = rectangular_block(L, X.index)
    v = tuple(coeffs[: L.rank])
    p = mutate_through_block(L, block, v, side)
    assert mutate_through_block(L, block, p, side) == p
    for b in block:
        assert (L.chi(b, p) if side == "left" else L.chi(p, b)) == 0


def test_rotation_examples():
    X = CI(4, ())
    L = build_lattice(X)
    R = residual_sublattice(L, X)
    assert R.rank == 0 and R.restrict(rotation_operator(L, X)).shape == (0, 0)
    X = CI(3, (2,))
    L = build_lattice(X)
    op = residual_sublattice(L, X).restrict(rotation_operator(L, X))
    assert op.shape == (1, 1) and abs(op.matrix[0][0]) == 1
    X = CI(5, (3,))
    L = build_lattice(X)
    op = residual_sublattice(L, X).restrict(rotation_operator(L, X))
    assert op.power(X.index).is_unimodular()


def test_rotation_through_block_cross_check():
    # alpha then the rectangular projection agrees with the rotation on residual vectors
    X = CI(5, (2, 3))
    L = build_lattice(X)
    R = residual_sublattice(L, X)
    rot = rotation_operator(L, X)
    block = rectangular_block(L, X.index)
    for r in R.basis:
        assert mutate_through_block(L, block, im.matvec(L.alpha, r)) == rot.apply(r)


@pytest.mark.parametrize("n,d", [(n, d) for n in range(2, 9) for d in range(2, n + 1)])
def test_hypersurface_rotation_period(n, d):
    assert hypersurface_rotation_check(CI(n, (d,))).passed


def test_suite_examples():
    s = residual_operator_suite(CI(5, (3,), split=0))
    assert compare(s["T_target"], s["O_B"].power(-3)).equal
    assert s["T_target"].shift_sign == 1
    s = residual_operator_suite(CI(3, (2,), split=0))
    assert s["S_R_mutation"].is_identity() and s["S_R_mutation"].shift_sign == 1
    for n in range(2, 8):
        for d in range(2, n + 1):
            s = residual_operator_suite(CI(n, (d,), split=0))
            assert compare(s["S_R_mutation"], s["S_R_rotation"]).equal


@pytest.mark.parametrize("X", [Y for X in FAMILY for Y in X.splits()], ids=str)
def test_verify_identities_family(X):
    rep = verify_identities(X)
    assert rep.passed, rep.first_failure()


def test_verify_identities_examples():
    rep = verify_identities(CI(5, (3,), split=0))
    assert rep.check("hypersurface_fractional_cy").passed
    s = residual_operator_suite(CI(5, (3,), split=0))
    assert s["S_R_mutation"].power(3).is_identity()
    # peeling off the quadric leaves the cubic fourfold (m = 3, d = 2); peeling off the cubic leaves Q4 (m = 4, d = 3)
    assert verify_identities(CI(5, (2, 3), split=1)).check("target_factorization").detail == "c = 1"
    assert verify_identities(CI(6, (2, 2), split=1)).check("target_factorization").detail == "c = 1"
    assert verify_identities(CI(5, (2, 2), split=1)).check("target_factorization").detail == "c = 2"


def test_failure_reports_witness():
    a = LatticeOperator(im.identity(2))
    b = LatticeOperator(im.mat([[1, 1], [0, 1]]))
    c = compare(a, b)
    assert not c.equal and c.status == "matrix mismatch" and c.witness == (0, 1)
    assert compare(a, a.signed(-1)).status == "sign mismatch"


@pytest.mark.parametrize(
    "X,deg", [(CI(3, (3,)), 3), (CI(2, ()), 1), (CI(5, (2, 3)), 6), (CI(7, (2, 2, 2)), 8), (CI(6, (4,)), 4)]
)
def test_gram_filtration(X, deg):
    g = gram_filtration(X)
    k = X.dim
    for p in range(k + 1):
        assert abs(g[p][k - p]) == deg
        assert all(g[p][q] == 0 for q in range(k + 1) if p + q > k)


def test_spherical_collection_examples():
    L = build_lattice(CI(3, (2,)))
    e = L.label("O(0)")
    # a single exceptional class in a 2-dimensional lattice: chi(e,e) = 1 = 1 + (-1)^n fails for every n
    assert not check_spherical_collection(L, [e], [0], [0])
    P = quadric_divisor_pair(5, 3)
    suite = suite_from_pair(P)
    R = suite.target_residual
    classes = [R.coords(P.target.label("S+|X")), R.coords(P.target.label("S-|X"))]
    assert check_spherical_collection(R, classes, [1, 0], [2, 2], suite["S_R_mutation"])
    assert not check_spherical_collection(R, classes, [0, 1], [2, 2], suite["S_R_mutation"])


def test_spherical_collection_single_object():
    # rank-one lattice with chi(P, P) = 1 + (-1)^n and S = (-1)^n
    from artifact.ci_lattice import NumLattice

    for n in (1, 2):
        val = 1 + (-1) ** n
        L = NumLattice(1, ((val,),), ((1,),), (), dim=n, index=0)
        S = LatticeOperator(((1,),), (-1) ** n)
        assert check_spherical_collection(L, [(1,)], [0], [n], S)
