import itertools

import numpy as np
import pytest

from geomlab import spencer as sp_mod
from geomlab.spencer import (
    apply_delta, co, cochain_dim, delta_squared_is_zero, field_dim, gl, gl_complex,
    has_rank_one_element, o, prolongation, sp, spencer_cohomology_dim,
)


# --- independent oracles -------------------------------------------------

def _solution_dim(constraints, size):
    """dim of {x in R^size : C x = 0} via SVD (floats, small integer systems)."""
    if not constraints:
        return size
    C = np.array(constraints, dtype=float)
    return size - np.linalg.matrix_rank(C)


def riemann_symmetry_dim(n):
    """Tensors R_abcd with pair antisymmetry, pair exchange and first Bianchi."""
    idx = lambda a, b, c, d: ((a * n + b) * n + c) * n + d
    N = n ** 4
    rows = []
    for a, b, c, d in itertools.product(range(n), repeat=4):
        for other, sgn in (((b, a, c, d), 1), ((a, b, d, c), 1), ((c, d, a, b), -1)):
            r = [0] * N
            r[idx(a, b, c, d)] += 1
            r[idx(*other)] += sgn
            rows.append(r)
        r = [0] * N
        r[idx(a, b, c, d)] += 1
        r[idx(a, c, d, b)] += 1
        r[idx(a, d, b, c)] += 1
        rows.append(r)
    return _solution_dim(rows, N), rows


def weyl_symmetry_dim(n):
    base, rows = riemann_symmetry_dim(n)
    idx = lambda a, b, c, d: ((a * n + b) * n + c) * n + d
    for b, d in itertools.product(range(n), repeat=2):
        r = [0] * n ** 4
        for a in range(n):
            r[idx(a, b, a, d)] += 1
        rows.append(r)
    return _solution_dim(rows, n ** 4)


def test_riemann_oracle_counts():
    # n^2 (n^2 - 1) / 12
    assert riemann_symmetry_dim(3)[0] == 6
    assert riemann_symmetry_dim(4)[0] == 20
    assert weyl_symmetry_dim(4) == 10
    assert weyl_symmetry_dim(3) == 0


# --- algebras ------------------------------------------------------------

@pytest.mark.parametrize("alg", [o(3), o(4), co(4), gl(3), sp(1), sp(2), gl_complex(2), gl_complex(3)])
def test_algebras_closed(alg):
    assert alg.is_closed()


def test_dependent_basis_rejected():
    with pytest.raises(ValueError):
        sp_mod.MatrixLieAlgebra(2, [np.eye(2, dtype=int), 2 * np.eye(2, dtype=int)])


def test_algebra_by_name():
    assert sp_mod.algebra_by_name("o(4)").dim == 6
    with pytest.raises(ValueError):
        sp_mod.algebra_by_name("so4")


# --- prolongations -------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_o_is_of_order_one(n):
    assert prolongation(o(n), 1).dim == 0


@pytest.mark.parametrize("n", [2, 3])
def test_gl_first_prolongation_is_all_symmetric_maps(n):
    assert prolongation(gl(n), 1).dim == n * n * (n + 1) // 2


@pytest.mark.parametrize("n", [3, 4])
def test_co_order_two(n):
    assert prolongation(co(n), 1).dim == n
    assert prolongation(co(n), 2).dim == 0


@pytest.mark.parametrize("alg,k", [(co(3), 1), (gl(2), 1), (sp(2), 1), (gl_complex(2), 1), (gl(2), 2)])
def test_prolongation_partial_applications_lie_in_g(alg, k):
    P = prolongation(alg, k)
    rng = np.random.default_rng(0)
    for j in range(P.dim):
        T = P.as_tensor(j)
        # symmetric in the first k+1 slots
        for perm in itertools.permutations(range(k + 1)):
            assert np.allclose(np.transpose(T, perm + (k + 1,)), T)
        # v -> t(v, v1..vk) as matrix M[mu, nu]
        vs = [rng.normal(size=alg.n) for _ in range(k)]
        M = T
        for v in vs:
            M = np.tensordot(M, v, axes=(1, 0))
        assert alg.contains(M.T, tol=1e-9)


# --- delta ---------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4])
def test_delta_squared_zero(n):
    for d in range(2, 5):
        for s in range(0, n - 1):
            assert delta_squared_is_zero(n, d, s)


def test_delta_is_exterior_derivative_spot_check():
    # x^1 dx^2 (x) e_1 in R^2  ->  dx^1 ^ dx^2 (x) e_1
    n = 2
    coeffs = [0] * (field_dim(n, 1) * 2)
    mono = sp_mod._mono_index(n, 1)[(1, 0)]
    coeffs[(0 * 2 + mono) * 2 + 1] = 1
    out = apply_delta(n, 1, 1, coeffs)
    expected = [0] * (field_dim(n, 0) * 1)
    expected[0] = 1
    assert [int(v) for v in out] == expected


def test_delta_of_symmetric_two_tensor_n2():
    # X = (a x^2 + 2b xy + c y^2) e_1: (delta X)(v; w) = t(v, w) one slot freed
    n = 2
    a, b, c = 3, 5, 7
    coeffs = [0] * field_dim(n, 2)
    mi = sp_mod._mono_index(n, 2)
    coeffs[mi[(2, 0)]] = a
    coeffs[mi[(1, 1)]] = 2 * b
    coeffs[mi[(0, 2)]] = c
    out = [int(v) for v in apply_delta(n, 2, 0, coeffs)]
    # dX^1 = (2a x + 2b y) dx + (2b x + 2c y) dy, rows: (mu, monomial, form)
    m1 = sp_mod._mono_index(n, 1)
    exp = [0] * (field_dim(n, 1) * 2)
    exp[(m1[(1, 0)]) * 2 + 0] = 2 * a
    exp[(m1[(0, 1)]) * 2 + 0] = 2 * b
    exp[(m1[(1, 0)]) * 2 + 1] = 2 * b
    exp[(m1[(0, 1)]) * 2 + 1] = 2 * c
    assert out == exp


# --- cohomology ----------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3])
def test_gl_cohomology_vanishes(n):
    for r in range(0, 5):
        for s in range(0, min(n, 4 - r) + 1):
            if r + s >= 1:
                assert spencer_cohomology_dim(gl(n), r, s) == 0, (r, s)
    assert spencer_cohomology_dim(gl(n), 0, 0) == n  # constants: the r + s = 0 slot


@pytest.mark.parametrize("n", [3, 4])
def test_o_h02_vanishes(n):
    assert spencer_cohomology_dim(o(n), 0, 2) == 0


@pytest.mark.parametrize("n", [3, 4])
def test_o_h12_matches_riemann_oracle(n):
    assert spencer_cohomology_dim(o(n), 1, 2) == riemann_symmetry_dim(n)[0]


def test_co4_h12_matches_weyl_oracle():
    h = spencer_cohomology_dim(co(4), 1, 2)
    assert h == weyl_symmetry_dim(4)
    assert h == spencer_cohomology_dim(o(4), 1, 2) - 10


@pytest.mark.parametrize("alg", [o(2), o(3), o(4), co(3), co(4), gl(2), sp(1), sp(2), gl_complex(2)])
def test_h_r1_vanishes(alg):
    for r in range(1, 3):
        assert spencer_cohomology_dim(alg, r, 1) == 0


@pytest.mark.parametrize("n", [3, 4])
def test_o_higher_h2_vanishes(n):
    for r in (2, 3):
        assert spencer_cohomology_dim(o(n), r, 2) == 0


@pytest.mark.parametrize("alg", [sp(1), sp(2), gl_complex(1), gl_complex(2)])
def test_hr2_vanishes_sp_glc(alg):
    for r in (1, 2):
        assert spencer_cohomology_dim(alg, r, 2) == 0


def test_co_h2_pattern():
    # n = 4: only r = 1 survives; n = 3: the Weyl slot is empty and the
    # obstruction moves to r = 2 (five-dimensional, Cotton-type)
    assert [spencer_cohomology_dim(co(4), r, 2) for r in range(4)] == [0, 10, 0, 0]
    assert [spencer_cohomology_dim(co(3), r, 2) for r in range(4)] == [0, 0, 5, 0]


@pytest.mark.parametrize("n", [3, 4])
def test_subalgebra_h0k_implication(n):
    # o(n) in co(n): H^{0,k}(o) = 0 implies H^{0,k}(co) = 0
    for k in range(1, n + 1):
        if spencer_cohomology_dim(o(n), 0, k) == 0:
            assert spencer_cohomology_dim(co(n), 0, k) == 0


@pytest.mark.parametrize("n", [2, 3])
def test_order_finite_implies_no_rank_one(n):
    assert prolongation(o(n), 1).dim == 0
    assert not has_rank_one_element(o(n), grid=3)
    assert has_rank_one_element(gl(n), grid=3)


def test_cochain_dims():
    assert cochain_dim(o(4), 1, 2) == 36
    assert cochain_dim(co(4), 2, 1) == 16
