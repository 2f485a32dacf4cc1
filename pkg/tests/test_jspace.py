from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geomlab.jspace import (
    ComplexStructure, IsometricComplexStructure, _star_matrix, connection_check_probe, duality_phase,
    duality_split,
    nijenhuis_grid, nijenhuis_probe, orientation, pfaffian, pfaffian_orientation, polar_retract,
    project_to_complex_structure, pullback_field, pure_type_projector, random_complex_structure,
    random_isometric, random_rotation, selfduality_pure_equivalence, sphere_fibration_decompose,
    sphere_fibration_rebuild, standard_j, tangent_dimension,
)
from geomlab.tensor_core import ExteriorForm

seeds = st.integers(0, 2**32 - 1)
ells = st.integers(1, 4)


def pf_expand(A):
    n = len(A)
    if n == 0:
        return 1.0
    total = 0.0
    for j in range(1, n):
        rest = [k for k in range(n) if k not in (0, j)]
        total += (-1) ** (j - 1) * A[0, j] * pf_expand(A[np.ix_(rest, rest)])
    return total


def form(n, *terms):
    c = np.zeros_like(ExteriorForm.basis(n, terms[0][1]).coeffs, dtype=complex)
    for a, I in terms:
        c = c + a * ExteriorForm.basis(n, I).coeffs
    return ExteriorForm(n, len(terms[0][1]), c)


# --- types and orientation -------------------------------------------------

def test_validation():
    with pytest.raises(ValueError):
        ComplexStructure(np.eye(2))
    with pytest.raises(ValueError):
        ComplexStructure(np.zeros((3, 3)))
    G = np.array([[1.0, 2.0], [0.0, 1.0]])
    J = G @ standard_j(1) @ np.linalg.inv(G)
    ComplexStructure(J)
    with pytest.raises(ValueError):
        IsometricComplexStructure(J)


def test_orientation_examples():
    Ip = np.array([[0.0, -1.0], [1.0, 0.0]])  # I+ e1 = e2
    assert orientation(Ip) == 1 and orientation(-Ip) == -1
    for ell in range(1, 5):
        assert orientation(standard_j(ell)) == 1
    assert orientation(-standard_j(2)) == 1
    assert orientation(-standard_j(3)) == -1


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_pfaffian_matches_expansion(n):
    rng = np.random.default_rng(n)
    X = rng.normal(size=(n, n))
    A = X - X.T
    assert np.isclose(pfaffian(A), pf_expand(A))
    assert np.isclose(pfaffian(A) ** 2, np.linalg.det(A))


@settings(max_examples=30, deadline=None)
@given(ells, seeds, st.sampled_from([1, -1]))
def test_orientation_matches_pfaffian_sign(ell, seed, sign):
    J = random_isometric(ell, np.random.default_rng(seed), sign)
    assert orientation(J) == sign == pfaffian_orientation(J)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), seeds)
def test_orientation_invariant_under_gl_plus(ell, seed):
    rng = np.random.default_rng(seed)
    J = random_complex_structure(ell, rng)
    G = rng.normal(size=(2 * ell, 2 * ell))
    if np.linalg.det(G) < 0:
        G[:, 0] *= -1
    assert orientation(G @ J.J @ np.linalg.inv(G)) == orientation(J)


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_tangent_space_dimensions(ell):
    rng = np.random.default_rng(ell)
    for _ in range(3):
        assert tangent_dimension(random_complex_structure(ell, rng)) == 2 * ell ** 2
        assert tangent_dimension(random_isometric(ell, rng), isometric=True) == ell * (ell - 1)


# --- pure types --------------------------------------------------------------

@pytest.mark.parametrize("ell", [1, 2, 3])
def test_pure_type_decomposition(ell):
    rng = np.random.default_rng(10 + ell)
    for J, herm in ((random_isometric(ell, rng), True), (random_complex_structure(ell, rng), False)):
        n = 2 * ell
        for k in range(n + 1):
            Ps = [pure_type_projector(J, k - s, s) for s in range(k + 1)]
            assert np.abs(sum(Ps) - np.eye(comb(n, k))).max() < 1e-10
            for s, P in enumerate(Ps):
                r = k - s
                assert np.abs(P @ P - P).max() < 1e-9
                assert np.linalg.matrix_rank(P, tol=1e-8) == comb(ell, r) * comb(ell, s)
                if herm:
                    assert np.abs(P - P.conj().T).max() < 1e-10
                assert np.abs(np.conj(P) - pure_type_projector(J, s, r)).max() < 1e-10


def test_one_forms_of_standard_structure():
    # dx^1 + i dx^3 is of type (1, 0) for J0 on R^4
    P10 = pure_type_projector(standard_j(2), 1, 0)
    w = np.array([1, 0, 1j, 0])
    assert np.allclose(P10 @ w, w)
    assert np.linalg.matrix_rank(pure_type_projector(standard_j(2), 1, 1)) == 4


def test_pure_type_rejects_bad_degree():
    with pytest.raises(ValueError):
        pure_type_projector(standard_j(1), 2, 1)


# --- self-duality criterion ------------------------------------------------------

def test_selfduality_criterion_anti_self_dual_form():
    # Omega - c * Omega = Omega + *Omega = 0: annihilated by P^{0,2} over H_-, not H_+
    Om = form(4, (1, (0, 1)), (-1, (2, 3)))
    rep = selfduality_pure_equivalence(Om, samples=200, seed=7)
    assert rep.minus_condition and not rep.plus_condition
    assert rep.max_minus < 1e-9
    assert rep.violating_plus is not None
    assert rep.consistent


def test_selfduality_criterion_self_dual_form():
    Om = form(4, (1, (0, 1)), (1, (2, 3)))
    rep = selfduality_pure_equivalence(Om, samples=200, seed=7)
    assert rep.plus_condition and rep.max_plus < 1e-9 and rep.consistent


def test_selfduality_criterion_zero_and_mixed():
    rep = selfduality_pure_equivalence(ExteriorForm.zero(4, 2), samples=20)
    assert rep.plus_condition and rep.minus_condition and rep.consistent
    mixed = form(4, (1, (0, 1)), (0.3, (0, 2)))
    rep = selfduality_pure_equivalence(mixed, samples=200, seed=1)
    assert rep.violating_plus is not None and rep.violating_minus is not None and rep.consistent


@pytest.mark.parametrize("ell", [2, 3])
def test_selfduality_criterion_random_components(ell):
    rng = np.random.default_rng(ell)
    n = 2 * ell
    w = rng.normal(size=comb(n, ell)) + 1j * rng.normal(size=comb(n, ell))
    wp, wm = duality_split(w, ell)
    assert np.allclose(wp + wm, w)
    assert abs(np.vdot(wp, wm)) < 1e-10
    for part in (wp, wm):
        rep = selfduality_pure_equivalence(ExteriorForm(n, ell, part), samples=60, seed=3)
        assert rep.consistent


def test_selfduality_criterion_rejects_odd_dimension():
    with pytest.raises(ValueError):
        selfduality_pure_equivalence(ExteriorForm.zero(3, 1), samples=1)


def test_selfduality_criterion_rank_one_top_projector():
    rng = np.random.default_rng(0)
    for ell in (2, 3, 4):
        assert np.linalg.matrix_rank(pure_type_projector(random_isometric(ell, rng), 0, ell), tol=1e-8) == 1


# --- polar retraction and fibration -----------------------------------------------

def test_polar_retract_isometric_is_constant():
    J = random_isometric(2, np.random.default_rng(1))
    pr = polar_retract(J)
    assert np.abs(pr.S).max() < 1e-12
    assert np.allclose(pr.at(0.3), J.J)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), seeds)
def test_polar_retract_path(ell, seed):
    J = random_complex_structure(ell, np.random.default_rng(seed))
    pr = polar_retract(J)
    I = np.eye(2 * ell)
    assert np.allclose(pr.S, pr.S.T)
    assert np.abs(pr.J0 @ pr.S + pr.S @ pr.J0).max() < 1e-8 * max(1, np.abs(pr.S).max())
    IsometricComplexStructure(0.5 * (pr.J0 - pr.J0.T))
    assert np.abs(pr.J0 + pr.J0.T).max() < 1e-9
    assert np.allclose(pr.at(1.0), J.J, atol=1e-9)
    taus = np.linspace(0, 1, 5)
    path = [pr.at(t) for t in taus]
    scale = max(1.0, np.abs(J.J).max() ** 2)
    for Jt in path:
        assert np.abs(Jt @ Jt + I).max() < 1e-8 * scale
    lip = max(np.abs(path[i + 1] - path[i]).max() for i in range(4)) / 0.25
    assert lip <= 2 * np.abs(pr.S).max() * np.abs(path).max() * 2 + 1e-12


def test_sphere_fibration_standard_block():
    J = np.zeros((4, 4))
    J[:3, :3] = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]])
    J[2, 3], J[3, 2] = 1, -1
    u, Jt = sphere_fibration_decompose(J)
    assert np.allclose(u, [0, 0, 1])
    assert np.allclose(Jt[:2, :2], [[0, -1], [1, 0]])


@pytest.mark.parametrize("ell", [1, 2])
def test_sphere_fibration_roundtrip(ell):
    rng = np.random.default_rng(ell)
    for _ in range(100):
        J = random_isometric(ell + 1, rng, sign=int(rng.choice([1, -1]))).J
        u, Jt = sphere_fibration_decompose(J)
        assert abs(np.linalg.norm(u) - 1) < 1e-12
        assert np.abs(Jt @ u).max() < 1e-12 and np.abs(Jt.T @ u).max() < 1e-12
        # on the orthogonal complement of u, Jt is an isometric complex structure
        B = np.linalg.svd(np.eye(2 * ell + 1) - np.outer(u, u))[0][:, :2 * ell]
        IsometricComplexStructure(B.T @ Jt @ B)
        assert np.abs(J - sphere_fibration_rebuild(u, Jt)).max() < 1e-12


# --- Nijenhuis and the almost complex connection ----------------------------------

def psi_jacobian(x):
    # Jacobian of psi(x) = x + 0.3 (sin x1, x0 x2, x3^2, cos x0)
    D = np.eye(4)
    D[0, 1] += 0.3 * np.cos(x[1])
    D[1, 0] += 0.3 * x[2]
    D[1, 2] += 0.3 * x[0]
    D[2, 3] += 0.6 * x[3]
    D[3, 0] -= 0.3 * np.sin(x[0])
    return D


PROBE = np.array([[s, 0.4 * t, 0.1, 0.2 * s * t] for s in np.linspace(-0.5, 0.5, 6) for t in np.linspace(-1, 1, 6)])


def test_nijenhuis_constant_field():
    J0 = standard_j(2)
    assert np.abs(nijenhuis_probe(lambda x: J0, PROBE[:4], 1 / 64)).max() == 0
    vals = np.broadcast_to(J0, (4, 4, 4, 4, 4, 4)).copy()
    assert np.abs(nijenhuis_grid(vals, [0.1] * 4)).max() == 0


def test_nijenhuis_integrable_pullback():
    N = nijenhuis_probe(pullback_field(psi_jacobian, 2), PROBE, 1 / 64)
    assert np.abs(N).max() < 1e-4


def rotating_field(x):
    A = np.array([[0, 1, 0, 0], [-1, 0, 0.5, 0], [0, -0.5, 0, 1], [0, 0, -1, 0]], dtype=float)
    B = np.array([[0, 0, 1, 0], [0, 0, 0, -1], [-1, 0, 0, 0], [0, 1, 0, 0]], dtype=float)
    from scipy.linalg import expm
    R = expm(x[0] * A + x[1] * B)
    return R @ standard_j(2) @ R.T


def test_nijenhuis_non_integrable_and_antisymmetric():
    N = nijenhuis_probe(rotating_field, PROBE, 1 / 64)
    assert np.abs(N).max() > 0.01
    assert np.abs(N + np.swapaxes(N, -1, -2)).max() < 1e-12
    # N(X, JX) = 0
    for x, Nx in zip(PROBE, N):
        J = rotating_field(x)
        for X in np.eye(4):
            assert np.abs(np.einsum("kij,i,j->k", Nx, X, J @ X)).max() < 1e-8


def _two_dim_field(X, Y):
    # J = G J0 G^{-1} with G = [[a, b], [0, 1]]
    a = 1 + 0.3 * np.sin(X + 2 * Y)
    b = 0.4 * X * Y
    vals = np.zeros(np.shape(X) + (2, 2))
    vals[..., 0, 0], vals[..., 0, 1] = b / a, -(a ** 2 + b ** 2) / a
    vals[..., 1, 0], vals[..., 1, 1] = 1 / a, -b / a
    return vals


def test_nijenhuis_vanishes_in_real_dimension_two():
    pts = np.random.default_rng(0).uniform(-1, 1, size=(10, 2))
    N = nijenhuis_probe(lambda x: _two_dim_field(x[0], x[1]), pts, 1e-3)
    assert np.abs(N).max() < 1e-8
    res = []
    for m in (17, 33):
        g = np.linspace(-1, 1, m)
        vals = _two_dim_field(*np.meshgrid(g, g, indexing="ij"))
        assert np.abs(vals @ vals + np.eye(2)).max() < 1e-12
        res.append(np.abs(nijenhuis_grid(vals, [g[1] - g[0]] * 2)[2:-2, 2:-2]).max())
    assert res[1] < 1e-2 and res[0] / res[1] > 3


def test_nijenhuis_grid_rejects_small():
    with pytest.raises(ValueError):
        nijenhuis_grid(np.zeros((2, 2, 2, 2)), [0.1, 0.1])


def test_connection_constant_and_random_field():
    assert connection_check_probe(lambda x: standard_j(2), PROBE[:3], 1 / 64) == (0.0, 0.0)
    rng = np.random.default_rng(0)
    K = rng.normal(size=(4, 4, 4))

    def Jf(x):
        return project_to_complex_structure(standard_j(2) + 0.2 * np.tanh(K @ x))
    nab, tor = connection_check_probe(Jf, PROBE, 1 / 64)
    assert nab < 1e-3 and tor < 1e-3
    nab, tor = connection_check_probe(pullback_field(psi_jacobian, 2), PROBE, 1 / 64)
    assert nab < 1e-3 and tor < 1e-3


@pytest.mark.parametrize("ell", [1, 2, 3, 4])
def test_duality_phase_on_top_antiholomorphic_form(ell):
    # the (0, l) line of J0 is the eigenline of * with eigenvalue 1 / c
    P = pure_type_projector(standard_j(ell), 0, ell)
    w, V = np.linalg.eigh(P)
    v = V[:, -1]
    star = _star_matrix(2 * ell, ell)
    assert np.allclose(star @ v, v / duality_phase(ell), atol=1e-12)


def test_selfduality_criterion_batch_matches_single_calls():
    from geomlab.jspace import selfduality_batch
    rng = np.random.default_rng(9)
    w = rng.normal(size=6) + 1j * rng.normal(size=6)
    forms = [*duality_split(w, 2), w]
    batch = selfduality_batch(forms, samples=30, seed=4)
    for f, b in zip(forms, batch):
        s = selfduality_pure_equivalence(f, samples=30, seed=4)
        assert (s.plus_condition, s.minus_condition, s.consistent) == (b.plus_condition, b.minus_condition, b.consistent)
        assert np.isclose(s.max_plus, b.max_plus, atol=1e-14) and np.isclose(s.max_minus, b.max_minus, atol=1e-14)
    with pytest.raises(ValueError):
        selfduality_batch([w, np.zeros(20)])
