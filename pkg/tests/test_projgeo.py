import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geomlab.projgeo import (
    HermitianProjector, OutsideChart, almost_complex, chart_derivatives, chart_family_field,
    chart_of, chart_projectors, complex_hessian, fundamental_form, fundamental_form_closure,
    is_tangent, kahler_potential, metric_from_chart, projector_field, projector_from_chart,
    projector_grid_partials, random_projector, ricci_from_potential, tangent_project, trace_p_dp_dp,
)

dims = st.sampled_from([(2, 1), (3, 1), (4, 2), (5, 2), (4, 1)])
seeds = st.integers(0, 2**32 - 1)


def rand_Z(rng, N, p, scale=1.0):
    return scale * (rng.normal(size=(N - p, p)) + 1j * rng.normal(size=(N - p, p)))


def rand_herm(rng, N):
    A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    return A + A.conj().T


def test_chart_origin_and_hand_value():
    P = projector_from_chart(np.zeros((2, 2)))
    assert np.allclose(P.matrix, np.diag([1, 1, 0, 0]))
    assert np.allclose(projector_from_chart(np.array([[1.0]])).matrix, 0.5 * np.ones((2, 2)))


def test_projector_validation():
    with pytest.raises(ValueError):
        HermitianProjector(np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        HermitianProjector(np.diag([1.0, 0.0]), p=2)


@settings(max_examples=40, deadline=None)
@given(dims, seeds)
def test_chart_projector_invariants_and_roundtrip(dim, seed):
    N, p = dim
    rng = np.random.default_rng(seed)
    Z = rand_Z(rng, N, p)
    P = projector_from_chart(Z)
    M = P.matrix
    assert np.abs(M - M.conj().T).max() < 1e-12
    assert np.abs(M @ M - M).max() < 1e-12
    assert abs(np.trace(M).real - p) < 1e-12
    assert np.allclose(chart_of(P), Z, atol=1e-10)
    assert np.allclose(chart_projectors(Z[None]), M[None], atol=1e-13)


def test_chart_of_rejects_outside():
    with pytest.raises(OutsideChart):
        chart_of(HermitianProjector(np.diag([0.0, 1.0])))


@settings(max_examples=40, deadline=None)
@given(dims, seeds)
def test_tangent_projection_is_orthogonal_projector(dim, seed):
    N, p = dim
    rng = np.random.default_rng(seed)
    P = random_projector(N, p, rng)
    A, B = rand_herm(rng, N), rand_herm(rng, N)
    pA, pB = tangent_project(P, A), tangent_project(P, B)
    assert np.abs(tangent_project(P, pA) - pA).max() < 1e-12
    assert abs(np.trace(pA @ B) - np.trace(A @ pB)) < 1e-11
    assert is_tangent(P, pA)
    # commuting with P is normal to the orbit
    C = P.matrix - p / N * np.eye(N)
    assert np.abs(tangent_project(P, C)).max() < 1e-12


def test_tangent_projection_rejects_non_hermitian():
    P = projector_from_chart(np.array([[0.3]]))
    with pytest.raises(ValueError):
        tangent_project(P, np.array([[0, 1], [0, 0]]))


def test_almost_complex_hand_value():
    P = np.diag([1.0, 0.0])
    A = np.array([[0, 1], [1, 0]], dtype=complex)
    assert np.allclose(almost_complex(P, A), [[0, -1j], [1j, 0]])
    with pytest.raises(ValueError):
        almost_complex(P, np.diag([1.0, -1.0]))


def test_almost_complex_squares_to_minus_one_and_isometry():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        N, p = (4, 2) if rng.random() < 0.5 else (3, 1)
        P = random_projector(N, p, rng)
        A = tangent_project(P, rand_herm(rng, N))
        B = tangent_project(P, rand_herm(rng, N))
        JA, JB = almost_complex(P, A), almost_complex(P, B)
        worst = max(worst, np.abs(almost_complex(P, JA) + A).max())
        assert abs(np.trace(JA @ JA) - np.trace(A @ A)) < 1e-11
        assert abs(np.trace(JA @ JB) - np.trace(A @ B)) < 1e-11
    assert worst < 1e-11


def test_kahler_potential_examples():
    assert kahler_potential(np.zeros((2, 2))) == 0.0
    rng = np.random.default_rng(1)
    Z1, Z2 = rand_Z(rng, 3, 1), rand_Z(rng, 4, 2)
    Z = np.zeros((4, 3), dtype=complex)
    Z[:2, :1], Z[2:, 1:] = Z1, Z2
    assert np.isclose(kahler_potential(Z), kahler_potential(Z1) + kahler_potential(Z2))


def test_chart_derivatives_match_differences():
    rng = np.random.default_rng(2)
    Z = rand_Z(rng, 4, 2, 0.5)
    D = chart_derivatives(Z)
    h = 1e-6
    for k in range(Z.size):
        E = np.zeros(Z.size, dtype=complex)
        E[k] = h
        E = E.reshape(Z.shape)
        dx = (projector_from_chart(Z + E).matrix - projector_from_chart(Z - E).matrix) / (2 * h)
        dy = (projector_from_chart(Z + 1j * E).matrix - projector_from_chart(Z - 1j * E).matrix) / (2 * h)
        assert np.allclose(D[k], 0.5 * (dx - 1j * dy), atol=1e-8)
        assert np.allclose(D[k].conj().T, 0.5 * (dx + 1j * dy), atol=1e-8)


def test_potential_hessian_reproduces_induced_metric():
    # CP^1 at the origin: d dbar F = 1 = Tr(dP/dz dP/dzbar); ds^2 = Tr(dP^2) = 2 G
    G = complex_hessian(kahler_potential, np.zeros((1, 1)), 1e-3)
    assert abs(G[0, 0] - 1) < 1e-6
    assert abs(metric_from_chart(np.zeros((1, 1)))[0, 0] - 1) < 1e-12
    rng = np.random.default_rng(5)
    for N, p in ((3, 1), (4, 2)):
        Z = rand_Z(rng, N, p, 0.5)
        Gm = metric_from_chart(Z)
        assert np.abs(complex_hessian(kahler_potential, Z, 1e-2) - Gm).max() < 1e-6
        V = rand_Z(rng, N, p).ravel()
        Pdot = np.tensordot(V, chart_derivatives(Z), 1)
        Pdot = Pdot + Pdot.conj().T
        assert np.isclose(np.trace(Pdot @ Pdot).real, 2 * (V @ Gm @ V.conj()).real)


def test_flat_potential_has_zero_ricci():
    R = ricci_from_potential(lambda Z: float(np.sum(np.abs(Z) ** 2)), np.array([[0.2 + 0.1j, -0.3]]))
    assert np.abs(R).max() < 1e-6


@pytest.mark.parametrize("z", [0.0, 0.5 + 0.3j, -0.8 + 1.1j])
def test_fubini_study_einstein_constant(z):
    Z = np.array([[z]])
    R = ricci_from_potential(kahler_potential, Z)
    G = complex_hessian(kahler_potential, Z)
    assert abs(R[0, 0] / G[0, 0] - 2) < 1e-3


def test_cp2_einstein_constant():
    Z = np.array([[0.3 - 0.2j], [0.1 + 0.5j]])
    R = ricci_from_potential(kahler_potential, Z)
    assert np.abs(R - 3 * metric_from_chart(Z)).max() < 1e-4


def test_ricci_rejects_non_positive():
    with pytest.raises(ValueError):
        ricci_from_potential(lambda Z: -float(np.sum(np.abs(Z) ** 2)), np.zeros((1, 1)))


# --- fundamental form ----------------------------------------------------

def _family(seed=0, amp=0.2):
    rng = np.random.default_rng(seed)
    A, B, C = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))

    def Zf(t):
        x, y, z = (t[..., i, None, None] for i in range(3))
        return amp * (A * np.sin(x) + B * y * x + C * np.cos(z + y))
    return Zf


def test_psi_closure_constant_field():
    g = projector_field(lambda t: np.diag([1.0, 1.0, 0.0, 0.0]), [(0, 1)] * 3, (6, 6, 6))
    assert fundamental_form_closure(g) == 0.0


def test_psi_closure_refinement():
    Zf = _family()
    r = [fundamental_form_closure(chart_family_field(Zf, [(0, 1)] * 3, (m + 1,) * 3)) for m in (32, 64)]
    assert r[1] < 1e-4
    assert r[0] / r[1] > 3.5


def test_psi_closure_needs_three_parameters():
    g = chart_family_field(lambda t: t[..., :1, None] * np.ones((1, 1)), [(0, 1)] * 2, (5, 5))
    with pytest.raises(ValueError):
        fundamental_form_closure(g)


def test_psi_relative_factor_and_odd_traces():
    g = chart_family_field(_family(1), [(0, 1)] * 3, (9, 9, 9))
    P, dP = g.values, projector_grid_partials(g)
    psi = fundamental_form(P, dP).coeffs
    alt = trace_p_dp_dp(P, dP).coeffs
    # psi = -2 Tr(P dP ^ dP), purely imaginary
    assert np.abs(psi + 2 * alt).max() < 1e-12
    assert np.abs(psi.real).max() < 1e-12


def test_odd_trace_and_rank_one_sandwich_vanish():
    rng = np.random.default_rng(4)
    for N, p in ((3, 1), (4, 2)):
        Z = rand_Z(rng, N, p, 0.7)
        P = projector_from_chart(Z).matrix
        D = chart_derivatives(Z)
        X = [D[0] + D[0].conj().T, 1j * (D[-1] - D[-1].conj().T), D[0] + D[-1] + (D[0] + D[-1]).conj().T]
        assert abs(np.trace(X[0] @ X[1] @ X[2])) < 1e-12
        if p == 1:
            Q = np.eye(N) - P
            for Y in X:
                assert np.abs(P @ Y @ P).max() < 1e-10
                assert np.abs(Q @ Y @ Q).max() < 1e-10


def test_projector_field_json_roundtrip():
    from geomlab.tensor_core import GridField
    g = chart_family_field(_family(), [(0, 1)] * 3, (3, 3, 3))
    back = GridField.from_json(g.to_json())
    assert back.payload_kind == "projector"
    assert np.array_equal(back.values, g.values)
