import numpy as np
import pytest

from geomlab.dbar import (
    CauchyQuadrature, CompatibilityViolation, ComplexGridFunction, ContractionFailure,
    GaugeSolution, cauchy_transform, cell_centres, compatibility_residual, contraction_constant,
    dbar_residual, gauge_residual, gauge_solve, multi_residuals, multivariable_solve,
    scalar_gauge_oracle, _kernel, _toeplitz_apply,
)

E = np.array([[0, 1], [0, 0]], dtype=complex)
F = E.T.copy()
I2 = np.eye(2)


def nilpotent_gauge(z):
    # G0 = 1 + phi E, A = G0^{-1} dG0/dzbar = dphi/dzbar E
    g = np.exp(-2 * np.abs(z) ** 2)
    dphi = 0.8 * (-2 * z) * g * (1 + 0.5 * z)
    return dphi[..., None, None] * E


def noncommuting_gauge(z):
    zb = np.conj(z)
    g = np.exp(-3 * z * zb)
    phi, psi = 0.6 * g * (1 + z), 0.5 * g * (1 - 0.5j * zb)
    dphi = -3 * z * phi
    dpsi = -3 * z * psi + 0.5 * g * (-0.5j)
    e = lambda a: a[..., None, None]
    G = (I2 + e(phi) * E) @ (I2 + e(psi) * F)
    dG = e(dphi) * E @ (I2 + e(psi) * F) + (I2 + e(phi) * E) @ (e(dpsi) * F)
    return np.linalg.inv(G) @ dG


def test_toeplitz_matches_direct_sum():
    rng = np.random.default_rng(0)
    m, h = 7, 0.3
    f = rng.normal(size=(m, m, 2)) + 1j * rng.normal(size=(m, m, 2))
    z = cell_centres(m, m * h / 2)
    direct = np.zeros_like(f)
    for i in range(m):
        for j in range(m):
            for k in range(m):
                for l in range(m):
                    if (i, j) != (k, l):
                        direct[i, j] += h * h / np.pi * f[k, l] / (z[i, j] - z[k, l])
    K = _kernel(m, h)
    assert np.allclose(_toeplitz_apply(K, f), direct, atol=1e-13)
    wide = rng.normal(size=(m, m, 16)) + 0j
    loop = np.stack([_toeplitz_apply(K, wide[..., p:p + 1])[..., 0] for p in range(16)], axis=-1)
    assert np.allclose(_toeplitz_apply(K, wide), loop, atol=1e-12)


def test_cauchy_of_zero():
    f = ComplexGridFunction(np.zeros((16, 16)), 1.0)
    assert np.all(cauchy_transform(f).values == 0)


def test_cauchy_rejects_bad_input():
    with pytest.raises(ValueError):
        ComplexGridFunction(np.full((4, 4), np.nan))
    with pytest.raises(ValueError):
        ComplexGridFunction(np.zeros((0, 0)))
    with pytest.raises(ValueError):
        CauchyQuadrature("trapezoid")


def test_disc_indicator_residual():
    # f = 1 on the unit disc; the residual is read away from the jump circle
    out = []
    for m in (64, 128):
        f = ComplexGridFunction.from_function(lambda z: (np.abs(z) <= 1.0).astype(complex), m, 1.2)
        g = cauchy_transform(f)
        out.append(dbar_residual(g, f, mask=np.abs(f.coords()) < 0.9))
    assert out[1] < 0.05 and out[1] < out[0]


@pytest.mark.parametrize("rule", ["polar-corrected", "cell-exclusion"])
def test_gaussian_refinement_order(rule):
    res = []
    for m in (32, 64, 128):
        f = ComplexGridFunction.from_function(lambda z: np.exp(-4 * np.abs(z) ** 2), m, 1.5)
        res.append(dbar_residual(cauchy_transform(f, CauchyQuadrature(rule)), f))
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders >= 1.0)


def test_gauge_of_zero_is_identity():
    A = ComplexGridFunction(np.zeros((16, 16, 2, 2)), 1.0)
    sol = gauge_solve(A)
    assert np.allclose(sol.G.values, I2)


def test_manufactured_nilpotent_and_order():
    res = []
    for m in (32, 64, 128):
        A = ComplexGridFunction.from_function(nilpotent_gauge, m, 1.0)
        sol = gauge_solve(A)
        res.append(gauge_residual(sol, A))
        assert sol.K < 0.5
    assert res[-1] < 1e-3
    assert np.all(np.log2(np.array(res[:-1]) / np.array(res[1:])) >= 1.0)


def test_neumann_geometric_decay_and_bounds():
    A = ComplexGridFunction.from_function(noncommuting_gauge, 64, 1.0)
    sol = gauge_solve(A)
    assert len(sol.ratios) >= 6
    assert max(sol.ratios) < 0.5
    assert sol.bound_ok
    # ||1 - G|| <= K / (1 - K) and G invertible everywhere
    dev = np.linalg.norm(sol.G.values - I2, ord=2, axis=(-2, -1)).max()
    assert dev <= sol.K / (1 - sol.K) + 1e-12
    assert np.all(np.abs(np.linalg.det(sol.G.values)) > 0)
    assert gauge_residual(sol, A) < 1e-2


def test_scalar_oracle_agrees():
    A = ComplexGridFunction.from_function(
        lambda z: (0.5 * np.exp(-2 * np.abs(z) ** 2) * (1 + z))[..., None, None], 64, 1.0)
    sol = gauge_solve(A)
    oracle = GaugeSolution(scalar_gauge_oracle(A, sol.quadrature), sol.quadrature, sol.K)
    r1, r2 = gauge_residual(sol, A), gauge_residual(oracle, A)
    assert r1 < 1e-2 and r2 < 1e-2
    assert abs(r1 - r2) < 1e-3


def test_gauge_covariance_constant_conjugation():
    A = ComplexGridFunction.from_function(noncommuting_gauge, 32, 1.0)
    C = np.array([[1.0, 0.1 + 0.1j], [-0.1j, 1.1]])
    Ci = np.linalg.inv(C)
    sol = gauge_solve(A)
    solc = gauge_solve(A.like(Ci @ A.values @ C), sol.quadrature, K_target=0.49, max_shrink=0)
    # same support: G_C = C^{-1} G C for the linear iteration
    assert solc.quadrature.support_radius == sol.quadrature.support_radius
    assert np.allclose(solc.G.values, Ci @ sol.G.values @ C, atol=1e-12)


def test_domain_shrinks_then_fails():
    big = ComplexGridFunction(np.full((24, 24, 1, 1), 3.0 + 0j), 1.0)
    sol = gauge_solve(big)
    assert sol.quadrature.support_radius < 1.0 and sol.K < 0.45
    huge = ComplexGridFunction(np.full((24, 24, 1, 1), 1e6 + 0j), 1.0)
    with pytest.raises(ContractionFailure):
        gauge_solve(huge, max_shrink=3)


def test_contraction_constant_scales_linearly():
    A = ComplexGridFunction.from_function(nilpotent_gauge, 32, 1.0)
    q = CauchyQuadrature()
    assert np.isclose(contraction_constant(A.like(2 * A.values), q), 2 * contraction_constant(A, q))


# --- two variables --------------------------------------------------------

def two_variable_data(m1, m2, noncomm):
    z1 = cell_centres(m1)[:, :, None, None]
    z2 = cell_centres(m2)[None, None]
    g = np.exp(-2 * np.abs(z1) ** 2 - 2 * np.abs(z2) ** 2)
    phi = 0.5 * g * (1 + z1 + 0.5 * z2)
    c = 0.4 if noncomm else 0.0
    psi = c * g * (1 - 0.3j * np.conj(z2))
    d1phi, d2phi = -2 * z1 * phi, -2 * z2 * phi
    d1psi, d2psi = -2 * z1 * psi, -2 * z2 * psi + c * g * (-0.3j)
    e = lambda a: a[..., None, None]
    G = (I2 + e(phi) * E) @ (I2 + e(psi) * F)
    Gi = np.linalg.inv(G)
    A1 = Gi @ (e(d1phi) * E @ (I2 + e(psi) * F) + (I2 + e(phi) * E) @ (e(d1psi) * F))
    A2 = Gi @ (e(d2phi) * E @ (I2 + e(psi) * F) + (I2 + e(phi) * E) @ (e(d2psi) * F))
    return A1, A2


def test_multivariable_zero_data():
    Z = np.zeros((12, 12, 8, 8, 2, 2), dtype=complex)
    sol = multivariable_solve(Z, Z)
    assert np.allclose(sol.G, I2)


def test_multivariable_manufactured_commuting():
    A1, A2 = two_variable_data(64, 24, noncomm=False)
    sol = multivariable_solve(A1, A2)
    assert sol.commuting
    r1, r2 = multi_residuals(sol, A1, A2)
    assert r1 < 1e-2 and r2 < 1e-2


def test_multivariable_manufactured_noncommuting():
    A1, A2 = two_variable_data(32, 24, noncomm=True)
    assert compatibility_residual(A1, A2, 2 / 32, 2 / 24) < 0.05
    sol = multivariable_solve(A1, A2)
    assert not sol.commuting
    r1, r2 = multi_residuals(sol, A1, A2)
    assert r1 < 1e-2 and r2 < 1e-2


def test_compatibility_violation_raised():
    # [aE, aF] = a^2 diag(1, -1) cannot be cancelled by the derivative terms
    m1, m2 = 32, 16
    z1 = cell_centres(m1)[:, :, None, None]
    z2 = cell_centres(m2)[None, None]
    a = (2.0 * np.exp(-np.abs(z1) ** 2 - np.abs(z2) ** 2))[..., None, None]
    with pytest.raises(CompatibilityViolation) as info:
        multivariable_solve(a * E, a * F)
    assert info.value.residual > info.value.tol


def test_library_potentials_match_manufactured_gauges():
    from geomlab.dbar import BUILTIN_POTENTIALS
    z = cell_centres(9, 1.0)
    assert np.allclose(BUILTIN_POTENTIALS["nilpotent"](z), nilpotent_gauge(z), atol=1e-14)
    assert np.allclose(BUILTIN_POTENTIALS["noncommuting"](z), noncommuting_gauge(z), atol=1e-14)
