"""Cauchy transform and the Neumann-series solution of A = G^{-1} dG/dzbar.

The plane is sampled on a cell-centred square grid; node (i, j) sits at
``x = -R + (i + 1/2) h``, ``y = -R + (j + 1/2) h`` (shifted by ``center``).
Matrix-valued functions are arrays of shape ``(m, m, N, N)``.

The Cauchy transform

    C[f](z) = 1/pi  int f(xi) / (z - xi) dA(xi)

satisfies dC[f]/dzbar = f.  It is evaluated with the midpoint rule; the
kernel is a function of the index offset, so every row offset contributes
one dense ``m x m`` block applied with a matrix product.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .tensor_core import GridField

log = logging.getLogger(__name__)


class ContractionFailure(RuntimeError):
    """No working subdomain gives a Cauchy-norm bound below the target."""


class CompatibilityViolation(ValueError):
    """The data A_alpha fail the integrability condition."""

    def __init__(self, residual: float, tol: float):
        super().__init__(f"compatibility residual {residual:.3e} exceeds {tol:.3e}")
        self.residual = residual
        self.tol = tol


class SingularG(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# grids


@dataclass
class ComplexGridFunction:
    """Matrix-valued samples on a cell-centred square grid."""

    values: np.ndarray
    half_width: float = 1.0
    center: complex = 0j

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 2:
            v = v[..., None, None]
        if v.ndim != 4 or v.shape[0] != v.shape[1] or v.shape[2] != v.shape[3]:
            raise ValueError("values must have shape (m, m, N, N)")
        if v.shape[0] == 0:
            raise ValueError("empty domain")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite values")
        self.values = v

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[2]

    @property
    def h(self) -> float:
        return 2 * self.half_width / self.m

    def coords(self) -> np.ndarray:
        return cell_centres(self.m, self.half_width, self.center)

    @classmethod
    def from_function(cls, fn, m: int, half_width: float = 1.0, center: complex = 0j):
        z = cell_centres(m, half_width, center)
        return cls(fn(z), half_width, center)

    def like(self, values) -> "ComplexGridFunction":
        return ComplexGridFunction(values, self.half_width, self.center)

    def to_grid_field(self) -> GridField:
        h = self.h
        a = -self.half_width + h / 2
        box = [(self.center.real + a, self.center.real - a), (self.center.imag + a, self.center.imag - a)]
        return GridField(box, (self.m, self.m), self.values, None, "matrix")

    @classmethod
    def from_grid_field(cls, g: GridField) -> "ComplexGridFunction":
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("need a square 2-d grid field")
        (x0, x1), (y0, y1) = g.box
        h = (x1 - x0) / (g.shape[0] - 1)
        if not np.isclose((y1 - y0) / (g.shape[1] - 1), h):
            raise ValueError("grid spacing must be equal on both axes")
        R = (x1 - x0) / 2 + h / 2
        c = complex((x0 + x1) / 2, (y0 + y1) / 2)
        return cls(g.values, R, c)


def cell_centres(m: int, R: float = 1.0, center: complex = 0j) -> np.ndarray:
    h = 2 * R / m
    t = -R + (np.arange(m) + 0.5) * h
    return center + t[:, None] + 1j * t[None, :]


def smoothstep5(t):
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10 - 15 * t + 6 * t ** 2)


@dataclass
class CauchyQuadrature:
    """Singularity rule and radial cutoff chi (plateau = fraction of support)."""

    rule: str = "polar-corrected"
    support_radius: Optional[float] = None  # None: the domain half-width
    plateau_fraction: float = 0.6

    def __post_init__(self):
        if self.rule not in ("cell-exclusion", "polar-corrected"):
            raise ValueError(f"unknown singularity rule {self.rule!r}")
        if not 0 < self.plateau_fraction < 1:
            raise ValueError("plateau fraction must lie in (0, 1)")

    def radius(self, f: ComplexGridFunction) -> float:
        return f.half_width if self.support_radius is None else self.support_radius

    def chi(self, f: ComplexGridFunction) -> np.ndarray:
        """Quintic-smoothstep bump: 1 on the plateau, 0 beyond the support."""
        Rs = self.radius(f)
        r = np.abs(f.coords() - f.center)
        p = self.plateau_fraction * Rs
        return 1.0 - smoothstep5((r - p) / (Rs - p))

    def plateau_mask(self, f: ComplexGridFunction) -> np.ndarray:
        return np.abs(f.coords() - f.center) <= self.plateau_fraction * self.radius(f)


# ---------------------------------------------------------------------------
# Cauchy transform


def _kernel(m: int, h: float) -> np.ndarray:
    """K[a, b] = h^2 / (pi (a + i b) h) for offsets a, b in [-(m-1), m-1], K[0, 0] = 0."""
    off = np.arange(-(m - 1), m)
    w = (off[:, None] + 1j * off[None, :]) * h
    w[m - 1, m - 1] = 1.0
    K = h * h / (np.pi * w)
    K[m - 1, m - 1] = 0.0
    return K


_DENSE_LIMIT = 64  # m^4 complex entries = 268 MB at m = 64
_dense_cache: dict = {}


def _dense_operator(K: np.ndarray) -> np.ndarray:
    """The full (m*m) x (m*m) block-Toeplitz matrix of the kernel (cached)."""
    m = (K.shape[0] + 1) // 2
    key = (m, K.tobytes()[:64], float(np.abs(K).sum()))
    T = _dense_cache.get(key)
    if T is None:
        a = np.arange(m)
        di = (a[:, None, None, None] - a[None, None, :, None] + m - 1)
        dj = (a[None, :, None, None] - a[None, None, None, :] + m - 1)
        T = K[di, dj].reshape(m * m, m * m)
        _dense_cache.clear()
        _dense_cache[key] = T
    return T


def _toeplitz_apply(K: np.ndarray, f: np.ndarray) -> np.ndarray:
    """out[i, j, ...] = sum_{k, l} K[i - k + m - 1, j - l + m - 1] f[k, l, ...]."""
    m = f.shape[0]
    payload = f.shape[2:]
    F = f.reshape(m * m, -1)
    if m <= _DENSE_LIMIT and F.shape[1] > 8:
        # one large GEMM beats the offset loop once the payload is wide
        return (_dense_operator(K) @ F).reshape((m, m) + payload)
    # work in (l, k, p) layout so each row offset is one GEMM over (l, rows * p)
    Ft = np.ascontiguousarray(F.reshape(m, m, -1).transpose(1, 0, 2))
    P = Ft.shape[2]
    out = np.zeros((m, m, P), dtype=complex)  # (j, i, p)
    jl = np.arange(m)[:, None] - np.arange(m)[None, :] + m - 1
    for di in range(-(m - 1), m):
        lo, hi = max(0, di), min(m, m + di)
        if lo >= hi:
            continue
        B = K[di + m - 1][jl]  # (m_j, m_l)
        out[:, lo:hi] += (B @ Ft[:, lo - di:hi - di].reshape(m, -1)).reshape(m, hi - lo, P)
    out = out.transpose(1, 0, 2)
    return out.reshape((m, m) + payload)


def _d_dz(v: np.ndarray, h: float) -> np.ndarray:
    """d/dz = (d_x - i d_y)/2 by second-order differences along the grid axes."""
    return 0.5 * (np.gradient(v, h, axis=0, edge_order=2) - 1j * np.gradient(v, h, axis=1, edge_order=2))


def d_dzbar(v: np.ndarray, h: float) -> np.ndarray:
    """d/dzbar = (d_x + i d_y)/2 by second-order differences along the grid axes."""
    return 0.5 * (np.gradient(v, h, axis=0, edge_order=2) + 1j * np.gradient(v, h, axis=1, edge_order=2))


def cauchy_transform(f: ComplexGridFunction, q: Optional[CauchyQuadrature] = None) -> ComplexGridFunction:
    """g = 1/pi int f(xi)/(z - xi) dA, so that dg/dzbar = f."""
    q = q or CauchyQuadrature()
    m, h = f.m, f.h
    g = _toeplitz_apply(_kernel(m, h), f.values)
    if q.rule == "polar-corrected":
        # linearised f over the equal-area disc: only the df/dz term survives
        g = g - (h * h / np.pi) * _d_dz(f.values, h)
    return f.like(g)


def dbar_residual(g: ComplexGridFunction, f: ComplexGridFunction, mask=None, margin: int = 1) -> float:
    """max |dg/dzbar - f| over interior nodes (and ``mask`` if given)."""
    r = np.abs(d_dzbar(g.values, g.h) - f.values).reshape(g.m, g.m, -1).max(axis=2)
    keep = np.zeros((g.m, g.m), dtype=bool)
    keep[margin:g.m - margin, margin:g.m - margin] = True
    if mask is not None:
        keep &= mask
    return float(r[keep].max())


# ---------------------------------------------------------------------------
# gauge solve


def _node_norms(v: np.ndarray) -> np.ndarray:
    """Frobenius norm of every node matrix (an upper bound for the operator
    norm, so contraction estimates built on it stay conservative)."""
    return np.sqrt(np.einsum("...ij,...ij->...", v.real, v.real) + np.einsum("...ij,...ij->...", v.imag, v.imag))


def contraction_constant(A: ComplexGridFunction, q: CauchyQuadrature) -> float:
    """Discrete bound K = sup_z 1/pi int |A chi|(xi) / |z - xi| dA(xi).

    The self cell uses the disc integral int_disc |w|^-1 dA = 2 pi rho.
    """
    a = _node_norms(A.values) * q.chi(A)
    K = np.abs(_kernel(A.m, A.h))
    s = _toeplitz_apply(K, a[..., None, None].astype(complex)).real[..., 0, 0]
    rho = A.h / np.sqrt(np.pi)
    s = s + 2 * rho * a
    return float(s.max())


@dataclass
class GaugeSolution:
    G: ComplexGridFunction
    quadrature: CauchyQuadrature
    K: float
    iterate_norms: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    bound_ok: bool = True

    @property
    def plateau(self) -> np.ndarray:
        return self.quadrature.plateau_mask(self.G)


def gauge_solve(A: ComplexGridFunction, q: Optional[CauchyQuadrature] = None, K_target: float = 0.45,
                tol: float = 1e-12, max_iter: int = 60, shrink: float = 0.8, max_shrink: int = 12) -> GaugeSolution:
    """Solve dG/dzbar = G A chi by G = sum F_n, F_0 = 1, F_{n+1} = C[F_n A chi].

    The cutoff support is shrunk until the contraction bound is below
    ``K_target`` (< 1/2); otherwise ``ContractionFailure`` is raised.
    """
    q = q or CauchyQuadrature()
    if not 0 < K_target < 0.5:
        raise ValueError("K_target must lie in (0, 1/2)")
    Rs = q.radius(A)
    for _ in range(max_shrink + 1):
        qq = CauchyQuadrature(q.rule, Rs, q.plateau_fraction)
        K = contraction_constant(A, qq)
        if K < K_target:
            break
        log.info("contraction bound %.3f >= %.3f at support %.3f; shrinking", K, K_target, Rs)
        Rs *= shrink
    else:
        raise ContractionFailure(f"Cauchy-norm bound {K:.3f} >= {K_target} on every subdomain tried")

    Achi = A.values * qq.chi(A)[..., None, None]
    N = A.N
    F = np.broadcast_to(np.eye(N, dtype=complex), A.values.shape).copy()
    G = F.copy()
    norms = [float(_node_norms(F).max())]
    ratios = []
    bound_ok = True
    streak = 0
    for n in range(1, max_iter + 1):
        F = cauchy_transform(A.like(F @ Achi), qq).values
        nrm = float(_node_norms(F).max())
        G += F
        ratios.append(nrm / norms[-1] if norms[-1] > 0 else 0.0)
        norms.append(nrm)
        if nrm > (K ** n) * (1 + 1e-6) + 1e-15:
            bound_ok = False
        streak = streak + 1 if ratios[-1] >= 0.5 else 0
        if streak >= 5:
            raise ContractionFailure(f"measured iterate ratio >= 1/2 for 5 iterations (last {ratios[-1]:.3f})")
        if nrm < tol:
            break
    dets = np.abs(np.linalg.det(G))
    if np.any(dets < 1e-12):
        raise SingularG("G is singular at some node")
    return GaugeSolution(A.like(G), qq, K, norms, ratios, bound_ok)


def gauge_residual(sol: GaugeSolution, A: ComplexGridFunction, margin: int = 1) -> float:
    """Relative residual max|dG/dzbar - G A| / max|A| on the plateau."""
    G = sol.G.values
    r = _node_norms(d_dzbar(G, sol.G.h) - G @ A.values)
    keep = sol.plateau.copy()
    keep[:margin] = keep[-margin:] = False
    keep[:, :margin] = keep[:, -margin:] = False
    scale = float(_node_norms(A.values)[keep].max()) or 1.0
    return float(r[keep].max()) / scale


def scalar_gauge_oracle(A: ComplexGridFunction, q: CauchyQuadrature) -> ComplexGridFunction:
    """N = 1: G = exp(C[A chi]) solves dG/dzbar = G A chi exactly in the continuum."""
    if A.N != 1:
        raise ValueError("scalar oracle needs N = 1")
    phi = cauchy_transform(A.like(A.values * q.chi(A)[..., None, None]), q)
    return A.like(np.exp(phi.values))


# ---------------------------------------------------------------------------
# two complex variables


@dataclass
class MultiSolution:
    G: np.ndarray  # (m1, m1, m2, m2, N, N)
    h1: float
    h2: float
    plateau1: np.ndarray
    plateau2: np.ndarray
    K1: float
    K2: float
    commuting: bool


def _dzbar_axes(v, h, axes):
    ax, ay = axes
    return 0.5 * (np.gradient(v, h, axis=ax, edge_order=2) + 1j * np.gradient(v, h, axis=ay, edge_order=2))


def compatibility_residual(A1: np.ndarray, A2: np.ndarray, h1: float, h2: float, margin: int = 1) -> float:
    """max | dA2/dzbar1 - dA1/dzbar2 + [A1, A2] | over interior nodes."""
    R = _dzbar_axes(A2, h1, (0, 1)) - _dzbar_axes(A1, h2, (2, 3)) + A1 @ A2 - A2 @ A1
    s = tuple(slice(margin, n - margin) for n in A1.shape[:4])
    return float(np.abs(R[s]).max())


def multivariable_solve(A1: np.ndarray, A2: np.ndarray, R1: float = 1.0, R2: float = 1.0,
                        q: Optional[CauchyQuadrature] = None, tau_c: Optional[float] = None,
                        K_target: float = 0.45) -> MultiSolution:
    """Solve dG/dzbar_a = G A_a (a = 1, 2) on a product of cell-centred grids.

    Step 1 solves in z1 slice by slice, step 2 gauges A2 by that solution,
    step 3 solves the remaining z2 problem (exp of a Cauchy transform when
    the data commute, Neumann series otherwise).
    """
    q = q or CauchyQuadrature()
    A1 = np.asarray(A1, dtype=complex)
    A2 = np.asarray(A2, dtype=complex)
    if A1.shape != A2.shape or A1.ndim != 6:
        raise ValueError("A1, A2 must share shape (m1, m1, m2, m2, N, N)")
    m1, m2, N = A1.shape[0], A1.shape[2], A1.shape[4]
    h1, h2 = 2 * R1 / m1, 2 * R2 / m2
    tau_c = 10 * max(h1, h2) if tau_c is None else tau_c
    comp = compatibility_residual(A1, A2, h1, h2)
    if comp > tau_c:
        raise CompatibilityViolation(comp, tau_c)

    # step 1: all z2 slices at once, carried as payload of the z1 transform
    P1 = np.moveaxis(A1, (2, 3), (4, 5)).reshape(m1, m1, N, N, m2 * m2)
    P1 = np.moveaxis(P1, 4, 2)  # (m1, m1, S, N, N)
    Gt, K1, chi1, mask1 = _batched_gauge(P1, R1, q, K_target)
    Gt = np.moveaxis(Gt, 2, 4).reshape(m1, m1, N, N, m2, m2)
    Gt = np.moveaxis(Gt, (4, 5), (2, 3))  # (m1, m1, m2, m2, N, N)

    # step 2: transformed z2 data, holomorphic in z1 by compatibility
    Gt_inv = np.linalg.inv(Gt)
    A2p = Gt @ A2 @ Gt_inv - _dzbar_axes(Gt, h2, (2, 3)) @ Gt_inv

    # step 3: solve in z2 for each z1 node
    P2 = A2p.reshape(m1 * m1, m2, m2, N, N)
    P2 = np.moveaxis(P2, 0, 2)  # (m2, m2, S, N, N)
    commuting = _values_commute(A2p.reshape(-1, N, N))
    if commuting:
        q2 = CauchyQuadrature(q.rule, None, q.plateau_fraction)
        chi2 = q2.chi(ComplexGridFunction(np.zeros((m2, m2)), R2))
        phi = _batched_cauchy(P2 * chi2[:, :, None, None, None], R2, q2)
        H = _expm_batch(phi)
        K2 = float("nan")
        mask2 = q2.plateau_mask(ComplexGridFunction(np.zeros((m2, m2)), R2))
    else:
        H, K2, chi2, mask2 = _batched_gauge(P2, R2, q, K_target)
    H = np.moveaxis(H, 2, 0).reshape(m1, m1, m2, m2, N, N)
    return MultiSolution(H @ Gt, h1, h2, mask1, mask2, K1, K2, commuting)


def _values_commute(vals: np.ndarray, tol: float = 1e-10) -> bool:
    """True when all matrices in the batch commute (checked on a basis of their span)."""
    N = vals.shape[-1]
    if N == 1:
        return True
    flat = vals.reshape(len(vals), -1)
    _, sv, Vh = np.linalg.svd(flat, full_matrices=False)
    scale = sv[0] if sv.size and sv[0] > 0 else 1.0
    basis = Vh[sv > 1e-12 * scale].reshape(-1, N, N)
    for a in basis:
        for b in basis:
            if np.abs(a @ b - b @ a).max() > tol:
                return False
    return True


def _batched_cauchy(f: np.ndarray, R: float, q: CauchyQuadrature) -> np.ndarray:
    m = f.shape[0]
    h = 2 * R / m
    g = _toeplitz_apply(_kernel(m, h), f)
    if q.rule == "polar-corrected":
        g = g - (h * h / np.pi) * _d_dz(f, h)
    return g


def _expm_batch(X: np.ndarray) -> np.ndarray:
    """Matrix exponential of a batch of small matrices."""
    N = X.shape[-1]
    if N == 1:
        return np.exp(X)
    if N == 2:
        # exp(a + Y) = e^a (cosh s + sinh(s)/s Y), Y traceless, Y^2 = s^2
        a = 0.5 * (X[..., 0, 0] + X[..., 1, 1])
        Y = X - a[..., None, None] * np.eye(2)
        s = np.sqrt(-np.linalg.det(Y) + 0j)
        small = np.abs(s) < 1e-4
        ss = np.where(small, 1.0, s)
        shc = np.where(small, 1 + s * s / 6, np.sinh(ss) / ss)
        out = np.cosh(s)[..., None, None] * np.eye(2) + shc[..., None, None] * Y
        return np.exp(a)[..., None, None] * out
    from scipy.linalg import expm
    flat = X.reshape(-1, N, N)
    return np.array([expm(x) for x in flat]).reshape(X.shape)


def _batched_gauge(P: np.ndarray, R: float, q: CauchyQuadrature, K_target: float):
    """Neumann gauge solve for a batch P of shape (m, m, S, N, N) sharing one grid."""
    m, S, N = P.shape[0], P.shape[2], P.shape[3]
    h = 2 * R / m
    template = ComplexGridFunction(np.zeros((m, m)), R)
    a = _node_norms(P).max(axis=2)  # worst slice
    Rs = q.radius(template)
    for _ in range(13):
        qq = CauchyQuadrature(q.rule, Rs, q.plateau_fraction)
        chi = qq.chi(template)
        K = np.abs(_kernel(m, h))
        s = _toeplitz_apply(K, (a * chi)[..., None, None].astype(complex)).real[..., 0, 0]
        Kval = float((s + 2 * h / np.sqrt(np.pi) * a * chi).max())
        if Kval < K_target:
            break
        Rs *= 0.8
    else:
        raise ContractionFailure(f"Cauchy-norm bound {Kval:.3f} >= {K_target}")
    Pchi = P * chi[:, :, None, None, None]
    F = np.broadcast_to(np.eye(N, dtype=complex), P.shape).copy()
    G = F.copy()
    prev = 1.0
    streak = 0
    for _ in range(60):
        src = F @ Pchi
        if not np.any(src):
            break  # nilpotent data: the series has terminated
        F = _batched_cauchy(src, R, qq)
        nrm = float(_node_norms(F).max())
        G += F
        streak = streak + 1 if nrm / prev >= 0.5 else 0
        if streak >= 5:
            raise ContractionFailure("measured iterate ratio >= 1/2 for 5 iterations")
        prev = nrm
        if nrm < 1e-12:
            break
    return G, Kval, chi, qq.plateau_mask(template)


def multi_residuals(sol: MultiSolution, A1: np.ndarray, A2: np.ndarray, margin: int = 1) -> tuple:
    """Relative residuals of dG/dzbar_a = G A_a on the product of plateaus."""
    G = sol.G
    m1, m2 = G.shape[0], G.shape[2]
    keep1 = sol.plateau1.copy()
    keep2 = sol.plateau2.copy()
    for k in (keep1, keep2):
        k[:margin] = k[-margin:] = False
        k[:, :margin] = k[:, -margin:] = False
    keep = keep1[:, :, None, None] & keep2[None, None, :, :]
    out = []
    for A, h, axes in ((A1, sol.h1, (0, 1)), (A2, sol.h2, (2, 3))):
        r = _node_norms(_dzbar_axes(G, h, axes) - G @ A)
        scale = float(_node_norms(A)[keep].max()) or 1.0
        out.append(float(r[keep].max()) / scale)
    return tuple(out)


# ---------------------------------------------------------------------------
# manufactured potentials A = G0^{-1} dG0/dzbar with known smooth gauges G0

_E = np.array([[0, 1], [0, 0]], dtype=complex)


def nilpotent_potential(z: np.ndarray) -> np.ndarray:
    """G0 = 1 + phi E with E^2 = 0, so A = dphi/dzbar E."""
    g = np.exp(-2 * np.abs(z) ** 2)
    return (0.8 * (-2 * z) * g * (1 + 0.5 * z))[..., None, None] * _E


def noncommuting_potential(z: np.ndarray) -> np.ndarray:
    """G0 = (1 + phi E)(1 + psi E^T); A(z) does not commute across nodes."""
    zb = np.conj(z)
    g = np.exp(-3 * z * zb)
    phi, psi = 0.6 * g * (1 + z), 0.5 * g * (1 - 0.5j * zb)
    e = lambda a: a[..., None, None]
    I2, F = np.eye(2), _E.T
    G = (I2 + e(phi) * _E) @ (I2 + e(psi) * F)
    dG = e(-3 * z * phi) * _E @ (I2 + e(psi) * F) + (I2 + e(phi) * _E) @ (e(-3 * z * psi + 0.5 * g * (-0.5j)) * F)
    return np.linalg.inv(G) @ dG


BUILTIN_POTENTIALS = {"nilpotent": nilpotent_potential, "noncommuting": noncommuting_potential}
