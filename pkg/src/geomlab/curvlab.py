"""Finite-difference Riemannian curvature on coordinate charts, Gibbons-Hawking
metrics and their hyperkahler checks, and the linearized complex Monge-Ampere
equation.

Index conventions: Gamma[l, m, n] = Gamma^l_{mn};
Riemann[l, r, m, n] = R^l_{rmn} = d_m Gamma^l_{rn} - d_n Gamma^l_{rm}
+ Gamma^l_{ms} Gamma^s_{nr} - Gamma^l_{ns} Gamma^s_{mr}; Ricci R_{rn} = R^l_{rln}.

Step sizes follow the error model of the fourth-order central stencil used at
every finite-difference level: truncation C h^4 plus rounding C' u / h^k with k
the number of nested difference levels (1 with analytic metric partials, 2
without), minimized at h = u^{1/(4+k)} times the chart scale.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .projgeo import complex_hessian
from .tensor_core import levi_civita

EPS = np.finfo(float).eps
_C4 = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_O4 = np.array([-2, -1, 1, 2])


def default_step(scale: float, levels: int) -> float:
    return float(scale * EPS ** (1.0 / (4 + levels)))


def _fd4(fn: Callable, x: np.ndarray, h: float) -> np.ndarray:
    """Stack of d_k fn(x), k = 0..n-1, fourth-order central differences."""
    x = np.asarray(x, dtype=float)
    out = []
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        out.append(sum(c * fn(x + o * e) for c, o in zip(_C4, _O4)) / h)
    return np.array(out)


# ---------------------------------------------------------------------------
# charts and curvature


@dataclass
class MetricChart:
    n: int
    g: Callable                       # x -> (n, n)
    dg: Optional[Callable] = None     # x -> (n, n, n), dg[k] = d_k g
    scale: float = 1.0
    riemannian: bool = True

    def metric(self, x) -> np.ndarray:
        G = np.asarray(self.g(np.asarray(x, dtype=float)), dtype=float)
        if G.shape != (self.n, self.n):
            raise ValueError("metric has the wrong shape")
        if np.abs(G - G.T).max() > 1e-12 * max(1.0, np.abs(G).max()):
            raise ValueError("metric is not symmetric")
        if abs(np.linalg.det(G)) <= 1e-12:
            raise ValueError("metric is singular")
        return G

    def partials(self, x, h: Optional[float] = None) -> np.ndarray:
        if self.dg is not None:
            return np.asarray(self.dg(np.asarray(x, dtype=float)), dtype=float)
        return _fd4(self.metric, x, h if h is not None else default_step(self.scale, 1))

    def step(self) -> float:
        return default_step(self.scale, 1 if self.dg is not None else 2)


def christoffel(chart: MetricChart, x, h: Optional[float] = None) -> np.ndarray:
    G = chart.metric(x)
    dg = chart.partials(x, h)
    Gi = np.linalg.inv(G)
    # T[m, n, r] = d_m g_{nr} + d_n g_{mr} - d_r g_{mn}
    T = dg + np.swapaxes(dg, 0, 1) - np.transpose(dg, (1, 2, 0))
    return 0.5 * np.einsum("lr,mnr->lmn", Gi, T)


@dataclass
class CurvaturePoint:
    x: np.ndarray
    g: np.ndarray
    Gamma: np.ndarray
    Riemann: np.ndarray
    Ricci: np.ndarray
    scalar: float
    Einstein: np.ndarray

    def lowered(self) -> np.ndarray:
        """R_{lrmn} = g_{ls} R^s_{rmn}."""
        return np.einsum("ls,srmn->lrmn", self.g, self.Riemann)

    def frame(self) -> np.ndarray:
        """Columns: Gram-Schmidt orthonormalization of the coordinate frame in order."""
        L = np.linalg.cholesky(self.g)
        return np.linalg.inv(L.T)

    def frame_riemann(self) -> np.ndarray:
        E = self.frame()
        return np.einsum("lrmn,la,rb,mc,nd->abcd", self.lowered(), E, E, E, E)

    def norm(self) -> float:
        return float(np.linalg.norm(self.frame_riemann()))

    def frame_ricci_norm(self) -> float:
        E = self.frame()
        return float(np.linalg.norm(E.T @ self.Ricci @ E))

    def bianchi_residual(self) -> float:
        R = self.Riemann
        cyc = R + np.transpose(R, (0, 2, 3, 1)) + np.transpose(R, (0, 3, 1, 2))
        return float(np.abs(cyc).max())

    def pair_symmetry_residual(self) -> float:
        Rf = self.frame_riemann()
        return float(np.abs(Rf - np.transpose(Rf, (2, 3, 0, 1))).max())

    def ricci_symmetry_residual(self) -> float:
        return float(np.abs(self.Ricci - self.Ricci.T).max())


def curvature(chart: MetricChart, x, h: Optional[float] = None) -> CurvaturePoint:
    x = np.asarray(x, dtype=float)
    h = chart.step() if h is None else h
    G = chart.metric(x)
    Gam = christoffel(chart, x, h)
    dGam = _fd4(lambda y: christoffel(chart, y, h), x, h)      # dGam[m, l, r, n]
    R = (np.einsum("mlrn->lrmn", dGam) - np.einsum("nlrm->lrmn", dGam)
         + np.einsum("lms,snr->lrmn", Gam, Gam) - np.einsum("lns,smr->lrmn", Gam, Gam))
    Ric = np.einsum("lrln->rn", R)
    s = float(np.einsum("rn,rn->", np.linalg.inv(G), Ric))
    return CurvaturePoint(x, G, Gam, R, Ric, s, Ric - 0.5 * s * G)


def einstein_divergence(chart: MetricChart, x, H: float, h: Optional[float] = None) -> np.ndarray:
    """nabla^m G_{mn} with the outer derivative a second-order central difference of step H."""
    x = np.asarray(x, dtype=float)
    cp = curvature(chart, x, h)
    n = chart.n
    dG = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = H
        dG[k] = (curvature(chart, x + e, h).Einstein - curvature(chart, x - e, h).Einstein) / (2 * H)
    Gam, E = cp.Gamma, cp.Einstein
    cov = dG - np.einsum("lam,ln->amn", Gam, E) - np.einsum("lan,ml->amn", Gam, E)
    return np.einsum("am,amn->n", np.linalg.inv(cp.g), cov)


def selfduality_parts(Rf: np.ndarray, orientation: int = 1) -> tuple:
    """Split frame curvature on its second 2-form pair under *; returns (SD, ASD) arrays."""
    eps = orientation * levi_civita(4)
    star = 0.5 * np.einsum("cdef,abef->abcd", eps, Rf)
    return 0.5 * (Rf + star), 0.5 * (Rf - star)


def riemann_selfduality(chart: MetricChart, x, orientation: int = 1,
                        h: Optional[float] = None) -> tuple:
    if chart.n != 4 or not chart.riemannian:
        raise ValueError("self-duality needs a 4-dimensional Riemannian chart")
    cp = curvature(chart, x, h)
    if np.linalg.eigvalsh(cp.g).min() <= 0:
        raise ValueError("metric is not positive definite")
    sd, asd = selfduality_parts(cp.frame_riemann(), orientation)
    return float(np.linalg.norm(sd)), float(np.linalg.norm(asd))


# ---------------------------------------------------------------------------
# fixture charts


def flat_chart(n: int) -> MetricChart:
    return MetricChart(n, lambda x: np.eye(n), lambda x: np.zeros((n, n, n)))


def sphere2_chart(r: float = 1.0) -> MetricChart:
    """(theta, phi) chart of the round 2-sphere of radius r."""
    def g(x):
        return r * r * np.diag([1.0, np.sin(x[0]) ** 2])

    def dg(x):
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = r * r * 2 * np.sin(x[0]) * np.cos(x[0])
        return out
    return MetricChart(2, g, dg)


def sphere4_chart(r: float = 1.0) -> MetricChart:
    """Stereographic chart of the round 4-sphere: 4 r^4 / (r^2 + |x|^2)^2 delta."""
    def g(x):
        return 4 * r ** 4 / (r * r + x @ x) ** 2 * np.eye(4)
    return MetricChart(4, g, None, scale=r)


# ---------------------------------------------------------------------------
# Gibbons-Hawking


class ChartDomainError(ValueError):
    pass


@dataclass
class GibbonsHawkingData:
    """A_0 = epsilon + sum m_i / |x - c_i| on R^3; Dirac strings along -e_3.

    ``a_signs`` multiplies the components of the connection (negative controls).
    """

    epsilon: float
    centers: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    masses: np.ndarray = field(default_factory=lambda: np.zeros(0))
    exclusion: float = 0.05
    a_signs: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        self.masses = np.asarray(self.masses, dtype=float).reshape(-1)
        if len(self.masses) != len(self.centers):
            raise ValueError("one mass per center")
        if np.any(self.masses <= 0):
            raise ValueError("masses must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")

    @property
    def scale(self) -> float:
        if len(self.centers) < 2:
            return float(max([1.0] + list(self.masses)))
        span = np.ptp(self.centers, axis=0).max()
        return float(max(span, self.masses.max()))

    def check(self, y: np.ndarray):
        y = np.asarray(y, dtype=float)
        for c in self.centers:
            d = y - c
            if np.any(np.linalg.norm(d, axis=-1) <= self.exclusion):
                raise ChartDomainError("point within the exclusion radius of a center")
            if np.any((np.hypot(d[..., 0], d[..., 1]) <= self.exclusion) & (d[..., 2] < 0)):
                raise ChartDomainError("point within the Dirac string tube")

    def potential(self, y: np.ndarray) -> tuple:
        """(A_0, grad A_0) at points y of shape (..., 3)."""
        y = np.asarray(y, dtype=float)
        A0 = np.full(y.shape[:-1], float(self.epsilon))
        grad = np.zeros(y.shape)
        for c, m in zip(self.centers, self.masses):
            d = y - c
            r = np.linalg.norm(d, axis=-1)
            A0 = A0 + m / r
            grad = grad - m * d / r[..., None] ** 3
        return A0, grad

    def connection(self, y: np.ndarray) -> tuple:
        """(A, dA) with A_n the monopole form and dA[..., k, n] = d_k A_n."""
        y = np.asarray(y, dtype=float)
        A = np.zeros(y.shape)
        dA = np.zeros(y.shape + (3,))
        for c, m in zip(self.centers, self.masses):
            d = y - c
            r = np.linalg.norm(d, axis=-1)
            q = r * (r + d[..., 2])                       # f = 1 / q
            # d_k q = (d_k / r)(r + z) + r (d_k / r + delta_k3)
            dq = d * ((r + d[..., 2]) / r)[..., None] + d
            dq[..., 2] += r
            f = 1.0 / q
            df = -dq * (f * f)[..., None]
            v = np.stack([d[..., 1], -d[..., 0], np.zeros_like(r)], -1)
            dv = np.zeros(y.shape + (3,))
            dv[..., 1, 0] = 1.0
            dv[..., 0, 1] = -1.0
            A = A + m * v * f[..., None]
            dA = dA + m * (df[..., :, None] * v[..., None, :] + f[..., None, None] * dv)
        s = np.asarray(self.a_signs, dtype=float)
        return A * s, dA * s


def gibbons_hawking_chart(data: GibbonsHawkingData) -> MetricChart:
    """ds^2 = (dx^0 + A_n dx^n)^2 / A_0 + A_0 |dx|^2 with analytic first partials."""
    D = np.diag([0.0, 1.0, 1.0, 1.0])

    def parts(x):
        y = np.asarray(x, dtype=float)[1:]
        data.check(y)
        A0, gA0 = data.potential(y)
        if A0 <= 0:
            raise ChartDomainError("A_0 must be positive")
        A, dA = data.connection(y)
        return A0, gA0, np.concatenate([[1.0], A]), dA

    def g(x):
        A0, _, a, _ = parts(x)
        return np.outer(a, a) / A0 + A0 * D

    def dg(x):
        A0, gA0, a, dA = parts(x)
        out = np.zeros((4, 4, 4))
        for k in range(3):
            da = np.concatenate([[0.0], dA[k]])
            out[k + 1] = ((np.outer(da, a) + np.outer(a, da)) / A0
                          - np.outer(a, a) * gA0[k] / A0 ** 2 + gA0[k] * D)
        return out
    return MetricChart(4, g, dg, scale=data.scale)


def triplet_forms(data: GibbonsHawkingData, y: np.ndarray) -> np.ndarray:
    """j_k = theta^0 ^ theta^k - theta^l ^ theta^m as (..., 3, 4, 4) antisymmetric arrays."""
    y = np.asarray(y, dtype=float)
    A0, _ = data.potential(y)
    A, _ = data.connection(y)
    th = np.zeros(y.shape[:-1] + (4, 4))
    th[..., 0, 0] = 1.0
    th[..., 0, 1:] = A
    th[..., 0, :] /= np.sqrt(A0)[..., None]
    for k in range(3):
        th[..., k + 1, k + 1] = np.sqrt(A0)
    w = lambda a, b: (np.einsum("...i,...j->...ij", th[..., a, :], th[..., b, :])
                      - np.einsum("...i,...j->...ij", th[..., b, :], th[..., a, :]))
    out = []
    for k in range(3):
        l, m = (k + 1) % 3, (k + 2) % 3
        out.append(w(0, k + 1) - w(l + 1, m + 1))
    return np.stack(out, axis=-3)


def asd_triplet_closure(data: GibbonsHawkingData, box: Sequence, m: int, order: int = 2,
                        margin: float = 0.125) -> float:
    """max |d j_k| on an (m+1)^3 grid over a box in (x^1, x^2, x^3).

    Central differences of the given order (2 or 4); d/dx^0 vanishes identically.
    The maximum is taken over a fixed sub-box (``margin`` of each side trimmed) so
    that refinements compare the same physical region.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    k = int(round(margin * m))
    if k < order // 2 or m + 1 - 2 * k < 1:
        raise ValueError("grid too coarse for the requested margin and order")
    axes = [np.linspace(a, b, m + 1) for a, b in box]
    Y = np.stack(np.meshgrid(*axes, indexing="ij"), -1)
    data.check(Y)
    j = triplet_forms(data, Y)                                    # (m+1,)^3 + (3, 4, 4)
    grads = [np.zeros_like(j)]
    for i, ax in enumerate(axes):
        h = ax[1] - ax[0]
        r = lambda s: np.roll(j, s, axis=i)                      # wrapped nodes fall in the margin
        grads.append((r(-1) - r(1)) / (2 * h) if order == 2
                     else (r(2) - 8 * r(1) + 8 * r(-1) - r(-2)) / (12 * h))
    dj = np.stack(grads, axis=-3)                                 # [..., k, a, b, c] = d_a j_k[b, c]
    cyc = dj + np.einsum("...kabc->...kbca", dj) + np.einsum("...kabc->...kcab", dj)
    inner = cyc[k:m + 1 - k, k:m + 1 - k, k:m + 1 - k]
    return float(np.abs(inner).max())


def curl_residual(data: GibbonsHawkingData, points: np.ndarray) -> float:
    """max |grad A_0 - curl A| at the given points (analytic partials)."""
    pts = np.atleast_2d(points)
    data.check(pts)
    _, g = data.potential(pts)
    _, dA = data.connection(pts)
    curl = np.stack([dA[..., 1, 2] - dA[..., 2, 1], dA[..., 2, 0] - dA[..., 0, 2],
                     dA[..., 0, 1] - dA[..., 1, 0]], -1)
    return float(np.abs(g - curl).max())


@dataclass
class HyperkahlerProbe:
    points: int
    max_ricci_ratio: float        # |Ric| / |Riemann| in the orthonormal frame
    max_sd_ratio: float           # |SD part| / |Riemann|
    max_asd_ratio: float          # |ASD part| / |Riemann|
    min_scale: float
    max_riemann: float


def hyperkahler_probe(data: GibbonsHawkingData, points: np.ndarray,
                      h: Optional[float] = None) -> HyperkahlerProbe:
    chart = gibbons_hawking_chart(data)
    ric, sd, asd, scales = [], [], [], []
    for y in np.atleast_2d(points):
        x = np.concatenate([[0.0], y])
        cp = curvature(chart, x, h)
        Rf = cp.frame_riemann()
        nrm = float(np.linalg.norm(Rf))
        s, a = selfduality_parts(Rf)
        scales.append(nrm)
        ric.append(cp.frame_ricci_norm() / nrm if nrm else 0.0)
        sd.append(float(np.linalg.norm(s)) / nrm if nrm else 0.0)
        asd.append(float(np.linalg.norm(a)) / nrm if nrm else 0.0)
    return HyperkahlerProbe(len(scales), max(ric), max(sd), max(asd), min(scales), max(scales))


# ---------------------------------------------------------------------------
# complex Monge-Ampere


def flat_potential(z: np.ndarray) -> float:
    z = np.ravel(z)
    return float(np.sum(np.abs(z) ** 2))


def monge_ampere_residual(F: Callable, eps: float, phi: Callable,
                          points: Optional[np.ndarray] = None, h: float = 1e-2) -> tuple:
    """(sup |det ddbar F - 1|, sup |det ddbar(F_0 + eps phi) - 1| / eps) over C^2 points.

    Closures take a complex array of shape (2,).
    """
    if points is None:
        g = np.linspace(-1, 1, 3)
        points = np.array([[a + 1j * b, c + 1j * d] for a in g for b in g for c in g for d in g])
    wrap = lambda fn: (lambda Z: fn(np.ravel(Z)))
    r0 = r1 = 0.0
    for z in np.atleast_2d(points):
        H = complex_hessian(wrap(F), z, h)
        if np.linalg.eigvalsh(0.5 * (H + H.conj().T)).min() <= 0:
            raise ValueError("ddbar F is not positive definite")
        r0 = max(r0, abs(np.linalg.det(H) - 1))
        Hp = complex_hessian(wrap(lambda w: flat_potential(w) + eps * phi(w)), z, h)
        r1 = max(r1, abs(np.linalg.det(Hp) - 1) / eps)
    return float(r0), float(r1)
