"""Yang-Mills fields on R^4 and the Einstein-Cartan tau/sigma forms on local
sections of the orthonormal frame bundle.

Forms are stored as fully antisymmetric component arrays with the form axes
first and any payload (matrix or frame indices) after them, with the convention
alpha = (1/p!) alpha_{m1..mp} dx^m1 ^ .. ^ dx^mp.  The wedge product is then
(a ^ b) = (p+q)!/(p! q!) Alt(a (x) b) and d a = (p+1) Alt(d_l a_{m..}).
Gauge potentials take values in anti-Hermitian matrices with k(E, F) = -Tr(EF).
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .tensor_core import FrameMetric, antisymmetrize, levi_civita

_EPS4 = levi_civita(4)
_C4 = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_O4 = np.array([-2, -1, 1, 2])
_C2 = np.array([-0.5, 0.5])
_O2 = np.array([-1, 1])


# ---------------------------------------------------------------------------
# component-form algebra


def alt(T: np.ndarray, p: int) -> np.ndarray:
    return antisymmetrize(T, range(p)) if p > 1 else T


def wedge_outer(a: np.ndarray, p: int, b: np.ndarray, q: int) -> np.ndarray:
    """a ^ b with payloads kept as separate trailing axes (a's, then b's)."""
    n = a.shape[0] if p else b.shape[0]
    pa, pb = a.ndim - p, b.ndim - q
    # move b's form axes in front of a's payload
    T = np.multiply.outer(a, b)
    order = list(range(p)) + list(range(p + pa, p + pa + q)) + list(range(p, p + pa)) \
        + list(range(p + pa + q, p + pa + q + pb))
    T = np.transpose(T, order)
    coef = factorial(p + q) / (factorial(p) * factorial(q))
    return coef * alt(T, p + q) if p + q <= n else np.zeros_like(T)


def wedge_mat(a: np.ndarray, p: int, b: np.ndarray, q: int) -> np.ndarray:
    """Matrix-valued wedge: payload product a_mat @ b_mat."""
    return np.einsum("...ijjk->...ik", wedge_outer(a, p, b, q))


def bracket(a: np.ndarray, p: int, b: np.ndarray, q: int) -> np.ndarray:
    """Graded bracket [a, b] = a ^ b - (-1)^{pq} b ^ a of matrix-valued forms."""
    return wedge_mat(a, p, b, q) - (-1) ** (p * q) * wedge_mat(b, q, a, p)


def d_from_partial_stack(P: np.ndarray, p: int) -> np.ndarray:
    """P[l, m1..mp, ...] = d_l a_{m1..mp, ...}  ->  (d a) components."""
    return (p + 1) * alt(P, p + 1)


def hodge4(a: np.ndarray, p: int) -> np.ndarray:
    """Euclidean Hodge star on R^4 with orientation (x^1..x^4)."""
    letters = "abcd"
    src = letters[:p]
    dst = letters[p:]
    return np.einsum(f"{src}...,{src}{dst}->{dst}...", a, _EPS4) / factorial(p)


def form_norm(a: np.ndarray, p: int) -> float:
    """sqrt of sum over increasing index sets of |a_I|^2 (payload Frobenius)."""
    return float(np.sqrt(np.sum(np.abs(a) ** 2) / factorial(p)))


def _stencil(order: int):
    if order == 4:
        return _C4, _O4
    if order == 2:
        return _C2, _O2
    raise ValueError("stencil order must be 2 or 4")


def partial_stack(fn: Callable, x: np.ndarray, h: float, order: int = 4) -> np.ndarray:
    c, o = _stencil(order)
    x = np.asarray(x, dtype=float)
    out = []
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        out.append(sum(ci * fn(x + oi * e) for ci, oi in zip(c, o)) / h)
    return np.array(out)


# ---------------------------------------------------------------------------
# gauge potentials


@dataclass
class GaugePotential:
    """A_mu(x) with analytic partials.

    value(x) -> (4, p, p); d1(x)[l, m] = d_l A_m; d2(x)[k, l, m] = d_k d_l A_m.
    """

    p: int
    value: Callable
    d1: Callable
    d2: Optional[Callable] = None
    name: str = ""

    def at(self, x) -> np.ndarray:
        A = np.asarray(self.value(np.asarray(x, dtype=float)), dtype=complex)
        if np.abs(A + np.conj(np.swapaxes(A, -1, -2))).max() > 1e-12 * max(1.0, np.abs(A).max()):
            raise ValueError("potential is not anti-Hermitian")
        return A

    def second(self, x) -> np.ndarray:
        if self.d2 is None:
            raise ValueError("second partials are not available for this potential")
        return np.asarray(self.d2(np.asarray(x, dtype=float)), dtype=complex)


def zero_potential(p: int = 2) -> GaugePotential:
    z1 = lambda x: np.zeros((4, p, p), dtype=complex)
    return GaugePotential(p, z1, lambda x: np.zeros((4, 4, p, p), dtype=complex),
                          lambda x: np.zeros((4, 4, 4, p, p), dtype=complex), "zero")


def polynomial_potential(c0: np.ndarray, c1: np.ndarray, c2: np.ndarray, name="polynomial") -> GaugePotential:
    """A_m = c0_m + c1_{m a} x^a + c2_{m a b} x^a x^b (c2 symmetrized in a, b)."""
    c0 = np.asarray(c0, dtype=complex)
    c1 = np.asarray(c1, dtype=complex)
    c2 = 0.5 * (np.asarray(c2, dtype=complex) + np.swapaxes(np.asarray(c2, dtype=complex), 1, 2))
    p = c0.shape[-1]

    def value(x):
        return c0 + np.einsum("maij,a->mij", c1, x) + np.einsum("mabij,a,b->mij", c2, x, x)

    def d1(x):
        return np.einsum("mlij->lmij", c1) + 2 * np.einsum("mlbij,b->lmij", c2, x)

    def d2(x):
        return 2 * np.einsum("mklij->klmij", c2)
    return GaugePotential(p, value, d1, d2, name)


def random_su2(rng: np.random.Generator, shape=()) -> np.ndarray:
    c = rng.normal(size=tuple(shape) + (3,))
    return np.einsum("...a,aij->...ij", c, SU2_BASIS)


SU2_BASIS = -0.5j * np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


def random_polynomial_potential(rng: np.random.Generator, scale: float = 0.5) -> GaugePotential:
    return polynomial_potential(scale * random_su2(rng, (4,)), scale * random_su2(rng, (4, 4)),
                                scale * random_su2(rng, (4, 4, 4)), "random-polynomial")


def thooft_symbols(sign: int = 1) -> np.ndarray:
    """eta[a, m, n] (sign = 1) or eta-bar (sign = -1); index 3 plays the role of x^4."""
    eta = np.zeros((3, 4, 4))
    eta[:, :3, :3] = _EPS4[:3, :3, :3, 3]
    for a in range(3):
        eta[a, a, 3] = sign
        eta[a, 3, a] = -sign
    return eta


def bpst(rho: float = 1.0, center=(0.0, 0.0, 0.0, 0.0)) -> GaugePotential:
    """Regular-gauge BPST potential A_m = 2 x^n M_{mn} / (|x|^2 + rho^2), anti-self-dual
    for the orientation (x^1..x^4), M_{mn} = eta-bar^a_{mn} tau_a."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    c = np.asarray(center, dtype=float)
    M = np.einsum("amn,aij->mnij", thooft_symbols(-1), SU2_BASIS)

    def parts(x):
        y = x - c
        s = y @ y + rho * rho
        return y, 2.0 / s, -2.0 / s ** 2, 4.0 / s ** 3          # g, g', g'' in s

    def value(x):
        y, g, _, _ = parts(x)
        return g * np.einsum("mnij,n->mij", M, y)

    def d1(x):
        y, g, g1, _ = parts(x)
        My = np.einsum("mnij,n->mij", M, y)
        return g * np.einsum("mlij->lmij", M) + 2 * g1 * np.einsum("l,mij->lmij", y, My)

    def d2(x):
        y, g, g1, g2 = parts(x)
        My = np.einsum("mnij,n->mij", M, y)
        I = np.eye(4)
        Mt = np.einsum("mlij->lmij", M)                           # Mt[l, m] = M_{m l}
        return (2 * g1 * (np.einsum("k,lmij->klmij", y, Mt) + np.einsum("l,kmij->klmij", y, Mt)
                          + np.einsum("kl,mij->klmij", I, My))
                + 4 * g2 * np.einsum("k,l,mij->klmij", y, y, My))
    return GaugePotential(2, value, d1, d2, f"bpst(rho={rho})")


def gauge_transform(pot: GaugePotential, phi: Callable, dphi: Callable, N: np.ndarray) -> GaugePotential:
    """A -> g^-1 A g + g^-1 dg with g = exp(phi(x) N), N^2 = -1 (first partials only).

    ``dphi(x)`` returns (grad phi, hessian phi).
    """
    N = np.asarray(N, dtype=complex)
    if np.abs(N @ N + np.eye(len(N))).max() > 1e-12:
        raise ValueError("N must square to -1")
    I = np.eye(len(N))
    g = lambda x: np.cos(phi(x)) * I + np.sin(phi(x)) * N

    def value(x):
        G = g(x)
        Gi = G.conj().T
        gr, _ = dphi(x)
        return np.einsum("ab,mbc,cd->mad", Gi, pot.at(x), G) + np.einsum("m,ij->mij", gr, N)

    def d1(x):
        G = g(x)
        Gi = G.conj().T
        gr, hs = dphi(x)
        B = np.einsum("ab,mbc,cd->mad", Gi, pot.at(x), G)
        dB = np.einsum("ab,lmbc,cd->lmad", Gi, pot.d1(x), G)
        comm = np.einsum("mij,jk->mik", B, N) - np.einsum("ij,mjk->mik", N, B)
        return dB + np.einsum("l,mik->lmik", gr, comm) + np.einsum("lm,ij->lmij", hs, N)
    return GaugePotential(pot.p, value, d1, None, f"gauge({pot.name})"), g


def field_strength(pot: GaugePotential, x) -> np.ndarray:
    """F_{mn} = d_m A_n - d_n A_m + [A_m, A_n]."""
    A = pot.at(x)
    dA = pot.d1(np.asarray(x, dtype=float))
    return dA - np.swapaxes(dA, 0, 1) + np.einsum("mij,njk->mnik", A, A) - np.einsum("nij,mjk->mnik", A, A)


def field_strength_partials(pot: GaugePotential, x) -> np.ndarray:
    """dF[l, m, n] = d_l F_{mn} from analytic second partials."""
    x = np.asarray(x, dtype=float)
    A, dA, d2A = pot.at(x), pot.d1(x), pot.second(x)
    t = d2A - np.swapaxes(d2A, 1, 2)
    prod = np.einsum("lmij,njk->lmnik", dA, A) + np.einsum("mij,lnjk->lmnik", A, dA)
    return t + prod - np.swapaxes(prod, 1, 2)


def covariant_d(A: np.ndarray, X: np.ndarray, dX: np.ndarray, p: int) -> np.ndarray:
    """nabla X = dX + [A, X] for a matrix-valued p-form X with partial stack dX."""
    return d_from_partial_stack(dX, p) + bracket(A, 1, X, p)


def selfduality_residual(pot: GaugePotential, x, sign: int = -1) -> float:
    """|F - sign * F| / |F| (sign = -1: anti-self-duality F = -*F)."""
    F = field_strength(pot, x)
    nF = form_norm(F, 2)
    return form_norm(F - sign * hodge4(F, 2), 2) / nF if nF else 0.0


def bianchi_residual(pot: GaugePotential, x) -> float:
    A = pot.at(x)
    return form_norm(covariant_d(A, field_strength(pot, x), field_strength_partials(pot, x), 2), 3)


def ym_residual(pot: GaugePotential, x) -> float:
    """|d*F + [A, *F]| at x."""
    A = pot.at(x)
    F, dF = field_strength(pot, x), field_strength_partials(pot, x)
    sF = hodge4(F, 2)
    dsF = np.array([hodge4(dF[l], 2) for l in range(4)])
    return form_norm(covariant_d(A, sF, dsF, 2), 3)


def conservation_form_residual(pot: GaugePotential, x) -> float:
    """|d(-[A, *F])| at x (source-free case)."""
    x = np.asarray(x, dtype=float)
    A, dA = pot.at(x), pot.d1(x)
    F, dF = field_strength(pot, x), field_strength_partials(pot, x)
    sF = hodge4(F, 2)
    dsF = np.array([hodge4(dF[l], 2) for l in range(4)])
    # d_l [A, *F] = [d_l A, *F] + [A, d_l *F]
    P = np.array([bracket(dA[l], 1, sF, 2) + bracket(A, 1, dsF[l], 2) for l in range(4)])
    return form_norm(-d_from_partial_stack(P, 3), 4)


def _ym_operator(pot: GaugePotential, B: GaugePotential, x) -> np.ndarray:
    """D_A B = nabla * nabla B + [B, *F] (matrix-valued 3-form)."""
    x = np.asarray(x, dtype=float)
    A, dA = pot.at(x), pot.d1(x)
    Bv, dB, d2B = B.at(x), B.d1(x), B.second(x)
    # nabla B and its partials
    nB = d_from_partial_stack(dB, 1) + bracket(A, 1, Bv, 1)
    d_dB = np.array([d_from_partial_stack(d2B[k], 1) for k in range(4)])
    d_nB = d_dB + np.array([bracket(dA[k], 1, Bv, 1) + bracket(A, 1, dB[k], 1) for k in range(4)])
    s_nB = hodge4(nB, 2)
    ds_nB = np.array([hodge4(d_nB[k], 2) for k in range(4)])
    return covariant_d(A, s_nB, ds_nB, 2) + bracket(Bv, 1, hodge4(field_strength(pot, x), 2), 2)


def linearized_identity_residual(pot: GaugePotential, B: GaugePotential, x, h: float = 1e-3) -> float:
    """|nabla(D_A B) + [B, nabla *F]| at x; the outer nabla uses a fourth-order difference."""
    x = np.asarray(x, dtype=float)
    A = pot.at(x)
    D = _ym_operator(pot, B, x)
    dD = partial_stack(lambda y: _ym_operator(pot, B, y), x, h)
    lhs = covariant_d(A, D, dD, 3)
    F, dF = field_strength(pot, x), field_strength_partials(pot, x)
    sF = hodge4(F, 2)
    nsF = covariant_d(A, sF, np.array([hodge4(dF[l], 2) for l in range(4)]), 2)
    rhs = -bracket(B.at(x), 1, nsF, 3)
    scale = max(1.0, form_norm(D, 3))
    return form_norm(lhs - rhs, 4) / scale


def chern_density(pot: GaugePotential, x) -> float:
    """(1 / 8 pi^2) Tr(F ^ F) as a multiple of dx^1..dx^4."""
    F = field_strength(pot, x)
    FF = 0.25 * np.einsum("mnrs,mnij,rsji->", _EPS4, F, F)
    return float(np.real(FF)) / (8 * np.pi ** 2)


def topological_charge(pot: GaugePotential, R: float, center=None, directions: int = 4,
                       seed: int = 0) -> tuple:
    """Radial quadrature of the Chern density over the ball of radius R.

    The density is averaged over random directions at each radius; the spread
    between directions is returned as a symmetry diagnostic.
    """
    c = np.zeros(4) if center is None else np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(directions, 4))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    spread = [0.0]

    def radial(r):
        vals = [chern_density(pot, c + r * u) for u in dirs]
        spread[0] = max(spread[0], float(np.ptp(vals)))
        return 2 * np.pi ** 2 * r ** 3 * float(np.mean(vals))
    # split at a few multiples of the core so quad resolves the peak
    edges = [0.0] + [e for e in (0.5, 1, 2, 4, 8, 16, 32) if e < R] + [R]
    total = sum(quad(radial, a, b, limit=200, epsabs=1e-12, epsrel=1e-10)[0] for a, b in zip(edges, edges[1:]))
    return float(total), spread[0]


# ---------------------------------------------------------------------------
# Einstein-Cartan forms on local sections


def dual_frames(theta: np.ndarray, n: int) -> list:
    """theta*_{i1..iq} for q = 0..n as component arrays (form axes, then q frame axes)."""
    eps = levi_civita(n)
    W = [np.ones(())]
    for k in range(1, n + 1):
        W.append(wedge_outer(W[-1], k - 1, theta, 1))             # (form^k, frame^k)
    out = []
    for q in range(n + 1):
        k = n - q
        letters_f = "abcdefgh"[:k]
        letters_i = "ijklmnop"[:q]
        letters_j = "qrstuvwx"[:k]
        expr = f"{letters_i}{letters_j},{letters_f}{letters_j}->{letters_f}{letters_i}"
        out.append(np.einsum(expr, eps, W[k]) / factorial(k))
    return out


@dataclass
class FrameSection:
    """Coframe theta[m, i] = theta^i_m and connection omega[m, i, j] = omega^i_{j m}.

    ``dtheta(x)[l, m, i] = d_l theta^i_m`` may be given analytically; ``omega``
    defaults to the Levi-Civita connection of the coframe.
    """

    n: int
    theta: Callable
    omega: Optional[Callable] = None
    dtheta: Optional[Callable] = None
    eta: FrameMetric = None
    scale: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.eta is None:
            self.eta = FrameMetric.euclidean(self.n)
        if self.eta.n != self.n:
            raise ValueError("signature dimension mismatch")

    @property
    def H(self) -> np.ndarray:
        return self.eta.matrix()

    def coframe(self, x) -> np.ndarray:
        T = np.asarray(self.theta(np.asarray(x, dtype=float)), dtype=float)
        if T.shape != (self.n, self.n):
            raise ValueError("coframe has the wrong shape")
        if abs(np.linalg.det(T)) < 1e-12:
            raise ValueError("degenerate frame")
        return T

    def coframe_partials(self, x) -> np.ndarray:
        if self.dtheta is not None:
            return np.asarray(self.dtheta(np.asarray(x, dtype=float)), dtype=float)
        return partial_stack(self.coframe, x, 1e-3 * self.scale, 4)

    def connection(self, x) -> np.ndarray:
        if self.omega is not None:
            W = np.asarray(self.omega(np.asarray(x, dtype=float)), dtype=float)
        else:
            W = levi_civita_connection(self.coframe(x), self.coframe_partials(x), self.H)
        low = np.einsum("ik,mkj->mij", self.H, W)
        if np.abs(low + np.swapaxes(low, 1, 2)).max() > 1e-10 * max(1.0, np.abs(W).max()):
            raise ValueError("omega_ij is not antisymmetric")
        return W


def _lc_system(n: int, H: np.ndarray) -> np.ndarray:
    """Matrix of Gamma_{ijb} (i < j) -> C^i_{ac} (a < c) with C = Gamma_{.ac} - Gamma_{.ca}."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rows = [(i, a, c) for i in range(n) for a in range(n) for c in range(a + 1, n)]
    Hi = np.linalg.inv(H)
    M = np.zeros((len(rows), len(pairs) * n))
    for col, ((i, j), b) in enumerate((pq, b) for pq in pairs for b in range(n)):
        # unit Gamma_{ijb} = -Gamma_{jib}; raise the first index with eta^{-1}
        G = np.zeros((n, n, n))
        G[i, j, b], G[j, i, b] = 1.0, -1.0
        Gup = np.einsum("ik,kjb->ijb", Hi, G)
        for r, (k, a, c) in enumerate(rows):
            M[r, col] = Gup[k, a, c] - Gup[k, c, a]
    return M, pairs


def levi_civita_connection(T: np.ndarray, dT: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Torsion-free metric connection omega[m, i, j] for the coframe theta^i = T[m, i] dx^m."""
    n = T.shape[0]
    E = np.linalg.inv(T)                                   # E[i, m]: frame vectors e_i^m
    dth = dT - np.swapaxes(dT, 0, 1)                       # (d theta^i)_{l m}
    C = np.einsum("lmi,al,cm->iac", dth, E, E)             # frame components
    M, pairs = _lc_system(n, H)
    rhs = np.array([C[i, a, c] for i in range(n) for a in range(n) for c in range(a + 1, n)])
    # torsion-free: (omega^i_j ^ theta^j)(e_a, e_c) = Gamma^i_ca - Gamma^i_ac = -C^i_ac
    sol = np.linalg.solve(M, rhs)
    G = np.zeros((n, n, n))
    for col, ((i, j), b) in enumerate((pq, b) for pq in pairs for b in range(n)):
        G[i, j, b], G[j, i, b] = sol[col], -sol[col]
    Gup = np.einsum("ik,kjb->ijb", np.linalg.inv(H), G)
    return np.einsum("ijb,mb->mij", Gup, T)


def _raise_second(W: np.ndarray, H: np.ndarray) -> np.ndarray:
    """omega^{ij} = omega^i_k eta^{kj} on the last two axes."""
    return np.einsum("...ik,kj->...ij", W, np.linalg.inv(H))


def tau_sigma_at(section: FrameSection, x) -> tuple:
    """(tau_i, sigma_i) at x: (n-1)- and (n-2)-forms with a trailing frame index."""
    T = section.coframe(x)
    W = section.connection(x)
    return _tau_sigma(T, W, section.H, section.n)


def _tau_sigma(T, W, H, n):
    du = dual_frames(T, n)
    Wup = _raise_second(W, H)
    # tau_i = -1/2 (omega^j_i ^ omega^{kl} ^ th*_{jkl} + omega^j_l ^ omega^{lk} ^ th*_{ijk})
    X = wedge_outer(wedge_outer(W, 1, Wup, 1), 2, du[3], n - 3)
    f = "abcdefgh"[: n - 1]
    tau = -0.5 * (np.einsum(f"{f}jikljkl->{f}i", X) + np.einsum(f"{f}jllkijk->{f}i", X))
    # sigma_i = -1/2 omega^{jk} ^ th*_{ijk}
    Y = wedge_outer(Wup, 1, du[3], n - 3)
    g = "abcdefgh"[: n - 2]
    sigma = -0.5 * np.einsum(f"{g}jkijk->{g}i", Y)
    return tau, sigma


def structure_forms(section: FrameSection, x, h: float, order: int = 4) -> tuple:
    """(Theta, Omega) at x: d theta + omega ^ theta and d omega + omega ^ omega,
    with d by central differences of step h."""
    x = np.asarray(x, dtype=float)
    T, W = section.coframe(x), section.connection(x)
    dT = partial_stack(section.coframe, x, h, order)
    dW = partial_stack(section.connection, x, h, order)
    Theta = d_from_partial_stack(dT, 1) + np.einsum("mnijj->mni", wedge_outer(W, 1, T, 1))
    Omega = d_from_partial_stack(dW, 1) + np.einsum("mnijjk->mnik", wedge_outer(W, 1, W, 1))
    return Theta, Omega


@dataclass
class ECReport:
    """Residuals at one point; the three verdicts of the equivalence theorem."""

    identity_residual: float      # |d sigma - tau - 1/2 (Theta w th* - Omega th*)|
    dtau: float                   # |d tau|
    tau_minus_dsigma: float       # |tau - d sigma|
    torsion: float                # |Theta|
    einstein: float               # |Omega^{jk} ^ th*_{ijk}|
    scale: float                  # curvature scale |Omega|
    verdict_a: bool = False
    verdict_b: bool = False
    verdict_c: bool = False

    @property
    def consistent(self) -> bool:
        return self.verdict_a == self.verdict_b == self.verdict_c


def einstein_cartan_check(section: FrameSection, x, h: Optional[float] = None, order: int = 4,
                          tol: float = 1e-6) -> ECReport:
    """Identity residual and the verdicts a) d tau = 0, b) tau = d sigma,
    c) Theta = 0 and Omega^{jk} ^ th*_{ijk} = 0, each within ``tol`` times the
    curvature scale (absolute ``tol`` when flat)."""
    n, H = section.n, section.H
    x = np.asarray(x, dtype=float)
    h = (1e-3 if order == 4 else 1e-4) * section.scale if h is None else h
    T, W = section.coframe(x), section.connection(x)
    Theta, Omega = structure_forms(section, x, h, order)
    du = dual_frames(T, n)
    Wup, Oup = _raise_second(W, H), _raise_second(Omega, H)
    tau, sigma = _tau_sigma(T, W, H, n)
    sig_fn = lambda y: _tau_sigma(section.coframe(y), section.connection(y), H, n)[1]
    tau_fn = lambda y: _tau_sigma(section.coframe(y), section.connection(y), H, n)[0]
    dsigma = d_from_partial_stack(partial_stack(sig_fn, x, h, order), n - 2)
    dtau = d_from_partial_stack(partial_stack(tau_fn, x, h, order), n - 1)
    f = "abcdefgh"[: n - 1]
    A = wedge_outer(wedge_outer(Theta, 2, Wup, 1), 3, du[4], n - 4)
    tA = np.einsum(f"{f}jklijkl->{f}i", A)
    E = np.einsum(f"{f}jkijk->{f}i", wedge_outer(Oup, 2, du[3], n - 3))
    ident = dsigma - tau - 0.5 * (tA - E)
    scale = form_norm(Omega, 2)
    thr = tol * max(1.0, scale)
    rep = ECReport(form_norm(ident, n - 1), form_norm(dtau, n), form_norm(tau - dsigma, n - 1),
                   form_norm(Theta, 2), form_norm(E, n - 1), scale)
    rep.verdict_a = rep.dtau < thr
    rep.verdict_b = rep.tau_minus_dsigma < thr
    rep.verdict_c = rep.torsion < thr and rep.einstein < thr
    return rep


def torsion_bianchi_residual(section: FrameSection, x, h: float) -> float:
    """|d Theta + omega ^ Theta - Omega ^ theta| with second-order differences throughout."""
    x = np.asarray(x, dtype=float)
    T, W = section.coframe(x), section.connection(x)
    Theta, Omega = structure_forms(section, x, h, 2)
    dTheta = partial_stack(lambda y: structure_forms(section, y, h, 2)[0], x, h, 2)
    r = (d_from_partial_stack(dTheta, 2) + np.einsum("abcijj->abci", wedge_outer(W, 1, Theta, 2))
         - np.einsum("abcijj->abci", wedge_outer(Omega, 2, T, 1)))
    return form_norm(r, 3)


def curvature_antisymmetry(section: FrameSection, x, h: float) -> float:
    _, Omega = structure_forms(section, x, h)
    low = np.einsum("ik,mnkj->mnij", section.H, Omega)
    return float(np.abs(low + np.swapaxes(low, 2, 3)).max())


# ---------------------------------------------------------------------------
# frame-section fixtures


def flat_section(n: int = 4) -> FrameSection:
    return FrameSection(n, lambda x: np.eye(n), lambda x: np.zeros((n, n, n)),
                        lambda x: np.zeros((n, n, n)), name="flat")


def conformal_sphere_section(r: float = 1.0) -> FrameSection:
    """theta^i = 2 r^2 / (r^2 + |x|^2) dx^i: the round 4-sphere (non-vacuum)."""
    def theta(x):
        return 2 * r * r / (r * r + x @ x) * np.eye(4)

    def dtheta(x):
        g = -4 * r * r * x / (r * r + x @ x) ** 2
        return np.einsum("l,mi->lmi", g, np.eye(4))
    return FrameSection(4, theta, None, dtheta, scale=r, name="round-sphere")


def gibbons_hawking_section(data) -> FrameSection:
    """theta^0 = (dx^0 + A_n dx^n) / sqrt A_0, theta^k = sqrt A_0 dx^k (Ricci-flat)."""
    def parts(x):
        y = np.asarray(x, dtype=float)[1:]
        data.check(y)
        A0, gA0 = data.potential(y)
        A, dA = data.connection(y)
        return A0, gA0, np.concatenate([[1.0], A]), dA

    def theta(x):
        A0, _, a, _ = parts(x)
        T = np.sqrt(A0) * np.diag([0.0, 1.0, 1.0, 1.0])
        T[:, 0] = a / np.sqrt(A0)
        return T

    def dtheta(x):
        A0, gA0, a, dA = parts(x)
        out = np.zeros((4, 4, 4))
        for k in range(3):
            da = np.concatenate([[0.0], dA[k]])
            out[k + 1, :, 0] = da / np.sqrt(A0) - 0.5 * a * gA0[k] * A0 ** -1.5
            out[k + 1, 1:, 1:] = 0.5 * gA0[k] / np.sqrt(A0) * np.eye(3)
        return out
    return FrameSection(4, theta, None, dtheta, scale=data.scale, name="gibbons-hawking")


def schwarzschild_section(mass: float = 1.0) -> FrameSection:
    """Riemannian Schwarzschild f dt^2 + dr^2 / f + r^2 dOmega^2, f = 1 - 2M/r,
    with the symmetric spatial coframe f^{-1/2} P + (1 - P), P the radial projector."""
    if mass <= 0:
        raise ValueError("mass must be positive")

    def theta(x):
        y = np.asarray(x, dtype=float)[1:]
        r = np.linalg.norm(y)
        if r <= 2 * mass * 1.05:
            raise ValueError("point too close to the horizon r = 2M")
        f = 1 - 2 * mass / r
        P = np.outer(y, y) / (r * r)
        T = np.zeros((4, 4))
        T[0, 0] = np.sqrt(f)
        T[1:, 1:] = P / np.sqrt(f) + np.eye(3) - P
        return T
    return FrameSection(4, theta, None, None, scale=mass, name="schwarzschild")


def random_section(rng: np.random.Generator, amp: float = 0.15) -> FrameSection:
    """Smooth coframe near the identity with an independent smooth metric connection
    (torsion and curvature both generic)."""
    K = rng.normal(size=(3, 4, 4))
    k = rng.normal(size=(3, 4))
    S = rng.normal(size=(2, 4, 4, 4))
    s = rng.normal(size=(2, 4))

    def theta(x):
        return np.eye(4) + amp * sum(K[a] * np.sin(k[a] @ x + a) for a in range(3))

    def omega(x):
        W = amp * sum(S[a] * np.cos(s[a] @ x + 0.5 * a) for a in range(2))
        return W - np.swapaxes(W, 1, 2)
    return FrameSection(4, theta, omega, None, name="random")


def rotated_section(section: FrameSection, R: np.ndarray) -> FrameSection:
    """theta -> R theta, omega -> R omega R^-1 for a constant R in SO(eta)."""
    Ri = np.linalg.inv(R)
    om = None if section.omega is None else (lambda x: np.einsum("ij,mjk,kl->mil", R, section.omega(x), Ri))
    dth = None if section.dtheta is None else (lambda x: section.dtheta(x) @ R.T)
    return FrameSection(section.n, lambda x: section.theta(x) @ R.T, om, dth, section.eta,
                        section.scale, section.name + "-rotated")


def section_metric_chart(section: FrameSection):
    """The metric g = eta_ij theta^i theta^j as a curvlab chart (for cross-checks)."""
    from .curvlab import MetricChart
    H = section.H
    return MetricChart(section.n, lambda x: section.coframe(x) @ H @ section.coframe(x).T,
                       scale=section.scale)
