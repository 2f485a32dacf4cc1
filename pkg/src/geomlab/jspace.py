"""Complex structures on R^{2l}: orientation, pure-type projectors, the
self-duality criterion for (0, l) components, polar retraction onto the
isometric ones, the sphere-fibration split and the Nijenhuis tensor.

Matrices act on column vectors; J[k, i] is the k-th component of J e_i.
Covectors are row vectors, so (omega o J) = J^T omega and the (1, 0) forms
are the +i eigenvectors of J^T.  The standard structure is
J0 e_k = e_{l+k} (k <= l), whose orientation (e_1..e_l, J e_1..J e_l) is +1.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Callable, Optional

import numpy as np
from scipy.linalg import sqrtm

from .tensor_core import FrameMetric, ExteriorForm, hodge_star, multi_indices

STRUCT_TOL = 1e-10


# ---------------------------------------------------------------------------
# types


@dataclass
class ComplexStructure:
    J: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] % 2:
            raise ValueError("complex structure must be a square matrix of even size")
        if np.abs(J @ J + np.eye(J.shape[0])).max() > STRUCT_TOL * max(1.0, np.abs(J).max() ** 2):
            raise ValueError("J^2 != -1")
        self.J = J

    @property
    def ell(self) -> int:
        return self.J.shape[0] // 2

    @property
    def isometric(self) -> bool:
        return bool(np.abs(self.J + self.J.T).max() <= STRUCT_TOL)


class IsometricComplexStructure(ComplexStructure):
    def __post_init__(self):
        super().__post_init__()
        if not self.isometric:
            raise ValueError("J is not antisymmetric")


def standard_j(ell: int) -> np.ndarray:
    I = np.eye(ell)
    Z = np.zeros((ell, ell))
    return np.block([[Z, -I], [I, Z]])


def random_rotation(n: int, rng: np.random.Generator, det: int = 1) -> np.ndarray:
    Q, R = np.linalg.qr(rng.normal(size=(n, n)))
    Q = Q * np.sign(np.diag(R))
    if np.sign(np.linalg.det(Q)) != det:
        Q[:, 0] = -Q[:, 0]
    return Q


def random_isometric(ell: int, rng: np.random.Generator, sign: int = 1) -> IsometricComplexStructure:
    """Random element of H_+ (sign = 1) or H_- (sign = -1)."""
    J0 = standard_j(ell)
    if sign < 0:
        D = np.eye(2 * ell)
        D[-1, -1] = -1
        J0 = D @ J0 @ D
    R = random_rotation(2 * ell, rng)
    return IsometricComplexStructure(R @ J0 @ R.T)


def random_complex_structure(ell: int, rng: np.random.Generator) -> ComplexStructure:
    G = rng.normal(size=(2 * ell, 2 * ell)) + 2 * np.eye(2 * ell)
    return ComplexStructure(G @ standard_j(ell) @ np.linalg.inv(G))


def project_to_complex_structure(M: np.ndarray) -> np.ndarray:
    """M (-M^2)^{-1/2}: the nearest complex structure in the matrix-sign sense."""
    M = np.asarray(M, dtype=float)
    root = np.real(sqrtm(-M @ M))
    return M @ np.linalg.inv(root)


# ---------------------------------------------------------------------------
# orientation and Pfaffian


def _as_j(J) -> np.ndarray:
    return J.J if isinstance(J, ComplexStructure) else np.asarray(J, dtype=float)


def complex_basis(J) -> list:
    """Greedy choice of e_i among the standard vectors with (e_i, J e_i) independent."""
    J = _as_j(J)
    n = J.shape[0]
    chosen = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1
        trial = chosen + [e]
        M = np.column_stack(trial + [J @ v for v in trial])
        if np.linalg.matrix_rank(M, tol=1e-9) == 2 * len(trial):
            chosen = trial
        if len(chosen) == n // 2:
            break
    return chosen


def orientation(J) -> int:
    """Sign of det(e_1..e_l, J e_1..J e_l) for a complex basis (e_i) of E_J."""
    Jm = _as_j(J)
    basis = complex_basis(Jm)
    M = np.column_stack(basis + [Jm @ v for v in basis])
    return int(np.sign(np.linalg.det(M)))


def pfaffian(A: np.ndarray) -> float:
    """Pfaffian of a real antisymmetric matrix by pivoted skew elimination."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if n % 2:
        return 0.0
    pf = 1.0
    for k in range(0, n - 1, 2):
        p = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
        if p != k + 1:
            A[[k + 1, p]] = A[[p, k + 1]]
            A[:, [k + 1, p]] = A[:, [p, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0.0:
            return 0.0
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2:] / A[k, k + 1]
            # eliminate row/column k using row k + 1
            A[k + 2:, k + 2:] += np.outer(A[k + 1, k + 2:], tau) - np.outer(tau, A[k + 1, k + 2:])
    return float(pf)


def pfaffian_orientation(J) -> int:
    """Orientation of an isometric J from its Pfaffian; Pf(J0) = (-1)^{l(l+1)/2}."""
    Jm = _as_j(J)
    ell = Jm.shape[0] // 2
    return int(np.sign(pfaffian(Jm))) * (-1) ** (ell * (ell + 1) // 2)


# ---------------------------------------------------------------------------
# pure-type projectors


def compound(A: np.ndarray, k: int) -> np.ndarray:
    """k-th compound: matrix of Lambda^k A on increasing multi-indices."""
    n = A.shape[0]
    idx = multi_indices(n, k)
    if k == 0:
        return np.ones((1, 1), dtype=A.dtype)
    C = np.empty((len(idx), len(idx)), dtype=complex)
    for a, I in enumerate(idx):
        rows = A[list(I)]
        for b, Jx in enumerate(idx):
            C[a, b] = np.linalg.det(rows[:, list(Jx)])
    return C


def type_projectors_one(J) -> tuple:
    """(P^{1,0}, P^{0,1}) on complex covectors: (1 -/+ i J^T) / 2."""
    Jt = _as_j(J).T
    n = Jt.shape[0]
    return 0.5 * (np.eye(n) - 1j * Jt), 0.5 * (np.eye(n) + 1j * Jt)


def pure_type_projector(J, r: int, s: int) -> np.ndarray:
    """P^{r,s} on Lambda^{r+s} E*_c in the increasing multi-index basis.

    Lambda^k(P10 + t P01) = sum_s t^s P^{k-s,s}; the coefficients are read off
    by sampling t on the (k+1)-th roots of unity.
    """
    Jm = _as_j(J)
    n = Jm.shape[0]
    k = r + s
    if r < 0 or s < 0 or k > n:
        raise ValueError("need r, s >= 0 and r + s <= dim")
    P10, P01 = type_projectors_one(Jm)
    roots = np.exp(2j * np.pi * np.arange(k + 1) / (k + 1))
    acc = sum(compound(P10 + t * P01, k) * t ** (-s) for t in roots)
    return acc / (k + 1)


# ---------------------------------------------------------------------------
# self-duality criterion


def _star_matrix(n: int, k: int) -> np.ndarray:
    eta = FrameMetric.euclidean(n)
    cols = []
    for I in multi_indices(n, k):
        cols.append(hodge_star(ExteriorForm.basis(n, I), eta).coeffs)
    return np.array(cols, dtype=complex).T


def duality_phase(ell: int) -> complex:
    """Phase c with *(a^1 ^ .. ^ a^l)-bar = c^{-1} (a^1 ^ .. ^ a^l)-bar for J in H_+.

    With the orientation (e_1..e_l, J e_1..J e_l) and a ^ *b = (a, b) vol this is
    c = (-i)^l; it coincides with i^l for even l only.
    """
    return (-1j) ** ell


@dataclass
class SelfDualityReport:
    ell: int
    samples: int
    plus_condition: bool          # Omega + c * Omega = 0, c = duality_phase(l)
    minus_condition: bool         # Omega - c * Omega = 0
    max_plus: float               # max |P^{0,l}_J Omega| over J in H_+
    max_minus: float              # same over H_-
    violating_plus: Optional[np.ndarray]
    violating_minus: Optional[np.ndarray]
    consistent: bool


def _middle_form(Omega) -> tuple:
    coeffs = Omega.coeffs if isinstance(Omega, ExteriorForm) else np.asarray(Omega)
    coeffs = np.asarray(coeffs, dtype=complex)
    n = Omega.dim if isinstance(Omega, ExteriorForm) else None
    if n is None:
        for m in range(2, 20, 2):
            if comb(m, m // 2) == coeffs.size:
                n = m
                break
    if n is None or n % 2 or coeffs.size != comb(n, n // 2):
        raise ValueError("Omega must be a middle-degree form on an even-dimensional space")
    return n, coeffs


def selfduality_pure_equivalence(Omega, samples: int = 200, seed: int = 0,
                                 tol: float = 1e-9) -> SelfDualityReport:
    """Sample J in H_+ and H_- and compare P^{0,l}_J Omega with the duality conditions.

    Omega + c * Omega = 0 should hold exactly when P^{0,l}_J Omega = 0 for all J in
    H_+ (and the minus sign for H_-); ``consistent`` records that both directions held.

    ``Omega`` is an ExteriorForm of degree l on R^{2l} or its coefficient vector.
    """
    return selfduality_batch([Omega], samples, seed, tol)[0]


def selfduality_batch(forms, samples: int = 200, seed: int = 0, tol: float = 1e-9) -> list:
    """``selfduality_pure_equivalence`` for several forms sharing one set of J draws."""
    parsed = [_middle_form(f) for f in forms]
    if not parsed or len({n for n, _ in parsed}) != 1:
        raise ValueError("forms must be nonempty and share one dimension")
    n = parsed[0][0]
    ell = n // 2
    W = np.array([c for _, c in parsed]).T
    S = duality_phase(ell) * _star_matrix(n, ell)
    scale = np.maximum(1.0, np.linalg.norm(W, axis=0))
    plus = np.linalg.norm(W + S @ W, axis=0) < tol * scale
    minus = np.linalg.norm(W - S @ W, axis=0) < tol * scale
    rng = np.random.default_rng(seed)
    k = W.shape[1]
    best = {s: (np.zeros(k), [None] * k) for s in (1, -1)}
    for _ in range(samples):
        for sign in (1, -1):
            J = random_isometric(ell, rng, sign)
            v = np.linalg.norm(pure_type_projector(J, 0, ell) @ W, axis=0)
            vals, mats = best[sign]
            for j in np.flatnonzero(v > vals):
                vals[j], mats[j] = v[j], J.J
    out = []
    for j in range(k):
        viol = 1e-6 * scale[j]
        bp, bm = best[1][0][j], best[-1][0][j]
        ok = ((not plus[j] or bp < tol * scale[j]) and (plus[j] or bp > viol)
              and (not minus[j] or bm < tol * scale[j]) and (minus[j] or bm > viol))
        out.append(SelfDualityReport(ell, samples, bool(plus[j]), bool(minus[j]), float(bp), float(bm),
                                 best[1][1][j] if bp > viol else None,
                                 best[-1][1][j] if bm > viol else None, bool(ok)))
    return out


def duality_split(Omega_coeffs: np.ndarray, ell: int) -> tuple:
    """(Omega_+, Omega_-) with Omega_pm +- c * Omega_pm = 0, c = duality_phase(l)."""
    S = duality_phase(ell) * _star_matrix(2 * ell, ell)
    w = np.asarray(Omega_coeffs, dtype=complex)
    return 0.5 * (w - S @ w), 0.5 * (w + S @ w)


# ---------------------------------------------------------------------------
# tangent spaces, polar retraction, fibration


def tangent_dimension(J, isometric: bool = False) -> int:
    """Real dimension of {A : AJ + JA = 0} (antisymmetric A when ``isometric``)."""
    Jm = _as_j(J)
    n = Jm.shape[0]
    if isometric:
        basis = []
        for i, j in combinations(range(n), 2):
            A = np.zeros((n, n))
            A[i, j], A[j, i] = 1, -1
            basis.append(A)
    else:
        basis = [np.eye(n * n)[k].reshape(n, n) for k in range(n * n)]
    M = np.array([(A @ Jm + Jm @ A).ravel() for A in basis]).T
    return len(basis) - int(np.linalg.matrix_rank(M, tol=1e-9))


@dataclass
class PolarRetraction:
    J0: np.ndarray
    S: np.ndarray

    def at(self, tau: float) -> np.ndarray:
        w, V = np.linalg.eigh(self.S)
        return self.J0 @ (V * np.exp(tau * w)) @ V.T


def polar_retract(J) -> PolarRetraction:
    """J = J0 e^S with e^{2S} = J^T J, J0 isometric, S symmetric, J0 S + S J0 = 0."""
    Jm = _as_j(J)
    # SVD keeps the polar factor accurate for badly conditioned J
    U, sv, Vt = np.linalg.svd(Jm)
    if sv.min() <= 0:
        raise ValueError("J is singular")
    return PolarRetraction(U @ Vt, (Vt.T * np.log(sv)) @ Vt)


def sphere_fibration_decompose(J) -> tuple:
    """Split J in H(R^{2l+2}) as [[Jt, u], [-u^T, 0]]; returns (u, Jt)."""
    Jm = _as_j(J)
    if np.abs(Jm + Jm.T).max() > STRUCT_TOL or np.abs(Jm @ Jm.T - np.eye(len(Jm))).max() > STRUCT_TOL:
        raise ValueError("need an isometric complex structure")
    return Jm[:-1, -1].copy(), Jm[:-1, :-1].copy()


def sphere_fibration_rebuild(u: np.ndarray, Jt: np.ndarray) -> np.ndarray:
    n = len(u) + 1
    J = np.zeros((n, n))
    J[:-1, :-1] = Jt
    J[:-1, -1] = u
    J[-1, :-1] = -u
    return J


# ---------------------------------------------------------------------------
# J-fields: Nijenhuis tensor and the almost complex connection


def _partials_at(Jfn: Callable, x: np.ndarray, h: float) -> np.ndarray:
    """dJ[i] = d J / d x^i by fourth-order central differences, shape (n, n, n)."""
    n = len(x)
    out = np.empty((n, n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        out[i] = (-Jfn(x + 2 * e) + 8 * Jfn(x + e) - 8 * Jfn(x - e) + Jfn(x - 2 * e)) / (12 * h)
    return out


def nijenhuis_from_partials(J: np.ndarray, dJ: np.ndarray) -> np.ndarray:
    """N[k, i, j] = N(d_i, d_j)^k for N(X,Y) = 2{[JX,JY] - [X,Y] - J[X,JY] - J[JX,Y]}.

    ``J`` has shape (..., n, n) and ``dJ`` (..., n, n, n) with dJ[..., l] = d_l J.
    """
    # A[k, i, j] = J^l_i d_l J^k_j
    A = np.einsum("...li,...lkj->...kij", J, dJ)
    # B[k, i, j] = J^k_l d_i J^l_j
    B = np.einsum("...kl,...ilj->...kij", J, dJ)
    return 2 * (A - np.swapaxes(A, -1, -2) - B + np.swapaxes(B, -1, -2))


def nijenhuis_probe(Jfn: Callable, points: np.ndarray, h: float) -> np.ndarray:
    """Nijenhuis tensor at sample points of a J-field given as a closure x -> J(x)."""
    pts = np.atleast_2d(points)
    return np.array([nijenhuis_from_partials(Jfn(x), _partials_at(Jfn, x, h)) for x in pts])


def nijenhuis_grid(values: np.ndarray, spacing) -> np.ndarray:
    """Nijenhuis tensor of a J-field sampled on a full grid (second-order differences)."""
    n = values.shape[-1]
    if values.ndim != n + 2 or any(s < 3 for s in values.shape[:n]):
        raise ValueError("need a J-field on a grid with at least 3 nodes per axis")
    dJ = np.stack([np.gradient(values, spacing[i], axis=i, edge_order=2) for i in range(n)], axis=-3)
    return nijenhuis_from_partials(values, dJ)


def almost_complex_connection(J: np.ndarray, dJ: np.ndarray) -> np.ndarray:
    """Q[k, x, y] with 4Q(X,Y) = (D_{JY} J)X + J (D_Y J) X + 2 J (D_X J) Y (flat D)."""
    # (D_V J) = sum_l V^l dJ[l]
    DJ = lambda V: np.einsum("l,lkm->km", V, dJ)
    n = J.shape[0]
    Q = np.zeros((n, n, n))
    E = np.eye(n)
    for a in range(n):
        for b in range(n):
            X, Y = E[a], E[b]
            Q[:, a, b] = 0.25 * (DJ(J @ Y) @ X + J @ DJ(Y) @ X + 2 * J @ DJ(X) @ Y)
    return Q


def connection_residuals(J: np.ndarray, dJ: np.ndarray) -> tuple:
    """(max |nabla J|, max |T - N/8|) for nabla = D - Q at one point."""
    Q = almost_complex_connection(J, dJ)
    # (nabla_X J) Y = (D_X J) Y - Q(X, JY) + J Q(X, Y)
    nablaJ = np.einsum("akm->kam", dJ) - np.einsum("kal,lm->kam", Q, J) + np.einsum("kl,lam->kam", J, Q)
    T = -Q + np.swapaxes(Q, 1, 2)
    N = nijenhuis_from_partials(J, dJ)
    return float(np.abs(nablaJ).max()), float(np.abs(T - N / 8).max())


def connection_check_probe(Jfn: Callable, points: np.ndarray, h: float) -> tuple:
    res = [connection_residuals(Jfn(x), _partials_at(Jfn, x, h)) for x in np.atleast_2d(points)]
    return max(r[0] for r in res), max(r[1] for r in res)


def pullback_field(psi_jac: Callable, ell: int) -> Callable:
    """J(x) = D psi(x)^{-1} J0 D psi(x): integrable for any local diffeomorphism psi."""
    J0 = standard_j(ell)

    def Jfn(x):
        D = psi_jac(x)
        return np.linalg.solve(D, J0 @ D)
    return Jfn
