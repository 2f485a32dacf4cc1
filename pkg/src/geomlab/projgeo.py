"""Projector model of complex Grassmannians G_{N,p}(C) (p = 1 gives CP^{N-1}).

A point is a Hermitian projector P of rank p.  The standard chart sends a
(N-p) x p matrix Z to the projector onto the column space of H = (1_p; Z).
Tangent vectors at P are Hermitian A with A = [P, [P, A]] and the complex
structure is A -> -i[P, A].

Conventions used throughout:
  * chart coordinates z_alpha are the entries of Z in row-major order;
  * G_{alpha beta} = Tr(dP/dz_alpha dP/dzbar_beta) = d_alpha dbar_beta log det(1 + Z^+ Z),
    and the induced line element is ds^2 = Tr(dP^2) = 2 G_{alpha beta} dz^alpha dzbar^beta;
  * Ricci form components R_{alpha beta} = -d_alpha dbar_beta log det G, which is
    +2 G for the Fubini-Study metric.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .tensor_core import ExteriorForm, GridField, exterior_derivative, multi_indices

CONSTRUCTOR_TOL = 1e-10
IDENTITY_TOL = 1e-9


class OutsideChart(ValueError):
    """The projector's range is not a graph over the first p coordinates."""


# ---------------------------------------------------------------------------
# projectors and charts


@dataclass
class HermitianProjector:
    """Orthogonal projector of rank p on C^N."""

    matrix: np.ndarray
    p: Optional[int] = None

    def __post_init__(self):
        P = np.asarray(self.matrix, dtype=complex)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("projector must be a square matrix")
        if not np.all(np.isfinite(P)):
            raise ValueError("non-finite projector entries")
        tr = np.trace(P).real
        if self.p is None:
            self.p = int(round(tr))
        if np.abs(P - P.conj().T).max() > CONSTRUCTOR_TOL:
            raise ValueError("projector is not Hermitian")
        if np.abs(P @ P - P).max() > CONSTRUCTOR_TOL:
            raise ValueError("projector is not idempotent")
        if abs(tr - self.p) > 1e-8:
            raise ValueError(f"trace {tr:.6g} differs from rank {self.p}")
        self.matrix = P

    @property
    def N(self) -> int:
        return self.matrix.shape[0]


def projector_onto(H: np.ndarray) -> np.ndarray:
    """H (H^+ H)^{-1} H^+ for a full-rank N x p frame H."""
    H = np.asarray(H, dtype=complex)
    return H @ np.linalg.solve(H.conj().T @ H, H.conj().T)


def random_projector(N: int, p: int, rng: np.random.Generator) -> HermitianProjector:
    H = rng.normal(size=(N, p)) + 1j * rng.normal(size=(N, p))
    P = projector_onto(np.linalg.qr(H)[0])
    return HermitianProjector(0.5 * (P + P.conj().T), p)


def _frame(Z: np.ndarray) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    if not np.all(np.isfinite(Z)):
        raise ValueError("non-finite chart coordinates")
    return np.vstack([np.eye(Z.shape[1]), Z])


def projector_from_chart(Z: np.ndarray) -> HermitianProjector:
    """P = (1; Z)(1 + Z^+ Z)^{-1}(1, Z^+)."""
    H = _frame(Z)
    P = projector_onto(H)
    return HermitianProjector(0.5 * (P + P.conj().T), H.shape[1])


def chart_projectors(Z: np.ndarray) -> np.ndarray:
    """Batched chart map: Z of shape (..., N-p, p) -> projector matrices (..., N, N)."""
    Z = np.asarray(Z, dtype=complex)
    p = Z.shape[-1]
    eye = np.broadcast_to(np.eye(p), Z.shape[:-2] + (p, p))
    H = np.concatenate([eye, Z], axis=-2)
    Hd = np.conj(np.swapaxes(H, -1, -2))
    return H @ np.linalg.solve(Hd @ H, Hd)


def chart_of(P: HermitianProjector, tol: float = 1e-10) -> np.ndarray:
    """Chart coordinates Z of P; raises OutsideChart when the top p x p block is singular."""
    p = P.p
    top = P.matrix[:p, :p]
    if np.linalg.svd(top, compute_uv=False).min() < tol:
        raise OutsideChart("projector lies outside the standard chart")
    return P.matrix[p:, :p] @ np.linalg.inv(top)


def kahler_potential(Z: np.ndarray) -> float:
    """F = log det(1 + Z^+ Z)."""
    H = _frame(Z)
    sign, logdet = np.linalg.slogdet(H.conj().T @ H)
    return float(logdet)


# ---------------------------------------------------------------------------
# tangent space and complex structure


def _as_matrix(P) -> np.ndarray:
    return P.matrix if isinstance(P, HermitianProjector) else np.asarray(P, dtype=complex)


def tangent_project(P, A: np.ndarray) -> np.ndarray:
    """Orthogonal projection [P, [P, A]] of a Hermitian matrix onto T_P."""
    P = _as_matrix(P)
    A = np.asarray(A, dtype=complex)
    if np.abs(A - A.conj().T).max() > IDENTITY_TOL * max(1.0, np.abs(A).max()):
        raise ValueError("tangent projection needs a Hermitian matrix")
    return P @ A + A @ P - 2 * P @ A @ P


def is_tangent(P, A: np.ndarray, tol: float = IDENTITY_TOL) -> bool:
    P = _as_matrix(P)
    PA = P @ A - A @ P
    return bool(np.abs(A - (P @ PA - PA @ P)).max() <= tol * max(1.0, np.abs(A).max()))


def almost_complex(P, A: np.ndarray) -> np.ndarray:
    """J_P(A) = -i [P, A] on tangent vectors."""
    M = _as_matrix(P)
    if not is_tangent(M, A):
        raise ValueError("almost_complex needs a tangent vector at P")
    return -1j * (M @ A - A @ M)


# ---------------------------------------------------------------------------
# chart derivatives, metric, Ricci form


def chart_derivatives(Z: np.ndarray) -> np.ndarray:
    """dP/dz_alpha for every chart coordinate, shape (d, N, N) with d = (N-p) p.

    With H = (1; Z) and S = H^+ H one has dP/dz_alpha = (1 - P) E_alpha S^{-1} H^+
    and dP/dzbar_alpha is its adjoint.
    """
    H = _frame(Z)
    N, p = H.shape
    P = projector_onto(H)
    Q = np.eye(N) - P
    right = np.linalg.solve(H.conj().T @ H, H.conj().T)  # S^{-1} H^+, (p, N)
    out = np.zeros(((N - p) * p, N, N), dtype=complex)
    for a in range(N - p):
        for b in range(p):
            # E_alpha has a single unit entry in row p + a, column b
            out[a * p + b] = np.outer(Q[:, p + a], right[b])
    return out


def metric_from_chart(Z: np.ndarray) -> np.ndarray:
    """G_{alpha beta} = Tr(dP/dz_alpha dP/dzbar_beta), Hermitian positive."""
    D = chart_derivatives(Z)
    Db = np.conj(np.transpose(D, (0, 2, 1)))
    return np.einsum("aij,bji->ab", D, Db)


_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFF = np.arange(-2, 3)


def complex_hessian(F: Callable, Z: np.ndarray, h: float = 1e-2) -> np.ndarray:
    """d_alpha dbar_beta F at Z by fourth-order central differences.

    With z = x + i y:  d_a dbar_b = 1/4 [(d_xa d_xb + d_ya d_yb) + i (d_xa d_yb - d_ya d_xb)].
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    shape = Z.shape
    d = Z.size
    # real coordinates: (x_0..x_{d-1}, y_0..y_{d-1})
    def f(u):
        return F((u[:d] + 1j * u[d:]).reshape(shape))

    u0 = np.concatenate([Z.ravel().real, Z.ravel().imag])
    n = 2 * d
    Hr = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            acc = 0.0
            if i == j:
                for c, o in zip(_D2, _OFF):
                    if c:
                        e = np.zeros(n)
                        e[i] = o * h
                        acc += c * f(u0 + e)
                acc /= h * h
            else:
                for ci, oi in zip(_D1, _OFF):
                    if not ci:
                        continue
                    for cj, oj in zip(_D1, _OFF):
                        if not cj:
                            continue
                        e = np.zeros(n)
                        e[i], e[j] = oi * h, oj * h
                        acc += ci * cj * f(u0 + e)
                acc /= h * h
            Hr[i, j] = Hr[j, i] = acc
    xx, yy, xy = Hr[:d, :d], Hr[d:, d:], Hr[:d, d:]
    return 0.25 * ((xx + yy) + 1j * (xy - xy.T))


def ricci_from_potential(F: Callable, Z: np.ndarray, h_inner: float = 1e-2,
                         h_outer: float = 1e-2) -> np.ndarray:
    """R_{alpha beta} = -d_alpha dbar_beta log det G with G = d dbar F (nested differences)."""
    G0 = complex_hessian(F, Z, h_inner)
    if np.linalg.eigvalsh(0.5 * (G0 + G0.conj().T)).min() <= 0:
        raise ValueError("d dbar F is not positive definite at the point")

    def logdet(Zp):
        G = complex_hessian(F, Zp, h_inner)
        return float(np.log(np.linalg.det(G).real))

    return -complex_hessian(logdet, Z, h_outer)


# ---------------------------------------------------------------------------
# fundamental form on parameter families


def fundamental_form(P: np.ndarray, partials: np.ndarray) -> ExteriorForm:
    """psi = Tr(dP [P, dP]) for a family with partials[a] = dP/dt_a.

    Coefficients on dt^a ^ dt^b (a < b) are Tr(P_a [P, P_b]) - Tr(P_b [P, P_a]).
    Works node-wise when P and partials carry leading grid axes.
    """
    n = partials.shape[0]
    comm = lambda X: P @ X - X @ P
    T = np.stack([np.stack([np.trace(partials[a] @ comm(partials[b]), axis1=-2, axis2=-1)
                            for b in range(n)]) for a in range(n)])
    coeffs = np.stack([T[a, b] - T[b, a] for a, b in multi_indices(n, 2)])
    return ExteriorForm(n, 2, coeffs)


def trace_p_dp_dp(P: np.ndarray, partials: np.ndarray) -> ExteriorForm:
    """Tr(P dP ^ dP) on the same basis as ``fundamental_form``."""
    n = partials.shape[0]
    coeffs = np.stack([np.trace(P @ (partials[a] @ partials[b] - partials[b] @ partials[a]),
                                axis1=-2, axis2=-1) for a, b in multi_indices(n, 2)])
    return ExteriorForm(n, 2, coeffs)


def projector_grid_partials(field: GridField) -> np.ndarray:
    """Second-order partials of a projector-valued grid field, shape (n, *grid, N, N)."""
    if field.payload_kind != "projector":
        raise ValueError("need a projector-valued grid field")
    h = field.spacing
    return np.stack([np.gradient(field.values, h[i], axis=i, edge_order=2) for i in range(field.ndim)])


def fundamental_form_closure(field: GridField) -> float:
    """Max-norm of d psi over interior nodes of a projector field on a box of dimension >= 3."""
    if field.ndim < 3:
        raise ValueError("closure of psi needs at least three parameters")
    partials = projector_grid_partials(field)
    psi = fundamental_form(field.values, partials).coeffs  # (C(n,2), *grid)
    g = GridField(field.box, field.shape, np.moveaxis(psi, 0, -1), 2, "form")
    dpsi = exterior_derivative(g)
    return float(np.abs(dpsi.values[dpsi.interior()]).max())


def projector_field(fn: Callable, box, shape) -> GridField:
    """Sample ``fn(t) -> N x N projector`` on a box as a projector-valued grid field."""
    return GridField.sample(lambda t: _as_matrix(fn(t)), box, shape, payload_kind="projector")


def chart_family_field(Zfn: Callable, box, shape) -> GridField:
    """Projector field of a chart family; ``Zfn`` maps node coordinates (..., n) to (..., N-p, p)."""
    g = GridField(box, shape, np.zeros(tuple(shape)), payload_kind="projector")
    g.values = chart_projectors(Zfn(g.points()))
    return g
