"""Clifford representation of R^{2l}, simple spinors and the Fock construction.

The gammas are built as a Jordan-Wigner ladder: with a_k the k-th fermionic
annihilator, gamma_k = a_k + a_k^H and gamma_{l+k} = i (a_k^H - a_k).  For the
standard structure J0 e_k = e_{l+k} the (1, 0) covectors dx^k + i dx^{l+k}
act as 2 a_k, so the vacuum of J0 is the first basis vector.

gamma(omega) = sum_k omega_k gamma_k is complex linear in the covector, and
(omega, omega') denotes the bilinear extension of the Euclidean product.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
from scipy.linalg import expm, null_space

from .jspace import ComplexStructure, IsometricComplexStructure, pure_type_projector
from .tensor_core import ExteriorForm, multi_indices, wedge

CLIFF_TOL = 1e-12
MAX_ELL = 6

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0 + 0j, -1.0])
_I2 = np.eye(2, dtype=complex)


def _kron_all(mats) -> np.ndarray:
    return reduce(np.kron, mats)


@dataclass(frozen=True)
class CliffordRep:
    ell: int
    gammas: np.ndarray            # shape (2l, 2^l, 2^l)

    @property
    def n(self) -> int:
        return 2 * self.ell

    @property
    def dim(self) -> int:
        return self.gammas.shape[-1]

    def gamma(self, omega: np.ndarray) -> np.ndarray:
        """gamma(omega) for a complex covector (or a stack of covectors)."""
        return np.tensordot(np.asarray(omega, dtype=complex), self.gammas, axes=([-1], [0]))

    def clifford_residual(self) -> float:
        G = self.gammas
        anti = np.einsum("iab,jbc->ijac", G, G) + np.einsum("jab,ibc->ijac", G, G)
        target = 2 * np.einsum("ij,ac->ijac", np.eye(self.n), np.eye(self.dim))
        herm = np.abs(G - np.conj(np.swapaxes(G, 1, 2))).max()
        return float(max(np.abs(anti - target).max(), herm))

    def commutant_dimension(self) -> int:
        """Dimension of {X : [X, gamma_i] = 0 for all i} (1 for an irreducible rep)."""
        d = self.dim
        I = np.eye(d)
        # vec(G X - X G) = (I kron G - G^T kron I) vec(X) in column-major order
        M = np.vstack([np.kron(I, g) - np.kron(g.T, I) for g in self.gammas])
        sv = np.linalg.svd(M, compute_uv=False)
        return int(np.sum(sv < 1e-9 * max(1.0, sv[0]))) + max(0, d * d - len(sv))

    def annihilators(self) -> np.ndarray:
        """Fermionic lowering operators a_k = (gamma_k + i gamma_{l+k}) / 2."""
        l = self.ell
        return 0.5 * (self.gammas[:l] + 1j * self.gammas[l:])


def build_gamma(ell: int) -> CliffordRep:
    if not 1 <= ell <= MAX_ELL:
        raise ValueError(f"ell must lie in 1..{MAX_ELL}")
    G = []
    for block in (_X, _Y):
        for k in range(ell):
            G.append(_kron_all([_Z] * k + [block] + [_I2] * (ell - k - 1)))
    return CliffordRep(ell, np.array(G))


def spin_element(rep: CliffordRep, coeffs: np.ndarray) -> np.ndarray:
    """exp(sum_{i<j} c_ij [gamma_i, gamma_j] / 4) for real antisymmetric-index c."""
    c = np.asarray(coeffs, dtype=float)
    X = np.zeros((rep.dim, rep.dim), dtype=complex)
    for i in range(rep.n):
        for j in range(i + 1, rep.n):
            if c[i, j]:
                gi, gj = rep.gammas[i], rep.gammas[j]
                X += c[i, j] * 0.25 * (gi @ gj - gj @ gi)
    return expm(X)


def spin_rotation(rep: CliffordRep, U: np.ndarray) -> np.ndarray:
    """R with U gamma_i U^{-1} = sum_k R[k, i] gamma_k."""
    Ui = np.linalg.inv(U)
    conj = np.einsum("ab,ibc,cd->iad", U, rep.gammas, Ui)
    R = np.einsum("kba,iab->ki", rep.gammas, conj) / rep.dim
    return np.real_if_close(R).real


# ---------------------------------------------------------------------------
# vacuum, annihilator, complex structure


def _normalize_phase(psi: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    psi = psi / np.linalg.norm(psi)
    k = int(np.argmax(np.abs(psi) > tol * np.abs(psi).max()))
    return psi * (abs(psi[k]) / psi[k])


def holomorphic_covectors(J) -> np.ndarray:
    """Rows form a basis of Lambda^{1,0} E*_J (the +i eigenvectors of J^T)."""
    Jm = J.J if isinstance(J, ComplexStructure) else np.asarray(J, dtype=float)
    w, V = np.linalg.eig(Jm.T)
    sel = np.argsort(-w.imag)[: Jm.shape[0] // 2]
    if np.abs(w[sel] - 1j).max() > 1e-8:
        raise ValueError("J^T has no clean +i eigenspace")
    return V[:, sel].T


def vacuum_from_J(rep: CliffordRep, J) -> np.ndarray:
    """Unit spinor annihilated by gamma(omega) for all (1, 0) covectors omega of J."""
    Jm = J.J if isinstance(J, ComplexStructure) else np.asarray(J, dtype=float)
    if Jm.shape != (rep.n, rep.n):
        raise ValueError("J has the wrong size for this representation")
    IsometricComplexStructure(Jm)
    W = holomorphic_covectors(Jm)
    M = np.vstack(list(rep.gamma(W)))
    K = null_space(M, rcond=1e-9)
    if K.shape[1] != 1:
        raise ValueError(f"joint kernel has dimension {K.shape[1]}, expected 1")
    return _normalize_phase(K[:, 0])


@dataclass
class AnnihilatorSpace:
    basis: np.ndarray             # rows: covectors omega with gamma(omega) psi = 0
    simple: bool

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def isotropy_residual(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.abs(self.basis @ self.basis.T).max())


def annihilator(rep: CliffordRep, psi: np.ndarray, tol: float = 1e-9) -> AnnihilatorSpace:
    psi = np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ValueError("zero spinor")
    # columns gamma_k psi: the linear map omega -> gamma(omega) psi
    M = np.einsum("kab,b->ak", rep.gammas, psi / nrm)
    K = null_space(M, rcond=tol)
    return AnnihilatorSpace(K.T, K.shape[1] == rep.ell)


def j_from_simple_spinor(rep: CliffordRep, psi: np.ndarray) -> np.ndarray:
    """The isometric J whose (1, 0) covectors are the annihilator of psi."""
    ann = annihilator(rep, psi)
    if not ann.simple:
        raise ValueError("spinor is not simple")
    W = ann.basis
    B = np.vstack([W, W.conj()]).T
    D = np.diag([1j] * rep.ell + [-1j] * rep.ell)
    Jt = B @ D @ np.linalg.inv(B)
    if np.abs(Jt.imag).max() > 1e-8:
        raise RuntimeError("recovered J is not real")
    return Jt.real.T


def is_simple(rep: CliffordRep, psi: np.ndarray) -> bool:
    return annihilator(rep, psi).simple


# ---------------------------------------------------------------------------
# chirality and Fock construction


def chirality(rep: CliffordRep) -> np.ndarray:
    """i^l gamma_1 ... gamma_2l with the sign fixed so the J0 vacuum is +1-chiral."""
    G = (1j ** rep.ell) * reduce(np.matmul, list(rep.gammas))
    if G[0, 0].real < 0:
        G = -G
    return G


def chirality_split(rep: CliffordRep) -> tuple:
    G = chirality(rep)
    I = np.eye(rep.dim)
    return 0.5 * (I + G), 0.5 * (I - G)


def random_chiral_spinor(rep: CliffordRep, rng: np.random.Generator, sign: int = 1) -> np.ndarray:
    Pp, Pm = chirality_split(rep)
    v = rng.normal(size=rep.dim) + 1j * rng.normal(size=rep.dim)
    return (Pp if sign > 0 else Pm) @ v


def clifford_product(rep: CliffordRep, I: Sequence[int]) -> np.ndarray:
    return reduce(np.matmul, [rep.gammas[i] for i in I], np.eye(rep.dim, dtype=complex))


def fock_pack(rep: CliffordRep, J, forms, psi: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Phi(phi) = sum_k 2^{-k/2} c(phi_k) psi, c the Clifford quantization dx^I -> gamma_I.

    For mutually isotropic (0, 1) covectors c(w_1 ^ .. ^ w_k) = gamma(w_1)..gamma(w_k),
    so Phi(w ^ phi) = gamma(w) Phi(phi) / sqrt 2.  ``forms`` is one ExteriorForm or
    a list of them (one per degree).
    """
    if isinstance(forms, ExteriorForm):
        forms = [forms]
    psi = np.asarray(psi, dtype=complex)
    out = np.zeros(rep.dim, dtype=complex)
    for f in forms:
        if f.dim != rep.n:
            raise ValueError("form lives on the wrong space")
        k = f.degree
        c = np.asarray(f.coeffs, dtype=complex)
        if k:
            P = pure_type_projector(J, 0, k)
            if np.linalg.norm(c - P @ c) > tol * max(1.0, np.linalg.norm(c)):
                raise ValueError(f"degree {k} form is not of type (0, {k})")
        acc = np.zeros(rep.dim, dtype=complex)
        for coef, I in zip(c, multi_indices(rep.n, k)):
            if coef != 0:
                acc += coef * (clifford_product(rep, I) @ psi)
        out += 2 ** (-k / 2) * acc
    return out


def antiholomorphic_basis(J, max_degree=None) -> list:
    """Orthonormal basis of the (0, k) forms, k = 0..l, as ExteriorForms.

    Built from wedges of the conjugates of an orthonormalized (1, 0) basis.
    """
    Jm = J.J if isinstance(J, ComplexStructure) else np.asarray(J, dtype=float)
    n = Jm.shape[0]
    W = holomorphic_covectors(Jm)
    Q, _ = np.linalg.qr(W.T)
    theta = Q.T.conj()
    ell = n // 2
    out = []
    for k in range(ell + 1 if max_degree is None else max_degree + 1):
        for A in multi_indices(ell, k):
            f = ExteriorForm(n, 0, np.ones(1, dtype=complex))
            for a in A:
                f = wedge(f, ExteriorForm(n, 1, theta[a]))
            out.append(f)
    return out


def car_residual(rep: CliffordRep, J, rng: np.random.Generator) -> float:
    """CAR for a_w = gamma(w / sqrt 2) over a random basis of (1, 0) covectors:
    {a_w, a_v} = 0 and {a_w, a_v^H} = <v | w>."""
    W = holomorphic_covectors(J)
    W = (rng.normal(size=(rep.ell, rep.ell)) + 1j * rng.normal(size=(rep.ell, rep.ell))) @ W
    A = rep.gamma(W) / np.sqrt(2)
    Ad = np.conj(np.swapaxes(A, 1, 2))
    anti = lambda X, Y: np.einsum("iab,jbc->ijac", X, Y) + np.einsum("jab,ibc->ijac", Y, X)
    gram = np.einsum("jk,ik->ij", W.conj(), W)
    target = np.einsum("ij,ac->ijac", gram, np.eye(rep.dim))
    return float(max(np.abs(anti(A, A)).max(), np.abs(anti(A, Ad) - target).max()))


def simple_cone_tangent_rank(rep: CliffordRep, h: float = 1e-6, tol: float = 1e-6) -> int:
    """Real rank of d(A, s, t) [e^{s + i t} vacuum(e^A J0 e^-A)] at the origin.

    A runs over the antisymmetric matrices; directions commuting with J0 only
    move the phase, so the rank counts dim H + 2.
    """
    from .jspace import standard_j
    J0 = standard_j(rep.ell)
    psi0 = vacuum_from_J(rep, J0)
    cols = [psi0, 1j * psi0]
    for i in range(rep.n):
        for j in range(i + 1, rep.n):
            A = np.zeros((rep.n, rep.n))
            A[i, j], A[j, i] = h, -h
            Rp, Rm = expm(A), expm(-A)
            cols.append((vacuum_from_J(rep, Rp @ J0 @ Rp.T) - vacuum_from_J(rep, Rm @ J0 @ Rm.T)) / (2 * h))
    M = np.array([np.concatenate([c.real, c.imag]) for c in cols]).T
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > tol * sv[0]))


@dataclass
class RoundtripResult:
    ell: int
    samples: int
    max_j_error: float
    max_direction_error: float


def spinor_roundtrip(ell: int, samples: int, seed: int) -> RoundtripResult:
    """J -> vacuum -> J over random J in H_+, plus psi -> J -> psi as projectors."""
    from .jspace import random_isometric
    rep = build_gamma(ell)
    rng = np.random.default_rng(seed)
    ej = ed = 0.0
    for _ in range(samples):
        J = random_isometric(ell, rng).J
        psi = vacuum_from_J(rep, J)
        J2 = j_from_simple_spinor(rep, psi)
        ej = max(ej, float(np.abs(J2 - J).max()))
        psi2 = vacuum_from_J(rep, J2)
        ed = max(ed, float(np.abs(np.outer(psi, psi.conj()) - np.outer(psi2, psi2.conj())).max()))
    return RoundtripResult(ell, samples, ej, ed)
