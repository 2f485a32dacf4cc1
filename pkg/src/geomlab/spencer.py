"""Prolongations of matrix Lie algebras and the Spencer delta-complex.

Everything is exact.  A symmetric (k+1)-linear map R^n x ... x R^n -> R^n is
stored as a homogeneous polynomial vector field of degree k+1,

    X = sum_{mu, alpha} c_{mu, alpha} x^alpha e_mu,    |alpha| = k + 1,

whose (k+1)-fold derivative is the symmetric tensor.  Under this
identification delta is the exterior derivative of vector-valued polynomial
forms, and the cochain space C^{r,s} is g^(r-1) (x) Lambda^s.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, List

import numpy as np
from sympy import QQ, ZZ
from sympy.polys.matrices import DomainMatrix

from .tensor_core import multi_indices, perm_sign


# ---------------------------------------------------------------------------
# exact linear algebra helpers


def _dm(rows, ncols, domain=QQ) -> DomainMatrix:
    rows = [list(r) for r in rows]
    if not rows:
        return DomainMatrix.zeros((0, ncols), domain)
    return DomainMatrix([[domain.convert(v) for v in r] for r in rows], (len(rows), ncols), domain)


def exact_rank(M: DomainMatrix) -> int:
    if 0 in M.shape:
        return 0
    return M.convert_to(QQ).rank()


def exact_nullspace(M: DomainMatrix) -> DomainMatrix:
    """Columns spanning ker M (shape ncols x k)."""
    nrows, ncols = M.shape
    if nrows == 0:
        return DomainMatrix.eye(ncols, QQ)
    N = M.convert_to(QQ).nullspace()  # rows span the kernel
    if N.shape[0] == 0 or N.shape[1] == 0:
        return DomainMatrix.zeros((ncols, 0), QQ)
    return N.transpose()


# ---------------------------------------------------------------------------
# Lie algebras


@dataclass
class MatrixLieAlgebra:
    """Subalgebra of gl(n, R) given by an integer basis."""

    n: int
    basis: List[np.ndarray]
    name: str = "g"

    def __post_init__(self):
        self.basis = [np.asarray(b, dtype=object) for b in self.basis]
        if any(b.shape != (self.n, self.n) for b in self.basis):
            raise ValueError("basis matrices must be n x n")
        if exact_rank(self._basis_matrix()) != len(self.basis):
            raise ValueError(f"{self.name}: basis is linearly dependent")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def _basis_matrix(self) -> DomainMatrix:
        return _dm([[int(v) for v in b.ravel()] for b in self.basis], self.n * self.n, QQ)

    def annihilator(self) -> List[List[Fraction]]:
        """Linear functionals L on gl(n) (row-major) vanishing exactly on g."""
        N = exact_nullspace(self._basis_matrix())
        cols = N.to_Matrix()
        return [[Fraction(int(cols[i, j].p), int(cols[i, j].q)) for i in range(cols.shape[0])]
                for j in range(cols.shape[1])]

    def contains(self, X: np.ndarray, tol: float = 1e-10) -> bool:
        """Membership test in floating point (least squares residual)."""
        B = np.array([np.asarray(b, dtype=float).ravel() for b in self.basis]).T
        x = np.asarray(X, dtype=float).ravel()
        if B.size == 0:
            return np.linalg.norm(x) < tol
        c, *_ = np.linalg.lstsq(B, x, rcond=None)
        return np.linalg.norm(B @ c - x) <= tol * max(1.0, np.linalg.norm(x))

    def is_closed(self) -> bool:
        """Exact check that all commutators lie in span(basis)."""
        base = self._basis_matrix()
        r = exact_rank(base)
        brackets = []
        for a, b in itertools.combinations(self.basis, 2):
            c = a.dot(b) - b.dot(a)
            brackets.append([int(v) for v in c.ravel()])
        if not brackets:
            return True
        stacked = _dm([[int(v) for v in b.ravel()] for b in self.basis] + brackets, self.n ** 2)
        return exact_rank(stacked) == r


def _unit(n, i, j):
    E = np.zeros((n, n), dtype=object)
    E[:] = 0
    E[i, j] = 1
    return E


def gl(n: int) -> MatrixLieAlgebra:
    return MatrixLieAlgebra(n, [_unit(n, i, j) for i in range(n) for j in range(n)], f"gl({n})")


def o(n: int) -> MatrixLieAlgebra:
    B = [_unit(n, i, j) - _unit(n, j, i) for i in range(n) for j in range(i + 1, n)]
    return MatrixLieAlgebra(n, B, f"o({n})")


def co(n: int) -> MatrixLieAlgebra:
    eye = np.zeros((n, n), dtype=object)
    eye[:] = 0
    for i in range(n):
        eye[i, i] = 1
    return MatrixLieAlgebra(n, o(n).basis + [eye], f"co({n})")


def sp(l: int) -> MatrixLieAlgebra:
    """sp(l, R) in gl(2l, R): X^T J + J X = 0 with J = [[0, 1], [-1, 0]]."""
    n = 2 * l
    B = []
    for i in range(l):
        for j in range(l):
            B.append(_unit(n, i, j) - _unit(n, l + j, l + i))       # [[A, 0], [0, -A^T]]
    for i in range(l):
        for j in range(i, l):
            S = _unit(n, i, l + j) + (_unit(n, j, l + i) if i != j else 0 * _unit(n, 0, 0))
            B.append(S)                                             # [[0, S], [0, 0]]
            T = _unit(n, l + i, j) + (_unit(n, l + j, i) if i != j else 0 * _unit(n, 0, 0))
            B.append(T)                                             # [[0, 0], [S, 0]]
    return MatrixLieAlgebra(n, B, f"sp({l})")


def gl_complex(l: int) -> MatrixLieAlgebra:
    """gl(l, C) in gl(2l, R): real matrices [[A, -B], [B, A]] commuting with J0."""
    n = 2 * l
    B = []
    for i in range(l):
        for j in range(l):
            B.append(_unit(n, i, j) + _unit(n, l + i, l + j))
            B.append(_unit(n, l + i, j) - _unit(n, i, l + j))
    return MatrixLieAlgebra(n, B, f"glC({l})")


ALGEBRAS = {"gl": gl, "o": o, "co": co, "sp": sp, "glC": gl_complex}


def algebra_by_name(spec: str) -> MatrixLieAlgebra:
    """Parse ``'o(4)'``, ``'sp(2)'``, ``'glC(2)'`` and the like."""
    name, _, rest = spec.partition("(")
    if name not in ALGEBRAS or not rest.endswith(")"):
        raise ValueError(f"unknown algebra {spec!r}; known: {sorted(ALGEBRAS)}")
    return ALGEBRAS[name](int(rest[:-1]))


# ---------------------------------------------------------------------------
# polynomial vector fields


@lru_cache(maxsize=None)
def monomials(n: int, d: int) -> tuple:
    """Exponent vectors alpha with |alpha| = d (lexicographically descending)."""
    if d < 0:
        return ()
    out = []
    for combo in itertools.combinations_with_replacement(range(n), d):
        a = [0] * n
        for i in combo:
            a[i] += 1
        out.append(tuple(a))
    return tuple(out)


@lru_cache(maxsize=None)
def _mono_index(n: int, d: int) -> dict:
    return {a: k for k, a in enumerate(monomials(n, d))}


def field_dim(n: int, d: int) -> int:
    return n * len(monomials(n, d))


def _field_index(n: int, d: int, mu: int, alpha) -> int:
    # vector component is the outer index
    return mu * len(monomials(n, d)) + _mono_index(n, d)[tuple(alpha)]


@dataclass
class ProlongationSpace:
    """Basis of g^(k) as exact columns over degree-(k+1) polynomial fields."""

    k: int
    n: int
    basis: DomainMatrix = field(repr=False)  # shape field_dim(n, k+1) x dim

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def as_tensor(self, j: int) -> np.ndarray:
        """Symmetric tensor t[nu_0, ..., nu_k, mu] = d_{nu_0}...d_{nu_k} X^mu."""
        n, d = self.n, self.k + 1
        col = self.basis.to_Matrix()[:, j]
        T = np.zeros((n,) * d + (n,))
        for mu in range(n):
            for alpha in monomials(n, d):
                c = col[_field_index(n, d, mu, alpha)]
                if c == 0:
                    continue
                # d^alpha x^alpha = alpha!
                weight = float(c) * np.prod([factorial(a) for a in alpha])
                idx = sum(([i] * a for i, a in enumerate(alpha)), [])
                for perm in set(itertools.permutations(idx)):
                    T[perm + (mu,)] = weight
        return T


def _jacobian_rows(n: int, d: int):
    """For fields of degree d: entries (beta, mu, nu) -> list of (column, coeff)
    describing the coefficient of x^beta in d_nu X^mu."""
    table = {}
    for mu in range(n):
        for alpha in monomials(n, d):
            col = _field_index(n, d, mu, alpha)
            for nu in range(n):
                if alpha[nu] == 0:
                    continue
                beta = list(alpha)
                beta[nu] -= 1
                table.setdefault((tuple(beta), mu, nu), []).append((col, alpha[nu]))
    return table


@lru_cache(maxsize=None)
def _prolongation_cached(key, k: int):
    alg = _ALG_CACHE[key]
    n = alg.n
    d = k + 1
    ncols = field_dim(n, d)
    if k == -1:
        return ProlongationSpace(-1, n, DomainMatrix.eye(ncols, QQ))
    ann = alg.annihilator()
    table = _jacobian_rows(n, d)
    rows = []
    for beta in monomials(n, k):
        for L in ann:
            row = [Fraction(0)] * ncols
            for mu in range(n):
                for nu in range(n):
                    w = L[mu * n + nu]
                    if w == 0:
                        continue
                    for col, c in table.get((beta, mu, nu), ()):
                        row[col] += w * c
            if any(row):
                rows.append(row)
    N = exact_nullspace(_dm(rows, ncols, QQ))
    return ProlongationSpace(k, n, N)


_ALG_CACHE: dict = {}


def _key(alg: MatrixLieAlgebra):
    key = (alg.name, alg.n, tuple(tuple(int(v) for v in b.ravel()) for b in alg.basis))
    _ALG_CACHE[key] = alg
    return key


def prolongation(g: MatrixLieAlgebra, k: int) -> ProlongationSpace:
    """g^(k): symmetric (k+1)-linear maps whose partial applications lie in g."""
    if k < -1:
        raise ValueError("k must be >= -1")
    return _prolongation_cached(_key(g), k)


# ---------------------------------------------------------------------------
# delta


@lru_cache(maxsize=None)
def delta_matrix(n: int, d: int, s: int) -> DomainMatrix:
    """delta = d on V_d (x) Lambda^s -> V_{d-1} (x) Lambda^{s+1} (integer matrix).

    Rows/columns use the ordering (field index, form index).
    """
    nin = field_dim(n, d) * comb(n, s)
    nout = field_dim(n, d - 1) * comb(n, s + 1) if d >= 1 and s < n else 0
    if nout == 0:
        return DomainMatrix.zeros((0, nin), ZZ)
    rows = [[0] * nin for _ in range(nout)]
    forms_in = multi_indices(n, s)
    out_form_idx = {I: k for k, I in enumerate(multi_indices(n, s + 1))}
    cs_in, cs_out = comb(n, s), comb(n, s + 1)
    for mu in range(n):
        for alpha in monomials(n, d):
            fin = _field_index(n, d, mu, alpha)
            for iI, I in enumerate(forms_in):
                col = fin * cs_in + iI
                for nu in range(n):
                    if alpha[nu] == 0 or nu in I:
                        continue
                    beta = list(alpha)
                    beta[nu] -= 1
                    J = (nu,) + I
                    sgn = perm_sign(J)
                    fout = _field_index(n, d - 1, mu, beta)
                    rows[fout * cs_out + out_form_idx[tuple(sorted(J))]][col] += sgn * alpha[nu]
    return DomainMatrix([[ZZ(v) for v in r] for r in rows], (nout, nin), ZZ)


def cochain_basis(g: MatrixLieAlgebra, r: int, s: int) -> DomainMatrix:
    """Columns spanning C^{r,s} = g^(r-1) (x) Lambda^s inside V_r (x) Lambda^s."""
    if r < 0 or not 0 <= s <= g.n:
        raise ValueError("need r >= 0 and 0 <= s <= n")
    P = prolongation(g, r - 1).basis
    cs = comb(g.n, s)
    m, k = P.shape
    if k == 0:
        return DomainMatrix.zeros((m * cs, 0), QQ)
    # Kronecker product P (x) I_cs
    Pm = P.to_Matrix()
    rows = [[QQ(0)] * (k * cs) for _ in range(m * cs)]
    for i in range(m):
        for j in range(k):
            v = Pm[i, j]
            if v == 0:
                continue
            for t in range(cs):
                rows[i * cs + t][j * cs + t] = QQ.convert(v)
    return DomainMatrix(rows, (m * cs, k * cs), QQ)


def cochain_dim(g: MatrixLieAlgebra, r: int, s: int) -> int:
    if r < 0 or s < 0 or s > g.n:
        return 0
    return prolongation(g, r - 1).dim * comb(g.n, s)


def delta_rank(g: MatrixLieAlgebra, r: int, s: int) -> int:
    """Rank of delta restricted to C^{r,s}."""
    if r < 0 or s < 0 or s >= g.n or r == 0:
        return 0
    B = cochain_basis(g, r, s)
    if B.shape[1] == 0:
        return 0
    D = delta_matrix(g.n, r, s).convert_to(QQ)
    return exact_rank(D * B)


def spencer_cohomology_dim(g: MatrixLieAlgebra, r: int, s: int) -> int:
    """dim H^{r,s}(g) = dim C^{r,s} - rank delta|C^{r,s} - rank delta|C^{r+1,s-1}."""
    if r < 0 or not 0 <= s <= g.n:
        raise ValueError("need r >= 0 and 0 <= s <= n")
    return cochain_dim(g, r, s) - delta_rank(g, r, s) - (delta_rank(g, r + 1, s - 1) if s >= 1 else 0)


def delta_squared_is_zero(n: int, d: int, s: int) -> bool:
    """Exact check of delta o delta = 0 on V_d (x) Lambda^s."""
    if d < 2 or s + 2 > n:
        return True
    # entries are small integers, so int64 products are exact
    D1 = np.array(delta_matrix(n, d, s).to_list(), dtype=np.int64)
    D2 = np.array(delta_matrix(n, d - 1, s + 1).to_list(), dtype=np.int64)
    return not np.any(D2 @ D1)


def apply_delta(n: int, d: int, s: int, coeffs: Iterable) -> list:
    """Apply delta to an explicit coefficient vector over V_d (x) Lambda^s."""
    v = DomainMatrix([[QQ.convert(c)] for c in coeffs], (field_dim(n, d) * comb(n, s), 1), QQ)
    out = delta_matrix(n, d, s).convert_to(QQ) * v
    return [out.to_Matrix()[i, 0] for i in range(out.shape[0])]


def cohomology_table(g: MatrixLieAlgebra, max_total: int) -> list:
    """Rows (algebra, r, s, dim H^{r,s}) for all r + s <= max_total."""
    rows = []
    for r in range(0, max_total + 1):
        for s in range(0, min(g.n, max_total - r) + 1):
            rows.append((g.name, r, s, spencer_cohomology_dim(g, r, s)))
    return rows


def has_rank_one_element(g: MatrixLieAlgebra, grid: int = 3) -> bool:
    """Search e (x) w over a small integer grid for a rank-one element of g."""
    vals = range(-grid // 2 + 1, grid // 2 + 1) if grid > 1 else (1,)
    vecs = [np.array(v) for v in itertools.product(vals, repeat=g.n) if any(v)]
    for e in vecs:
        for w in vecs:
            if g.contains(np.outer(e, w)):
                return True
    return False
