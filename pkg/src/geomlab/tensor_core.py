"""Exterior algebra over R^n with complex coefficients, Hodge duality and
grid-sampled differential forms.

Forms are stored on the basis dx^I with I a strictly increasing multi-index.
Coefficient arrays may carry a trailing payload shape (for example matrix
valued forms), so ``coeffs.shape == (C(n, p),) + payload``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial
from typing import Callable, Optional, Sequence

import numpy as np


# ---------------------------------------------------------------------------
# multi-index bookkeeping


@lru_cache(maxsize=None)
def multi_indices(n: int, p: int) -> tuple:
    """Strictly increasing multi-indices of length ``p`` in ``range(n)``."""
    if p < 0 or p > n:
        return ()
    return tuple(itertools.combinations(range(n), p))


@lru_cache(maxsize=None)
def index_map(n: int, p: int) -> dict:
    return {I: k for k, I in enumerate(multi_indices(n, p))}


def perm_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq``; 0 if an entry repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _wedge_table(n: int, p: int, q: int):
    """List of (a, b, c, sign) with dx^A ^ dx^B = sign dx^C."""
    out = []
    imap = index_map(n, p + q)
    for a, A in enumerate(multi_indices(n, p)):
        for b, B in enumerate(multi_indices(n, q)):
            s = perm_sign(A + B)
            if s:
                out.append((a, b, imap[tuple(sorted(A + B))], s))
    return out


@lru_cache(maxsize=None)
def _complement_table(n: int, p: int):
    """(index of I, index of complement, sign(I, I^c))."""
    out = []
    imap = index_map(n, n - p)
    for a, A in enumerate(multi_indices(n, p)):
        C = tuple(i for i in range(n) if i not in A)
        out.append((a, imap[C], perm_sign(A + C)))
    return out


# ---------------------------------------------------------------------------
# metric and forms


@dataclass(frozen=True)
class FrameMetric:
    """Diagonal signature eta with an orientation sign."""

    eta: tuple
    orientation: int = 1

    def __post_init__(self):
        if any(e not in (1, -1) for e in self.eta):
            raise ValueError("eta entries must be +1 or -1")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @classmethod
    def euclidean(cls, n: int, orientation: int = 1) -> "FrameMetric":
        return cls(tuple([1] * n), orientation)

    @classmethod
    def signature(cls, s: int, n: int, orientation: int = 1) -> "FrameMetric":
        return cls(tuple([1] * s + [-1] * (n - s)), orientation)

    @property
    def n(self) -> int:
        return len(self.eta)

    def matrix(self) -> np.ndarray:
        return np.diag(np.array(self.eta, dtype=float))

    def basis_norms(self, p: int) -> np.ndarray:
        """eta^I = prod eta_ii over each increasing multi-index I."""
        e = np.array(self.eta)
        return np.array([np.prod(e[list(I)]) for I in multi_indices(self.n, p)], dtype=float)


@dataclass(frozen=True)
class ExteriorForm:
    """A p-form on R^n, coefficients over the increasing basis dx^I."""

    dim: int
    degree: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if not 0 <= self.degree <= self.dim:
            raise ValueError(f"degree {self.degree} outside 0..{self.dim}")
        if c.shape[:1] != (comb(self.dim, self.degree),):
            raise ValueError("coefficient length must equal C(n, p)")
        object.__setattr__(self, "coeffs", c)

    # constructors
    @classmethod
    def zero(cls, n: int, p: int, payload=()) -> "ExteriorForm":
        return cls(n, p, np.zeros((comb(n, p),) + tuple(payload), dtype=complex))

    @classmethod
    def basis(cls, n: int, I: Sequence[int], value=1.0) -> "ExteriorForm":
        """``value * dx^{i1} ^ ... ^ dx^{ip}`` for an arbitrary index order."""
        I = tuple(I)
        s = perm_sign(I)
        out = np.zeros(comb(n, len(I)), dtype=complex)
        if s:
            out[index_map(n, len(I))[tuple(sorted(I))]] = s * value
        return cls(n, len(I), out)

    @classmethod
    def from_tensor(cls, T: np.ndarray) -> "ExteriorForm":
        """From an antisymmetric component array (omega = 1/p! T_I dx^I)."""
        T = np.asarray(T)
        p = T.ndim
        n = T.shape[0] if p else 0
        if p == 0:
            raise ValueError("use a 1-element coefficient array for 0-forms")
        return cls(n, p, np.array([T[I] for I in multi_indices(n, p)]))

    def to_tensor(self) -> np.ndarray:
        """Fully antisymmetric component array T with T[I] = coeff for increasing I."""
        n, p = self.dim, self.degree
        T = np.zeros((n,) * p + self.coeffs.shape[1:], dtype=self.coeffs.dtype)
        for k, I in enumerate(multi_indices(n, p)):
            for perm in itertools.permutations(range(p)):
                J = tuple(I[j] for j in perm)
                T[J] = perm_sign(perm) * self.coeffs[k]
        return T

    # algebra
    def _check(self, other: "ExteriorForm"):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        self._check(other)
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        return ExteriorForm(self.dim, self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self + (-1) * other

    def __rmul__(self, scalar):
        return ExteriorForm(self.dim, self.degree, scalar * self.coeffs)

    def __neg__(self):
        return (-1) * self

    def conj(self) -> "ExteriorForm":
        return ExteriorForm(self.dim, self.degree, np.conj(self.coeffs))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def allclose(self, other, atol=1e-12) -> bool:
        return self.degree == other.degree and np.allclose(self.coeffs, other.coeffs, atol=atol)


def wedge(a: ExteriorForm, b: ExteriorForm, mul: Optional[Callable] = None) -> ExteriorForm:
    """Exterior product.  ``mul`` combines payloads (default: ordinary product,
    use ``np.matmul`` for matrix-valued forms)."""
    a._check(b)
    n, p, q = a.dim, a.degree, b.degree
    if p + q > n:
        raise ValueError(f"degree {p + q} exceeds dimension {n}")
    mul = mul or (lambda x, y: x * y)
    first = mul(a.coeffs[0], b.coeffs[0]) if len(a.coeffs) and len(b.coeffs) else np.zeros(())
    out = np.zeros((comb(n, p + q),) + np.shape(first), dtype=complex)
    for ia, ib, ic, s in _wedge_table(n, p, q):
        out[ic] += s * mul(a.coeffs[ia], b.coeffs[ib])
    return ExteriorForm(n, p + q, out)


def volume_form(n: int, orientation: int = 1) -> ExteriorForm:
    return ExteriorForm(n, n, np.array([orientation], dtype=complex))


def hodge_star(w: ExteriorForm, eta: FrameMetric) -> ExteriorForm:
    """Hodge dual fixed by a ^ *b = (a, b) vol on basis forms.

    On an orthonormal basis *dx^I = orientation * eta^I * sign(I, I^c) dx^{I^c}.
    """
    n, p = w.dim, w.degree
    if eta.n != n:
        raise ValueError("metric dimension mismatch")
    norms = eta.basis_norms(p)
    out = np.zeros((comb(n, n - p),) + w.coeffs.shape[1:], dtype=complex)
    for a, c, s in _complement_table(n, p):
        out[c] += eta.orientation * norms[a] * s * w.coeffs[a]
    return ExteriorForm(n, n - p, out)


def form_inner_product(H: ExteriorForm, Hp: ExteriorForm, eta: FrameMetric,
                       k: Optional[Callable] = None) -> complex:
    """(H, H') = 1/p! sum k_AB g^{..}...H^A_{mu..} H'^B_{mu'..} in an orthonormal frame.

    The 1/p! cancels the sum over orderings, leaving a sum over increasing
    multi-indices weighted by eta^I.  ``k`` pairs payload values (default:
    product of scalars).
    """
    H._check(Hp)
    if H.degree != Hp.degree:
        raise ValueError("degree mismatch")
    k = k or (lambda x, y: x * y)
    norms = eta.basis_norms(H.degree)
    total = sum(norms[i] * k(H.coeffs[i], Hp.coeffs[i]) for i in range(len(norms)))
    return complex(total) if np.iscomplexobj(total) else total


def killing_minus_trace(E: np.ndarray, F: np.ndarray) -> complex:
    """k(E, F) = -Tr(EF), positive on anti-Hermitian matrices."""
    return -np.trace(E @ F)


def d_from_partials(partials: np.ndarray, n: int, p: int) -> np.ndarray:
    """Coefficients of d(omega) from partials[i, I, ...] = d_i omega_I.

    Leading axes after the first two are carried along unchanged.
    """
    if p >= n:
        raise ValueError("exterior derivative of an n-form is identically zero; "
                         "degree n+1 forms are not represented")
    partials = np.asarray(partials)
    out = np.zeros((comb(n, p + 1),) + partials.shape[2:], dtype=np.result_type(partials, float))
    for ia, ib, ic, s in _wedge_table(n, 1, p):
        out[ic] += s * partials[ia, ib]
    return out


# ---------------------------------------------------------------------------
# grid fields


@dataclass
class GridField:
    """Values on a uniform lattice including the box faces.

    ``values.shape == shape + payload``.  For ``payload_kind == "form"`` the
    payload begins with the C(n, degree) coefficient axis.
    """

    box: tuple
    shape: tuple
    values: np.ndarray
    degree: Optional[int] = None
    payload_kind: str = "scalar"
    closure: Optional[Callable] = None
    boundary_margin: int = 0

    def __post_init__(self):
        self.box = tuple((float(a), float(b)) for a, b in self.box)
        self.shape = tuple(int(s) for s in self.shape)
        self.values = np.asarray(self.values)
        if len(self.box) != len(self.shape):
            raise ValueError("box and shape must have the same length")
        if self.values.shape[: len(self.shape)] != self.shape:
            raise ValueError("values do not match grid shape")
        if any(s < 2 for s in self.shape):
            raise ValueError("need at least 2 samples per axis")

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(b - a) / (s - 1) for (a, b), s in zip(self.box, self.shape)])

    def axes(self) -> list:
        return [np.linspace(a, b, s) for (a, b), s in zip(self.box, self.shape)]

    def points(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (ndim,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    @classmethod
    def sample(cls, fn: Callable, box, shape, degree=None, payload_kind="scalar") -> "GridField":
        """Evaluate ``fn(x)`` (x of shape (ndim,)) at every node; ``fn`` is kept as closure."""
        g = cls(box, shape, np.zeros(tuple(shape)), degree, payload_kind)
        pts = g.points().reshape(-1, g.ndim)
        vals = np.array([fn(x) for x in pts])
        g.values = vals.reshape(tuple(shape) + vals.shape[1:])
        g.closure = fn
        return g

    def interior(self, margin: Optional[int] = None) -> tuple:
        m = self.boundary_margin if margin is None else margin
        return tuple(slice(m, s - m) for s in self.shape)

    # serialization
    def to_json(self) -> str:
        v = self.values
        if np.iscomplexobj(v):
            flat = [[float(z.real), float(z.imag)] for z in v.ravel()]
        else:
            flat = [float(x) for x in v.ravel()]
        doc = {
            "box": [list(b) for b in self.box],
            "shape": list(self.shape),
            "degree": self.degree,
            "payload-kind": self.payload_kind,
            "payload-shape": list(v.shape[self.ndim:]),
            "complex": bool(np.iscomplexobj(v)),
            "values": flat,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "GridField":
        doc = json.loads(text)
        for key in ("box", "shape", "payload-kind", "values"):
            if key not in doc:
                raise ValueError(f"grid field JSON missing '{key}'")
        shape = tuple(doc["shape"])
        payload = tuple(doc.get("payload-shape", []))
        vals = np.array(doc["values"], dtype=float)
        if doc.get("complex", False):
            vals = vals[..., 0] + 1j * vals[..., 1]
        return cls(tuple(map(tuple, doc["box"])), shape, vals.reshape(shape + payload),
                   doc.get("degree"), doc["payload-kind"])


def exterior_derivative(f: GridField, scheme: str = "central") -> GridField:
    """Exterior derivative of a form-valued grid field.

    ``central``: second-order central differences inside, second-order
    one-sided stencils on the faces (flagged through ``boundary_margin``).
    ``analytic``: ``f.closure`` must return ``(coeffs, partials)`` with
    ``partials[i, I] = d_i omega_I``.
    """
    if f.payload_kind != "form" or f.degree is None:
        raise ValueError("exterior_derivative needs a form-valued field")
    n, p = f.ndim, f.degree
    if p >= n:
        raise ValueError("exterior derivative of an n-form is identically zero; "
                         "degree n+1 forms are not represented")
    if scheme == "central":
        if any(s < 3 for s in f.shape):
            raise ValueError("central scheme needs at least 3 samples per axis")
        h = f.spacing
        grads = [np.gradient(f.values, h[i], axis=i, edge_order=2) for i in range(n)]
        partials = np.stack(grads, axis=0)  # (n, *grid, C, ...)
        partials = np.moveaxis(partials, n + 1, 1)  # (n, C, *grid, ...)
        dv = d_from_partials(partials, n, p)
        dv = np.moveaxis(dv, 0, n)
        return GridField(f.box, f.shape, dv, p + 1, "form", None, max(f.boundary_margin, 2))
    if scheme == "analytic":
        if f.closure is None:
            raise ValueError("analytic scheme needs a closure")
        pts = GridField(f.box, f.shape, np.zeros(f.shape)).points().reshape(-1, n)
        out = np.array([d_from_partials(f.closure(x)[1], n, p) for x in pts])
        return GridField(f.box, f.shape, out.reshape(f.shape + out.shape[1:]), p + 1, "form")
    raise ValueError(f"unknown scheme {scheme!r}")


def levi_civita(n: int) -> np.ndarray:
    """Dense epsilon tensor with eps[0,1,...,n-1] = 1."""
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        eps[perm] = perm_sign(perm)
    return eps


def antisymmetrize(T: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Average of signed permutations over the listed axes (weight 1/k!)."""
    axes = list(axes)
    out = np.zeros_like(T, dtype=np.result_type(T, float))
    for perm in itertools.permutations(range(len(axes))):
        order = list(range(T.ndim))
        for src, dst in zip(axes, [axes[j] for j in perm]):
            order[src] = dst
        out += perm_sign(perm) * np.transpose(T, order)
    return out / factorial(len(axes))
