"""Two-dimensional sigma models with values in complex Grassmannians.

A ``ProjectorField`` is a map from a rectangle of C (z = x + i y) to rank-p
projectors on C^N.  Wirtinger derivatives are d/dz = (d_x - i d_y)/2 and
d/dzbar = (d_x + i d_y)/2.

Fields may carry an analytic closure: a frame H(z, w) (N x p) holomorphic in
both arguments, with w standing for zbar.  Then
P(z, w) = H (H* H)^{-1} H*,  H*(z, w) = conj(H(conj w, conj z))^T,
is holomorphic in (z, w) and its derivatives are taken by trapezoidal contour
integrals on small circles, which converge geometrically.  Fields without a
closure use second-order central differences.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid

from .tensor_core import GridField

CONTINUITY_TOL = 0.5


def _adj(M):
    return np.conj(np.swapaxes(M, -1, -2))


def _opnorm(M):
    """Spectral norm over the trailing two axes."""
    return np.linalg.norm(M, ord=2, axis=(-2, -1))


def _frame_projector(frame: Callable, z, w):
    H = np.asarray(frame(z, w), dtype=complex)
    Hs = np.swapaxes(np.conj(np.asarray(frame(np.conj(w), np.conj(z)), dtype=complex)), -1, -2)
    if H.shape[-1] == 1:
        return H @ Hs / (Hs @ H)
    return H @ np.linalg.solve(Hs @ H, Hs)


@dataclass
class ProjectorField:
    """Projector-valued field on a rectangular grid (axis 0: x, axis 1: y)."""

    box: tuple
    shape: tuple
    values: np.ndarray
    frame: Optional[Callable] = None
    contour_radius: float = 0.05
    contour_nodes: int = 12
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.box = tuple((float(a), float(b)) for a, b in self.box)
        self.shape = tuple(int(s) for s in self.shape)
        V = np.asarray(self.values, dtype=complex)
        if V.ndim != 4 or V.shape[:2] != self.shape or V.shape[2] != V.shape[3]:
            raise ValueError("values must have shape (mx, my, N, N)")
        if min(self.shape) < 5:
            raise ValueError("grid too small (need at least 5 nodes per axis)")
        if not np.all(np.isfinite(V)):
            raise ValueError("non-finite projector values")
        if np.abs(V - _adj(V)).max() > 1e-10 or np.abs(V @ V - V).max() > 1e-10:
            raise ValueError("values are not orthogonal projectors")
        tr = np.trace(V, axis1=2, axis2=3).real
        if np.abs(tr - np.round(tr[0, 0])).max() > 1e-8:
            raise ValueError("rank varies across the grid")
        jump = max(_opnorm(np.diff(V, axis=0)).max(), _opnorm(np.diff(V, axis=1)).max())
        if jump >= CONTINUITY_TOL:
            raise ValueError(f"field is not resolved: adjacent nodes differ by {jump:.3f}")
        self.values = V

    # construction ---------------------------------------------------------
    @classmethod
    def from_frame(cls, frame: Callable, box, shape, **kw) -> "ProjectorField":
        x = np.linspace(*box[0], shape[0])
        y = np.linspace(*box[1], shape[1])
        z = x[:, None] + 1j * y[None, :]
        return cls(box, shape, _frame_projector(frame, z, np.conj(z)), frame, **kw)

    @classmethod
    def from_chart(cls, Z: Callable, box, shape, **kw) -> "ProjectorField":
        """Chart field: ``Z(z, w)`` returns (..., N-p, p), holomorphic in z and w = zbar."""
        def frame(z, w):
            Zv = np.asarray(Z(z, w), dtype=complex)
            p = Zv.shape[-1]
            eye = np.broadcast_to(np.eye(p), Zv.shape[:-2] + (p, p))
            return np.concatenate([eye, Zv], axis=-2)
        return cls.from_frame(frame, box, shape, **kw)

    @classmethod
    def constant(cls, P: np.ndarray, box=((-1, 1), (-1, 1)), shape=(16, 16)) -> "ProjectorField":
        P = np.asarray(P, dtype=complex)
        return cls(box, shape, np.broadcast_to(P, tuple(shape) + P.shape).copy())

    @property
    def N(self) -> int:
        return self.values.shape[-1]

    @property
    def p(self) -> int:
        return int(round(np.trace(self.values[0, 0]).real))

    @property
    def h(self) -> tuple:
        return tuple((b - a) / (s - 1) for (a, b), s in zip(self.box, self.shape))

    def coords(self) -> np.ndarray:
        x = np.linspace(*self.box[0], self.shape[0])
        y = np.linspace(*self.box[1], self.shape[1])
        return x[:, None] + 1j * y[None, :]

    # symmetries -----------------------------------------------------------
    def conjugated(self, U: np.ndarray) -> "ProjectorField":
        """Global unitary conjugation P -> U P U^+."""
        U = np.asarray(U, dtype=complex)
        frame = None if self.frame is None else (lambda z, w, f=self.frame: U @ f(z, w))
        return ProjectorField(self.box, self.shape, U @ self.values @ U.conj().T, frame,
                              self.contour_radius, self.contour_nodes)

    def complex_conjugate(self) -> "ProjectorField":
        """Node-wise complex conjugate field; swaps holomorphic and antiholomorphic."""
        frame = None if self.frame is None else (
            lambda z, w, f=self.frame: np.conj(f(np.conj(w), np.conj(z))))
        return ProjectorField(self.box, self.shape, np.conj(self.values), frame,
                              self.contour_radius, self.contour_nodes)

    # serialization --------------------------------------------------------
    def to_grid_field(self) -> GridField:
        return GridField(self.box, self.shape, self.values, None, "projector")

    @classmethod
    def from_grid_field(cls, g: GridField) -> "ProjectorField":
        if g.payload_kind != "projector" or g.ndim != 2:
            raise ValueError("need a two-parameter projector-valued grid field")
        return cls(g.box, g.shape, g.values)

    # derivatives ----------------------------------------------------------
    @property
    def analytic(self) -> bool:
        return self.frame is not None

    @property
    def margin(self) -> int:
        """Nodes excluded at the faces by the derivative stencils."""
        return 0 if self.analytic else 2

    def derivatives(self) -> dict:
        """Dict with P_z, P_zb, P_zzb and d/dzbar Tr(P_z^2) on the full grid."""
        if "d" not in self._cache:
            self._cache["d"] = self._contour() if self.analytic else self._differences()
        return self._cache["d"]

    def _differences(self) -> dict:
        hx, hy = self.h
        V = self.values
        Px = np.gradient(V, hx, axis=0, edge_order=2)
        Py = np.gradient(V, hy, axis=1, edge_order=2)
        Pz, Pzb = 0.5 * (Px - 1j * Py), 0.5 * (Px + 1j * Py)
        lap = np.zeros_like(V)
        lap[1:-1, 1:-1] = ((V[2:, 1:-1] - 2 * V[1:-1, 1:-1] + V[:-2, 1:-1]) / hx ** 2
                           + (V[1:-1, 2:] - 2 * V[1:-1, 1:-1] + V[1:-1, :-2]) / hy ** 2)
        T = np.trace(Pz @ Pz, axis1=-2, axis2=-1)
        Tzb = 0.5 * (np.gradient(T, hx, axis=0, edge_order=2) + 1j * np.gradient(T, hy, axis=1, edge_order=2))
        return {"Pz": Pz, "Pzb": Pzb, "Pzzb": 0.25 * lap, "Tzb": Tzb}

    def _contour(self) -> dict:
        z = self.coords().ravel()
        r, M = self.contour_radius, self.contour_nodes
        e = np.exp(2j * np.pi * np.arange(M) / M)
        out = {k: np.zeros((z.size, self.N, self.N), dtype=complex) for k in ("Pz", "Pzb", "Pzzb")}
        Tzb = np.zeros(z.size, dtype=complex)
        chunk = max(1, 4096 // M)
        for s in range(0, z.size, chunk):
            zc = z[s:s + chunk, None, None]
            # Pkl = P(z + r e_k, w + r e_l), shape (c, M, M, N, N)
            Pkl = _frame_projector(self.frame, zc + r * e[None, :, None], np.conj(zc) + r * e[None, None, :])
            ek = (np.conj(e) / r)[None, :, None, None, None]
            el = (np.conj(e) / r)[None, None, :, None, None]
            # mean over a circle of a holomorphic function is its centre value
            Pz_l = (Pkl * ek).mean(axis=1)  # P_z(z, w + r e_l)
            out["Pz"][s:s + chunk] = Pz_l.mean(axis=1)
            out["Pzb"][s:s + chunk] = (Pkl * el).mean(axis=(1, 2))
            out["Pzzb"][s:s + chunk] = (Pkl * ek * el).mean(axis=(1, 2))
            T_l = np.trace(Pz_l @ Pz_l, axis1=-2, axis2=-1)
            Tzb[s:s + chunk] = (T_l * np.conj(e)[None, :] / r).mean(axis=1)
        res = {k: v.reshape(self.shape + (self.N, self.N)) for k, v in out.items()}
        res["Tzb"] = Tzb.reshape(self.shape)
        return res

    def interior(self, extra: int = 0) -> tuple:
        m = self.margin + extra
        return (slice(m, self.shape[0] - m), slice(m, self.shape[1] - m))


# ---------------------------------------------------------------------------
# diagnostics


def harmonic_residual(f: ProjectorField) -> float:
    """sup |[P, d^2 P / dz dzbar]| over interior nodes."""
    d = f.derivatives()
    s = f.interior()
    P, L = f.values[s], d["Pzzb"][s]
    return float(_opnorm(P @ L - L @ P).max())


@dataclass
class Classification:
    label: str
    degenerate: bool
    holomorphic_residual: float
    antiholomorphic_residual: float
    square_residual: Optional[float]
    tolerance: float


def default_tolerance(f: ProjectorField) -> float:
    """Relative tolerance for derivative identities: 1e-6 with a closure, 50 h^2 otherwise."""
    if f.analytic:
        return 1e-6
    return max(1e-6, 50 * max(f.h) ** 2)


def holomorphy_classify(f: ProjectorField, tol: Optional[float] = None) -> Classification:
    """holomorphic iff [P, P_z] = -P_z, antiholomorphic iff [P, P_z] = +P_z.

    ``tol`` is relative to sup |P_z|.  A constant field passes both tests and
    is reported holomorphic with the degeneracy flag set.
    """
    tol = default_tolerance(f) if tol is None else tol
    s = f.interior()
    P, Pz = f.values[s], f.derivatives()["Pz"][s]
    scale = float(_opnorm(Pz).max())
    scale_small = scale < 1e-12
    if scale_small:
        return Classification("holomorphic", True, 0.0, 0.0, 0.0 if f.p == 1 else None, tol)
    C = P @ Pz - Pz @ P
    rh = float(_opnorm(C + Pz).max()) / scale
    ra = float(_opnorm(C - Pz).max()) / scale
    sq = float(_opnorm(Pz @ Pz).max()) / scale ** 2 if f.p == 1 else None
    holo, anti = rh < tol, ra < tol
    if holo and anti:
        return Classification("holomorphic", True, rh, ra, sq, tol)
    if holo:
        if sq is not None and sq >= tol:
            raise RuntimeError("rank-one holomorphy cross-check failed: (P_z)^2 does not vanish")
        label = "holomorphic"
    elif anti:
        label = "antiholomorphic"
    else:
        label = "neither"
    return Classification(label, False, rh, ra, sq, tol)


@dataclass
class StressResult:
    value: float
    harmonic_residual: float
    precondition_ok: bool


def stress_holomorphy(f: ProjectorField, harmonic_tol: float = 1e-3,
                      trace_differences: bool = False) -> StressResult:
    """sup |d/dzbar Tr(P_z^2)|; the precondition (harmonic input) is reported, not enforced.

    With ``trace_differences`` the trace field Tr(P_z^2) is formed from the
    field's own P_z and its dzbar derivative is taken by central differences.
    """
    d = f.derivatives()
    if trace_differences:
        hx, hy = f.h
        T = np.trace(d["Pz"] @ d["Pz"], axis1=-2, axis2=-1)
        Tzb = 0.5 * (np.gradient(T, hx, axis=0) + 1j * np.gradient(T, hy, axis=1))
        s = f.interior(extra=1)
    else:
        Tzb = d["Tzb"]
        s = f.interior(extra=0 if f.analytic else 1)
    val = float(np.abs(Tzb[s]).max())
    hr = harmonic_residual(f)
    return StressResult(val, hr, hr < harmonic_tol)


def directional_derivative(f: ProjectorField, a: complex, b: complex) -> np.ndarray:
    """D_X P for X = a d/dx + b d/dy."""
    d = f.derivatives()
    Px = d["Pz"] + d["Pzb"]
    Py = 1j * (d["Pz"] - d["Pzb"])
    return a * Px + b * Py


def cubic_identity_residual(f: ProjectorField, direction=(0.5, -0.5j)) -> float:
    """sup |(D_X P)^3 - 1/2 Tr((D_X P)^2) D_X P| for rank one; default X = d/dz."""
    if f.p != 1:
        raise ValueError("cubic identity holds for rank-one projectors only")
    D = directional_derivative(f, *direction)[f.interior()]
    D2 = D @ D
    R = D2 @ D - 0.5 * np.trace(D2, axis1=-2, axis2=-1)[..., None, None] * D
    return float(_opnorm(R).max())


def nilpotency_order(f: ProjectorField, rel_tol: Optional[float] = None) -> int:
    """Smallest k <= N with sup |P_z^k| < rel_tol (sup |P_z|)^k, else N + 1."""
    rel_tol = default_tolerance(f) if rel_tol is None else rel_tol
    Pz = f.derivatives()["Pz"][f.interior()]
    scale = float(_opnorm(Pz).max())
    if scale < 1e-12:
        return 1
    X = Pz
    for k in range(1, f.N + 1):
        if float(_opnorm(X).max()) < rel_tol * scale ** k:
            return k
        X = X @ Pz
    return f.N + 1


@dataclass
class Charge:
    value: float
    boundary_ratio: float
    boundary_ok: bool


def topological_charge(f: ProjectorField, ring: int = 2, boundary_tol: float = 1e-2) -> Charge:
    """(1 / 2 pi i) of the integral of Tr(P dP ^ dP) over the grid (trapezoid rule).

    ``boundary_ok`` is False when sup |dP| on the outer ring of nodes exceeds
    ``boundary_tol`` times its interior maximum.
    """
    d = f.derivatives()
    Px = d["Pz"] + d["Pzb"]
    Py = 1j * (d["Pz"] - d["Pzb"])
    dens = np.trace(f.values @ (Px @ Py - Py @ Px), axis1=-2, axis2=-1)
    x = np.linspace(*f.box[0], f.shape[0])
    y = np.linspace(*f.box[1], f.shape[1])
    total = trapezoid(trapezoid(dens, y, axis=1), x)
    q = total / (2j * np.pi)
    dP = np.sqrt(_opnorm(Px) ** 2 + _opnorm(Py) ** 2)
    mask = np.zeros(f.shape, bool)
    mask[:ring], mask[-ring:], mask[:, :ring], mask[:, -ring:] = True, True, True, True
    ratio = float(dP[mask].max() / max(dP.max(), 1e-300))
    return Charge(float(q.real), ratio, ratio <= boundary_tol)


def energy(f: ProjectorField) -> float:
    """1/2 of the integral of Tr(P_x^2 + P_y^2) over the grid."""
    d = f.derivatives()
    dens = 4 * np.trace(d["Pz"] @ d["Pzb"], axis1=-2, axis2=-1).real
    x = np.linspace(*f.box[0], f.shape[0])
    y = np.linspace(*f.box[1], f.shape[1])
    return float(0.5 * trapezoid(trapezoid(dens, y, axis=1), x))


def decomposition_residual(f: ProjectorField) -> float:
    """sup |P_z - P P_z (1-P) - (1-P) P_z P| from differentiating P^2 = P."""
    s = f.interior()
    P, Pz = f.values[s], f.derivatives()["Pz"][s]
    Q = np.eye(f.N) - P
    return float(_opnorm(Pz - P @ Pz @ Q - Q @ Pz @ P).max())


# ---------------------------------------------------------------------------
# report and fixtures


@dataclass
class SigmaReport:
    name: str
    harmonic_residual: float
    classification: str
    degenerate: bool
    energy: float
    topological_charge: float
    boundary_ok: bool
    nilpotency_order: int
    stress: float

    def to_dict(self) -> dict:
        return asdict(self)


def sigma_report(f: ProjectorField, name: str = "field") -> SigmaReport:
    c = holomorphy_classify(f)
    q = topological_charge(f)
    return SigmaReport(name, harmonic_residual(f), c.label, c.degenerate, energy(f), q.value,
                       q.boundary_ok, nilpotency_order(f), stress_holomorphy(f).value)


def veronese_frame(k: int = 1):
    """Rank-one frame of the k-th Gram-Schmidt curve of z -> [1 : z : z^2] in CP^2.

    k = 0 is holomorphic, k = 2 antiholomorphic and k = 1 is harmonic but neither.
    """
    def v(z, w, order):
        z = np.asarray(z, dtype=complex)
        one = np.ones_like(z)
        rows = [(one, z, z * z), (0 * one, one, 2 * z), (0 * one, 0 * one, 2 * one)][order]
        return np.stack(rows, axis=-1)

    def vbar(z, w, order):
        # conjugate-coefficient curve evaluated at w
        return v(w, z, order)

    def frame(z, w):
        z, w = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(w, dtype=complex))
        f0, f1, f2 = v(z, w, 0), v(z, w, 1), v(z, w, 2)
        g0 = vbar(z, w, 0)
        if k == 0:
            out = f0
        elif k == 1:
            out = f1 - (np.sum(g0 * f1, -1) / np.sum(g0 * f0, -1))[..., None] * f0
        else:
            # orthogonal complement of span{f0, f1}: conj of the cross product of f0, f1 (extended)
            g1 = vbar(z, w, 1)
            out = np.cross(g0, g1)
        return out[..., None]
    return frame


def builtin_fixtures(m: int = 64) -> dict:
    box = ((-1.0, 1.0), (-1.0, 1.0))
    big = ((-16.0, 16.0), (-16.0, 16.0))
    return {
        "cp1-holomorphic": ProjectorField.from_chart(lambda z, w: np.asarray(z)[..., None, None], box, (m, m)),
        "cp1-antiholomorphic": ProjectorField.from_chart(lambda z, w: np.asarray(w)[..., None, None], box, (m, m)),
        "cp1-nonharmonic": ProjectorField.from_chart(
            lambda z, w: (np.asarray(z) + 0.3 * np.asarray(w) ** 2)[..., None, None], box, (m, m)),
        "cp2-veronese-middle": ProjectorField.from_frame(veronese_frame(1), box, (m, m)),
        "cp1-degree-one-large": ProjectorField.from_chart(
            lambda z, w: np.asarray(z)[..., None, None], big, (max(2 * m, 128),) * 2),
        "cp1-degree-two-large": ProjectorField.from_chart(
            lambda z, w: (np.asarray(z) ** 2)[..., None, None], big, (max(2 * m, 128),) * 2),
    }
