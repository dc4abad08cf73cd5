"""Metric semidirect products R^2 x_A R: group law, metric, frames, geodesics.

The model space is R^3 with coordinates (x, y, z) and group law

    (p1, z1) * (p2, z2) = (p1 + e^{z1 A} p2, z1 + z2)

for a fixed real 2x2 matrix A.  The canonical left-invariant metric makes the
frame E1, E2, E3 orthonormal, where the coordinate components of E1 and E2 at
height z are the columns of e^{zA} and E3 = d/dz.  Writing B(z) = e^{-zA},
the coordinate metric at (x, y, z) is the block matrix

    [[ B(z)^T B(z), 0 ],
     [ 0,           1 ]]

so it depends on z alone.  That observation drives every formula below: the
only nonzero metric derivative is d/dz (B^T B) = -B^T (A + A^T) B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFinite, NotPositiveDefinite, StepCountTooSmall

__all__ = [
    "ModelMatrix",
    "GroupPoint",
    "TangentVec",
    "Matrix2",
    "MetricTensor",
    "FrameTriple",
    "KillingField",
    "exp_at",
    "group_multiply",
    "metric_at",
    "metric_coeffs",
    "metric_coeffs_dz",
    "left_frame",
    "christoffel_at",
    "frame_connection",
    "covariant_derivative_frame",
    "geodesic",
    "integrate_geodesic",
]


def _require_finite(values, what="input"):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"non-finite value in {what}")
    return arr


@dataclass(frozen=True)
class ModelMatrix:
    """Entries (a, b; c, d) of the matrix A defining the product."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        _require_finite([self.a, self.b, self.c, self.d], "model matrix")

    @property
    def antidiagonal(self) -> bool:
        return self.a == 0.0 and self.d == 0.0

    @property
    def trace(self) -> float:
        return self.a + self.d

    @property
    def array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    @classmethod
    def euclidean(cls) -> "ModelMatrix":
        return cls(0.0, 0.0, 0.0, 0.0)

    @classmethod
    def heisenberg(cls) -> "ModelMatrix":
        return cls(0.0, 1.0, 0.0, 0.0)

    @classmethod
    def sol(cls) -> "ModelMatrix":
        return cls(0.0, 1.0, 1.0, 0.0)

    @classmethod
    def sol_family(cls, v: float) -> "ModelMatrix":
        """The one-parameter family (0, v; 1/v, 0), normalized so v >= 1."""
        if not (np.isfinite(v) and v >= 1.0):
            raise ValueError(f"family parameter must satisfy v >= 1, got {v}")
        return cls(0.0, float(v), 1.0 / float(v), 0.0)


@dataclass(frozen=True)
class GroupPoint:
    """A point (x, y, z) of the model space."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        _require_finite([self.x, self.y, self.z], "group point")

    @property
    def array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "GroupPoint":
        arr = np.asarray(arr, dtype=float)
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))


def _point(p) -> np.ndarray:
    if isinstance(p, GroupPoint):
        return p.array
    return _require_finite(p, "point")


@dataclass(frozen=True)
class TangentVec:
    """Coordinate components of a tangent vector at a base point."""

    base: GroupPoint
    vx: float
    vy: float
    vz: float

    @property
    def components(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.vz], dtype=float)


@dataclass(frozen=True)
class Matrix2:
    """A 2x2 real matrix, stored entrywise."""

    a11: float
    a12: float
    a21: float
    a22: float

    @property
    def array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "Matrix2":
        arr = np.asarray(arr, dtype=float)
        return cls(float(arr[0, 0]), float(arr[0, 1]), float(arr[1, 0]), float(arr[1, 1]))

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21


@dataclass(frozen=True)
class MetricTensor:
    """The metric as a symmetric 3x3 matrix at a base point."""

    matrix: np.ndarray
    base: GroupPoint

    def inner(self, u, v) -> float:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return float(u @ self.matrix @ v)


@dataclass(frozen=True)
class FrameTriple:
    """The orthonormal left-invariant frame at a point."""

    E1: TangentVec
    E2: TangentVec
    E3: TangentVec


@dataclass(frozen=True)
class KillingField:
    """The right-invariant horizontal field with constant components (cx, cy)."""

    cx: float
    cy: float

    def __post_init__(self):
        _require_finite([self.cx, self.cy], "Killing field")
        if self.cx == 0.0 and self.cy == 0.0:
            raise ValueError("Killing field needs a nonzero direction")

    @property
    def components(self) -> np.ndarray:
        return np.array([self.cx, self.cy, 0.0], dtype=float)


# ---- matrix exponential ----------------------------------------------------


def _exp_series_2x2(M: np.ndarray, cutoff: float = 1e-14) -> np.ndarray:
    """Scaling-and-squaring Taylor series for a general 2x2 matrix."""
    norm = float(np.abs(M).sum())
    s = 0
    if norm > 0.5:
        s = int(math.ceil(math.log2(norm))) + 1
    T = M / (2.0**s)
    out = np.eye(2)
    term = np.eye(2)
    k = 1
    while True:
        term = term @ T / k
        out = out + term
        if float(np.abs(term).max()) < cutoff or k > 60:
            break
        k += 1
    for _ in range(s):
        out = out @ out
    return out


def exp_at(model: ModelMatrix, z: float) -> Matrix2:
    """e^{zA}, in closed form for antidiagonal A and by series otherwise.

    For A = (0, b; c, 0) we have A^2 = bc I, so the exponential splits into
    hyperbolic (bc > 0), polynomial (bc = 0) and trigonometric (bc < 0) cases.
    """
    z = float(_require_finite(z, "height"))
    if model.antidiagonal:
        bc = model.b * model.c
        if bc > 0.0:
            mu = math.sqrt(bc)
            c0 = math.cosh(mu * z)
            s0 = math.sinh(mu * z) / mu
        elif bc < 0.0:
            mu = math.sqrt(-bc)
            c0 = math.cos(mu * z)
            s0 = math.sin(mu * z) / mu
        else:
            c0 = 1.0
            s0 = z
        return Matrix2(c0, model.b * s0, model.c * s0, c0)
    return Matrix2.from_array(_exp_series_2x2(z * model.array))


def _sinhc_signed(w: np.ndarray) -> np.ndarray:
    """sinh(sqrt(w))/sqrt(w) continued through w <= 0 as sin(sqrt(-w))/sqrt(-w)."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    small = np.abs(w) < 1e-8
    pos = (w > 0) & ~small
    neg = (w < 0) & ~small
    u = np.sqrt(np.abs(w[pos])) if np.any(pos) else None
    if u is not None:
        out[pos] = np.sinh(u) / u
    v = np.sqrt(np.abs(w[neg])) if np.any(neg) else None
    if v is not None:
        out[neg] = np.sin(v) / v
    ws = w[small]
    out[small] = 1.0 + ws / 6.0 + ws * ws / 120.0
    return out


def _coshc_signed(w: np.ndarray) -> np.ndarray:
    """cosh(sqrt(w)) continued through w <= 0 as cos(sqrt(-w))."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    pos = w >= 0
    out[pos] = np.cosh(np.sqrt(w[pos]))
    out[~pos] = np.cos(np.sqrt(-w[~pos]))
    return out


def exp_batch(model: ModelMatrix, z) -> np.ndarray:
    """e^{zA} for an array of heights z, shape (..., 2, 2).

    Uses the trace-shifted closed form: with t = tr(A)/2, N = A - tI and
    D = t^2 - det(A), e^{zA} = e^{tz} (coshc(D z^2) I + z sinhc(D z^2) N).
    Agrees with exp_at to machine precision; exists so that mesh-sized
    batches of metric coefficients do not pay a per-triangle Python loop.
    """
    z = np.asarray(z, dtype=float)
    t = 0.5 * model.trace
    A = model.array
    N = A - t * np.eye(2)
    disc = t * t - (model.a * model.d - model.b * model.c)
    w = disc * z * z
    ch = _coshc_signed(w)
    sh = z * _sinhc_signed(w)
    scale = np.exp(t * z)
    out = np.empty(z.shape + (2, 2), dtype=float)
    out[..., 0, 0] = scale * (ch + sh * N[0, 0])
    out[..., 0, 1] = scale * (sh * N[0, 1])
    out[..., 1, 0] = scale * (sh * N[1, 0])
    out[..., 1, 1] = scale * (ch + sh * N[1, 1])
    return out


# ---- group law and metric --------------------------------------------------


def group_multiply(model: ModelMatrix, g1, g2) -> GroupPoint:
    """Product (p1 + e^{z1 A} p2, z1 + z2) of two group elements."""
    p1 = _point(g1)
    p2 = _point(g2)
    E = exp_at(model, p1[2]).array
    xy = p1[:2] + E @ p2[:2]
    return GroupPoint(float(xy[0]), float(xy[1]), float(p1[2] + p2[2]))


def metric_coeffs(model: ModelMatrix, z):
    """Horizontal metric coefficients (g_xx, g_xy, g_yy) at heights z."""
    B = exp_batch(model, -np.asarray(z, dtype=float))
    gxx = B[..., 0, 0] ** 2 + B[..., 1, 0] ** 2
    gxy = B[..., 0, 0] * B[..., 0, 1] + B[..., 1, 0] * B[..., 1, 1]
    gyy = B[..., 0, 1] ** 2 + B[..., 1, 1] ** 2
    return gxx, gxy, gyy


def metric_coeffs_dz(model: ModelMatrix, z):
    """d/dz of the horizontal coefficients, from (B^T B)' = -B^T (A + A^T) B."""
    B = exp_batch(model, -np.asarray(z, dtype=float))
    S = model.array + model.array.T
    SB = np.einsum("rc,...cs->...rs", S, B)
    M = -np.einsum("...cr,...cs->...rs", B, SB)
    return M[..., 0, 0], M[..., 0, 1], M[..., 1, 1]


def metric_at(model: ModelMatrix, p) -> MetricTensor:
    """The coordinate metric at a point, block diagonal with g_zz = 1."""
    pt = _point(p)
    gxx, gxy, gyy = metric_coeffs(model, pt[2])
    g = np.array(
        [
            [float(gxx), float(gxy), 0.0],
            [float(gxy), float(gyy), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    if not (g[0, 0] > 0.0 and g[0, 0] * g[1, 1] - g[0, 1] ** 2 > 0.0):
        raise NotPositiveDefinite(f"metric degenerate at z={pt[2]}")
    return MetricTensor(matrix=g, base=GroupPoint.from_array(pt))


def left_frame(model: ModelMatrix, p) -> FrameTriple:
    """The orthonormal frame at p; E1, E2 components are columns of e^{zA}."""
    pt = _point(p)
    base = GroupPoint.from_array(pt)
    E = exp_at(model, pt[2])
    return FrameTriple(
        E1=TangentVec(base, E.a11, E.a21, 0.0),
        E2=TangentVec(base, E.a12, E.a22, 0.0),
        E3=TangentVec(base, 0.0, 0.0, 1.0),
    )


# ---- connection ------------------------------------------------------------


def christoffel_at(model: ModelMatrix, p) -> np.ndarray:
    """Coordinate Christoffel symbols Gamma[k, i, j] at p.

    The metric depends on z alone, so only the d/dz terms of the standard
    formula survive, and they are available in closed form.
    """
    pt = _point(p)
    z = pt[2]
    gxx, gxy, gyy = (float(v) for v in metric_coeffs(model, z))
    dxx, dxy, dyy = (float(v) for v in metric_coeffs_dz(model, z))
    det2 = gxx * gyy - gxy * gxy
    if det2 <= 0.0:
        raise NotPositiveDefinite(f"metric degenerate at z={z}")
    ginv = np.array(
        [
            [gyy / det2, -gxy / det2, 0.0],
            [-gxy / det2, gxx / det2, 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    dg = np.zeros((3, 3, 3))
    dg[2, :2, :2] = [[dxx, dxy], [dxy, dyy]]
    gamma = 0.5 * (
        np.einsum("kl,ijl->kij", ginv, dg)
        + np.einsum("kl,jil->kij", ginv, dg)
        - np.einsum("kl,lij->kij", ginv, dg)
    )
    return gamma


def frame_connection(model: ModelMatrix) -> np.ndarray:
    """Frame components conn[i, j, :] of the covariant derivative of Ej along Ei.

    These are constant in the left-invariant frame and depend only on the
    entries of A.  Returned with index order (direction, field, component).
    """
    a, b, c, d = model.a, model.b, model.c, model.d
    m = 0.5 * (b + c)
    w = 0.5 * (c - b)
    conn = np.zeros((3, 3, 3))
    conn[0, 0] = (0.0, 0.0, a)
    conn[0, 1] = (0.0, 0.0, m)
    conn[0, 2] = (-a, -m, 0.0)
    conn[1, 0] = (0.0, 0.0, m)
    conn[1, 1] = (0.0, 0.0, d)
    conn[1, 2] = (-m, -d, 0.0)
    conn[2, 0] = (0.0, w, 0.0)
    conn[2, 1] = (-w, 0.0, 0.0)
    return conn


def covariant_derivative_frame(model: ModelMatrix, p) -> np.ndarray:
    """Frame components of the derivatives of Ej along Ei, via christoffel_at.

    Independent route to the same quantities as frame_connection: differentiate
    the frame fields in coordinates, add the Christoffel terms, and express the
    result back in the frame.  Index order matches frame_connection.
    """
    pt = _point(p)
    z = pt[2]
    gamma = christoffel_at(model, pt)
    P = exp_at(model, z).array
    dP = model.array @ P
    # Coordinate components of the frame fields and their z-derivatives.
    E = np.zeros((3, 3))
    E[:2, :2] = P
    E[2, 2] = 1.0
    dE = np.zeros((3, 3))
    dE[:2, :2] = dP
    Binv = np.linalg.inv(P)
    out = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            v = np.einsum("kab,a,b->k", gamma, E[:, i], E[:, j])
            if i == 2:
                v = v + dE[:, j]
            out[i, j, :2] = Binv @ v[:2]
            out[i, j, 2] = v[2]
    return out


# ---- geodesics -------------------------------------------------------------


def _geodesic_rhs(model: ModelMatrix, pos: np.ndarray, vel: np.ndarray):
    gamma = christoffel_at(model, pos)
    acc = -np.einsum("kij,i,j->k", gamma, vel, vel)
    return vel, acc


def integrate_geodesic(model: ModelMatrix, p0, v0, T: float, n: int):
    """Fixed-step RK4 for the geodesic equation; returns (positions, velocities)."""
    if n < 2:
        raise StepCountTooSmall(f"need at least 2 steps, got {n}")
    pos = _point(p0).copy()
    vel = v0.components.copy() if isinstance(v0, TangentVec) else _require_finite(v0, "velocity").copy()
    h = float(T) / n
    positions = np.empty((n + 1, 3))
    velocities = np.empty((n + 1, 3))
    positions[0] = pos
    velocities[0] = vel
    for k in range(n):
        k1p, k1v = _geodesic_rhs(model, pos, vel)
        k2p, k2v = _geodesic_rhs(model, pos + 0.5 * h * k1p, vel + 0.5 * h * k1v)
        k3p, k3v = _geodesic_rhs(model, pos + 0.5 * h * k2p, vel + 0.5 * h * k2v)
        k4p, k4v = _geodesic_rhs(model, pos + h * k3p, vel + h * k3v)
        pos = pos + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        vel = vel + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        positions[k + 1] = pos
        velocities[k + 1] = vel
    _require_finite(positions, "geodesic positions")
    return positions, velocities


def geodesic(model: ModelMatrix, p0, v0, T: float, n: int):
    """Geodesic through p0 with initial velocity v0, as a list of points."""
    positions, _ = integrate_geodesic(model, p0, v0, T, n)
    return [GroupPoint.from_array(q) for q in positions]
