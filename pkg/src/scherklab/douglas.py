"""Face-area bookkeeping for the annulus barrier argument.

The existence step compares the total area of the retained barrier
faces of a thin prism against the area of the two faces that are left
out.  When the retained total is strictly smaller, an area-minimizing
annulus spanning the two removed boundary loops exists and stays inside
the prism.  Everything here reduces to one-dimensional integrals of the
metric norms of the coordinate directions,

    n_x(z) = |d/dx|,  n_y(z) = |d/dy|,  n_diag(z) = |d/dx - d/dy|,

taken along the z-axis, because every face is a product of a horizontal
segment with a z-interval (or a flat horizontal patch).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import (
    AExceedsBound,
    AssumptionViolated,
    DegenerateTriangle,
    InvalidConfig,
)
from .geometry import ModelMatrix, metric_coeffs
from .surfaces import (
    CENTROID_RULE,
    GraphKernel,
    GraphSurface,
    ImmersedMesh,
    MeshKernel,
)

QUAD_EPSABS = 1e-10


@dataclass(frozen=True)
class DoublyConfig:
    """Prism parameters for the doubly periodic barrier.

    Legs of length a on the coordinate axes, diagonal cuts at distance
    eps from the corner, heights between c0 and c1.
    """

    a: float
    eps: float
    c0: float
    c1: float

    def __post_init__(self):
        vals = (self.a, self.eps, self.c0, self.c1)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidConfig("parameters must be finite")
        if not (self.a > 0 and self.eps > 0):
            raise InvalidConfig("need a > 0 and eps > 0")
        if not (0 < self.c0 < self.c1):
            raise InvalidConfig("need 0 < c0 < c1")


@dataclass(frozen=True)
class SinglyConfig:
    """Prism parameters for the singly periodic barrier.

    A long box of half-width a and length d, cut at distance eps,
    heights between 0 and c0.
    """

    a: float
    eps: float
    c0: float
    d: float

    def __post_init__(self):
        vals = (self.a, self.eps, self.c0, self.d)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidConfig("parameters must be finite")
        if not (self.a > 0 and self.eps > 0 and self.c0 > 0):
            raise InvalidConfig("need a > 0, eps > 0, c0 > 0")
        if not self.d > self.eps:
            raise InvalidConfig("need d > eps")


@dataclass(frozen=True)
class FaceAreaReport:
    """Areas of the prism faces and the resulting comparison margin.

    faces maps descriptive names to areas; removed lists the keys of
    the two faces the annulus is asked to span.  margin is (sum of
    removed areas) - (sum of retained areas); the barrier argument
    applies exactly when margin > 0.
    """

    faces: dict
    removed: tuple
    margin: float

    @property
    def removed_total(self) -> float:
        return sum(self.faces[k] for k in self.removed)

    @property
    def retained_total(self) -> float:
        return sum(v for k, v in self.faces.items() if k not in self.removed)

    @property
    def satisfied(self) -> bool:
        return self.margin > 0


def directional_norms(model: ModelMatrix, z):
    """Metric norms (n_x, n_y, n_diag) of the coordinate directions at height z."""
    gxx, gxy, gyy = metric_coeffs(model, z)
    return np.sqrt(gxx), np.sqrt(gyy), np.sqrt(gxx - 2.0 * gxy + gyy)


def norm_integrals(model: ModelMatrix, z0: float, z1: float):
    """(Ix, Iy, Imix): integrals of the three directional norms over [z0, z1]."""
    if not z1 > z0:
        raise InvalidConfig("need z1 > z0")

    def make(i):
        def f(z):
            return float(directional_norms(model, z)[i])
        return f

    out = []
    for i in range(3):
        val, _ = quad(make(i), z0, z1, epsabs=QUAD_EPSABS, limit=200)
        out.append(val)
    return tuple(out)


def doubly_face_areas(model: ModelMatrix, cfg: DoublyConfig) -> FaceAreaReport:
    """Areas of the six faces of the doubly periodic comparison prism.

    The two legs (walls over the axis segments of length a) are the
    removed faces.  Retained: a short and a long diagonal wall, and two
    flat caps at the top and bottom heights.
    """
    a, eps = cfg.a, cfg.eps
    Ix, Iy, Imix = norm_integrals(model, cfg.c0, cfg.c1)
    cap = a * (a + 4.0 * eps) / 2.0
    faces = {
        "leg_x": a * Ix,
        "leg_y": a * Iy,
        "diag_inner": 2.0 * eps * Imix,
        "diag_outer": (a + 2.0 * eps) * Imix,
        "cap_bottom": cap,
        "cap_top": cap,
    }
    removed = ("leg_x", "leg_y")
    margin = faces["leg_x"] + faces["leg_y"] - (
        faces["diag_inner"] + faces["diag_outer"] + 2.0 * cap
    )
    return FaceAreaReport(faces=faces, removed=removed, margin=margin)


def a_max_doubly(model: ModelMatrix, c0: float, c1: float) -> float:
    """Supremum of leg lengths a for which the margin stays positive as eps -> 0.

    The margin at eps = 0 is a (Ix + Iy - Imix) - a^2, so the bound is
    Ix + Iy - Imix.  May be nonpositive when the diagonal norm
    dominates; callers should treat that as "criterion never holds".
    """
    Ix, Iy, Imix = norm_integrals(model, c0, c1)
    return Ix + Iy - Imix


def epsilon_max_doubly(model: ModelMatrix, a: float, c0: float, c1: float) -> float:
    """Largest eps with positive margin for the given leg length a.

    Solves margin = a (Ix + Iy) - (a + 4 eps)(a + Imix) = 0 for eps.
    """
    Ix, Iy, Imix = norm_integrals(model, c0, c1)
    bound = Ix + Iy - Imix
    if a >= bound:
        raise AExceedsBound(f"a = {a} is not below the admissible bound {bound}")
    return (a / 4.0) * (Ix + Iy) / (a + Imix) - a / 4.0


def epsilon_max_doubly_onesided(model: ModelMatrix, a: float, c0: float, c1: float) -> float:
    """Variant of the eps bound with the x-integral counted twice.

    Replaces Ix + Iy by 2 Ix in the numerator.  For models where
    Iy > Ix this is strictly smaller than the symmetric bound and can
    even go negative while the true margin is still positive; kept for
    side-by-side comparison.
    """
    Ix, Iy, Imix = norm_integrals(model, c0, c1)
    bound = Ix + Iy - Imix
    if a >= bound:
        raise AExceedsBound(f"a = {a} is not below the admissible bound {bound}")
    return (a / 4.0) * (2.0 * Ix) / (a + Imix) - a / 4.0


def singly_face_areas(model: ModelMatrix, cfg: SinglyConfig) -> FaceAreaReport:
    """Areas of the six faces of the singly periodic comparison prism.

    The removed pair are the two long walls over x-segments of length
    d - eps.  Retained: two flat horizontal strips of the same length
    and width a + 2 eps, and two end walls over y-segments.
    """
    a, eps, d = cfg.a, cfg.eps, cfg.d
    Ix, Iy, _ = norm_integrals(model, 0.0, cfg.c0)
    width = a + 2.0 * eps
    faces = {
        "long_x_near": (d - eps) * Ix,
        "long_x_far": (d - eps) * Ix,
        "flat_near": (d - eps) * width,
        "flat_far": (d - eps) * width,
        "end_y_near": width * Iy,
        "end_y_far": width * Iy,
    }
    removed = ("long_x_near", "long_x_far")
    margin = 2.0 * (d - eps) * Ix - 2.0 * (d - eps) * width - 2.0 * width * Iy
    return FaceAreaReport(faces=faces, removed=removed, margin=margin)


def d_min_singly(model: ModelMatrix, a: float, eps: float, c0: float) -> float:
    """Smallest length d giving a positive singly periodic margin.

    Solves (d - eps)(Ix - (a + 2 eps)) = (a + 2 eps) Iy for d.  Needs
    the long-wall norm to beat the strip width, Ix > a + 2 eps.
    """
    Ix, Iy, _ = norm_integrals(model, 0.0, c0)
    width = a + 2.0 * eps
    if width >= Ix:
        raise AssumptionViolated(
            f"a + 2 eps = {width} must stay below the x-integral {Ix}"
        )
    return eps + width * Iy / (Ix - width)


def patch_area(model: ModelMatrix, patch, rule=CENTROID_RULE) -> float:
    """Metric area of a graph or mesh patch; guards degenerate triangles."""
    if isinstance(patch, GraphSurface):
        return GraphKernel(model, patch.tri).area(patch.heights, rule)
    if isinstance(patch, ImmersedMesh):
        kernel = MeshKernel(model, patch.triangles)
        areas = kernel.triangle_areas(patch.vertices, rule)
        if np.any(areas < 1e-14):
            raise DegenerateTriangle("patch contains a vanishing triangle")
        return float(np.sum(areas))
    raise InvalidConfig(f"cannot measure a {type(patch).__name__}")
