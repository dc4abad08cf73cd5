"""Isometries of the model space used by the reflection constructions.

Four kinds are supported: left translations (isometries for every A),
rotations by pi about vertical lines (isometries for every A), and rotations
by pi about horizontal geodesics parallel to the x- or y-axis in the z = 0
leaf, which are isometries exactly when A is antidiagonal.  All of them are
affine maps of the coordinates, so the differential is a constant matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidForModel
from .geometry import GroupPoint, ModelMatrix, exp_at, group_multiply, metric_at, _point

__all__ = [
    "LeftTranslation",
    "VerticalRotation",
    "HorizontalRotationParallelX",
    "HorizontalRotationParallelY",
    "IsometryDescriptor",
    "apply_isometry",
    "isometry_affine",
    "verify_isometry",
]


@dataclass(frozen=True)
class LeftTranslation:
    """Left multiplication by a fixed group element."""

    g: GroupPoint


@dataclass(frozen=True)
class VerticalRotation:
    """Rotation by pi about the vertical line through (x0, y0)."""

    x0: float
    y0: float


@dataclass(frozen=True)
class HorizontalRotationParallelY:
    """Rotation by pi about the geodesic {(x0, t, 0)}; antidiagonal A only."""

    x0: float


@dataclass(frozen=True)
class HorizontalRotationParallelX:
    """Rotation by pi about the geodesic {(t, y0, 0)}; antidiagonal A only."""

    y0: float


IsometryDescriptor = Union[
    LeftTranslation,
    VerticalRotation,
    HorizontalRotationParallelX,
    HorizontalRotationParallelY,
]


def _is_horizontal(iso) -> bool:
    return isinstance(iso, (HorizontalRotationParallelX, HorizontalRotationParallelY))


def isometry_affine(model: ModelMatrix, iso: IsometryDescriptor):
    """The map as (linear part, offset), without validity checks."""
    if isinstance(iso, LeftTranslation):
        lin = np.eye(3)
        lin[:2, :2] = exp_at(model, iso.g.z).array
        return lin, iso.g.array
    if isinstance(iso, VerticalRotation):
        lin = np.diag([-1.0, -1.0, 1.0])
        off = np.array([2.0 * iso.x0, 2.0 * iso.y0, 0.0])
        return lin, off
    if isinstance(iso, HorizontalRotationParallelY):
        lin = np.diag([-1.0, 1.0, -1.0])
        off = np.array([2.0 * iso.x0, 0.0, 0.0])
        return lin, off
    if isinstance(iso, HorizontalRotationParallelX):
        lin = np.diag([1.0, -1.0, -1.0])
        off = np.array([0.0, 2.0 * iso.y0, 0.0])
        return lin, off
    raise TypeError(f"not an isometry descriptor: {iso!r}")


def apply_isometry(model: ModelMatrix, iso: IsometryDescriptor, p):
    """Image point and differential of the isometry at p.

    Horizontal rotations are only isometries when A is antidiagonal; asking
    for one otherwise raises InvalidForModel.
    """
    if _is_horizontal(iso) and not model.antidiagonal:
        raise InvalidForModel(
            "horizontal rotations are isometries only for antidiagonal A"
        )
    lin, off = isometry_affine(model, iso)
    pt = _point(p)
    if isinstance(iso, LeftTranslation):
        image = group_multiply(model, iso.g, pt)
    else:
        image = GroupPoint.from_array(lin @ pt + off)
    return image, lin


def verify_isometry(
    model: ModelMatrix,
    iso: IsometryDescriptor,
    n_samples: int = 100,
    seed: int = 0,
    box: float = 1.5,
) -> float:
    """Max metric defect of the map over random points and unit vectors.

    Applies the raw affine map with no validity check, so an invalid
    combination simply reports a large defect.  The defect at a sample is
    |g(Du, Dv) at the image - g(u, v) at the point| for g-unit u, v.
    """
    rng = np.random.default_rng(seed)
    lin, off = isometry_affine(model, iso)
    worst = 0.0
    for _ in range(n_samples):
        pt = rng.uniform(-box, box, size=3)
        g = metric_at(model, pt).matrix
        u = rng.normal(size=3)
        v = rng.normal(size=3)
        u = u / np.sqrt(u @ g @ u)
        v = v / np.sqrt(v @ g @ v)
        image = lin @ pt + off
        gi = metric_at(model, image).matrix
        defect = abs((lin @ u) @ gi @ (lin @ v) - u @ g @ v)
        worst = max(worst, float(defect))
    return worst
