"""Planar polygon domains, boundary height data, and quality triangulation.

Domains are simple CCW polygons with one height assignment per edge
(constant, affine in the edge parameter, or a callable of (x, y)).  The
mesher places boundary points with spacing <= h, fills the interior with
a hexagonal lattice, Delaunay-triangulates, and enforces quality gates
(min angle >= 20 degrees, max edge <= 1.5 h, boundary conformity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.spatial import Delaunay

from .errors import InvalidConfig, InvalidPreset, MeshFailure

# Per-edge height: constant, (start, end) affine in the edge parameter,
# or f(x, y) evaluated along the edge.
HeightSpec = Union[float, tuple, Callable[[float, float], float]]


@dataclass(frozen=True)
class DomainPolygon:
    """Simple closed CCW polygon in the z = 0 leaf with per-edge heights."""

    vertices: np.ndarray
    edge_heights: tuple

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
            raise InvalidConfig("polygon needs at least 3 planar vertices")
        if not np.all(np.isfinite(verts)):
            raise InvalidConfig("polygon vertices must be finite")
        object.__setattr__(self, "vertices", verts)
        if len(self.edge_heights) != verts.shape[0]:
            raise InvalidConfig("need exactly one height spec per edge")
        if _signed_area(verts) <= 0.0:
            raise InvalidConfig("polygon must be CCW with positive area")
        if _self_intersects(verts):
            raise InvalidConfig("polygon must be simple")

    @property
    def n_edges(self) -> int:
        return self.vertices.shape[0]

    def edge(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        v = self.vertices
        return v[i], v[(i + 1) % v.shape[0]]


@dataclass(frozen=True)
class ContourSpec:
    """Named boundary-contour presets, or a custom polygon."""

    kind: str
    a: float = float("nan")
    c: float = float("nan")
    polygon: DomainPolygon | None = None

    @classmethod
    def doubly(cls, a: float, c: float) -> "ContourSpec":
        return cls(kind="doubly", a=a, c=c)

    @classmethod
    def singly(cls, a: float, c: float) -> "ContourSpec":
        return cls(kind="singly", a=a, c=c)

    @classmethod
    def custom(cls, polygon: DomainPolygon) -> "ContourSpec":
        return cls(kind="custom", polygon=polygon)


def resolve_contour(spec: ContourSpec) -> DomainPolygon:
    """Expand a contour preset to a DomainPolygon with heights.

    The doubly preset is the triangle (0,0),(a,0),(0,a): both legs carry
    height 0, the hypotenuse carries height c (its two vertical sides
    project to the corner points).  The singly preset is the rectangle
    [0,c] x [0,a]: height 0 on y=0, x=c and y=a, height c on x=0.
    """
    if spec.kind == "custom":
        if spec.polygon is None:
            raise InvalidPreset("custom contour requires a polygon")
        return spec.polygon
    a, c = spec.a, spec.c
    if not (math.isfinite(a) and math.isfinite(c) and a > 0 and c > 0):
        raise InvalidPreset(f"contour preset needs a > 0 and c > 0, got a={a}, c={c}")
    if spec.kind == "doubly":
        verts = np.array([[0.0, 0.0], [a, 0.0], [0.0, a]])
        return DomainPolygon(verts, (0.0, c, 0.0))
    if spec.kind == "singly":
        verts = np.array([[0.0, 0.0], [c, 0.0], [c, a], [0.0, a]])
        return DomainPolygon(verts, (0.0, 0.0, 0.0, c))
    raise InvalidPreset(f"unknown contour kind {spec.kind!r}")


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Conforming triangle mesh of a DomainPolygon.

    Boundary vertices keep a tag recording where on the polygon they sit
    (("corner", j) or ("edge", i, t)) so the same mesh can be re-labeled
    with heights from another domain of identical geometry.
    """

    vertices: np.ndarray          # (n, 2)
    triangles: np.ndarray         # (m, 3) CCW
    is_boundary: np.ndarray       # (n,) bool
    boundary_heights: np.ndarray  # (n,) float, NaN at interior vertices
    boundary_tags: tuple          # per vertex, None at interior vertices
    h: float

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]


def _signed_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p, q, r, s) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(p, q, r), orient(p, q, s)
    d3, d4 = orient(r, s, p), orient(r, s, q)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _self_intersects(verts: np.ndarray) -> bool:
    k = verts.shape[0]
    for i in range(k):
        for j in range(i + 1, k):
            if j == i or (j + 1) % k == i or (i + 1) % k == j:
                continue  # shared endpoint
            if _segments_cross(verts[i], verts[(i + 1) % k], verts[j], verts[(j + 1) % k]):
                return True
    return False


def _inside_polygon(poly: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Even-odd crossing test, vectorized over pts."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(pts.shape[0], dtype=bool)
    k = poly.shape[0]
    for i in range(k):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % k]
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < np.where(crosses, xint, np.inf))
    return inside


def _dist_to_boundary(poly: np.ndarray, pts: np.ndarray) -> np.ndarray:
    k = poly.shape[0]
    best = np.full(pts.shape[0], np.inf)
    for i in range(k):
        p0 = poly[i]
        d = poly[(i + 1) % k] - p0
        L2 = float(d @ d)
        t = np.clip(((pts - p0) @ d) / L2, 0.0, 1.0)
        foot = p0[None, :] + t[:, None] * d[None, :]
        best = np.minimum(best, np.linalg.norm(pts - foot, axis=1))
    return best


def _eval_edge_height(domain: DomainPolygon, i: int, t: float) -> float:
    spec = domain.edge_heights[i]
    p0, p1 = domain.edge(i)
    if callable(spec):
        x, y = p0 + t * (p1 - p0)
        return float(spec(float(x), float(y)))
    if isinstance(spec, tuple):
        h0, h1 = spec
        return float(h0 + t * (h1 - h0))
    return float(spec)


def _boundary_height(domain: DomainPolygon, tag) -> float:
    kind = tag[0]
    if kind == "corner":
        j = tag[1]
        k = domain.n_edges
        # Where adjacent edges disagree the corner takes the arithmetic
        # mean; the jump is carried by a vertical contour side.
        h_in = _eval_edge_height(domain, (j - 1) % k, 1.0)
        h_out = _eval_edge_height(domain, j, 0.0)
        return 0.5 * (h_in + h_out)
    _, i, t = tag
    return _eval_edge_height(domain, i, t)


def _boundary_points(domain: DomainPolygon, h: float):
    pts, tags = [], []
    for i in range(domain.n_edges):
        p0, p1 = domain.edge(i)
        L = float(np.linalg.norm(p1 - p0))
        n = max(1, int(math.ceil(L / h - 1e-9)))
        pts.append(p0)
        tags.append(("corner", i))
        for j in range(1, n):
            t = j / n
            pts.append(p0 + t * (p1 - p0))
            tags.append(("edge", i, t))
    return np.array(pts), tags


def _hex_lattice(domain: DomainPolygon, spacing: float, margin: float) -> np.ndarray:
    """Hexagonal point lattice inside the polygon, margin away from it."""
    verts = domain.vertices
    xmin, ymin = verts.min(axis=0)
    xmax, ymax = verts.max(axis=0)
    row_h = spacing * math.sqrt(3.0) / 2.0
    rows = []
    n_rows = int(math.ceil((ymax - ymin) / row_h)) + 1
    for r in range(n_rows):
        y = ymin + (r + 0.5) * row_h
        if y > ymax:
            break
        x0 = xmin + (0.5 * spacing if r % 2 else spacing * 0.25)
        xs = np.arange(x0, xmax, spacing)
        if xs.size:
            rows.append(np.column_stack([xs, np.full(xs.size, y)]))
    if not rows:
        return np.zeros((0, 2))
    pts = np.vstack(rows)
    ok = _inside_polygon(verts, pts)
    pts = pts[ok]
    if pts.shape[0]:
        pts = pts[_dist_to_boundary(verts, pts) >= margin]
    return pts


def _triangle_min_angles(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    p0, p1, p2 = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    a = np.linalg.norm(p1 - p2, axis=1)
    b = np.linalg.norm(p0 - p2, axis=1)
    c = np.linalg.norm(p0 - p1, axis=1)
    angles = []
    for opp, e1, e2 in ((a, b, c), (b, a, c), (c, a, b)):
        cosv = np.clip((e1**2 + e2**2 - opp**2) / (2 * e1 * e2), -1.0, 1.0)
        angles.append(np.degrees(np.arccos(cosv)))
    return np.min(angles, axis=0)


def _build(domain: DomainPolygon, bpts: np.ndarray, ipts: np.ndarray):
    allpts = np.vstack([bpts, ipts]) if ipts.shape[0] else bpts
    tris = Delaunay(allpts).simplices
    cent = allpts[tris].mean(axis=1)
    tris = tris[_inside_polygon(domain.vertices, cent)]
    return allpts, tris


def _smooth_interior(allpts: np.ndarray, tris: np.ndarray, n_b: int) -> np.ndarray:
    """One pass of neighbor-average smoothing; boundary points stay put."""
    nbr_sum = np.zeros_like(allpts)
    nbr_cnt = np.zeros(allpts.shape[0])
    for u, v in ((0, 1), (1, 2), (2, 0)):
        np.add.at(nbr_sum, tris[:, u], allpts[tris[:, v]])
        np.add.at(nbr_cnt, tris[:, u], 1.0)
        np.add.at(nbr_sum, tris[:, v], allpts[tris[:, u]])
        np.add.at(nbr_cnt, tris[:, v], 1.0)
    ok = nbr_cnt > 0
    tgt = np.where(ok[:, None], nbr_sum / np.maximum(nbr_cnt, 1.0)[:, None], allpts)
    return tgt[n_b:]


def _long_edge_midpoints(domain, allpts, tris, limit, margin):
    seen = set()
    mids = []
    for u, v in ((0, 1), (1, 2), (2, 0)):
        i, j = tris[:, u], tris[:, v]
        L = np.linalg.norm(allpts[i] - allpts[j], axis=1)
        for k in np.nonzero(L > limit)[0]:
            key = (min(i[k], j[k]), max(i[k], j[k]))
            if key not in seen:
                seen.add(key)
                mids.append(0.5 * (allpts[i[k]] + allpts[j[k]]))
    if not mids:
        return np.zeros((0, 2))
    mids = np.array(mids)
    ok = _inside_polygon(domain.vertices, mids)
    mids = mids[ok]
    if mids.shape[0]:
        mids = mids[_dist_to_boundary(domain.vertices, mids) >= margin]
    return mids


def _attempt(domain: DomainPolygon, h: float, keep: float, scale: float):
    bpts, tags = _boundary_points(domain, h)
    n_b = bpts.shape[0]
    ipts = _hex_lattice(domain, h * scale, keep * h)
    for _ in range(3):
        allpts, tris = _build(domain, bpts, ipts)
        if tris.shape[0] == 0:
            return None
        ipts = _smooth_interior(allpts, tris, n_b)
    # Delaunay refinement: split edges that would break the 1.5h bound
    # (they appear in acute corner fans where the lattice leaves a gap).
    for _ in range(8):
        allpts, tris = _build(domain, bpts, ipts)
        mids = _long_edge_midpoints(domain, allpts, tris, 1.45 * h, 0.35 * h)
        if mids.shape[0] == 0:
            break
        ipts = np.vstack([ipts, mids])
        allpts, tris = _build(domain, bpts, ipts)
        ipts = _smooth_interior(allpts, tris, n_b)
    allpts, tris = _build(domain, bpts, ipts)
    if tris.shape[0] == 0:
        return None

    # enforce CCW orientation
    d1 = allpts[tris[:, 1]] - allpts[tris[:, 0]]
    d2 = allpts[tris[:, 2]] - allpts[tris[:, 0]]
    flip = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]

    # drop orphaned points (none expected for convex domains)
    used = np.zeros(allpts.shape[0], dtype=bool)
    used[tris.ravel()] = True
    if not used[:n_b].all():
        return None
    if not used.all():
        remap = -np.ones(allpts.shape[0], dtype=int)
        remap[used] = np.arange(int(used.sum()))
        allpts = allpts[used]
        tris = remap[tris]

    # boundary conformity: every consecutive boundary pair must be a mesh edge
    edges = set()
    for t in tris:
        for u, v in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            edges.add((min(u, v), max(u, v)))
    for i in range(n_b):
        j = (i + 1) % n_b
        if (min(i, j), max(i, j)) not in edges:
            return None

    if _triangle_min_angles(allpts, tris).min() < 20.0:
        return None
    elens = [
        np.linalg.norm(allpts[tris[:, u]] - allpts[tris[:, v]], axis=1)
        for u, v in ((0, 1), (1, 2), (2, 0))
    ]
    if max(float(e.max()) for e in elens) > 1.5 * h:
        return None

    n = allpts.shape[0]
    is_b = np.zeros(n, dtype=bool)
    is_b[:n_b] = True
    heights = np.full(n, np.nan)
    all_tags = [None] * n
    for i, tag in enumerate(tags):
        heights[i] = _boundary_height(domain, tag)
        all_tags[i] = tag
    return Triangulation(
        vertices=allpts,
        triangles=np.ascontiguousarray(tris),
        is_boundary=is_b,
        boundary_heights=heights,
        boundary_tags=tuple(all_tags),
        h=h,
    )


def triangulate(domain: DomainPolygon, h: float) -> Triangulation:
    """Mesh the domain at target edge length h.

    Raises MeshFailure when h is not below half the shortest polygon
    edge, or when no lattice configuration produces a conforming mesh
    with min angle >= 20 degrees and max edge <= 1.5 h.
    """
    if not (h > 0 and math.isfinite(h)):
        raise MeshFailure(f"invalid target edge length h={h}")
    shortest = min(
        float(np.linalg.norm(domain.edge(i)[1] - domain.edge(i)[0]))
        for i in range(domain.n_edges)
    )
    if h >= 0.5 * shortest:
        raise MeshFailure(f"h={h} must be below half the shortest edge ({shortest})")
    for keep, scale in ((0.45, 0.92), (0.55, 0.85), (0.5, 1.0)):
        tri = _attempt(domain, h, keep, scale)
        if tri is not None:
            return tri
    raise MeshFailure("could not reach quality bounds (min angle 20, max edge 1.5h)")


def reassign_heights(tri: Triangulation, domain: DomainPolygon) -> Triangulation:
    """Relabel boundary heights from a domain with identical geometry.

    Used when only the height data changes (e.g. the same triangle with
    a taller hypotenuse): the triangulation is reused so solutions on
    the two domains share vertices one-to-one.
    """
    for tag in tri.boundary_tags:
        if tag is not None and tag[0] == "corner" and tag[1] >= domain.n_edges:
            raise InvalidConfig("domain does not match triangulation tags")
    heights = tri.boundary_heights.copy()
    for i, tag in enumerate(tri.boundary_tags):
        if tag is not None:
            heights[i] = _boundary_height(domain, tag)
    return Triangulation(
        vertices=tri.vertices,
        triangles=tri.triangles,
        is_boundary=tri.is_boundary,
        boundary_heights=heights,
        boundary_tags=tri.boundary_tags,
        h=tri.h,
    )
