"""Reflection-generated periodic surfaces.

A solved fundamental piece extends to a complete surface by pi-rotations
about horizontal boundary lines in the z = 0 leaf and about vertical lines
through corner points of its domain.  Two vertical rotations compose to a
horizontal translation, so the extended surface is invariant under an
explicit translation lattice.  The builders here reflect the piece into a
cell once and then stamp out translated copies, which produces the same
vertex set as the recursive rotation picture while keeping the weld
bookkeeping linear in the number of copies.

The doubly periodic assembly starts from a graph over the right triangle
with legs of length a on the coordinate axes, reflects it across both
axes into a diamond, joins the diamond to its rotated neighbor at the two
corner pinch vertices, and translates the pair over the lattice spanned
by (-2a, 2a, 0) and (2a, 2a, 0); the result sits over a checkerboard of
diamonds.  The singly periodic assembly doubles a rectangle graph with
one raised edge across the x-axis, joins the mirror column through the
pinch pair on the z-axis, and stacks copies with period (0, 2a, 0).

Where the continuum surfaces contain vertical segments the discrete ones
meet only at isolated pinch vertices: those keep their boundary flag, so
curvature diagnostics skip them automatically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidConfig, InvalidForModel, WeldFailure
from .geometry import GroupPoint, ModelMatrix, exp_at, _point
from .geometry import metric_at
from .isometry import (
    HorizontalRotationParallelX,
    HorizontalRotationParallelY,
    IsometryDescriptor,
    VerticalRotation,
    _is_horizontal,
    isometry_affine,
)
from .plateau import mesh_mean_curvature
from .surfaces import GraphSurface, ImmersedMesh, lift, weld_meshes

__all__ = [
    "WELD_TOL",
    "ReflectionAxis",
    "PeriodicAssembly",
    "graph_to_mesh",
    "transform_mesh",
    "reflect_mesh",
    "build_doubly",
    "build_singly",
    "periodicity_defect",
    "seam_curvature",
]

# reflections are exact affine maps, so any mismatch at a weld is pure
# floating point noise; 1e-9 is far above that and far below any edge length
WELD_TOL = 1e-9


@dataclass(frozen=True)
class ReflectionAxis:
    """A line fixed by one of the pi-rotations.

    kind is "vertical" for the vertical line through (x0, y0), or
    "horizontal_x" / "horizontal_y" for the lines {(t, y0, 0)} and
    {(x0, t, 0)} in the z = 0 leaf.  The horizontal kinds are only valid
    for antidiagonal model matrices.
    """

    kind: str
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("vertical", "horizontal_x", "horizontal_y"):
            raise InvalidConfig(f"unknown axis kind {self.kind!r}")

    @classmethod
    def vertical_line(cls, x0: float, y0: float) -> "ReflectionAxis":
        return cls(kind="vertical", x0=x0, y0=y0)

    @classmethod
    def horizontal_parallel_x(cls, y0: float) -> "ReflectionAxis":
        return cls(kind="horizontal_x", y0=y0)

    @classmethod
    def horizontal_parallel_y(cls, x0: float) -> "ReflectionAxis":
        return cls(kind="horizontal_y", x0=x0)

    def rotation(self) -> IsometryDescriptor:
        if self.kind == "vertical":
            return VerticalRotation(self.x0, self.y0)
        if self.kind == "horizontal_x":
            return HorizontalRotationParallelX(self.y0)
        return HorizontalRotationParallelY(self.x0)

    def contains(self, verts: np.ndarray, tol: float = WELD_TOL) -> np.ndarray:
        """Mask of vertices lying on the axis within tol (per coordinate)."""
        x, y, z = verts[:, 0], verts[:, 1], verts[:, 2]
        if self.kind == "vertical":
            return (np.abs(x - self.x0) <= tol) & (np.abs(y - self.y0) <= tol)
        if self.kind == "horizontal_x":
            return (np.abs(y - self.y0) <= tol) & (np.abs(z) <= tol)
        return (np.abs(x - self.x0) <= tol) & (np.abs(z) <= tol)

    def snap(self, verts: np.ndarray, mask: np.ndarray) -> np.ndarray:
        """Copy of verts with the masked rows moved exactly onto the axis."""
        out = verts.copy()
        if self.kind == "vertical":
            out[mask, 0] = self.x0
            out[mask, 1] = self.y0
        elif self.kind == "horizontal_x":
            out[mask, 1] = self.y0
            out[mask, 2] = 0.0
        else:
            out[mask, 0] = self.x0
            out[mask, 2] = 0.0
        return out


@dataclass(frozen=True)
class PeriodicAssembly:
    """A welded union of reflected copies plus its translation data.

    central_vertices indexes the first cell inside mesh (weld keeps
    first-argument indices, so they stay valid after every later weld).
    seam_vertices are the interior vertices in the z = 0 leaf, i.e. the
    welded reflection lines of all copies.  weld_log records the number
    of vertices merged at each lattice weld, in construction order.
    pinch_columns holds the xy positions of the vertical rotation axes
    where the discrete surface pinches; pinch_margin is the radius of
    the band around them that curvature diagnostics skip.
    """

    mesh: ImmersedMesh
    generators: tuple
    copy_count: int
    central_vertices: np.ndarray
    seam_vertices: np.ndarray
    weld_log: tuple
    pinch_columns: np.ndarray
    pinch_margin: float


def graph_to_mesh(surf: GraphSurface) -> ImmersedMesh:
    """Lift a graph into group coordinates, keeping connectivity and flags."""
    return lift(surf)


def transform_mesh(
    model: ModelMatrix,
    mesh: ImmersedMesh,
    iso: IsometryDescriptor,
    flip_orientation: bool = False,
) -> ImmersedMesh:
    """Image of a mesh under an isometry, as a new mesh.

    flip_orientation reverses every triangle; a reflection about a
    horizontal line turns the graph orientation over, so gluing the image
    back along the axis needs the flip for coherent winding.
    """
    if _is_horizontal(iso) and not model.antidiagonal:
        raise InvalidForModel(
            "horizontal rotations are isometries only for antidiagonal A"
        )
    lin, off = isometry_affine(model, iso)
    verts = mesh.vertices @ lin.T + off
    tris = mesh.triangles[:, ::-1] if flip_orientation else mesh.triangles
    return ImmersedMesh(verts, tris.copy(), mesh.is_boundary.copy())


def reflect_mesh(model: ModelMatrix, mesh: ImmersedMesh, axis: ReflectionAxis) -> ImmersedMesh:
    """Double a mesh across a rotation axis meeting its boundary.

    Boundary vertices on the axis are snapped exactly onto it, the
    rotated image is appended with reversed winding, and the snapped
    vertices (fixed points of the rotation) are welded to their images.
    Raises WeldFailure when the boundary misses the axis or the weld
    merges anything beyond the fixed points.
    """
    iso = axis.rotation()
    if _is_horizontal(iso) and not model.antidiagonal:
        raise InvalidForModel(
            "horizontal rotations are isometries only for antidiagonal A"
        )
    on_axis = mesh.is_boundary & axis.contains(mesh.vertices)
    n_axis = int(on_axis.sum())
    if n_axis == 0:
        raise WeldFailure("no boundary vertex lies on the reflection axis")
    base = ImmersedMesh(
        axis.snap(mesh.vertices, on_axis),
        mesh.triangles.copy(),
        mesh.is_boundary.copy(),
    )
    image = transform_mesh(model, base, iso, flip_orientation=True)
    welded, _, _, n_merged = weld_meshes(base, image, WELD_TOL)
    if n_merged != n_axis:
        raise WeldFailure(
            f"reflection weld merged {n_merged} vertices, expected {n_axis} on the axis"
        )
    return welded


# ---------------------------------------------------------------------------
# doubly periodic assembly


def _doubly_cell_order(copies: int) -> list:
    # grow the tiling in square blocks so every new cell touches the union
    order = [(0, 0)]
    m = 1
    while len(order) < copies:
        for k in range(m):
            order.append((m, k))
            order.append((k, m))
        order.append((m, m))
        m += 1
    return order[:copies]


def _cell_diamonds(i: int, j: int) -> tuple:
    # cell (i, j) covers two adjacent diamonds of the checkerboard; in
    # diamond grid coordinates (center = 2a * (m, n)) they are:
    return ((j - i, i + j), (j - i + 1, i + j))


def build_doubly(model: ModelMatrix, piece: GraphSurface, copies: int) -> PeriodicAssembly:
    """Assemble the doubly periodic surface from a solved triangle piece.

    The piece must be a graph over the right triangle with legs of length
    a on the positive coordinate axes (height 0 on the legs).  copies
    counts lattice cells, each cell being two diamonds joined at a pinch;
    cells are placed in block order and welded at their shared corner
    pinch vertices.  Capped at 36 cells (6 per lattice direction).
    """
    V2 = piece.tri.vertices
    a = float(V2[:, 0].max())
    if not (a > 0 and abs(float(V2[:, 1].max()) - a) <= 1e-9 * max(1.0, a)):
        raise InvalidConfig("piece domain is not the axis-legged right triangle")
    if float(V2.min()) < -1e-9:
        raise InvalidConfig("piece domain must sit in the first quadrant")
    copies = int(copies)
    if not 1 <= copies <= 36:
        raise InvalidConfig("copies must be between 1 and 36")

    half = reflect_mesh(model, graph_to_mesh(piece), ReflectionAxis.horizontal_parallel_x(0.0))
    diamond = reflect_mesh(model, half, ReflectionAxis.horizontal_parallel_y(0.0))
    cell = reflect_mesh(model, diamond, ReflectionAxis.vertical_line(a, 0.0))

    t1 = np.array([-2.0 * a, 2.0 * a, 0.0])
    t2 = np.array([2.0 * a, 2.0 * a, 0.0])
    order = _doubly_cell_order(copies)
    placed = set(_cell_diamonds(0, 0))
    asm = cell
    log = []
    neighbor_steps = ((1, 0), (-1, 0), (0, 1), (0, -1))
    for i, j in order[1:]:
        new_diamonds = _cell_diamonds(i, j)
        expected = 2 * sum(
            1
            for m, n in new_diamonds
            for dm, dn in neighbor_steps
            if (m + dm, n + dn) in placed
        )
        off = i * t1 + j * t2
        copy = ImmersedMesh(cell.vertices + off, cell.triangles.copy(), cell.is_boundary.copy())
        asm, _, _, n_merged = weld_meshes(asm, copy, WELD_TOL)
        if n_merged != expected:
            raise WeldFailure(
                f"lattice weld at cell {(i, j)} merged {n_merged} vertices, expected {expected}"
            )
        placed.update(new_diamonds)
        log.append(n_merged)

    columns = set()
    for m, n in placed:
        cx, cy = 2.0 * a * m, 2.0 * a * n
        for dx, dy in ((a, 0.0), (-a, 0.0), (0.0, a), (0.0, -a)):
            columns.add((round(cx + dx, 12), round(cy + dy, 12)))

    seam = np.nonzero(~asm.is_boundary & (np.abs(asm.vertices[:, 2]) <= WELD_TOL))[0]
    return PeriodicAssembly(
        mesh=asm,
        generators=(GroupPoint(-2.0 * a, 2.0 * a, 0.0), GroupPoint(2.0 * a, 2.0 * a, 0.0)),
        copy_count=copies,
        central_vertices=np.arange(cell.n_vertices),
        seam_vertices=seam,
        weld_log=tuple(log),
        pinch_columns=np.array(sorted(columns)),
        pinch_margin=a / 3.0,
    )


# ---------------------------------------------------------------------------
# singly periodic assembly


def build_singly(model: ModelMatrix, piece: GraphSurface, copies: int) -> PeriodicAssembly:
    """Assemble the singly periodic surface from a solved rectangle piece.

    The piece is a graph over [0, c] x [0, a] with its raised edge on
    x = 0 and height 0 on the other three sides.  One cell is the piece
    doubled across the x-axis and joined to its mirror column through the
    pinch pair on the z-axis; copies cells are stacked with period
    (0, 2a, 0) and welded along the shared horizontal seam lines.
    """
    V2 = piece.tri.vertices
    a = float(V2[:, 1].max())
    c = float(V2[:, 0].max())
    if not (a > 0 and c > 0):
        raise InvalidConfig("piece domain must have positive extent")
    if float(V2.min()) < -1e-9:
        raise InvalidConfig("piece domain must sit in the first quadrant")
    copies = int(copies)
    if not 1 <= copies <= 6:
        raise InvalidConfig("copies must be between 1 and 6")

    half = reflect_mesh(model, graph_to_mesh(piece), ReflectionAxis.horizontal_parallel_x(0.0))
    cell = reflect_mesh(model, half, ReflectionAxis.vertical_line(0.0, 0.0))

    top = int(np.sum(np.abs(cell.vertices[:, 1] - a) <= WELD_TOL))
    bottom = int(np.sum(np.abs(cell.vertices[:, 1] + a) <= WELD_TOL))
    if top != bottom or top == 0:
        raise WeldFailure(f"stack interfaces do not match: {top} top vs {bottom} bottom vertices")

    step = np.array([0.0, 2.0 * a, 0.0])
    asm = cell
    log = []
    for k in range(1, copies):
        copy = ImmersedMesh(cell.vertices + k * step, cell.triangles.copy(), cell.is_boundary.copy())
        asm, _, _, n_merged = weld_meshes(asm, copy, WELD_TOL)
        if n_merged != top:
            raise WeldFailure(
                f"stack weld {k} merged {n_merged} vertices, expected {top}"
            )
        log.append(n_merged)

    columns = np.array([(0.0, j * a) for j in range(-1, 2 * copies)])
    seam = np.nonzero(~asm.is_boundary & (np.abs(asm.vertices[:, 2]) <= WELD_TOL))[0]
    return PeriodicAssembly(
        mesh=asm,
        generators=(GroupPoint(0.0, 2.0 * a, 0.0),),
        copy_count=copies,
        central_vertices=np.arange(cell.n_vertices),
        seam_vertices=seam,
        weld_log=tuple(log),
        pinch_columns=columns,
        pinch_margin=a / 3.0,
    )


# ---------------------------------------------------------------------------
# diagnostics


def _closest_on_triangles(p: np.ndarray, tri_pts: np.ndarray) -> np.ndarray:
    """Closest point to p on each of a batch of triangles.

    Candidates are the clamped projections onto the three edges plus the
    in-plane projection when it lands inside; the nearest wins.  Robust
    for degenerate triangles because the edge candidates always exist.
    """
    a, b, c = tri_pts[:, 0], tri_pts[:, 1], tri_pts[:, 2]

    def seg(p0, p1):
        d = p1 - p0
        dd = (d * d).sum(axis=1)
        t = ((p - p0) * d).sum(axis=1) / np.where(dd == 0.0, 1.0, dd)
        return p0 + np.clip(t, 0.0, 1.0)[:, None] * d

    cands = [seg(a, b), seg(b, c), seg(c, a)]

    ab, ac = b - a, c - a
    n = np.cross(ab, ac)
    nn = (n * n).sum(axis=1)
    safe = np.where(nn == 0.0, 1.0, nn)
    proj = p - ((p - a) * n).sum(axis=1)[:, None] / safe[:, None] * n
    # barycentric test of the projection
    r = proj - a
    d00 = (ab * ab).sum(axis=1)
    d01 = (ab * ac).sum(axis=1)
    d11 = (ac * ac).sum(axis=1)
    r0 = (r * ab).sum(axis=1)
    r1 = (r * ac).sum(axis=1)
    det = d00 * d11 - d01 * d01
    det = np.where(det == 0.0, 1.0, det)
    v = (d11 * r0 - d01 * r1) / det
    w = (d00 * r1 - d01 * r0) / det
    inside = (nn > 0.0) & (v >= -1e-12) & (w >= -1e-12) & (v + w <= 1.0 + 1e-12)
    far = a + np.inf
    cands.append(np.where(inside[:, None], proj, far))

    stack = np.stack(cands, axis=1)
    d2 = ((stack - p) ** 2).sum(axis=2)
    best = np.argmin(d2, axis=1)
    return stack[np.arange(len(tri_pts)), best]


def periodicity_defect(model: ModelMatrix, asm: PeriodicAssembly, t) -> float:
    """Max metric distance from the translated central cell to the mesh.

    Each central-cell vertex is moved by the left translation t and
    matched against the nearest assembly triangles (Euclidean broad
    phase, metric length at the translated point).  For a generator the
    translate lands on a neighboring cell and the defect is floating
    point noise; any other translation is measured all the same and
    serves as a negative control.  Meaningful only when the assembly
    actually contains the neighbor in the direction of t: a doubly
    patch needs three copies to cover both lattice directions.
    """
    tvec = _point(t)
    src = asm.mesh.vertices[asm.central_vertices]
    if tvec[2] == 0.0:
        img = src + tvec
    else:
        E = exp_at(model, tvec[2]).array
        img = np.empty_like(src)
        img[:, :2] = tvec[:2] + src[:, :2] @ E.T
        img[:, 2] = tvec[2] + src[:, 2]

    P = asm.mesh.vertices
    T = asm.mesh.triangles
    cent = P[T].mean(axis=1)
    tree = cKDTree(cent)
    k = min(12, T.shape[0])
    _, cand = tree.query(img, k=k)
    cand = np.asarray(cand).reshape(img.shape[0], -1)

    # centroid proximity misses tall skinny triangles in steep boundary
    # layers, so always include the triangle star of the nearest vertex
    star: list = [[] for _ in range(P.shape[0])]
    for ti, t in enumerate(T):
        for v in t:
            star[v].append(ti)
    _, near_v = cKDTree(P).query(img)

    worst = 0.0
    for pt, row, nv in zip(img, cand, near_v):
        idx = np.union1d(row, star[nv])
        q = _closest_on_triangles(pt, P[T[idx]])
        d2 = ((q - pt) ** 2).sum(axis=1)
        d = q[np.argmin(d2)] - pt
        G = metric_at(model, pt).matrix
        worst = max(worst, float(np.sqrt(d @ G @ d)))
    return worst


def seam_curvature(model: ModelMatrix, asm: PeriodicAssembly) -> float:
    """Max discrete mean curvature over the welded seam vertices.

    Seam vertices inside the pinch_margin band around a pinch column are
    skipped: the Plateau solution has a steep boundary layer along the
    near-vertical contour segments there, and the raw area-gradient
    diagnostic grows like 1/h in that band no matter how well the seam
    itself closes up.  Away from the columns the value measures the
    reflection defect and shrinks as the underlying piece is refined.
    """
    sv = asm.seam_vertices
    if sv.size == 0:
        raise InvalidConfig("assembly has no interior seam vertices")
    if asm.pinch_columns.size:
        xy = asm.mesh.vertices[sv, :2]
        d = np.sqrt(
            ((xy[:, None, :] - asm.pinch_columns[None, :, :]) ** 2).sum(axis=2)
        ).min(axis=1)
        sv = sv[d > asm.pinch_margin]
        if sv.size == 0:
            raise InvalidConfig("all seam vertices fall inside pinch bands")
    H = mesh_mean_curvature(model, asm.mesh)
    return float(np.max(H[sv]))
