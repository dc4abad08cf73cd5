"""Discrete surfaces and their metric area functionals.

Two representations:

* GraphSurface: a planar Triangulation plus one height per vertex; the
  surface z = u(x, y) is piecewise linear over the mesh.
* ImmersedMesh: a free triangle mesh with 3D vertices in group
  coordinates, used for annuli and reflected assemblies.

Both areas use the first fundamental form of the ambient metric, which
is block diagonal (horizontal block depending on z only, g_zz = 1).
For a triangle with piecewise-linear slopes (p, q),

    E = g_xx + p^2,  F = g_xy + p q,  G = g_yy + q^2,
    d(area) = sqrt(E G - F^2) dx dy,

and for a free triangle with edge vectors e1, e2 the Gram determinant
of e1, e2 under the metric evaluated at the quadrature point plays the
same role.  Quadrature is one point per triangle (centroid) for solves
and total areas; diagnostics use the three edge midpoints so that the
discrete mean curvature sees the geometric residual of the surface and
not the solver's own stopping tolerance.

All reductions are plain np.sum over arrays in fixed triangle order
(numpy's pairwise summation), so results are run-to-run identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateTriangle, InvalidConfig, NonFinite, WeldFailure
from .geometry import ModelMatrix, metric_coeffs, metric_coeffs_dz
from .meshing import Triangulation

# Barycentric quadrature rules: (points (q,3), weights (q,)).
CENTROID_RULE = (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0]))
MIDEDGE_RULE = (
    np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
    np.array([1 / 3, 1 / 3, 1 / 3]),
)


@dataclass(eq=False)
class GraphSurface:
    """Piecewise-linear height field over a Triangulation.

    Boundary heights agree exactly with the triangulation's assignment;
    this is checked at construction, not re-enforced later.
    """

    tri: Triangulation
    heights: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.heights, dtype=float)
        if u.shape != (self.tri.n_vertices,):
            raise InvalidConfig("need one height per vertex")
        if not np.all(np.isfinite(u)):
            raise NonFinite("heights must be finite")
        b = self.tri.is_boundary
        if not np.array_equal(u[b], self.tri.boundary_heights[b]):
            raise InvalidConfig("boundary heights must match their assignment")
        self.heights = u


def initial_graph(tri: Triangulation) -> GraphSurface:
    """Starting guess: boundary heights, mean boundary height inside."""
    u = np.where(tri.is_boundary, tri.boundary_heights, 0.0)
    mean = float(tri.boundary_heights[tri.is_boundary].mean())
    u[~tri.is_boundary] = mean
    return GraphSurface(tri, u)


@dataclass(eq=False)
class ImmersedMesh:
    """Triangle mesh with 3D vertices; boundary vertices are fixed."""

    vertices: np.ndarray    # (n, 3)
    triangles: np.ndarray   # (m, 3)
    is_boundary: np.ndarray  # (n,) bool

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=int)
        self.is_boundary = np.asarray(self.is_boundary, dtype=bool)
        if not np.all(np.isfinite(self.vertices)):
            raise NonFinite("mesh vertices must be finite")

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]


# ---------------------------------------------------------------------------
# topology helpers


def edge_counts(triangles: np.ndarray) -> dict:
    """Map from sorted vertex pair to the number of incident triangles."""
    counts: dict = {}
    for t in triangles:
        for u, v in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            key = (u, v) if u < v else (v, u)
            counts[key] = counts.get(key, 0) + 1
    return counts


def boundary_vertex_flags(triangles: np.ndarray, n_vertices: int) -> np.ndarray:
    flags = np.zeros(n_vertices, dtype=bool)
    for (u, v), c in edge_counts(triangles).items():
        if c == 1:
            flags[u] = True
            flags[v] = True
    return flags


def boundary_edges(triangles: np.ndarray) -> list:
    return [e for e, c in edge_counts(triangles).items() if c == 1]


def is_edge_manifold(mesh_or_triangles) -> bool:
    tris = getattr(mesh_or_triangles, "triangles", mesh_or_triangles)
    return all(c <= 2 for c in edge_counts(tris).values())


def euler_characteristic(mesh: ImmersedMesh) -> int:
    return mesh.n_vertices - len(edge_counts(mesh.triangles)) + mesh.n_triangles


# ---------------------------------------------------------------------------
# graph area functional


class GraphKernel:
    """Precomputed per-triangle geometry for one triangulation.

    Holds the flat-domain shape gradients so repeated energy and
    gradient evaluations during descent cost a handful of vectorized
    passes over the triangle arrays.
    """

    def __init__(self, model: ModelMatrix, tri: Triangulation):
        self.model = model
        self.tri = tri
        V, T = tri.vertices, tri.triangles
        self.idx = T
        d1 = V[T[:, 1]] - V[T[:, 0]]
        d2 = V[T[:, 2]] - V[T[:, 0]]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        if np.any(det <= 0):
            raise DegenerateTriangle("triangulation must be positively oriented")
        self.area_xy = 0.5 * det
        # gradients of the three barycentric shape functions
        inv = 1.0 / det
        gx = np.empty((T.shape[0], 3))
        gy = np.empty((T.shape[0], 3))
        gx[:, 1] = d2[:, 1] * inv
        gy[:, 1] = -d2[:, 0] * inv
        gx[:, 2] = -d1[:, 1] * inv
        gy[:, 2] = d1[:, 0] * inv
        gx[:, 0] = -gx[:, 1] - gx[:, 2]
        gy[:, 0] = -gy[:, 1] - gy[:, 2]
        self.gradx, self.grady = gx, gy

    def slopes(self, u: np.ndarray):
        ut = u[self.idx]
        return (ut * self.gradx).sum(axis=1), (ut * self.grady).sum(axis=1)

    def area(self, u: np.ndarray, rule=CENTROID_RULE) -> float:
        pts, wts = rule
        p, q = self.slopes(u)
        ut = u[self.idx]
        total = 0.0
        for w, lam in zip(wts, pts):
            zq = ut @ lam
            gxx, gxy, gyy = metric_coeffs(self.model, zq)
            E = gxx + p * p
            F = gxy + p * q
            G = gyy + q * q
            total += w * float(np.sum(self.area_xy * np.sqrt(E * G - F * F)))
        return total

    def area_grad(self, u: np.ndarray, rule=CENTROID_RULE):
        pts, wts = rule
        p, q = self.slopes(u)
        ut = u[self.idx]
        grad = np.zeros(u.shape[0])
        total = 0.0
        for w, lam in zip(wts, pts):
            zq = ut @ lam
            gxx, gxy, gyy = metric_coeffs(self.model, zq)
            dxx, dxy, dyy = metric_coeffs_dz(self.model, zq)
            E = gxx + p * p
            F = gxy + p * q
            G = gyy + q * q
            S = np.sqrt(E * G - F * F)
            total += w * float(np.sum(self.area_xy * S))
            # dS/du_i = (G dE + E dG - 2F dF) / (2S) with
            # dE = g_xx' lam_i + 2 p bx_i, etc.
            cz = (dxx * G + dyy * E - 2.0 * F * dxy) / (2.0 * S)
            cp = (G * 2.0 * p - 2.0 * F * q) / (2.0 * S)
            cq = (E * 2.0 * q - 2.0 * F * p) / (2.0 * S)
            coeff = self.area_xy * w
            contrib = (
                coeff[:, None] * cz[:, None] * lam[None, :]
                + coeff[:, None] * cp[:, None] * self.gradx
                + coeff[:, None] * cq[:, None] * self.grady
            )
            np.add.at(grad, self.idx, contrib)
        return total, grad

    def triangle_normal_z(self, u: np.ndarray) -> np.ndarray:
        """Vertical component of the upward unit normal per triangle."""
        p, q = self.slopes(u)
        zc = u[self.idx].mean(axis=1)
        gxx, gxy, gyy = metric_coeffs(self.model, zc)
        det = gxx * gyy - gxy * gxy
        # (p,q) G2^{-1} (p,q)^T written out
        quad = (gyy * p * p - 2.0 * gxy * p * q + gxx * q * q) / det
        return 1.0 / np.sqrt(1.0 + quad)

    def metric_triangle_areas(self, u: np.ndarray, rule=CENTROID_RULE) -> np.ndarray:
        pts, wts = rule
        p, q = self.slopes(u)
        ut = u[self.idx]
        out = np.zeros(self.idx.shape[0])
        for w, lam in zip(wts, pts):
            zq = ut @ lam
            gxx, gxy, gyy = metric_coeffs(self.model, zq)
            E = gxx + p * p
            F = gxy + p * q
            G = gyy + q * q
            out += w * self.area_xy * np.sqrt(E * G - F * F)
        return out


def graph_area(model: ModelMatrix, surf: GraphSurface, rule=CENTROID_RULE) -> float:
    return GraphKernel(model, surf.tri).area(surf.heights, rule)


# ---------------------------------------------------------------------------
# free-mesh area functional


class MeshKernel:
    """Area and gradient of an ImmersedMesh as a function of vertex positions."""

    def __init__(self, model: ModelMatrix, triangles: np.ndarray):
        self.model = model
        self.idx = np.asarray(triangles, dtype=int)

    def _forms(self, P: np.ndarray, lam: np.ndarray):
        Pt = P[self.idx]                       # (m, 3, 3)
        e1 = Pt[:, 1] - Pt[:, 0]
        e2 = Pt[:, 2] - Pt[:, 0]
        zq = Pt[:, :, 2] @ lam
        gxx, gxy, gyy = metric_coeffs(self.model, zq)
        return Pt, e1, e2, zq, gxx, gxy, gyy

    @staticmethod
    def _inner(gxx, gxy, gyy, a, b):
        return (
            gxx * a[:, 0] * b[:, 0]
            + gxy * (a[:, 0] * b[:, 1] + a[:, 1] * b[:, 0])
            + gyy * a[:, 1] * b[:, 1]
            + a[:, 2] * b[:, 2]
        )

    def triangle_areas(self, P: np.ndarray, rule=CENTROID_RULE) -> np.ndarray:
        pts, wts = rule
        out = np.zeros(self.idx.shape[0])
        for w, lam in zip(wts, pts):
            _, e1, e2, _, gxx, gxy, gyy = self._forms(P, lam)
            E = self._inner(gxx, gxy, gyy, e1, e1)
            F = self._inner(gxx, gxy, gyy, e1, e2)
            G = self._inner(gxx, gxy, gyy, e2, e2)
            disc = np.maximum(E * G - F * F, 0.0)
            out += w * 0.5 * np.sqrt(disc)
        return out

    def area(self, P: np.ndarray, rule=CENTROID_RULE) -> float:
        return float(np.sum(self.triangle_areas(P, rule)))

    def area_grad(self, P: np.ndarray, rule=CENTROID_RULE):
        pts, wts = rule
        grad = np.zeros_like(P)
        total = 0.0
        for w, lam in zip(wts, pts):
            _, e1, e2, zq, gxx, gxy, gyy = self._forms(P, lam)
            dxx, dxy, dyy = metric_coeffs_dz(self.model, zq)
            E = self._inner(gxx, gxy, gyy, e1, e1)
            F = self._inner(gxx, gxy, gyy, e1, e2)
            G = self._inner(gxx, gxy, gyy, e2, e2)
            disc = E * G - F * F
            if np.any(disc <= 0):
                raise DegenerateTriangle("vanishing metric area element")
            S = np.sqrt(disc)
            total += w * 0.5 * float(np.sum(S))
            cE = G / (4.0 * S) * w
            cF = -F / (2.0 * S) * w
            cG = E / (4.0 * S) * w
            # metric applied to edges, (m, 2) horizontal and (m,) vertical
            ge1 = np.stack(
                [gxx * e1[:, 0] + gxy * e1[:, 1], gxy * e1[:, 0] + gyy * e1[:, 1], e1[:, 2]],
                axis=1,
            )
            ge2 = np.stack(
                [gxx * e2[:, 0] + gxy * e2[:, 1], gxy * e2[:, 0] + gyy * e2[:, 1], e2[:, 2]],
                axis=1,
            )
            # position dependence through e1, e2
            d_v1 = 2.0 * cE[:, None] * ge1 + cF[:, None] * ge2
            d_v2 = 2.0 * cG[:, None] * ge2 + cF[:, None] * ge1
            d_v0 = -(d_v1 + d_v2)
            # metric dependence through z at the quadrature point
            zE = dxx * e1[:, 0] ** 2 + 2 * dxy * e1[:, 0] * e1[:, 1] + dyy * e1[:, 1] ** 2
            zF = (
                dxx * e1[:, 0] * e2[:, 0]
                + dxy * (e1[:, 0] * e2[:, 1] + e1[:, 1] * e2[:, 0])
                + dyy * e1[:, 1] * e2[:, 1]
            )
            zG = dxx * e2[:, 0] ** 2 + 2 * dxy * e2[:, 0] * e2[:, 1] + dyy * e2[:, 1] ** 2
            zterm = cE * zE + cF * zF + cG * zG
            for corner, dv in ((0, d_v0), (1, d_v1), (2, d_v2)):
                contrib = dv.copy()
                contrib[:, 2] += zterm * lam[corner]
                np.add.at(grad, self.idx[:, corner], contrib)
        return total, grad


def mesh_area(model: ModelMatrix, mesh: ImmersedMesh, rule=CENTROID_RULE) -> float:
    return MeshKernel(model, mesh.triangles).area(mesh.vertices, rule)


def min_triangle_area(model: ModelMatrix, mesh: ImmersedMesh) -> float:
    k = MeshKernel(model, mesh.triangles)
    return float(k.triangle_areas(mesh.vertices).min())


def lift(surf: GraphSurface) -> ImmersedMesh:
    """Lift a graph to a 3D mesh: (x, y) -> (x, y, u)."""
    tri = surf.tri
    verts = np.column_stack([tri.vertices, surf.heights])
    return ImmersedMesh(
        vertices=verts,
        triangles=tri.triangles.copy(),
        is_boundary=tri.is_boundary.copy(),
    )


# ---------------------------------------------------------------------------
# point location and interpolation


def locate_points(tri: Triangulation, pts: np.ndarray, tol: float = 1e-12):
    """Containing triangle and barycentric coordinates for each point."""
    V, T = tri.vertices, tri.triangles
    p0, p1, p2 = V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]
    d1 = p1 - p0
    d2 = p2 - p0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    out_idx = np.full(pts.shape[0], -1, dtype=int)
    out_bary = np.zeros((pts.shape[0], 3))
    for k, pt in enumerate(np.asarray(pts, dtype=float)):
        r = pt[None, :] - p0
        l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
        l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
        l0 = 1.0 - l1 - l2
        ok = (l0 >= -tol) & (l1 >= -tol) & (l2 >= -tol)
        hits = np.nonzero(ok)[0]
        if hits.size:
            j = hits[0]
            out_idx[k] = j
            out_bary[k] = (l0[j], l1[j], l2[j])
    return out_idx, out_bary


def height_at(surf: GraphSurface, pts: np.ndarray) -> np.ndarray:
    """PL-interpolated heights; NaN for points outside the domain."""
    idx, bary = locate_points(surf.tri, pts)
    out = np.full(len(idx), np.nan)
    ok = idx >= 0
    tv = surf.heights[surf.tri.triangles[idx[ok]]]
    out[ok] = (tv * bary[ok]).sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# mesh builders


def _grid_triangles(nu: int, nv: int) -> np.ndarray:
    """Triangles of an (nu+1) x (nv+1) vertex grid, row-major in v."""
    tris = []
    for j in range(nv):
        for i in range(nu):
            v00 = j * (nu + 1) + i
            v10 = v00 + 1
            v01 = v00 + (nu + 1)
            v11 = v01 + 1
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return np.array(tris, dtype=int)


def wall_mesh(p0, p1, z0: float, z1: float, n_s: int, n_z: int) -> ImmersedMesh:
    """Vertical wall over the planar segment p0 -> p1, z in [z0, z1]."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    s = np.linspace(0.0, 1.0, n_s + 1)
    z = np.linspace(z0, z1, n_z + 1)
    base = p0[None, :] + s[:, None] * (p1 - p0)[None, :]
    verts = np.empty(((n_s + 1) * (n_z + 1), 3))
    for j in range(n_z + 1):
        rows = slice(j * (n_s + 1), (j + 1) * (n_s + 1))
        verts[rows, :2] = base
        verts[rows, 2] = z[j]
    tris = _grid_triangles(n_s, n_z)
    return ImmersedMesh(verts, tris, boundary_vertex_flags(tris, verts.shape[0]))


def bilinear_cap(corners: np.ndarray, z: float, n_u: int, n_v: int) -> ImmersedMesh:
    """Planar quadrilateral patch at constant height z.

    corners (4, 2) in order (u0v0, u1v0, u0v1, u1v1); sides u=const and
    v=const interpolate linearly, so edge points match wall grids built
    over the same segments with the same counts.
    """
    c = np.asarray(corners, dtype=float)
    u = np.linspace(0.0, 1.0, n_u + 1)
    v = np.linspace(0.0, 1.0, n_v + 1)
    U, Vv = np.meshgrid(u, v)
    xy = (
        ((1 - U) * (1 - Vv))[..., None] * c[0]
        + (U * (1 - Vv))[..., None] * c[1]
        + ((1 - U) * Vv)[..., None] * c[2]
        + (U * Vv)[..., None] * c[3]
    )
    verts = np.column_stack([xy.reshape(-1, 2), np.full((n_u + 1) * (n_v + 1), z)])
    tris = _grid_triangles(n_u, n_v)
    return ImmersedMesh(verts, tris, boundary_vertex_flags(tris, verts.shape[0]))


def tube_mesh(radius: float, z0: float, z1: float, n_around: int, n_z: int) -> ImmersedMesh:
    """Cylinder of the given radius about the z-axis, closed around."""
    theta = 2.0 * np.pi * np.arange(n_around) / n_around
    z = np.linspace(z0, z1, n_z + 1)
    verts = np.empty((n_around * (n_z + 1), 3))
    for j, zz in enumerate(z):
        rows = slice(j * n_around, (j + 1) * n_around)
        verts[rows, 0] = radius * np.cos(theta)
        verts[rows, 1] = radius * np.sin(theta)
        verts[rows, 2] = zz
    tris = []
    for j in range(n_z):
        for i in range(n_around):
            i2 = (i + 1) % n_around
            v00 = j * n_around + i
            v10 = j * n_around + i2
            v01 = v00 + n_around
            v11 = v10 + n_around
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    tris = np.array(tris, dtype=int)
    is_b = np.zeros(verts.shape[0], dtype=bool)
    is_b[:n_around] = True
    is_b[-n_around:] = True
    return ImmersedMesh(verts, tris, is_b)


def weld_meshes(m1: ImmersedMesh, m2: ImmersedMesh, tol: float = 1e-9):
    """Union of two meshes, merging boundary vertices within tol.

    Returns (mesh, idx1, idx2, n_merged): idx1/idx2 map old vertex
    indices into the welded mesh.  Boundary flags are recomputed from
    edge incidence.  Raises WeldFailure when two distinct m2 vertices
    claim the same m1 vertex.
    """
    b1 = np.nonzero(m1.is_boundary)[0]
    b2 = np.nonzero(m2.is_boundary)[0]
    match = {}
    if b1.size and b2.size:
        tree = cKDTree(m1.vertices[b1])
        dist, j = tree.query(m2.vertices[b2])
        hits = np.nonzero(dist <= tol)[0]
        targets = {}
        for k in hits:
            tgt = int(b1[j[k]])
            src = int(b2[k])
            if tgt in targets:
                raise WeldFailure("two vertices weld to the same target")
            targets[tgt] = src
            match[src] = tgt
    n1 = m1.n_vertices
    idx1 = np.arange(n1)
    idx2 = np.empty(m2.n_vertices, dtype=int)
    new_rows = []
    for i in range(m2.n_vertices):
        if i in match:
            idx2[i] = match[i]
        else:
            idx2[i] = n1 + len(new_rows)
            new_rows.append(m2.vertices[i])
    verts = np.vstack([m1.vertices, np.array(new_rows)]) if new_rows else m1.vertices.copy()
    tris = np.vstack([m1.triangles, idx2[m2.triangles]])
    mesh = ImmersedMesh(verts, tris, boundary_vertex_flags(tris, verts.shape[0]))
    return mesh, idx1, idx2, len(match)


def _ladder_strip(row_a: np.ndarray, row_b: np.ndarray, verts: list, tris: list):
    """Triangulate between two polylines with possibly different counts.

    row_a / row_b are index arrays into verts; the greedy march always
    cuts the shorter diagonal, which keeps triangles well shaped when
    one row carries more points than the other.
    """
    i, j = 0, 0
    while i < len(row_a) - 1 or j < len(row_b) - 1:
        can_a = i < len(row_a) - 1
        can_b = j < len(row_b) - 1
        if can_a and can_b:
            da = np.linalg.norm(np.asarray(verts[row_a[i + 1]]) - verts[row_b[j]])
            db = np.linalg.norm(np.asarray(verts[row_a[i]]) - verts[row_b[j + 1]])
            can_a = da <= db
        if can_a:
            tris.append((row_a[i], row_a[i + 1], row_b[j]))
            i += 1
        else:
            tris.append((row_a[i], row_b[j + 1], row_b[j]))
            j += 1


def _wedge_cap(P1, P2, P3, P4, z: float, n_u: int, m_thin: int, m_wide: int) -> ImmersedMesh:
    """Flat cap over the quad P1-P2-P4-P3 graded from a thin to a wide end.

    Chords run from P1+u(P2-P1) to P3+u(P4-P3); the number of points per
    chord grows linearly from m_thin at u=0 to m_wide at u=1, so the cap
    edges match wall grids of those two counts while the narrow corner
    is not shredded into slivers.
    """
    verts = []
    rows = []
    for r in range(n_u + 1):
        u = r / n_u
        m = m_thin + int(round((m_wide - m_thin) * u))
        lo = P1 + u * (P2 - P1)
        hi = P3 + u * (P4 - P3)
        t = np.linspace(0.0, 1.0, m)
        row = []
        for tk in t:
            row.append(len(verts))
            p = lo + tk * (hi - lo)
            verts.append((p[0], p[1], z))
        rows.append(np.array(row, dtype=int))
    tris = []
    for r in range(n_u):
        _ladder_strip(rows[r], rows[r + 1], verts, tris)
    verts = np.array(verts)
    tris = np.array(tris, dtype=int)
    return ImmersedMesh(verts, tris, boundary_vertex_flags(tris, verts.shape[0]))


def doubly_barrier_shell(
    a: float, eps: float, c0: float, c1: float, n_u: int, n_v: int, n_z: int
) -> ImmersedMesh:
    """Annulus-type initial mesh: two side walls plus two caps.

    The cross-section is the quadrilateral loop P1=(eps,-eps),
    P2=(a+eps,-eps), P4=(-eps,a+eps), P3=(-eps,eps).  The two walls over
    the sides P2->P4 and P3->P1 and the two caps at z=c0 and z=c1 form
    an annulus whose boundary is exactly the pair of rectangle loops
    over P1->P2 and P4->P3 (the faces that are left out).

    Cross counts are graded: the short wall P3->P1 has width of order
    eps and gets a proportionally smaller count than n_v, and the caps
    interpolate between the two.  A uniform count would cut the narrow
    corner into slivers whose free vertices collapse during descent.
    """
    if not (a > 0 and eps > 0 and 0 < c0 < c1):
        raise InvalidConfig("need a > 0, eps > 0, 0 < c0 < c1")
    P1 = np.array([eps, -eps])
    P2 = np.array([a + eps, -eps])
    P3 = np.array([-eps, eps])
    P4 = np.array([-eps, a + eps])
    ratio = np.linalg.norm(P1 - P3) / np.linalg.norm(P4 - P2)
    n_c = max(1, int(round(n_v * ratio)))
    wall_d = wall_mesh(P2, P4, c0, c1, n_v, n_z)
    wall_c = wall_mesh(P3, P1, c0, c1, n_c, n_z)
    cap_lo = _wedge_cap(P1, P2, P3, P4, c0, n_u, n_c + 1, n_v + 1)
    cap_hi = _wedge_cap(P1, P2, P3, P4, c1, n_u, n_c + 1, n_v + 1)
    mesh, _, _, k1 = weld_meshes(wall_d, wall_c)
    assert k1 == 0
    mesh, _, _, k2 = weld_meshes(mesh, cap_lo)
    mesh, _, _, k3 = weld_meshes(mesh, cap_hi)
    expected = (n_v + 1) + (n_c + 1)
    if k2 != expected or k3 != expected:
        raise WeldFailure("cap grids do not match wall grids")
    return mesh
