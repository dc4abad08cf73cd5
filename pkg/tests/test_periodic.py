"""Reflection assembly: welds, lattice generators, and seam diagnostics."""

from __future__ import annotations

import numpy as np
import pytest

from scherklab.errors import InvalidConfig, InvalidForModel, WeldFailure
from scherklab.geometry import GroupPoint, ModelMatrix, group_multiply
from scherklab.isometry import LeftTranslation, VerticalRotation, apply_isometry, verify_isometry
from scherklab.meshing import ContourSpec, resolve_contour, triangulate
from scherklab.periodic import (
    PeriodicAssembly,
    ReflectionAxis,
    build_doubly,
    build_singly,
    graph_to_mesh,
    periodicity_defect,
    reflect_mesh,
    seam_curvature,
    transform_mesh,
)
from scherklab.plateau import SolveOptions, solve_graph
from scherklab.surfaces import (
    bilinear_cap,
    boundary_vertex_flags,
    euler_characteristic,
    is_edge_manifold,
    mesh_area,
)

EUC = ModelMatrix.euclidean()
HEIS = ModelMatrix.heisenberg()
SOL = ModelMatrix.sol()

A = 0.5
C = 0.5


def _solve_piece(model, kind, h, a=A, c=C):
    spec = ContourSpec.doubly(a, c) if kind == "doubly" else ContourSpec.singly(a, c)
    tri = triangulate(resolve_contour(spec), h)
    surf, rep = solve_graph(model, tri, options=SolveOptions(tol=1e-10))
    assert rep.converged
    return surf


@pytest.fixture(scope="module")
def euc_piece():
    return _solve_piece(EUC, "doubly", 0.04)


@pytest.fixture(scope="module")
def heis_piece():
    return _solve_piece(HEIS, "doubly", 0.04)


@pytest.fixture(scope="module")
def heis_singly_piece():
    return _solve_piece(HEIS, "singly", 0.05, a=0.4, c=0.5)


# ---------------------------------------------------------------------------
# axes and raw reflections


def test_reflection_axis_kind_validated():
    with pytest.raises(InvalidConfig):
        ReflectionAxis("diagonal", 0.0, 0.0)


def test_transform_mesh_involution(heis_piece):
    mesh = graph_to_mesh(heis_piece)
    iso = ReflectionAxis.vertical_line(A, 0.0).rotation()
    once = transform_mesh(HEIS, mesh, iso, flip_orientation=True)
    twice = transform_mesh(HEIS, once, iso, flip_orientation=True)
    assert np.max(np.abs(twice.vertices - mesh.vertices)) <= 1e-12
    assert np.array_equal(twice.triangles, mesh.triangles)


def test_transform_mesh_preserves_area(heis_piece):
    mesh = graph_to_mesh(heis_piece)
    a0 = mesh_area(HEIS, mesh)
    iso = ReflectionAxis.horizontal_parallel_x(0.0).rotation()
    image = transform_mesh(HEIS, mesh, iso, flip_orientation=True)
    assert mesh_area(HEIS, image) == pytest.approx(a0, abs=1e-10)


def test_horizontal_reflection_requires_antidiagonal(euc_piece):
    mesh = graph_to_mesh(euc_piece)
    diag = ModelMatrix(1.0, 0.0, 0.0, 0.0)
    axis = ReflectionAxis.horizontal_parallel_x(0.0)
    with pytest.raises(InvalidForModel):
        reflect_mesh(diag, mesh, axis)
    # vertical rotations stay available for every model
    reflect_mesh(diag, mesh, ReflectionAxis.vertical_line(A, 0.0))


def test_reflect_mesh_vertex_count(heis_piece):
    mesh = graph_to_mesh(heis_piece)
    axis = ReflectionAxis.horizontal_parallel_x(0.0)
    on_axis = int(np.count_nonzero(axis.contains(mesh.vertices) & mesh.is_boundary))
    assert on_axis > 0
    welded = reflect_mesh(HEIS, mesh, axis)
    assert welded.n_vertices == 2 * mesh.n_vertices - on_axis
    assert welded.n_triangles == 2 * mesh.n_triangles
    assert is_edge_manifold(welded)


def test_reflect_mesh_disjoint_axis_fails(heis_piece):
    mesh = graph_to_mesh(heis_piece)
    with pytest.raises(WeldFailure):
        reflect_mesh(HEIS, mesh, ReflectionAxis.horizontal_parallel_x(-3.0))


# ---------------------------------------------------------------------------
# doubly periodic assembly


def test_doubly_copy2_triangle_count(heis_piece):
    half = reflect_mesh(HEIS, graph_to_mesh(heis_piece), ReflectionAxis.horizontal_parallel_x(0.0))
    asm = build_doubly(HEIS, heis_piece, 2)
    assert asm.mesh.n_triangles == 8 * half.n_triangles
    assert asm.copy_count == 2


def test_doubly_euler_characteristic(euc_piece):
    # one contact between the first two cells, then two more per added cell
    # in this placement order
    expected = {1: 0, 2: -2, 3: -6, 4: -10}
    for copies, chi in expected.items():
        asm = build_doubly(EUC, euc_piece, copies)
        assert euler_characteristic(asm.mesh) == chi
        assert is_edge_manifold(asm.mesh)
    asm4 = build_doubly(EUC, euc_piece, 4)
    assert asm4.weld_log == (2, 4, 4)


def test_doubly_generators(heis_piece):
    asm = build_doubly(HEIS, heis_piece, 2)
    t1, t2 = asm.generators
    assert t1.array == pytest.approx(np.array([-2 * A, 2 * A, 0.0]))
    assert t2.array == pytest.approx(np.array([2 * A, 2 * A, 0.0]))


def test_doubly_generator_identity_pointwise():
    # two half-turns about vertical axes through adjacent tile corners
    # compose to the lattice shift
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1.5, 1.5, size=(100, 3))
    pairs = [
        (VerticalRotation(A, 0.0), VerticalRotation(0.0, A), GroupPoint(-2 * A, 2 * A, 0.0)),
        (VerticalRotation(-A, 0.0), VerticalRotation(0.0, A), GroupPoint(2 * A, 2 * A, 0.0)),
    ]
    for model in (HEIS, SOL):
        for first, second, shift in pairs:
            trans = LeftTranslation(shift)
            for p in pts:
                q, _ = apply_isometry(model, first, p)
                r, _ = apply_isometry(model, second, q)
                s, _ = apply_isometry(model, trans, p)
                assert np.max(np.abs(r.array - s.array)) <= 1e-12


def test_singly_generator_identity_pointwise():
    a = 0.4
    rng = np.random.default_rng(11)
    pts = rng.uniform(-1.5, 1.5, size=(100, 3))
    trans = LeftTranslation(GroupPoint(0.0, 2 * a, 0.0))
    for model in (HEIS, SOL):
        for p in pts:
            q, _ = apply_isometry(model, VerticalRotation(0.0, 0.0), p)
            r, _ = apply_isometry(model, VerticalRotation(0.0, a), q)
            s, _ = apply_isometry(model, trans, p)
            assert np.max(np.abs(r.array - s.array)) <= 1e-12


def test_singly_axis_reflection_formula():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-2.0, 2.0, size=(50, 3))
    iso = ReflectionAxis.horizontal_parallel_x(0.0).rotation()
    for p in pts:
        q, _ = apply_isometry(HEIS, iso, p)
        assert q.array == pytest.approx(np.array([p[0], -p[1], -p[2]]), abs=1e-15)


def test_generators_commute_exactly(heis_piece):
    asm = build_doubly(HEIS, heis_piece, 2)
    t1, t2 = asm.generators
    for model in (HEIS, SOL, EUC):
        ab = group_multiply(model, t1, t2)
        ba = group_multiply(model, t2, t1)
        assert np.array_equal(ab.array, ba.array)


def test_generator_isometry_defect(heis_piece, heis_singly_piece):
    asm = build_doubly(HEIS, heis_piece, 2)
    for t in asm.generators:
        assert verify_isometry(HEIS, LeftTranslation(t)) < 1e-10
    sing = build_singly(HEIS, heis_singly_piece, 2)
    (t,) = sing.generators
    assert verify_isometry(HEIS, LeftTranslation(t)) < 1e-10


# ---------------------------------------------------------------------------
# periodicity defect


def test_periodicity_defect_translates(euc_piece):
    asm = build_doubly(EUC, euc_piece, 4)
    for t in asm.generators:
        assert periodicity_defect(EUC, asm, t) < 1e-9
    # a shift that is not in the lattice lands far from the surface
    assert periodicity_defect(EUC, asm, GroupPoint(A, 0.0, 0.0)) > 1e-2


def test_periodicity_defect_below_h_heis(heis_piece):
    asm = build_doubly(HEIS, heis_piece, 4)
    for t in asm.generators:
        assert periodicity_defect(HEIS, asm, t) < 0.04


def test_singly_periodicity_defect(heis_singly_piece):
    asm = build_singly(HEIS, heis_singly_piece, 3)
    (t,) = asm.generators
    assert periodicity_defect(HEIS, asm, t) < 0.05
    assert euler_characteristic(asm.mesh) == -8
    assert is_edge_manifold(asm.mesh)


def test_singly_euler_characteristic(heis_singly_piece):
    for copies, chi in {1: 0, 2: -4, 3: -8}.items():
        asm = build_singly(HEIS, heis_singly_piece, copies)
        assert euler_characteristic(asm.mesh) == chi


# ---------------------------------------------------------------------------
# seam curvature


def test_flat_plane_seam_curvature():
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    cap = bilinear_cap(corners, 0.0, 8, 8)
    welded = reflect_mesh(EUC, cap, ReflectionAxis.horizontal_parallel_x(0.0))
    seam = np.flatnonzero(
        (np.abs(welded.vertices[:, 1]) <= 1e-9) & ~welded.is_boundary
    )
    assert seam.size > 0
    asm = PeriodicAssembly(
        mesh=welded,
        generators=(GroupPoint(0.0, 2.0, 0.0),),
        copy_count=1,
        central_vertices=np.arange(cap.n_vertices),
        seam_vertices=seam,
        weld_log=(),
        pinch_columns=np.zeros((0, 2)),
        pinch_margin=0.0,
    )
    assert seam_curvature(EUC, asm) < 1e-10


def test_seam_curvature_decreases():
    for model in (EUC, HEIS):
        values = []
        for h in (0.04, 0.02):
            piece = _solve_piece(model, "doubly", h)
            asm = build_doubly(model, piece, 2)
            values.append(seam_curvature(model, asm))
        assert values[1] < values[0]
        assert values[0] / values[1] > 1.5


# ---------------------------------------------------------------------------
# input validation


def test_build_rejects_bad_copies(heis_piece, heis_singly_piece):
    for copies in (0, 37):
        with pytest.raises(InvalidConfig):
            build_doubly(HEIS, heis_piece, copies)
    for copies in (0, 7):
        with pytest.raises(InvalidConfig):
            build_singly(HEIS, heis_singly_piece, copies)


def test_build_rejects_wrong_domain(heis_singly_piece, heis_piece):
    # a singly piece is not shaped like the triangular doubly seed
    with pytest.raises(InvalidConfig):
        build_doubly(HEIS, heis_singly_piece, 1)
    with pytest.raises((InvalidConfig, WeldFailure)):
        build_singly(HEIS, heis_piece, 1)
