"""Acceptance battery: every numbered requirement with its wall-clock budget.

Each test pins one end-to-end guarantee at its stated tolerance: exact
frame and connection algebra, isometry defects, leaf and wall curvature,
closed-form barrier quantities, solver calibration against the Scherk
graph, steep Plateau pieces, monotone families, annulus barriers, and
reflection assemblies.  Budgets are asserted so a regression in solver
cost fails loudly instead of silently eating the suite.
"""

from __future__ import annotations

import time

import numpy as np
import pytest
from scipy.optimize import brentq

from scherklab.douglas import (
    DoublyConfig,
    a_max_doubly,
    d_min_singly,
    doubly_face_areas,
    epsilon_max_doubly,
)
from scherklab.errors import InvalidForModel, PinchDetected
from scherklab.geometry import (
    GroupPoint,
    KillingField,
    ModelMatrix,
    covariant_derivative_frame,
    exp_at,
    frame_connection,
    group_multiply,
    left_frame,
    metric_at,
)
from scherklab.isometry import (
    HorizontalRotationParallelX,
    HorizontalRotationParallelY,
    LeftTranslation,
    VerticalRotation,
    apply_isometry,
    verify_isometry,
)
from scherklab.meshing import ContourSpec, DomainPolygon, resolve_contour, triangulate
from scherklab.periodic import build_doubly, periodicity_defect, seam_curvature
from scherklab.plateau import (
    SolveOptions,
    flux,
    mean_curvature_graph,
    mesh_mean_curvature,
    polish_graph,
    solve_graph,
    solve_mesh,
    solve_sequence,
)
from scherklab.surfaces import (
    GraphSurface,
    ImmersedMesh,
    boundary_vertex_flags,
    doubly_barrier_shell,
    lift,
    mesh_area,
    tube_mesh,
    wall_mesh,
)

EUC = ModelMatrix.euclidean()
HEIS = ModelMatrix.heisenberg()
SOL = ModelMatrix.sol()
ALL_MODELS = (EUC, HEIS, SOL, ModelMatrix.sol_family(2.0))


def square(L, heights):
    return DomainPolygon(
        vertices=np.array([[-L, -L], [L, -L], [L, L], [-L, L]]),
        edge_heights=heights,
    )


def test_criterion_01_frames_and_exponential():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    eye = np.eye(3)
    for model in ALL_MODELS:
        pts = rng.uniform(-1.5, 1.5, size=(100, 3))
        for p in pts:
            fr = left_frame(model, p)
            B = np.column_stack([fr.E1.components, fr.E2.components, fr.E3.components])
            G = metric_at(model, p).matrix
            assert np.max(np.abs(B.T @ G @ B - eye)) < 1e-12
            truth = np.exp(p[2] * model.trace)
            assert abs(exp_at(model, p[2]).det - truth) / truth < 1e-10
    assert time.perf_counter() - t0 < 1.0


def test_criterion_02_connection_table():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    for _ in range(20):
        model = ModelMatrix(*rng.uniform(-2.0, 2.0, size=4))
        p = rng.uniform(-1.5, 1.5, size=3)
        table = frame_connection(model)
        converted = covariant_derivative_frame(model, p)
        assert np.max(np.abs(converted - table)) < 1e-10
    assert time.perf_counter() - t0 < 1.0


def test_criterion_03_isometry_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    for model in ALL_MODELS:
        for _ in range(3):
            x0, y0 = rng.uniform(-1.0, 1.0, size=2)
            assert verify_isometry(model, VerticalRotation(x0, y0)) < 1e-10
            assert verify_isometry(model, HorizontalRotationParallelY(x0)) < 1e-10
            assert verify_isometry(model, HorizontalRotationParallelX(y0)) < 1e-10
            g = GroupPoint(*rng.uniform(-1.0, 1.0, size=3))
            assert verify_isometry(model, LeftTranslation(g)) < 1e-10
    diagonal = ModelMatrix(1.0, 0.0, 0.0, 0.0)
    with pytest.raises(InvalidForModel):
        apply_isometry(diagonal, HorizontalRotationParallelY(0.3), (0.1, 0.2, 0.3))
    assert time.perf_counter() - t0 < 1.0


def test_criterion_04_leaf_and_wall_curvature():
    t0 = time.perf_counter()
    tri = triangulate(square(0.5, (0.0,) * 4), 0.02)
    leaf = GraphSurface(tri, np.zeros(tri.n_vertices))
    diagonal = ModelMatrix(1.0, 0.0, 0.0, 0.0)
    H = mean_curvature_graph(diagonal, leaf)
    assert np.nanmax(np.abs(H - diagonal.trace / 2.0)) < 5e-2
    for model in (HEIS, SOL, ModelMatrix.sol_family(2.0)):
        H = mean_curvature_graph(model, leaf)
        assert np.nanmax(np.abs(H)) < 5e-3
    wall = wall_mesh((-0.4, -0.4), (0.5, 0.5), -0.5, 0.5, 24, 24)
    for model in ALL_MODELS:
        assert np.nanmax(np.abs(mesh_mean_curvature(model, wall))) < 5e-3
    assert time.perf_counter() - t0 < 10.0


def test_criterion_05_douglas_quantities():
    t0 = time.perf_counter()
    assert abs(a_max_doubly(HEIS, 1.0, 2.0) - 0.11535) < 1e-4
    assert abs(epsilon_max_doubly(HEIS, 0.1, 1.0, 2.0) - 1.37e-4) < 1e-5
    assert abs(d_min_singly(HEIS, 0.5, 0.1, 1.0) - 2.778) < 1e-3
    cfg = DoublyConfig(a=0.1, eps=1e-4, c0=1.0, c1=2.0)
    report = doubly_face_areas(HEIS, cfg)
    assert report.faces["cap_bottom"] == cfg.a * (cfg.a + 4.0 * cfg.eps) / 2.0
    assert report.faces["cap_top"] == report.faces["cap_bottom"]
    assert time.perf_counter() - t0 < 1.0


def test_criterion_06_scherk_calibration():
    t0 = time.perf_counter()

    def scherk(x, y):
        return float(np.log(np.cos(x) / np.cos(y)))

    poly = square(0.7, (scherk,) * 4)
    sup_errors = []
    prev = None
    for h in (0.04, 0.02, 0.01):
        tri = triangulate(poly, h)
        init = None
        if prev is not None:
            from scherklab.surfaces import height_at

            vals = height_at(prev, tri.vertices)
            init = np.where(np.isnan(vals), 0.0, vals)
        surf, rep = solve_graph(EUC, tri, init=init, options=SolveOptions(tol=1e-10))
        assert rep.converged
        exact = np.log(np.cos(tri.vertices[:, 0]) / np.cos(tri.vertices[:, 1]))
        interior = ~tri.is_boundary
        sup_errors.append(float(np.abs(surf.heights - exact)[interior].max()))
        prev = surf
    for coarse, fine in zip(sup_errors, sup_errors[1:]):
        assert 3.0 < coarse / fine < 5.0

    def affine(x, y):
        return 0.3 * x - 0.2 * y + 0.1

    tri = triangulate(square(0.6, (affine,) * 4), 0.05)
    surf, rep = solve_graph(EUC, tri, options=SolveOptions(tol=1e-10))
    surf, _ = polish_graph(EUC, surf)
    exact = affine(tri.vertices[:, 0], tri.vertices[:, 1])
    assert rep.converged
    assert np.max(np.abs(surf.heights - exact)) < 1e-10
    assert time.perf_counter() - t0 < 120.0


def _clipped_flux(model, surf, a, field, margin):
    # the polygon's vertical sides collapse to the two leg corners of the
    # graph domain; a cycle clear of those fans and of the raised-edge
    # layer measures the conserved quantity on resolved triangles only
    mesh = lift(surf)
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    d_hyp = (a - cent[:, 0] - cent[:, 1]) / np.sqrt(2.0)
    d_corner = np.minimum(
        np.hypot(cent[:, 0] - a, cent[:, 1]),
        np.hypot(cent[:, 0], cent[:, 1] - a),
    )
    keep = (d_hyp > margin) & (d_corner > margin)
    sub = ImmersedMesh(
        mesh.vertices,
        mesh.triangles[keep],
        boundary_vertex_flags(mesh.triangles[keep], mesh.vertices.shape[0]),
    )
    return flux(model, sub, field)


def test_criterion_07_steep_plateau_pieces():
    c = 2.0
    for model in (HEIS, SOL):
        t0 = time.perf_counter()
        a = 0.8 * a_max_doubly(model, 1.0, c)
        h = min(0.005, a / 18.0)
        masked_max_H = []
        for hh in (2.0 * h, h):
            tri = triangulate(resolve_contour(ContourSpec.doubly(a, c)), hh)
            surf, rep = solve_graph(model, tri, options=SolveOptions(tol=1e-7))
            assert rep.converged
            surf, residual = polish_graph(model, surf)
            assert residual < 1e-9
            assert surf.heights.min() >= -1e-12
            assert surf.heights.max() <= c + 1e-12
            V = tri.vertices
            d_hyp = (a - V[:, 0] - V[:, 1]) / np.sqrt(2.0)
            d_corner = np.minimum(
                np.hypot(V[:, 0] - a, V[:, 1]), np.hypot(V[:, 0], V[:, 1] - a)
            )
            mask = ~tri.is_boundary & (d_hyp > a / 6.0) & (d_corner > a / 6.0)
            assert mask.sum() > 5
            H = mean_curvature_graph(model, surf)
            masked_max_H.append(float(np.nanmax(np.abs(H)[mask])))
            for field in (KillingField(1.0, 0.0), KillingField(1.0, 1.0)):
                assert abs(_clipped_flux(model, surf, a, field, a / 3.0)) < 1e-2
        coarse, fine = masked_max_H
        assert coarse < 2e-2
        assert fine < 2e-2
        assert fine < 0.5 * coarse
        assert time.perf_counter() - t0 < 300.0


def test_criterion_08_monotone_family():
    t0 = time.perf_counter()
    rep = solve_sequence(
        EUC, "doubly", 0.5, (0.5, 1.0, 2.0, 4.0), 0.03,
        options=SolveOptions(tol=1e-10),
    )
    assert all(r.converged for r in rep.solve_reports)
    assert rep.monotone
    assert rep.step_min >= -1e-9
    for wide, narrow in zip(rep.cauchy, rep.cauchy[1:]):
        assert narrow < wide
    assert time.perf_counter() - t0 < 600.0


def test_criterion_09_annulus_barrier():
    t0 = time.perf_counter()
    cfg = DoublyConfig(a=0.1, eps=5e-5, c0=1.0, c1=2.0)
    report = doubly_face_areas(HEIS, cfg)
    assert report.satisfied
    shell = doubly_barrier_shell(cfg.a, cfg.eps, cfg.c0, cfg.c1, 10, 10, 40)
    _, rep = solve_mesh(HEIS, shell, options=SolveOptions(tol=1e-6, max_iters=1500))
    assert rep.area < report.removed_total

    tube = tube_mesh(1.0, -0.25, 0.25, 64, 16)
    waist = brentq(lambda w: w * np.cosh(0.25 / w) - 1.0, 0.5, 0.99)
    oracle = 2.0 * np.pi * waist * (0.25 + 0.5 * waist * np.sinh(0.5 / waist))
    _, rep = solve_mesh(EUC, tube, options=SolveOptions(tol=1e-6))
    assert rep.converged
    assert abs(rep.area - oracle) / oracle < 0.02

    far = tube_mesh(1.0, -1.0, 1.0, 32, 16)
    with pytest.raises(PinchDetected):
        solve_mesh(EUC, far, options=SolveOptions(tol=1e-8))
    assert time.perf_counter() - t0 < 120.0


def test_criterion_10_periodic_assemblies():
    t0 = time.perf_counter()
    a = 0.5
    rng = np.random.default_rng(1010)
    pts = rng.uniform(-1.5, 1.5, size=(100, 3))
    pairs = [
        (VerticalRotation(a, 0.0), VerticalRotation(0.0, a), GroupPoint(-2 * a, 2 * a, 0.0)),
        (VerticalRotation(-a, 0.0), VerticalRotation(0.0, a), GroupPoint(2 * a, 2 * a, 0.0)),
    ]
    for model in (HEIS, SOL):
        for first, second, shift in pairs:
            trans = LeftTranslation(shift)
            for p in pts:
                q, _ = apply_isometry(model, first, p)
                r, _ = apply_isometry(model, second, q)
                s, _ = apply_isometry(model, trans, p)
                assert np.max(np.abs(r.array - s.array)) <= 1e-12

    seams = {}
    for model in (EUC, HEIS):
        pieces = {}
        for h in (0.04, 0.02):
            tri = triangulate(resolve_contour(ContourSpec.doubly(a, 0.5)), h)
            surf, rep = solve_graph(model, tri, options=SolveOptions(tol=1e-10))
            assert rep.converged
            pieces[h] = surf
        asm = build_doubly(model, pieces[0.02], 4)
        for t in asm.generators:
            assert periodicity_defect(model, asm, t) < 0.02
            if model is EUC:
                assert periodicity_defect(model, asm, t) < 1e-9
        t1, t2 = asm.generators
        assert np.array_equal(
            group_multiply(model, t1, t2).array, group_multiply(model, t2, t1).array
        )
        seams[model.array.tobytes()] = [
            seam_curvature(model, build_doubly(model, pieces[h], 2))
            for h in (0.04, 0.02)
        ]
    for coarse, fine in seams.values():
        assert fine < coarse / 1.5
    assert time.perf_counter() - t0 < 120.0
