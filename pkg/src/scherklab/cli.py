"""Command-line front door: check-geometry | douglas | solve | build.

Every command reads an optional key=value config file, applies flag
overrides, runs, and writes its artifacts plus a manifest.json into the
output directory.  All numeric output uses 12 significant digits and
fixed row order, so identical configs produce byte-identical CSV and
mesh files (the manifest carries wall-clock timings and is exempt).

Exit codes: 0 success, 2 argument or parse error, 3 area-comparison
precondition failed, 4 solver did not converge, 5 assembly failure.
Geometry residuals above threshold exit 1.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import RunConfig, RunManifest, make_run_config, read_config_file, write_manifest
from .douglas import (
    DoublyConfig,
    SinglyConfig,
    a_max_doubly,
    d_min_singly,
    doubly_face_areas,
    epsilon_max_doubly,
    singly_face_areas,
)
from .errors import (
    AssumptionViolated,
    InvalidConfig,
    InvalidForModel,
    InvalidPreset,
    PinchDetected,
    ScherklabError,
    WeldFailure,
)
from .fileio import fmt, write_csv, write_generators, write_mesh
from .geometry import (
    GroupPoint,
    KillingField,
    ModelMatrix,
    covariant_derivative_frame,
    exp_at,
    frame_connection,
    left_frame,
    metric_at,
)
from .isometry import (
    HorizontalRotationParallelX,
    LeftTranslation,
    VerticalRotation,
    verify_isometry,
)
from .meshing import ContourSpec, DomainPolygon, resolve_contour, triangulate
from .periodic import build_doubly, build_singly, periodicity_defect, seam_curvature
from .plateau import SolveOptions, doubly_probe_grid, flux, solve_graph, solve_sequence
from .surfaces import euler_characteristic, height_at, lift

EXIT_OK = 0
EXIT_ARGS = 2
EXIT_PRECONDITION = 3
EXIT_NO_CONVERGENCE = 4
EXIT_BUILD = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scherklab",
        description="Minimal-surface experiments in metric semidirect products",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("check-geometry", "run the geometry invariant suite for a model"),
        ("douglas", "area comparison for the barrier prism"),
        ("solve", "Plateau solve for one height or an increasing family"),
        ("build", "solve a fundamental piece and weld the periodic assembly"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--model", help="euclidean|heisenberg|sol|solc:<v>|a,b,c,d")
        p.add_argument("--kind", choices=["doubly", "singly"])
        p.add_argument("--a", type=float, help="leg length / half-width")
        p.add_argument("--eps", type=float, help="corner-cut distance")
        p.add_argument("--c0", type=float, help="lower height")
        p.add_argument("--c1", type=float, help="upper height (default solve height)")
        p.add_argument("--d", type=float, help="box length for the singly prism")
        p.add_argument("--c-list", dest="c_list", help="comma list of contour heights")
        p.add_argument("--h", type=float, help="target mesh spacing")
        p.add_argument("--tol", type=float, help="solver gradient tolerance")
        p.add_argument("--copies", type=int, help="lattice copies per direction")
        p.add_argument("--out", help="output directory")
        p.add_argument("--jobs", type=int, help="worker count for independent solves")
        if name == "solve":
            p.add_argument(
                "--benchmark", action="store_true",
                help="euclidean calibration: error-vs-h table on the Scherk graph",
            )
    return parser


def _assemble_config(args: argparse.Namespace) -> RunConfig:
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {
        key: getattr(args, key)
        for key in (
            "model", "kind", "a", "eps", "c0", "c1", "d",
            "c_list", "h", "tol", "copies", "out", "jobs",
        )
    }
    return make_run_config(file_values, overrides)


# ---------------------------------------------------------------------------
# check-geometry


def _geometry_rows(model: ModelMatrix):
    rng = np.random.default_rng(20240817)
    pts = rng.uniform(-2.0, 2.0, size=(100, 3))

    worst_frame = 0.0
    for p in pts:
        g = metric_at(model, p).matrix
        fr = left_frame(model, p)
        E = np.column_stack([fr.E1.components, fr.E2.components, fr.E3.components])
        worst_frame = max(worst_frame, float(np.max(np.abs(E.T @ g @ E - np.eye(3)))))

    worst_det = 0.0
    for z in rng.uniform(-2.0, 2.0, size=100):
        expected = np.exp(z * model.trace)
        got = exp_at(model, float(z)).det
        worst_det = max(worst_det, abs(got - expected) / abs(expected))

    table = frame_connection(model)
    worst_conn = 0.0
    for p in pts[:20]:
        worst_conn = max(
            worst_conn, float(np.max(np.abs(covariant_derivative_frame(model, p) - table)))
        )

    rows = [
        ("frame_orthonormality", worst_frame, 1e-12),
        ("exp_determinant_rel", worst_det, 1e-10),
        ("connection_table", worst_conn, 1e-10),
        ("vertical_rotation_isometry", verify_isometry(model, VerticalRotation(0.3, -0.2)), 1e-10),
        (
            "left_translation_isometry",
            verify_isometry(model, LeftTranslation(GroupPoint(0.2, -0.3, 0.4))),
            1e-10,
        ),
    ]
    if model.antidiagonal:
        rows.append(
            (
                "horizontal_rotation_isometry",
                verify_isometry(model, HorizontalRotationParallelX(0.1)),
                1e-10,
            )
        )
    return rows


def _cmd_check_geometry(cfg: RunConfig, manifest: RunManifest) -> int:
    t0 = time.perf_counter()
    rows = _geometry_rows(cfg.model_matrix)
    ok = all(res < thr for _, res, thr in rows)
    out_csv = os.path.join(cfg.out, "geometry_checks.csv")
    write_csv(
        out_csv,
        ["check", "residual", "threshold", "status"],
        [(name, res, thr, "pass" if res < thr else "FAIL") for name, res, thr in rows],
    )
    manifest.add_artifact(out_csv)
    manifest.add_step("check-geometry", "pass" if ok else "fail", time.perf_counter() - t0)
    for name, res, thr in rows:
        print(f"{name}: {fmt(res)} (threshold {fmt(thr)})")
    return EXIT_OK if ok else 1


# ---------------------------------------------------------------------------
# douglas


def _cmd_douglas(cfg: RunConfig, manifest: RunManifest) -> int:
    model = cfg.model_matrix
    t0 = time.perf_counter()
    config_cols = ["model", "kind", "a", "eps", "c0", "c1", "d"]
    config_vals = [cfg.model, cfg.kind, cfg.a, cfg.eps, cfg.c0, cfg.c1, cfg.d]

    if cfg.kind == "doubly":
        amax = a_max_doubly(model, cfg.c0, cfg.c1)
        print(f"a_max = {fmt(amax)}")
        if cfg.a >= amax:
            print(f"precondition failed: a = {fmt(cfg.a)} must stay below a_max = {fmt(amax)}")
            manifest.add_step("douglas", "precondition-failed", time.perf_counter() - t0)
            return EXIT_PRECONDITION
        epsmax = epsilon_max_doubly(model, cfg.a, cfg.c0, cfg.c1)
        print(f"eps_max = {fmt(epsmax)}")
        report = doubly_face_areas(model, DoublyConfig(cfg.a, cfg.eps, cfg.c0, cfg.c1))
    else:
        try:
            dmin = d_min_singly(model, cfg.a, cfg.eps, cfg.c0)
        except AssumptionViolated as exc:
            print(f"precondition failed: {exc}")
            manifest.add_step("douglas", "precondition-failed", time.perf_counter() - t0)
            return EXIT_PRECONDITION
        print(f"d_min = {fmt(dmin)}")
        report = singly_face_areas(model, SinglyConfig(cfg.a, cfg.eps, cfg.c0, cfg.d))

    face_names = list(report.faces)
    out_csv = os.path.join(cfg.out, "douglas.csv")
    write_csv(
        out_csv,
        config_cols + face_names + ["margin"],
        [tuple(config_vals) + tuple(report.faces[k] for k in face_names) + (report.margin,)],
    )
    manifest.add_artifact(out_csv)
    status = "satisfied" if report.satisfied else "violated"
    manifest.add_step("douglas", status, time.perf_counter() - t0)
    print(f"margin = {fmt(report.margin)} ({status})")
    return EXIT_OK if report.satisfied else EXIT_PRECONDITION


# ---------------------------------------------------------------------------
# solve


def _contour(kind: str, a: float, c: float):
    spec = ContourSpec.doubly(a, c) if kind == "doubly" else ContourSpec.singly(a, c)
    return resolve_contour(spec)


_REPORT_COLS = ["c", "iterations", "converged", "grad_norm", "area", "max_mean_curvature"]


def _solve_single(cfg: RunConfig, manifest: RunManifest) -> int:
    model = cfg.model_matrix
    c = cfg.heights[0]
    t0 = time.perf_counter()
    tri = triangulate(_contour(cfg.kind, cfg.a, c), cfg.h)
    surf, rep = solve_graph(model, tri, options=SolveOptions(tol=cfg.tol))
    mesh = lift(surf)
    fx = flux(model, mesh, KillingField(1.0, 0.0))
    fd = flux(model, mesh, KillingField(1.0, 1.0))
    dt = time.perf_counter() - t0

    mesh_path = os.path.join(cfg.out, f"solution_{cfg.kind}_c{c:g}.obj")
    write_mesh(mesh_path, mesh)
    report_path = os.path.join(cfg.out, "solve_report.csv")
    write_csv(
        report_path,
        ["model", "kind", "a", "h"] + _REPORT_COLS + ["flux_x", "flux_diag"],
        [
            (
                cfg.model, cfg.kind, cfg.a, cfg.h,
                c, rep.iterations, rep.converged, rep.grad_norm, rep.area,
                rep.max_abs_mean_curvature, fx, fd,
            )
        ],
    )
    manifest.add_artifact(mesh_path)
    manifest.add_artifact(report_path)
    manifest.add_step("solve", "converged" if rep.converged else "not-converged", dt)
    print(
        f"c = {fmt(c)}: iterations {rep.iterations}, area {fmt(rep.area)}, "
        f"max |H| {fmt(rep.max_abs_mean_curvature)}, flux_x {fmt(fx)}, flux_diag {fmt(fd)}"
    )
    if not rep.converged:
        print(f"solver stopped at gradient norm {fmt(rep.grad_norm)} without converging")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _seq_worker(payload):
    model, kind, a, c, h, tol, probes = payload
    tri = triangulate(_contour(kind, a, c), h)
    surf, rep = solve_graph(model, tri, options=SolveOptions(tol=tol))
    return height_at(surf, probes), rep.iterations, rep.converged, rep.grad_norm, rep.area


def _solve_family_parallel(cfg: RunConfig):
    """Independent solves per height, compared on the same interior
    sample points as the sequential path."""
    model = cfg.model_matrix
    c_vals = cfg.heights
    if cfg.kind == "singly":
        xs = np.linspace(0.15, 0.85, 8) * c_vals[0]
        ys = np.linspace(0.3, 0.7, 5) * cfg.a
        probes = np.array([(x, y) for x in xs for y in ys])
    else:
        probes = doubly_probe_grid(cfg.a)
    payloads = [(model, cfg.kind, cfg.a, c, cfg.h, cfg.tol, probes) for c in c_vals]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        results = list(pool.map(_seq_worker, payloads))
    heights = np.array([r[0] for r in results])
    steps = np.diff(heights, axis=0)
    rows = [
        (c, it, conv, gn, area)
        for c, (_, it, conv, gn, area) in zip(c_vals, results)
    ]
    cauchy = tuple(float(np.max(np.abs(s))) for s in steps)
    step_min = float(steps.min()) if steps.size else 0.0
    all_converged = all(r[2] for r in rows)
    return rows, cauchy, step_min, all_converged


def _solve_family(cfg: RunConfig, manifest: RunManifest) -> int:
    t0 = time.perf_counter()
    if cfg.jobs > 1:
        rows, cauchy, step_min, all_converged = _solve_family_parallel(cfg)
    else:
        seq = solve_sequence(
            cfg.model_matrix, cfg.kind, cfg.a, cfg.heights, cfg.h,
            options=SolveOptions(tol=cfg.tol),
        )
        rows = [
            (c, rep.iterations, rep.converged, rep.grad_norm, rep.area)
            for c, rep in zip(seq.c_values, seq.solve_reports)
        ]
        cauchy, step_min = seq.cauchy, seq.step_min
        all_converged = all(rep.converged for rep in seq.solve_reports)
    dt = time.perf_counter() - t0

    out_csv = os.path.join(cfg.out, "sequence_report.csv")
    gaps = ("",) + cauchy
    write_csv(
        out_csv,
        ["c", "iterations", "converged", "grad_norm", "area", "sup_gap_to_previous"],
        [row + (gap,) for row, gap in zip(rows, gaps)],
    )
    manifest.add_artifact(out_csv)
    monotone = step_min >= -1e-9
    manifest.add_step("solve-sequence", "monotone" if monotone else "NOT-monotone", dt)
    print(f"most negative pointwise increment: {fmt(step_min)}")
    print(f"sup gaps between consecutive heights: {', '.join(fmt(g) for g in cauchy)}")
    if not all_converged:
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _cmd_benchmark(cfg: RunConfig, manifest: RunManifest) -> int:
    """Error-vs-h table for the Scherk graph over a square.

    The exact solution log(cos x / cos y) exists for the flat metric
    only, so the study refuses any other model.  Sup errors over the
    interior should drop by about 4 per halving of h.
    """
    model = cfg.model_matrix
    if not np.array_equal(model.array, ModelMatrix.euclidean().array):
        raise InvalidConfig("the calibration study needs --model euclidean")

    def scherk(x, y):
        return float(np.log(np.cos(x) / np.cos(y)))

    L = 0.7
    poly = DomainPolygon(
        vertices=np.array([[-L, -L], [L, -L], [L, L], [-L, L]]),
        edge_heights=(scherk,) * 4,
    )
    t0 = time.perf_counter()
    rows = []
    sup_prev = None
    surf = None
    all_converged = True
    for h in (0.04, 0.02, 0.01):
        tri = triangulate(poly, h)
        init = None
        if surf is not None:
            vals = height_at(surf, tri.vertices)
            init = np.where(np.isnan(vals), 0.0, vals)
        surf, rep = solve_graph(model, tri, init=init, options=SolveOptions(tol=cfg.tol))
        all_converged = all_converged and rep.converged
        exact = np.log(np.cos(tri.vertices[:, 0]) / np.cos(tri.vertices[:, 1]))
        diff = np.abs(surf.heights - exact)[~tri.is_boundary]
        sup = float(diff.max())
        rms = float(np.sqrt(np.mean(diff**2)))
        ratio = "" if sup_prev is None else sup_prev / sup
        rows.append((h, tri.n_vertices, rep.iterations, rep.converged, sup, rms, ratio))
        sup_prev = sup
    dt = time.perf_counter() - t0

    out_csv = os.path.join(cfg.out, "benchmark.csv")
    write_csv(
        out_csv,
        ["h", "n_vertices", "iterations", "converged", "sup_error", "rms_error", "ratio"],
        rows,
    )
    manifest.add_artifact(out_csv)
    manifest.add_step("benchmark", "converged" if all_converged else "not-converged", dt)
    for h, n, iters, conv, sup, rms, ratio in rows:
        tail = f", ratio {fmt(ratio)}" if ratio != "" else ""
        print(f"h = {fmt(h)}: vertices {n}, sup error {fmt(sup)}, rms {fmt(rms)}{tail}")
    if not all_converged:
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _cmd_solve(cfg: RunConfig, manifest: RunManifest) -> int:
    if len(cfg.heights) == 1:
        return _solve_single(cfg, manifest)
    return _solve_family(cfg, manifest)


# ---------------------------------------------------------------------------
# build


def _cmd_build(cfg: RunConfig, manifest: RunManifest) -> int:
    model = cfg.model_matrix
    c = cfg.heights[0]
    limit = 36 if cfg.kind == "doubly" else 6
    if cfg.copies > limit:
        print(f"copies = {cfg.copies} exceeds the {cfg.kind} limit {limit}")
        return EXIT_ARGS

    t0 = time.perf_counter()
    tri = triangulate(_contour(cfg.kind, cfg.a, c), cfg.h)
    surf, rep = solve_graph(model, tri, options=SolveOptions(tol=cfg.tol))
    manifest.add_step("solve-piece", "converged" if rep.converged else "not-converged",
                      time.perf_counter() - t0)
    if not rep.converged:
        print(f"piece solve stopped at gradient norm {fmt(rep.grad_norm)}")
        return EXIT_NO_CONVERGENCE

    t1 = time.perf_counter()
    builder = build_doubly if cfg.kind == "doubly" else build_singly
    try:
        asm = builder(model, surf, cfg.copies)
    except (WeldFailure, InvalidForModel, InvalidConfig) as exc:
        print(f"assembly failed: {exc}")
        manifest.add_step("build", "failed", time.perf_counter() - t1)
        return EXIT_BUILD
    defects = [periodicity_defect(model, asm, t) for t in asm.generators]
    seam = seam_curvature(model, asm)
    dt = time.perf_counter() - t1

    mesh_path = os.path.join(cfg.out, f"assembly_{cfg.kind}.obj")
    write_mesh(mesh_path, asm.mesh)
    gen_path = os.path.join(cfg.out, f"generators_{cfg.kind}.txt")
    write_generators(gen_path, asm.generators)
    report_path = os.path.join(cfg.out, "build_report.csv")
    defect_cols = [f"defect_t{i + 1}" for i in range(len(defects))]
    write_csv(
        report_path,
        ["model", "kind", "a", "c", "h", "copies", "n_vertices", "n_triangles",
         "euler_characteristic", "seam_curvature"] + defect_cols,
        [
            (
                cfg.model, cfg.kind, cfg.a, c, cfg.h, cfg.copies,
                asm.mesh.n_vertices, asm.mesh.n_triangles,
                euler_characteristic(asm.mesh), seam,
            )
            + tuple(defects)
        ],
    )
    for path in (mesh_path, gen_path, report_path):
        manifest.add_artifact(path)
    manifest.add_step("build", "ok", dt)

    for t in asm.generators:
        print(f"generator: ({fmt(t.x)}, {fmt(t.y)}, {fmt(t.z)})")
    print(f"periodicity defects: {', '.join(fmt(d) for d in defects)}")
    print(f"seam curvature: {fmt(seam)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


_COMMANDS = {
    "check-geometry": _cmd_check_geometry,
    "douglas": _cmd_douglas,
    "solve": _cmd_solve,
    "build": _cmd_build,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _assemble_config(args)
    except (InvalidConfig, InvalidPreset, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ARGS

    os.makedirs(cfg.out, exist_ok=True)
    manifest = RunManifest(config=cfg.echo())
    command = _COMMANDS[args.command]
    if args.command == "solve" and getattr(args, "benchmark", False):
        command = _cmd_benchmark
    try:
        code = command(cfg, manifest)
    except (InvalidConfig, InvalidPreset) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except PinchDetected as exc:
        print(f"solver aborted: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except ScherklabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUILD
    write_manifest(os.path.join(cfg.out, "manifest.json"), manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
