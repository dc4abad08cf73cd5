"""Plain-text artifacts: Wavefront-style meshes, generator lists, CSV tables.

Everything here is deterministic byte-for-byte: fixed 12-significant-digit
formatting, LF line endings, rows written in the order given.  Mesh files
carry geometry and connectivity only; boundary flags are recomputed from
edge counts on read.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidConfig
from .geometry import GroupPoint
from .surfaces import ImmersedMesh, boundary_vertex_flags


def fmt(x) -> str:
    """12 significant digits, trailing-zero free."""
    return "%.12g" % float(x)


def write_mesh(path, mesh: ImmersedMesh) -> None:
    """v/f ASCII mesh with 1-based face indices."""
    with open(path, "w", newline="\n") as f:
        for v in mesh.vertices:
            f.write(f"v {fmt(v[0])} {fmt(v[1])} {fmt(v[2])}\n")
        for t in mesh.triangles:
            f.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def read_mesh(path) -> ImmersedMesh:
    verts = []
    tris = []
    with open(path) as f:
        for ln, line in enumerate(f, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v" and len(parts) == 4:
                verts.append([float(p) for p in parts[1:]])
            elif parts[0] == "f" and len(parts) == 4:
                tris.append([int(p) - 1 for p in parts[1:]])
            else:
                raise InvalidConfig(f"{path}:{ln}: unrecognized mesh line {line!r}")
    V = np.asarray(verts, dtype=float)
    T = np.asarray(tris, dtype=int)
    if V.size == 0 or T.size == 0:
        raise InvalidConfig(f"{path}: mesh file needs both v and f lines")
    if T.min() < 0 or T.max() >= V.shape[0]:
        raise InvalidConfig(f"{path}: face index out of range")
    return ImmersedMesh(V, T, boundary_vertex_flags(T, V.shape[0]))


def write_generators(path, generators) -> None:
    """One lattice generator per line, three numbers."""
    with open(path, "w", newline="\n") as f:
        for g in generators:
            arr = g.array if isinstance(g, GroupPoint) else np.asarray(g, dtype=float)
            f.write(f"{fmt(arr[0])} {fmt(arr[1])} {fmt(arr[2])}\n")


def read_generators(path) -> tuple:
    out = []
    with open(path) as f:
        for ln, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise InvalidConfig(f"{path}:{ln}: generator lines carry three numbers")
            out.append(GroupPoint(*(float(p) for p in parts)))
    return tuple(out)


def write_csv(path, header, rows) -> None:
    """Header row then data rows; floats via fmt, everything else via str."""

    def cell(x):
        if isinstance(x, bool):
            return "true" if x else "false"
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        if isinstance(x, (float, np.floating)):
            return fmt(x)
        return str(x)

    with open(path, "w", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(cell(x) for x in row) + "\n")


def read_csv(path):
    with open(path) as f:
        lines = [line.rstrip("\n") for line in f if line.strip()]
    if not lines:
        raise InvalidConfig(f"{path}: empty CSV")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows
