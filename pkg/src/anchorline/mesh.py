"""Triangle meshes and ASCII OBJ/PLY loading."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NonTriangleFace(ParseError):
    pass


class EmptyMesh(ValueError):
    pass


@dataclass
class TriangleMesh:
    vertices: np.ndarray  # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int64
    dropped_faces: int = 0

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if not np.isfinite(self.vertices).all():
            raise ValueError("mesh vertices must be finite")
        if len(self.triangles) and (
            self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)
        ):
            raise ValueError("triangle index out of range")

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self.vertices) == 0:
            raise EmptyMesh("mesh has no vertices")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def triangle_corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        v, t = self.vertices, self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]


def _triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def _drop_degenerate(vertices: np.ndarray, triangles: np.ndarray) -> tuple[np.ndarray, int]:
    if len(triangles) == 0:
        return triangles, 0
    keep = _triangle_areas(vertices, triangles) > 1e-12
    return triangles[keep], int((~keep).sum())


def _parse_obj(lines: list[str]) -> tuple[np.ndarray, np.ndarray]:
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ParseError("vertex needs 3 coordinates", lineno)
            try:
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError:
                raise ParseError("bad vertex coordinate", lineno) from None
        elif tag == "f":
            refs = parts[1:]
            if len(refs) != 3:
                raise NonTriangleFace(f"face has {len(refs)} vertices", lineno)
            face = []
            for ref in refs:
                idx_text = ref.split("/")[0]
                try:
                    idx = int(idx_text)
                except ValueError:
                    raise ParseError(f"bad face index {ref!r}", lineno) from None
                if idx < 1 or idx > len(vertices):
                    raise ParseError(f"face index {idx} out of range", lineno)
                face.append(idx - 1)
            faces.append(face)
        # other tags (vn, vt, o, g, s, usemtl, mtllib) are ignored
    return np.array(vertices, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def _parse_ply(lines: list[str]) -> tuple[np.ndarray, np.ndarray]:
    if not lines or lines[0].strip() != "ply":
        raise ParseError("not a PLY file", 1)
    n_vertices = n_faces = None
    vertex_props: list[str] = []
    in_vertex_element = False
    header_end = None
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if line.startswith("comment"):
            continue
        if line.startswith("format"):
            if "ascii" not in line:
                raise ParseError("only ascii PLY is supported", lineno)
        elif line.startswith("element vertex"):
            n_vertices = int(line.split()[2])
            in_vertex_element = True
        elif line.startswith("element face"):
            n_faces = int(line.split()[2])
            in_vertex_element = False
        elif line.startswith("element"):
            in_vertex_element = False
        elif line.startswith("property") and in_vertex_element:
            vertex_props.append(line.split()[-1])
        elif line == "end_header":
            header_end = lineno
            break
    if header_end is None or n_vertices is None or n_faces is None:
        raise ParseError("incomplete PLY header", len(lines))
    try:
        cols = [vertex_props.index(axis) for axis in ("x", "y", "z")]
    except ValueError:
        raise ParseError("vertex element must have x, y, z properties", header_end) from None
    vertices = []
    faces = []
    body = lines[header_end:]
    if len(body) < n_vertices + n_faces:
        raise ParseError("truncated PLY body", len(lines))
    for i in range(n_vertices):
        lineno = header_end + 1 + i
        parts = body[i].split()
        try:
            vertices.append([float(parts[c]) for c in cols])
        except (ValueError, IndexError):
            raise ParseError("bad vertex record", lineno) from None
    for i in range(n_faces):
        lineno = header_end + 1 + n_vertices + i
        parts = body[n_vertices + i].split()
        try:
            count = int(parts[0])
            idx = [int(p) for p in parts[1 : 1 + count]]
        except (ValueError, IndexError):
            raise ParseError("bad face record", lineno) from None
        if count != 3:
            raise NonTriangleFace(f"face has {count} vertices", lineno)
        if any(j < 0 or j >= n_vertices for j in idx):
            raise ParseError("face index out of range", lineno)
        faces.append(idx)
    return np.array(vertices, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def load_mesh(source: str | os.PathLike | bytes, fmt: str | None = None) -> TriangleMesh:
    """Load an ASCII OBJ or PLY mesh, dropping zero-area faces.

    fmt is inferred from the path suffix when source is a path; it must be
    given explicitly ("obj" or "ply") for bytes input.
    """
    if isinstance(source, bytes):
        if fmt is None:
            raise ValueError("fmt is required for bytes input")
        text = source.decode("utf-8")
    else:
        path = Path(source)
        if fmt is None:
            fmt = path.suffix.lstrip(".").lower()
        text = path.read_text(encoding="utf-8")
    fmt = fmt.lower()
    lines = text.splitlines()
    if fmt == "obj":
        vertices, triangles = _parse_obj(lines)
    elif fmt == "ply":
        vertices, triangles = _parse_ply(lines)
    else:
        raise ValueError(f"unsupported mesh format {fmt!r}")
    if len(vertices) == 0 or len(triangles) == 0:
        raise EmptyMesh("mesh has no triangles")
    triangles, dropped = _drop_degenerate(vertices, triangles)
    if len(triangles) == 0:
        raise EmptyMesh("all faces were degenerate")
    return TriangleMesh(vertices, triangles, dropped_faces=dropped)


def save_obj(mesh: TriangleMesh, path: str | os.PathLike) -> None:
    out = []
    for v in mesh.vertices:
        out.append(f"v {v[0]} {v[1]} {v[2]}")
    for t in mesh.triangles:
        out.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
