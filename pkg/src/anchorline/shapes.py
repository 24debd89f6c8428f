"""Synthetic meshes used by tests, fixtures, and demo scripts."""

from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh

# Faces of an axis-aligned box as quads of corner indices, outward winding.
_BOX_QUADS = (
    (0, 1, 3, 2),  # -z
    (4, 6, 7, 5),  # +z
    (0, 4, 5, 1),  # -y
    (2, 3, 7, 6),  # +y
    (0, 2, 6, 4),  # -x
    (1, 5, 7, 3),  # +x
)


def box_mesh(center, size) -> TriangleMesh:
    """Closed axis-aligned box; size is the full extent per axis."""
    center = np.asarray(center, dtype=float)
    half = np.asarray(size, dtype=float) * 0.5
    corners = np.array(
        [
            [sx, sy, sz]
            for sz in (-1, 1)
            for sy in (-1, 1)
            for sx in (-1, 1)
        ],
        dtype=float,
    )
    vertices = center + corners * half
    triangles = []
    for a, b, c, d in _BOX_QUADS:
        triangles.append([a, b, c])
        triangles.append([a, c, d])
    return TriangleMesh(vertices, np.array(triangles, dtype=np.int64))


def merge_meshes(*meshes: TriangleMesh) -> TriangleMesh:
    vertices = []
    triangles = []
    offset = 0
    for m in meshes:
        vertices.append(m.vertices)
        triangles.append(m.triangles + offset)
        offset += len(m.vertices)
    return TriangleMesh(np.vstack(vertices), np.vstack(triangles))


def icosphere(radius: float = 1.0, subdivisions: int = 2) -> TriangleMesh:
    """Icosahedron subdivided and projected to a sphere; 20*4^n triangles."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    vertices = [v for v in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in cache:
                mid = vertices[i] + vertices[j]
                mid /= np.linalg.norm(mid)
                cache[key] = len(vertices)
                vertices.append(mid)
            return cache[key]

        next_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            next_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = next_faces
    return TriangleMesh(np.array(vertices) * radius, np.array(faces, dtype=np.int64))


def walled_room(
    width: float = 10.0,
    depth: float = 10.0,
    height: float = 3.0,
    thickness: float = 0.2,
) -> TriangleMesh:
    """Four solid walls around an open-top room footprint.

    The inner free area spans [0, width] x [0, depth]; walls rise from z=0
    to z=height on the outside of that footprint. No floor or ceiling, so
    the interior stays connected to the outside for sign labeling.
    """
    t = thickness
    h = height
    walls = [
        # south (y < 0 side) and north, spanning the full outer width
        box_mesh([width / 2, -t / 2, h / 2], [width + 2 * t, t, h]),
        box_mesh([width / 2, depth + t / 2, h / 2], [width + 2 * t, t, h]),
        # west and east, between the other two walls
        box_mesh([-t / 2, depth / 2, h / 2], [t, depth, h]),
        box_mesh([width + t / 2, depth / 2, h / 2], [t, depth, h]),
    ]
    return merge_meshes(*walls)
