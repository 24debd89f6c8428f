"""Signed distance grids built from triangle meshes.

The unsigned field stores each voxel center's exact distance to the mesh
(nearest-vertex upper bounds from a k-d tree plus per-triangle bounding-box
rejection keep it fast without changing the result). Signs come from a
6-connected flood fill from the grid boundary instead of surface
reconstruction: voxels that cannot be reached through clearly-free voxels
are labeled interior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange
from scipy import ndimage
from scipy.spatial import cKDTree

from .mesh import EmptyMesh, TriangleMesh


@dataclass
class SdfGrid:
    origin: np.ndarray  # world position of voxel (0, 0, 0) center
    resolution: float
    values: np.ndarray  # (nx, ny, nz) signed meters, negative inside

    def __post_init__(self) -> None:
        self.origin = np.asarray(self.origin, dtype=float).reshape(3)
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.values.ndim != 3 or min(self.values.shape) < 1:
            raise ValueError("values must be a non-empty 3d array")
        if not np.isfinite(self.values).all():
            raise ValueError("sdf values must be finite")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape

    def inside_mask(self) -> np.ndarray:
        """Sign labels: True where a voxel was labeled interior/occupied.

        Voxel centers exactly on the surface store -0.0, so the label is
        the sign bit rather than a < 0 comparison.
        """
        return np.signbit(self.values)

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.resolution * np.arange(self.values.shape[axis])

    def voxel_center(self, i: int, j: int, k: int) -> np.ndarray:
        return self.origin + self.resolution * np.array([i, j, k], dtype=float)


def grid_spec_for_mesh(
    mesh: TriangleMesh, resolution: float, margin_voxels: int = 1
) -> tuple[np.ndarray, tuple[int, int, int]]:
    """Origin and dims covering the mesh bounds plus a voxel margin."""
    if margin_voxels < 1:
        raise ValueError("margin_voxels must be >= 1")
    lo, hi = mesh.bounds()
    origin = lo - margin_voxels * resolution
    spans = np.ceil((hi - lo) / resolution).astype(int)
    dims = tuple(int(s) + 2 * margin_voxels + 1 for s in spans)
    return origin, dims


def voxel_centers(origin: np.ndarray, dims: tuple[int, int, int], resolution: float) -> np.ndarray:
    """All voxel centers as an (nx*ny*nz, 3) array in C order."""
    axes = [origin[a] + resolution * np.arange(dims[a]) for a in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])


@njit(cache=True, fastmath=False)
def _point_triangle_sqdist(px, py, pz, ax, ay, az, bx, by, bz, cx, cy, cz):
    # Closest point on a triangle via barycentric region tests.
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    apx, apy, apz = px - ax, py - ay, pz - az
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return apx * apx + apy * apy + apz * apz
    bpx, bpy, bpz = px - bx, py - by, pz - bz
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bpx * bpx + bpy * bpy + bpz * bpz
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        ex, ey, ez = apx - v * abx, apy - v * aby, apz - v * abz
        return ex * ex + ey * ey + ez * ez
    cpx, cpy, cpz = px - cx, py - cy, pz - cz
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cpx * cpx + cpy * cpy + cpz * cpz
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        ex, ey, ez = apx - w * acx, apy - w * acy, apz - w * acz
        return ex * ex + ey * ey + ez * ez
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        ex = bpx - w * (cx - bx)
        ey = bpy - w * (cy - by)
        ez = bpz - w * (cz - bz)
        return ex * ex + ey * ey + ez * ez
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    ex = apx - (v * abx + w * acx)
    ey = apy - (v * aby + w * acy)
    ez = apz - (v * abz + w * acz)
    return ex * ex + ey * ey + ez * ez


@njit(cache=True, parallel=True, fastmath=False)
def _min_distance_kernel(points, ta, tb, tc, bbmin, bbmax, upper):
    n = points.shape[0]
    m = ta.shape[0]
    out = np.empty(n)
    for i in prange(n):
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        best = upper[i] * upper[i]
        for t in range(m):
            # lower bound: squared distance to the triangle's AABB
            lb = 0.0
            d = bbmin[t, 0] - px
            if d < 0.0:
                d = px - bbmax[t, 0]
            if d > 0.0:
                lb += d * d
            d = bbmin[t, 1] - py
            if d < 0.0:
                d = py - bbmax[t, 1]
            if d > 0.0:
                lb += d * d
            d = bbmin[t, 2] - pz
            if d < 0.0:
                d = pz - bbmax[t, 2]
            if d > 0.0:
                lb += d * d
            if lb > best:
                continue
            sq = _point_triangle_sqdist(
                px, py, pz,
                ta[t, 0], ta[t, 1], ta[t, 2],
                tb[t, 0], tb[t, 1], tb[t, 2],
                tc[t, 0], tc[t, 1], tc[t, 2],
            )
            if sq < best:
                best = sq
        out[i] = np.sqrt(best)
    return out


def unsigned_distance(
    mesh: TriangleMesh,
    origin: np.ndarray,
    dims: tuple[int, int, int],
    resolution: float,
) -> np.ndarray:
    """Exact voxel-center-to-mesh distances on a regular grid."""
    if len(mesh.triangles) == 0:
        raise EmptyMesh("cannot compute distances for an empty mesh")
    origin = np.asarray(origin, dtype=float).reshape(3)
    points = voxel_centers(origin, dims, resolution)
    # Nearest mesh vertex is an exact upper bound on the surface distance.
    upper = cKDTree(mesh.vertices).query(points, workers=-1)[0]
    ta, tb, tc = mesh.triangle_corners()
    bbmin = np.minimum(np.minimum(ta, tb), tc)
    bbmax = np.maximum(np.maximum(ta, tb), tc)
    dist = _min_distance_kernel(
        np.ascontiguousarray(points),
        np.ascontiguousarray(ta),
        np.ascontiguousarray(tb),
        np.ascontiguousarray(tc),
        np.ascontiguousarray(bbmin),
        np.ascontiguousarray(bbmax),
        np.ascontiguousarray(upper),
    )
    return dist.reshape(dims)


def sign_by_flood_fill(
    distances: np.ndarray, origin: np.ndarray, resolution: float
) -> SdfGrid:
    """Label voxels reachable from the grid boundary as outside (positive).

    A voxel is passable when its unsigned distance exceeds half a voxel;
    6-connected components of passable voxels that touch the boundary are
    outside, everything else (enclosed air and the surface band) is inside.
    """
    passable = distances > resolution / 2.0
    structure = ndimage.generate_binary_structure(3, 1)
    labels, _ = ndimage.label(passable, structure=structure)
    boundary = np.concatenate(
        [
            labels[0, :, :].ravel(), labels[-1, :, :].ravel(),
            labels[:, 0, :].ravel(), labels[:, -1, :].ravel(),
            labels[:, :, 0].ravel(), labels[:, :, -1].ravel(),
        ]
    )
    outside_labels = np.unique(boundary)
    outside_labels = outside_labels[outside_labels != 0]
    outside = np.isin(labels, outside_labels)
    values = np.where(outside, distances, -distances)
    return SdfGrid(origin=np.asarray(origin, dtype=float), resolution=resolution, values=values)


def sdf_from_mesh(
    mesh: TriangleMesh,
    resolution: float,
    margin_voxels: int = 1,
    origin: np.ndarray | None = None,
    dims: tuple[int, int, int] | None = None,
) -> SdfGrid:
    """Full pipeline: unsigned distances then flood-fill sign labeling."""
    if origin is None or dims is None:
        auto_origin, auto_dims = grid_spec_for_mesh(mesh, resolution, margin_voxels)
        origin = auto_origin if origin is None else origin
        dims = auto_dims if dims is None else dims
    distances = unsigned_distance(mesh, origin, dims, resolution)
    return sign_by_flood_fill(distances, origin, resolution)
