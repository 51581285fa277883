"""Spatial geometry of voxel grids: sizes, dims, and the index->world affine."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

_COLNORM_TOL = 1e-6


@dataclass(frozen=True)
class Geometry:
    """Voxel grid geometry.

    ``affine`` maps voxel indices (voxel centers at integer coordinates)
    to world millimeters, NIfTI style. ``voxel_size`` must agree with the
    column norms of the upper-left 3x3 block.
    """

    voxel_size: np.ndarray  # (3,) mm per axis
    dims: np.ndarray        # (3,) voxel counts
    affine: np.ndarray      # (4,4) index -> world mm

    def __post_init__(self) -> None:
        vs = np.asarray(self.voxel_size, dtype=np.float64).reshape(3)
        dims = np.asarray(self.dims, dtype=np.int64).reshape(3)
        aff = np.asarray(self.affine, dtype=np.float64).reshape(4, 4)
        object.__setattr__(self, "voxel_size", vs)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "affine", aff)
        if np.any(vs <= 0):
            raise GeometryError(f"voxel_size must be strictly positive, got {vs}")
        if np.any(dims <= 0):
            raise GeometryError(f"dims must be strictly positive, got {dims}")
        if abs(np.linalg.det(aff)) < 1e-12:
            raise GeometryError("affine is not invertible")
        col_norms = np.linalg.norm(aff[:3, :3], axis=0)
        if np.any(np.abs(col_norms - vs) > _COLNORM_TOL * np.maximum(1.0, vs)):
            raise GeometryError(
                f"affine column norms {col_norms} disagree with voxel_size {vs}"
            )

    @classmethod
    def isotropic(cls, dims, voxel_size_mm: float, origin=(0.0, 0.0, 0.0)) -> "Geometry":
        """Axis-aligned geometry with equal spacing on all axes."""
        vs = np.full(3, float(voxel_size_mm))
        return cls.axis_aligned(dims, vs, origin)

    @classmethod
    def axis_aligned(cls, dims, voxel_size, origin=(0.0, 0.0, 0.0)) -> "Geometry":
        vs = np.asarray(voxel_size, dtype=np.float64).reshape(3)
        aff = np.eye(4)
        aff[:3, :3] = np.diag(vs)
        aff[:3, 3] = np.asarray(origin, dtype=np.float64)
        return cls(voxel_size=vs, dims=np.asarray(dims, dtype=np.int64), affine=aff)

    @property
    def voxel_volume_mm3(self) -> float:
        return float(abs(np.linalg.det(self.affine[:3, :3])))

    @property
    def extent_mm(self) -> np.ndarray:
        """Physical span of the grid, edge to edge."""
        return self.dims * self.voxel_size

    def world_center(self) -> np.ndarray:
        """World coordinates of the grid center."""
        c = (self.dims.astype(np.float64) - 1.0) / 2.0
        return self.affine[:3, :3] @ c + self.affine[:3, 3]

    def index_to_world(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.float64)
        return idx @ self.affine[:3, :3].T + self.affine[:3, 3]

    def world_to_index(self, world: np.ndarray) -> np.ndarray:
        world = np.asarray(world, dtype=np.float64)
        inv = np.linalg.inv(self.affine)
        return world @ inv[:3, :3].T + inv[:3, 3]

    def same_grid(self, other: "Geometry", tol_mm: float = 1e-4) -> bool:
        """True when dims match and voxel sizes agree within ``tol_mm``."""
        return bool(
            np.array_equal(self.dims, other.dims)
            and np.all(np.abs(self.voxel_size - other.voxel_size) <= tol_mm)
        )

    def resampled(self, target_voxel_size) -> "Geometry":
        """Geometry of the same field of view regridded to ``target_voxel_size``.

        Output voxel centers are placed so source and target grids share the
        outer edge of the field of view (pixel-area convention).
        """
        tvs = np.asarray(target_voxel_size, dtype=np.float64).reshape(3)
        if np.any(tvs <= 0):
            raise GeometryError("target voxel size must be positive")
        ratio = tvs / self.voxel_size
        new_dims = np.maximum(1, np.rint(self.dims / ratio).astype(np.int64))
        shift = (ratio - 1.0) / 2.0
        t = np.eye(4)
        t[:3, :3] = np.diag(ratio)
        t[:3, 3] = shift
        return Geometry(voxel_size=tvs, dims=new_dims, affine=self.affine @ t)

    def pooled(self, factor) -> "Geometry":
        """Geometry after block-averaging by integer ``factor`` per axis."""
        f = np.asarray(factor, dtype=np.int64).reshape(3)
        if np.any(f < 1):
            raise GeometryError("pool factor must be >= 1")
        new_dims = -(-self.dims // f)  # ceil; caller pads the data
        t = np.eye(4)
        t[:3, :3] = np.diag(f.astype(np.float64))
        t[:3, 3] = (f - 1.0) / 2.0
        return Geometry(
            voxel_size=self.voxel_size * f, dims=new_dims, affine=self.affine @ t
        )

    def source_coords_for(self, target: "Geometry") -> list[np.ndarray]:
        """Per-axis source index coordinates of each target voxel center.

        Valid for axis-aligned resampling where ``target`` was produced by
        :meth:`resampled` or :meth:`pooled` from this geometry.
        """
        back = np.linalg.inv(self.affine) @ target.affine
        coords = []
        for ax in range(3):
            i = np.arange(target.dims[ax], dtype=np.float64)
            coords.append(back[ax, ax] * i + back[ax, 3])
        return coords
