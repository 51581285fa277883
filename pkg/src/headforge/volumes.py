"""Core volume types and label/one-hot conversions.

All volume types are immutable after construction (arrays are frozen);
constructors take ownership of the array passed in. Volumes are float32,
reductions run in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DatatypeError, GeometryError
from .geometry import Geometry
from .taxonomy import LabelTaxonomy

CHANNEL_SUM_TOL = 1e-6


def _freeze(arr: np.ndarray) -> np.ndarray:
    if arr.flags.writeable:
        arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LabelVolume:
    """3D grid of non-negative integer class/label ids."""

    geometry: Geometry
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        if not np.issubdtype(data.dtype, np.integer):
            raise DatatypeError(f"label data must be integer, got {data.dtype}")
        if data.ndim != 3:
            raise DatatypeError(f"label data must be 3D, got shape {data.shape}")
        if not np.array_equal(data.shape, self.geometry.dims):
            raise GeometryError(
                f"data shape {data.shape} != geometry dims {tuple(self.geometry.dims)}"
            )
        if data.size and int(data.min()) < 0:
            raise DatatypeError("label data contains negative values")
        object.__setattr__(self, "data", _freeze(data))

    def class_counts(self) -> dict[int, int]:
        values, counts = np.unique(self.data, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


@dataclass(frozen=True)
class ProbVolume:
    """4D per-class probability / partial-volume grid, channel-first (K,X,Y,Z)."""

    geometry: Geometry
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 4:
            raise DatatypeError(f"prob data must be 4D (K,X,Y,Z), got {data.shape}")
        if not np.array_equal(data.shape[1:], self.geometry.dims):
            raise GeometryError(
                f"data shape {data.shape[1:]} != geometry dims {tuple(self.geometry.dims)}"
            )
        if data.size:
            lo = float(data.min())
            hi = float(data.max())
            if lo < -CHANNEL_SUM_TOL or hi > 1.0 + CHANNEL_SUM_TOL:
                raise DatatypeError(f"channel values outside [0,1]: min {lo}, max {hi}")
            sums = data.sum(axis=0, dtype=np.float64)
            err = float(np.abs(sums - 1.0).max())
            if err > CHANNEL_SUM_TOL:
                raise DatatypeError(
                    f"per-voxel channel sums deviate from 1 by up to {err:.3g}"
                )
        object.__setattr__(self, "data", _freeze(data))

    @property
    def channels(self) -> int:
        return int(self.data.shape[0])


@dataclass(frozen=True)
class IntensityVolume:
    """3D scalar image; bounded to [0,1] only after final normalization."""

    geometry: Geometry
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 3:
            raise DatatypeError(f"intensity data must be 3D, got shape {data.shape}")
        if not np.array_equal(data.shape, self.geometry.dims):
            raise GeometryError(
                f"data shape {data.shape} != geometry dims {tuple(self.geometry.dims)}"
            )
        if data.size and not np.isfinite(data).all():
            raise DatatypeError("intensity data contains NaN or Inf")
        object.__setattr__(self, "data", _freeze(data))


def renormalize_channels(data: np.ndarray) -> np.ndarray:
    """Divide channels by the per-voxel sum so sums are exactly 1.

    Input is (K,X,Y,Z) non-negative; voxels whose sum is 0 become pure
    background (channel 0). Division runs in float64 so the float32 result
    stays inside [0,1].
    """
    data = np.maximum(np.asarray(data, dtype=np.float32), 0.0)
    sums = data.sum(axis=0, dtype=np.float64)
    empty = sums <= 0.0
    if np.any(empty):
        data = data.copy()
        data[0][empty] = 1.0
        sums = data.sum(axis=0, dtype=np.float64)
    out = (data.astype(np.float64) / sums[None]).astype(np.float32)
    return out


def one_hot(label: LabelVolume, taxonomy: LabelTaxonomy) -> ProbVolume:
    """Encode mapped labels as K binary channels (channel k = class k)."""
    mapped = taxonomy.map_raw(label.data)
    k = taxonomy.num_classes
    data = np.zeros((k,) + mapped.shape, dtype=np.float32)
    for cid in range(k):
        data[cid] = mapped == cid
    return ProbVolume(geometry=label.geometry, data=data)


def argmax_labels(prob: ProbVolume) -> LabelVolume:
    """Hard labels from channel probabilities; ties go to the lowest class id."""
    data = np.argmax(prob.data, axis=0).astype(np.uint16)
    return LabelVolume(geometry=prob.geometry, data=data)
