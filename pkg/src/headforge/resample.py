"""Label super-resolution and partial-volume pooling.

Label templates are upsampled by encoding each class as a scalar channel,
resampling every channel with a separable windowed-sinc kernel, smoothing,
and taking the per-voxel argmax. Partial-volume maps at training resolution
come from average-pooling high-resolution one-hot channels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .geometry import Geometry
from .taxonomy import LabelTaxonomy
from .volumes import LabelVolume, ProbVolume

LANCZOS_RADIUS = 4
GAUSS_TRUNCATE = 6.0

INTERPOLATIONS = ("windowed_sinc", "linear", "nearest")


@dataclass(frozen=True)
class ResampleSpec:
    """Target grid and smoothing for label super-resolution."""

    target_voxel_size: tuple[float, float, float]
    smoothing_sigma_mm: float = 0.5
    interpolation: str = "windowed_sinc"

    def __post_init__(self) -> None:
        tvs = tuple(float(v) for v in np.broadcast_to(self.target_voxel_size, 3))
        object.__setattr__(self, "target_voxel_size", tvs)
        if any(v <= 0 for v in tvs):
            raise ParameterError(f"target voxel size must be positive, got {tvs}")
        if self.smoothing_sigma_mm < 0:
            raise ParameterError("smoothing sigma must be >= 0")
        if self.interpolation not in INTERPOLATIONS:
            raise ParameterError(
                f"interpolation {self.interpolation!r} not in {INTERPOLATIONS}"
            )


@dataclass(frozen=True)
class PoolSpec:
    """Integer block-average factors per axis (e.g. (3,3,3) for 0.25->0.75 mm)."""

    factor: tuple[int, int, int]

    def __post_init__(self) -> None:
        f = tuple(int(v) for v in np.broadcast_to(self.factor, 3))
        object.__setattr__(self, "factor", f)
        if any(v < 1 for v in f):
            raise ParameterError(f"pool factors must be >= 1, got {f}")


def _lanczos(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(
        np.abs(x) < LANCZOS_RADIUS, np.sinc(x) * np.sinc(x / LANCZOS_RADIUS), 0.0
    )


def _axis_weights(src_coords: np.ndarray, n_src: int, kind: str) -> np.ndarray:
    """Dense (n_tgt, n_src) interpolation matrix for one axis.

    Out-of-range taps are clamped to the border sample; rows are normalized
    so constants are reproduced exactly.
    """
    s = np.asarray(src_coords, dtype=np.float64)
    n_tgt = s.size
    w_mat = np.zeros((n_tgt, n_src), dtype=np.float64)
    rows = np.arange(n_tgt)
    if kind == "nearest":
        cols = np.clip(np.floor(s + 0.5).astype(np.int64), 0, n_src - 1)
        w_mat[rows, cols] = 1.0
        return w_mat
    if kind == "linear":
        offs = np.arange(0, 2)
        base = np.floor(s).astype(np.int64)
        taps = base[:, None] + offs[None, :]
        w = np.maximum(0.0, 1.0 - np.abs(s[:, None] - taps))
    else:
        offs = np.arange(1 - LANCZOS_RADIUS, LANCZOS_RADIUS + 1)
        base = np.floor(s).astype(np.int64)
        taps = base[:, None] + offs[None, :]
        w = _lanczos(s[:, None] - taps)
    w = w / w.sum(axis=1, keepdims=True)
    cols = np.clip(taps, 0, n_src - 1)
    np.add.at(w_mat, (np.repeat(rows, taps.shape[1]), cols.ravel()), w.ravel())
    return w_mat


def _apply_axis(arr: np.ndarray, w_mat: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(w_mat, arr, axes=(1, axis)), 0, axis)


def resample_channel(
    channel: np.ndarray, geometry: Geometry, spec: ResampleSpec
) -> np.ndarray:
    """Separable windowed-sinc/linear/nearest resample onto the target grid.

    Returns a float32 grid at ``geometry.resampled(spec.target_voxel_size)``.
    Ringing can push values outside [0,1]; callers clamp before smoothing.
    """
    channel = np.asarray(channel, dtype=np.float64)
    target = geometry.resampled(spec.target_voxel_size)
    coords = geometry.source_coords_for(target)
    out = channel
    for axis in range(3):
        w_mat = _axis_weights(coords[axis], channel.shape[axis], spec.interpolation)
        out = _apply_axis(out, w_mat, axis)
    return out.astype(np.float32)


def gaussian_smooth(
    channel: np.ndarray, geometry: Geometry, sigma_mm: float
) -> np.ndarray:
    """Separable Gaussian blur; sigma given in millimeters, reflective borders."""
    if sigma_mm < 0:
        raise ParameterError("sigma must be >= 0")
    out = np.asarray(channel, dtype=np.float32)
    if sigma_mm == 0:
        return out
    out = out.astype(np.float64)
    for axis in range(3):
        sigma_vox = sigma_mm / geometry.voxel_size[axis]
        out = ndimage.gaussian_filter1d(
            out, sigma_vox, axis=axis, mode="reflect", truncate=GAUSS_TRUNCATE
        )
    return out.astype(np.float32)


def superresolve_labels(
    label: LabelVolume, taxonomy: LabelTaxonomy, spec: ResampleSpec
) -> LabelVolume:
    """Upsample a label template with smooth class boundaries.

    Pipeline: map raw labels to class ids, one-hot encode, resample each
    channel with the spec kernel, clamp ringing to [0,1], Gaussian-smooth,
    then per-voxel argmax (ties to the lowest class id). The result is in
    class-id space. Channels are processed one class at a time with a
    running argmax, which is equivalent to stacking all channels (per-voxel
    renormalization cannot change the argmax).
    """
    tvs = np.asarray(spec.target_voxel_size)
    if np.any(tvs > label.geometry.voxel_size + 1e-9):
        raise ParameterError(
            f"target voxel size {tuple(tvs)} is coarser than source "
            f"{tuple(label.geometry.voxel_size)}; use pool_partial_volume"
        )
    mapped = taxonomy.map_raw(label.data)
    target = label.geometry.resampled(spec.target_voxel_size)
    present = np.unique(mapped)
    best = np.full(tuple(target.dims), -np.inf, dtype=np.float32)
    winner = np.zeros(tuple(target.dims), dtype=np.uint16)
    for cid in present:
        channel = (mapped == cid).astype(np.float32)
        up = resample_channel(channel, label.geometry, spec)
        np.clip(up, 0.0, 1.0, out=up)
        sm = gaussian_smooth(up, target, spec.smoothing_sigma_mm)
        better = sm > best
        best[better] = sm[better]
        winner[better] = cid
    return LabelVolume(geometry=target, data=winner)


def pool_partial_volume(prob: ProbVolume, spec: PoolSpec) -> ProbVolume:
    """Block-average channels by integer factors.

    Dims not divisible by the factor are padded on the high side with pure
    background before pooling, so foreground mass is never clipped.
    """
    f = np.asarray(spec.factor, dtype=np.int64)
    data = prob.data
    dims = np.asarray(data.shape[1:], dtype=np.int64)
    pad = (-dims) % f
    if np.any(pad > 0):
        widths = [(0, 0)] + [(0, int(p)) for p in pad]
        padded = np.pad(data, widths, mode="constant", constant_values=0.0)
        bg = np.pad(
            data[0],
            widths[1:],
            mode="constant",
            constant_values=1.0,
        )
        padded[0] = bg
        data = padded
        dims = dims + pad
    k = data.shape[0]
    nx, ny, nz = (dims // f).astype(int)
    blocks = data.reshape(k, nx, f[0], ny, f[1], nz, f[2])
    pooled = blocks.mean(axis=(2, 4, 6), dtype=np.float64).astype(np.float32)
    return ProbVolume(geometry=prob.geometry.pooled(f), data=pooled)
