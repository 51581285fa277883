"""Single-file NIfTI-1 reading and writing (.nii and .nii.gz).

Covers the single-file variant (magic ``n+1``) with the datatypes used by
this pipeline. On load, volumes are reoriented to the closest canonical
axis order (world axes increasing along array axes); the affine carries
the remaining orientation. gzip compression is chosen by file extension
and written with a zeroed mtime so identical volumes produce identical
bytes.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from .errors import DatatypeError, FormatError
from .geometry import Geometry
from .volumes import IntensityVolume, LabelVolume, ProbVolume

HEADER_SIZE = 348
_MAGIC_SINGLE = b"n+1\x00"

_DTYPES = {
    2: np.dtype(np.uint8),
    4: np.dtype(np.int16),
    8: np.dtype(np.int32),
    16: np.dtype(np.float32),
    64: np.dtype(np.float64),
    256: np.dtype(np.int8),
    512: np.dtype(np.uint16),
    768: np.dtype(np.uint32),
    1024: np.dtype(np.int64),
}
_CODES = {v: k for k, v in _DTYPES.items()}


def _open_read(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_all(path: Path) -> bytes:
    try:
        with _open_read(path) as f:
            return f.read()
    except (OSError, gzip.BadGzipFile, EOFError) as exc:
        raise FormatError(f"cannot read NIfTI file {path}: {exc}") from exc


def _parse_header(buf: bytes, path: Path) -> dict:
    if len(buf) < HEADER_SIZE:
        raise FormatError(f"{path}: file shorter than a NIfTI-1 header")
    for endian in ("<", ">"):
        if struct.unpack(endian + "i", buf[:4])[0] == HEADER_SIZE:
            break
    else:
        raise FormatError(f"{path}: bad sizeof_hdr, not a NIfTI-1 file")
    magic = buf[344:348]
    if magic != _MAGIC_SINGLE:
        raise FormatError(f"{path}: unsupported magic {magic!r} (need single-file n+1)")
    dim = struct.unpack(endian + "8h", buf[40:56])
    datatype, bitpix = struct.unpack(endian + "2h", buf[70:74])
    pixdim = struct.unpack(endian + "8f", buf[76:108])
    vox_offset = struct.unpack(endian + "f", buf[108:112])[0]
    scl_slope, scl_inter = struct.unpack(endian + "2f", buf[112:120])
    qform_code, sform_code = struct.unpack(endian + "2h", buf[252:256])
    quatern = struct.unpack(endian + "3f", buf[256:268])
    qoffset = struct.unpack(endian + "3f", buf[268:280])
    srow = np.array(struct.unpack(endian + "12f", buf[280:328])).reshape(3, 4)
    ndim = dim[0]
    if ndim < 3 or ndim > 7:
        raise FormatError(f"{path}: unsupported number of dimensions {ndim}")
    shape = [max(1, d) for d in dim[1 : 1 + ndim]]
    if any(s != 1 for s in shape[4:]):
        raise FormatError(f"{path}: volumes beyond 4D are not supported")
    shape = shape[:4] if ndim >= 4 else shape[:3]
    if datatype not in _DTYPES:
        raise FormatError(f"{path}: unsupported datatype code {datatype}")
    dtype = _DTYPES[datatype].newbyteorder(endian)
    if dtype.itemsize * 8 != bitpix:
        raise FormatError(f"{path}: bitpix {bitpix} disagrees with datatype {datatype}")
    return {
        "endian": endian,
        "shape": tuple(shape),
        "dtype": dtype,
        "pixdim": pixdim,
        "vox_offset": int(vox_offset),
        "scl": (scl_slope, scl_inter),
        "qform_code": qform_code,
        "sform_code": sform_code,
        "quatern": quatern,
        "qoffset": qoffset,
        "srow": srow,
    }


def _quaternion_affine(h: dict) -> np.ndarray:
    b, c, d = (float(x) for x in h["quatern"])
    a2 = max(0.0, 1.0 - b * b - c * c - d * d)
    a = float(np.sqrt(a2))
    r = np.array(
        [
            [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
            [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
            [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
        ]
    )
    pixdim = h["pixdim"]
    qfac = -1.0 if pixdim[0] < 0 else 1.0
    scales = np.array([pixdim[1], pixdim[2], qfac * pixdim[3]])
    aff = np.eye(4)
    aff[:3, :3] = r @ np.diag(scales)
    aff[:3, 3] = h["qoffset"]
    return aff


def _affine_from_header(h: dict) -> np.ndarray:
    if h["sform_code"] > 0 and np.any(h["srow"][:, :3]):
        aff = np.eye(4)
        aff[:3, :] = h["srow"]
        return aff
    if h["qform_code"] > 0:
        return _quaternion_affine(h)
    aff = np.eye(4)
    aff[:3, :3] = np.diag([abs(p) or 1.0 for p in h["pixdim"][1:4]])
    return aff


def _canonical_orientation(affine: np.ndarray) -> tuple[tuple[int, ...], tuple[bool, ...]]:
    """Greedy assignment of array axes to world axes, plus per-axis flips."""
    r = affine[:3, :3].copy()
    perm = [-1, -1, -1]  # perm[world_axis] = array_axis
    flips = [False, False, False]
    mag = np.abs(r)
    for _ in range(3):
        w, a = np.unravel_index(np.argmax(mag), mag.shape)
        perm[w] = int(a)
        flips[w] = bool(r[w, a] < 0)
        mag[w, :] = -1.0
        mag[:, a] = -1.0
    return tuple(perm), tuple(flips)


def _reorient_to_canonical(data: np.ndarray, affine: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Permute/flip spatial axes so world axes increase along array axes."""
    perm, flips = _canonical_orientation(affine)
    if perm == (0, 1, 2) and not any(flips):
        return data, affine
    spatial_dims = data.shape[:3]
    axes = perm + tuple(range(3, data.ndim))
    out = np.transpose(data, axes)
    p = np.zeros((4, 4))
    p[3, 3] = 1.0
    for world_ax in range(3):
        src_ax = perm[world_ax]
        if flips[world_ax]:
            out = np.flip(out, axis=world_ax)
            p[src_ax, world_ax] = -1.0
            p[src_ax, 3] = spatial_dims[src_ax] - 1
        else:
            p[src_ax, world_ax] = 1.0
    return np.ascontiguousarray(out), affine @ p


def _load_array(path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    buf = _read_all(path)
    h = _parse_header(buf, path)
    shape = h["shape"]
    count = int(np.prod(shape))
    offset = max(h["vox_offset"], HEADER_SIZE)
    nbytes = count * h["dtype"].itemsize
    if len(buf) < offset + nbytes:
        raise FormatError(f"{path}: truncated data section")
    flat = np.frombuffer(buf, dtype=h["dtype"], count=count, offset=offset)
    data = flat.reshape(shape, order="F")
    slope, inter = h["scl"]
    if slope not in (0.0, 1.0) or inter != 0.0:
        data = data.astype(np.float64) * (slope if slope != 0.0 else 1.0) + inter
    affine = _affine_from_header(h)
    data, affine = _reorient_to_canonical(data, affine)
    return data, affine


def _geometry_for(affine: np.ndarray, dims) -> Geometry:
    voxel_size = np.linalg.norm(affine[:3, :3], axis=0)
    return Geometry(voxel_size=voxel_size, dims=np.asarray(dims[:3]), affine=affine)


def load_label_volume(path) -> LabelVolume:
    """Read an integer label volume; fractional stored values are rejected."""
    data, affine = _load_array(path)
    if data.ndim != 3:
        raise FormatError(f"{path}: label volume must be 3D, got {data.ndim}D")
    if not np.issubdtype(data.dtype, np.integer):
        rounded = np.rint(data)
        if np.any(np.abs(data - rounded) > 1e-9):
            raise DatatypeError(f"{path}: non-integer label values in file")
        data = rounded
    if data.size and data.min() < 0:
        raise DatatypeError(f"{path}: negative label values in file")
    out_dtype = np.uint16 if (data.size == 0 or data.max() < 2**16) else np.uint32
    return LabelVolume(
        geometry=_geometry_for(affine, data.shape), data=data.astype(out_dtype)
    )


def load_prob_volume(path) -> ProbVolume:
    """Read a 4D per-class probability volume (file stores channels last)."""
    data, affine = _load_array(path)
    if data.ndim != 4:
        raise FormatError(f"{path}: probability volume must be 4D, got {data.ndim}D")
    chan_first = np.moveaxis(data.astype(np.float32), 3, 0)
    return ProbVolume(geometry=_geometry_for(affine, data.shape), data=chan_first)


def load_intensity_volume(path) -> IntensityVolume:
    data, affine = _load_array(path)
    if data.ndim != 3:
        raise FormatError(f"{path}: intensity volume must be 3D, got {data.ndim}D")
    return IntensityVolume(
        geometry=_geometry_for(affine, data.shape), data=data.astype(np.float32)
    )


def _pack_header(shape4, pixdim3, affine: np.ndarray, datatype: int) -> bytes:
    ndim = 4 if shape4[3] > 1 else 3
    dim = [ndim, shape4[0], shape4[1], shape4[2], shape4[3], 1, 1, 1]
    pixdim = [1.0, float(pixdim3[0]), float(pixdim3[1]), float(pixdim3[2]), 1.0, 0, 0, 0]
    itemsize = _DTYPES[datatype].itemsize
    buf = bytearray(HEADER_SIZE)
    struct.pack_into("<i", buf, 0, HEADER_SIZE)
    struct.pack_into("<B", buf, 38, ord("r"))  # regular
    struct.pack_into("<8h", buf, 40, *dim)
    struct.pack_into("<2h", buf, 70, datatype, itemsize * 8)
    struct.pack_into("<8f", buf, 76, *pixdim)
    struct.pack_into("<f", buf, 108, 352.0)  # vox_offset
    struct.pack_into("<2f", buf, 112, 1.0, 0.0)  # scl_slope, scl_inter
    struct.pack_into("<B", buf, 123, 10)  # mm | sec
    desc = b"headforge"
    buf[148 : 148 + len(desc)] = desc
    struct.pack_into("<2h", buf, 252, 0, 2)  # qform unset, sform aligned
    struct.pack_into("<12f", buf, 280, *affine[:3, :].reshape(-1))
    buf[344:348] = _MAGIC_SINGLE
    return bytes(buf)


def save_volume(volume, path) -> None:
    """Write a volume as single-file NIfTI-1; gzip chosen by extension.

    Labels are stored as uint16 (uint32 above 65535), probabilities and
    intensities as float32. 4D probability volumes store channels in the
    4th dimension.
    """
    path = Path(path)
    if isinstance(volume, LabelVolume):
        arr = volume.data
        arr = arr.astype(np.uint16 if arr.max(initial=0) < 2**16 else np.uint32)
        data4 = arr[..., None]
    elif isinstance(volume, ProbVolume):
        data4 = np.moveaxis(volume.data.astype(np.float32), 0, 3)
    elif isinstance(volume, IntensityVolume):
        data4 = volume.data.astype(np.float32)[..., None]
    else:
        raise TypeError(f"cannot save object of type {type(volume).__name__}")
    geom = volume.geometry
    datatype = _CODES[np.dtype(data4.dtype)]
    header = _pack_header(
        data4.shape, geom.voxel_size, geom.affine.astype(np.float32), datatype
    )
    payload = data4.tobytes(order="F")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as raw:
            if path.suffix == ".gz":
                # filename="" and mtime=0 keep the byte stream deterministic
                with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as f:
                    f.write(header)
                    f.write(b"\x00" * 4)
                    f.write(payload)
            else:
                raw.write(header)
                raw.write(b"\x00" * 4)
                raw.write(payload)
    except OSError as exc:
        raise OSError(f"failed writing volume to {path}: {exc}") from exc
