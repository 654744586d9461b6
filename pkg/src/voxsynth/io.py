"""Volume, raster, and config I/O.

Supported volume containers:

* NIfTI-1 single-file volumes (.nii / .nii.gz): 348-byte header,
  sform/qform orientation honored, data reoriented to canonical RAS on
  load, provenance carried in a header extension (JSON, ecode 6).
* A small self-describing raw format (.vxr) for tests and 2-D pilot
  work: magic, version, kind, dims, voxel size, JSON metadata, payload.

Images are stored as 32-bit floats, labels as 32-bit unsigned integers.
Label volumes are re-indexed to contiguous ids at load time and the
mapping is returned in the header. Gzipped outputs use mtime=0 so
identical volumes produce identical bytes.
"""

from __future__ import annotations

import gzip
import json
import struct
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .config import SynthesisConfig, parse_config, serialize_config  # noqa: F401
from .errors import VolumeIOError
from .fields import LabelVolume, ScalarField

_NIFTI_DTYPES = {2: np.uint8, 4: np.int16, 8: np.int32, 16: np.float32,
                 64: np.float64, 256: np.int8, 512: np.uint16,
                 768: np.uint32}
_NIFTI_CODES = {np.dtype(np.float32): 16, np.dtype(np.uint32): 768}
_RAW_MAGIC = b"VXRW"
_PROVENANCE_ECODE = 6


@dataclass
class VolumeHeader:
    extents: tuple
    voxel_size: tuple
    kind: str  # "integer-labels" | "real-image"
    affine: np.ndarray
    provenance: dict = field(default_factory=dict)
    label_mapping: dict = field(default_factory=dict)


def _open_maybe_gzip(path, mode="rb"):
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, mode)
    return open(path, mode)


def _quaternion_affine(hdr):
    b, c, d = hdr["quatern_b"], hdr["quatern_c"], hdr["quatern_d"]
    a = np.sqrt(max(0.0, 1.0 - b * b - c * c - d * d))
    r = np.array([
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d),
         2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a + c * c - b * b - d * d,
         2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b),
         a * a + d * d - b * b - c * c]])
    qfac = -1.0 if hdr["pixdim"][0] < 0 else 1.0
    pix = np.abs(hdr["pixdim"][1:4])
    aff = np.eye(4)
    aff[:3, :3] = r * pix * np.array([1.0, 1.0, qfac])
    aff[:3, 3] = [hdr["qoffset_x"], hdr["qoffset_y"], hdr["qoffset_z"]]
    return aff


def _orientation(affine, ndim):
    """Permutation and flips mapping data axes to +RAS order."""
    m = affine[:ndim, :ndim]
    perm = [-1] * ndim
    flips = [False] * ndim
    taken = set()
    for j in range(ndim):
        order = np.argsort(-np.abs(m[:, j]))
        i = next(int(i) for i in order if int(i) not in taken)
        taken.add(i)
        perm[i] = j
        flips[i] = m[i, j] < 0
    return perm, flips


def _to_canonical(data, affine):
    ndim = data.ndim
    perm, flips = _orientation(affine, ndim)
    data = np.transpose(data, perm)
    full_perm = list(perm) + [ndim]
    aff = np.eye(4)
    if ndim == 3:
        aff[:, :3] = affine[:, perm]
        aff[:, 3] = affine[:, 3]
    for axis, flip in enumerate(flips):
        if flip:
            data = np.flip(data, axis=axis)
            if ndim == 3:
                aff[:, axis] = -aff[:, axis]
                # origin moves to the other end of the axis
                aff[:3, 3] -= aff[:3, axis] * (data.shape[axis] - 1) * -1
    return np.ascontiguousarray(data), aff


def _nifti_header_struct():
    return np.dtype([
        ("sizeof_hdr", "<i4"), ("data_type", "S10"), ("db_name", "S18"),
        ("extents", "<i4"), ("session_error", "<i2"), ("regular", "S1"),
        ("dim_info", "u1"), ("dim", "<i2", 8), ("intent_p1", "<f4"),
        ("intent_p2", "<f4"), ("intent_p3", "<f4"), ("intent_code", "<i2"),
        ("datatype", "<i2"), ("bitpix", "<i2"), ("slice_start", "<i2"),
        ("pixdim", "<f4", 8), ("vox_offset", "<f4"), ("scl_slope", "<f4"),
        ("scl_inter", "<f4"), ("slice_end", "<i2"), ("slice_code", "u1"),
        ("xyzt_units", "u1"), ("cal_max", "<f4"), ("cal_min", "<f4"),
        ("slice_duration", "<f4"), ("toffset", "<f4"), ("glmax", "<i4"),
        ("glmin", "<i4"), ("descrip", "S80"), ("aux_file", "S24"),
        ("qform_code", "<i2"), ("sform_code", "<i2"), ("quatern_b", "<f4"),
        ("quatern_c", "<f4"), ("quatern_d", "<f4"), ("qoffset_x", "<f4"),
        ("qoffset_y", "<f4"), ("qoffset_z", "<f4"), ("srow_x", "<f4", 4),
        ("srow_y", "<f4", 4), ("srow_z", "<f4", 4), ("intent_name", "S16"),
        ("magic", "S4"),
    ])


def _read_nifti(path):
    with _open_maybe_gzip(path) as fh:
        blob = fh.read()
    if len(blob) < 352:
        raise VolumeIOError(f"{path}: truncated NIfTI file")
    hdr = np.frombuffer(blob[:348], dtype=_nifti_header_struct())[0]
    if hdr["sizeof_hdr"] != 348 or hdr["magic"] not in (b"n+1", b"n+1\x00"):
        raise VolumeIOError(f"{path}: not a single-file NIfTI-1 volume")
    ndim = int(hdr["dim"][0])
    if ndim not in (2, 3):
        raise VolumeIOError(f"{path}: unsupported dimensionality {ndim}")
    dims = tuple(int(d) for d in hdr["dim"][1:1 + ndim])
    code = int(hdr["datatype"])
    if code not in _NIFTI_DTYPES:
        raise VolumeIOError(f"{path}: unsupported datatype code {code}")
    dtype = np.dtype(_NIFTI_DTYPES[code]).newbyteorder("<")
    provenance = {}
    extender = blob[348:352]
    offset = 352
    if extender[:1] != b"\x00":
        while offset + 8 <= int(hdr["vox_offset"]):
            esize, ecode = struct.unpack("<ii", blob[offset:offset + 8])
            payload = blob[offset + 8:offset + esize]
            if ecode == _PROVENANCE_ECODE:
                try:
                    provenance = json.loads(
                        payload.rstrip(b"\x00").decode())
                except (UnicodeDecodeError, json.JSONDecodeError):
                    pass
            offset += esize
    start = int(hdr["vox_offset"])
    count = int(np.prod(dims))
    data = np.frombuffer(blob[start:start + count * dtype.itemsize],
                         dtype=dtype, count=count)
    data = data.reshape(dims, order="F")
    slope, inter = float(hdr["scl_slope"]), float(hdr["scl_inter"])
    if slope not in (0.0, 1.0) or inter != 0.0:
        data = data * (slope or 1.0) + inter
    if int(hdr["sform_code"]) > 0:
        affine = np.eye(4)
        affine[0] = hdr["srow_x"]
        affine[1] = hdr["srow_y"]
        affine[2] = hdr["srow_z"]
    elif int(hdr["qform_code"]) > 0:
        affine = _quaternion_affine(hdr)
    else:
        affine = np.diag(list(np.abs(hdr["pixdim"][1:4])) + [1.0])
    if ndim == 3:
        data, affine = _to_canonical(data, affine)
    voxel_size = tuple(float(np.linalg.norm(affine[:3, i]))
                       for i in range(3))[:ndim]
    if ndim == 2:
        voxel_size = tuple(float(abs(p)) for p in hdr["pixdim"][1:3])
    return np.asarray(data), affine, voxel_size, provenance


def load_volume(path, kind: str | None = None):
    """Load a NIfTI-1 (.nii/.nii.gz) or raw (.vxr) volume.

    kind forces interpretation ("integer-labels" or "real-image");
    by default integer-typed data loads as labels. Label volumes are
    re-indexed to contiguous ids; the original-id mapping lands in the
    returned header.
    """
    path = str(path)
    if path.endswith(".vxr"):
        data, voxel_size, meta, stored_kind = _read_raw(path)
        affine = np.diag(list(voxel_size) + [1.0] * (4 - len(voxel_size)))
    else:
        data, affine, voxel_size, meta = _read_nifti(path)
        stored_kind = None
    is_int = np.issubdtype(data.dtype, np.integer)
    if kind is None:
        kind = stored_kind or ("integer-labels" if is_int else "real-image")
    if kind == "integer-labels":
        if not is_int:
            if not np.allclose(data, np.round(data)):
                raise VolumeIOError(
                    f"{path}: non-integer data declared as labels")
            data = np.round(data).astype(np.int64)
        originals, contiguous = np.unique(data, return_inverse=True)
        labels = contiguous.reshape(data.shape).astype(np.uint32)
        mapping = {int(o): int(i) for i, o in enumerate(originals)}
        count = max(2, len(originals))
        header = VolumeHeader(tuple(data.shape), voxel_size, kind, affine,
                              meta, mapping)
        return LabelVolume(labels, count, voxel_size), header
    header = VolumeHeader(tuple(data.shape), voxel_size, kind, affine, meta)
    return ScalarField(np.ascontiguousarray(data, dtype=np.float32),
                       voxel_size), header


def save_volume(volume, path, provenance: dict | None = None,
                header: VolumeHeader | None = None) -> None:
    """Write a field/label volume; format chosen by file suffix."""
    path = str(path)
    if isinstance(volume, LabelVolume):
        data = volume.labels.astype(np.uint32)
        kind = "integer-labels"
    else:
        data = volume.values.astype(np.float32)
        kind = "real-image"
    provenance = provenance if provenance is not None else \
        (header.provenance if header else {})
    if path.endswith(".vxr"):
        _write_raw(path, data, volume.voxel_size, provenance, kind)
        return
    _write_nifti(path, data, volume.voxel_size, provenance)


def _write_nifti(path, data, voxel_size, provenance):
    hdr = np.zeros((), dtype=_nifti_header_struct())
    ndim = data.ndim
    hdr["sizeof_hdr"] = 348
    hdr["regular"] = b"r"
    dim = [ndim] + list(data.shape) + [1] * (7 - ndim)
    hdr["dim"] = dim
    hdr["datatype"] = _NIFTI_CODES[data.dtype]
    hdr["bitpix"] = data.dtype.itemsize * 8
    pixdim = [1.0] + list(voxel_size) + [1.0] * (7 - ndim)
    hdr["pixdim"] = pixdim
    hdr["scl_slope"] = 1.0
    hdr["xyzt_units"] = 2  # millimetres
    hdr["descrip"] = b"voxsynth"
    hdr["sform_code"] = 1
    hdr["qform_code"] = 0
    vs3 = list(voxel_size) + [1.0] * (3 - ndim)
    hdr["srow_x"] = [vs3[0], 0, 0, 0]
    hdr["srow_y"] = [0, vs3[1], 0, 0]
    hdr["srow_z"] = [0, 0, vs3[2], 0]
    hdr["magic"] = b"n+1"
    ext = b""
    extender = b"\x00\x00\x00\x00"
    if provenance:
        payload = json.dumps(provenance, sort_keys=True).encode()
        esize = 8 + len(payload)
        esize += (16 - esize % 16) % 16
        ext = struct.pack("<ii", esize, _PROVENANCE_ECODE) + payload
        ext += b"\x00" * (esize - len(ext))
        extender = b"\x01\x00\x00\x00"
    hdr["vox_offset"] = 352 + len(ext)
    blob = hdr.tobytes() + extender + ext + data.tobytes(order="F")
    if path.endswith(".gz"):
        with open(path, "wb") as fh:
            # filename="" keeps the gzip header path-independent so the
            # same volume always produces the same bytes
            with gzip.GzipFile(fileobj=fh, filename="", mode="wb",
                               mtime=0) as gz:
                gz.write(blob)
    else:
        with open(path, "wb") as fh:
            fh.write(blob)


def _write_raw(path, data, voxel_size, meta, kind):
    meta_bytes = json.dumps({"kind": kind, "provenance": meta},
                            sort_keys=True).encode()
    ndim = data.ndim
    head = _RAW_MAGIC + struct.pack("<BBBB", 1, 0 if kind == "real-image"
                                    else 1, ndim, 0)
    head += struct.pack(f"<{ndim}I", *data.shape)
    head += struct.pack(f"<{ndim}d", *voxel_size)
    head += struct.pack("<I", len(meta_bytes)) + meta_bytes
    with open(path, "wb") as fh:
        fh.write(head + data.tobytes())


def _read_raw(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _RAW_MAGIC:
        raise VolumeIOError(f"{path}: not a voxsynth raw volume")
    version, kind_code, ndim, _ = struct.unpack("<BBBB", blob[4:8])
    if version != 1:
        raise VolumeIOError(f"{path}: unsupported raw version {version}")
    off = 8
    dims = struct.unpack(f"<{ndim}I", blob[off:off + 4 * ndim])
    off += 4 * ndim
    voxel = struct.unpack(f"<{ndim}d", blob[off:off + 8 * ndim])
    off += 8 * ndim
    (meta_len,) = struct.unpack("<I", blob[off:off + 4])
    off += 4
    meta = json.loads(blob[off:off + meta_len].decode()) if meta_len else {}
    off += meta_len
    dtype = np.float32 if kind_code == 0 else np.uint32
    count = int(np.prod(dims))
    data = np.frombuffer(blob[off:off + count * 4], dtype=dtype,
                         count=count).reshape(dims)
    kind = "real-image" if kind_code == 0 else "integer-labels"
    return data.copy(), voxel, meta.get("provenance", {}), kind


_LABEL_COLORS = None


def label_color_table(count: int = 256) -> np.ndarray:
    """Fixed, deterministic RGB table for label rasters (golden-ratio hues)."""
    global _LABEL_COLORS
    if _LABEL_COLORS is None or len(_LABEL_COLORS) < count:
        import colorsys
        rows = [(0, 0, 0)]
        for i in range(1, max(count, 256)):
            hue = (i * 0.6180339887498949) % 1.0
            rgb = colorsys.hsv_to_rgb(hue, 0.65, 0.95)
            rows.append(tuple(int(round(255 * c)) for c in rgb))
        _LABEL_COLORS = np.array(rows, dtype=np.uint8)
    return _LABEL_COLORS[:count]


def _slice_image(volume, axis: int, index: int) -> Image.Image:
    """Render one slice as a PIL image (grayscale image / colored labels)."""
    data = volume.labels if isinstance(volume, LabelVolume) \
        else volume.values
    if data.ndim == 2:
        plane = data
    else:
        if not 0 <= index < data.shape[axis]:
            raise VolumeIOError(
                f"slice index {index} out of range for axis {axis} "
                f"(extent {data.shape[axis]})")
        plane = np.take(data, index, axis=axis)
    if isinstance(volume, LabelVolume):
        table = label_color_table(max(256, volume.label_count))
        rgb = table[plane.astype(np.intp) % len(table)]
        img = Image.fromarray(rgb, mode="RGB")
    else:
        lo, hi = float(plane.min()), float(plane.max())
        if hi > lo:
            gray = ((plane - lo) / (hi - lo) * 255.0)
        else:
            gray = np.full(plane.shape, 127.0)
        img = Image.fromarray(gray.astype(np.uint8), mode="L")
    return img


def export_slice(volume, axis: int, index: int, path) -> None:
    """Write one slice as a lossless PNG.

    Images are min-max mapped to 8-bit grayscale; labels go through the
    fixed color table. 2-D inputs ignore axis/index beyond bounds checks.
    """
    _slice_image(volume, axis, index).save(str(path), format="PNG")
