"""Binary little-endian splat-PLY reader and writer.

Stored-domain transforms follow the splat ecosystem: opacity is kept as a
logit, scales as logs, color as the spherical-harmonic DC band.  The
writer inverts them exactly, so write(read(f)) is bitwise idempotent on
the retained property set.
"""

import io

import numpy as np

from ..errors import DataError, FormatError
from ..model import SH_DC0, GaussianScene, normalize_quaternions

DEFAULT_VERTEX_CAP = 50_000_000

# Properties the reader requires, in decode order.
_REQUIRED = ("x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
             "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3")
# Higher-order SH coefficients written as zeros (3 bands of degree 1..3).
_F_REST_COUNT = 45

_FLOAT_NAMES = {"float", "float32"}


def _parse_header(raw: bytes, path):
    """Header lines up to end_header -> (vertex_count, [(name, dtype)], data_offset)."""
    end = raw.find(b"end_header\n")
    if end < 0:
        raise FormatError(f"{path}: no end_header within the first {len(raw)} bytes")
    header = raw[:end].decode("ascii", errors="replace")
    lines = [ln.strip() for ln in header.split("\n") if ln.strip()]
    if not lines or lines[0] != "ply":
        raise FormatError(f"{path}: missing 'ply' magic at byte 0")
    fmt = next((ln for ln in lines if ln.startswith("format ")), None)
    if fmt is None or fmt.split() != ["format", "binary_little_endian", "1.0"]:
        raise FormatError(f"{path}: format must be 'binary_little_endian 1.0', got {fmt!r}")
    count = None
    props = []
    in_vertex = False
    for ln in lines:
        parts = ln.split()
        if parts[0] == "element":
            if parts[1] == "vertex":
                if count is not None:
                    raise FormatError(f"{path}: duplicate vertex element")
                count = int(parts[2])
                in_vertex = True
            else:
                in_vertex = False
        elif parts[0] == "property" and in_vertex:
            if parts[1] == "list":
                raise FormatError(f"{path}: list property {parts[-1]!r} unsupported in vertex element")
            if parts[1] not in _FLOAT_NAMES:
                raise FormatError(f"{path}: vertex property {parts[2]!r} must be float32, got {parts[1]}")
            props.append(parts[2])
    if count is None:
        raise FormatError(f"{path}: no vertex element in header")
    return count, props, end + len(b"end_header\n")


def read_gaussian_ply(path, max_vertices: int = DEFAULT_VERTEX_CAP) -> GaussianScene:
    """Decode a splat PLY into a GaussianScene (blob order = file order)."""
    with open(path, "rb") as f:
        raw = f.read()
    count, props, offset = _parse_header(raw, path)
    if count < 1:
        raise FormatError(f"{path}: vertex count {count} must be >= 1")
    if count > max_vertices:
        raise FormatError(f"{path}: vertex count {count} exceeds cap {max_vertices}")
    for name in _REQUIRED:
        if name not in props:
            raise FormatError(f"{path}: missing required property {name!r}")
    dtype = np.dtype([(name, "<f4") for name in props])
    need = count * dtype.itemsize
    have = len(raw) - offset
    if have < need:
        raise FormatError(
            f"{path}: truncated at byte {len(raw)}: need {need} data bytes, have {have}")
    rec = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)

    stored = {name: rec[name] for name in _REQUIRED}
    for name, col in stored.items():
        if not np.all(np.isfinite(col)):
            bad = int(np.flatnonzero(~np.isfinite(col))[0])
            raise DataError(f"{path}: non-finite {name!r} at vertex {bad}")

    positions = np.stack([stored["x"], stored["y"], stored["z"]], axis=1)
    f_dc = np.stack([stored["f_dc_0"], stored["f_dc_1"], stored["f_dc_2"]], axis=1)
    colors = np.clip(0.5 + SH_DC0 * f_dc.astype(np.float64), 0.0, 1.0).astype(np.float32)
    opacities = (1.0 / (1.0 + np.exp(-stored["opacity"].astype(np.float64)))).astype(np.float32)
    scales = np.exp(np.stack([stored["scale_0"], stored["scale_1"], stored["scale_2"]],
                             axis=1).astype(np.float64)).astype(np.float32)
    rotations = normalize_quaternions(
        np.stack([stored["rot_0"], stored["rot_1"], stored["rot_2"], stored["rot_3"]], axis=1))

    for name, arr in (("opacity", opacities), ("scale", scales)):
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr).reshape(count, -1).all(axis=1))[0])
            raise DataError(f"{path}: decoded {name} overflows at vertex {bad}")

    return GaussianScene(positions, scales, rotations, colors, opacities,
                         source_path=str(path))


def write_gaussian_ply(scene: GaussianScene, path) -> int:
    """Encode a scene; returns how many opacities had to be clamped into
    (1e-6, 1-1e-6) before the logit."""
    n = len(scene)
    op = scene.opacities.astype(np.float64)
    clamped = int(np.count_nonzero((op <= 0.0) | (op >= 1.0)))
    op = np.clip(op, 1e-6, 1.0 - 1e-6)

    names = (["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"]
             + [f"f_rest_{i}" for i in range(_F_REST_COUNT)]
             + ["opacity", "scale_0", "scale_1", "scale_2",
                "rot_0", "rot_1", "rot_2", "rot_3"])
    rec = np.zeros(n, dtype=np.dtype([(name, "<f4") for name in names]))
    rec["x"], rec["y"], rec["z"] = scene.positions.T
    f_dc = ((scene.colors.astype(np.float64) - 0.5) / SH_DC0).astype(np.float32)
    rec["f_dc_0"], rec["f_dc_1"], rec["f_dc_2"] = f_dc.T
    rec["opacity"] = np.log(op / (1.0 - op)).astype(np.float32)
    sc = np.log(scene.scales.astype(np.float64)).astype(np.float32)
    rec["scale_0"], rec["scale_1"], rec["scale_2"] = sc.T
    rec["rot_0"], rec["rot_1"], rec["rot_2"], rec["rot_3"] = scene.rotations.T

    buf = io.BytesIO()
    buf.write(b"ply\nformat binary_little_endian 1.0\n")
    buf.write(f"element vertex {n}\n".encode("ascii"))
    for name in names:
        buf.write(f"property float {name}\n".encode("ascii"))
    buf.write(b"end_header\n")
    buf.write(rec.tobytes())
    with open(path, "wb") as f:
        f.write(buf.getvalue())
    return clamped
