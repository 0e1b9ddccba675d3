"""Box-focused probabilistic blob sampling and the detector-input export.

Default "budgeted" mode draws one uniform per blob from a counter-based
stream keyed (seed, blob index) and keeps the M smallest exponential-race
keys -ln(u)/p, a weighted sample without replacement whose inclusion
probabilities grow with p.  "bernoulli" mode keeps blob i iff u_i < p_i
(variable count).  Both are deterministic and order-independent.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import FormatError, ValidationError
from .frustum import ObjectProbabilityField
from .model import GaussianScene

FEATURE_COLUMNS = ("x", "y", "z", "scale_x", "scale_y", "scale_z",
                   "rot_w", "rot_x", "rot_y", "rot_z",
                   "color_r", "color_g", "color_b", "opacity")


@dataclass(frozen=True)
class SampledScene:
    """Blob subset: ascending unique indices into the source scene."""

    indices: np.ndarray   # (M,) int64, strictly increasing
    scene: GaussianScene  # the selected blobs, in index order
    sampler: str
    seed: int
    budget: int | None
    source_count: int

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "indices", idx)
        if idx.size == 0:
            raise ValidationError("empty sample")
        if np.any(np.diff(idx) <= 0):
            raise ValidationError("sample indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= self.source_count:
            raise ValidationError("sample index outside the source scene")
        if self.budget is not None and idx.size > self.budget:
            raise ValidationError(f"{idx.size} selected blobs exceed budget {self.budget}")

    def __len__(self) -> int:
        return self.indices.shape[0]


def smallest_m_indices(keys: np.ndarray, m: int) -> np.ndarray:
    """Ascending indices of the m smallest keys; ties at the threshold go to
    the lowest indices.  O(N) via argpartition plus explicit tie repair."""
    n = keys.shape[0]
    if m == n:
        return np.arange(n, dtype=np.int64)
    part = np.argpartition(keys, m - 1)[:m]
    kth = keys[part].max()
    strict = np.flatnonzero(keys < kth)
    tied = np.flatnonzero(keys == kth)[: m - strict.size]
    return np.sort(np.concatenate([strict, tied])).astype(np.int64)


def box_focused_sample(scene: GaussianScene, field: ObjectProbabilityField,
                       budget: int | None, seed: int,
                       mode: str = "budgeted") -> SampledScene:
    """Sample blobs according to the object-probability field."""
    n = len(scene)
    if len(field) != n:
        raise ValidationError(f"field length {len(field)} != scene size {n}")
    u = rng.uniforms(seed, rng.STREAM_BOX_SAMPLE, n)
    if mode == "budgeted":
        if budget is None or not 1 <= budget <= n:
            raise ValidationError(f"budget {budget} must be in 1..{n}")
        keys = -np.log(u) / field.values
        idx = smallest_m_indices(keys, budget)
        sampler = "box_budgeted"
    elif mode == "bernoulli":
        idx = np.flatnonzero(u < field.values).astype(np.int64)
        if idx.size == 0:
            raise ValidationError("bernoulli draw kept no blobs; retry with another seed")
        sampler = "box_bernoulli"
        budget = None
    else:
        raise ValidationError(f"unknown sampling mode {mode!r}")
    return SampledScene(indices=idx, scene=scene.subset(idx), sampler=sampler,
                        seed=seed, budget=budget, source_count=n)


def concat_features(sample: SampledScene) -> np.ndarray:
    """Per-blob feature rows [position, scale, quaternion, color, opacity],
    float32, rows in ascending blob-index order."""
    s = sample.scene
    if len(s) == 0:
        raise ValidationError("cannot build features from an empty sample")
    return np.concatenate([s.positions, s.scales, s.rotations, s.colors,
                           s.opacities[:, None]], axis=1).astype(np.float32)


def export_detector_input(matrix: np.ndarray, path_prefix) -> tuple:
    """Write <prefix>.json (header) and <prefix>.bin (row-major little-endian
    float32).  Returns the two paths."""
    m = np.ascontiguousarray(matrix, dtype="<f4")
    if m.ndim != 2 or m.shape[0] == 0:
        raise ValidationError(f"feature matrix must be 2D and non-empty, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("feature matrix contains non-finite values")
    names = list(FEATURE_COLUMNS) if m.shape[1] == len(FEATURE_COLUMNS) else [
        f"col_{i}" for i in range(m.shape[1])]
    header = {"rows": int(m.shape[0]), "cols": int(m.shape[1]),
              "column_names": names, "dtype": "f32le"}
    json_path = f"{path_prefix}.json"
    bin_path = f"{path_prefix}.bin"
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(header, f, indent=1)
        f.write("\n")
    with open(bin_path, "wb") as f:
        f.write(m.tobytes(order="C"))
    return json_path, bin_path


def read_detector_input(path_prefix) -> np.ndarray:
    """Inverse of export_detector_input; validates the byte count."""
    json_path = f"{path_prefix}.json"
    bin_path = f"{path_prefix}.bin"
    with open(json_path, "r", encoding="utf-8") as f:
        header = json.load(f)
    if header.get("dtype") != "f32le":
        raise FormatError(f"{json_path}: unsupported dtype {header.get('dtype')!r}")
    rows, cols = int(header["rows"]), int(header["cols"])
    with open(bin_path, "rb") as f:
        raw = f.read()
    need = rows * cols * 4
    if len(raw) != need:
        raise FormatError(f"{bin_path}: expected {need} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype="<f4").reshape(rows, cols).copy()
