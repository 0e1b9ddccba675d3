"""2D boxes lifted to 3D frustums and the per-blob object-probability field.

A detection box back-projects to a truncated pyramid between the view's
depth limits.  Each blob center inside a frustum inherits that box's top
category probability; probabilities aggregate across views by max, and
blobs outside every frustum keep the background floor p_bg (0.01 by
default).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ValidationError
from .io.manifests import Box2D, DetectionBoxSet
from .model import CameraView, GaussianScene

DEFAULT_P_BG = 0.01


@dataclass(frozen=True)
class Frustum:
    """Back-projection of one box through one view between z_min and z_max."""

    view_index: int
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    z_min: float
    z_max: float
    p_max: float
    corners: np.ndarray  # (8,3) world points, near plane first, CCW pixel order


def frustum_from_box(box: Box2D, view: CameraView, view_index: int = 0) -> Frustum:
    """Unproject the box corners at both depth limits into world space."""
    K, R, t = view.intrinsics, view.rotation, view.translation
    pixel_corners = np.array([
        [box.x_min, box.y_min, 1.0],
        [box.x_max, box.y_min, 1.0],
        [box.x_max, box.y_max, 1.0],
        [box.x_min, box.y_max, 1.0],
    ])
    rays = np.linalg.solve(K, pixel_corners.T).T  # camera-space directions, z = 1
    corners = []
    for z in (view.z_min, view.z_max):
        cam = rays * z
        corners.append((cam - t) @ R)  # R^T (cam - t), row-wise
    return Frustum(view_index=view_index,
                   x_min=float(box.x_min), y_min=float(box.y_min),
                   x_max=float(box.x_max), y_max=float(box.y_max),
                   z_min=view.z_min, z_max=view.z_max,
                   p_max=box.p_max, corners=np.concatenate(corners, axis=0))


def points_in_frustum(positions, frustum: Frustum, view: CameraView) -> np.ndarray:
    """Vectorized membership: depth within [z_min, z_max] and pixel
    projection inside the half-open box."""
    u, v, z = view.project_points(positions)
    with np.errstate(invalid="ignore"):
        return ((z >= frustum.z_min) & (z <= frustum.z_max)
                & (u >= frustum.x_min) & (u < frustum.x_max)
                & (v >= frustum.y_min) & (v < frustum.y_max))


def blob_in_frustum(position, frustum: Frustum, view: CameraView) -> bool:
    return bool(points_in_frustum(np.asarray(position).reshape(1, 3), frustum, view)[0])


@dataclass(frozen=True)
class ObjectProbabilityField:
    """Per-blob aggregated object probability, aligned with scene blob order."""

    values: np.ndarray  # (N,) float64 in [p_bg, 1]
    p_bg: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.ascontiguousarray(self.values, dtype=np.float64))
        if np.any(self.values < self.p_bg):
            raise ValidationError("field value below the background floor")
        if np.any(self.values > 1.0):
            raise ValidationError("field value above 1")

    def __len__(self) -> int:
        return self.values.shape[0]


def _view_boxes_arrays(boxes):
    arr = np.array([[b.x_min, b.y_min, b.x_max, b.y_max] for b in boxes],
                   dtype=np.float64).reshape(-1, 4)
    pmax = np.array([b.p_max for b in boxes], dtype=np.float64)
    return arr, pmax


def build_probability_field(scene: GaussianScene, views, boxes: DetectionBoxSet,
                            p_bg: float = DEFAULT_P_BG,
                            threads: int = 1) -> ObjectProbabilityField:
    """p_agr(blob) = max over containing frustums of the box p_max, floored
    at p_bg; blobs inside no frustum get exactly p_bg.

    Deterministic for any thread count (max-aggregation commutes).
    """
    if not (0.0 < p_bg < 1.0):
        raise ValidationError(f"p_bg {p_bg} must be in (0,1)")
    if len(views) != len(boxes.views):
        raise ValidationError(
            f"{len(views)} camera views but {len(boxes.views)} box views")
    kern = _backend.kernels()
    n = len(scene)
    positions = scene.positions

    def run(view_indices, out):
        for vi in view_indices:
            if not boxes.views[vi]:
                continue
            view = views[vi]
            arr, pmax = _view_boxes_arrays(boxes.views[vi])
            kern.field_update_view(positions,
                                   np.ascontiguousarray(view.rotation),
                                   np.ascontiguousarray(view.translation),
                                   np.ascontiguousarray(view.intrinsics),
                                   arr, pmax, view.z_min, view.z_max, out)

    field = np.full(n, p_bg, dtype=np.float64)
    if threads <= 1 or len(views) == 1:
        run(range(len(views)), field)
    else:
        groups = np.array_split(np.arange(len(views)), threads)
        locals_ = [np.full(n, p_bg, dtype=np.float64) for _ in groups]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda gl: run(gl[0], gl[1]), zip(groups, locals_)))
        for local in locals_:
            np.maximum(field, local, out=field)
    return ObjectProbabilityField(values=field, p_bg=p_bg)
