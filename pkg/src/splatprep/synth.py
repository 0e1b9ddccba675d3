"""Deterministic synthetic scenes with ground-truth labels, cameras and boxes.

Objects are axis-aligned cubes of blobs near the room center; background
blobs sit on the room's wall/floor/ceiling shell.  Cameras ring the room
looking inward, and every emitted 2D box is the exact pixel bound of one
object's projected blob centers for views that see the whole object.  The
canonical spec keeps every object blob inside all eight view frustums and
every shell blob outside all of them, which makes probability fields on it
exactly two-valued.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .io.manifests import Box2D, CategoryPalette, DetectionBoxSet
from .io.netpbm import Image, LabelRaster
from .model import CameraView, GaussianScene, normalize_quaternions
from .render import RenderConfig, render_view_float, quantize
from .sampling import SampledScene


@dataclass(frozen=True)
class SyntheticSceneSpec:
    object_count: int = 4
    blobs_per_object: int | tuple = 250
    object_extent: float = 0.5          # cube edge, meters
    background_count: int = 9000
    room_extent: tuple = (6.0, 6.0, 3.0)
    object_categories: tuple | None = None  # per-object palette ids (1-based)
    placement_radius: float = 0.78      # object centers ring around room center
    object_height: float = 1.4
    camera_count: int = 8
    camera_ring_radius: float = 2.4
    camera_height: float = 1.5
    image_width: int = 640
    image_height: int = 480
    focal: float = 500.0
    z_range: tuple = (0.2, 3.8)
    box_prob: float = 1.0
    seed: int = 0

    def blob_counts(self) -> list:
        if isinstance(self.blobs_per_object, int):
            return [self.blobs_per_object] * self.object_count
        counts = list(self.blobs_per_object)
        if len(counts) != self.object_count:
            raise ValidationError(
                f"{len(counts)} blob counts for {self.object_count} objects")
        return counts


CANONICAL_SPEC = SyntheticSceneSpec()


def canonical_palette() -> CategoryPalette:
    return CategoryPalette(
        names=("chair", "table", "sofa", "cabinet"),
        colors=np.array([[255, 0, 0], [0, 255, 0], [0, 0, 255], [255, 255, 0]],
                        dtype=np.uint8))


@dataclass(frozen=True)
class LabeledScene:
    """Scene plus per-blob ground truth: category id, 0 for background."""

    scene: GaussianScene
    categories: np.ndarray  # (N,) int32

    def __post_init__(self):
        cats = np.ascontiguousarray(self.categories, dtype=np.int32)
        object.__setattr__(self, "categories", cats)
        if cats.shape != (len(self.scene),):
            raise ValidationError("one category per blob required")

    @property
    def object_flags(self) -> np.ndarray:
        return self.categories > 0


def look_at_view(eye, target, width, height, focal, z_range) -> CameraView:
    """CV-convention camera (x right, y down, z forward) looking from eye
    toward target with world +z up."""
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    forward = target - eye
    norm = np.linalg.norm(forward)
    if norm < 1e-12:
        raise ValidationError("camera eye and target coincide")
    forward /= norm
    right = np.cross(forward, np.array([0.0, 0.0, 1.0]))
    rnorm = np.linalg.norm(right)
    if rnorm < 1e-9:
        raise ValidationError("camera looking along the world up axis")
    right /= rnorm
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])
    w2c = np.eye(4)
    w2c[:3, :3] = R
    w2c[:3, 3] = -R @ eye
    K = np.array([[focal, 0.0, width / 2.0],
                  [0.0, focal, height / 2.0],
                  [0.0, 0.0, 1.0]])
    return CameraView(intrinsics=K, world_to_camera=w2c, width=width,
                      height=height, z_min=z_range[0], z_max=z_range[1])


def ring_cameras(spec: SyntheticSceneSpec) -> list:
    target = np.array([0.0, 0.0, spec.camera_height])
    views = []
    for k in range(spec.camera_count):
        ang = 2.0 * np.pi * k / spec.camera_count
        eye = np.array([spec.camera_ring_radius * np.cos(ang),
                        spec.camera_ring_radius * np.sin(ang),
                        spec.camera_height])
        views.append(look_at_view(eye, target, spec.image_width,
                                  spec.image_height, spec.focal, spec.z_range))
    return views


def _random_blob_attrs(gen, count):
    scales = np.exp(gen.uniform(np.log(0.01), np.log(0.03), size=(count, 3)))
    rotations = normalize_quaternions(
        gen.normal(size=(count, 4)).astype(np.float32))
    opacities = gen.uniform(0.7, 0.95, size=count)
    return scales, rotations, opacities


def generate_scene(spec: SyntheticSceneSpec, seed: int | None = None):
    """Deterministic (scene, views, boxes) triple for one seed.

    Object blobs precede background blobs in index order; boxes carry
    probability spec.box_prob for the object's true category, and only for
    views that see every blob center of the object.
    """
    seed = spec.seed if seed is None else seed
    gen = np.random.default_rng(seed)
    rx, ry, rz = spec.room_extent
    if rx <= 0 or ry <= 0 or rz <= 0:
        raise ValidationError(f"room extent must be positive, got {spec.room_extent}")
    counts = spec.blob_counts()
    if any(c < 1 for c in counts):
        raise ValidationError("every object needs at least one blob")
    if spec.object_count == 0 and spec.background_count == 0:
        raise ValidationError("empty scene: no objects and no background")

    cats = spec.object_categories or tuple(
        (i % 4) + 1 for i in range(spec.object_count))
    if len(cats) != spec.object_count:
        raise ValidationError(
            f"{len(cats)} categories for {spec.object_count} objects")

    half = spec.object_extent / 2.0
    positions, categories, colors = [], [], []
    palette = canonical_palette()
    for i in range(spec.object_count):
        ang = 2.0 * np.pi * (i + 0.5) / max(spec.object_count, 1)
        center = np.array([spec.placement_radius * np.cos(ang),
                           spec.placement_radius * np.sin(ang),
                           spec.object_height])
        lo, hi = center - half, center + half
        if (lo[0] < -rx / 2 or hi[0] > rx / 2 or lo[1] < -ry / 2
                or hi[1] > ry / 2 or lo[2] < 0 or hi[2] > rz):
            raise ValidationError(f"object {i} does not fit the room")
        pts = gen.uniform(lo, hi, size=(counts[i], 3))
        positions.append(pts)
        categories.append(np.full(counts[i], cats[i], dtype=np.int32))
        cid = int(cats[i])
        color = palette.colors[(cid - 1) % len(palette)] / 255.0
        colors.append(np.tile(color, (counts[i], 1)))

    if spec.background_count > 0:
        areas = np.array([ry * rz, ry * rz, rx * rz, rx * rz, rx * ry, rx * ry])
        face = gen.choice(6, size=spec.background_count, p=areas / areas.sum())
        a = gen.uniform(0.0, 1.0, size=spec.background_count)
        b = gen.uniform(0.0, 1.0, size=spec.background_count)
        inward = gen.uniform(0.0, 0.08, size=spec.background_count)
        pts = np.empty((spec.background_count, 3))
        for f_id, (axis, side) in enumerate(((0, -1), (0, 1), (1, -1), (1, 1),
                                             (2, -1), (2, 1))):
            sel = face == f_id
            ext = np.array([rx, ry, rz])
            lo = np.array([-rx / 2, -ry / 2, 0.0])
            other = [ax for ax in range(3) if ax != axis]
            pts[sel, other[0]] = lo[other[0]] + a[sel] * ext[other[0]]
            pts[sel, other[1]] = lo[other[1]] + b[sel] * ext[other[1]]
            wall = lo[axis] if side < 0 else lo[axis] + ext[axis]
            pts[sel, axis] = wall - side * inward[sel]
        positions.append(pts)
        categories.append(np.zeros(spec.background_count, dtype=np.int32))
        colors.append(gen.uniform(0.3, 0.7, size=(spec.background_count, 3)))

    positions = np.concatenate(positions)
    categories = np.concatenate(categories)
    colors = np.concatenate(colors)
    scales, rotations, opacities = _random_blob_attrs(gen, positions.shape[0])
    scene = GaussianScene(positions, scales, rotations, colors, opacities,
                          source_path=f"synthetic(seed={seed})")
    labeled = LabeledScene(scene=scene, categories=categories)

    views = ring_cameras(spec)
    box_views = []
    start = 0
    spans = []
    for i, c in enumerate(counts):
        spans.append((start, start + c, int(cats[i])))
        start += c
    for view in views:
        boxes = []
        for lo, hi, cid in spans:
            u, v, z = view.project_points(positions[lo:hi])
            visible = (np.all(np.isfinite(u)) and np.all(z >= view.z_min)
                       and np.all(z <= view.z_max)
                       and u.min() >= 0 and u.max() < view.width
                       and v.min() >= 0 and v.max() < view.height)
            if not visible:
                continue
            probs = np.zeros(len(palette))
            probs[cid - 1] = spec.box_prob
            boxes.append(Box2D(float(np.floor(u.min())), float(np.floor(v.min())),
                               float(np.floor(u.max())) + 1.0,
                               float(np.floor(v.max())) + 1.0, probs))
        box_views.append(tuple(boxes))
    return labeled, views, DetectionBoxSet(views=tuple(box_views))


def retention_report(sample: SampledScene, truth: LabeledScene) -> dict:
    """Object recall and background share of a sample against ground truth."""
    if sample.source_count != len(truth.scene):
        raise ValidationError(
            f"sample comes from a {sample.source_count}-blob scene, truth has "
            f"{len(truth.scene)}")
    flags = truth.object_flags
    kept = flags[sample.indices]
    total_obj = int(flags.sum())
    kept_obj = int(kept.sum())
    size = len(sample)
    return {
        "object_recall": kept_obj / total_obj if total_obj else 0.0,
        "background_fraction": (size - kept_obj) / size,
        "counts": {
            "sample_size": size,
            "kept_object": kept_obj,
            "kept_background": size - kept_obj,
            "total_object": total_obj,
            "total_background": int(len(truth.scene) - total_obj),
        },
        "sampler": sample.sampler,
        "seed": sample.seed,
    }


def write_truth(labeled: LabeledScene, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"blob_categories": labeled.categories.tolist()}, f)
        f.write("\n")


def read_truth_categories(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return np.asarray(doc["blob_categories"], dtype=np.int32)


def synthesize_views(labeled: LabeledScene, views, palette: CategoryPalette,
                     config: RenderConfig | None = None,
                     min_weight: float = 0.5, dominance: float = 0.5):
    """Rendered posed images plus derived label rasters for each view.

    Labels come from auxiliary renders whose colors one-hot encode category
    membership (three categories per pass), which turns the rendered
    channels into per-category accumulated weights.  A pixel is labeled
    with the strongest category when total blob coverage exceeds
    min_weight and that category carries more than ``dominance`` of it.
    """
    config = config or RenderConfig()
    n_cat = len(palette)
    cat_weight_scenes = []
    for base in range(0, n_cat, 3):
        one_hot = np.zeros((len(labeled.scene), 3), dtype=np.float32)
        for ch in range(min(3, n_cat - base)):
            one_hot[labeled.categories == base + ch + 1, ch] = 1.0
        cat_weight_scenes.append(GaussianScene(
            labeled.scene.positions, labeled.scene.scales,
            labeled.scene.rotations, one_hot, labeled.scene.opacities,
            validate=False))
    out = []
    for view in views:
        res = render_view_float(labeled.scene, view, config)
        image = quantize(res.color)
        weights = []
        for scene in cat_weight_scenes:
            aux = render_view_float(scene, view, config)
            weights.append(aux.color.transpose(2, 0, 1))
        cat_weight = np.concatenate(weights, axis=0)[:n_cat]
        total = res.weight
        best = np.argmax(cat_weight, axis=0)
        best_w = np.take_along_axis(cat_weight, best[None], axis=0)[0]
        ok = (total > min_weight) & (best_w > dominance * total)
        labels = np.where(ok, best + 1, 0).astype(np.uint8)
        out.append((image, LabelRaster.from_array(labels)))
    return out
