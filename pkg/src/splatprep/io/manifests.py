"""JSON manifests: camera views, category palettes and 2D detection boxes.

Floats are serialized with Python's shortest round-trip repr, so a
write/read cycle reproduces every value exactly.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import FormatError, ValidationError
from ..model import CameraView


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")


def read_cameras(path) -> list:
    """Parse {"views":[{"K", "world_to_camera", "width", "height", "z_min", "z_max"}]}."""
    doc = _load_json(path)
    if not isinstance(doc, dict) or "views" not in doc:
        raise FormatError(f"{path}: top-level object must contain 'views'")
    views = []
    for i, entry in enumerate(doc["views"]):
        try:
            K = np.asarray(entry["K"], dtype=np.float64)
            W = np.asarray(entry["world_to_camera"], dtype=np.float64)
            if K.size != 9 or W.size != 16:
                raise ValidationError(
                    f"K needs 9 numbers and world_to_camera 16, got {K.size} and {W.size}")
            view = CameraView(intrinsics=K.reshape(3, 3),
                              world_to_camera=W.reshape(4, 4),
                              width=int(entry["width"]), height=int(entry["height"]),
                              z_min=float(entry["z_min"]), z_max=float(entry["z_max"]))
        except KeyError as e:
            raise FormatError(f"{path}: view {i} is missing key {e}")
        except ValidationError as e:
            raise ValidationError(f"{path}: view {i}: {e}")
        views.append(view)
    if not views:
        raise ValidationError(f"{path}: empty view list")
    return views


def write_cameras(views, path):
    doc = {"views": [{
        "K": [float(x) for x in v.intrinsics.ravel()],
        "world_to_camera": [float(x) for x in v.world_to_camera.ravel()],
        "width": v.width, "height": v.height,
        "z_min": v.z_min, "z_max": v.z_max,
    } for v in views]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


@dataclass(frozen=True)
class CategoryPalette:
    """Ordered categories with overlay colors; ids are 1-based (0 = background)."""

    names: tuple
    colors: np.ndarray  # (C,3) uint8

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        colors = np.ascontiguousarray(self.colors, dtype=np.uint8)
        object.__setattr__(self, "colors", colors)
        if colors.shape != (len(self.names), 3):
            raise ValidationError("palette needs one RGB color per category")
        if len(set(self.names)) != len(self.names):
            raise ValidationError("palette names must be distinct")
        if len({tuple(c) for c in colors.tolist()}) != len(self.names):
            raise ValidationError("palette colors must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.names)

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name) + 1
        except ValueError:
            raise ValidationError(
                f"unknown category {name!r}; palette has {list(self.names)}")

    def color_of(self, category_id: int) -> np.ndarray:
        if not 1 <= category_id <= len(self.names):
            raise ValidationError(f"category id {category_id} outside 1..{len(self.names)}")
        return self.colors[category_id - 1]


def read_palette(path) -> CategoryPalette:
    doc = _load_json(path)
    if not isinstance(doc, dict) or "categories" not in doc:
        raise FormatError(f"{path}: top-level object must contain 'categories'")
    names, colors = [], []
    for i, entry in enumerate(doc["categories"]):
        try:
            names.append(str(entry["name"]))
            rgb = entry["rgb"]
        except KeyError as e:
            raise FormatError(f"{path}: category {i} is missing key {e}")
        if len(rgb) != 3 or any(not (0 <= int(c) <= 255) for c in rgb):
            raise ValidationError(f"{path}: category {i} rgb must be three bytes, got {rgb}")
        colors.append([int(c) for c in rgb])
    return CategoryPalette(names=names, colors=np.array(colors, dtype=np.uint8))


def write_palette(palette: CategoryPalette, path):
    doc = {"categories": [{"name": n, "rgb": [int(c) for c in rgb]}
                          for n, rgb in zip(palette.names, palette.colors)]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


@dataclass(frozen=True)
class Box2D:
    """Axis-aligned pixel box, inclusive-exclusive, with per-category probabilities."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    probs: np.ndarray  # (|C|,) in [0,1], palette order

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=np.float64))
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(
                f"degenerate box [{self.x_min},{self.y_min},{self.x_max},{self.y_max}]")
        if np.any(self.probs < 0.0) or np.any(self.probs > 1.0):
            raise ValidationError(f"box probabilities outside [0,1]: {self.probs}")

    @property
    def p_max(self) -> float:
        return float(self.probs.max())


@dataclass(frozen=True)
class DetectionBoxSet:
    """Per-view 2D detection boxes."""

    views: tuple  # tuple of tuples of Box2D
    clamped_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "views", tuple(tuple(v) for v in self.views))

    def __len__(self) -> int:
        return len(self.views)


def read_boxes(path, palette: CategoryPalette, views=None) -> DetectionBoxSet:
    """Parse {"views":[{"boxes":[{"box":[x0,y0,x1,y1],"probs":{name:p}}]}]}.

    Probability vectors follow palette order (absent categories get 0).
    When camera views are supplied, boxes are clamped to their image bounds
    and the clamp count is reported on the returned set.
    """
    doc = _load_json(path)
    if not isinstance(doc, dict) or "views" not in doc:
        raise FormatError(f"{path}: top-level object must contain 'views'")
    if views is not None and len(doc["views"]) != len(views):
        raise ValidationError(
            f"{path}: box manifest has {len(doc['views'])} views, cameras have {len(views)}")
    out = []
    clamped = 0
    for vi, entry in enumerate(doc["views"]):
        boxes = []
        for bi, b in enumerate(entry.get("boxes", [])):
            try:
                coords = [float(c) for c in b["box"]]
                probs_in = b["probs"]
            except KeyError as e:
                raise FormatError(f"{path}: view {vi} box {bi} is missing key {e}")
            if len(coords) != 4:
                raise ValidationError(f"{path}: view {vi} box {bi} needs 4 coordinates")
            probs = np.zeros(len(palette), dtype=np.float64)
            for name, p in probs_in.items():
                probs[palette.id_of(name) - 1] = float(p)
            x0, y0, x1, y1 = coords
            if views is not None:
                w, h = views[vi].width, views[vi].height
                cx0, cy0 = max(x0, 0.0), max(y0, 0.0)
                cx1, cy1 = min(x1, float(w)), min(y1, float(h))
                if (cx0, cy0, cx1, cy1) != (x0, y0, x1, y1):
                    clamped += 1
                x0, y0, x1, y1 = cx0, cy0, cx1, cy1
            try:
                boxes.append(Box2D(x0, y0, x1, y1, probs))
            except ValidationError as e:
                raise ValidationError(f"{path}: view {vi} box {bi}: {e}")
        out.append(tuple(boxes))
    return DetectionBoxSet(views=tuple(out), clamped_count=clamped)


def write_boxes(box_set: DetectionBoxSet, palette: CategoryPalette, path):
    doc = {"views": []}
    for boxes in box_set.views:
        entry = []
        for b in boxes:
            probs = {palette.names[i]: float(p)
                     for i, p in enumerate(b.probs) if p != 0.0}
            entry.append({"box": [b.x_min, b.y_min, b.x_max, b.y_max], "probs": probs})
        doc["views"].append({"boxes": entry})
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
