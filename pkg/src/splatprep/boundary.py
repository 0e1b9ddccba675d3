"""Category boundary extraction and image overlays.

Borders are traced with the classic raster-scan border-following algorithm
(8-connected foreground, 4-connected background), giving every outer and
hole contour of a binary mask.  Per-category boundary maps are rasterized
contours optionally thickened by a Chebyshev dilation, then painted over
posed images; two ablation overlays (box center points, filled masks) share
the painting rules.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .io.manifests import CategoryPalette
from .io.netpbm import Image, LabelRaster

# 8-neighborhood in counterclockwise order (rows grow downward):
# E, NE, N, NW, W, SW, S, SE.
_CCW = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))
_DIR_INDEX = {d: k for k, d in enumerate(_CCW)}


@dataclass(frozen=True)
class Contour:
    """Closed border walk: consecutive points (and the ends) are 8-adjacent."""

    points: np.ndarray  # (L,2) int64 (row, col), in walk order
    kind: str           # "outer" or "hole"
    category: int = 0


def _follow(f, i, j, i2, j2, nbd, height, width):
    """One border walk from start pixel (i,j); marks f in place."""

    def at(r, c):
        if 0 <= r < height and 0 <= c < width:
            return f[r, c]
        return 0

    # Clockwise search around (i,j) from (i2,j2) for the first nonzero pixel.
    d0 = _DIR_INDEX[(i2 - i, j2 - j)]
    i1 = None
    for step in range(8):
        k = (d0 - step) % 8
        r, c = i + _CCW[k][0], j + _CCW[k][1]
        if at(r, c) != 0:
            i1, j1 = r, c
            break
    if i1 is None:
        f[i, j] = -nbd
        return [(i, j)]

    i2, j2 = i1, j1
    i3, j3 = i, j
    points = [(i, j)]
    while True:
        # Counterclockwise search around (i3,j3), starting after (i2,j2).
        d = _DIR_INDEX[(i2 - i3, j2 - j3)]
        east_zero = False
        for step in range(1, 9):
            k = (d + step) % 8
            r, c = i3 + _CCW[k][0], j3 + _CCW[k][1]
            if at(r, c) != 0:
                i4, j4 = r, c
                break
            if k == 0:
                east_zero = True
        if east_zero:
            f[i3, j3] = -nbd
        elif f[i3, j3] == 1:
            f[i3, j3] = nbd
        if (i4, j4) == (i, j) and (i3, j3) == (i1, j1):
            return points
        i2, j2 = i3, j3
        i3, j3 = i4, j4
        points.append((i3, j3))


def trace_borders(mask, category: int = 0) -> list:
    """Every outer and hole border of a {0,1} raster.

    The union of contour pixels equals the set of foreground pixels with a
    background (or out-of-bounds) 4-neighbor.
    """
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValidationError(f"mask must be 2D, got shape {mask.shape}")
    if mask.size and not np.isin(mask, (0, 1)).all():
        raise ValidationError("mask must be {0,1}-valued")
    height, width = mask.shape
    f = mask.astype(np.int32)

    # Border starts need a zero on the west (outer) or east (hole) side;
    # zeros never change during tracing, so candidates come from the raw mask.
    fg = mask == 1
    west0 = np.ones_like(fg)
    west0[:, 1:] = ~fg[:, :-1]
    east0 = np.ones_like(fg)
    east0[:, :-1] = ~fg[:, 1:]
    cand_rows, cand_cols = np.nonzero(fg & (west0 | east0))

    contours = []
    nbd = 1
    for i, j in zip(cand_rows.tolist(), cand_cols.tolist()):
        v = f[i, j]
        if v == 1 and (j == 0 or f[i, j - 1] == 0):
            kind, i2, j2 = "outer", i, j - 1
        elif v >= 1 and (j == width - 1 or f[i, j + 1] == 0):
            kind, i2, j2 = "hole", i, j + 1
        else:
            continue
        nbd += 1
        pts = _follow(f, i, j, i2, j2, nbd, height, width)
        contours.append(Contour(points=np.array(pts, dtype=np.int64),
                                kind=kind, category=category))
    return contours


def chebyshev_dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation with a (2r+1)^2 square structuring element."""
    if radius < 0:
        raise ValidationError("dilation radius must be >= 0")
    if radius == 0:
        return mask.astype(np.uint8)
    src = mask.astype(bool)
    out = np.zeros_like(src)
    height, width = src.shape
    for dy in range(-radius, radius + 1):
        ys = slice(max(dy, 0), height + min(dy, 0))
        yd = slice(max(-dy, 0), height + min(-dy, 0))
        for dx in range(-radius, radius + 1):
            xs = slice(max(dx, 0), width + min(dx, 0))
            xd = slice(max(-dx, 0), width + min(-dx, 0))
            out[yd, xd] |= src[ys, xs]
    return out.astype(np.uint8)


@dataclass(frozen=True)
class BoundaryMaps:
    """One {0,1} raster per palette category, image-sized."""

    width: int
    height: int
    maps: dict  # category id -> (H,W) uint8

    def active_any(self) -> np.ndarray:
        out = np.zeros((self.height, self.width), dtype=bool)
        for m in self.maps.values():
            out |= m.astype(bool)
        return out


def build_boundary_maps(labels: LabelRaster, palette: CategoryPalette,
                        dilation_radius: int = 1) -> BoundaryMaps:
    """Trace each category's borders and rasterize them, dilated by the
    given Chebyshev radius."""
    arr = labels.labels
    if arr.size and int(arr.max()) > len(palette):
        raise ValidationError(
            f"label {int(arr.max())} exceeds palette size {len(palette)}")
    maps = {}
    for cid in range(1, len(palette) + 1):
        mask = (arr == cid).astype(np.uint8)
        raster = np.zeros_like(mask)
        if mask.any():
            for contour in trace_borders(mask, category=cid):
                raster[contour.points[:, 0], contour.points[:, 1]] = 1
            raster = chebyshev_dilate(raster, dilation_radius)
        maps[cid] = raster
    return BoundaryMaps(width=labels.width, height=labels.height, maps=maps)


def overlay_boundaries(image: Image, maps: BoundaryMaps,
                       palette: CategoryPalette) -> Image:
    """Paint boundary pixels in their category color, untouched elsewhere.

    Where several categories coincide the lowest category id wins; pixels
    with no active category are bit-identical to the input.
    """
    if (image.width, image.height) != (maps.width, maps.height):
        raise ValidationError(
            f"image {image.width}x{image.height} vs maps {maps.width}x{maps.height}")
    out = image.pixels.copy()
    for cid in sorted(maps.maps, reverse=True):
        m = maps.maps[cid]
        if m.any():
            out[m == 1] = palette.color_of(cid)
    return Image.from_array(out)


def overlay_ablation(image: Image, source, palette: CategoryPalette,
                     mode: str) -> Image:
    """Alternative guidance overlays: "center-point" paints a 3x3 block of
    the argmax-category color at each box center (floor midpoint);
    "filled-mask" paints every labeled pixel."""
    out = image.pixels.copy()
    if mode == "center-point":
        for box in source:
            cid = int(np.argmax(box.probs)) + 1
            color = palette.color_of(cid)
            cx = int(np.floor((box.x_min + box.x_max) / 2.0))
            cy = int(np.floor((box.y_min + box.y_max) / 2.0))
            y0, y1 = max(cy - 1, 0), min(cy + 2, image.height)
            x0, x1 = max(cx - 1, 0), min(cx + 2, image.width)
            if y0 < y1 and x0 < x1:
                out[y0:y1, x0:x1] = color
    elif mode == "filled-mask":
        labels = source.labels
        if labels.shape != out.shape[:2]:
            raise ValidationError(
                f"labels {labels.shape} do not match image {out.shape[:2]}")
        if labels.size and int(labels.max()) > len(palette):
            raise ValidationError(
                f"label {int(labels.max())} exceeds palette size {len(palette)}")
        for cid in range(1, len(palette) + 1):
            sel = labels == cid
            if sel.any():
                out[sel] = palette.color_of(cid)
    else:
        raise ValidationError(f"unknown overlay mode {mode!r}")
    return Image.from_array(out)
