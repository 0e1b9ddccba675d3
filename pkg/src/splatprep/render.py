"""CPU reference renderer: project, depth-sort, alpha-composite.

Pixel centers sit at integer coordinates (pixel (row, col) is sampled at
x = col, y = row).  Blobs closer than the view's z_min are clipped (the
EWA footprint diverges at the camera plane); there is no far clip.  Blob
footprints are truncated at a Mahalanobis radius and contributions below
alpha_cutoff are dropped; the remaining transmittance is filled with the
background color.  Output is invariant to blob order (the depth sort
breaks ties on blob position) and to the number of threads (row bands
are disjoint).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ValidationError
from .io.netpbm import Image
from .model import MIN_SCALE, Z_EPSILON, CameraView, GaussianScene

_QUANT_SCALE = 255.0


@dataclass(frozen=True)
class RenderConfig:
    alpha_cutoff: float = 1.0 / 255.0
    gaussian_radius_sigmas: float = 3.0
    background_color: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not 0.0 <= self.alpha_cutoff <= 0.1:
            raise ValidationError(f"alpha_cutoff {self.alpha_cutoff} outside [0, 0.1]")
        if self.gaussian_radius_sigmas < 1.0:
            raise ValidationError("gaussian_radius_sigmas must be >= 1")
        bg = tuple(float(c) for c in self.background_color)
        if len(bg) != 3:
            raise ValidationError("background_color needs 3 components")
        object.__setattr__(self, "background_color", bg)


@dataclass(frozen=True)
class RenderResult:
    color: np.ndarray    # (H,W,3) float64, background already composited
    weight: np.ndarray   # (H,W) accumulated blob weight (<= 1)
    depth_sum: np.ndarray  # (H,W) weight-weighted depth sum

    def mean_depth(self, min_weight: float = 0.5) -> np.ndarray:
        """Per-pixel expected depth; NaN where too little blob coverage."""
        with np.errstate(invalid="ignore", divide="ignore"):
            d = self.depth_sum / self.weight
        d[self.weight < min_weight] = np.nan
        return d


def _rotation_matrices(quats: np.ndarray) -> np.ndarray:
    w, x, y, z = (quats[:, 0], quats[:, 1], quats[:, 2], quats[:, 3])
    m = np.empty((quats.shape[0], 3, 3))
    m[:, 0, 0] = 1 - 2 * (y * y + z * z)
    m[:, 0, 1] = 2 * (x * y - w * z)
    m[:, 0, 2] = 2 * (x * z + w * y)
    m[:, 1, 0] = 2 * (x * y + w * z)
    m[:, 1, 1] = 1 - 2 * (x * x + z * z)
    m[:, 1, 2] = 2 * (y * z - w * x)
    m[:, 2, 0] = 2 * (x * z - w * y)
    m[:, 2, 1] = 2 * (y * z + w * x)
    m[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def project_scene(scene: GaussianScene, view: CameraView, cov_floor: float = 0.3):
    """Vectorized EWA projection of every blob.

    Returns (means2d (N,2), cov2d packed (N,3) as a,b,c, depth (N,),
    in_front (N,) bool).  Matches model.project_blob per blob.
    """
    R, t, K = view.rotation, view.translation, view.intrinsics
    p = scene.positions.astype(np.float64)
    cam = p @ R.T + t
    depth = cam[:, 2]
    in_front = depth > Z_EPSILON
    with np.errstate(divide="ignore", invalid="ignore"):
        invz = np.where(in_front, 1.0 / depth, np.nan)
    lin_u = K[0, 0] * cam[:, 0] + K[0, 1] * cam[:, 1]
    lin_v = K[1, 0] * cam[:, 0] + K[1, 1] * cam[:, 1]
    u = lin_u * invz + K[0, 2]
    v = lin_v * invz + K[1, 2]

    rot = _rotation_matrices(scene.rotations.astype(np.float64))
    s = np.maximum(scene.scales.astype(np.float64), MIN_SCALE)
    m = rot * s[:, None, :]
    sigma = np.einsum("nij,nkj->nik", m, m)
    sigma_cam = np.einsum("ij,njk,lk->nil", R, sigma, R)

    jac = np.empty((len(scene), 2, 3))
    jac[:, 0, 0] = K[0, 0] * invz
    jac[:, 0, 1] = K[0, 1] * invz
    jac[:, 0, 2] = -lin_u * invz * invz
    jac[:, 1, 0] = K[1, 0] * invz
    jac[:, 1, 1] = K[1, 1] * invz
    jac[:, 1, 2] = -lin_v * invz * invz
    cov = np.einsum("nij,njk,nlk->nil", jac, sigma_cam, jac)
    b = 0.5 * (cov[:, 0, 1] + cov[:, 1, 0])
    packed = np.stack([cov[:, 0, 0] + cov_floor, b, cov[:, 1, 1] + cov_floor], axis=1)
    return np.stack([u, v], axis=1), packed, depth, in_front


def _prepare(scene: GaussianScene, view: CameraView, config: RenderConfig):
    means, cov, depth, in_front = project_scene(scene, view)
    opac = scene.opacities.astype(np.float64)
    # Near-plane clip at the view's z_min: the EWA footprint diverges as a
    # blob approaches the camera plane.  No far clip.
    keep = in_front & (depth >= view.z_min) & (opac >= config.alpha_cutoff)

    a, b, c = cov[:, 0], cov[:, 1], cov[:, 2]
    det = a * c - b * b
    keep &= (det > 0.0) & (a > 0.0) & (c > 0.0)

    idx = np.flatnonzero(keep)
    if idx.size == 0:
        return None
    # Canonical front-to-back order: depth, then position (permutation-proof).
    p = scene.positions.astype(np.float64)
    order = np.lexsort((p[idx, 0], p[idx, 1], p[idx, 2], depth[idx]))
    idx = idx[order]

    a, b, c, det = a[idx], b[idx], c[idx], det[idx]
    inv2d = np.stack([c / det, -b / det, a / det], axis=1)
    means = means[idx]
    r = config.gaussian_radius_sigmas
    hx = r * np.sqrt(a) + 1e-6
    hy = r * np.sqrt(c) + 1e-6
    x0 = np.clip(np.ceil(means[:, 0] - hx), 0, view.width).astype(np.int64)
    x1 = np.clip(np.floor(means[:, 0] + hx) + 1, 0, view.width).astype(np.int64)
    y0 = np.clip(np.ceil(means[:, 1] - hy), 0, view.height).astype(np.int64)
    y1 = np.clip(np.floor(means[:, 1] + hy) + 1, 0, view.height).astype(np.int64)
    bbox = np.stack([x0, x1, y0, y1], axis=1)

    visible = (bbox[:, 0] < bbox[:, 1]) & (bbox[:, 2] < bbox[:, 3])
    sel = np.flatnonzero(visible)
    return (np.ascontiguousarray(means[sel]),
            np.ascontiguousarray(inv2d[sel]),
            np.ascontiguousarray(opac[idx][sel]),
            np.ascontiguousarray(scene.colors.astype(np.float64)[idx][sel]),
            np.ascontiguousarray(depth[idx][sel]),
            np.ascontiguousarray(bbox[sel]))


def render_view_float(scene: GaussianScene, view: CameraView,
                      config: RenderConfig | None = None,
                      threads: int = 1) -> RenderResult:
    """Float-precision render with accumulated weight and depth maps."""
    config = config or RenderConfig()
    h, w = view.height, view.width
    color = np.zeros((h, w, 3))
    trans = np.ones((h, w))
    weight = np.zeros((h, w))
    depth_sum = np.zeros((h, w))

    prep = _prepare(scene, view, config)
    if prep is not None:
        means, inv2d, opac, colors, depths, bbox = prep
        kern = _backend.kernels()
        max_m2 = config.gaussian_radius_sigmas ** 2

        def run_band(r0, r1):
            kern.splat_accumulate(means, inv2d, opac, colors, depths, bbox,
                                  config.alpha_cutoff, max_m2, r0, r1,
                                  color, trans, weight, depth_sum)

        if threads <= 1 or h < 2 * threads:
            run_band(0, h)
        else:
            bounds = np.linspace(0, h, threads + 1).astype(np.int64)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(lambda i: run_band(int(bounds[i]), int(bounds[i + 1])),
                              range(threads)))

    bg = np.asarray(config.background_color)
    color = color + trans[:, :, None] * bg
    return RenderResult(color=color, weight=weight, depth_sum=depth_sum)


def quantize(color_float: np.ndarray) -> Image:
    """Float [0,1] colors to 8-bit via round-half-even, clipped."""
    return Image.from_array(
        np.clip(np.rint(color_float * _QUANT_SCALE), 0, 255).astype(np.uint8))


def render_view(scene: GaussianScene, view: CameraView,
                config: RenderConfig | None = None, threads: int = 1) -> Image:
    return quantize(render_view_float(scene, view, config, threads).color)


def boundary_stability_score(scene: GaussianScene, views, boundary_colors,
                             config: RenderConfig | None = None,
                             color_tol: float = 0.15,
                             reproj_px: float = 2.0,
                             min_weight: float = 0.5) -> float:
    """Multi-view consistency of boundary-colored pixels in [0,1].

    Matching rule: render every view; a pixel is "boundary" when its float
    color lies within Euclidean distance color_tol of any palette boundary
    color and its accumulated weight exceeds min_weight.  Each boundary
    pixel of view a back-projects at its rendered mean depth and counts as
    matched when it lands within Chebyshev distance reproj_px of a boundary
    pixel of view b (all ordered pairs a != b, in front of b's camera).
    With no boundary pixels anywhere the score is vacuously 1.
    """
    if len(views) < 2:
        raise ValidationError("stability needs at least 2 views")
    colors = np.asarray(boundary_colors, dtype=np.float64).reshape(-1, 3)
    renders = [render_view_float(scene, v, config) for v in views]

    masks, depths = [], []
    for res in renders:
        d2 = np.min(np.sum((res.color[:, :, None, :] - colors[None, None, :, :]) ** 2,
                           axis=3), axis=2)
        mask = (d2 <= color_tol ** 2) & (res.weight > min_weight)
        masks.append(mask)
        depths.append(res.mean_depth(min_weight))

    from .boundary import chebyshev_dilate
    pad = int(np.ceil(reproj_px))
    dilated = [chebyshev_dilate(m, pad).astype(bool) for m in masks]

    total = 0
    matched = 0
    for a in range(len(views)):
        rows, cols = np.nonzero(masks[a])
        if rows.size == 0:
            continue
        d = depths[a][rows, cols]
        ok = np.isfinite(d)
        rows, cols, d = rows[ok], cols[ok], d[ok]
        if rows.size == 0:
            continue
        Ka, Ra, ta = views[a].intrinsics, views[a].rotation, views[a].translation
        rays = np.linalg.solve(Ka, np.stack(
            [cols.astype(np.float64), rows.astype(np.float64), np.ones(rows.size)]))
        cam = (rays * d).T
        world = (cam - ta) @ Ra
        for b in range(len(views)):
            if b == a:
                continue
            u, v, z = views[b].project_points(world)
            total += rows.size
            with np.errstate(invalid="ignore"):
                pu = np.rint(u).astype(np.int64)
                pv = np.rint(v).astype(np.int64)
                inb = ((z > Z_EPSILON) & (pu >= 0) & (pu < views[b].width)
                       & (pv >= 0) & (pv < views[b].height))
            hit = np.zeros(rows.size, dtype=bool)
            hit[inb] = dilated[b][pv[inb], pu[inb]]
            matched += int(hit.sum())
    if total == 0:
        return 1.0
    return matched / total
