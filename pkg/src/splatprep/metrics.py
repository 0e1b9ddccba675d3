"""Image reconstruction metrics: L1, windowed SSIM and the blended render loss.

Pixels are normalized to [0,1]; SSIM uses a uniform window over fully-valid
positions with the biased variance estimator, per channel, then averaged.
D-SSIM is (1 - SSIM) / 2 and the render loss blends
(1 - lambda) * L1 + lambda * D-SSIM.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .io.netpbm import Image


@dataclass(frozen=True)
class RenderLossConfig:
    lam: float = 0.2
    ssim_window: int = 11
    c1: float = 0.01 ** 2
    c2: float = 0.03 ** 2

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError(f"lambda {self.lam} outside [0,1]")
        if self.ssim_window < 3 or self.ssim_window % 2 == 0:
            raise ValidationError(f"ssim window {self.ssim_window} must be odd and >= 3")


def _as_float(image) -> np.ndarray:
    if isinstance(image, Image):
        return image.pixels.astype(np.float64) / 255.0
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(f"expected HxWx3 image data, got {arr.shape}")
    return arr


def _check_dims(a, b):
    if a.shape != b.shape:
        raise ValidationError(f"image dimensions differ: {a.shape} vs {b.shape}")


def _box_sum(x: np.ndarray, w: int) -> np.ndarray:
    """Sum over every w x w window fully inside x, via an integral image."""
    h, wd = x.shape
    integral = np.zeros((h + 1, wd + 1))
    integral[1:, 1:] = np.cumsum(np.cumsum(x, axis=0), axis=1)
    return (integral[w:, w:] - integral[:-w, w:]
            - integral[w:, :-w] + integral[:-w, :-w])


def ssim_float(a: np.ndarray, b: np.ndarray, window: int = 11,
               c1: float = 0.01 ** 2, c2: float = 0.03 ** 2) -> float:
    """Mean SSIM between two HxWx3 float arrays in [0,1]."""
    _check_dims(a, b)
    h, w = a.shape[:2]
    if h < window or w < window:
        raise ValidationError(f"image {h}x{w} smaller than ssim window {window}")
    n = float(window * window)
    vals = []
    for ch in range(3):
        x, y = a[:, :, ch], b[:, :, ch]
        mx = _box_sum(x, window) / n
        my = _box_sum(y, window) / n
        sxx = _box_sum(x * x, window) / n - mx * mx
        syy = _box_sum(y * y, window) / n - my * my
        sxy = _box_sum(x * y, window) / n - mx * my
        num = (2.0 * mx * my + c1) * (2.0 * sxy + c2)
        den = (mx * mx + my * my + c1) * (sxx + syy + c2)
        vals.append(np.mean(num / den))
    return float(np.mean(vals))


def l1_loss(a, b) -> float:
    """Mean absolute per-channel difference on [0,1]-normalized pixels."""
    fa, fb = _as_float(a), _as_float(b)
    _check_dims(fa, fb)
    return float(np.mean(np.abs(fa - fb)))


def d_ssim(a, b, config: RenderLossConfig | None = None) -> float:
    """(1 - SSIM) / 2; zero exactly for identical images."""
    config = config or RenderLossConfig()
    fa, fb = _as_float(a), _as_float(b)
    return (1.0 - ssim_float(fa, fb, config.ssim_window, config.c1, config.c2)) / 2.0


def render_loss(a, b, config: RenderLossConfig | None = None) -> float:
    """(1 - lambda) * L1 + lambda * D-SSIM."""
    config = config or RenderLossConfig()
    return (1.0 - config.lam) * l1_loss(a, b) + config.lam * d_ssim(a, b, config)
