import numpy as np
import pytest

from splatprep.errors import ValidationError
from splatprep.io.netpbm import Image
from splatprep.metrics import (RenderLossConfig, d_ssim, l1_loss, render_loss,
                               ssim_float)


def direct_ssim_oracle(a, b, window, c1, c2):
    """Definition-level SSIM: explicit loop over every valid window."""
    h, w = a.shape[:2]
    vals = []
    for ch in range(3):
        x, y = a[:, :, ch], b[:, :, ch]
        for r in range(h - window + 1):
            for c in range(w - window + 1):
                px = x[r:r + window, c:c + window]
                py = y[r:r + window, c:c + window]
                mx, my = np.mean(px), np.mean(py)
                vx, vy = np.var(px), np.var(py)
                cov = np.mean((px - mx) * (py - my))
                vals.append(((2 * mx * my + c1) * (2 * cov + c2))
                            / ((mx**2 + my**2 + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


def random_image(rng, h=24, w=28):
    return Image.from_array(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))


class TestIdentities:
    def test_zero_for_identical(self, rng):
        img = random_image(rng)
        assert l1_loss(img, img) == 0.0
        assert d_ssim(img, img) == 0.0
        assert render_loss(img, img) == 0.0

    def test_black_vs_white(self):
        black = Image.from_array(np.zeros((16, 16, 3), np.uint8))
        white = Image.from_array(np.full((16, 16, 3), 255, np.uint8))
        assert l1_loss(black, white) == 1.0

    def test_ssim_self_is_one(self, rng):
        img = random_image(rng)
        a = img.pixels.astype(np.float64) / 255.0
        assert ssim_float(a, a) == 1.0


class TestAgainstOracle:
    def test_d_ssim_matches_direct_definition(self, rng):
        cfg = RenderLossConfig(ssim_window=7)
        for _ in range(5):
            a = random_image(rng, 20, 22)
            b = random_image(rng, 20, 22)
            fa = a.pixels.astype(np.float64) / 255.0
            fb = b.pixels.astype(np.float64) / 255.0
            oracle = (1.0 - direct_ssim_oracle(fa, fb, 7, cfg.c1, cfg.c2)) / 2.0
            assert abs(d_ssim(a, b, cfg) - oracle) < 1e-9

    def test_smooth_images_nearly_similar(self, rng):
        base = rng.integers(100, 120, (20, 20, 3)).astype(np.uint8)
        a = Image.from_array(base)
        b = Image.from_array(np.clip(base + 1, 0, 255).astype(np.uint8))
        assert d_ssim(a, b) < 0.01


class TestRenderLoss:
    def test_blend(self, rng):
        a, b = random_image(rng), random_image(rng)
        cfg = RenderLossConfig(lam=0.3, ssim_window=7)
        expected = 0.7 * l1_loss(a, b) + 0.3 * d_ssim(a, b, cfg)
        assert render_loss(a, b, cfg) == pytest.approx(expected, abs=1e-15)

    def test_l1_symmetry(self, rng):
        a, b = random_image(rng), random_image(rng)
        assert l1_loss(a, b) == l1_loss(b, a)

    def test_dimension_mismatch(self, rng):
        a = random_image(rng, 10, 10)
        b = random_image(rng, 12, 10)
        with pytest.raises(ValidationError):
            l1_loss(a, b)
        with pytest.raises(ValidationError):
            d_ssim(a, b)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            RenderLossConfig(lam=1.5)
        with pytest.raises(ValidationError):
            RenderLossConfig(ssim_window=4)
        with pytest.raises(ValidationError):
            RenderLossConfig(ssim_window=1)

    def test_window_larger_than_image(self, rng):
        a = random_image(rng, 8, 8)
        with pytest.raises(ValidationError):
            d_ssim(a, a, RenderLossConfig(ssim_window=11))
