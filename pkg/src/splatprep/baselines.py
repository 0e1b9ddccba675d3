"""Reference samplers for controlled comparisons: uniform random and
farthest point sampling."""

import numpy as np

from . import _backend, rng
from .errors import ValidationError
from .model import GaussianScene
from .sampling import SampledScene, smallest_m_indices


def random_sample(scene: GaussianScene, budget: int, seed: int) -> SampledScene:
    """Uniform M-subset without replacement: keep the M smallest per-blob
    uniforms from the counter-based stream."""
    n = len(scene)
    if not 1 <= budget <= n:
        raise ValidationError(f"budget {budget} must be in 1..{n}")
    u = rng.uniforms(seed, rng.STREAM_RANDOM_SAMPLE, n)
    idx = smallest_m_indices(u, budget)
    return SampledScene(indices=idx, scene=scene.subset(idx), sampler="random",
                        seed=seed, budget=budget, source_count=n)


def farthest_point_sample(scene: GaussianScene, budget: int, seed: int,
                          start_index: int | None = None) -> SampledScene:
    """Greedy geometric-coverage sampling on blob positions.

    The seed picks the initial blob uniformly (override with start_index for
    reproducing a specific run); every later pick maximizes the minimum
    squared distance to the selected set, ties to the lowest index.
    """
    n = len(scene)
    if not 1 <= budget <= n:
        raise ValidationError(f"budget {budget} must be in 1..{n}")
    if start_index is None:
        start_index = int(rng.uniform_at(seed, rng.STREAM_FPS_START, 0) * n)
    if not 0 <= start_index < n:
        raise ValidationError(f"start index {start_index} outside 0..{n - 1}")
    pts = scene.positions.astype(np.float64)
    sel = _backend.kernels().fps_select(pts, budget, start_index)
    idx = np.sort(np.asarray(sel, dtype=np.int64))
    return SampledScene(indices=idx, scene=scene.subset(idx), sampler="fps",
                        seed=seed, budget=budget, source_count=n)
