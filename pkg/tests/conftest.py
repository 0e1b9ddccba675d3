import numpy as np
import pytest

from splatprep.frustum import frustum_from_box
from splatprep.io.manifests import Box2D
from splatprep.model import (CameraView, GaussianScene, normalize_quaternions,
                             quaternion_to_matrix)


def random_view(gen, width=640, height=480) -> CameraView:
    """Random pose/intrinsics view for frustum fuzzing."""
    q = normalize_quaternions(gen.normal(size=4))
    R = quaternion_to_matrix(q)
    w2c = np.eye(4)
    w2c[:3, :3] = R
    w2c[:3, 3] = gen.uniform(-1, 1, 3)
    K = np.array([[gen.uniform(300, 800), 0.0, width / 2 + gen.uniform(-20, 20)],
                  [0.0, gen.uniform(300, 800), height / 2 + gen.uniform(-20, 20)],
                  [0.0, 0.0, 1.0]])
    z_min = gen.uniform(0.1, 0.5)
    return CameraView(intrinsics=K, world_to_camera=w2c, width=width,
                      height=height, z_min=z_min, z_max=z_min + gen.uniform(2, 6))


def random_frustum(gen, view, n_categories=1):
    x0 = gen.uniform(0, view.width - 40)
    y0 = gen.uniform(0, view.height - 40)
    probs = np.zeros(n_categories)
    probs[int(gen.integers(n_categories))] = gen.uniform(0.2, 1.0)
    box = Box2D(x0, y0, x0 + gen.uniform(20, view.width - x0),
                y0 + gen.uniform(20, view.height - y0), probs=probs)
    return box, frustum_from_box(box, view, view_index=0)


def sample_near_frustum(gen, frustum, n):
    lo = frustum.corners.min(axis=0)
    hi = frustum.corners.max(axis=0)
    mid = (lo + hi) / 2
    half = (hi - lo) / 2 * 1.6
    return gen.uniform(mid - half, mid + half, (n, 3))


def make_scene(n=50, seed=0, spread=2.0) -> GaussianScene:
    gen = np.random.default_rng(seed)
    return GaussianScene(
        positions=gen.uniform(-spread, spread, (n, 3)),
        scales=np.exp(gen.uniform(-4.0, -2.0, (n, 3))),
        rotations=normalize_quaternions(gen.normal(size=(n, 4)).astype(np.float32)),
        colors=gen.uniform(0.0, 1.0, (n, 3)),
        opacities=gen.uniform(0.05, 0.95, n),
    )


def make_view(width=640, height=480, focal=500.0, z=(0.2, 6.0),
              world_to_camera=None) -> CameraView:
    K = np.array([[focal, 0.0, width / 2.0],
                  [0.0, focal, height / 2.0],
                  [0.0, 0.0, 1.0]])
    w2c = np.eye(4) if world_to_camera is None else world_to_camera
    return CameraView(intrinsics=K, world_to_camera=w2c, width=width,
                      height=height, z_min=z[0], z_max=z[1])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            name = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_c" in name:
                crit = name.split("::test_c", 1)[1].split("_", 1)
                label = crit[1].replace("_", " ") if len(crit) > 1 else name
                verdict = "PASS" if status == "passed" else "FAIL"
                lines.append((int(crit[0]), f"criterion {int(crit[0]):2d} "
                                            f"({label}): {verdict}"))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
