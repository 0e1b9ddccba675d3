"""Brute-force reference implementations used to verify the fast paths.

Deliberately self-contained: this module only imports numpy/scipy and takes
raw arrays, so it shares no geometry code with the production modules it
checks.
"""

import numpy as np
from scipy.spatial import ConvexHull


def hull_equations(corners) -> np.ndarray:
    """Outward face equations [n | d] of the convex hull of the given points
    (qhull; unit normals, inside means n.p + d <= 0)."""
    return ConvexHull(np.asarray(corners, dtype=np.float64)).equations


def hull_contains(corners, points, tol: float = 0.0) -> np.ndarray:
    """Membership of points in the convex hull of corners.

    tol > 0 admits points up to tol outside every face.
    """
    eq = hull_equations(corners)
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    signed = p @ eq[:, :3].T + eq[:, 3]
    return np.all(signed <= tol, axis=1)


def hull_face_margin(corners, points) -> np.ndarray:
    """Smallest absolute signed distance of each point to any hull face
    plane; points within eps of a face have margin < eps."""
    eq = hull_equations(corners)
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    return np.min(np.abs(p @ eq[:, :3].T + eq[:, 3]), axis=1)


def fps_bruteforce(points, m: int, start: int) -> list:
    """Quadratic farthest point sampling: every round recomputes the full
    distance-to-selected-set minimum (squared distances, first-max ties)."""
    pts = np.asarray(points, dtype=np.float64)
    selected = [int(start)]
    for _ in range(m - 1):
        diff = pts[:, None, :] - pts[selected][None, :, :]
        d = diff[:, :, 0] ** 2 + diff[:, :, 1] ** 2 + diff[:, :, 2] ** 2
        dmin = d.min(axis=1)
        selected.append(int(np.argmax(dmin)))
    return selected


def border_pixels(mask) -> set:
    """Foreground pixels with at least one 4-neighbor that is background or
    out of bounds."""
    mask = np.asarray(mask)
    h, w = mask.shape
    out = set()
    for r in range(h):
        for c in range(w):
            if mask[r, c] != 1:
                continue
            for dr, dc in ((0, 1), (0, -1), (1, 0), (-1, 0)):
                rr, cc = r + dr, c + dc
                if not (0 <= rr < h and 0 <= cc < w) or mask[rr, cc] == 0:
                    out.add((r, c))
                    break
    return out


def chebyshev_dilate_bruteforce(mask, radius: int) -> np.ndarray:
    """Mark everything within Chebyshev distance radius of a set pixel."""
    mask = np.asarray(mask)
    h, w = mask.shape
    out = np.zeros((h, w), dtype=np.uint8)
    for r in range(h):
        for c in range(w):
            if mask[r, c]:
                for rr in range(max(r - radius, 0), min(r + radius + 1, h)):
                    for cc in range(max(c - radius, 0), min(c + radius + 1, w)):
                        out[rr, cc] = 1
    return out


def mc_budgeted_object_recall(probs, is_object, budget: int, trials: int,
                              seed: int) -> float:
    """Monte-Carlo estimate of the mean object recall of exponential-race
    weighted sampling without replacement, using numpy's own generator
    (independent of the library's counter-based streams)."""
    p = np.asarray(probs, dtype=np.float64)
    obj = np.asarray(is_object, dtype=bool)
    n = p.shape[0]
    n_obj = int(obj.sum())
    gen = np.random.default_rng(seed)
    kept = 0
    chunk = max(1, min(trials, int(2e7) // n))
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        u = gen.random((t, n))
        keys = -np.log(u) / p
        sel = np.argpartition(keys, budget - 1, axis=1)[:, :budget]
        kept += int(obj[sel].sum())
        done += t
    return kept / (trials * n_obj)


def mc_uniform_object_recall(n: int, n_obj: int, budget: int) -> float:
    """Exact expected object recall of a uniform M-subset (hypergeometric)."""
    return budget / n
