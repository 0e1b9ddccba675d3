"""Gaussian-blob scene representation and its closed-form geometry.

A scene is a flat, ordered collection of anisotropic 3D Gaussians, each
carrying position, per-axis scale, rotation (scalar-first unit quaternion
w,x,y,z), RGB color in [0,1] and opacity in (0,1).  Storage is
struct-of-arrays float32 to match the splat-PLY ecosystem; math runs in
float64.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError

# Scales below this are clamped before inverting a covariance.
MIN_SCALE = 1e-7
# Camera-space depths at or below this count as behind the camera.
Z_EPSILON = 1e-6
# Pixel^2 added to the projected covariance diagonal (antialias floor).
COV_FLOOR = 0.3
# Spherical-harmonic DC basis constant: color = 0.5 + SH_DC0 * f_dc.
SH_DC0 = 0.28209479177387814
# |q|^2 within this of 1 skips renormalization, making it idempotent.
_QUAT_NORM_TOL = 1e-6


def normalize_quaternions(q: np.ndarray) -> np.ndarray:
    """Normalize (..., 4) quaternions; zero-norm rows raise.

    float32 input is normalized idempotently: rows whose squared norm is
    already within 1e-6 of 1 return bit-unchanged, so normalizing twice
    equals normalizing once (needed for bitwise PLY round trips).  Other
    dtypes normalize in float64 at full precision.
    """
    q = np.asarray(q)
    flat = q.reshape(-1, 4)
    s = np.sum(flat.astype(np.float64) ** 2, axis=1)
    if np.any(s == 0.0):
        raise ValidationError(
            f"zero-norm quaternion at index {int(np.flatnonzero(s == 0.0)[0])}"
        )
    if q.dtype == np.float32:
        need = np.abs(s - 1.0) > _QUAT_NORM_TOL
        out = flat.copy()
        if need.any():
            out[need] = (flat[need].astype(np.float64)
                         / np.sqrt(s[need])[:, None]).astype(np.float32)
        return out.reshape(q.shape)
    out = flat.astype(np.float64) / np.sqrt(s)[:, None]
    return out.reshape(q.shape)


def quaternion_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a scalar-first (w,x,y,z) unit quaternion."""
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quaternion_multiply(a, b) -> np.ndarray:
    """Hamilton product of two (w,x,y,z) quaternions."""
    aw, ax, ay, az = np.asarray(a, dtype=np.float64)
    bw, bx, by, bz = np.asarray(b, dtype=np.float64)
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


@dataclass(frozen=True)
class GaussianBlob:
    """One anisotropic Gaussian primitive."""

    position: np.ndarray   # (3,) world meters
    scale: np.ndarray      # (3,) positive meters per principal axis
    rotation: np.ndarray   # (4,) unit quaternion, scalar first
    color: np.ndarray      # (3,) RGB in [0,1]
    opacity: float         # in (0,1)

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        object.__setattr__(self, "scale", np.asarray(self.scale, dtype=np.float64))
        object.__setattr__(self, "rotation",
                           normalize_quaternions(np.asarray(self.rotation, dtype=np.float64)))
        object.__setattr__(self, "color", np.asarray(self.color, dtype=np.float64))
        object.__setattr__(self, "opacity", float(self.opacity))
        if self.position.shape != (3,) or self.scale.shape != (3,) or self.color.shape != (3,):
            raise ValidationError("blob fields must be 3-vectors")
        if not np.all(np.isfinite(self.position)):
            raise ValidationError("non-finite blob position")
        if not np.all(self.scale > 0.0):
            raise ValidationError(f"non-positive blob scale {self.scale}")
        if not (0.0 < self.opacity < 1.0):
            raise ValidationError(f"opacity {self.opacity} outside (0,1)")
        if np.any(self.color < 0.0) or np.any(self.color > 1.0):
            raise ValidationError(f"color {self.color} outside [0,1]")


class GaussianScene:
    """Ordered Gaussian-blob set with stable indices.

    Arrays are float32 struct-of-arrays; blob order is the canonical index
    used by every seeded sampler.
    """

    __slots__ = ("positions", "scales", "rotations", "colors", "opacities", "source_path")

    def __init__(self, positions, scales, rotations, colors, opacities,
                 source_path: str = "", validate: bool = True):
        self.positions = np.ascontiguousarray(positions, dtype=np.float32)
        self.scales = np.ascontiguousarray(scales, dtype=np.float32)
        self.rotations = np.ascontiguousarray(rotations, dtype=np.float32)
        self.colors = np.ascontiguousarray(colors, dtype=np.float32)
        self.opacities = np.ascontiguousarray(opacities, dtype=np.float32)
        self.source_path = source_path
        if validate:
            self.validate()

    @classmethod
    def from_blobs(cls, blobs, source_path: str = "") -> "GaussianScene":
        blobs = list(blobs)
        if not blobs:
            raise ValidationError("a scene needs at least one blob")
        return cls(
            np.array([b.position for b in blobs]),
            np.array([b.scale for b in blobs]),
            np.array([b.rotation for b in blobs]),
            np.array([b.color for b in blobs]),
            np.array([b.opacity for b in blobs]),
            source_path=source_path,
        )

    def __len__(self) -> int:
        return self.positions.shape[0]

    def blob(self, i: int) -> GaussianBlob:
        return GaussianBlob(self.positions[i], self.scales[i], self.rotations[i],
                            self.colors[i], self.opacities[i])

    def __iter__(self):
        return (self.blob(i) for i in range(len(self)))

    def subset(self, indices) -> "GaussianScene":
        idx = np.asarray(indices, dtype=np.int64)
        return GaussianScene(self.positions[idx], self.scales[idx],
                             self.rotations[idx], self.colors[idx],
                             self.opacities[idx], source_path=self.source_path,
                             validate=False)

    def permuted(self, order) -> "GaussianScene":
        return self.subset(order)

    def validate(self):
        n = len(self)
        if n < 1:
            raise ValidationError("a scene needs at least one blob")
        shapes = (self.positions.shape, self.scales.shape, self.rotations.shape,
                  self.colors.shape, self.opacities.shape)
        if shapes != ((n, 3), (n, 3), (n, 4), (n, 3), (n,)):
            raise ValidationError(f"inconsistent scene array shapes {shapes}")
        for name, arr in (("position", self.positions), ("scale", self.scales),
                          ("rotation", self.rotations), ("color", self.colors),
                          ("opacity", self.opacities)):
            if not np.all(np.isfinite(arr)):
                bad = int(np.flatnonzero(~np.isfinite(arr).reshape(n, -1).all(axis=1))[0])
                raise ValidationError(f"non-finite {name} at blob {bad}")
        if not np.all(self.scales > 0.0):
            bad = int(np.flatnonzero(~(self.scales > 0.0).all(axis=1))[0])
            raise ValidationError(f"non-positive scale at blob {bad}")
        if not np.all((self.opacities > 0.0) & (self.opacities < 1.0)):
            bad = int(np.flatnonzero(~((self.opacities > 0.0) & (self.opacities < 1.0)))[0])
            raise ValidationError(f"opacity outside (0,1) at blob {bad}")
        if np.any(self.colors < 0.0) or np.any(self.colors > 1.0):
            bad = int(np.flatnonzero(((self.colors < 0.0) | (self.colors > 1.0)).any(axis=1))[0])
            raise ValidationError(f"color outside [0,1] at blob {bad}")
        norms = np.sqrt(np.sum(self.rotations.astype(np.float64) ** 2, axis=1))
        if np.any(np.abs(norms - 1.0) > 1e-6):
            bad = int(np.flatnonzero(np.abs(norms - 1.0) > 1e-6)[0])
            raise ValidationError(f"quaternion norm {norms[bad]} at blob {bad}")


@dataclass(frozen=True)
class CameraView:
    """Pinhole camera: intrinsics, rigid world-to-camera pose, image size, depth range."""

    intrinsics: np.ndarray        # (3,3) pixels, row-major
    world_to_camera: np.ndarray   # (4,4) rigid transform
    width: int
    height: int
    z_min: float = 0.2
    z_max: float = 6.0

    def __post_init__(self):
        object.__setattr__(self, "intrinsics",
                           np.asarray(self.intrinsics, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "world_to_camera",
                           np.asarray(self.world_to_camera, dtype=np.float64).reshape(4, 4))
        self.validate()

    def validate(self):
        K = self.intrinsics
        if K[2, 2] != 1.0 or K[2, 0] != 0.0 or K[2, 1] != 0.0:
            raise ValidationError(f"intrinsics bottom row must be [0,0,1], got {K[2]}")
        if K[0, 0] <= 0.0 or K[1, 1] <= 0.0:
            raise ValidationError("focal entries must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("image size must be positive")
        if not (0.0 < self.z_min < self.z_max):
            raise ValidationError(f"need 0 < z_min < z_max, got [{self.z_min}, {self.z_max}]")
        W = self.world_to_camera
        if np.any(W[3] != np.array([0.0, 0.0, 0.0, 1.0])):
            raise ValidationError(f"world_to_camera bottom row must be [0,0,0,1], got {W[3]}")
        R = W[:3, :3]
        # 1e-4 is the manifest-reader rejection threshold; generated poses
        # are orthonormal to ~1e-15.
        if np.max(np.abs(R @ R.T - np.eye(3))) > 1e-4:
            raise ValidationError("world_to_camera rotation is not orthonormal")

    @property
    def rotation(self) -> np.ndarray:
        return self.world_to_camera[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.world_to_camera[:3, 3]

    def camera_center(self) -> np.ndarray:
        """Camera position in world coordinates."""
        return -self.rotation.T @ self.translation

    def project_points(self, points: np.ndarray):
        """Pixel coordinates and camera depth for (N,3) world points.

        Entries with depth <= Z_EPSILON get NaN pixel coordinates.
        """
        p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        R, t, K = self.rotation, self.translation, self.intrinsics
        x, y, z = p[:, 0], p[:, 1], p[:, 2]
        cx = R[0, 0] * x + R[0, 1] * y + R[0, 2] * z + t[0]
        cy = R[1, 0] * x + R[1, 1] * y + R[1, 2] * z + t[1]
        cz = R[2, 0] * x + R[2, 1] * y + R[2, 2] * z + t[2]
        with np.errstate(divide="ignore", invalid="ignore"):
            invz = np.where(cz > Z_EPSILON, 1.0 / cz, np.nan)
        u = (K[0, 0] * cx + K[0, 1] * cy) * invz + K[0, 2]
        v = (K[1, 0] * cx + K[1, 1] * cy) * invz + K[1, 2]
        return u, v, cz


@dataclass(frozen=True)
class ProjectedBlob:
    """Screen-space footprint of one blob: 2D mean, 2x2 covariance, camera depth."""

    mean2d: np.ndarray
    cov2d: np.ndarray
    depth: float


def build_covariance(scale, rotation) -> np.ndarray:
    """World covariance R diag(s) diag(s)^T R^T of one blob.

    Eigenvalues equal the squared scale components.
    """
    s = np.asarray(scale, dtype=np.float64)
    if s.shape != (3,) or not np.all(s > 0.0):
        raise ValidationError(f"scale must be 3 positive components, got {s}")
    q = normalize_quaternions(np.asarray(rotation, dtype=np.float64))
    R = quaternion_to_matrix(q)
    M = R * s[None, :]
    return M @ M.T


def blob_covariance(blob: GaussianBlob, min_scale: float = MIN_SCALE) -> np.ndarray:
    """Covariance with the minimum-scale clamp applied (keeps it invertible)."""
    return build_covariance(np.maximum(blob.scale, min_scale), blob.rotation)


def eval_gaussian(blob: GaussianBlob, point) -> float:
    """Unnormalized density exp(-0.5 (x-mu)^T Sigma^-1 (x-mu)); exactly 1 at mu."""
    d = np.asarray(point, dtype=np.float64) - blob.position
    cov = blob_covariance(blob)
    try:
        sol = np.linalg.solve(cov, d)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"singular covariance for blob at {blob.position}") from e
    return float(np.exp(-0.5 * float(d @ sol)))


def project_blob(blob: GaussianBlob, view: CameraView,
                 cov_floor: float = COV_FLOOR):
    """EWA projection of one blob into a view.

    Returns a ProjectedBlob, or None when the blob center sits at or behind
    the camera plane (camera z <= Z_EPSILON).  ``cov_floor`` pixels^2 are
    added to the 2D covariance diagonal; pass 0.0 for the raw projection.
    """
    R, t, K = view.rotation, view.translation, view.intrinsics
    cam = R @ blob.position + t
    cz = float(cam[2])
    if cz <= Z_EPSILON:
        return None
    invz = 1.0 / cz
    u = (K[0, 0] * cam[0] + K[0, 1] * cam[1]) * invz + K[0, 2]
    v = (K[1, 0] * cam[0] + K[1, 1] * cam[1]) * invz + K[1, 2]
    # Perspective Jacobian at the blob's camera-space position.
    J = np.array([
        [K[0, 0] * invz, K[0, 1] * invz,
         -(K[0, 0] * cam[0] + K[0, 1] * cam[1]) * invz * invz],
        [K[1, 0] * invz, K[1, 1] * invz,
         -(K[1, 0] * cam[0] + K[1, 1] * cam[1]) * invz * invz],
    ])
    cov_cam = R @ blob_covariance(blob) @ R.T
    cov2d = J @ cov_cam @ J.T
    cov2d = 0.5 * (cov2d + cov2d.T)
    cov2d[0, 0] += cov_floor
    cov2d[1, 1] += cov_floor
    return ProjectedBlob(mean2d=np.array([u, v]), cov2d=cov2d, depth=cz)


def composite(samples) -> np.ndarray:
    """Front-to-back alpha compositing of (opacity, color) samples.

    Weights w_k = a_k * prod_{j<k} (1 - a_j) form a sub-probability
    distribution; returns sum_k w_k * c_k.
    """
    out = np.zeros(3, dtype=np.float64)
    trans = 1.0
    for a, c in samples:
        a = float(a)
        if not (0.0 <= a <= 1.0):
            raise ValidationError(f"opacity {a} outside [0,1]")
        w = a * trans
        out += w * np.asarray(c, dtype=np.float64)
        trans *= 1.0 - a
    return out
