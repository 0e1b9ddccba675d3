"""splatprep: Gaussian-splat scene preprocessing for 3D detection pipelines.

Batch tools and a library for turning reconstructed Gaussian-blob scenes
into detector-ready inputs: category-boundary overlays for posed images,
box-guided probabilistic blob sampling, baseline samplers, a CPU
reference renderer with image metrics, and a deterministic synthetic-scene
generator with brute-force oracles.
"""

from ._backend import backend_name
from .baselines import farthest_point_sample, random_sample
from .boundary import (BoundaryMaps, Contour, build_boundary_maps,
                       overlay_ablation, overlay_boundaries, trace_borders)
from .frustum import (Frustum, ObjectProbabilityField, blob_in_frustum,
                      build_probability_field, frustum_from_box,
                      points_in_frustum)
from .metrics import RenderLossConfig, d_ssim, l1_loss, render_loss
from .model import (CameraView, GaussianBlob, GaussianScene, ProjectedBlob,
                    build_covariance, composite, eval_gaussian, project_blob)
from .render import (RenderConfig, boundary_stability_score, render_view,
                     render_view_float)
from .sampling import (SampledScene, box_focused_sample, concat_features,
                       export_detector_input, read_detector_input)
from .synth import (CANONICAL_SPEC, LabeledScene, SyntheticSceneSpec,
                    canonical_palette, generate_scene, retention_report)

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_SPEC", "BoundaryMaps", "CameraView", "Contour", "Frustum",
    "GaussianBlob", "GaussianScene", "LabeledScene", "ObjectProbabilityField",
    "ProjectedBlob", "RenderConfig", "RenderLossConfig", "SampledScene",
    "SyntheticSceneSpec", "backend_name", "blob_in_frustum",
    "boundary_stability_score", "box_focused_sample", "build_boundary_maps",
    "build_covariance", "build_probability_field", "canonical_palette",
    "composite", "concat_features", "d_ssim", "eval_gaussian",
    "export_detector_input", "farthest_point_sample", "frustum_from_box",
    "generate_scene", "l1_loss", "overlay_ablation", "overlay_boundaries",
    "points_in_frustum", "project_blob", "random_sample",
    "read_detector_input", "render_loss", "render_view", "render_view_float",
    "retention_report", "trace_borders", "__version__",
]
