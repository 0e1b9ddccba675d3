"""Batch command-line front end.

Subcommands mirror the pipeline stages: ``overlay`` (boundary/point/mask
guidance images), ``sample`` (box-focused or baseline blob sampling plus
detector export), ``render``, ``loss``, ``gen-synth``, ``stats`` and
``replay``.  Every run writes a manifest with the resolved arguments;
``replay`` re-executes a manifest into a new output location and
reproduces the outputs byte for byte.  Exit codes: 0 ok, 2 invalid
input, 3 I/O failure.
"""

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import farthest_point_sample, random_sample
from .boundary import build_boundary_maps, overlay_ablation, overlay_boundaries
from .errors import DataError, FormatError, NumericalError, ValidationError
from .frustum import build_probability_field
from .io import (read_boxes, read_cameras, read_gaussian_ply, read_image,
                 read_label_raster, read_palette, write_boxes, write_cameras,
                 write_gaussian_ply, write_image, write_label_raster,
                 write_palette)
from .metrics import RenderLossConfig, d_ssim, l1_loss, render_loss
from .render import RenderConfig, render_view
from .sampling import box_focused_sample, concat_features, export_detector_input
from .synth import (LabeledScene, SyntheticSceneSpec, canonical_palette,
                    generate_scene, read_truth_categories, retention_report,
                    synthesize_views, write_truth)

_EXIT_VALIDATION = 2
_EXIT_IO = 3


@dataclass
class RunManifest:
    """Reproducibility record written next to every output."""

    subcommand: str
    argv: list
    config: dict
    inputs: list
    outputs: list
    seed: int | None
    tool: str
    version: str
    duration_s: float

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=1, default=str)
            f.write("\n")


def _manifest_argv(subcommand: str, args: argparse.Namespace) -> list:
    """Canonical argv that reproduces this run (defaults materialized)."""
    argv = [subcommand]
    for key, value in sorted(vars(args).items()):
        if key in ("func", "subcommand"):
            continue
        flag = "--" + key.replace("_", "-")
        if value is None or value is False:
            continue
        if value is True:
            argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    return argv


def _finish(subcommand, args, inputs, outputs, seed, started, manifest_path):
    manifest = RunManifest(subcommand=subcommand,
                           argv=_manifest_argv(subcommand, args),
                           config={k: v for k, v in sorted(vars(args).items())
                                   if k not in ("func", "subcommand")},
                           inputs=[str(p) for p in inputs],
                           outputs=[str(p) for p in outputs],
                           seed=seed, tool="splatprep", version=__version__,
                           duration_s=round(time.monotonic() - started, 6))
    manifest.write(manifest_path)
    return 0


def _parse_rgb(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValidationError(f"expected R,G,B got {text!r}")
    return tuple(float(p) / 255.0 for p in parts)


# ----------------------------------------------------------------- overlay

def _cmd_overlay(args):
    started = time.monotonic()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    palette = read_palette(args.palette)
    image_dir = Path(args.images)
    images = sorted(image_dir.glob("*.ppm"))
    if not images:
        raise ValidationError(f"no .ppm images in {image_dir}")

    jobs = []       # (stem, image_path, payload)
    skipped = []
    if args.mode in ("boundary", "mask"):
        if not args.labels:
            raise ValidationError(f"mode {args.mode} needs --labels")
        label_dir = Path(args.labels)
        for img in images:
            label = label_dir / (img.stem + ".pgm")
            if label.exists():
                jobs.append((img.stem, img, label))
            else:
                skipped.append(img.name)
        for label in sorted(label_dir.glob("*.pgm")):
            if not (image_dir / (label.stem + ".ppm")).exists():
                skipped.append(label.name)
    elif args.mode == "point":
        if not args.boxes:
            raise ValidationError("mode point needs --boxes")
        box_set = read_boxes(args.boxes, palette)
        if len(box_set.views) != len(images):
            raise ValidationError(
                f"{len(box_set.views)} box views for {len(images)} images "
                "(images pair with box views by sorted stem order)")
        jobs = [(img.stem, img, box_set.views[i]) for i, img in enumerate(images)]
    else:
        raise ValidationError(f"unknown overlay mode {args.mode!r}")

    for name in skipped:
        print(f"skipping unpaired {name}", file=sys.stderr)
    if not jobs:
        raise ValidationError("no image/label pairs to process")

    def process(job):
        stem, img_path, payload = job
        image = read_image(img_path)
        if args.mode == "boundary":
            labels = read_label_raster(payload)
            maps = build_boundary_maps(labels, palette, args.dilation)
            result = overlay_boundaries(image, maps, palette)
        elif args.mode == "mask":
            result = overlay_ablation(image, read_label_raster(payload),
                                      palette, "filled-mask")
        else:
            result = overlay_ablation(image, payload, palette, "center-point")
        out_path = out_dir / f"{stem}.ppm"
        write_image(result, out_path)
        return out_path

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            outputs = list(pool.map(process, jobs))
    else:
        outputs = [process(j) for j in jobs]
    inputs = [args.images, args.palette] + ([args.labels] if args.labels else []) \
        + ([args.boxes] if args.boxes else [])
    return _finish("overlay", args, inputs, outputs, None, started,
                   out_dir / "manifest.json")


# ------------------------------------------------------------------ sample

def _cmd_sample(args):
    started = time.monotonic()
    scene = read_gaussian_ply(args.scene)
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    inputs = [args.scene]

    if args.method == "box":
        if not (args.cameras and args.boxes and args.palette):
            raise ValidationError("method box needs --cameras, --boxes and --palette")
        views = read_cameras(args.cameras)
        palette = read_palette(args.palette)
        boxes = read_boxes(args.boxes, palette, views)
        inputs += [args.cameras, args.boxes, args.palette]
        field = build_probability_field(scene, views, boxes, p_bg=args.p_bg,
                                        threads=args.threads)
        budget = args.budget if args.mode == "budgeted" else None
        sample = box_focused_sample(scene, field, budget, args.seed, mode=args.mode)
    elif args.method == "random":
        sample = random_sample(scene, args.budget, args.seed)
    elif args.method == "fps":
        sample = farthest_point_sample(scene, args.budget, args.seed)
    else:
        raise ValidationError(f"unknown sampling method {args.method!r}")

    outputs = []
    ply_path = f"{prefix}.ply"
    write_gaussian_ply(sample.scene, ply_path)
    outputs.append(ply_path)
    outputs += list(export_detector_input(concat_features(sample),
                                          f"{prefix}.features"))
    idx_path = f"{prefix}.indices.json"
    with open(idx_path, "w", encoding="utf-8") as f:
        json.dump({"sampler": sample.sampler, "seed": sample.seed,
                   "budget": sample.budget, "source_count": sample.source_count,
                   "indices": sample.indices.tolist()}, f)
        f.write("\n")
    outputs.append(idx_path)

    if args.truth:
        cats = read_truth_categories(args.truth)
        truth = LabeledScene(scene=scene, categories=cats)
        report = retention_report(sample, truth)
        rep_path = f"{prefix}.retention.json"
        with open(rep_path, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=1)
            f.write("\n")
        outputs.append(rep_path)
        inputs.append(args.truth)

    return _finish("sample", args, inputs, outputs, args.seed, started,
                   f"{prefix}.manifest.json")


# ------------------------------------------------------------------ render

def _cmd_render(args):
    started = time.monotonic()
    scene = read_gaussian_ply(args.scene)
    views = read_cameras(args.cameras)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = RenderConfig(alpha_cutoff=args.alpha_cutoff,
                          gaussian_radius_sigmas=args.radius_sigmas,
                          background_color=_parse_rgb(args.background))
    outputs = []
    for i, view in enumerate(views):
        image = render_view(scene, view, config, threads=args.threads)
        path = out_dir / f"view_{i:03d}.ppm"
        write_image(image, path)
        outputs.append(path)
    return _finish("render", args, [args.scene, args.cameras], outputs, None,
                   started, out_dir / "manifest.json")


# -------------------------------------------------------------------- loss

def _cmd_loss(args):
    started = time.monotonic()
    a = read_image(args.image_a)
    b = read_image(args.image_b)
    config = RenderLossConfig(lam=args.lam, ssim_window=args.window)
    result = {"l1": l1_loss(a, b), "d_ssim": d_ssim(a, b, config),
              "render_loss": render_loss(a, b, config),
              "lambda": args.lam, "ssim_window": args.window}
    text = json.dumps(result, indent=1) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
        return _finish("loss", args, [args.image_a, args.image_b], [args.out],
                       None, started, f"{args.out}.manifest.json")
    sys.stdout.write(text)
    return 0


# --------------------------------------------------------------- gen-synth

def _cmd_gen_synth(args):
    started = time.monotonic()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = SyntheticSceneSpec(object_count=args.objects,
                              blobs_per_object=args.blobs_per_object,
                              background_count=args.background,
                              camera_count=args.cameras,
                              box_prob=args.box_prob)
    labeled, views, boxes = generate_scene(spec, seed=args.seed)
    palette = canonical_palette()

    outputs = []
    write_gaussian_ply(labeled.scene, out_dir / "scene.ply")
    write_cameras(views, out_dir / "cameras.json")
    write_boxes(boxes, palette, out_dir / "boxes.json")
    write_palette(palette, out_dir / "palette.json")
    write_truth(labeled, out_dir / "truth.json")
    outputs += [out_dir / n for n in
                ("scene.ply", "cameras.json", "boxes.json", "palette.json",
                 "truth.json")]
    if args.views:
        img_dir = out_dir / "images"
        lbl_dir = out_dir / "labels"
        img_dir.mkdir(exist_ok=True)
        lbl_dir.mkdir(exist_ok=True)
        for i, (image, raster) in enumerate(synthesize_views(labeled, views, palette)):
            ipath = img_dir / f"view_{i:03d}.ppm"
            lpath = lbl_dir / f"view_{i:03d}.pgm"
            write_image(image, ipath)
            write_label_raster(raster, lpath)
            outputs += [ipath, lpath]
    return _finish("gen-synth", args, [], outputs, args.seed, started,
                   out_dir / "manifest.json")


# ------------------------------------------------------------------- stats

def _cmd_stats(args):
    started = time.monotonic()
    scene = read_gaussian_ply(args.scene)
    pos = scene.positions.astype(np.float64)
    stats = {
        "blob_count": len(scene),
        "position_min": pos.min(axis=0).tolist(),
        "position_max": pos.max(axis=0).tolist(),
        "scale_mean": float(scene.scales.mean()),
        "opacity_quantiles": {q: float(np.quantile(scene.opacities, float(q)))
                              for q in ("0.1", "0.5", "0.9")},
        "color_mean": scene.colors.mean(axis=0).tolist(),
        "source": scene.source_path,
    }
    text = json.dumps(stats, indent=1) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
        return _finish("stats", args, [args.scene], [args.out], None, started,
                       f"{args.out}.manifest.json")
    sys.stdout.write(text)
    return 0


# ------------------------------------------------------------------ replay

def _cmd_replay(args):
    with open(args.manifest, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    argv = list(manifest["argv"])
    if "--out" not in argv:
        raise ValidationError(f"{args.manifest}: manifest argv carries no --out")
    if args.out:
        argv[argv.index("--out") + 1] = args.out
    return run(argv)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splatprep",
        description="Gaussian-splat preprocessing for 3D detection pipelines")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("overlay", help="overlay guidance priors onto posed images")
    p.add_argument("--images", required=True, help="directory of .ppm posed images")
    p.add_argument("--labels", help="directory of .pgm label rasters (boundary/mask)")
    p.add_argument("--boxes", help="box manifest JSON (point mode)")
    p.add_argument("--palette", required=True)
    p.add_argument("--mode", default="boundary", choices=("boundary", "point", "mask"))
    p.add_argument("--dilation", type=int, default=1, help="boundary stroke radius, px")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_overlay)

    p = sub.add_parser("sample", help="sample blobs from a splat scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--cameras")
    p.add_argument("--boxes")
    p.add_argument("--palette")
    p.add_argument("--method", default="box", choices=("box", "random", "fps"))
    p.add_argument("--budget", type=int)
    p.add_argument("--mode", default="budgeted", choices=("budgeted", "bernoulli"))
    p.add_argument("--p-bg", type=float, default=0.01)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--truth", help="truth JSON for a retention report")
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("render", help="render PPM views of a splat scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--cameras", required=True)
    p.add_argument("--alpha-cutoff", type=float, default=1.0 / 255.0)
    p.add_argument("--radius-sigmas", type=float, default=3.0)
    p.add_argument("--background", default="0,0,0", help="R,G,B bytes")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("loss", help="image metrics between two PPMs")
    p.add_argument("--image-a", required=True)
    p.add_argument("--image-b", required=True)
    p.add_argument("--lam", type=float, default=0.2)
    p.add_argument("--window", type=int, default=11)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("gen-synth", help="generate a synthetic labeled scene")
    p.add_argument("--objects", type=int, default=4)
    p.add_argument("--blobs-per-object", type=int, default=250)
    p.add_argument("--background", type=int, default=9000)
    p.add_argument("--cameras", type=int, default=8)
    p.add_argument("--box-prob", type=float, default=1.0)
    p.add_argument("--views", action="store_true",
                   help="also render posed images and label rasters")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_synth)

    p = sub.add_parser("stats", help="summary statistics of a splat scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("replay", help="re-run a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="override the recorded output location")
    p.set_defaults(func=_cmd_replay)
    return parser


def run(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FormatError, DataError, NumericalError) as e:
        print(f"error: {e}", file=sys.stderr)
        return _EXIT_VALIDATION
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return _EXIT_IO


def main(argv=None):
    raise SystemExit(run(argv))


if __name__ == "__main__":
    main()
