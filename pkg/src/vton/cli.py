"""Command-line front end.

Subcommands: prealign, warp, parse, tryon, losses, fixtures. Every
command writes its outputs plus a manifest.json into --out, atomically;
invalid input exits 1 with a JSON error object on stderr, internal
failures exit 2. Runs are deterministic in (--seed, inputs): two equal
invocations produce byte-identical rasters.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import multiprocessing
import sys
import time
from pathlib import Path

import numpy as np

from . import fileio
from .errors import EmptyRegionError, ParameterError, ShapeMismatchError
from .fixtures import make_scene
from .imageops import l1_mean
from .losses import (
    composite_image_loss,
    edge_loss,
    mask_loss,
    perceptual_loss,
    tv_loss,
    warping_objective,
    weighted_cross_entropy,
)
from .nets import FeatureExtractor
from .person import apply_agnostic_mask, build_agnostic_mask, render_keypoints
from .pipeline import (
    PipelineConfig,
    TryOnModel,
    make_training_sample,
    run_parse_stage,
    run_pipeline,
    run_warp_stage,
    training_losses,
)
from .prealign import prealign

FIXTURE_FILES = {
    "cloth": "cloth.png",
    "cloth_mask": "cloth_mask.png",
    "person": "person.png",
    "parsing": "parsing.png",
    "keypoints": "keypoints.json",
}


class _CliParser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are input errors, not crashes
        raise ParameterError(message)


def _build_parser() -> _CliParser:
    parser = _CliParser(prog="vton", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mode_flag=True):
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--config", help="JSON file with PipelineConfig fields")
        p.add_argument("--seed", type=int, help="override the config seed")
        if mode_flag:
            p.add_argument("--mode", choices=["train", "eval"], help="override the config mode")

    p = sub.add_parser("prealign", help="shift and rescale a garment onto a person")
    p.add_argument("--cloth", required=True)
    p.add_argument("--cloth-mask", required=True)
    p.add_argument("--parsing", required=True)
    common(p, mode_flag=False)

    p = sub.add_parser("warp", help="full warp stage: pre-align, flows, warped garment")
    p.add_argument("--cloth", required=True)
    p.add_argument("--cloth-mask", required=True)
    p.add_argument("--parsing", required=True)
    p.add_argument("--keypoints", required=True)
    p.add_argument("--zero-flow", action="store_true", help="debug: zero all sub-flows")
    common(p, mode_flag=False)

    p = sub.add_parser("parse", help="predict the post-try-on parsing map")
    p.add_argument("--cloth-warped", required=True)
    p.add_argument("--keypoints", required=True)
    p.add_argument("--parsing", required=True)
    p.add_argument("--person", required=True)
    common(p, mode_flag=False)

    p = sub.add_parser("tryon", help="run the complete pipeline")
    p.add_argument("--cloth")
    p.add_argument("--cloth-mask")
    p.add_argument("--person")
    p.add_argument("--parsing")
    p.add_argument("--keypoints")
    p.add_argument("--batch", help="directory of sample subdirectories (fixtures layout)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for --batch")
    p.add_argument("--zero-flow", action="store_true", help="debug: zero all sub-flows")
    p.add_argument("--save-intermediates", action="store_true",
                   help="also write C_w.png, M_w.png, P_t.png and flow.plvf")
    common(p)

    p = sub.add_parser("losses", help="objective values between given rasters")
    p.add_argument("--pred", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--pred-mask")
    p.add_argument("--target-mask")
    p.add_argument("--flow")
    p.add_argument("--pred-parsing", help="hard labels scored as clamped probabilities")
    p.add_argument("--target-parsing")
    common(p, mode_flag=False)

    p = sub.add_parser("fixtures", help="emit procedurally drawn test scenes")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--size", default=None, help="HxW, default 96x64")
    common(p, mode_flag=False)
    return parser


def _load_config(args) -> PipelineConfig:
    data = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    cfg = PipelineConfig.from_dict(data) if data else PipelineConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "mode", None):
        overrides["mode"] = args.mode
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _check_rasters_agree(arrays: dict[str, np.ndarray]):
    sizes = {name: arr.shape[-2:] for name, arr in arrays.items()}
    if len(set(sizes.values())) > 1:
        raise ShapeMismatchError(f"input rasters disagree in size: {sizes}")


def _manifest(out_dir: Path, command: str, cfg: PipelineConfig, inputs: dict,
              outputs: dict, stage_ms: dict, losses: dict | None = None):
    payload = {
        "command": command,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": {k: str(v) for k, v in outputs.items()},
        "stage_ms": {k: round(v, 3) for k, v in stage_ms.items()},
    }
    if losses is not None:
        payload["losses"] = losses
    fileio.write_json_atomic(out_dir / "manifest.json", payload)


def _cmd_prealign(args, cfg: PipelineConfig) -> int:
    out = Path(args.out)
    cloth = fileio.load_image(args.cloth)
    cloth_mask = fileio.load_mask(args.cloth_mask)
    parsing = fileio.load_parsing(args.parsing)
    _check_rasters_agree({"cloth": cloth, "cloth_mask": cloth_mask, "parsing": parsing})

    t0 = time.perf_counter()
    result = prealign(cloth, cloth_mask, parsing)
    ms = {"prealign": (time.perf_counter() - t0) * 1000.0}

    outputs = {"shifted": out / "C_l.png", "scaled": out / "C_s.png"}
    fileio.save_image(outputs["shifted"], result.shifted)
    fileio.save_image(outputs["scaled"], result.scaled)
    _manifest(out, "prealign", cfg,
              {"cloth": args.cloth, "cloth_mask": args.cloth_mask, "parsing": args.parsing},
              outputs, ms)
    return 0


def _cmd_warp(args, cfg: PipelineConfig) -> int:
    out = Path(args.out)
    cloth = fileio.load_image(args.cloth)
    cloth_mask = fileio.load_mask(args.cloth_mask)
    parsing = fileio.load_parsing(args.parsing)
    points = fileio.load_keypoints(args.keypoints)
    _check_rasters_agree({"cloth": cloth, "cloth_mask": cloth_mask, "parsing": parsing})
    keypoint_map = render_keypoints(points, *cloth_mask.shape)

    model = TryOnModel(cfg)
    t0 = time.perf_counter()
    result = run_warp_stage(model, cloth, cloth_mask, keypoint_map, parsing,
                            zero_flow=args.zero_flow)
    ms = {"warp": (time.perf_counter() - t0) * 1000.0}

    outputs = {"flow": out / "flow.plvf", "cloth_warped": out / "C_w.png",
               "mask_warped": out / "M_w.png", "scaled": out / "C_s.png"}
    fileio.save_flow(outputs["flow"], result.flow)
    fileio.save_image(outputs["cloth_warped"], result.cloth_warped)
    fileio.save_mask(outputs["mask_warped"], result.mask_warped)
    fileio.save_image(outputs["scaled"], result.prealignment.scaled)
    _manifest(out, "warp", cfg,
              {"cloth": args.cloth, "cloth_mask": args.cloth_mask,
               "parsing": args.parsing, "keypoints": args.keypoints},
              outputs, ms)
    return 0


def _cmd_parse(args, cfg: PipelineConfig) -> int:
    out = Path(args.out)
    cloth_warped = fileio.load_image(args.cloth_warped)
    parsing = fileio.load_parsing(args.parsing)
    person = fileio.load_image(args.person)
    points = fileio.load_keypoints(args.keypoints)
    _check_rasters_agree({"cloth_warped": cloth_warped, "parsing": parsing, "person": person})
    keypoint_map = render_keypoints(points, *person.shape[1:])

    model = TryOnModel(cfg)
    t0 = time.perf_counter()
    agnostic = build_agnostic_mask(parsing)
    person_masked, parsing_masked = apply_agnostic_mask(person, parsing, agnostic)
    result = run_parse_stage(model, cloth_warped, keypoint_map, parsing_masked, person_masked)
    ms = {"parse": (time.perf_counter() - t0) * 1000.0}

    outputs = {"parsing_pred": out / "P_t.png"}
    fileio.save_parsing(outputs["parsing_pred"], result.parsing)
    _manifest(out, "parse", cfg,
              {"cloth_warped": args.cloth_warped, "parsing": args.parsing,
               "person": args.person, "keypoints": args.keypoints},
              outputs, ms)
    return 0


def _run_tryon_single(out: Path, paths: dict[str, str], cfg: PipelineConfig,
                      zero_flow: bool, save_intermediates: bool):
    cloth = fileio.load_image(paths["cloth"])
    cloth_mask = fileio.load_mask(paths["cloth_mask"])
    person = fileio.load_image(paths["person"])
    parsing = fileio.load_parsing(paths["parsing"])
    points = fileio.load_keypoints(paths["keypoints"])
    _check_rasters_agree({"cloth": cloth, "cloth_mask": cloth_mask,
                          "person": person, "parsing": parsing})
    keypoint_map = render_keypoints(points, *person.shape[1:])

    model = TryOnModel(cfg)
    bundle = run_pipeline(model, cloth, cloth_mask, keypoint_map, parsing, person,
                          zero_flow=zero_flow)
    sample = make_training_sample(person, parsing, keypoint_map, cloth, cloth_mask)
    report = {k: round(v, 8) for k, v in training_losses(model, bundle, sample).items()}

    outputs = {"coarse": out / "I_c.png", "fine": out / "I_f.png"}
    fileio.save_image(outputs["coarse"], bundle.coarse)
    fileio.save_image(outputs["fine"], bundle.fine)
    if save_intermediates:
        outputs.update({
            "cloth_warped": out / "C_w.png",
            "mask_warped": out / "M_w.png",
            "parsing_pred": out / "P_t.png",
            "flow": out / "flow.plvf",
        })
        fileio.save_image(outputs["cloth_warped"], bundle.cloth_warped)
        fileio.save_mask(outputs["mask_warped"], bundle.cloth_warped_mask)
        fileio.save_parsing(outputs["parsing_pred"], bundle.parsing_pred)
        fileio.save_flow(outputs["flow"], bundle.flow)
    _manifest(out, "tryon", cfg, paths, outputs, bundle.stage_ms, report)


def _batch_worker(job):
    sample_dir, out_dir, cfg_dict, zero_flow, save_intermediates = job
    cfg = PipelineConfig.from_dict(cfg_dict)
    paths = {key: str(Path(sample_dir) / name) for key, name in FIXTURE_FILES.items()}
    _run_tryon_single(Path(out_dir), paths, cfg, zero_flow, save_intermediates)
    return str(out_dir)


def _cmd_tryon(args, cfg: PipelineConfig) -> int:
    out = Path(args.out)
    if args.batch:
        sample_dirs = sorted(p for p in Path(args.batch).iterdir() if p.is_dir())
        if not sample_dirs:
            raise ParameterError(f"--batch directory {args.batch} has no sample subdirectories")
        jobs = [
            (str(d), str(out / d.name), cfg.to_dict(), args.zero_flow, args.save_intermediates)
            for d in sample_dirs
        ]
        if args.jobs > 1:
            with multiprocessing.Pool(args.jobs) as pool:
                pool.map(_batch_worker, jobs)
        else:
            for job in jobs:
                _batch_worker(job)
        return 0
    required = ["cloth", "cloth_mask", "person", "parsing", "keypoints"]
    missing = [f"--{name.replace('_', '-')}" for name in required
               if getattr(args, name) is None]
    if missing:
        raise ParameterError(f"tryon needs {' '.join(missing)} (or --batch)")
    paths = {name: getattr(args, name) for name in required}
    _run_tryon_single(out, paths, cfg, args.zero_flow, args.save_intermediates)
    return 0


def _cmd_losses(args, cfg: PipelineConfig) -> int:
    out = Path(args.out)
    pred = fileio.load_image(args.pred)
    target = fileio.load_image(args.target)
    _check_rasters_agree({"pred": pred, "target": target})
    extractor = FeatureExtractor(seed=cfg.seed)

    report = {
        "l1": l1_mean(pred, target),
        "perceptual": perceptual_loss(pred, target, extractor, cfg.level_weights),
        "edge": edge_loss(pred, target),
        "composite": composite_image_loss(pred, target, extractor,
                                          cfg.fusion_weights, cfg.level_weights),
    }
    mask_term = None
    if args.pred_mask and args.target_mask:
        mask_term = mask_loss(fileio.load_mask(args.pred_mask),
                              fileio.load_mask(args.target_mask))
        report["mask"] = mask_term
    if args.flow:
        report["smoothness"] = tv_loss(fileio.load_flow(args.flow))
    if mask_term is not None and args.flow:
        report["warp_total"] = warping_objective(
            mask_term, report["l1"], report["perceptual"], report["smoothness"],
            cfg.warp_weights,
        )
    if args.pred_parsing and args.target_parsing:
        report["parsing_cross_entropy"] = weighted_cross_entropy(
            fileio.load_parsing(args.pred_parsing),
            fileio.load_parsing(args.target_parsing),
            cfg.class_weights,
        )
    report = {k: float(v) for k, v in report.items()}
    fileio.write_json_atomic(out / "losses.json", report)
    _manifest(out, "losses", cfg,
              {k: v for k, v in vars(args).items()
               if k in ("pred", "target", "pred_mask", "target_mask", "flow",
                        "pred_parsing", "target_parsing") and v},
              {"report": out / "losses.json"}, {}, report)
    return 0


def _cmd_fixtures(args, cfg: PipelineConfig) -> int:
    out = Path(args.out)
    if args.size:
        try:
            h, w = (int(v) for v in args.size.lower().split("x"))
        except ValueError as exc:
            raise ParameterError(f"--size must look like 96x64, got {args.size!r}") from exc
    else:
        h, w = 96, 64
    if args.count < 1:
        raise ParameterError("--count must be >= 1")
    outputs = {}
    for i in range(args.count):
        scene = make_scene(seed=cfg.seed + i, height=h, width=w)
        sample_dir = out / f"sample{i:03d}"
        fileio.save_image(sample_dir / FIXTURE_FILES["cloth"], scene.cloth)
        fileio.save_mask(sample_dir / FIXTURE_FILES["cloth_mask"], scene.cloth_mask)
        fileio.save_image(sample_dir / FIXTURE_FILES["person"], scene.person)
        fileio.save_parsing(sample_dir / FIXTURE_FILES["parsing"], scene.parsing)
        fileio.save_keypoints(sample_dir / FIXTURE_FILES["keypoints"], scene.keypoints)
        outputs[f"sample{i:03d}"] = sample_dir
    _manifest(out, "fixtures", cfg, {}, outputs, {})
    return 0


_HANDLERS = {
    "prealign": _cmd_prealign,
    "warp": _cmd_warp,
    "parse": _cmd_parse,
    "tryon": _cmd_tryon,
    "losses": _cmd_losses,
    "fixtures": _cmd_fixtures,
}

_ERROR_CODES = (
    (EmptyRegionError, "empty_region"),
    (ShapeMismatchError, "shape_mismatch"),
    (ParameterError, "bad_parameter"),
    (json.JSONDecodeError, "malformed_input"),
    (FileNotFoundError, "missing_input"),
    (OSError, "io"),
)


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = _load_config(args)
        return _HANDLERS[args.command](args, cfg)
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - single boundary for exit codes
        for exc_type, code in _ERROR_CODES:
            if isinstance(exc, exc_type):
                print(json.dumps({"error": code, "message": str(exc)}), file=sys.stderr)
                return 1
        print(json.dumps({"error": "internal", "message": f"{type(exc).__name__}: {exc}"}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
