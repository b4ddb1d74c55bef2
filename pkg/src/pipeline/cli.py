"""
Command-line interface: register-pair, register-sequence, warp, evaluate, synth, serve
"""

import argparse
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, List, Optional

from ..affine import invert, load_transform
from ..bspline import load_field
from ..config.settings import Settings, available_keys, configure_logging
from ..core.errors import RegistrationError
from ..core.models import PairStatus, SequenceRegistration
from ..imaging import MapChain, downsample, load_image, map_points, save_image, warp
from ..matching import import_matches
from ..metrics import write_report
from ..synth import degrade, generate_sequence, write_sequence
from .charts import plot_landmarks, plot_loss_trace, plot_metrics
from .evaluate import evaluate_run, load_landmark_dir
from .export import export_volume, load_run, write_pair_files
from .register import register_pair
from .sequence import load_sequence, register_sequence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 2
EXIT_FAILED = 3

# Short spellings for frequently used keys
KEY_ALIASES = {
    "pipeline_reference": ["--reference"],
    "pipeline_workers": ["--workers"],
    "matching_matches_dir": ["--matches-dir"]
}


def _config_parent() -> argparse.ArgumentParser:
    """Options shared by every subcommand: --config plus one flag per configuration key"""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="flat key=value configuration file")
    keys = parent.add_argument_group("configuration keys")
    for key, default in available_keys():
        flags = [f"--{key.replace('_', '-')}", f"--{key}"] + KEY_ALIASES.get(key, [])
        keys.add_argument(
            *flags, dest=key, default=argparse.SUPPRESS, metavar="VALUE",
            help=f"default: {default}".replace("%", "%%")
        )
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    parser = argparse.ArgumentParser(prog="stratalign", description="Serial-section registration and 3D stacking")
    sub = parser.add_subparsers(dest="command", required=True)

    pair = sub.add_parser("register-pair", parents=[parent], help="register one moving image onto a fixed image")
    pair.add_argument("fixed")
    pair.add_argument("moving")
    pair.add_argument("--out", required=True)
    pair.add_argument("--matches", help="rotation-resolved match file; skips the rotation sweep")
    pair.add_argument("--export-matches", dest="export_matches", help="directory for the winning matches")
    pair.add_argument("--plot", action="store_true", help="write the loss trace chart")

    seq = sub.add_parser("register-sequence", parents=[parent], help="register and stack a slice directory")
    seq.add_argument("input_dir")
    seq.add_argument("--out", required=True)
    seq.add_argument("--export-matches", dest="export_matches")
    seq.add_argument("--legacy-two-pass", dest="legacy_two_pass", action="store_true")
    seq.add_argument("--bake-fields", dest="bake_fields", action="store_true")

    warp_cmd = sub.add_parser("warp", parents=[parent], help="apply a saved transform to an image")
    warp_cmd.add_argument("image")
    warp_cmd.add_argument("transform")
    warp_cmd.add_argument("--field", help="B-spline field file")
    warp_cmd.add_argument("--out", required=True)
    warp_cmd.add_argument("--width", type=int)
    warp_cmd.add_argument("--height", type=int)

    evaluate = sub.add_parser("evaluate", parents=[parent], help="landmark metrics of an exported run")
    evaluate.add_argument("run_dir")
    evaluate.add_argument("landmark_dir")
    evaluate.add_argument("--mode", choices=["consecutive", "reference"], default="consecutive")
    evaluate.add_argument("--out")
    evaluate.add_argument("--plot", action="store_true")

    synth = sub.add_parser("synth", parents=[parent], help="write a synthetic sequence with ground truth")
    synth.add_argument("out_dir")
    synth.add_argument("--tears", type=int, default=0)
    synth.add_argument("--folds", type=int, default=0)
    synth.add_argument("--illumination", type=float, default=0.0)

    sub.add_parser("serve", parents=[parent], help="start the HTTP job API")
    return parser


def settings_from_args(args: argparse.Namespace) -> Settings:
    """Defaults, then --config, then per-key flags"""
    keys = {key for key, _ in available_keys()}
    overrides = {k: v for k, v in vars(args).items() if k in keys}
    return Settings.from_file(args.config, overrides)


def _register_pair(args: argparse.Namespace, cfg: Settings) -> int:
    fixed = downsample(load_image(args.fixed, cfg.imaging.channel_policy), cfg.imaging.downsample)
    moving = downsample(load_image(args.moving, cfg.imaging.channel_policy), cfg.imaging.downsample)
    external = import_matches(args.matches, fixed.dims, moving.dims) if args.matches else None

    registration_config = replace(cfg.registration_config(), export_matches_dir=args.export_matches)
    pair = register_pair(
        fixed, moving, registration_config, external,
        fixed_id=Path(args.fixed).stem, moving_id=Path(args.moving).stem
    )

    out = Path(args.out)
    write_pair_files(pair, out, seed=cfg.ransac.seed)
    if pair.status == PairStatus.UNREGISTRABLE:
        logger.error(f"Pair unregistrable: {pair.message}")
        return EXIT_FAILED
    if cfg.pipeline.save_images:
        save_image(warp(moving, pair.pair_map(), fixed.shape, cfg.imaging.fill_value), out / "registered.png")
    if args.plot and pair.trace:
        plot_loss_trace(pair.trace, out / "loss_trace.png")
    logger.info(f"Pair {pair.status.value}: rotation {pair.rotation_deg:g} deg, {pair.inlier_count} inliers")
    return EXIT_OK


def _sequence_exit(seq: SequenceRegistration) -> int:
    return EXIT_PARTIAL if seq.partial else EXIT_OK


def _register_sequence(args: argparse.Namespace, cfg: Settings) -> int:
    slices, ids = load_sequence(args.input_dir, cfg.imaging.downsample, cfg.imaging.channel_policy)
    seq = register_sequence(slices, cfg, ids, export_matches_dir=args.export_matches)
    export_volume(
        seq, slices, out_dir=args.out, cfg=cfg,
        legacy_two_pass=True if args.legacy_two_pass else None, bake_fields=args.bake_fields
    )
    if seq.partial:
        logger.warning(f"Sequence has {len(seq.breaks)} chain break(s)")
    return _sequence_exit(seq)


def _warp(args: argparse.Namespace, cfg: Settings) -> int:
    image = load_image(args.image, cfg.imaging.channel_policy)
    affine, _ = load_transform(args.transform)
    if affine is None:
        logger.error(f"{args.transform} holds no transform")
        return EXIT_FAILED
    links: List[Any] = []
    shape = image.shape
    if args.field:
        deformation = load_field(args.field)
        links.append(deformation)
        shape = (deformation.image_dims[1], deformation.image_dims[0])
    links.append(invert(affine))
    if args.width and args.height:
        shape = (args.height, args.width)
    save_image(warp(image, MapChain(links), shape, cfg.imaging.fill_value), args.out)
    return EXIT_OK


def _plot_pair_landmarks(seq: SequenceRegistration, landmark_dir: str, out: Path) -> List[Path]:
    """One overlay per registered pair: fixed landmarks pushed through the pair map"""
    landmarks = load_landmark_dir(landmark_dir, seq.slice_ids)
    written = []
    for pair in seq.pairs:
        if not pair.registered or pair.fixed_id not in landmarks or pair.moving_id not in landmarks:
            continue
        fixed, moving = landmarks[pair.fixed_id], landmarks[pair.moving_id]
        shared = [lid for lid in fixed.ids if lid in set(moving.ids)]
        if not shared:
            continue
        source = fixed.select(shared)
        written.append(plot_landmarks(
            source, moving.select(shared), map_points(pair.pair_map(), source), None,
            out / "landmarks" / f"{pair.fixed_id}__{pair.moving_id}.png",
            title=f"{pair.fixed_id} -> {pair.moving_id}"
        ))
    return written


def _evaluate(args: argparse.Namespace, cfg: Settings) -> int:
    seq = load_run(args.run_dir)
    report = evaluate_run(seq, args.landmark_dir, cfg.pipeline.pixel_size_um, mode=args.mode)
    out = Path(args.out or args.run_dir)
    write_report(report, out)
    if args.plot:
        plot_metrics(report, out / "metrics.png")
        _plot_pair_landmarks(seq, args.landmark_dir, out)
    logger.info(f"AMrTRE {report.amrtre:.6f}, R_avg {report.r_avg:.4f}, AMean_D {report.amean_d_um:.4f} um")
    return _sequence_exit(seq)


def _synth(args: argparse.Namespace, cfg: Settings) -> int:
    synth_config = cfg.synth_config()
    slices, truth = generate_sequence(synth_config)
    degradation = {"tears": args.tears, "folds": args.folds, "illumination": args.illumination}
    if args.tears or args.folds or args.illumination:
        slices = [
            degrade(image, args.tears, args.folds, args.illumination, seed=synth_config.seed + index)
            for index, image in enumerate(slices)
        ]
    write_sequence(slices, truth, synth_config, args.out_dir, degradation)
    return EXIT_OK


def _serve(args: argparse.Namespace, cfg: Settings) -> int:
    import uvicorn

    from ..api.app import create_app

    logger.info(f"API will be available at http://{cfg.api.host}:{cfg.api.port}")
    logger.info(f"API documentation at http://{cfg.api.host}:{cfg.api.port}/docs")
    uvicorn.run(
        create_app(cfg),
        host=cfg.api.host,
        port=cfg.api.port,
        log_level=cfg.logging.level.lower()
    )
    return EXIT_OK


COMMANDS = {
    "register-pair": _register_pair,
    "register-sequence": _register_sequence,
    "warp": _warp,
    "evaluate": _evaluate,
    "synth": _synth,
    "serve": _serve
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = settings_from_args(args)
    except RegistrationError as e:
        configure_logging()
        logger.error(str(e))
        return EXIT_FAILED
    configure_logging(cfg.logging)

    if not cfg.validate():
        return EXIT_FAILED
    try:
        return COMMANDS[args.command](args, cfg)
    except (RegistrationError, ValueError, FileNotFoundError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILED
