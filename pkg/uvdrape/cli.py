"""Command-line entry point: ``uvdrape <command> [options]``."""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from rich.console import Console
from rich.logging import RichHandler

from .body.actions import make_action
from .body.model import build_procedural_body
from .body.motion import MotionSequence, load_motion
from .body.proxy import build_dress_proxy
from .body.skeleton import ShapeParams
from .body.skinning import pose_body
from .config import TEMPLATES
from .dataset.generate import generate_dataset, mask_file, resolve_actions, template_params
from .dataset.manifest import load_manifest
from .dataset.rig import PROXY_TEMPLATES, build_rig
from .dataset.samples import SampleReader
from .errors import UsageError, UvDrapeError
from .evaluation.report import print_report
from .evaluation.runner import GAN, load_report, run_eval, save_report
from .geometry.objio import load_mesh, save_mesh
from .maps.bake import bake_sequence, motion_maps
from .maps.raster import rasterize_uv_layout
from .maps.uvmap import Semantic, UVMap, save_uvmap
from .net.infer import Predictor
from .net.train import train
from .settings import ProjectConfig, load_settings
from .sim.garments import build_garment
from .sim.seqio import export_obj_frames, save_sequence
from .sim.sequence import simulate_sequence
from .transfer.binding import bind_garment, save_binding, sidecar_path
from .transfer.reconstruct import reconstruct_garment

logger = logging.getLogger("uvdrape")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="YAML project config")
    parser.add_argument("--seed", type=int, help="override train.seed")
    parser.add_argument("--resolution", type=int, help="override dataset.resolution")
    parser.add_argument("--out", type=Path, help="output directory or file")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging and tracebacks")
    parser.add_argument("-q", "--quiet", action="store_true", help="no progress bars")


def _motion_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--action", help="named procedural action")
    group.add_argument("--motion", type=Path, help="motion file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uvdrape", description="Learned cloth dynamics on body UV maps")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("bake", help="body, proxy and garment templates with their bindings; optional body maps")
    _common(p)
    p.add_argument("--action", help="also bake body position/velocity/acceleration maps of this action")
    p.add_argument("--motion", type=Path, help="also bake body maps of this motion file")

    p = sub.add_parser("simulate", help="simulate one garment template through a motion")
    _common(p)
    _motion_args(p)
    p.add_argument("--template", choices=TEMPLATES, required=True)
    p.add_argument("--obj", action="store_true", help="also export one OBJ per frame")

    p = sub.add_parser("make-dataset", help="simulate, bake, split and normalize a dataset")
    _common(p)

    p = sub.add_parser("train", help="train the generator and discriminator")
    _common(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--epochs", type=int)

    p = sub.add_parser("infer", help="predict offset maps for one dataset frame")
    _common(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--action", required=True)
    p.add_argument("--frame", type=int, required=True)

    p = sub.add_parser("reconstruct", help="rebuild a garment mesh from offset maps")
    _common(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--action", required=True)
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--template", choices=TEMPLATES, required=True)
    p.add_argument("--garment", type=Path, help="garment OBJ (default: the dataset template)")
    p.add_argument("--checkpoint", type=Path, help="predict offsets (default: ground-truth offsets)")
    p.add_argument("--shape", action="append", default=[], metavar="PART=ALPHA",
                   help="body shape factor, repeatable (e.g. torso=1.1)")

    p = sub.add_parser("eval", help="score network, LBS and round trip on a split")
    _common(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--split", choices=("train", "test"))
    p.add_argument("--methods", help="comma-separated subset of gan,lbs,roundtrip")

    p = sub.add_parser("report", help="print an evaluation report")
    _common(p)
    p.add_argument("--report", type=Path, required=True, help="report.csv or its directory")
    p.add_argument("--log", type=Path, help="training log CSV")

    p = sub.add_parser("monitor", help="browse training runs and reports in the terminal")
    _common(p)
    p.add_argument("--runs", type=Path, help="runs directory")
    return parser


def setup_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=verbose)],
        force=True,
    )


def _settings(args) -> ProjectConfig:
    cfg = load_settings(args.config)
    return cfg.with_overrides(args.seed, args.resolution, getattr(args, "epochs", None))


def _require_out(args) -> Path:
    if args.out is None:
        raise UsageError(f"{args.command} needs --out")
    return args.out


def _motion(args, cfg: ProjectConfig) -> Optional[MotionSequence]:
    if getattr(args, "motion", None):
        return load_motion(args.motion)
    if getattr(args, "action", None):
        try:
            return make_action(args.action, cfg.dataset.frames, cfg.dataset.fps)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from exc
    return None


def cmd_bake(args, cfg: ProjectConfig) -> None:
    out = _require_out(args)
    resolution = cfg.dataset.resolution
    rig = build_rig(cfg.shape, resolution)
    out.mkdir(parents=True, exist_ok=True)
    save_mesh(rig.body.template, out / "body.obj")
    save_mesh(rig.proxy.template, out / "body_proxy.obj")
    save_uvmap(UVMap.zeros(rig.body_uv.mask, Semantic.POSITION), out / mask_file("body"))
    save_uvmap(UVMap.zeros(rig.proxy_uv.mask, Semantic.POSITION), out / mask_file("body_proxy"))
    for t in TEMPLATES:
        path = out / f"{t}.obj"
        save_mesh(rig.garments[t].mesh, path)
        binding = bind_garment(rig.garments[t].mesh, rig.bake_body(t).template, rig.bake_uv(t),
                               t_bc=rig.transfers[t])
        save_binding(binding, sidecar_path(path))
        save_uvmap(UVMap.zeros(rig.transfers[t].mask, Semantic.OFFSET), out / mask_file(t))
        logger.info("%s: %d vertices, %d offset pixels, %.1f%% bound by ray", t, rig.garments[t].vertex_count,
                    rig.transfers[t].hit_count, 100 * binding.ray_fraction)
    motion = _motion(args, cfg)
    if motion is None:
        return
    frames_dir = out / "maps" / (motion.name or "motion")
    frames_dir.mkdir(parents=True, exist_ok=True)
    positions = bake_sequence(rig.body_uv, [pose_body(rig.body, p) for p in motion.poses()])
    velocities, accelerations = motion_maps(positions)
    for k, m in enumerate(positions):
        save_uvmap(m, frames_dir / f"{k:04d}_p.uvm")
        if velocities[k] is not None:
            save_uvmap(velocities[k], frames_dir / f"{k:04d}_v.uvm")
        if accelerations[k] is not None:
            save_uvmap(accelerations[k], frames_dir / f"{k:04d}_a.uvm")
    logger.info("baked %d frames of %s into %s", motion.frame_count, motion.name, frames_dir)


def cmd_simulate(args, cfg: ProjectConfig) -> None:
    out = _require_out(args)
    motion = _motion(args, cfg)
    body = build_procedural_body(cfg.shape)
    garment = build_garment(args.template, body)
    params = template_params(cfg.sim, cfg.dataset.fabrics)[args.template]
    frames = simulate_sequence(garment, body, motion, params)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"cloth_{args.template}.csq"
    save_sequence(frames, path)
    if args.obj:
        export_obj_frames(frames, out / args.template, stem=args.template)
    logger.info("wrote %d frames to %s", len(frames), path)


def cmd_make_dataset(args, cfg: ProjectConfig) -> None:
    out = _require_out(args)
    try:
        motions = resolve_actions(cfg.dataset)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    manifest = generate_dataset(out, cfg.dataset, cfg.sim, cfg.shape, motions=motions, quiet=args.quiet)
    logger.info("dataset written to %s (%d samples)", out, manifest.sample_count())


def cmd_train(args, cfg: ProjectConfig) -> None:
    out = _require_out(args)
    manifest = load_manifest(args.dataset)
    result = train(manifest, cfg.train, out, cfg.tracking, quiet=args.quiet)
    last = result.history[-1]
    logger.info("epoch %d: loss_D %.4f, loss_G %.4f; checkpoint %s", last.epoch, last.loss_d, last.loss_g,
                result.checkpoint)


def cmd_infer(args, cfg: ProjectConfig) -> None:
    out = _require_out(args)
    manifest = load_manifest(args.dataset)
    reader = SampleReader(manifest)
    predictor = Predictor.load(args.checkpoint, reader.stats, manifest.resolution)
    sample = reader.load(args.action, args.frame)
    offsets = predictor(sample.inputs, reader.masks)
    out.mkdir(parents=True, exist_ok=True)
    for t, m in offsets.items():
        save_uvmap(m, out / f"{args.action}_{args.frame:04d}_o_{t}.uvm")
    logger.info("wrote %d offset maps to %s", len(offsets), out)


def parse_shape(items: Sequence[str], base: ShapeParams) -> ShapeParams:
    values = base.to_dict()
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or key not in values:
            raise UsageError(f"bad --shape '{item}', expected one of {', '.join(values)}=ALPHA")
        try:
            values[key] = float(value)
        except ValueError as exc:
            raise UsageError(f"bad --shape value '{value}'") from exc
    return ShapeParams(**values)


def cmd_reconstruct(args, cfg: ProjectConfig) -> None:
    out = _require_out(args)
    manifest = load_manifest(args.dataset)
    reader = SampleReader(manifest)
    sample = reader.load(args.action, args.frame)
    template = args.template
    if args.checkpoint:
        predictor = Predictor.load(args.checkpoint, reader.stats, manifest.resolution)
        offsets = predictor(sample.inputs, reader.masks)[template]
    else:
        offsets = sample.offsets(template, reader.stats)

    shape = parse_shape(args.shape, ShapeParams.from_dict(manifest.shape))
    body = build_procedural_body(shape)
    if template in PROXY_TEMPLATES:
        body = build_dress_proxy(body)
    uv = rasterize_uv_layout(body.template, manifest.resolution)
    garment_path = args.garment or manifest.root / "templates" / f"{template}.obj"
    garment = load_mesh(garment_path)
    binding = bind_garment(garment, body.template, uv)
    motion = load_motion(manifest.action_dir(args.action) / "motion.txt")
    result = reconstruct_garment(binding, pose_body(body, motion.frame(args.frame)), offsets)
    path = out if out.suffix == ".obj" else out / f"{args.action}_{args.frame:04d}_{template}.obj"
    path.parent.mkdir(parents=True, exist_ok=True)
    save_mesh(result.mesh, path)
    if not result.complete:
        logger.warning("%d vertices kept on the body surface, %d filled from neighbours",
                       result.reported.size, result.filled.size)
    logger.info("%.1f%% of %d vertices bound; wrote %s", 100 * binding.bound_fraction, garment.vertex_count, path)


def cmd_eval(args, cfg: ProjectConfig) -> None:
    out = _require_out(args)
    config = cfg.eval
    if args.split:
        config = replace(config, split=args.split)
    if args.methods:
        try:
            config = replace(config, methods=tuple(m.strip() for m in args.methods.split(",")))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if GAN in config.methods and args.checkpoint is None:
        raise UsageError("eval with the gan method needs --checkpoint")
    manifest = load_manifest(args.dataset)
    report = run_eval(manifest, args.checkpoint, config, quiet=args.quiet)
    path = save_report(report, out)
    print_report(report, Console())
    logger.info("report written to %s", path)


def cmd_report(args, cfg: ProjectConfig) -> None:
    if not args.report.exists():
        raise UsageError(f"{args.report}: no such report")
    print_report(load_report(args.report), Console(), args.log)


def cmd_monitor(args, cfg: ProjectConfig) -> None:
    from .monitor.app import run_monitor

    runs = args.runs or Path(cfg.monitor.runs_dir)
    run_monitor(runs, cfg.monitor.refresh_seconds)


COMMANDS = {
    "bake": cmd_bake,
    "simulate": cmd_simulate,
    "make-dataset": cmd_make_dataset,
    "train": cmd_train,
    "infer": cmd_infer,
    "reconstruct": cmd_reconstruct,
    "eval": cmd_eval,
    "report": cmd_report,
    "monitor": cmd_monitor,
}


def cli_main(argv: Optional[List[str]] = None) -> int:
    """Run one command; 0 on success, 1 on usage errors, 2 on runtime errors."""
    parser = build_parser()
    verbose = False
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        verbose = args.verbose
        setup_logging(verbose)
        COMMANDS[args.command](args, _settings(args))
    except UsageError as exc:
        logger.error("usage: %s", exc)
        return EXIT_USAGE
    except (UvDrapeError, OSError) as exc:
        if verbose:
            logger.exception("failed")
        else:
            logger.error("%s", exc)
        return EXIT_RUNTIME
    return EXIT_OK
