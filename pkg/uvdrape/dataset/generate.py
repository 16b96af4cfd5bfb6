"""Dataset generation: simulate, bake, split, normalize and write."""

import logging
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from tqdm import tqdm

from ..body.actions import action_catalog, make_action
from ..body.motion import MotionSequence, save_motion
from ..body.skeleton import ShapeParams
from ..body.skinning import pose_body
from ..config import TEMPLATES, WINDOW_START, config_hash, to_plain
from ..errors import DatasetError, DegenerateChannelError, SimulationError
from ..geometry.objio import save_mesh
from ..maps.bake import bake_sequence, motion_maps
from ..maps.norm import NormStats, fit_norm, normalize
from ..maps.uvmap import Semantic, UVMap, load_uvmap, save_uvmap
from ..sim.params import SimParams, fabric_preset
from ..sim.seqio import save_sequence
from ..sim.sequence import simulate_sequence
from ..transfer.body_to_cloth import bake_offsets
from .manifest import TRAIN, ActionEntry, DatasetConfig, Manifest, save_manifest, split_actions
from .rig import PROXY_TEMPLATES, Rig, build_rig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

STAGING = ".raw"
FIRST_MOTION_FRAME = WINDOW_START - 2


def frame_file(k: int, kind: str, template: str = "") -> str:
    """``0007_v.uvm``, ``0007_a.uvm`` or ``0007_o_dress.uvm``."""
    suffix = f"o_{template}" if kind == "o" else kind
    return f"{k:04d}_{suffix}.uvm"


def mask_file(name: str) -> str:
    return f"{name}_mask.uvm"


def resolve_actions(config: DatasetConfig) -> List[MotionSequence]:
    names = action_catalog(config.action_count) if config.action_count > 0 else list(config.actions)
    return [make_action(name, frames=config.frames, fps=config.fps) for name in names]


def template_params(sim: SimParams, fabrics: Dict[str, str]) -> Dict[str, SimParams]:
    """One parameter set per template, the fabric taken from its preset."""
    params = {}
    for template in TEMPLATES:
        preset = fabrics.get(template)
        params[template] = sim.with_fabric(fabric_preset(preset)) if preset else sim
    return params


@dataclass(frozen=True)
class _ActionResult:
    name: str
    frames: int
    error: Optional[str] = None


def _generate_action(rig: Rig, motion: MotionSequence, params: Dict[str, SimParams],
                     action_dir: Path, staging: Path) -> _ActionResult:
    """Simulate one action and stage its raw maps; the action is skipped on a blow-up."""
    cloth = {}
    try:
        for template in TEMPLATES:
            cloth[template] = simulate_sequence(rig.garments[template], rig.body, motion, params[template])
    except SimulationError as exc:
        return _ActionResult(motion.name, motion.frame_count, f"{template}: {exc}")

    action_dir.mkdir(parents=True, exist_ok=True)
    staging.mkdir(parents=True, exist_ok=True)
    save_motion(motion, action_dir / "motion.txt")
    for template, frames in cloth.items():
        save_sequence(frames, action_dir / f"cloth_{template}.csq")

    poses = motion.poses()
    body_frames = [pose_body(rig.body, p) for p in poses]
    proxy_frames = [pose_body(rig.proxy, p) for p in poses]
    velocities, accelerations = motion_maps(bake_sequence(rig.body_uv, body_frames))
    for k in range(FIRST_MOTION_FRAME, motion.frame_count):
        save_uvmap(velocities[k], staging / frame_file(k, "v"))
        save_uvmap(accelerations[k], staging / frame_file(k, "a"))
    for template in TEMPLATES:
        frames = proxy_frames if template in PROXY_TEMPLATES else body_frames
        uv = rig.bake_uv(template)
        for k in range(WINDOW_START, motion.frame_count):
            offsets = bake_offsets(rig.transfers[template], frames[k], cloth[template][k], uv)
            save_uvmap(offsets, staging / frame_file(k, "o", template))
    return _ActionResult(motion.name, motion.frame_count)


def stats_keys() -> List[str]:
    return ["velocity", "acceleration"] + [f"offset/{t}" for t in TEMPLATES]


def _staged_maps(staging: Path, entries: Sequence[ActionEntry], key: str):
    for entry in entries:
        directory = staging / entry.name
        if key in ("velocity", "acceleration"):
            kind = key[0]
            for k in range(FIRST_MOTION_FRAME, entry.frames):
                yield load_uvmap(directory / frame_file(k, kind))
        else:
            template = key.split("/", 1)[1]
            for k in range(WINDOW_START, entry.frames):
                yield load_uvmap(directory / frame_file(k, "o", template))


def fit_train_stats(staging: Path, manifest: Manifest) -> NormStats:
    """Normalization ranges from train-split frames only."""
    train = manifest.entries(TRAIN)
    stats = NormStats()
    for key in stats_keys():
        try:
            stats = stats.merged(fit_norm(_staged_maps(staging, train, key), key))
        except DegenerateChannelError as exc:
            raise DatasetError(f"train split has a constant channel: {exc}") from exc
    return stats


def _write_normalized(staging: Path, entry: ActionEntry, out_dir: Path, stats: NormStats) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for key in stats_keys():
        for k, m in _numbered(staging, entry, key):
            if key.startswith("offset/"):
                name = frame_file(k, "o", key.split("/", 1)[1])
            else:
                name = frame_file(k, key[0])
            save_uvmap(normalize(m, stats, key), out_dir / name)


def _numbered(staging: Path, entry: ActionEntry, key: str):
    first = WINDOW_START if key.startswith("offset/") else FIRST_MOTION_FRAME
    return zip(range(first, entry.frames), _staged_maps(staging, [entry], key))


def write_templates(rig: Rig, out: Path) -> None:
    """Garment OBJs plus the body and per-template validity masks."""
    directory = out / "templates"
    directory.mkdir(parents=True, exist_ok=True)
    save_uvmap(UVMap.zeros(rig.body_uv.mask, Semantic.POSITION), directory / mask_file("body"))
    for template in TEMPLATES:
        save_mesh(rig.garments[template].mesh, directory / f"{template}.obj")
        mask = rig.transfers[template].mask
        save_uvmap(UVMap.zeros(mask, Semantic.OFFSET), directory / mask_file(template))


def generate_dataset(
    out: PathLike,
    config: DatasetConfig,
    sim: SimParams,
    shape: Optional[ShapeParams] = None,
    motions: Optional[Sequence[MotionSequence]] = None,
    rig: Optional[Rig] = None,
    quiet: bool = False,
) -> Manifest:
    """
    Build a dataset under ``out``.

    Every action is simulated for all templates; actions whose simulation
    blows up are skipped with a warning. The split is made per action,
    normalization statistics are fit on the train split, and the
    normalized maps are written next to the raw cloth sequences.
    """
    out = Path(out)
    shape = shape or ShapeParams()
    motions = list(motions) if motions is not None else resolve_actions(config)
    names = [m.name for m in motions]
    if any(not n for n in names) or len(set(names)) != len(names):
        raise DatasetError("actions need unique, non-empty names")
    rig = rig or build_rig(shape, config.resolution)
    if rig.resolution != config.resolution:
        raise DatasetError(f"rig is {rig.resolution}x{rig.resolution}, config asks for {config.resolution}")
    params = template_params(sim, config.fabrics)
    staging_root = out / STAGING
    if staging_root.exists():
        shutil.rmtree(staging_root)

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [
            pool.submit(_generate_action, rig, m, params, out / "actions" / m.name, staging_root / m.name)
            for m in motions
        ]
        results = [f.result() for f in tqdm(futures, desc="actions", unit="action", disable=quiet)]

    entries = []
    for result in results:
        if result.error:
            logger.warning("skipping action %s: %s", result.name, result.error)
            continue
        entries.append(ActionEntry(result.name, result.frames))
    if len(entries) < 2:
        raise DatasetError(f"only {len(entries)} actions simulated; a split needs at least 2")

    manifest = Manifest(
        actions=tuple(entries),
        resolution=config.resolution,
        fps=motions[0].frame_rate,
        shape=shape.to_dict(),
        sim_hash=config_hash({t: p.to_dict() for t, p in params.items()}),
        config={"dataset": to_plain(config), "sim": sim.to_dict()},
        root=out,
    )
    manifest = split_actions(manifest, config.train_fraction)
    stats = fit_train_stats(staging_root, manifest)
    stats.save(out / manifest.stats_file)

    for entry in tqdm(manifest.actions, desc="normalize", unit="action", disable=quiet):
        _write_normalized(staging_root / entry.name, entry, out / "actions" / entry.name / "frames", stats)
    shutil.rmtree(staging_root)
    write_templates(rig, out)

    manifest = replace(manifest, stats_hash=stats.digest())
    save_manifest(manifest, out)
    logger.info("dataset: %d actions (%d train), %d samples", len(entries),
                len(manifest.entries(TRAIN)), manifest.sample_count())
    return manifest
