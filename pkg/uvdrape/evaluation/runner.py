"""Evaluation of the network, the LBS baseline and the ground-truth round trip."""

import csv
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from ..body.motion import load_motion
from ..body.skeleton import ShapeParams
from ..body.skinning import pose_body
from ..config import WINDOW_START, from_section
from ..dataset.manifest import TEST, Manifest
from ..dataset.rig import Rig, build_rig
from ..dataset.samples import SampleReader
from ..errors import DatasetError, MapMismatchError
from ..net.infer import Predictor, offsets_from_output
from ..sim.seqio import load_sequence
from ..transfer.binding import GarmentBinding, bind_garment
from ..transfer.body_to_cloth import bake_offsets
from ..transfer.reconstruct import reconstruct_garment
from .baseline import LbsBaseline
from .metrics import hem_variance, mse_uv, mse_vertices

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

GAN = "gan"
LBS = "lbs"
ROUNDTRIP = "roundtrip"
METHODS = (GAN, LBS, ROUNDTRIP)

REPORT_NAME = "report.csv"
META_NAME = "report_meta.json"
REPORT_COLUMNS = ("action", "template", "method", "mse_uv_mm2", "mse_vert_mm2", "frames", "hem_var_mm2")


@dataclass(frozen=True)
class EvalConfig:
    """``eval`` section."""

    split: str = TEST
    methods: Tuple[str, ...] = METHODS
    batch_size: int = 8
    workers: int = 2
    hem_bone: str = "pelvis"

    def __post_init__(self):
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown evaluation methods: {', '.join(unknown)}")
        if self.batch_size < 1 or self.workers < 1:
            raise ValueError("batch_size and workers must be >= 1")

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "EvalConfig":
        return from_section(cls, data, "eval")


@dataclass(frozen=True)
class EvalRow:
    action: str
    template: str
    method: str
    mse_uv_mm2: float
    mse_vert_mm2: float
    frames: int
    hem_var_mm2: float


@dataclass
class EvalReport:
    """One row per (action, template, method) plus per-frame timings in milliseconds."""

    rows: List[EvalRow]
    split: str = TEST
    timings_ms: Dict[str, float] = field(default_factory=dict)
    checkpoint_bytes: int = 0

    def methods(self) -> List[str]:
        return sorted({r.method for r in self.rows}, key=lambda m: METHODS.index(m) if m in METHODS else 99)

    def templates(self) -> List[str]:
        return list(dict.fromkeys(r.template for r in self.rows))

    def actions(self) -> List[str]:
        return list(dict.fromkeys(r.action for r in self.rows))

    def select(self, template: Optional[str] = None, method: Optional[str] = None) -> List[EvalRow]:
        return [r for r in self.rows if (template is None or r.template == template)
                and (method is None or r.method == method)]

    def mean(self, column: str, template: Optional[str] = None, method: Optional[str] = None) -> float:
        rows = self.select(template, method)
        if not rows:
            return float("nan")
        weights = np.array([r.frames for r in rows], dtype=np.float64)
        values = np.array([getattr(r, column) for r in rows], dtype=np.float64)
        return float(np.sum(values * weights) / np.sum(weights))


def save_report(report: EvalReport, directory: PathLike) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / REPORT_NAME
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for row in report.rows:
            writer.writerow(asdict(row))
    meta = {"split": report.split, "timings_ms": report.timings_ms, "checkpoint_bytes": report.checkpoint_bytes}
    (directory / META_NAME).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_report(path: PathLike) -> EvalReport:
    """Read ``report.csv`` (a file or its directory) and the metadata beside it."""
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_NAME
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(EvalRow(
                rec["action"], rec["template"], rec["method"], float(rec["mse_uv_mm2"]),
                float(rec["mse_vert_mm2"]), int(rec["frames"]), float(rec.get("hem_var_mm2") or 0.0),
            ))
    report = EvalReport(rows)
    meta_path = path.parent / META_NAME
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        report.split = meta.get("split", report.split)
        report.timings_ms = meta.get("timings_ms", {})
        report.checkpoint_bytes = int(meta.get("checkpoint_bytes", 0))
    return report


@dataclass
class _Context:
    manifest: Manifest
    reader: SampleReader
    rig: Rig
    bindings: Dict[str, GarmentBinding]
    baselines: Dict[str, LbsBaseline]
    config: EvalConfig
    predictor: Optional[Predictor]
    lock: threading.Lock = field(default_factory=threading.Lock)


def _predict(ctx: _Context, x: np.ndarray) -> Dict[str, np.ndarray]:
    bs = ctx.config.batch_size
    chunks = []
    with ctx.lock:
        for start in range(0, len(x), bs):
            chunks.append(ctx.predictor.predict_batch(x[start:start + bs]))
    return {t: np.concatenate([c[t] for c in chunks]) for t in ctx.manifest.templates}


def _evaluate_action(ctx: _Context, name: str) -> Tuple[List[EvalRow], Dict[str, List[float]]]:
    manifest, rig, stats = ctx.manifest, ctx.rig, ctx.reader.stats
    entry = manifest.action(name)
    action_dir = manifest.action_dir(name)
    motion = load_motion(action_dir / "motion.txt")
    if motion.frame_count != entry.frames:
        raise DatasetError(f"{name}: motion has {motion.frame_count} frames, manifest says {entry.frames}")
    keys = list(range(WINDOW_START, entry.frames))
    poses = [motion.frame(k) for k in keys]
    samples = [ctx.reader.load(name, k) for k in keys]
    masks = ctx.reader.masks
    timings: Dict[str, List[float]] = {GAN: [], LBS: []}

    predicted: Dict[str, np.ndarray] = {}
    if GAN in ctx.config.methods:
        x = np.stack([s.input_array() for s in samples])
        t0 = time.perf_counter()
        predicted = _predict(ctx, x)
        timings[GAN].append((time.perf_counter() - t0) / len(keys))

    rows = []
    for template in manifest.templates:
        truth_frames = load_sequence(action_dir / f"cloth_{template}.csq")
        garment = rig.garments[template]
        if truth_frames[0].vertex_count != garment.vertex_count:
            raise MapMismatchError(f"{name}/{template}: stored cloth does not match the template garment")
        bake_body = rig.bake_body(template)
        body_frames = [pose_body(bake_body, p) for p in poses]
        binding = ctx.bindings[template]
        for method in ctx.config.methods:
            uv_err, vert_err, meshes = [], [], []
            for i, k in enumerate(keys):
                truth_off = samples[i].offsets(template, stats)
                if method == LBS:
                    t0 = time.perf_counter()
                    mesh = ctx.baselines[template](poses[i])
                    timings[LBS].append(time.perf_counter() - t0)
                    estimate = bake_offsets(rig.transfers[template], body_frames[i], mesh, rig.bake_uv(template))
                else:
                    if method == GAN:
                        estimate = offsets_from_output(predicted[template][i], masks[template], stats, template)
                    else:
                        estimate = truth_off
                    mesh = reconstruct_garment(binding, body_frames[i], estimate).mesh
                uv_err.append(mse_uv(estimate, truth_off))
                vert_err.append(mse_vertices(mesh, truth_frames[k]))
                meshes.append(mesh)
            hem = hem_variance(meshes, garment.hem, rig.body, poses, ctx.config.hem_bone)
            rows.append(EvalRow(name, template, method, float(np.mean(uv_err)), float(np.mean(vert_err)),
                                len(keys), hem))
    return rows, timings


def _bindings(rig: Rig, templates: Sequence[str]) -> Dict[str, GarmentBinding]:
    return {
        t: bind_garment(rig.garments[t].mesh, rig.bake_body(t).template, rig.bake_uv(t), t_bc=rig.transfers[t])
        for t in templates
    }


def run_eval(manifest: Manifest, checkpoint: Optional[PathLike], config: Optional[EvalConfig] = None,
             rig: Optional[Rig] = None, quiet: bool = False) -> EvalReport:
    """
    Score every frame of the chosen split.

    The network's offsets are compared with the ground-truth offset maps,
    and the garments reconstructed from them with the simulated meshes.
    The LBS baseline and the reconstruction from ground-truth offsets
    (the round-trip floor) are scored the same way.
    """
    config = config or EvalConfig()
    names = manifest.names(config.split)
    if not names:
        raise DatasetError(f"split '{config.split}' has no actions")
    reader = SampleReader(manifest)
    predictor = None
    checkpoint_bytes = 0
    if GAN in config.methods:
        if checkpoint is None:
            raise ValueError("evaluating the network needs a checkpoint")
        predictor = Predictor.load(checkpoint, reader.stats, manifest.resolution)
        checkpoint_bytes = Path(checkpoint).stat().st_size
    rig = rig or build_rig(ShapeParams.from_dict(manifest.shape), manifest.resolution)
    bindings = _bindings(rig, manifest.templates)
    baselines = {}
    if LBS in config.methods:
        baselines = {t: LbsBaseline(rig.garments[t].mesh, rig.bake_body(t), bindings[t]) for t in manifest.templates}
    ctx = _Context(manifest, reader, rig, bindings, baselines, config, predictor)

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [pool.submit(_evaluate_action, ctx, n) for n in names]
        results = [f.result() for f in tqdm(futures, desc="eval", unit="action", disable=quiet)]

    rows: List[EvalRow] = []
    timings: Dict[str, List[float]] = {GAN: [], LBS: []}
    for action_rows, action_timings in results:
        rows.extend(action_rows)
        for key, values in action_timings.items():
            timings[key].extend(values)
    timings_ms = {k: float(np.mean(v) * 1000.0) for k, v in timings.items() if v}
    logger.info("evaluated %d actions, %d rows", len(names), len(rows))
    return EvalReport(rows, config.split, timings_ms, checkpoint_bytes)
