"""
Network checkpoints.

File layout (little endian)::

    b"PXN1" | u32 header_length | JSON header | tensor blobs

The header echoes the training config and the normalization stats hash
and lists every tensor as ``{name, dtype, shape, offset, nbytes}`` with
offsets relative to the start of the blob section.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from ..config import FORMAT_VERSION
from ..errors import CheckpointError, FormatVersionError, NetShapeError
from .discriminator import DiscriminatorNet
from .generator import GeneratorNet
from .layers import Module
from .optim import Adam

PathLike = Union[str, Path]

MAGIC = b"PXN1"
_LEN = struct.Struct("<I")


@dataclass
class Checkpoint:
    header: Dict[str, Any]
    tensors: Dict[str, np.ndarray]

    @property
    def epoch(self) -> int:
        return int(self.header.get("epoch", 0))

    @property
    def stats_hash(self) -> str:
        return self.header.get("stats_hash", "")

    @property
    def resolution(self) -> int:
        return int(self.header["resolution"])

    @property
    def config(self) -> Dict[str, Any]:
        return self.header.get("config", {})

    def _prefixed(self, prefix: str) -> Dict[str, np.ndarray]:
        n = len(prefix)
        return {k[n:]: v for k, v in self.tensors.items() if k.startswith(prefix)}

    def build_generator(self) -> GeneratorNet:
        arch = self.header["generator"]
        net = GeneratorNet(arch["base_channels"], tuple(arch["templates"]), arch["in_channels"])
        try:
            net.load_state(self._prefixed("G."))
        except NetShapeError as exc:
            raise CheckpointError(f"generator weights do not fit: {exc}") from exc
        return net.eval()

    def build_discriminator(self) -> Optional[DiscriminatorNet]:
        arch = self.header.get("discriminator")
        if arch is None:
            return None
        net = DiscriminatorNet(arch["base_channels"], arch["target_channels"],
                               arch["condition_channels"], arch["conditional"])
        try:
            net.load_state(self._prefixed("D."))
        except NetShapeError as exc:
            raise CheckpointError(f"discriminator weights do not fit: {exc}") from exc
        return net

    def restore_optimizer(self, name: str, optimizer: Adam) -> bool:
        state = self._prefixed(f"{name}.")
        if not state:
            return False
        optimizer.load_state(state)
        return True


def _collect(prefix: str, module: Module) -> Dict[str, np.ndarray]:
    return {f"{prefix}.{k}": v for k, v in module.state().items()}


def save_checkpoint(path: PathLike, generator: GeneratorNet, *, resolution: int, stats_hash: str,
                    config: Optional[Dict[str, Any]] = None, epoch: int = 0,
                    discriminator: Optional[DiscriminatorNet] = None,
                    optimizers: Optional[Dict[str, Adam]] = None) -> Path:
    """Write a checkpoint, replacing ``path`` only once the file is complete."""
    path = Path(path)
    tensors = _collect("G", generator)
    header: Dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "epoch": epoch,
        "resolution": resolution,
        "stats_hash": stats_hash,
        "config": config or {},
        "generator": {
            "base_channels": generator.base_channels,
            "templates": list(generator.templates),
            "in_channels": generator.in_channels,
        },
    }
    if discriminator is not None:
        tensors.update(_collect("D", discriminator))
        header["discriminator"] = {
            "base_channels": discriminator.base_channels,
            "target_channels": discriminator.target_channels,
            "condition_channels": discriminator.condition_channels,
            "conditional": discriminator.conditional,
        }
    for name, opt in (optimizers or {}).items():
        tensors.update({f"{name}.{k}": v for k, v in opt.state().items()})

    entries = []
    blobs = []
    offset = 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        arr = arr.astype(arr.dtype.newbyteorder("<"))
        raw = arr.tobytes()
        entries.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape),
                        "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header["tensors"] = entries
    head = json.dumps(header, sort_keys=True).encode("utf-8")

    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_LEN.pack(len(head)))
        fh.write(head)
        for raw in blobs:
            fh.write(raw)
    tmp.replace(path)
    return path


def load_checkpoint(path: PathLike) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"{path}: no such checkpoint")
    raw = path.read_bytes()
    if raw[:4] != MAGIC:
        raise FormatVersionError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    if len(raw) < 8:
        raise CheckpointError(f"{path}: truncated header")
    (n,) = _LEN.unpack_from(raw, 4)
    try:
        header = json.loads(raw[8:8 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable header ({exc})") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise FormatVersionError(f"{path}: checkpoint format {header.get('format_version')}")
    base = 8 + n
    tensors = {}
    for entry in header.pop("tensors", []):
        start = base + entry["offset"]
        end = start + entry["nbytes"]
        if end > len(raw):
            raise CheckpointError(f"{path}: tensor {entry['name']} runs past the end of the file")
        arr = np.frombuffer(raw[start:end], dtype=np.dtype(entry["dtype"]))
        tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return Checkpoint(header, tensors)
