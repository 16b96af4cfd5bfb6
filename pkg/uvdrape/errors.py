"""Exception hierarchy for uvdrape."""

from pathlib import Path
from typing import Optional, Union


class UvDrapeError(Exception):
    """Base class for every error raised by uvdrape."""


class ConfigError(UvDrapeError):
    """Invalid or unknown configuration entry."""


class UsageError(UvDrapeError):
    """Bad command-line usage."""


class ObjParseError(UvDrapeError):
    """Malformed Wavefront OBJ input."""

    def __init__(self, path: Union[str, Path], line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


class MeshValidationError(UvDrapeError):
    """A TriMesh invariant does not hold."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        msg = f"mesh invariant violated: {invariant}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class EmptyMeshError(UvDrapeError):
    """Operation needs at least one face."""


class ShapeParamError(UvDrapeError):
    """Body shape factor outside [0.5, 2.0]."""


class PoseError(UvDrapeError):
    """Pose does not match the skeleton."""


class MotionFormatError(UvDrapeError):
    """Malformed motion file."""

    def __init__(self, path: Union[str, Path], line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


class UVLayoutError(UvDrapeError):
    """Missing or overlapping UV layout."""


class MapMismatchError(UvDrapeError):
    """UV maps or meshes do not share size, mask or vertex count."""


class DegenerateChannelError(UvDrapeError):
    """A normalization channel has max == min."""

    def __init__(self, channel: str):
        self.channel = channel
        super().__init__(f"degenerate channel {channel}: max equals min")


class SemanticError(UvDrapeError):
    """UV map carries the wrong semantic for the operation."""


class GarmentBindingError(UvDrapeError):
    """Garment vertices could not be bound to the body."""


class SimulationError(UvDrapeError):
    """Cloth state became non-finite or exploded."""

    def __init__(self, vertex: int, message: str):
        self.vertex = vertex
        super().__init__(f"vertex {vertex}: {message}")


class DatasetError(UvDrapeError):
    """Dataset generation or lookup failed."""


class WindowUnderflowError(DatasetError):
    """Sample frame index too small for the k-2 acceleration window."""


class FormatVersionError(UvDrapeError):
    """File magic or format version does not match."""


class StatsMismatchError(UvDrapeError):
    """Normalization statistics differ from the ones a file was built with."""


class NetShapeError(UvDrapeError):
    """Tensor shape or channel count does not fit the network."""


class TrainingDivergedError(UvDrapeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, checkpoint: Optional[Path] = None):
        self.epoch = epoch
        self.checkpoint = checkpoint
        where = f", last good checkpoint {checkpoint}" if checkpoint else ""
        super().__init__(f"training diverged at epoch {epoch}{where}")


class CheckpointError(UvDrapeError):
    """Checkpoint cannot be read or does not match the network."""
