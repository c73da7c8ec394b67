"""Event-camera representation engine.

Maintains per-pixel, per-polarity FIFO queues of recent event timestamps and
renders time-ordered recent event (TORE) volumes, full-frame or as localized
patches, at arbitrary query times. Ships with a threshold-crossing event
simulator, windowed baseline representations, bit-exact file formats, a CLI
and an HTTP service.
"""

from .baselines import SaeResult, WindowSpec, event_count, event_frame, sae, voxel_grid
from .errors import (
    AllocationTooLarge,
    BadMagic,
    CountMismatch,
    EvenPatchSize,
    EvtoreError,
    InvalidBinCount,
    InvalidPolarity,
    NonMonotonicTimestamp,
    OutOfBoundsEvent,
    ParseError,
    QueryBeforeLastEvent,
    TruncatedFile,
    UnsortedQueryTimes,
    UnsupportedSignal,
    VersionMismatch,
)
from .events import (
    Event,
    EventStream,
    SensorGeometry,
    normalize_polarity,
    polarity_channel,
    validate_stream,
)
from .fileio import (
    checkpoint_state,
    read_events_binary,
    read_events_csv,
    read_tensor,
    restore_state,
    write_events_binary,
    write_tensor,
)
from .render import (
    TorePatch,
    ToreVolume,
    log_tau,
    log_tau_prime,
    render_patch,
    render_series,
    render_unclamped,
    render_volume,
)
from .simulate import (
    IntensitySignal,
    LinearRamp,
    SimConfig,
    Sinusoid,
    StepTrain,
    simulate,
)
from .state import EMPTY, IngestReport, SensorState, ToreConfig, new_state

__version__ = "0.1.0"

__all__ = [
    "AllocationTooLarge",
    "BadMagic",
    "CountMismatch",
    "EMPTY",
    "EvenPatchSize",
    "Event",
    "EventStream",
    "EvtoreError",
    "IngestReport",
    "IntensitySignal",
    "InvalidBinCount",
    "InvalidPolarity",
    "LinearRamp",
    "NonMonotonicTimestamp",
    "OutOfBoundsEvent",
    "ParseError",
    "QueryBeforeLastEvent",
    "SaeResult",
    "SensorGeometry",
    "SensorState",
    "SimConfig",
    "Sinusoid",
    "StepTrain",
    "TorePatch",
    "ToreVolume",
    "ToreConfig",
    "TruncatedFile",
    "UnsortedQueryTimes",
    "UnsupportedSignal",
    "VersionMismatch",
    "WindowSpec",
    "checkpoint_state",
    "event_count",
    "event_frame",
    "log_tau",
    "log_tau_prime",
    "new_state",
    "normalize_polarity",
    "polarity_channel",
    "read_events_binary",
    "read_events_csv",
    "read_tensor",
    "render_patch",
    "render_series",
    "render_unclamped",
    "render_volume",
    "restore_state",
    "sae",
    "simulate",
    "validate_stream",
    "voxel_grid",
    "write_events_binary",
    "write_tensor",
]
