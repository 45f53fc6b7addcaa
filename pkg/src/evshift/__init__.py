"""Event-camera simulation, event representations and sim-to-real shift metrics."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .codecs import read_events, write_events
from .events import (
    Event,
    EventStats,
    EventStream,
    ValidationReport,
    normalize_timestamps,
    slice_window,
    stream_stats,
    validate_stream,
)
from .metrics import (
    FeatureMatrix,
    KernelSpec,
    entropy,
    gaussian_kernel,
    mean_feature_norm,
    median_heuristic_sigma,
    mmd2,
    mmfnd,
    mvp_pool,
    relative_rotation_label,
    rotation_label,
    spatial_pool,
)
from .representations import (
    EstKernel,
    HatsConfig,
    ReprConfig,
    ViewSet,
    est,
    group_views,
    hats,
    represent,
    rotate,
    ungroup_views,
    voxel_grid,
)
from .simulator import (
    Fixed,
    FrameSequence,
    PerPixelUniform,
    SaccadePattern,
    SimulatorConfig,
    Uniform,
    log_intensity,
    sample_threshold,
    saccade_frames,
    simulate,
)
