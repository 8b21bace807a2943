"""Audio-biofeedback balance engine.

Converts trunk pitch/roll sway into region-classified stereo warning audio,
runs balance-trial protocols against live, replayed or simulated subjects,
and quantifies improvement via range/variance statistics.
"""

from .geometry import (
    Baseline,
    RawSample,
    Region,
    SwayPoint,
    WarningLevel,
    apply_baseline,
    calibrate,
    classify,
    dist,
)
from .metrics import (
    PairedImprovement,
    TrialMetrics,
    dispersion_export,
    group_report,
    paired_improvement,
    trial_metrics,
)
from .session import (
    ALL_CONDITIONS,
    Condition,
    Eyes,
    Group,
    Surface,
    TrialRecord,
    run_protocol,
    run_trial,
)
from .simulate import SimConfig, SwaySimulator, run_virtual_subject
from .synth import RenderConfig, SynthParams, map_params, render_trial

__version__ = "0.1.0"

__all__ = [
    "Baseline",
    "RawSample",
    "Region",
    "SwayPoint",
    "WarningLevel",
    "apply_baseline",
    "calibrate",
    "classify",
    "dist",
    "PairedImprovement",
    "TrialMetrics",
    "dispersion_export",
    "group_report",
    "paired_improvement",
    "trial_metrics",
    "ALL_CONDITIONS",
    "Condition",
    "Eyes",
    "Group",
    "Surface",
    "TrialRecord",
    "run_protocol",
    "run_trial",
    "SimConfig",
    "SwaySimulator",
    "run_virtual_subject",
    "RenderConfig",
    "SynthParams",
    "map_params",
    "render_trial",
    "__version__",
]
