"""Checkpoint interval planning for replicated, inter-dependent processes on failure-prone nodes."""

__version__ = "0.1.0"

from .checkpoint_cost import CheckpointCost, CostSampleLog, estimate_ts, total_cost
from .errors import *  # noqa: F401,F403
from .failure_model import (
    ExponentialFailureModel,
    NodeUptimeRecord,
    estimate_mttf,
    from_mttf,
    read_failure_log,
    sample_time_to_failure,
    survival_probability,
)
from .optimizer import (
    Method,
    PredictionResult,
    baseline_daly,
    baseline_young,
    lambert_w0,
    predict,
    predict_first_order,
    predict_general,
    predict_r1,
    predict_single,
    stationarity_residual,
)
from .overhead import (
    JobSpec,
    OverheadPoint,
    expected_overhead,
    normalized_overhead,
    overhead_point,
    success_prob_all,
)
from .simulator import (
    Decision,
    Mode,
    ServerCheckpointState,
    SimConfig,
    SimResult,
    accept_checkpoint,
    check_server_invariants,
    monte_carlo_overhead,
    run,
)
from .sweep import (
    ComparisonMetrics,
    SweepReport,
    compare,
    interpolate_completion,
    run_sweep,
)
