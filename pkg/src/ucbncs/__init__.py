"""Adaptive LQ control over a lossy actuation channel.

Library layout:
    jmls        coupled Riccati solver for candidate parameters
    estimation  ridge identification and confidence intervals
    ofu         episode triggers and optimistic parameter selection
    simulate    plant simulation, learning/oracle runners, regret
    bounds      analysis constants and concentration-event checks
    config/io   experiment configuration and reproducible outputs
    cli         command-line front end (``ucbncs``)
"""

from .bounds import (
    BoundReport,
    EventCheckResult,
    MarginReport,
    bound_report,
    check_events,
    f_episode_bound,
    g_state_bound,
    h_ratio_bound,
    lyapunov_margin,
    margin_report,
    sup_over_box,
)
from .config import ExperimentConfig
from .estimation import (
    ConfidenceSet,
    EstimatorState,
    confidence_set,
    initial_confidence_set,
)
from .jmls import (
    CandidateTheta,
    CostWeights,
    JmlsSolution,
    average_cost,
    solve_jmls,
    solve_jmls_grid,
)
from .ofu import (
    EmptyConfidenceIntersection,
    EpisodeState,
    ParameterBox,
    control,
    episode_trigger,
    gain_sup,
    ofu_select,
)
from .simulate import (
    AlgoConfig,
    EpisodeRecord,
    SystemTruth,
    TrajectoryRecord,
    draw_streams,
    regret_of,
    run_oracle,
    run_ucb_ncs,
    step_plant,
)

__all__ = [
    "AlgoConfig",
    "BoundReport",
    "CandidateTheta",
    "ConfidenceSet",
    "CostWeights",
    "EmptyConfidenceIntersection",
    "EpisodeRecord",
    "EpisodeState",
    "EstimatorState",
    "EventCheckResult",
    "ExperimentConfig",
    "JmlsSolution",
    "MarginReport",
    "ParameterBox",
    "SystemTruth",
    "TrajectoryRecord",
    "average_cost",
    "bound_report",
    "check_events",
    "confidence_set",
    "control",
    "draw_streams",
    "episode_trigger",
    "f_episode_bound",
    "g_state_bound",
    "gain_sup",
    "h_ratio_bound",
    "initial_confidence_set",
    "lyapunov_margin",
    "margin_report",
    "ofu_select",
    "regret_of",
    "run_oracle",
    "run_ucb_ncs",
    "solve_jmls",
    "solve_jmls_grid",
    "step_plant",
    "sup_over_box",
]

__version__ = "0.1.0"
