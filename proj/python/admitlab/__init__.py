"""Admission control with lookahead: stream generation, policies, simulation,
analytic oracles and excursion Monte Carlo."""

from ._admitlab import (  # noqa: F401
    ArgumentError,
    BirthDeathSolution,
    ConfigError,
    EstimationError,
    EventStream,
    ExcursionConfig,
    ModelParams,
    RangeError,
    ScalingRow,
    SimMetrics,
    bd_stationary,
    estimate_event_probs,
    e5_rate_fit,
    generate_stream,
    ldp_rate_estimate,
    min_feasible_threshold,
    online_scaling_table,
    poisson_tail,
    run_simulation,
    version,
)
