"""Seedable simulator and analysis toolkit for distributed capacity maximization
in wireless networks under adversarial jamming."""

from .adversary import AdversaryParams, JamSchedule, build_schedule, is_jammed, validate_bounded
from .engine import (
    NetworkGenParams,
    OptimumSeries,
    PropertyReport,
    RunResult,
    SimConfig,
    counterfactual_success,
    evaluate_semantics,
    max_to_many_objective,
    measure_properties,
    optimum_series,
    run_simulation,
)
from .interference import (
    ConflictGraph,
    IndependenceAudit,
    affectance,
    build_conflict_graph,
    c_independence_audit,
    cg_success,
    max_feasible_set_exact,
    max_feasible_set_greedy,
    sinr_success,
)
from .learning import (
    LearnerState,
    RegretLedger,
    best_fixed_action,
    eta_schedule,
    external_regret,
    rwm_choose,
    rwm_update,
)
from .net_model import (
    LinkSpec,
    NetworkInstance,
    Point2D,
    PresenceInterval,
    SinrParams,
    build_to_many_instance,
    generate_random_network,
)
from .protocol import PhaseOutcome, PhasePolicy, delta_guess, phase_length, phase_success, phase_utility, sim_loss
from .seeding import derive_rng

__all__ = [name for name in dir() if not name.startswith("_")]
