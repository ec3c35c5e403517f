"""Phase regimes: phase lengths, success thresholds, utilities and losses.

A phase is k consecutive steps with one fixed action; one learning round per
phase. A sending phase counts as successful when at least a fraction mu of its
steps succeed (the boundary is inclusive). Regimes differ in how k, mu and the
failure penalty are derived from what the links know about the jammer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError, UsageError
from .learning import IDLE, SEND

KNOWN_WINDOW_DELTA = "known-tprime-delta"
KNOWN_DELTA_ONLY = "known-delta-only"
SYNCHRONIZED_UNKNOWN_DELTA = "synchronized-unknown-delta"
STOCHASTIC_TUNED = "stochastic-tuned"
SIMULATION_VARIANT = "simulation-variant"
REGIMES = (
    KNOWN_WINDOW_DELTA,
    KNOWN_DELTA_ONLY,
    SYNCHRONIZED_UNKNOWN_DELTA,
    STOCHASTIC_TUNED,
    SIMULATION_VARIANT,
)

# Phase regimes reward +1 / penalize -1; the per-step regime dampens the
# failure penalty to -delta/(2-delta).
_CEIL_FUZZ = 1e-9


def phase_length(regime: str, delta_assumed: float, t_prime: int | None = None) -> int:
    """Steps per phase for a regime; fractional formulas are ceiled."""
    if regime not in REGIMES:
        raise UsageError(f"unknown regime {regime!r}")
    if not (0.0 < delta_assumed <= 1.0):
        raise ParameterError(f"delta must be in (0, 1], got {delta_assumed}")
    if regime == KNOWN_WINDOW_DELTA:
        if t_prime is None:
            raise ParameterError("known-tprime-delta needs t_prime")
        return int(t_prime)
    if regime == KNOWN_DELTA_ONLY:
        return 1
    if regime == STOCHASTIC_TUNED:
        return math.ceil((2.0 / delta_assumed) * math.log(8.0) - _CEIL_FUZZ)
    if regime == SIMULATION_VARIANT:
        return math.ceil(6.0 / delta_assumed - _CEIL_FUZZ)
    # synchronized: the per-phase guess changes mu and the penalty, not k
    return int(t_prime) if t_prime is not None else 1


def default_mu(regime: str, delta_assumed: float) -> float:
    return 1.0 if regime == KNOWN_DELTA_ONLY else 0.5 * delta_assumed


@dataclass(frozen=True)
class PhasePolicy:
    """Immutable phase configuration for one run."""

    regime: str
    delta_assumed: float
    k: int
    mu: float
    t_prime: int | None = None
    idle_loss: float = 0.5
    j_max: int = 6  # guess levels for the synchronized regime

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise UsageError(f"unknown regime {self.regime!r}")
        if self.k < 1:
            raise ParameterError("phase length must be at least 1")
        if not (0.0 < self.mu <= 1.0):
            raise ParameterError(f"mu must be in (0, 1], got {self.mu}")
        if not (0.0 < self.delta_assumed <= 1.0):
            raise ParameterError(f"delta must be in (0, 1], got {self.delta_assumed}")
        if not (0.0 <= self.idle_loss <= 1.0):
            raise ParameterError("idle_loss must be in [0, 1]")
        if self.j_max < 1:
            raise ParameterError("j_max must be at least 1")

    @classmethod
    def make(
        cls,
        regime: str,
        delta_assumed: float,
        t_prime: int | None = None,
        idle_loss: float = 0.5,
        j_max: int = 6,
    ) -> "PhasePolicy":
        k = phase_length(regime, delta_assumed, t_prime)
        return cls(
            regime=regime,
            delta_assumed=delta_assumed,
            k=k,
            mu=default_mu(regime, delta_assumed),
            t_prime=t_prime,
            idle_loss=idle_loss,
            j_max=j_max,
        )


@dataclass(frozen=True)
class PhaseOutcome:
    attempted: bool
    successful_steps: int
    total_steps: int
    success: bool

    def __post_init__(self):
        if self.total_steps < 1 or not (0 <= self.successful_steps <= self.total_steps):
            raise ParameterError("malformed phase outcome")
        if not self.attempted and self.successful_steps:
            raise ParameterError("an idle phase has no successful steps")


def phase_success(attempted: bool, successful_steps: int, total_steps: int, mu: float) -> bool:
    """An attempted phase succeeds when its success fraction reaches mu (inclusive)."""
    return bool(attempted and successful_steps >= mu * total_steps - 1e-9)


def make_outcome(attempted: bool, successful_steps: int, total_steps: int, mu: float) -> PhaseOutcome:
    return PhaseOutcome(
        attempted=attempted,
        successful_steps=successful_steps if attempted else 0,
        total_steps=total_steps,
        success=phase_success(attempted, successful_steps, total_steps, mu),
    )


def phase_utility(regime: str, outcome: PhaseOutcome, delta_assumed: float) -> float:
    """Reward for one phase: 0 when idle, +1 on success, regime-specific penalty on failure."""
    if regime not in REGIMES:
        raise UsageError(f"unknown regime {regime!r}")
    if not outcome.attempted:
        return 0.0
    if outcome.success:
        return 1.0
    if regime == KNOWN_DELTA_ONLY:
        return -delta_assumed / (2.0 - delta_assumed)
    return -1.0


def sim_loss(outcome: PhaseOutcome, idle_loss: float) -> dict[str, float]:
    """Per-action losses: idle pays idle_loss, sending pays 0 on a successful
    phase and 1 otherwise. For idle phases the caller passes the counterfactual
    sending outcome."""
    return {SEND: 0.0 if outcome.success else 1.0, IDLE: idle_loss}


def utility_to_loss(utility: float) -> float:
    """Map a utility in [-1, 1] onto the loss scale [0, 1]."""
    if not (-1.0 <= utility <= 1.0):
        raise ParameterError(f"utility out of range: {utility}")
    return (1.0 - utility) / 2.0


def phase_losses(
    regime: str, send_outcome: PhaseOutcome, delta_assumed: float, idle_loss: float
) -> dict[str, float]:
    """Loss vector fed to the learner after a phase; send_outcome describes what
    sending did (or, for idle phases, would have done)."""
    if regime == SIMULATION_VARIANT:
        return sim_loss(send_outcome, idle_loss)
    u_send = phase_utility(regime, send_outcome, delta_assumed)
    return {SEND: utility_to_loss(u_send), IDLE: utility_to_loss(0.0)}


def learn_scale(regime: str, k: int) -> float:
    """Loss multiplier per update: phase length for the simulation variant, 1 otherwise."""
    return float(k) if regime == SIMULATION_VARIANT else 1.0


def guess_level(phase_index: int, j_max: int) -> int:
    """Ruler-sequence level for a 1-based phase index, capped at j_max."""
    if phase_index < 1:
        raise ParameterError(f"phase index must be at least 1, got {phase_index}")
    if j_max < 1:
        raise ParameterError("j_max must be at least 1")
    two_adic = (phase_index & -phase_index).bit_length() - 1
    return min(j_max, two_adic + 1)


def delta_guess(phase_index: int, j_max: int) -> float:
    """Synchronized guessing schedule: level j is tried in a 2**-j fraction of
    phases (odd phases guess 1/2, phases == 2 mod 4 guess 1/4, ...), with the
    cap level absorbing the residual frequency."""
    return 2.0 ** (-guess_level(phase_index, j_max))
