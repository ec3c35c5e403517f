"""Two-action randomized weighted majority: weights, learning-rate schedule, regret ledger.

Each link keeps positive weights for its two actions (send, idle), picks an
action with probability proportional to weight, and shrinks weights by
(1-eta)**(loss*scale). Losses live in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ParameterError

SEND = "send"
IDLE = "idle"
ACTIONS = (SEND, IDLE)

ORACLE_COUNTERFACTUAL = "oracle-counterfactual"
REALIZED_ONLY = "realized-only"
FEEDBACK_MODES = (ORACLE_COUNTERFACTUAL, REALIZED_ONLY)

UNDERFLOW_FLOOR = 1e-300


@dataclass
class LearnerState:
    """Mutable per-link learner: action weights, current learning rate, round count.

    The doubling-style schedule used by the engine starts above 1/2, so eta is
    only required to stay inside [0, 1) here.
    """

    w_send: float = 1.0
    w_idle: float = 1.0
    eta: float = 0.0
    update_count: int = 0
    feedback_mode: str = ORACLE_COUNTERFACTUAL

    def __post_init__(self):
        if not (self.w_send > 0 and self.w_idle > 0):
            raise ParameterError("action weights must be positive")
        if not (0.0 <= self.eta < 1.0):
            raise ParameterError(f"eta must be in [0, 1), got {self.eta}")
        if self.feedback_mode not in FEEDBACK_MODES:
            raise ParameterError(f"unknown feedback mode {self.feedback_mode!r}")

    @property
    def send_probability(self) -> float:
        return self.w_send / (self.w_send + self.w_idle)


def rwm_choose(state: LearnerState, rng: np.random.Generator) -> str:
    """Sample an action proportionally to the weights; consumes exactly one draw."""
    return SEND if rng.random() < state.send_probability else IDLE


def rwm_update(state: LearnerState, losses: Mapping[str, float], scale: float = 1.0) -> LearnerState:
    """Apply w_a *= (1-eta)**(loss_a * scale) for every supplied action, in place.

    Weights are rescaled by their maximum only when both drop below the
    underflow floor, which leaves the choice distribution untouched.
    """
    if scale < 1.0:
        raise ParameterError(f"scale must be at least 1, got {scale}")
    for action, loss in losses.items():
        if action not in ACTIONS:
            raise ParameterError(f"unknown action {action!r}")
        if not (0.0 <= loss <= 1.0):
            raise ParameterError(f"loss for {action!r} must be in [0, 1], got {loss}")
    shrink = 1.0 - state.eta
    if SEND in losses:
        state.w_send *= shrink ** (losses[SEND] * scale)
    if IDLE in losses:
        state.w_idle *= shrink ** (losses[IDLE] * scale)
    top = max(state.w_send, state.w_idle)
    if top < UNDERFLOW_FLOOR:
        state.w_send /= top
        state.w_idle /= top
    state.update_count += 1
    return state


def eta_schedule(round_index: int) -> float:
    """Learning rate sqrt(0.5)**(1 + floor(log2 round)): sqrt(0.5) for round 1,
    halved in steps each time the round counter crosses a power of two."""
    if round_index < 1:
        raise ParameterError(f"round index must be at least 1, got {round_index}")
    return 0.5 ** (round_index.bit_length() / 2.0)


@dataclass
class RegretLedger:
    """Cumulative utilities of the two fixed actions and of the realized play.

    In realized-only feedback the counterfactual send utility of idle rounds is
    unknowable; the ledger then flags itself incomplete and regret is measured
    against the idle baseline only.
    """

    u_send: float = 0.0
    u_idle: float = 0.0
    realized: float = 0.0
    rounds: int = 0
    counterfactual_complete: bool = True

    def record(self, realized_utility: float, send_utility: float | None, idle_utility: float = 0.0) -> None:
        if not math.isfinite(realized_utility):
            raise ParameterError("ledger entries must be finite")
        self.rounds += 1
        self.realized += realized_utility
        self.u_idle += idle_utility
        if send_utility is None:
            self.counterfactual_complete = False
        else:
            self.u_send += send_utility


def external_regret(ledger: RegretLedger) -> tuple[float, float]:
    """(total, per-round) gap between the best fixed action and the realized play."""
    if ledger.rounds < 1:
        raise ParameterError("regret needs at least one recorded round")
    best = max(ledger.u_send, ledger.u_idle) if ledger.counterfactual_complete else ledger.u_idle
    regret = best - ledger.realized
    return regret, regret / ledger.rounds


def best_fixed_action(ledger: RegretLedger) -> str:
    """Fixed action with the larger cumulative utility; ties go to idle."""
    if ledger.rounds < 1:
        raise ParameterError("no rounds recorded")
    return SEND if ledger.u_send > ledger.u_idle else IDLE


LEARNER_TRACE_FIELDS = ("round", "eta", "w_send", "w_idle", "p_send", "action", "loss_send", "loss_idle")


def dump_learner_trace(rows, path) -> None:
    """Debug CSV of per-round learner state; rows are mappings with the fields above."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(LEARNER_TRACE_FIELDS) + "\n")
        for row in rows:
            fh.write(",".join(repr(row[f]) if isinstance(row[f], float) else str(row[f]) for f in LEARNER_TRACE_FIELDS) + "\n")
