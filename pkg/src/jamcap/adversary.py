"""Jamming schedules: window-bounded, window-exact and per-step stochastic jammers.

Scopes: a global jammer blocks the whole channel for a step; an individual
jammer decides per (step, link). Schedules are fixed before the run (the
jammers are oblivious) and immutable afterwards.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError

KIND_BOUNDED = "bounded"
KIND_EXACT = "exact"
KIND_STOCHASTIC = "stochastic"
KINDS = (KIND_BOUNDED, KIND_EXACT, KIND_STOCHASTIC)

SCOPE_GLOBAL = "global"
SCOPE_INDIVIDUAL = "individual"
SCOPES = (SCOPE_GLOBAL, SCOPE_INDIVIDUAL)

STRATEGY_RANDOM_IN_PERIOD = "random-in-period"
STRATEGY_PREFIX_BURST = "prefix-burst"
STRATEGY_RANDOM_CAPPED = "random-capped"
STRATEGIES = (STRATEGY_RANDOM_IN_PERIOD, STRATEGY_PREFIX_BURST, STRATEGY_RANDOM_CAPPED)

CORRELATION_INDEPENDENT = "independent"
CORRELATION_SHARED_COIN = "shared-coin"
CORRELATIONS = (CORRELATION_INDEPENDENT, CORRELATION_SHARED_COIN)

_EXACT_TOL = 1e-9


@dataclass(frozen=True)
class AdversaryParams:
    kind: str
    scope: str
    delta: float  # fraction of time left unjammed, in (0, 1]
    t_prime: int | None = None
    strategy: str = STRATEGY_RANDOM_IN_PERIOD
    correlation: str = CORRELATION_INDEPENDENT

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown adversary kind {self.kind!r}")
        if self.scope not in SCOPES:
            raise ParameterError(f"unknown adversary scope {self.scope!r}")
        if not (0.0 < self.delta <= 1.0):
            raise ParameterError(f"delta must be in (0, 1], got {self.delta}")
        if self.kind in (KIND_BOUNDED, KIND_EXACT):
            if self.t_prime is None or self.t_prime < 1:
                raise ParameterError(f"{self.kind} adversary needs a window length t_prime >= 1")
        if self.strategy not in STRATEGIES:
            raise ParameterError(f"unknown bounded strategy {self.strategy!r}")
        if self.correlation not in CORRELATIONS:
            raise ParameterError(f"unknown correlation {self.correlation!r}")
        if self.kind == KIND_EXACT:
            target = (1.0 - self.delta) * self.t_prime
            if abs(target - round(target)) > _EXACT_TOL:
                raise ParameterError(
                    f"(1-delta)*t_prime = {target} is not integral; the exact jammer "
                    "needs a whole number of jammed steps per window"
                )


@dataclass(frozen=True, eq=False)
class JamSchedule:
    """Per-step jam indicators: one row for a global jammer, one row per link otherwise."""

    horizon: int
    bits: np.ndarray  # bool, shape (1, horizon) or (n_links, horizon)
    params: AdversaryParams

    def __post_init__(self):
        if self.bits.ndim != 2 or self.bits.shape[1] != self.horizon:
            raise ParameterError("jam bits must have one row per scope entry and horizon columns")
        if self.params.scope == SCOPE_GLOBAL and self.bits.shape[0] != 1:
            raise ParameterError("global schedules carry exactly one row")

    def row(self, link: int) -> np.ndarray:
        return self.bits[0] if self.params.scope == SCOPE_GLOBAL else self.bits[link]

    def unjammed_fraction(self, link: int = 0) -> float:
        return 1.0 - float(self.row(link).mean())

    def to_rle_json(self) -> str:
        rows = []
        for row in self.bits:
            runs = []
            start = 0
            flat = row.astype(np.int8)
            changes = np.flatnonzero(np.diff(flat)) + 1
            for stop in list(changes) + [self.horizon]:
                runs.append([int(flat[start]), int(stop - start)])
                start = stop
            rows.append(runs)
        return json.dumps({"horizon": self.horizon, "params": asdict(self.params), "rows": rows})

    @staticmethod
    def from_rle_json(text: str) -> "JamSchedule":
        doc = json.loads(text)
        params = AdversaryParams(**doc["params"])
        rows = []
        for runs in doc["rows"]:
            row = np.zeros(doc["horizon"], dtype=bool)
            pos = 0
            for bit, length in runs:
                row[pos : pos + length] = bool(bit)
                pos += length
            if pos != doc["horizon"]:
                raise ParameterError("run lengths do not cover the horizon")
            rows.append(row)
        return JamSchedule(horizon=doc["horizon"], bits=np.array(rows), params=params)


def is_jammed(schedule: JamSchedule, t: int, link: int = 0) -> bool:
    if not (0 <= t < schedule.horizon):
        raise IndexError(f"time step {t} outside horizon {schedule.horizon}")
    return bool(schedule.row(link)[t])


def bounded_jams_per_window(delta: float, t_prime: int) -> int:
    """Largest per-period jam count for which any cyclic placement keeps every
    window of length >= t_prime at or below a (1-delta) jammed fraction.

    A cyclic period with J jams gives any window of length m*T'+r exactly
    m*J + c(r) jams with c(r) <= min(J, r); J*(1+delta) <= (1-delta)*T' makes
    that never exceed (1-delta)*(m*T'+r).
    """
    return max(0, math.floor((1.0 - delta) * t_prime / (1.0 + delta) + 1e-12))


def _cyclic(period: np.ndarray, horizon: int) -> np.ndarray:
    reps = -(-horizon // len(period))
    return np.tile(period, reps)[:horizon]


def _exact_row(t_prime: int, delta: float, horizon: int, rng: np.random.Generator) -> np.ndarray:
    jams = round((1.0 - delta) * t_prime)
    period = np.zeros(t_prime, dtype=bool)
    period[rng.choice(t_prime, size=jams, replace=False)] = True
    return _cyclic(period, horizon)


def _bounded_row(params: AdversaryParams, horizon: int, rng: np.random.Generator) -> np.ndarray:
    t_prime = params.t_prime
    budget = bounded_jams_per_window(params.delta, t_prime)
    if params.strategy == STRATEGY_PREFIX_BURST:
        period = np.zeros(t_prime, dtype=bool)
        period[:budget] = True
        return _cyclic(period, horizon)
    if params.strategy == STRATEGY_RANDOM_IN_PERIOD:
        period = np.zeros(t_prime, dtype=bool)
        if budget:
            period[rng.choice(t_prime, size=budget, replace=False)] = True
        return _cyclic(period, horizon)
    # random-capped: free sampling, then unjam the latest step of the first
    # violating window until the whole row validates.
    row = rng.random(horizon) < (1.0 - params.delta)
    while True:
        violation = _first_violation(row, t_prime, params.delta)
        if violation is None:
            return row
        s, length = violation
        jammed = np.flatnonzero(row[s : s + length])
        row[s + jammed[-1]] = False


def build_schedule(
    params: AdversaryParams, horizon: int, n_links: int, rng: np.random.Generator
) -> JamSchedule:
    """Materialize a schedule for the given horizon.

    exact: one random period with exactly round((1-delta)*t_prime) jams, repeated
    cyclically, so every window of that length carries exactly that count.
    bounded: per strategy, valid by construction for every window length.
    stochastic: each step jammed independently with probability 1-delta
    (individual scope: fresh coins per link, or one shared coin per step).
    """
    if horizon < 1:
        raise ParameterError(f"horizon must be at least 1, got {horizon}")
    rows = n_links if params.scope == SCOPE_INDIVIDUAL else 1

    if params.kind == KIND_EXACT:
        bits = np.stack([_exact_row(params.t_prime, params.delta, horizon, rng) for _ in range(rows)])
    elif params.kind == KIND_BOUNDED:
        bits = np.stack([_bounded_row(params, horizon, rng) for _ in range(rows)])
    else:
        if params.scope == SCOPE_INDIVIDUAL and params.correlation == CORRELATION_SHARED_COIN:
            coin = rng.random(horizon) < (1.0 - params.delta)
            bits = np.tile(coin, (rows, 1))
        else:
            bits = rng.random((rows, horizon)) < (1.0 - params.delta)
    return JamSchedule(horizon=horizon, bits=bits, params=params)


@dataclass(frozen=True)
class WindowViolation:
    row: int
    start: int
    length: int
    count: int
    allowed: float


def _first_violation(row: np.ndarray, t_prime: int, delta: float) -> tuple[int, int] | None:
    """Smallest (length, start) window of length >= t_prime whose jam count
    exceeds a (1-delta) fraction; None when the row is compliant."""
    horizon = len(row)
    prefix = np.concatenate([[0], np.cumsum(row.astype(np.int64))])
    for length in range(t_prime, horizon + 1):
        counts = prefix[length:] - prefix[:-length]
        allowed = (1.0 - delta) * length + 1e-9
        bad = np.flatnonzero(counts > allowed)
        if bad.size:
            return int(bad[0]), length
    return None


def validate_bounded(
    schedule: JamSchedule, t_prime: int, delta: float
) -> tuple[bool, WindowViolation | None]:
    """Check every window of every length >= t_prime in every row; O(horizon^2).

    Returns (True, None) or (False, first violating window).
    """
    if t_prime > schedule.horizon:
        raise ParameterError("t_prime exceeds the schedule horizon")
    for r, row in enumerate(schedule.bits):
        hit = _first_violation(row, t_prime, delta)
        if hit is not None:
            s, length = hit
            count = int(row[s : s + length].sum())
            return False, WindowViolation(
                row=r, start=s, length=length, count=count, allowed=(1.0 - delta) * length
            )
    return True, None
