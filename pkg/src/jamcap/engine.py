"""Discrete-time simulation loop tying network, jammer, learners and phase policy together.

Each present link runs its own phase grid: at a phase start it draws send/idle
from its learner, holds the action for k steps, and at the phase end receives
losses (counterfactual ones for the unplayed action when the engine acts as
feedback oracle) and updates its weights. Success is evaluated per step under
the configured semantics; jammed steps are unsuccessful no matter what, and an
individually jammed link drops out of the transmit set for that step.

Runs are pure functions of their SimConfig: all randomness comes from streams
derived from the seed with fixed domain tags ("net", "adv", "link:<i>"), so
removing one link never perturbs another link's draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adversary import SCOPE_INDIVIDUAL, AdversaryParams, JamSchedule, build_schedule
from .errors import ConfigError, InvariantViolation, ParameterError, UsageError
from .interference import (
    EXACT_ORACLE_CAP,
    ConflictGraph,
    build_conflict_graph,
    max_feasible_set_exact,
    max_feasible_set_greedy,
    power_matrix,
    receiver_power_matrices,
    receiver_weight_matrices,
)
from .learning import (
    IDLE,
    ORACLE_COUNTERFACTUAL,
    REALIZED_ONLY,
    SEND,
    LearnerState,
    RegretLedger,
    eta_schedule,
    external_regret,
    rwm_choose,
    rwm_update,
)
from .net_model import NetworkInstance, PresenceInterval, SinrParams, generate_random_network
from .protocol import (
    KNOWN_DELTA_ONLY,
    KNOWN_WINDOW_DELTA,
    SIMULATION_VARIANT,
    SYNCHRONIZED_UNKNOWN_DELTA,
    PhasePolicy,
    delta_guess,
    guess_level,
    learn_scale,
    make_outcome,
    phase_losses,
    phase_utility,
    sim_loss,
    utility_to_loss,
)
from .seeding import derive_rng

SINGLE = "single"
TO_ONE = "to-one"
TO_ALL = "to-all"
TO_MANY = "to-many"
SEMANTICS = (SINGLE, TO_ONE, TO_ALL, TO_MANY)

MODEL_CONFLICT_GRAPH = "conflict-graph"
MODEL_SINR = "sinr"
SUCCESS_MODELS = (MODEL_CONFLICT_GRAPH, MODEL_SINR)

IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class NetworkGenParams:
    """Random-network recipe resolved into an instance at run start."""

    n: int
    plane_size: float
    max_sender_dist: float
    power: float
    sinr: SinrParams


@dataclass(frozen=True)
class SimConfig:
    network: NetworkInstance | NetworkGenParams
    policy: PhasePolicy
    horizon: int
    seed: int
    adversary: AdversaryParams | None = None
    feedback_mode: str = ORACLE_COUNTERFACTUAL
    semantics: str = SINGLE
    presence: tuple[PresenceInterval | None, ...] | None = None
    async_start: bool = False
    success_model: str = MODEL_CONFLICT_GRAPH
    eta: float | None = None  # fixed learning rate; None uses the doubling schedule
    store_trace: bool = False
    graph_override: ConflictGraph | None = None


@dataclass(frozen=True)
class PhaseRecord:
    start: int
    k: int
    level: int
    action: str
    successful_steps: int
    counterfactual_steps: int
    mu: float


@dataclass
class LinkStats:
    completed_phases: int = 0
    attempted_phases: int = 0
    successful_phases: int = 0
    counterfactual_failures: int = 0
    unjammed_steps: int = 0
    final_send_prob: float = 0.5
    ledger: RegretLedger = field(default_factory=RegretLedger)
    phase_log: list[PhaseRecord] | None = None
    learner_trace: list[dict] | None = None  # rows for learning.dump_learner_trace


@dataclass
class TimeStepRecord:
    t: int
    jammed: np.ndarray
    transmitting: np.ndarray
    successes: np.ndarray
    to_many_count: np.ndarray | None


@dataclass
class RunResult:
    config: SimConfig
    network: NetworkInstance
    graph: ConflictGraph
    schedule: JamSchedule | None
    throughput: np.ndarray  # per-step objective (success count; receiver count for to-many)
    num_successful: np.ndarray
    num_transmitting: np.ndarray
    per_link: list[LinkStats]
    trace: list[TimeStepRecord] | None

    @property
    def horizon(self) -> int:
        return self.config.horizon


def evaluate_semantics(
    per_receiver_bits: list[np.ndarray], semantics: str
) -> tuple[np.ndarray, np.ndarray]:
    """Fold per-receiver conflict-free bits into per-link success and receiver counts.

    to-all needs every receiver conflict-free, to-one at least one; to-many
    counts them (its success bit marks a positive count). single reads the sole
    receiver.
    """
    if semantics not in SEMANTICS:
        raise ConfigError(f"unknown semantics {semantics!r}")
    n = len(per_receiver_bits)
    success = np.zeros(n, dtype=bool)
    counts = np.zeros(n, dtype=np.int64)
    for v, bits in enumerate(per_receiver_bits):
        if semantics == SINGLE and len(bits) != 1:
            raise ConfigError("single semantics needs exactly one receiver per link")
        counts[v] = int(bits.sum())
        if semantics == TO_ALL:
            success[v] = bool(bits.all())
        elif semantics == SINGLE:
            success[v] = bool(bits[0])
        else:  # to-one, to-many
            success[v] = counts[v] >= 1
    return success, counts


class _Evaluator:
    """Vectorized would-succeed bits for all links against a transmit set.

    The bit for link v ignores x[v]: it answers whether v succeeds transmitting
    alongside x minus v, which equals the realized bit when v transmits and the
    counterfactual otherwise (a link never interferes with itself).
    """

    def __init__(self, network: NetworkInstance, graph: ConflictGraph, semantics: str, model: str):
        self.semantics = semantics
        self.model = model
        self.n = network.n
        self.single = semantics == SINGLE
        if self.single:
            if model == MODEL_CONFLICT_GRAPH:
                self.weights = graph.weights
            else:
                self.received, self.signal = power_matrix(network)
                self.beta = network.sinr.beta
                self.noise = network.sinr.noise
        else:
            if model == MODEL_CONFLICT_GRAPH:
                self.recv_weights = receiver_weight_matrices(network)
            else:
                self.recv_power = receiver_power_matrices(network)
                self.beta = network.sinr.beta
                self.noise = network.sinr.noise

    def step(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
        """(ok, counts): ok[v] as described above; counts only for to-many."""
        xf = x.astype(np.float64)
        if self.single:
            if self.model == MODEL_CONFLICT_GRAPH:
                ok = xf @ self.weights <= 1.0
            else:
                ok = self.signal >= self.beta * (xf @ self.received + self.noise)
            return ok, None
        bits = []
        for v in range(self.n):
            if self.model == MODEL_CONFLICT_GRAPH:
                bits.append(xf @ self.recv_weights[v] <= 1.0)
            else:
                received, signal = self.recv_power[v]
                bits.append(signal >= self.beta * (xf @ received + self.noise))
        success, counts = evaluate_semantics(bits, self.semantics)
        return success, counts if self.semantics == TO_MANY else None


def _resolve_network(config: SimConfig) -> NetworkInstance:
    if isinstance(config.network, NetworkInstance):
        return config.network
    p = config.network
    return generate_random_network(
        p.n, p.plane_size, p.max_sender_dist, p.sinr, p.power, derive_rng(config.seed, "net")
    )


def _validate(config: SimConfig, network: NetworkInstance) -> None:
    if config.semantics not in SEMANTICS:
        raise ConfigError(f"unknown semantics {config.semantics!r}")
    if config.success_model not in SUCCESS_MODELS:
        raise ConfigError(f"unknown success model {config.success_model!r}")
    if config.semantics == SINGLE and not network.is_single_receiver():
        raise ConfigError("single semantics requires exactly one receiver per link")
    if config.horizon < config.policy.k:
        raise ConfigError("horizon shorter than one phase")
    if config.policy.regime == SYNCHRONIZED_UNKNOWN_DELTA:
        if config.async_start:
            raise ConfigError("the synchronized regime requires a simultaneous start")
        if config.presence is not None:
            raise ConfigError("the synchronized regime does not support join/leave")
    if config.presence is not None and len(config.presence) != network.n:
        raise ConfigError("presence list must name one interval (or None) per link")
    if config.graph_override is not None:
        if config.graph_override.n != network.n:
            raise ConfigError("graph override size differs from the network")
        if config.success_model != MODEL_CONFLICT_GRAPH:
            raise ConfigError("a graph override only applies to conflict-graph evaluation")
    if config.feedback_mode not in (ORACLE_COUNTERFACTUAL, REALIZED_ONLY):
        raise ConfigError(f"unknown feedback mode {config.feedback_mode!r}")
    if config.eta is not None and not (0.0 <= config.eta < 1.0):
        raise ConfigError(f"fixed eta must be in [0, 1), got {config.eta}")


def presence_step_bounds(config: SimConfig, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-link [start, end) presence window in steps (phase units times k)."""
    k = config.policy.k
    starts = np.zeros(n, dtype=np.int64)
    ends = np.full(n, config.horizon, dtype=np.int64)
    if config.presence is not None:
        for v, interval in enumerate(config.presence):
            if interval is None:
                continue
            starts[v] = interval.join_phase * k
            if interval.leave_phase is not None:
                ends[v] = min(config.horizon, interval.leave_phase * k)
    return starts, ends


class _Link:
    """Per-link learner bank, ledger and open-phase bookkeeping."""

    __slots__ = (
        "idx", "rng", "states", "stats", "action", "level", "mu", "delta_used",
        "u_regime", "phase_start", "last_state", "feedback_mode",
    )

    def __init__(self, idx: int, rng, feedback_mode: str, trace: bool):
        self.idx = idx
        self.rng = rng
        self.feedback_mode = feedback_mode
        self.states: dict[int, LearnerState] = {}
        self.stats = LinkStats(
            phase_log=[] if trace else None, learner_trace=[] if trace else None
        )
        self.action = IDLE
        self.level = 0
        self.mu = 0.0
        self.delta_used = 1.0
        self.u_regime = KNOWN_WINDOW_DELTA
        self.phase_start = 0
        self.last_state: LearnerState | None = None

    def state_for(self, level: int) -> LearnerState:
        if level not in self.states:
            self.states[level] = LearnerState(feedback_mode=self.feedback_mode)
        return self.states[level]


def run_simulation(config: SimConfig) -> RunResult:
    """Run one deterministic simulation; see the module docstring for the loop contract."""
    network = _resolve_network(config)
    _validate(config, network)
    n = network.n
    policy = config.policy
    k = policy.k
    regime = policy.regime
    sync = regime == SYNCHRONIZED_UNKNOWN_DELTA
    oracle_mode = config.feedback_mode == ORACLE_COUNTERFACTUAL

    graph = config.graph_override
    if graph is None:
        graph = build_conflict_graph(network)
    evaluator = _Evaluator(network, graph, config.semantics, config.success_model)

    schedule = None
    if config.adversary is not None:
        schedule = build_schedule(config.adversary, config.horizon, n, derive_rng(config.seed, "adv"))
    individual = schedule is not None and schedule.params.scope == SCOPE_INDIVIDUAL
    jam_rows = schedule.bits if schedule is not None else None

    links = [
        _Link(v, derive_rng(config.seed, f"link:{v}"), config.feedback_mode, config.store_trace)
        for v in range(n)
    ]
    presence_starts, ends = presence_step_bounds(config, n)
    # the action grid starts at the presence start, shifted by a random offset
    # inside the first phase for links present from step 0
    starts = presence_starts.copy()
    if config.async_start:
        for v, link in enumerate(links):
            if starts[v] == 0:
                starts[v] += int(link.rng.integers(k))

    in_phase = np.zeros(n, dtype=bool)
    send_mask = np.zeros(n, dtype=bool)
    succ_acc = np.zeros(n, dtype=np.int64)
    cf_acc = np.zeros(n, dtype=np.int64)
    steps_acc = np.zeros(n, dtype=np.int64)

    throughput = np.zeros(config.horizon, dtype=np.float64)
    num_successful = np.zeros(config.horizon, dtype=np.int32)
    num_transmitting = np.zeros(config.horizon, dtype=np.int32)
    trace: list[TimeStepRecord] | None = [] if config.store_trace else None

    def finalize(v: int) -> None:
        link = links[v]
        stats = link.stats
        attempted = link.action == SEND
        realized = make_outcome(attempted, int(succ_acc[v]), k, link.mu)
        would_send = make_outcome(True, int(cf_acc[v]), k, link.mu)
        u_real = phase_utility(link.u_regime, realized, link.delta_used)
        u_send = phase_utility(link.u_regime, would_send, link.delta_used)

        state = link.states[link.level]
        state.eta = config.eta if config.eta is not None else eta_schedule(state.update_count + 1)
        scale = learn_scale(regime, k)
        if oracle_mode:
            stats.ledger.record(u_real, u_send)
            losses = phase_losses(
                SIMULATION_VARIANT if regime == SIMULATION_VARIANT else link.u_regime,
                would_send,
                link.delta_used,
                policy.idle_loss,
            )
            rwm_update(state, losses, scale)
        else:
            stats.ledger.record(u_real, u_send if attempted else None)
            if attempted:
                if regime == SIMULATION_VARIANT:
                    loss = sim_loss(realized, policy.idle_loss)[SEND]
                else:
                    loss = utility_to_loss(u_real)
                losses = {SEND: loss}
            else:
                idle = policy.idle_loss if regime == SIMULATION_VARIANT else utility_to_loss(0.0)
                losses = {IDLE: idle}
            rwm_update(state, losses, scale)
        link.last_state = state
        if stats.learner_trace is not None:
            stats.learner_trace.append(
                {
                    "round": state.update_count,
                    "eta": state.eta,
                    "w_send": state.w_send,
                    "w_idle": state.w_idle,
                    "p_send": state.send_probability,
                    "action": link.action,
                    "loss_send": losses.get(SEND, ""),
                    "loss_idle": losses.get(IDLE, ""),
                }
            )

        stats.completed_phases += 1
        stats.attempted_phases += int(attempted)
        stats.successful_phases += int(realized.success)
        stats.counterfactual_failures += int(not would_send.success)
        stats.final_send_prob = state.send_probability
        if stats.phase_log is not None:
            stats.phase_log.append(
                PhaseRecord(
                    start=link.phase_start,
                    k=k,
                    level=link.level,
                    action=link.action,
                    successful_steps=int(succ_acc[v]),
                    counterfactual_steps=int(cf_acc[v]),
                    mu=link.mu,
                )
            )
        in_phase[v] = False
        send_mask[v] = False

    def begin(v: int, t: int) -> None:
        link = links[v]
        if sync:
            phase_index = t // k + 1
            link.level = guess_level(phase_index, policy.j_max)
            link.delta_used = delta_guess(phase_index, policy.j_max)
            if policy.t_prime is not None:
                link.u_regime = KNOWN_WINDOW_DELTA
                link.mu = 0.5 * link.delta_used
            else:
                link.u_regime = KNOWN_DELTA_ONLY
                link.mu = 1.0
        else:
            link.level = 0
            link.delta_used = policy.delta_assumed
            link.mu = policy.mu
            link.u_regime = KNOWN_DELTA_ONLY if regime == KNOWN_DELTA_ONLY else KNOWN_WINDOW_DELTA
        state = link.state_for(link.level)
        link.action = rwm_choose(state, link.rng)
        link.phase_start = t
        in_phase[v] = True
        send_mask[v] = link.action == SEND
        succ_acc[v] = 0
        cf_acc[v] = 0
        steps_acc[v] = 0

    for t in range(config.horizon):
        done = np.flatnonzero(in_phase & (steps_acc == k))
        for v in done:
            finalize(int(v))
        in_window = (starts <= t) & (t < ends)
        boundary = in_window & ((t - starts) % k == 0)
        for v in np.flatnonzero(boundary):
            begin(int(v), t)

        x = send_mask & in_phase & in_window
        if individual:
            jam_col = jam_rows[:, t]
            x = x & ~jam_col
        ok, counts = evaluator.step(x)
        realized = ok & x
        cf_ok = ok.copy()
        if schedule is not None:
            if individual:
                realized &= ~jam_col
                cf_ok &= ~jam_col
                if counts is not None:
                    counts = np.where(jam_col | ~x, 0, counts)
                jam_snapshot = jam_col
            else:
                if jam_rows[0, t]:
                    realized[:] = False
                    cf_ok[:] = False
                    if counts is not None:
                        counts = np.zeros(n, dtype=np.int64)
                jam_snapshot = jam_rows[0, t : t + 1]
        else:
            jam_snapshot = np.zeros(1, dtype=bool)
        if counts is not None:
            counts = np.where(x, counts, 0)

        live = in_phase & in_window
        succ_acc += (realized & live).astype(np.int64)
        cf_acc += (cf_ok & live).astype(np.int64)
        steps_acc += live.astype(np.int64)

        num_transmitting[t] = int(x.sum())
        num_successful[t] = int(realized.sum())
        throughput[t] = float(counts.sum()) if counts is not None else float(realized.sum())
        if trace is not None:
            trace.append(
                TimeStepRecord(
                    t=t,
                    jammed=np.array(jam_snapshot, dtype=bool).copy(),
                    transmitting=x.copy(),
                    successes=realized.copy(),
                    to_many_count=counts.copy() if counts is not None else None,
                )
            )

    for v in np.flatnonzero(in_phase & (steps_acc == k)):
        finalize(int(v))

    for v, link in enumerate(links):
        if schedule is not None:
            link.stats.unjammed_steps = int(config.horizon - schedule.row(v).sum())
        else:
            link.stats.unjammed_steps = config.horizon

    return RunResult(
        config=config,
        network=network,
        graph=graph,
        schedule=schedule,
        throughput=throughput,
        num_successful=num_successful,
        num_transmitting=num_transmitting,
        per_link=[link.stats for link in links],
        trace=trace,
    )


def counterfactual_success(
    network: NetworkInstance,
    graph: ConflictGraph,
    schedule: JamSchedule | None,
    others: set[int] | frozenset[int] | tuple[int, ...],
    v: int,
    t: int,
    semantics: str = SINGLE,
    success_model: str = MODEL_CONFLICT_GRAPH,
) -> bool:
    """Would link v succeed at step t transmitting alongside `others`?

    False outright when (v, t) is jammed. `others` must not contain v.
    """
    members = set(int(u) for u in others)
    if v in members:
        raise UsageError("the probed link cannot be part of the other transmitters")
    if schedule is not None and schedule.row(v)[t]:
        return False
    x = np.zeros(network.n, dtype=bool)
    for u in members:
        x[u] = True
    x[v] = True
    if schedule is not None and schedule.params.scope == SCOPE_INDIVIDUAL:
        x = x & ~schedule.bits[:, t]
        x[v] = True  # v's own jam state was handled above
    ok, _ = _Evaluator(network, graph, semantics, success_model).step(x)
    return bool(ok[v])


@dataclass
class PropertyReport:
    """Per-link phase fractions and the derived learning-theory checks.

    q: fraction of completed phases with attempts; w: successful fraction;
    f: counterfactually-unsuccessful fraction (None without oracle feedback);
    eps: realized per-phase external regret; delta_prime: unjammed step fraction.
    """

    gamma: float
    eta_blocking: float
    q: np.ndarray
    w: np.ndarray
    f: np.ndarray | None
    eps: np.ndarray
    delta_prime: np.ndarray
    regret_vs_idle_pp: np.ndarray
    regret_vs_send_pp: np.ndarray | None
    successfulness_ok: bool
    blocking_ok: bool | None
    blocking_checked: bool
    eps_threshold_ok: bool
    attempt_bound_slack: float | None


def measure_properties(result: RunResult, gamma: float, eta_blocking: float) -> PropertyReport:
    """Derive q/w/f, regret and the declared-property flags from a finished run.

    For known-window runs the two per-phase regret identities
        regret-vs-idle = q - 2w        and
        regret-vs-send = (1 - 2f) - (2w - q)
    are restatements of the ledger arithmetic and are enforced here to 1e-9.
    The per-step regime's attempt bound q*delta/(2-delta) <= 2w + eps is
    enforced the same way.
    """
    if not (gamma > 0) or not (eta_blocking > 0):
        raise ParameterError("gamma and eta_blocking must be positive")
    n = len(result.per_link)
    regime = result.config.policy.regime
    oracle_mode = result.config.feedback_mode == ORACLE_COUNTERFACTUAL

    q = np.zeros(n)
    w = np.zeros(n)
    f = np.zeros(n)
    eps = np.zeros(n)
    rvi = np.zeros(n)
    rvs = np.zeros(n)
    delta_prime = np.zeros(n)
    for v, stats in enumerate(result.per_link):
        delta_prime[v] = stats.unjammed_steps / result.horizon
        rounds = stats.completed_phases
        if rounds == 0:
            continue
        q[v] = stats.attempted_phases / rounds
        w[v] = stats.successful_phases / rounds
        f[v] = stats.counterfactual_failures / rounds
        ledger = stats.ledger
        eps[v] = external_regret(ledger)[1]
        rvi[v] = (ledger.u_idle - ledger.realized) / rounds
        if ledger.counterfactual_complete:
            rvs[v] = (ledger.u_send - ledger.realized) / rounds

        if regime == KNOWN_WINDOW_DELTA:
            gap_idle = abs(rvi[v] - (q[v] - 2.0 * w[v]))
            if gap_idle > IDENTITY_TOL:
                raise InvariantViolation(f"idle-regret identity off by {gap_idle} on link {v}")
            if ledger.counterfactual_complete:
                gap_send = abs(rvs[v] - ((1.0 - 2.0 * f[v]) - (2.0 * w[v] - q[v])))
                if gap_send > IDENTITY_TOL:
                    raise InvariantViolation(f"send-regret identity off by {gap_send} on link {v}")

    attempt_slack = None
    if regime == KNOWN_DELTA_ONLY:
        d = result.config.policy.delta_assumed
        slack = 2.0 * w + eps - q * d / (2.0 - d)
        attempt_slack = float(slack.min()) if n else 0.0
        if attempt_slack < -IDENTITY_TOL:
            raise InvariantViolation(f"attempt bound violated by {-attempt_slack}")

    successfulness_ok = bool(np.all((2.0 * w + eps) / gamma >= q - 1e-12))
    blocking_checked = oracle_mode
    blocking_ok: bool | None = None
    if blocking_checked:
        incoming_attempts = q @ result.graph.weights  # sum_u b_u(v) * q_u
        rare = q <= eta_blocking / 4.0 + 1e-12
        blocking_ok = bool(
            np.all(f[rare] >= eta_blocking / 4.0 - 1e-12)
            and np.all(incoming_attempts[rare] >= eta_blocking / 8.0 - 1e-12)
        )
    eps_threshold_ok = bool(np.all(eps < gamma * eta_blocking / (4.0 * n)))

    return PropertyReport(
        gamma=gamma,
        eta_blocking=eta_blocking,
        q=q,
        w=w,
        f=f if oracle_mode else None,
        eps=eps,
        delta_prime=delta_prime,
        regret_vs_idle_pp=rvi,
        regret_vs_send_pp=rvs if oracle_mode else None,
        successfulness_ok=successfulness_ok,
        blocking_ok=blocking_ok,
        blocking_checked=blocking_checked,
        eps_threshold_ok=eps_threshold_ok,
        attempt_bound_slack=attempt_slack,
    )


@dataclass
class OptimumSeries:
    per_step: np.ndarray
    average: float
    single_slot_opt: int
    expected_average: float | None


ORACLE_EXACT = "exact"
ORACLE_GREEDY = "greedy"


def optimum_series(
    config: SimConfig,
    graph: ConflictGraph,
    schedule: JamSchedule | None,
    oracle: str = ORACLE_EXACT,
) -> OptimumSeries:
    """Per-step best feasible-set sizes an omniscient scheduler could reach.

    Global scope: 0 on jammed steps, otherwise the optimum over present links.
    Individual scope: optimum over the present links not jammed at that step.
    Also reports the no-jam single-slot optimum and, when a jammer with
    parameter delta is configured, the expected average delta * |OPT|.
    """
    if oracle not in (ORACLE_EXACT, ORACLE_GREEDY):
        raise ParameterError(f"unknown oracle {oracle!r}")
    n = graph.n
    if oracle == ORACLE_EXACT and n > EXACT_ORACLE_CAP:
        raise ParameterError(
            f"exact oracle capped at n={EXACT_ORACLE_CAP}; rerun with oracle='greedy'"
        )

    def solve(mask: np.ndarray) -> int:
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            return 0
        sub = ConflictGraph(
            weights=graph.weights[np.ix_(idx, idx)].copy(),
            receiver_choice=tuple(graph.receiver_choice[i] for i in idx),
        )
        best = max_feasible_set_exact(sub) if oracle == ORACLE_EXACT else max_feasible_set_greedy(sub)
        return len(best)

    starts, ends = presence_step_bounds(config, n)
    cache: dict[bytes, int] = {}
    per_step = np.zeros(config.horizon, dtype=np.int64)
    individual = schedule is not None and schedule.params.scope == SCOPE_INDIVIDUAL
    for t in range(config.horizon):
        present = (starts <= t) & (t < ends)
        if schedule is not None and not individual and schedule.bits[0, t]:
            continue
        avail = present & ~schedule.bits[:, t] if individual else present
        key = avail.tobytes()
        if key not in cache:
            cache[key] = solve(avail)
        per_step[t] = cache[key]

    full = np.ones(n, dtype=bool)
    single_slot = solve(full)
    expected = None
    if schedule is not None:
        expected = schedule.params.delta * single_slot
    return OptimumSeries(
        per_step=per_step,
        average=float(per_step.mean()),
        single_slot_opt=single_slot,
        expected_average=expected,
    )


def max_to_many_objective(
    network: NetworkInstance, cap: int = 15, success_model: str = MODEL_SINR
) -> int:
    """Exhaustive best per-step receiver count over all transmit sets (small n only).

    Defaults to SINR evaluation: clipped conflict-graph weights cannot express a
    single fatal interferer, which is the whole point of the gap instance.
    """
    n = network.n
    if n > cap:
        raise ParameterError(f"exhaustive to-many optimum capped at n={cap}")
    graph = build_conflict_graph(network)
    evaluator = _Evaluator(network, graph, TO_MANY, success_model)
    best = 0
    for mask in range(1, 1 << n):
        x = np.array([(mask >> v) & 1 for v in range(n)], dtype=bool)
        _, counts = evaluator.step(x)
        best = max(best, int(np.where(x, counts, 0).sum()))
    return best
