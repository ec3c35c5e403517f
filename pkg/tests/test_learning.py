import math

import numpy as np
import pytest

from jamcap.errors import ParameterError
from jamcap.learning import (
    IDLE,
    SEND,
    LearnerState,
    RegretLedger,
    best_fixed_action,
    eta_schedule,
    external_regret,
    rwm_choose,
    rwm_update,
)
from jamcap.seeding import derive_rng


class TestChoose:
    def test_uniform_weights_split_evenly(self):
        state = LearnerState()
        rng = derive_rng(0, "choose")
        draws = sum(rwm_choose(state, rng) == SEND for _ in range(100_000))
        assert abs(draws / 100_000 - 0.5) < 0.01

    def test_weighted_probabilities(self):
        state = LearnerState(w_send=0.5, w_idle=1.0)
        assert state.send_probability == pytest.approx(1 / 3)
        rng = derive_rng(1, "choose")
        draws = sum(rwm_choose(state, rng) == SEND for _ in range(100_000))
        assert abs(draws / 100_000 - 1 / 3) < 0.01

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(ParameterError):
            LearnerState(w_send=1.0, w_idle=0.0)

    def test_consumes_exactly_one_draw(self):
        a, b = derive_rng(2, "choose"), derive_rng(2, "choose")
        state = LearnerState()
        rwm_choose(state, a)
        b.random()
        assert a.random() == b.random()


class TestUpdate:
    def test_hand_evaluated_shrink(self):
        state = LearnerState(eta=0.5)
        rwm_update(state, {SEND: 1.0, IDLE: 0.0})
        assert (state.w_send, state.w_idle) == (0.5, 1.0)

    def test_zero_losses_leave_weights_alone(self):
        state = LearnerState(eta=0.5)
        rwm_update(state, {SEND: 0.0, IDLE: 0.0})
        assert (state.w_send, state.w_idle) == (1.0, 1.0)

    def test_scale_multiplies_the_exponent(self):
        state = LearnerState(eta=0.5)
        rwm_update(state, {SEND: 1.0}, scale=4.0)
        assert state.w_send == pytest.approx(0.0625)

    def test_loss_range_enforced(self):
        state = LearnerState(eta=0.1)
        with pytest.raises(ParameterError):
            rwm_update(state, {SEND: 1.5})
        with pytest.raises(ParameterError):
            rwm_update(state, {SEND: -0.1})

    def test_weights_nonincreasing_under_nonnegative_losses(self):
        state = LearnerState(eta=0.3)
        rng = derive_rng(3, "update")
        for _ in range(200):
            before = (state.w_send, state.w_idle)
            rwm_update(state, {SEND: rng.random(), IDLE: rng.random()}, scale=1 + rng.random() * 4)
            assert state.w_send <= before[0] and state.w_idle <= before[1]

    def test_underflow_rescale_preserves_distribution(self):
        state = LearnerState(w_send=1.8e-300, w_idle=1.2e-300, eta=0.5)
        expected = (1.8 * 0.5) / (1.8 * 0.5 + 1.2 * 0.5)  # distribution if no rescale happened
        rwm_update(state, {SEND: 1.0, IDLE: 1.0})  # both drop below the floor
        assert max(state.w_send, state.w_idle) == 1.0  # rescaled by the max
        assert state.send_probability == pytest.approx(expected, abs=1e-12)


class TestEtaSchedule:
    def test_named_rounds(self):
        assert eta_schedule(1) == pytest.approx(0.70711, abs=5e-6)
        assert eta_schedule(2) == 0.5
        assert eta_schedule(3) == 0.5
        assert eta_schedule(7) == pytest.approx(0.35355, abs=5e-6)

    def test_halving_lands_on_powers_of_two(self):
        for m in range(1, 10):
            assert eta_schedule(2**m) == pytest.approx(0.5 ** ((m + 1) / 2))
            assert eta_schedule(2**m - 1) == pytest.approx(0.5 ** (m / 2))

    def test_round_zero_rejected(self):
        with pytest.raises(ParameterError):
            eta_schedule(0)


class TestLedger:
    def test_realized_matches_best_gives_zero(self):
        ledger = RegretLedger()
        for u in (1.0, -1.0, 1.0):
            ledger.record(u, u)
        assert external_regret(ledger)[0] == pytest.approx(max(1.0, 0.0) - 1.0)

    def test_mixed_play_can_beat_every_fixed_action(self):
        # send utilities (+1, -1, +1), play (send, idle, send): realized 2, best fixed 1
        ledger = RegretLedger()
        ledger.record(1.0, 1.0)
        ledger.record(0.0, -1.0)
        ledger.record(1.0, 1.0)
        total, per_round = external_regret(ledger)
        assert total == -1.0
        assert per_round == pytest.approx(-1 / 3)

    def test_always_idle_against_good_send(self):
        ledger = RegretLedger()
        for _ in range(3):
            ledger.record(0.0, 1.0)
        assert external_regret(ledger)[0] == 3.0

    def test_incremental_equals_trace_recount(self):
        rng = derive_rng(4, "ledger")
        ledger = RegretLedger()
        trace = []
        for _ in range(500):
            u_send = float(rng.uniform(-1, 1))
            realized = u_send if rng.random() < 0.5 else 0.0
            ledger.record(realized, u_send)
            trace.append((realized, u_send))
        best = max(sum(t[1] for t in trace), 0.0)
        realized_total = sum(t[0] for t in trace)
        assert external_regret(ledger)[0] == best - realized_total

    def test_best_fixed_action_tie_goes_to_idle(self):
        ledger = RegretLedger()
        ledger.record(0.0, 0.0)
        assert best_fixed_action(ledger) == IDLE
        ledger.record(0.0, 5.0)
        assert best_fixed_action(ledger) == SEND
        down = RegretLedger()
        down.record(0.0, -3.0)
        assert best_fixed_action(down) == IDLE

    def test_empty_ledger_rejected(self):
        with pytest.raises(ParameterError):
            external_regret(RegretLedger())


def test_light_no_regret_property():
    # shorter version of the acceptance gate: 5 sequences at T=2000
    T = 2000
    eta = math.sqrt(math.log(2) / T)
    bound = 2 * math.sqrt(math.log(2) / T)
    rng = derive_rng(5, "noregret")
    for trial in range(5):
        losses = rng.random((T, 2))
        state = LearnerState(eta=eta)
        ledger = RegretLedger()
        draw = derive_rng(trial, "noregret-draws")
        for t in range(T):
            action = rwm_choose(state, draw)
            realized = losses[t, 0] if action == SEND else losses[t, 1]
            ledger.record(-realized, -losses[t, 0], -losses[t, 1])
            rwm_update(state, {SEND: losses[t, 0], IDLE: losses[t, 1]})
        assert external_regret(ledger)[1] <= bound


def test_choice_distribution_is_proper():
    rng = derive_rng(6, "proper")
    for _ in range(100):
        state = LearnerState(w_send=float(rng.uniform(1e-6, 5.0)), w_idle=float(rng.uniform(1e-6, 5.0)))
        p = state.send_probability
        assert 0.0 < p < 1.0


def test_learner_trace_dump(tmp_path):
    from jamcap.learning import dump_learner_trace
    from jamcap.engine import SimConfig, run_simulation
    from jamcap.net_model import SinrParams, generate_random_network
    from jamcap.protocol import PhasePolicy

    net = generate_random_network(2, 200.0, 40.0, SinrParams(2.1, 1.1, 4e-7), 2.0, derive_rng(30, "net"))
    cfg = SimConfig(
        network=net,
        policy=PhasePolicy.make("known-tprime-delta", delta_assumed=1.0, t_prime=4),
        horizon=40,
        seed=1,
        store_trace=True,
    )
    res = run_simulation(cfg)
    path = tmp_path / "trace.csv"
    dump_learner_trace(res.per_link[0].learner_trace, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "round,eta,w_send,w_idle,p_send,action,loss_send,loss_idle"
    assert len(lines) == 1 + res.per_link[0].completed_phases
