import csv
import json
from pathlib import Path

import numpy as np
import pytest

from jamcap.cli import (
    ExperimentSpec,
    build_runs,
    main,
    parse_config,
    resolve_config,
    run_experiment,
    write_outputs,
)
from jamcap.errors import ConfigError
from jamcap.net_model import SinrParams, generate_random_network
from jamcap.seeding import derive_rng

DESK = {
    "n": 6,
    "plane_size": 300.0,
    "max_sender_dist": 60.0,
    "horizon_phases": 30,
    "num_seeds": 2,
    "adversary": {"kind": "stochastic", "scope": "global", "delta": 0.8},
    "policy": {"regime": "simulation-variant", "delta_assumed": 0.8},
}


class TestResolve:
    def test_empty_fig1_config_gets_the_reference_defaults(self):
        spec = resolve_config({}, "fig1")
        doc = spec.resolved
        assert doc["n"] == 200 and doc["plane_size"] == 1000.0 and doc["max_sender_dist"] == 100.0
        assert (doc["alpha"], doc["beta"], doc["noise"], doc["power"]) == (2.1, 1.1, 4e-7, 2.0)
        assert doc["adversary"]["delta"] == 0.8 and doc["adversary"]["kind"] == "stochastic"
        assert doc["policy"]["regime"] == "simulation-variant"
        assert doc["policy"]["idle_loss"] == 0.5

    def test_out_of_range_delta_names_the_key(self):
        with pytest.raises(ConfigError, match="adversary.delta"):
            resolve_config({"adversary": {"delta": 1.5}})

    def test_unknown_keys_listed(self):
        with pytest.raises(ConfigError, match="mystery"):
            resolve_config({"mystery": 1})
        with pytest.raises(ConfigError, match="typo"):
            resolve_config({"policy": {"typo": 1}})

    def test_desk_scale_override_accepted(self):
        spec = resolve_config({"n": 20, "plane_size": 300.0})
        assert spec.resolved["n"] == 20 and spec.resolved["plane_size"] == 300.0

    def test_multi_receiver_semantics_needs_a_network_file(self):
        with pytest.raises(ConfigError, match="network_file"):
            resolve_config({"semantics": "to-many"})

    def test_round_trip_through_the_echo(self, tmp_path):
        spec = resolve_config(DESK)
        echo = tmp_path / "echo.json"
        echo.write_text(json.dumps(spec.resolved))
        again = parse_config(echo)
        assert again == spec


@pytest.fixture(scope="module")
def outputs(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp") / "out"
    spec = resolve_config(DESK)
    results = run_experiment(spec, parallelism=1, out_dir=out, force=False)
    return out, spec, results


class TestRunExperiment:

    def test_layout_and_link_row_count(self, outputs):
        out, spec, results = outputs
        assert (out / "summary.json").exists()
        assert (out / "resolved_config.json").exists()
        assert (out / "aggregate.csv").exists()
        series = sorted((out / "runs").glob("*_series.csv"))
        links = sorted((out / "runs").glob("*_links.csv"))
        assert len(series) == 2 and len(links) == 2
        with open(links[0]) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == DESK["n"]

    def test_series_columns(self, outputs):
        out, _, _ = outputs
        series = sorted((out / "runs").glob("*_series.csv"))[0]
        with open(series) as fh:
            header = fh.readline().strip().split(",")
        assert header == ["t", "jammed", "num_transmitting", "num_successful", "opt_t"]

    def test_summary_echoes_the_resolved_seed(self, outputs):
        out, spec, _ = outputs
        summary = json.loads((out / "summary.json").read_text())
        assert summary["schema_version"] == 1
        assert summary["resolved_config"]["seed"] == spec.resolved["seed"]
        assert len(summary["runs"]) == 2
        assert summary["failures"] == []

    def test_refuses_to_overwrite_without_force(self, outputs):
        out, spec, results = outputs
        with pytest.raises(FileExistsError):
            write_outputs(results, spec, out, force=False)
        write_outputs(results, spec, out, force=True)

    def test_csv_floats_round_trip(self, outputs):
        out, _, results = outputs
        links = sorted((out / "runs").glob("*_links.csv"))[0]
        with open(links) as fh:
            rows = list(csv.DictReader(fh))
        for row, link_row in zip(rows, results[0]["link_rows"]):
            assert float(row["q"]) == link_row["q"]
            assert float(row["send_prob_final"]) == link_row["send_prob_final"]


def test_parallel_merge_is_byte_identical(tmp_path):
    spec = resolve_config({**DESK, "num_seeds": 3, "horizon_phases": 10})
    out1, out2 = tmp_path / "p1", tmp_path / "p2"
    run_experiment(spec, parallelism=1, out_dir=out1)
    run_experiment(spec, parallelism=2, out_dir=out2)
    for path1 in sorted(out1.rglob("*.csv")):
        path2 = out2 / path1.relative_to(out1)
        assert path1.read_bytes() == path2.read_bytes(), path1.name


def test_fig1_series_format(tmp_path):
    config = {
        "n": 6,
        "plane_size": 300.0,
        "max_sender_dist": 60.0,
        "horizon_phases": 12,
        "num_seeds": 1,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config))
    out = tmp_path / "fig1"
    code = main(["fig1", "--config", str(cfg_path), "--out", str(out)])
    assert code == 0
    series = sorted((out / "runs").glob("*_series.csv"))
    assert len(series) == 2  # global and individual variants
    with open(series[0]) as fh:
        header = fh.readline().strip().split(",")
    assert header == ["t", "successes", "opt_t", "expected_opt"]


def test_fig2_aggregate_follows_the_unjammed_rule(tmp_path):
    config = {
        "n": 5,
        "plane_size": 300.0,
        "max_sender_dist": 60.0,
        "horizon_phases": 10,
        "num_seeds": 3,
        "delta_sweep": [0.35, 0.9],
        "delta_actual": 0.35,
    }
    spec = resolve_config(config, "fig2")
    out = tmp_path / "fig2"
    results = run_experiment(spec, parallelism=1, out_dir=out)
    assert spec.resolved["adversary"]["scope"] == "global"
    assert spec.resolved["adversary"]["delta"] == 0.35

    with open(out / "aggregate.csv") as fh:
        rows = list(csv.DictReader(fh))
    groups = {row["group"] for row in rows}
    assert groups == {"delta0.35", "delta0.9"}
    # recompute the rule for one (group, t) cell from the raw payloads
    group_rows = [r for r in rows if r["group"] == "delta0.35"]
    payloads = [p for p in results if p["group"] == "delta0.35"]
    for t in (0, 3, 7):
        contributing = [
            p["num_successful"][t] for p in payloads if p["unjammed_mask"][t]
        ]
        expected = float(np.mean(contributing)) if contributing else 0.0
        cell = [r for r in group_rows if int(r["t"]) == t][0]
        assert float(cell["mean_successes"]) == pytest.approx(expected)
        assert int(cell["runs_counted"]) == len(contributing)


def test_validate_schedule_subcommand(tmp_path):
    from jamcap.adversary import AdversaryParams, JamSchedule, build_schedule

    params = AdversaryParams(kind="bounded", scope="global", delta=0.5, t_prime=6, strategy="prefix-burst")
    sched = build_schedule(params, 60, 1, derive_rng(0, "adv"))
    good = tmp_path / "good.json"
    good.write_text(sched.to_rle_json())
    assert main(["validate-schedule", "--schedule", str(good)]) == 0

    bad_sched = JamSchedule(horizon=60, bits=np.ones((1, 60), dtype=bool), params=params)
    bad = tmp_path / "bad.json"
    bad.write_text(bad_sched.to_rle_json())
    assert main(["validate-schedule", "--schedule", str(bad)]) == 4


def test_opt_subcommand(tmp_path, capsys):
    net = generate_random_network(5, 200.0, 40.0, SinrParams(2.1, 1.1, 4e-7), 2.0, derive_rng(1, "net"))
    path = tmp_path / "net.json"
    path.write_text(net.to_json())
    assert main(["opt", "--network", str(path)]) == 0
    out = capsys.readouterr().out
    assert "size=" in out and "oracle=exact" in out


def test_main_reports_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"adversary": {"delta": 2.0}}))
    code = main(["run", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert code == 2


def test_main_refuses_existing_out_dir(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({**DESK, "num_seeds": 1, "horizon_phases": 5}))
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 3
    assert main(["run", "--config", str(cfg), "--out", str(out), "--force"]) == 0


def test_fig2_default_sweep_has_five_curves(tmp_path):
    config = {"n": 4, "plane_size": 300.0, "max_sender_dist": 50.0, "horizon_phases": 5, "num_seeds": 1}
    spec = resolve_config(config, "fig2")
    out = tmp_path / "five"
    run_experiment(spec, parallelism=1, out_dir=out)
    with open(out / "aggregate.csv") as fh:
        groups = {row["group"] for row in csv.DictReader(fh)}
    assert groups == {"delta0.2", "delta0.35", "delta0.6", "delta0.7", "delta0.9"}


def test_presence_key_reaches_the_engine(tmp_path):
    config = {
        **DESK,
        "num_seeds": 1,
        "horizon_phases": 12,
        "presence": [None, [2, 6], [0, None], None, None, None],
    }
    spec = resolve_config(config)
    results = run_experiment(spec, parallelism=1)
    assert "error" not in results[0]


def test_windowed_aggregate_smoothing(tmp_path):
    config = {**DESK, "num_seeds": 1, "horizon_phases": 6, "window": 4}
    out = tmp_path / "smooth"
    results = run_experiment(resolve_config(config), parallelism=1, out_dir=out)
    with open(out / "aggregate.csv") as fh:
        rows = list(csv.DictReader(fh))
    raw = results[0]["num_successful"].astype(float)
    # trailing mean over the last 4 steps, shorter at the left edge
    for t in (0, 2, 5, 11):
        lo = max(0, t + 1 - 4)
        expected = raw[lo : t + 1].mean()
        assert float(rows[t]["mean_successes"]) == pytest.approx(expected)
