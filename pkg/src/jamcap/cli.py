"""Experiment orchestration and command-line entry points.

Subcommands: run (one swept experiment from a JSON config), fig1 and fig2
(preset experiment recipes), validate-schedule (check a serialized jam
schedule against its own window bound) and opt (one-shot feasible-set oracle
on a serialized network instance).

Exit codes: 0 success, 2 configuration/schema error, 3 output refusal or I/O
error, 4 validation or run failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adversary import (
    KIND_BOUNDED,
    KIND_EXACT,
    SCOPE_GLOBAL,
    SCOPE_INDIVIDUAL,
    AdversaryParams,
    JamSchedule,
    validate_bounded,
)
from .engine import (
    MODEL_CONFLICT_GRAPH,
    ORACLE_EXACT,
    ORACLE_GREEDY,
    SINGLE,
    SimConfig,
    max_to_many_objective,
    measure_properties,
    optimum_series,
    run_simulation,
)
from .errors import ConfigError, JamcapError
from .interference import (
    EXACT_ORACLE_CAP,
    build_conflict_graph,
    graph_to_csv,
    max_feasible_set_exact,
    max_feasible_set_greedy,
)
from .learning import ORACLE_COUNTERFACTUAL
from .net_model import NetworkInstance, PresenceInterval, SinrParams, generate_random_network
from .protocol import PhasePolicy
from .seeding import derive_rng

SCHEMA_VERSION = 1

_ADVERSARY_KEYS = {"kind", "scope", "delta", "t_prime", "strategy", "correlation"}
_POLICY_KEYS = {"regime", "delta_assumed", "t_prime", "idle_loss", "j_max"}

_DEFAULTS: dict = {
    "experiment": "run",
    "n": 200,
    "plane_size": 1000.0,
    "max_sender_dist": 100.0,
    "alpha": 2.1,
    "beta": 1.1,
    "noise": 4e-7,
    "power": 2.0,
    "network_file": None,
    "adversary": {
        "kind": "stochastic",
        "scope": "individual",
        "delta": 0.8,
        "t_prime": None,
        "strategy": "random-in-period",
        "correlation": "independent",
    },
    "policy": {
        "regime": "simulation-variant",
        "delta_assumed": 0.8,
        "t_prime": None,
        "idle_loss": 0.5,
        "j_max": 6,
    },
    "horizon_phases": 500,
    "semantics": "single",
    "feedback_mode": ORACLE_COUNTERFACTUAL,
    "async_start": True,
    "success_model": MODEL_CONFLICT_GRAPH,
    "eta": None,
    "store_trace": False,
    "seed": 1,
    "seeds": None,
    "num_seeds": 1,
    "networks": 1,
    "delta_sweep": [0.2, 0.35, 0.6, 0.7, 0.9],
    "delta_actual": 0.35,
    "oracle": "auto",
    "gamma": 1.0,
    "eta_blocking": 1.0,
    "presence": None,
    "window": 1,
}


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully resolved experiment: name plus the echoed configuration document."""

    name: str
    resolved: dict


def _merge(user: dict, experiment: str | None) -> dict:
    doc = copy.deepcopy(_DEFAULTS)
    if experiment is not None:
        doc["experiment"] = experiment
    unknown = sorted(set(user) - set(_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for sub, allowed in (("adversary", _ADVERSARY_KEYS), ("policy", _POLICY_KEYS)):
        if sub in user and user[sub] is not None:
            bad = sorted(set(user[sub]) - allowed)
            if bad:
                raise ConfigError(f"unknown {sub} keys: {', '.join(bad)}")
    for key, value in user.items():
        if key in ("adversary", "policy") and value is not None:
            doc[key] = {**doc[key], **value}
        else:
            doc[key] = copy.deepcopy(value)
    if doc["experiment"] == "fig2" and "adversary" not in user:
        doc["adversary"] = {**doc["adversary"], "scope": "global", "delta": doc["delta_actual"]}
    return doc


def _check_delta(value, name: str) -> None:
    if not (isinstance(value, (int, float)) and 0.0 < value <= 1.0):
        raise ConfigError(f"{name} must be in (0, 1], got {value!r}")


def resolve_config(user: dict, experiment: str | None = None) -> ExperimentSpec:
    """Merge a user document over the defaults and validate every field."""
    doc = _merge(user, experiment)
    if doc["experiment"] not in ("run", "fig1", "fig2"):
        raise ConfigError(f"unknown experiment {doc['experiment']!r}")
    if doc["adversary"] is not None:
        _check_delta(doc["adversary"]["delta"], "adversary.delta")
    _check_delta(doc["policy"]["delta_assumed"], "policy.delta_assumed")
    _check_delta(doc["delta_actual"], "delta_actual")
    for d in doc["delta_sweep"]:
        _check_delta(d, "delta_sweep entry")
    for key in ("n", "horizon_phases", "num_seeds", "networks", "window"):
        if not (isinstance(doc[key], int) and doc[key] >= 1):
            raise ConfigError(f"{key} must be a positive integer, got {doc[key]!r}")
    if doc["oracle"] not in ("auto", ORACLE_EXACT, ORACLE_GREEDY):
        raise ConfigError(f"oracle must be auto, exact or greedy, got {doc['oracle']!r}")
    if doc["network_file"] is None and doc["semantics"] != SINGLE:
        raise ConfigError("multi-receiver semantics need an explicit network_file")
    # constructing these validates the remaining fields
    _policy_from(doc)
    _adversary_from(doc, doc["policy"]["delta_assumed"])
    return ExperimentSpec(name=doc["experiment"], resolved=doc)


def parse_config(path) -> ExperimentSpec:
    with open(path) as fh:
        try:
            user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    return resolve_config(user)


def _policy_from(doc: dict, delta_override: float | None = None) -> PhasePolicy:
    p = doc["policy"]
    return PhasePolicy.make(
        regime=p["regime"],
        delta_assumed=delta_override if delta_override is not None else p["delta_assumed"],
        t_prime=p["t_prime"],
        idle_loss=p["idle_loss"],
        j_max=p["j_max"],
    )


def _adversary_from(doc: dict, _delta_assumed: float) -> AdversaryParams | None:
    a = doc["adversary"]
    if a is None:
        return None
    return AdversaryParams(
        kind=a["kind"],
        scope=a["scope"],
        delta=a["delta"],
        t_prime=a["t_prime"],
        strategy=a["strategy"],
        correlation=a["correlation"],
    )


def _presence_from(doc: dict):
    if doc["presence"] is None:
        return None
    return tuple(
        None if entry is None else PresenceInterval(entry[0], entry[1])
        for entry in doc["presence"]
    )


def _networks_for(spec: ExperimentSpec) -> list[NetworkInstance]:
    doc = spec.resolved
    if doc["network_file"] is not None:
        return [NetworkInstance.from_json(Path(doc["network_file"]).read_text())]
    sinr = SinrParams(alpha=doc["alpha"], beta=doc["beta"], noise=doc["noise"])
    return [
        generate_random_network(
            doc["n"],
            doc["plane_size"],
            doc["max_sender_dist"],
            sinr,
            doc["power"],
            derive_rng(doc["seed"], f"net:{i}"),
        )
        for i in range(doc["networks"])
    ]


def _seeds_for(spec: ExperimentSpec) -> list[int]:
    doc = spec.resolved
    if doc["seeds"] is not None:
        return [int(s) for s in doc["seeds"]]
    return [doc["seed"] + j for j in range(doc["num_seeds"])]


@dataclass(frozen=True)
class RunPlan:
    label: str
    group: str
    config: SimConfig
    oracle: str
    series_format: str  # "engine" or "fig1"
    gamma: float
    eta_blocking: float


def build_runs(spec: ExperimentSpec) -> list[RunPlan]:
    """Expand an experiment into an ordered, deterministic list of runs."""
    doc = spec.resolved
    networks = _networks_for(spec)
    seeds = _seeds_for(spec)
    presence = _presence_from(doc)
    oracle = doc["oracle"]
    if oracle == "auto":
        n = networks[0].n
        oracle = ORACLE_EXACT if n <= EXACT_ORACLE_CAP else ORACLE_GREEDY

    def config_for(network, seed, policy, adversary) -> SimConfig:
        return SimConfig(
            network=network,
            policy=policy,
            horizon=doc["horizon_phases"] * policy.k,
            seed=seed,
            adversary=adversary,
            feedback_mode=doc["feedback_mode"],
            semantics=doc["semantics"],
            presence=presence,
            async_start=doc["async_start"],
            success_model=doc["success_model"],
            eta=doc["eta"],
            store_trace=doc["store_trace"],
        )

    plans: list[RunPlan] = []
    if doc["experiment"] == "fig1":
        policy = _policy_from(doc)
        for scope in (SCOPE_GLOBAL, SCOPE_INDIVIDUAL):
            adv = doc["adversary"]
            adversary = AdversaryParams(
                kind=adv["kind"],
                scope=scope,
                delta=adv["delta"],
                t_prime=adv["t_prime"],
                strategy=adv["strategy"],
                correlation=adv["correlation"],
            )
            for i, network in enumerate(networks):
                for seed in seeds:
                    plans.append(
                        RunPlan(
                            label=f"{scope}_net{i}_seed{seed}",
                            group=scope,
                            config=config_for(network, seed, policy, adversary),
                            oracle=oracle,
                            series_format="fig1",
                            gamma=doc["gamma"],
                            eta_blocking=doc["eta_blocking"],
                        )
                    )
    elif doc["experiment"] == "fig2":
        adversary = _adversary_from(doc, doc["delta_actual"])
        for delta_assumed in doc["delta_sweep"]:
            policy = _policy_from(doc, delta_override=delta_assumed)
            for i, network in enumerate(networks):
                for seed in seeds:
                    plans.append(
                        RunPlan(
                            label=f"delta{delta_assumed}_net{i}_seed{seed}",
                            group=f"delta{delta_assumed}",
                            config=config_for(network, seed, policy, adversary),
                            oracle=oracle,
                            series_format="engine",
                            gamma=doc["gamma"],
                            eta_blocking=doc["eta_blocking"],
                        )
                    )
    else:
        policy = _policy_from(doc)
        adversary = _adversary_from(doc, doc["policy"]["delta_assumed"])
        for i, network in enumerate(networks):
            for seed in seeds:
                plans.append(
                    RunPlan(
                        label=f"net{i}_seed{seed}",
                        group="run",
                        config=config_for(network, seed, policy, adversary),
                        oracle=oracle,
                        series_format="engine",
                        gamma=doc["gamma"],
                        eta_blocking=doc["eta_blocking"],
                    )
                )
    return plans


def execute_run(plan: RunPlan) -> dict:
    """Run one plan and reduce it to a serializable payload."""
    result = run_simulation(plan.config)
    opt = optimum_series(plan.config, result.graph, result.schedule, oracle=plan.oracle)
    report = measure_properties(result, gamma=plan.gamma, eta_blocking=plan.eta_blocking)

    if result.schedule is None:
        jammed = np.zeros(result.horizon, dtype=np.int64)
        unjammed_mask = np.ones(result.horizon, dtype=bool)
    elif result.schedule.params.scope == SCOPE_GLOBAL:
        jammed = result.schedule.bits[0].astype(np.int64)
        unjammed_mask = ~result.schedule.bits[0]
    else:
        jammed = result.schedule.bits.sum(axis=0)
        unjammed_mask = jammed == 0

    link_rows = []
    for v, stats in enumerate(result.per_link):
        link_rows.append(
            {
                "link": v,
                "q": report.q[v],
                "w": report.w[v],
                "f": report.f[v] if report.f is not None else "",
                "regret_per_phase": report.eps[v],
                "send_prob_final": stats.final_send_prob,
            }
        )
    unjammed_steps = int(unjammed_mask.sum())
    return {
        "label": plan.label,
        "group": plan.group,
        "seed": plan.config.seed,
        "series_format": plan.series_format,
        "link_rows": link_rows,
        "t": np.arange(result.horizon),
        "jammed": jammed,
        "unjammed_mask": unjammed_mask,
        "num_transmitting": result.num_transmitting,
        "num_successful": result.num_successful,
        "throughput": result.throughput,
        "opt_per_step": opt.per_step,
        "single_slot_opt": opt.single_slot_opt,
        "expected_opt": opt.expected_average if opt.expected_average is not None else opt.average,
        "summary": {
            "label": plan.label,
            "group": plan.group,
            "seed": plan.config.seed,
            "total_throughput": float(result.throughput.sum()),
            "mean_unjammed_throughput": float(result.throughput[unjammed_mask].mean())
            if unjammed_steps
            else 0.0,
            "single_slot_opt": opt.single_slot_opt,
            "average_opt": opt.average,
            "final_send_prob_mean": float(
                np.mean([s.final_send_prob for s in result.per_link])
            ),
            "successfulness_ok": report.successfulness_ok,
            "blocking_ok": report.blocking_ok,
            "eps_threshold_ok": report.eps_threshold_ok,
        },
    }


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def write_outputs(results: list[dict], spec: ExperimentSpec, out_dir, force: bool = False) -> None:
    """Write per-run CSVs, the aggregate CSV, the summary and the config echo."""
    out = Path(out_dir)
    if out.exists() and not force:
        raise FileExistsError(f"output directory {out} exists; pass --force to overwrite")
    (out / "runs").mkdir(parents=True, exist_ok=True)

    for payload in results:
        if "error" in payload:
            continue
        label = payload["label"]
        if payload["series_format"] == "fig1":
            header = ["t", "successes", "opt_t", "expected_opt"]
            rows = zip(
                payload["t"],
                payload["num_successful"],
                payload["opt_per_step"],
                np.full(len(payload["t"]), payload["expected_opt"]),
            )
        else:
            header = ["t", "jammed", "num_transmitting", "num_successful", "opt_t"]
            rows = zip(
                payload["t"],
                payload["jammed"],
                payload["num_transmitting"],
                payload["num_successful"],
                payload["opt_per_step"],
            )
        _write_csv(out / "runs" / f"{label}_series.csv", header, rows)
        _write_csv(
            out / "runs" / f"{label}_links.csv",
            ["link", "q", "w", "f", "regret_per_phase", "send_prob_final"],
            (
                [r["link"], r["q"], r["w"], r["f"], r["regret_per_phase"], r["send_prob_final"]]
                for r in payload["link_rows"]
            ),
        )

    _write_aggregate(results, spec, out / "aggregate.csv")

    summary = {
        "schema_version": SCHEMA_VERSION,
        "experiment": spec.name,
        "resolved_config": spec.resolved,
        "runs": [p["summary"] for p in results if "error" not in p],
        "failures": [
            {"label": p["label"], "error": p["error"]} for p in results if "error" in p
        ],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    (out / "resolved_config.json").write_text(json.dumps(spec.resolved, indent=2))


def _trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return values
    prefix = np.concatenate([[0.0], np.cumsum(values)])
    starts = np.maximum(0, np.arange(len(values)) + 1 - window)
    return (prefix[1:] - prefix[starts]) / (np.arange(len(values)) + 1 - starts)


def _write_aggregate(results: list[dict], spec: ExperimentSpec, path: Path) -> None:
    """Long-format per-group means; for fig2 a step only averages runs whose
    channel was unjammed at that step. A window above 1 smooths each curve with
    a trailing mean."""
    unjammed_only = spec.name == "fig2"
    window = spec.resolved["window"]
    groups: dict[str, list[dict]] = {}
    for payload in results:
        if "error" in payload:
            continue
        groups.setdefault(payload["group"], []).append(payload)
    rows = []
    for group in sorted(groups):
        payloads = groups[group]
        horizon = min(len(p["t"]) for p in payloads)
        succ = np.stack([p["num_successful"][:horizon] for p in payloads]).astype(float)
        if unjammed_only:
            counted = np.stack([p["unjammed_mask"][:horizon] for p in payloads])
        else:
            counted = np.ones_like(succ, dtype=bool)
        counts = counted.sum(axis=0)
        sums = (succ * counted).sum(axis=0)
        with np.errstate(invalid="ignore"):
            means = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
        means = _trailing_mean(means, window)
        for t in range(horizon):
            rows.append([group, t, means[t], int(counts[t])])
    _write_csv(path, ["group", "t", "mean_successes", "runs_counted"], rows)


def run_experiment(
    spec: ExperimentSpec, parallelism: int = 1, out_dir=None, force: bool = False
) -> list[dict]:
    """Execute every planned run (optionally in parallel) and optionally write outputs.

    Results come back in plan order regardless of parallelism; individual run
    failures are recorded and do not stop the sweep.
    """
    plans = build_runs(spec)
    if parallelism <= 1:
        results = [_safe_execute(plan) for plan in plans]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_safe_execute, plans))
    if out_dir is not None:
        write_outputs(results, spec, out_dir, force=force)
    return results


def _safe_execute(plan: RunPlan) -> dict:
    try:
        return execute_run(plan)
    except Exception as exc:  # sweep keeps going; the failure lands in the summary
        return {"label": plan.label, "group": plan.group, "error": f"{type(exc).__name__}: {exc}"}


def _cmd_experiment(args, experiment: str | None) -> int:
    if args.config:
        with open(args.config) as fh:
            user = json.load(fh)
    else:
        user = {}
    if args.seed is not None:
        user["seed"] = args.seed
    spec = resolve_config(user, experiment)
    results = run_experiment(spec, parallelism=args.parallel, out_dir=args.out, force=args.force)
    failures = [p for p in results if "error" in p]
    for p in failures:
        print(f"run {p['label']} failed: {p['error']}", file=sys.stderr)
    print(f"{len(results) - len(failures)}/{len(results)} runs completed; outputs in {args.out}")
    return 4 if failures else 0


def _cmd_validate_schedule(args) -> int:
    schedule = JamSchedule.from_rle_json(Path(args.schedule).read_text())
    params = schedule.params
    if params.kind == KIND_BOUNDED:
        ok, violation = validate_bounded(schedule, params.t_prime, params.delta)
        if ok:
            print("valid: every window respects the jam budget")
            return 0
        print(
            f"invalid: row {violation.row} window [{violation.start}, "
            f"{violation.start + violation.length}) has {violation.count} jams "
            f"(allowed {violation.allowed})"
        )
        return 4
    if params.kind == KIND_EXACT:
        jams = round((1.0 - params.delta) * params.t_prime)
        for r, row in enumerate(schedule.bits):
            prefix = np.concatenate([[0], np.cumsum(row.astype(np.int64))])
            counts = prefix[params.t_prime :] - prefix[: -params.t_prime]
            if not np.all(counts == jams):
                s = int(np.flatnonzero(counts != jams)[0])
                print(f"invalid: row {r} window [{s}, {s + params.t_prime}) does not carry {jams} jams")
                return 4
        print(f"valid: every length-{params.t_prime} window carries exactly {jams} jams")
        return 0
    fraction = float(schedule.bits.mean())
    print(f"stochastic schedule: empirical jam fraction {fraction:.4f} (target {1 - params.delta:.4f})")
    return 0


def _cmd_opt(args) -> int:
    network = NetworkInstance.from_json(Path(args.network).read_text())
    graph = build_conflict_graph(network)
    oracle = args.oracle
    if oracle == "auto":
        oracle = ORACLE_EXACT if network.n <= EXACT_ORACLE_CAP else ORACLE_GREEDY
    best = max_feasible_set_exact(graph) if oracle == ORACLE_EXACT else max_feasible_set_greedy(graph)
    print(f"oracle={oracle} size={len(best)} links={list(best)}")
    if args.to_many:
        print(f"to-many objective optimum: {max_to_many_objective(network)}")
    if args.graph_csv:
        graph_to_csv(graph, args.graph_csv)
        print(f"conflict graph written to {args.graph_csv}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="jamcap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_experiment(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the base seed")
        p.add_argument("--parallel", type=int, default=1, help="concurrent runs")
        p.add_argument("--force", action="store_true", help="overwrite an existing output dir")
        return p

    add_experiment("run", "run a swept experiment from a config file")
    add_experiment("fig1", "throughput-vs-time recipe against global and individual jammers")
    add_experiment("fig2", "assumed-delta sweep against a fixed global jammer")

    v = sub.add_parser("validate-schedule", help="check a serialized jam schedule")
    v.add_argument("--schedule", required=True, help="RLE JSON schedule file")

    o = sub.add_parser("opt", help="feasible-set oracle on a serialized network")
    o.add_argument("--network", required=True, help="network JSON file")
    o.add_argument("--oracle", choices=["auto", ORACLE_EXACT, ORACLE_GREEDY], default="auto")
    o.add_argument("--to-many", action="store_true", help="also print the to-many optimum")
    o.add_argument("--graph-csv", default=None, help="write the conflict graph as CSV")

    args = parser.parse_args(argv)
    try:
        if args.command in ("run", "fig1", "fig2"):
            experiment = None if args.command == "run" else args.command
            return _cmd_experiment(args, experiment)
        if args.command == "validate-schedule":
            return _cmd_validate_schedule(args)
        return _cmd_opt(args)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileExistsError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    except (OSError, JamcapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
