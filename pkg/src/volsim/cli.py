"""Command-line interface: experiment orchestration and metric emission.

Verbs: simulate, train-rl, train-predictor, sweep, pso-trace. One JSON
config document drives everything; --seed/--seeds override the scenario
seed per run. Outputs are plot-ready CSV series plus a summary.json.

Exit codes: 0 success, 1 usage/parse error, 2 runtime/validation error.
Set VOL_LOG (DEBUG/INFO/WARNING/ERROR) for log verbosity.
"""

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from volsim import predictor as predictor_mod
from volsim import pso as pso_mod
from volsim import rl as rl_mod
from volsim import simengine
from volsim.config import config_to_dict, default_config, parse_config, parse_dict
from volsim.errors import (ConfigParseError, InvalidConfigError,
                           MissingModelError, VolsimError)
from volsim.mobility import STREAM_POLICY, seeded_stream
from volsim.strategies import (GreedyOracleStrategy, HybridStrategy,
                               LocalOnlyStrategy, NearestStrategy,
                               RandomStrategy, RecordingStrategy)

log = logging.getLogger("volsim")

BASELINE_STRATEGIES = ("local", "nearest", "random", "greedy")
ALL_STRATEGIES = BASELINE_STRATEGIES + ("hybrid",)


@dataclass(frozen=True)
class RunManifest:
    mode: str
    config_path: str | None
    strategies: tuple
    seeds: tuple
    out_dir: str
    qtable_path: str | None = None
    predictor_path: str | None = None


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def load_app_config(path):
    return parse_config(path) if path else default_config()


def load_qtable(path):
    with open(path, encoding="utf-8") as fh:
        return rl_mod.QTable.from_json_dict(json.load(fh))


def load_predictor(path):
    with open(path, encoding="utf-8") as fh:
        return predictor_mod.LinearModel.from_json_dict(json.load(fh))


def build_strategy(name, app, seed, qtable=None, model=None):
    """Instantiate a named strategy for one run seed."""
    weights = app.weights
    if name == "local":
        return LocalOnlyStrategy()
    if name == "nearest":
        return NearestStrategy()
    if name == "random":
        return RandomStrategy(seeded_stream(seed, STREAM_POLICY))
    if name == "greedy":
        return GreedyOracleStrategy(weights)
    if name == "hybrid":
        if qtable is None or model is None:
            raise MissingModelError(
                "hybrid strategy requires --qtable and --predictor model files")
        bins = rl_mod.BinSpec.from_scenario(app.scenario, app.channel)
        return HybridStrategy(model, qtable, weights, bins=bins,
                              pso_config=app.pso)
    raise InvalidConfigError(f"unknown strategy '{name}' "
                             f"(expected one of {', '.join(ALL_STRATEGIES)})")


def write_metrics_csv(path, outcomes):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task_id", "decision", "status", "latency_s",
                         "energy_j", "completed_at"])
        for o in sorted(outcomes, key=lambda o: o.task_id):
            writer.writerow([o.task_id, o.decision.label(), o.status,
                             _fmt(o.latency_s), _fmt(o.energy_j),
                             _fmt(o.completed_at)])


def run_single(config_dict, strategy_name, seed, out_dir,
               qtable_path=None, predictor_path=None):
    """One (strategy, seed) run: writes its metrics CSV, returns the record.

    Takes plain JSON-able inputs so it can execute in a worker process.
    """
    app = parse_dict(config_dict)
    scenario = replace(app.scenario, seed=seed)
    qtable = load_qtable(qtable_path) if qtable_path else None
    model = load_predictor(predictor_path) if predictor_path else None
    strategy = build_strategy(strategy_name, app, seed, qtable=qtable, model=model)
    outcomes = []
    started = time.perf_counter()
    report = simengine.run(scenario, strategy, channel=app.channel,
                           weights=app.weights, outcome_sink=outcomes)
    wall = time.perf_counter() - started
    write_metrics_csv(os.path.join(out_dir, f"metrics_{strategy_name}_{seed}.csv"),
                      outcomes)
    record = {
        "strategy": strategy_name,
        "seed": seed,
        "mean_latency_s": report.mean_latency_s,
        "mean_energy_j": report.mean_energy_j,
        "offloading_ratio": report.offloading_ratio,
        "throughput_bps": report.throughput_bps,
        "failure_rate": report.failure_rate,
        "channel_utilization": report.channel_utilization,
        "mean_reward": report.reward_history[0] if report.reward_history else 0.0,
        "totals": dict(report.totals),
        "total_tasks": report.total_tasks,
        "wall_clock_s": wall,
    }
    return record


def _run_single_star(args):
    return run_single(*args)


def write_summary(path, records):
    records = sorted(records, key=lambda r: (r["strategy"], r["seed"]))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"runs": records}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def bootstrap_ci(values, n_boot=5000, seed=0, alpha=0.05):
    """Percentile bootstrap CI for the mean of `values`."""
    arr = np.asarray(values, dtype=float)
    if len(arr) == 1:
        return float(arr[0]), float(arr[0])
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.integers(0, len(arr), size=(n_boot, len(arr)))
    means = arr[idx].mean(axis=1)
    lo, hi = np.quantile(means, [alpha / 2.0, 1.0 - alpha / 2.0])
    return float(lo), float(hi)


def write_fig_csvs(out_dir, records):
    """Aggregate per-strategy series for the comparison figures."""
    by_strategy = {}
    for rec in sorted(records, key=lambda r: (r["strategy"], r["seed"])):
        by_strategy.setdefault(rec["strategy"], []).append(rec)

    def mean(rows, key):
        return sum(r[key] for r in rows) / len(rows)

    with open(os.path.join(out_dir, "fig_latency_energy.csv"), "w",
              newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "mean_latency_s", "latency_ci_lo",
                         "latency_ci_hi", "mean_energy_j", "energy_ci_lo",
                         "energy_ci_hi"])
        for name, rows in by_strategy.items():
            lat = [r["mean_latency_s"] for r in rows]
            en = [r["mean_energy_j"] for r in rows]
            lat_ci = bootstrap_ci(lat)
            en_ci = bootstrap_ci(en)
            writer.writerow([name, _fmt(mean(rows, "mean_latency_s")),
                             _fmt(lat_ci[0]), _fmt(lat_ci[1]),
                             _fmt(mean(rows, "mean_energy_j")),
                             _fmt(en_ci[0]), _fmt(en_ci[1])])
    with open(os.path.join(out_dir, "fig_offload_throughput.csv"), "w",
              newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "offloading_ratio", "throughput_bps"])
        for name, rows in by_strategy.items():
            writer.writerow([name, _fmt(mean(rows, "offloading_ratio")),
                             _fmt(mean(rows, "throughput_bps"))])
    with open(os.path.join(out_dir, "fig_failure_channel.csv"), "w",
              newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "failure_rate", "channel_utilization"])
        for name, rows in by_strategy.items():
            writer.writerow([name, _fmt(mean(rows, "failure_rate")),
                             _fmt(mean(rows, "channel_utilization"))])


def write_series_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# -- verbs --------------------------------------------------------------


def cmd_simulate(args):
    manifest = _manifest("simulate", args, strategies=(args.strategy,),
                         seeds=(args.seed,))
    app = load_app_config(manifest.config_path)
    record = run_single(config_to_dict(app), args.strategy,
                        manifest.seeds[0], manifest.out_dir,
                        qtable_path=manifest.qtable_path,
                        predictor_path=manifest.predictor_path)
    write_summary(os.path.join(manifest.out_dir, "summary.json"), [record])
    printable = {k: v for k, v in record.items() if k != "totals"}
    print(json.dumps(printable, indent=2, sort_keys=True))
    return 0


def cmd_sweep(args):
    strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    seeds = _parse_seeds(args.seeds)
    manifest = _manifest("sweep", args, strategies=strategies, seeds=seeds)
    app = load_app_config(manifest.config_path)
    if "hybrid" in strategies and not (manifest.qtable_path and manifest.predictor_path):
        raise MissingModelError(
            "hybrid strategy requires --qtable and --predictor model files")
    config_dict = config_to_dict(app)
    jobs = args.jobs if args.jobs and args.jobs > 0 else (os.cpu_count() or 1)
    run_args = [(config_dict, name, seed, manifest.out_dir,
                 manifest.qtable_path, manifest.predictor_path)
                for name in strategies for seed in seeds]
    if jobs == 1 or len(run_args) == 1:
        records = [_run_single_star(a) for a in run_args]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(run_args))) as pool:
            records = list(pool.map(_run_single_star, run_args))
    write_summary(os.path.join(manifest.out_dir, "summary.json"), records)
    write_fig_csvs(manifest.out_dir, records)
    log.info("sweep complete: %d runs into %s", len(records), manifest.out_dir)
    return 0


def cmd_train_rl(args):
    manifest = _manifest("train-rl", args, strategies=("rl",), seeds=(args.seed,))
    app = load_app_config(manifest.config_path)
    scenario = replace(app.scenario, seed=manifest.seeds[0])
    rl_cfg = app.rl if args.episodes is None else replace(app.rl, episodes=args.episodes)
    qtable, rewards = rl_mod.train(scenario, rl_cfg, channel=app.channel,
                                   weights=app.weights)
    with open(os.path.join(manifest.out_dir, "qtable.json"), "w",
              encoding="utf-8") as fh:
        json.dump(qtable.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_series_csv(os.path.join(manifest.out_dir, "fig_reward_convergence.csv"),
                     ["episode", "mean_reward"],
                     [(ep, r) for ep, r in enumerate(rewards)])
    log.info("trained %d episodes; qtable has %d visited states",
             len(rewards), len(qtable.table))
    return 0


def collect_observations(app, base_seed, min_count):
    """Greedy-policy runs over consecutive seeds until enough observations."""
    observations = []
    seed = base_seed
    while len(observations) < min_count:
        recorder = RecordingStrategy(GreedyOracleStrategy(app.weights))
        scenario = replace(app.scenario, seed=seed)
        simengine.run(scenario, recorder, channel=app.channel, weights=app.weights)
        observations.extend(recorder.observations)
        seed += 1
        if seed - base_seed > 500:
            raise InvalidConfigError(
                "scenario generates too few observations to collect a dataset")
    return observations


def cmd_train_predictor(args):
    manifest = _manifest("train-predictor", args, strategies=("predictor",),
                         seeds=(args.seed,))
    app = load_app_config(manifest.config_path)
    observations = collect_observations(app, manifest.seeds[0], args.samples)
    dataset = predictor_mod.label_dataset(observations, app.weights)
    model = predictor_mod.train_model(dataset, epochs=args.epochs,
                                      learning_rate=args.learning_rate)
    with open(os.path.join(manifest.out_dir, "predictor.json"), "w",
              encoding="utf-8") as fh:
        json.dump(model.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_series_csv(os.path.join(manifest.out_dir, "predictor_dataset.csv"),
                     ["log10_size_bits", "intensity", "log10_rate_bps",
                      "backlog_s", "speed", "candidate_count", "label"],
                     [tuple(x) + (y,) for x, y in dataset])
    log.info("trained predictor on %d rows; final loss %.6f",
             len(dataset), model.loss_history[-1] if model.loss_history else 0.0)
    return 0


def cmd_pso_trace(args):
    manifest = _manifest("pso-trace", args, strategies=("pso",), seeds=(args.seed,))
    app = load_app_config(manifest.config_path)
    observations = collect_observations(app, manifest.seeds[0], args.window_size)
    window = observations[:args.window_size]
    _, best, history = pso_mod.optimize_window(window, app.weights, app.pso,
                                               seed=manifest.seeds[0])
    write_series_csv(os.path.join(manifest.out_dir, "fig_pso_convergence.csv"),
                     ["iteration", "best_fitness"],
                     [(i, f) for i, f in enumerate(history)])
    log.info("pso trace over %d tasks: best fitness %.6f", len(window), best)
    return 0


# -- argument plumbing --------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigParseError(message)


def _parse_seeds(text):
    try:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigParseError(f"invalid --seeds list {text!r}") from exc
    if not seeds:
        raise ConfigParseError("--seeds must name at least one seed")
    return seeds


def _manifest(mode, args, strategies, seeds):
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise InvalidConfigError(f"output directory {out_dir} is not writable")
    return RunManifest(mode=mode, config_path=args.config, strategies=strategies,
                       seeds=seeds, out_dir=out_dir,
                       qtable_path=getattr(args, "qtable", None),
                       predictor_path=getattr(args, "predictor", None))


def _add_common(sub):
    sub.add_argument("--config", default=None, help="JSON config file")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--seed", type=int, default=1, help="scenario seed")


def build_parser():
    parser = _Parser(prog="volsim", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("simulate", help="run one strategy on one seed")
    _add_common(p)
    p.add_argument("--strategy", default="greedy", help="strategy name")
    p.add_argument("--qtable", default=None, help="trained Q-table JSON (hybrid)")
    p.add_argument("--predictor", default=None, help="trained predictor JSON (hybrid)")
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("sweep", help="strategies x seeds comparison runs")
    _add_common(p)
    p.add_argument("--strategies", default="local,nearest,greedy")
    p.add_argument("--seeds", default="1,2,3", help="comma-separated seed list")
    p.add_argument("--jobs", type=int, default=0, help="parallel workers (0 = auto)")
    p.add_argument("--qtable", default=None)
    p.add_argument("--predictor", default=None)
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("train-rl", help="train the Q-learning agent")
    _add_common(p)
    p.add_argument("--episodes", type=int, default=None, help="override episode count")
    p.set_defaults(func=cmd_train_rl)

    p = subs.add_parser("train-predictor", help="train the offload classifier")
    _add_common(p)
    p.add_argument("--samples", type=int, default=5000, help="min labeled rows")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.set_defaults(func=cmd_train_predictor)

    p = subs.add_parser("pso-trace", help="emit one PSO convergence series")
    _add_common(p)
    p.add_argument("--window-size", type=int, default=8)
    p.set_defaults(func=cmd_pso_trace)

    return parser


def main(argv=None):
    logging.basicConfig(level=os.environ.get("VOL_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except VolsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
