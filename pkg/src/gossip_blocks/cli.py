"""Command line entry point: ``gossip-blocks <subcommand>``.

Exit codes: 0 success, 1 invalid model or input, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .analysis import analysis_report
from .harness import experiment_streams, load_karate, monte_carlo_stationarity, run_karate
from .model import (InvalidModelError, default_prior, load_model_config, read_edge_list, to_general,
                    validate_block_model, validate_network)
from .detector import init_detector, track
from .simulator import initial_state, sample_path


class InputError(Exception):
    pass


def _emit(text: str, path) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _stubborn_arg(items) -> dict[int, float]:
    out = {}
    for item in items or ():
        key, _, value = item.partition("=")
        if not value:
            raise InputError(f"--stubborn expects ID=VALUE, got {item!r}")
        out[int(key)] = float(value)
    return out


def _load_model(path):
    try:
        return load_model_config(path)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"bad model config {path}: {exc}") from exc


def _load_edges(path, stubborn):
    try:
        return read_edge_list(path, _stubborn_arg(stubborn))
    except ValueError as exc:
        raise InputError(f"bad edge list {path}: {exc}") from exc


def _initial_from_config(net, x_r0, stream):
    if x_r0 is None:
        return initial_state(net, None, stream)
    x = np.zeros(net.n)
    if len(x_r0) != len(net.regular):
        raise InputError(f"x_r0 has {len(x_r0)} entries, expected {len(net.regular)}")
    x[net.regular] = x_r0
    x[net.stubborn_index] = net.x_s
    return x


def cmd_validate(args) -> int:
    if args.model:
        m, _, _ = _load_model(args.model)
        report = validate_block_model(m)
        if report.ok:
            report = type(report)(validate_network(to_general(m)).errors, report.warnings)
    else:
        report = validate_network(_load_edges(args.edges, args.stubborn))
    _emit(_json(report.to_dict()), None)
    return 0 if report.ok else 1


def cmd_analyze(args) -> int:
    m, _, _ = _load_model(args.model)
    _emit(_json(analysis_report(m)), args.out)
    return 0


def cmd_simulate(args) -> int:
    seed = args.seed
    if args.model:
        m, cfg_seed, x_r0 = _load_model(args.model)
        net = to_general(m)
        seed = cfg_seed if seed is None else seed
    else:
        net = _load_edges(args.edges, args.stubborn)
        validate_network(net).raise_if_invalid()
        x_r0 = None
    seed = 0 if seed is None else seed
    s_x0, s_dyn, _ = experiment_streams(seed)
    x0 = _initial_from_config(net, x_r0, s_x0)
    times, states = sample_path(net, x0, args.steps, s_dyn, args.log_every)
    cols = net.regular if args.regular_only else np.arange(net.n)
    out = open(args.out, "w", newline="") if args.out and args.out != "-" else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["t"] + [f"x_{i + 1}" for i in cols])
        for t, row in zip(times, states[:, cols]):
            writer.writerow([int(t)] + [repr(float(v)) for v in row])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _read_anchors(path) -> dict[int, int]:
    anchors = {}
    for line in Path(path).read_text().splitlines():
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) != 2:
            raise InputError(f"anchor lines are 'stubborn_id regular_id', got {line!r}")
        anchors[int(parts[0]) - 1] = int(parts[1]) - 1
    return anchors


DETECT_COLUMNS = ("t", "w_s_hat", "w_d_hat", "labels_changed", "accuracy")


def cmd_detect(args) -> int:
    m, cfg_seed, x_r0 = _load_model(args.model)
    net = to_general(m)
    seed = args.seed if args.seed is not None else (cfg_seed or 0)
    prior = _read_anchors(args.anchors) if args.anchors else default_prior(m)
    s_x0, s_dyn, s_det = experiment_streams(seed)
    x0 = _initial_from_config(net, x_r0, s_x0)
    try:
        detector = init_detector(net.n, net.regular, prior, s_det)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    run = track(net, x0, args.steps, s_dyn, detector, truth=m.communities, log_every=args.log_every)
    if args.log:
        run.trace.write_csv(args.log, DETECT_COLUMNS)
    _emit(_json(run.summary()), args.summary)
    return 0


def cmd_karate(args) -> int:
    load_karate()
    run = run_karate(args.seed, args.steps, tuple(args.states), args.log_every)
    if args.log:
        run.trace.write_csv(args.log)
    _emit(_json(run.summary()), args.summary)
    return 0


def cmd_montecarlo(args) -> int:
    m, cfg_seed, _ = _load_model(args.model)
    seed = args.seed if args.seed is not None else (cfg_seed or 0)
    report = monte_carlo_stationarity(m, seed, ergodic_steps=args.ergodic_steps,
                                      batches=args.batches, replications=args.replications,
                                      replication_steps=args.replication_steps)
    _emit(_json(report), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gossip-blocks",
                                description="Gossip dynamics with stubborn agents: "
                                            "analysis, simulation and online community detection.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a model config or edge list")
    src = v.add_mutually_exclusive_group(required=True)
    src.add_argument("--model")
    src.add_argument("--edges")
    v.add_argument("--stubborn", action="append", metavar="ID=VALUE")
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("analyze", help="stationary expectations and coefficients as JSON")
    a.add_argument("--model", required=True)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="write a trajectory as CSV")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--model")
    src.add_argument("--edges")
    s.add_argument("--stubborn", action="append", metavar="ID=VALUE",
                   help="stubborn agent for --edges (1-based id), repeatable")
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--log-every", type=int, default=1)
    s.add_argument("--regular-only", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("detect", help="run online detection on a block model")
    d.add_argument("--model", required=True)
    d.add_argument("--steps", type=int, required=True)
    d.add_argument("--seed", type=int)
    d.add_argument("--anchors")
    d.add_argument("--log")
    d.add_argument("--log-every", type=int, default=100)
    d.add_argument("--summary")
    d.set_defaults(func=cmd_detect)

    k = sub.add_parser("karate", help="run detection on the karate club network")
    k.add_argument("--steps", type=int, default=10 ** 6)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--states", type=float, nargs=2, default=(1.0, 0.0),
                   metavar=("X1", "X34"))
    k.add_argument("--log")
    k.add_argument("--log-every", type=int, default=100)
    k.add_argument("--summary")
    k.set_defaults(func=cmd_karate)

    mc = sub.add_parser("montecarlo", help="Monte Carlo check of the stationary expectation")
    mc.add_argument("--model", required=True)
    mc.add_argument("--seed", type=int)
    mc.add_argument("--ergodic-steps", type=int, default=10 ** 6)
    mc.add_argument("--batches", type=int, default=50)
    mc.add_argument("--replications", type=int, default=2000)
    mc.add_argument("--replication-steps", type=int, default=2000)
    mc.add_argument("--out")
    mc.set_defaults(func=cmd_montecarlo)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "steps", 1) is not None and getattr(args, "steps", 1) < 0:
        print("error: --steps must be >= 0", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (InvalidModelError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
