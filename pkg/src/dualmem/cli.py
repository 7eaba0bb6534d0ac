"""Single command-line entry point for every workflow.

All result files are a pure function of (config, seed); timing information is
printed to stderr only, never written into artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bench import compare_backends
from .config import check_keys, load_run_config
from .data import encode_samples, load_dense, load_events, write_dense, write_events
from .errors import ConfigError, DataFormatError, DualmemError
from .experiment import run_experiment, write_json, write_profile_csv
from .hwsim import CostModel, compare_schedules, parse_schedule, simulate_run
from .memory import StateSpaceConfig, build_legendre_system, discretize_zoh
from .network import init_network, load_checkpoint, network_forward
from .tasks import make_delayed_recall, make_dense_waves
from .trace import from_forward, load_trace, save_trace
from .training import evaluate


def _default_threads() -> int:
    return int(os.environ.get("DUALMEM_THREADS", "1"))


def cmd_gen_matrices(args) -> int:
    sys_ab = build_legendre_system(args.d)
    theta = args.theta if args.theta is not None else 2.0 * args.d
    cfg = StateSpaceConfig(
        dim=args.d, window=theta, dt=args.dt, window_scaling=not args.no_window_scaling
    )
    mem = discretize_zoh(sys_ab, cfg)
    doc = {
        "d": args.d,
        "theta": theta,
        "dt": args.dt,
        "window_scaling": not args.no_window_scaling,
        "A": sys_ab.A.tolist(),
        "B": sys_ab.B.tolist(),
        "A_bar": mem.A_bar.tolist(),
        "B_bar": mem.B_bar.tolist(),
    }
    print(json.dumps(doc, sort_keys=True, indent=2))
    return 0


def cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    summary = run_experiment(cfg, args.out)
    print(f"wall time: {summary.pop('wall_time_s'):.1f}s", file=sys.stderr)
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


def _load_eval_samples(args):
    if args.kind == "events":
        seqs = load_events(args.data)
        encoder = "event"
    else:
        seqs = load_dense(args.data)
        encoder = args.kind
    return encode_samples(seqs, encoder=encoder, permutation_seed=args.permutation_seed)


def cmd_eval(args) -> int:
    net = load_checkpoint(_checkpoint_prefix(args.checkpoint))
    samples = _load_eval_samples(args)
    loss, acc = evaluate(net, samples, threads=args.threads)
    doc = {"loss": loss, "accuracy": acc, "samples": len(samples)}
    print(json.dumps(doc, sort_keys=True, indent=2))
    if args.out:
        write_json(Path(args.out) / "eval.json", doc)
    if args.emit_trace:
        x, _ = samples[args.sample]
        _, fwd = network_forward(net, x)
        save_trace(from_forward(fwd, net), args.emit_trace)
        print(f"trace written to {args.emit_trace}", file=sys.stderr)
    return 0


def cmd_grad_profile(args) -> int:
    from .backprop import gradient_profile

    cfg = load_run_config(args.config)
    if args.checkpoint:
        net = load_checkpoint(_checkpoint_prefix(args.checkpoint))
    else:
        net = init_network(cfg.network, seed=cfg.seed)
    from .experiment import load_task_samples

    _, test_set = load_task_samples(cfg.task)
    x, label = test_set[args.sample]
    profile = gradient_profile(
        net, x, label, surrogate=cfg.train.surrogate, layer_index=args.layer
    )
    out = Path(args.out)
    write_profile_csv(out / "grad_profile.csv", profile)
    print(f"profile over {len(profile)} steps written to {out / 'grad_profile.csv'}")
    return 0


def _load_cost(path: str | None) -> CostModel:
    if not path:
        return CostModel()
    with open(path) as fh:
        doc = json.load(fh)
    check_keys(doc, set(CostModel.__dataclass_fields__), set(), "cost model")
    return CostModel(**doc)


def cmd_hwsim(args) -> int:
    rt = load_trace(args.trace)
    cost = _load_cost(args.cost)
    net = load_checkpoint(_checkpoint_prefix(args.checkpoint)) if args.checkpoint else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sched = parse_schedule(args.schedule)
    if args.dilation is not None:
        from dataclasses import replace

        sched = replace(sched, dilation=args.dilation)
    report = {"primary": simulate_run(rt, sched, cost, net=net)}
    if args.compare:
        other = simulate_run(rt, parse_schedule(args.compare), cost, net=net)
        report["compare"] = other
        a, b = report["primary"]["counters"], other["counters"]
        report["ratios"] = {
            "neuron_sram_rmw": b["neuron_rmw_pairs"] / a["neuron_rmw_pairs"],
            "arithmetic_intensity": report["primary"]["arithmetic_intensity"]
            / other["arithmetic_intensity"],
            "critical_cycles": b["critical_cycles"] / a["critical_cycles"],
        }
    if args.sweep:
        rows = compare_schedules(rt, cost)
        report["sweep"] = rows
        with open(out / "sweep.csv", "w") as fh:
            cols = ["schedule", "arithmetic_intensity", "energy_proxy", "critical_cycles",
                    "sram_words", "macs"]
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c])
                                  for c in cols) + "\n")
    write_json(out / "report.json", report)
    print(json.dumps({k: report[k] for k in report if k != "sweep"}, sort_keys=True, indent=2))
    return 0


def cmd_bench(args) -> int:
    result = compare_backends(args.steps, args.fan_in, args.width, args.mem_dim, args.repeats)
    for row in result["rows"]:
        if "error" in row:
            print(f"{row['backend']}: failed: {row['error']}", file=sys.stderr)
        else:
            print(
                f"{row['backend']:>6}: forward {row['forward_ms']:.2f} ms, "
                f"backward {row['backward_ms']:.2f} ms",
                file=sys.stderr,
            )
    if "forward_speedup" in result:
        print(
            f"numba speedup: forward {result['forward_speedup']:.1f}x, "
            f"backward {result['backward_speedup']:.1f}x, "
            f"bit_identical={result['bit_identical']}",
            file=sys.stderr,
        )
    if args.out:
        deterministic = {
            "dims": {"T": args.steps, "M": args.fan_in, "N": args.width, "d": args.mem_dim},
            "backends": sorted(r["backend"] for r in result["rows"] if "error" not in r),
            "bit_identical": result.get("bit_identical"),
        }
        write_json(Path(args.out) / "bench.json", deterministic)
    return 0


def cmd_make_task(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n = args.train_samples + args.test_samples
    if args.task == "delayed-recall":
        seqs = make_delayed_recall(n, gap=args.gap, seed=args.seed)
        write_events(out / "train.jsonl", seqs[: args.train_samples])
        write_events(out / "test.jsonl", seqs[args.train_samples :])
        manifest = {
            "task": "delayed-recall",
            "gap": args.gap,
            "channels": 3,
            "classes": 4,
            "kind": "events",
        }
    else:
        seqs = make_dense_waves(n, num_steps=args.steps, seed=args.seed)
        write_dense(out / "train.jsonl", seqs[: args.train_samples])
        write_dense(out / "test.jsonl", seqs[args.train_samples :])
        manifest = {
            "task": "dense-waves",
            "steps": args.steps,
            "channels": 1,
            "classes": 4,
            "kind": "dense",
        }
    manifest.update(
        {"seed": args.seed, "train_samples": args.train_samples, "test_samples": args.test_samples}
    )
    write_json(out / "task.json", manifest)
    print(json.dumps(manifest, sort_keys=True, indent=2))
    return 0


def _checkpoint_prefix(path: str) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".json", ".bin") else p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualmem",
        description="Spiking networks with a slow shared memory: training, "
        "gradient analysis, and dataflow simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-matrices", help="print the memory system matrices as JSON")
    p.add_argument("--d", type=int, required=True, help="memory dimension")
    p.add_argument("--theta", type=float, default=None, help="window length (default 2d)")
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--no-window-scaling", action="store_true")
    p.set_defaults(func=cmd_gen_matrices)

    p = sub.add_parser("train", help="train a network from a run config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--kind", choices=["events", "dense", "permuted-dense"], default="events")
    p.add_argument("--permutation-seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--emit-trace", default=None, help="write a run trace for hwsim")
    p.add_argument("--sample", type=int, default=0)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grad-profile", help="per-step gradient norms under terminal loss")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--sample", type=int, default=0)
    p.add_argument("--layer", type=int, default=0)
    p.set_defaults(func=cmd_grad_profile)

    p = sub.add_parser("hwsim", help="simulate the dataflow over a recorded trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--schedule", default="fused")
    p.add_argument("--compare", default=None)
    p.add_argument("--sweep", action="store_true", help="tabulate all schedules")
    p.add_argument("--checkpoint", default=None, help="verify arithmetic against the trace")
    p.add_argument("--cost", default=None, help="cost model JSON")
    p.add_argument("--dilation", type=int, default=None, help="override memory-update interval")
    p.set_defaults(func=cmd_hwsim)

    p = sub.add_parser("bench", help="compare numba and NumPy kernel backends")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--fan-in", type=int, default=140)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--mem-dim", type=int, default=10)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("make-task", help="generate a synthetic benchmark dataset")
    p.add_argument("--task", choices=["delayed-recall", "dense-waves"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gap", type=int, default=50, help="silent steps between cue and go")
    p.add_argument("--steps", type=int, default=100, help="dense-waves sequence length")
    p.add_argument("--train-samples", type=int, default=256)
    p.add_argument("--test-samples", type=int, default=128)
    p.set_defaults(func=cmd_make_task)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DualmemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
