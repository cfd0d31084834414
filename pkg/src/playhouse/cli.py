"""Command-line entry point: demonstration generation, training, probe
evaluation, scaling sweep, ablation comparison, transfer fine-tuning, and
the live interaction server.

Every subcommand accepts --config FILE (JSON object of flag defaults);
explicit flags override the file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agent.config import ABLATIONS, AgentConfig
from .data.dataset import BatchConfig, Dataset
from .env import config as envcfg
from .env.probes import CLEAR_KIND, PROBE_KINDS


def _schedule_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--batch-size", type=int, default=8, dest="batch_size")
    p.add_argument("--windows", type=int, default=8,
                   help="consecutive observation windows per sequence")
    p.add_argument("--lambda-contrastive", type=float, default=1.0)
    p.add_argument("--grad-clip", type=float, default=1.0)
    p.add_argument("--val-every", type=int, default=200)
    p.add_argument("--checkpoint-every", type=int, default=500)
    p.add_argument("--log-every", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)


def _schedule_from(args) -> "TrainSchedule":
    from .training.loop import TrainSchedule
    return TrainSchedule(steps=args.steps, lr=args.lr,
                         grad_clip=args.grad_clip,
                         batch=BatchConfig(B=args.batch_size, K=args.windows),
                         lambda_contrastive=args.lambda_contrastive,
                         val_every=args.val_every,
                         checkpoint_every=args.checkpoint_every,
                         log_every=args.log_every, seed=args.seed)


def _env_config(args) -> envcfg.EnvConfig:
    if getattr(args, "env_config", None):
        return envcfg.load(args.env_config)
    return envcfg.TRAIN_DEFAULT


def _progress(prefix: str):
    def cb(*parts):
        print(f"{prefix}: " + " ".join(str(p) for p in parts), flush=True)
    return cb


# -- subcommands ------------------------------------------------------------


def cmd_generate_data(args) -> int:
    from .oracle.datagen import generate_dataset
    kinds = tuple(args.kinds.split(",")) if args.kinds else PROBE_KINDS
    bad = [k for k in kinds if k not in PROBE_KINDS + (CLEAR_KIND,)]
    if bad:
        print(f"unknown episode kinds: {','.join(bad)}", file=sys.stderr)
        return 2
    manifest = generate_dataset(args.out, args.episodes, seed=args.seed,
                                config=_env_config(args), kinds=kinds,
                                shard_size=args.shard_size,
                                progress=_progress("generated"))
    print(f"manifest: {manifest}")
    return 0


def cmd_train(args) -> int:
    from .training.loop import train
    dataset = Dataset.load(args.data)
    config = AgentConfig(width_multiplier=args.width)
    for name in args.ablation or []:
        config = config.with_ablation(name)
    schedule = _schedule_from(args)
    if args.fraction != 1.0:
        from dataclasses import replace
        schedule = replace(schedule, fraction=args.fraction)
    result = train(dataset, config, schedule, args.out)
    print(json.dumps(result.to_dict(), indent=1))
    return 1 if result.aborted else 0


def cmd_eval(args) -> int:
    from .data.tokenizer import Tokenizer
    from .training.checkpoints import load_agent
    from .training.evaluate import evaluate
    model, _ = load_agent(args.checkpoint)
    if args.tokenizer:
        tokenizer = Tokenizer.load(args.tokenizer)
    else:
        tokenizer = Dataset.load(args.data).tokenizer
    kinds = tuple(args.kinds.split(",")) if args.kinds else PROBE_KINDS
    report = evaluate(model, tokenizer, kinds, args.episodes, seed=args.seed,
                      config=_env_config(args),
                      checkpoint_id=str(args.checkpoint),
                      progress=_progress("eval") if args.verbose else None)
    if args.out:
        report.save(args.out)
    print(json.dumps(report.to_dict(), indent=1))
    return 0


def cmd_sweep(args) -> int:
    from .training.sweep import SweepSpec, run_sweep
    spec = SweepSpec(fractions=tuple(float(f) for f in args.fractions.split(",")),
                     widths=tuple(float(w) for w in args.widths.split(",")),
                     seeds=args.sweep_seeds,
                     early_stopping_eval=args.early_stopping_eval,
                     eval_episodes=args.eval_episodes,
                     schedule=_schedule_from(args))
    report = run_sweep(Dataset.load(args.data), spec, args.out)
    failed = [c for c in report["cells"] if c["status"] != "ok"]
    print(f"sweep: {len(report['cells']) - len(failed)} ok, {len(failed)} failed"
          f" -> {Path(args.out) / 'sweep.json'}")
    return 0


def cmd_ablations(args) -> int:
    from .training.ablations import AblationSpec, run_ablations
    names = tuple(args.ablation) if args.ablation else ABLATIONS
    spec = AblationSpec(ablations=names,
                        eval_kinds=tuple(args.kinds.split(",")),
                        eval_episodes=args.eval_episodes,
                        schedule=_schedule_from(args))
    report = run_ablations(Dataset.load(args.data), spec, args.out)
    for row in report["rows"]:
        print(row["variant"], row["status"],
              {k: round(v["success_rate"], 3)
               for k, v in row.get("per_kind", {}).items()})
    return 0


def cmd_transfer(args) -> int:
    from .training.transfer import TransferSpec, finetune_transfer
    spec = TransferSpec(mode=args.mode,
                        budgets=tuple(int(b) for b in args.budgets.split(",")),
                        base_episodes=args.base_episodes,
                        eval_episodes=args.eval_episodes,
                        schedule=_schedule_from(args))
    report = finetune_transfer(Dataset.load(args.data), args.checkpoint,
                               spec, args.out,
                               progress=_progress("transfer") if args.verbose
                               else None)
    for row in report["rows"]:
        print(row["budget"], row["arm"], row["status"],
              round(row.get("mean_success", float("nan")), 3))
    return 0


def cmd_serve(args) -> int:
    from .service.server import InteractServer
    ckpt = Path(args.checkpoint)
    server = InteractServer(ckpt.parent, args.record_dir,
                            host=args.host, port=args.port,
                            episode_seconds=args.episode_seconds,
                            pace_hz=args.pace_hz,
                            env_config=_env_config(args))
    if ckpt.stem not in server.checkpoint_ids():
        print(f"no checkpoint at {ckpt}", file=sys.stderr)
        return 2
    host, port = server.start()
    print(f"serving {ckpt.stem} on {host}:{port} "
          f"(recording to {args.record_dir})", flush=True)
    try:
        server._thread.join()
    except KeyboardInterrupt:
        server.stop()
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="playhouse",
        description="Interactive-agent pipeline: data, training, evaluation, "
                    "scaling/ablation/transfer harnesses, live sessions.")
    sub = parser.add_subparsers(dest="command", required=True)

    parser.subcommands = {}

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=str, default=None,
                       help="JSON file of flag defaults (flags override)")
        p.add_argument("--env-config", type=str, default=None,
                       dest="env_config", help="environment config file")
        p.set_defaults(fn=fn, command=name)
        parser.subcommands[name] = p
        return p

    p = add("generate-data", cmd_generate_data,
            "write scripted demonstration shards + manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--episodes", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kinds", type=str, default="")
    p.add_argument("--shard-size", type=int, default=200)

    p = add("train", cmd_train, "train an agent on a dataset manifest")
    p.add_argument("--data", required=True, help="manifest.json path")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--ablation", action="append", choices=ABLATIONS)
    _schedule_flags(p)

    p = add("eval", cmd_eval, "probe success rates for a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", help="manifest.json (for the tokenizer)")
    p.add_argument("--tokenizer", help="tokenizer.json (overrides --data)")
    p.add_argument("--kinds", type=str, default="")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="")
    p.add_argument("--verbose", action="store_true")

    p = add("sweep", cmd_sweep, "dataset-fraction / model-width scaling sweep")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fractions", type=str, default="0.125,0.25,0.5,1.0")
    p.add_argument("--widths", type=str, default="1.0")
    p.add_argument("--sweep-seeds", type=int, default=3)
    p.add_argument("--early-stopping-eval", action="store_true")
    p.add_argument("--eval-episodes", type=int, default=20)
    _schedule_flags(p)

    p = add("ablations", cmd_ablations, "baseline-vs-ablation comparison")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ablation", action="append", choices=ABLATIONS)
    p.add_argument("--kinds", type=str, default="go,lift,color")
    p.add_argument("--eval-episodes", type=int, default=20)
    _schedule_flags(p)

    p = add("transfer", cmd_transfer,
            "fine-tune on a new noun or verb vs from-scratch")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True,
                   help="pre-trained checkpoint to fine-tune")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("new_noun", "new_verb"),
                   default="new_verb")
    p.add_argument("--budgets", type=str, default="4,8,16")
    p.add_argument("--base-episodes", type=int, default=16)
    p.add_argument("--eval-episodes", type=int, default=20)
    p.add_argument("--verbose", action="store_true")
    _schedule_flags(p)

    p = add("serve", cmd_serve, "live interaction session server")
    p.add_argument("--checkpoint", required=True, help=".ckpt file to serve")
    p.add_argument("--record-dir", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7865)
    p.add_argument("--episode-seconds", type=float, default=30.0)
    p.add_argument("--pace-hz", type=float, default=15.0,
                   help="environment ticks per second (0 = unpaced)")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        defaults = json.loads(Path(args.config).read_text())
        if not isinstance(defaults, dict):
            print("--config must contain a JSON object", file=sys.stderr)
            return 2
        sub = parser.subcommands[args.command]
        dests = {a.dest for a in sub._actions}
        unknown = [k for k in defaults if k.replace("-", "_") not in dests]
        if unknown:
            print(f"unknown config keys: {','.join(unknown)}",
                  file=sys.stderr)
            return 2
        # file values become the defaults; explicit flags still win on re-parse
        sub.set_defaults(**{k.replace("-", "_"): v
                            for k, v in defaults.items()})
        args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
