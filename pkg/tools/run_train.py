"""Launch a training run from the command line with explicit schedule knobs.

Thin wrapper over playhouse.training.train for experiment runs; the
packaged CLI exposes the same functionality via `playhouse train`.
"""

import argparse

from playhouse.agent.config import AgentConfig
from playhouse.data.dataset import BatchConfig, Dataset
from playhouse.training.loop import TrainSchedule, train


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--steps", type=int, default=4000)
    ap.add_argument("--lr", type=float, default=3e-4)
    ap.add_argument("--batch", type=int, default=8)
    ap.add_argument("--windows", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--val-every", type=int, default=250)
    ap.add_argument("--checkpoint-every", type=int, default=250)
    args = ap.parse_args()

    ds = Dataset.load(args.data + "/manifest.json")
    sched = TrainSchedule(steps=args.steps, lr=args.lr,
                          batch=BatchConfig(B=args.batch, K=args.windows),
                          val_every=args.val_every,
                          checkpoint_every=args.checkpoint_every,
                          log_every=25, seed=args.seed)
    res = train(ds, AgentConfig(), sched, args.out)
    print(res.to_dict())


if __name__ == "__main__":
    main()
