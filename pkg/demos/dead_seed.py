"""Watch a real baseline die at a high learning rate.

Trains the parameter-matched real model on the AWGN replication data at
lr 0.0236 and 0.0024 and prints the head-gradient trace around the first
update, then the loss tail. A dead run sits at ln 3 with a vanishing gradient.

    python3 demos/dead_seed.py [seed]
"""
import math
import sys

from cxbench.suites import dataset
from cxbench.train import TrainConfig, train_run

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
data = dataset("rf", "awgn_replication", seed)

for lr in (0.0236, 0.0024):
    cfg = TrainConfig(lr=lr, steps=200, seed=seed, family="real_param_matched", activation="crelu", width=96)
    res = train_run(cfg, data)
    head = [f"{res.record(s).head_weight_grad_norm:.3g}" for s in range(4)]
    tail = res.telemetry[-20:]
    tail_loss = sum(r.loss for r in tail) / len(tail)
    tail_grad = sum(r.total_grad_norm for r in tail) / len(tail)
    print(f"lr {lr}: head grad steps 0-3 {head}")
    print(f"   last-20 loss {tail_loss:.4f} (ln 3 = {math.log(3):.4f}), grad {tail_grad:.2e}, "
          f"test acc {res.test_acc:.3f}, dead={res.dead}")
