"""
Training against the clock
==========================

Federated training on label-sharded synthetic data where every round is
charged its simulated latency. FC adapts the number of scheduled devices as
its estimates of the loss constants improve; FixedN always schedules the
same count.
"""
import warnings

from fedsched.harness import parse_config_text, run_trial

warnings.simplefilter("ignore")  # shard trimming notices

base = parse_config_text("""
partition = shards:1
T_s = 5
trials = 1
""")

for policy in ("FC", "FixedN:1", "FixedN:5", "FixedN:20"):
    hist = run_trial(base.replace(policy=policy), trial=0)
    n = [r.n_scheduled for r in hist.records]
    print(f"{policy:10s} rounds={len(hist):3d}  mean n={sum(n) / len(n):5.2f}  "
          f"best accuracy={hist.best_accuracy:.3f}")

hist = run_trial(base.replace(policy="FC"), trial=0)
print("\nround  n  t*(s)   elapsed  beta_hat  accuracy")
for r in hist.records[::3]:
    print(f"{r.round:5d} {r.n_scheduled:2d}  {r.t_star_s:.3f}  {r.cumulative_s:7.3f}  "
          f"{r.beta_hat:8.3f}  {r.test_accuracy:.3f}")
