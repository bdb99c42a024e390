"""
Imperfect channel and compute knowledge
=======================================

With ``error_rel_std > 0`` the controller schedules and allocates on noisy
estimates of each device's channel amplitude and compute time, while the
round is charged its true latency (the slowest device under the chosen
split). The same seeds are used for every error level.
"""
import warnings

import numpy as np

from fedsched.harness import parse_config_text, run_trial, summarize

warnings.simplefilter("ignore")

base = parse_config_text("partition = shards:1\nT_s = 5\ntrials = 3\n")
for err in (0.0, 0.1, 0.3):
    for policy in ("FC", "AS-h"):
        cfg = base.replace(error_rel_std=err, policy=policy)
        s = [summarize(run_trial(cfg, t)) for t in range(cfg.trials)]
        print(f"error {err:.1f}  {policy:5s} accuracy {np.mean([x['best_accuracy'] for x in s]):.3f}"
              f"  rounds {np.mean([x['rounds_completed'] for x in s]):5.1f}")
