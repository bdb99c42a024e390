"""
Sweeping the bound's phi knob
=============================

``phi`` enters the first term of the scheduling objective. When it is small
that term behaves like ``1 / (eta phi K tau)``, so the number of rounds ``K``
dominates and FC keeps rounds short with few devices; as it grows the
participation penalty takes over and FC schedules more devices per round.
The harness runs each value over several seeds and writes ``sweep.csv``;
this prints the same rows.
"""
import tempfile
import warnings
from pathlib import Path

from fedsched.harness import sweep

warnings.simplefilter("ignore")

config = Path(__file__).with_name("configs") / "desk.cfg"
with tempfile.TemporaryDirectory() as out:
    rows = sweep(config, "phi", ["0.01", "0.05", "0.2", "1"], out, trials=3)
    print((Path(out) / "sweep.csv").read_text().splitlines()[0])

for r in rows:
    print(f"phi={r['value']:>5s}  accuracy {r['mean_best_accuracy']:.3f} "
          f"+- {r['std_best_accuracy']:.3f}  mean n={r['mean_n_scheduled']:.2f}")
