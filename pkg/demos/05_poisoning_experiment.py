#!/usr/bin/env python3
"""What a trickle of attack records in the training set does to detection.

The harness holds out benign test traffic once, then per scenario blends a
chosen fraction of attack records into the training set, retrains both
phases from scratch, and evaluates against the held-out benign plus the
attacks the scenario did not consume. Small fractions barely move the
optimal operating point; that stability (or its loss) is the experiment's
whole output.
"""

from pathlib import Path

from flowae.config import config_from_dict
from flowae.experiment import run_experiment
from flowae.ingest import write_flows
from flowae.synthetic import make_corpus

out = Path(__file__).with_name("out") / "05"
out.mkdir(parents=True, exist_ok=True)
corpus = out / "flows.jsonl"
write_flows(corpus, make_corpus(n_benign=3000, n_anomalous=500, seed=31))

config = config_from_dict({
    "paths": {"corpus": str(corpus), "out": str(out / "exp")},
    "split": {"test_fraction": 0.15, "seed": 7},
    "experiment": {
        "poison_class": "anomaly",
        "scenarios": [
            {"name": "clean", "poison_fraction": 0.0},
            {"name": "p075", "poison_fraction": 0.0075},
            {"name": "p150", "poison_fraction": 0.015},
            {"name": "p500", "poison_fraction": 0.05},
        ],
    },
})
summary = run_experiment(config, log=print)

print(f"\n{'scenario':<10} {'poison':>8} {'achieved':>9} "
      f"{'f1':>7} {'tpr':>6} {'tnr':>6}")
for row in summary["scenarios"]:
    best = row["optimal"]["anomaly"]
    print(f"{row['name']:<10} {row['poison_fraction']:>8.4f} "
          f"{row['achieved_poison_fraction']:>9.4f} "
          f"{best['f1']:>7.4f} {best['tpr']:>6.3f} {best['tnr']:>6.3f}")

clean = summary["scenarios"][0]["optimal"]["anomaly"]["f1"]
print("\ndelta against the clean run:")
for row in summary["scenarios"][1:]:
    delta = row["optimal"]["anomaly"]["f1"] - clean
    print(f"  {row['name']}: {delta:+.4f}")
