#!/usr/bin/env python3
"""From a raw flow capture to tokenizable records.

Generates a small synthetic capture, writes it in the raw CSV layout,
parses it back through the schema-driven ingester, keeps TCP only, and
fits quantile bins over each numeric field. The printed cut points are
what turn a continuous value like dst_bytes into a categorical token.
"""

import json
from pathlib import Path

from flowae.discretize import assign_bin, fit_quantiles
from flowae.ingest import NUMERIC_FIELDS, ParseStats, filter_tcp, parse_csv_stream
from flowae.synthetic import RAW_SCHEMA, make_corpus, write_raw_csv

out = Path(__file__).with_name("out") / "01"
out.mkdir(parents=True, exist_ok=True)

records = make_corpus(n_benign=400, n_anomalous=40, seed=7)
raw = out / "capture.csv"
write_raw_csv(raw, records)
print(f"wrote {len(records)} flows to {raw}")

stats = ParseStats()
schema = json.loads(json.dumps(RAW_SCHEMA))  # plain dict, as if read from disk
flows = filter_tcp(parse_csv_stream(raw, schema, stats))
print(f"parsed rows={stats.rows} kept tcp={len(flows)} skipped={stats.skipped}")

print("\nquantile cuts on the benign traffic (10 bins -> 9 cuts):")
benign = [f for f in flows if f.label == "benign"]
for field in NUMERIC_FIELDS:
    binner = fit_quantiles([getattr(f, field) for f in benign], 10, field=field)
    head = ", ".join(f"{c:.3g}" for c in binner.cut_points[:4])
    print(f"  {field:<10} cuts: {head}, ...")
    if field == "dst_bytes":
        demo = binner

print("\ndst_bytes values landing in bins:")
for value in (0.0, 500.0, 6000.0, 1e6):
    print(f"  {value:>10.0f} -> bin {assign_bin(demo, value)}")
