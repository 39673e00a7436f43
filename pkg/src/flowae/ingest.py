"""Netflow CSV ingestion: parse, filter to TCP, label, split, poison.

A raw corpus (UNSW-NB15 style) is projected down to ten feature fields plus
the protocol and a ground-truth attack category. Column positions are not
hard-coded: a schema maps each field role to a 0-based column index or, for
files with a header row, a column name. ``DEFAULT_UNSW_SCHEMA`` covers the
canonical headerless 49-column UNSW-NB15 layout.

Real exports contain stray rows, so rows with unparseable numerics are
counted and skipped rather than aborting the run.
"""

import csv
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .ioutil import read_json, read_jsonl, write_json, write_jsonl

BENIGN = "benign"

CATEGORICAL_FIELDS = ("src_ip", "dst_ip", "src_port", "dst_port", "service")
NUMERIC_FIELDS = ("duration", "src_bytes", "dst_bytes", "src_pkts", "dst_pkts")
FIELD_ORDER = CATEGORICAL_FIELDS + NUMERIC_FIELDS

# Roles a schema must resolve. attack_category is optional: without it,
# malicious rows are labeled "attack" and per-class evaluation is unavailable.
REQUIRED_ROLES = FIELD_ORDER + ("protocol", "label")
OPTIONAL_ROLES = ("attack_category",)

# Canonical headerless UNSW-NB15 layout (49 columns).
DEFAULT_UNSW_SCHEMA = {
    "has_header": False,
    "columns": {
        "src_ip": 0, "src_port": 1, "dst_ip": 2, "dst_port": 3,
        "protocol": 4, "duration": 6, "src_bytes": 7, "dst_bytes": 8,
        "service": 13, "src_pkts": 16, "dst_pkts": 17,
        "attack_category": 47, "label": 48,
    },
}


@dataclass(frozen=True, slots=True)
class FlowRecord:
    """One netflow observation: ten feature fields, protocol, and label."""

    src_ip: str
    dst_ip: str
    src_port: str
    dst_port: str
    service: str
    duration: float
    src_bytes: int
    dst_bytes: int
    src_pkts: int
    dst_pkts: int
    protocol: str
    label: str

    def feature(self, name):
        return getattr(self, name)


def normalize_category(raw, malicious):
    """Canonical lowercase attack-category tag; benign iff not malicious."""
    if not malicious:
        return BENIGN
    name = (raw or "").strip().lower()
    return name if name else "attack"


def is_benign(label):
    return label == BENIGN


class ParseStats:
    """Row accounting for one parse: yielded + skipped == data rows seen."""

    def __init__(self):
        self.rows = 0
        self.yielded = 0
        self.skipped = 0


def load_schema(path):
    schema = read_json(path)
    _resolve_columns(schema, header=None)  # validate roles early
    return schema


def _resolve_columns(schema, header):
    """Map every role to a column index, using the header for named columns."""
    columns = schema.get("columns")
    if not isinstance(columns, dict):
        raise ConfigError("schema must have a 'columns' mapping")
    missing = [role for role in REQUIRED_ROLES if role not in columns]
    if missing:
        raise ConfigError(f"schema missing column roles: {', '.join(missing)}")
    if header is None:
        return None
    resolved = {}
    for role, col in columns.items():
        if isinstance(col, int):
            resolved[role] = col
        else:
            try:
                resolved[role] = header.index(col)
            except ValueError:
                raise ConfigError(f"schema column {col!r} not in header") from None
    return resolved


def parse_csv_stream(path, schema, stats=None):
    """Yield FlowRecords from a raw CSV, in file order.

    Malformed rows (short rows, unparseable or negative numerics) are counted
    in ``stats.skipped`` and skipped. An unreadable file or an unresolvable
    schema is fatal.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    if stats is None:
        stats = ParseStats()
    with open(path, newline="", encoding="utf-8", errors="replace") as fh:
        reader = csv.reader(fh)
        header = None
        if schema.get("has_header"):
            header = next(reader, None)
            if header is None:
                return
            header = [h.strip() for h in header]
        cols = _resolve_columns(schema, header) if header is not None else None
        if cols is None:
            _resolve_columns(schema, header=None)
            cols = {r: c for r, c in schema["columns"].items() if isinstance(c, int)}
            missing = [r for r in REQUIRED_ROLES if r not in cols]
            if missing:
                raise ConfigError(
                    "headerless file needs integer column indices for: "
                    + ", ".join(missing)
                )
        needed = max(cols.values()) + 1
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            stats.rows += 1
            rec = _row_to_record(row, cols, needed)
            if rec is None:
                stats.skipped += 1
                continue
            stats.yielded += 1
            yield rec


def _row_to_record(row, cols, needed):
    if len(row) < needed:
        return None

    def cell(role, default=""):
        idx = cols.get(role)
        return row[idx].strip() if idx is not None else default

    try:
        duration = float(cell("duration"))
        src_bytes = int(float(cell("src_bytes")))
        dst_bytes = int(float(cell("dst_bytes")))
        src_pkts = int(float(cell("src_pkts")))
        dst_pkts = int(float(cell("dst_pkts")))
    except ValueError:
        return None
    if duration != duration:  # NaN
        return None
    if duration < 0 or min(src_bytes, dst_bytes, src_pkts, dst_pkts) < 0:
        return None

    malicious = cell("label") not in ("0", "", "0.0")
    service = cell("service") or "-"
    return FlowRecord(
        src_ip=cell("src_ip"),
        dst_ip=cell("dst_ip"),
        src_port=cell("src_port"),
        dst_port=cell("dst_port"),
        service=service,
        duration=duration,
        src_bytes=src_bytes,
        dst_bytes=dst_bytes,
        src_pkts=src_pkts,
        dst_pkts=dst_pkts,
        protocol=cell("protocol").lower(),
        label=normalize_category(cell("attack_category", default=""), malicious),
    )


def filter_tcp(records, protocol_token="tcp"):
    """Keep only records whose protocol matches (case-insensitive). Idempotent."""
    token = protocol_token.lower()
    return [r for r in records if r.protocol.lower() == token]


def build_training_set(benign, malicious, poison_fraction, target_size, seed):
    """Assemble a shuffled training multiset with a controlled poison fraction.

    Samples round(poison_fraction * target_size) malicious records without
    replacement. When the malicious pool cannot cover that, the total is
    shrunk to round(pool / poison_fraction) so the fraction is still honored,
    and the achieved size is simply the length of the returned list. Raises
    DataError when no size can honor the request.

    Returns (training records, undrawn malicious records); the leftover list
    keeps the pool's order, so a caller can hold it out for evaluation.
    """
    if not 0 <= poison_fraction < 0.5:
        raise ConfigError(f"poison_fraction must be in [0, 0.5), got {poison_fraction}")
    if target_size <= 0:
        raise ConfigError(f"target_size must be positive, got {target_size}")
    benign = list(benign)
    malicious = list(malicious)

    n_mal = round(poison_fraction * target_size)
    total = target_size
    if n_mal > len(malicious):
        # Mirror the shrinking fallback: keep the fraction, shed benign rows.
        n_mal = len(malicious)
        if n_mal == 0:
            raise DataError(
                f"poison_fraction {poison_fraction} unreachable: malicious pool is empty"
            )
        total = round(n_mal / poison_fraction)
    n_ben = total - n_mal
    if n_ben > len(benign):
        max_total = len(benign) + n_mal if poison_fraction == 0 else min(
            total, round(len(benign) / (1 - poison_fraction))
        )
        raise DataError(
            f"not enough benign records for a training set of {total} "
            f"({len(benign)} available); achievable maximum is about {max_total}"
        )

    rng = np.random.default_rng(seed)
    picked = []
    drawn = set()
    if n_mal:
        drawn = set(rng.choice(len(malicious), size=n_mal, replace=False).tolist())
        picked.extend(malicious[i] for i in sorted(drawn))
    picked.extend(benign[i] for i in rng.choice(len(benign), size=n_ben, replace=False))
    order = rng.permutation(len(picked))
    leftover = [m for i, m in enumerate(malicious) if i not in drawn]
    return [picked[i] for i in order], leftover


def poison_fraction_of(records):
    if not records:
        return 0.0
    return sum(1 for r in records if not is_benign(r.label)) / len(records)


def record_to_dict(rec):
    d = asdict(rec)
    # Fixed key order for the canonical flow file.
    return {k: d[k] for k in FIELD_ORDER + ("protocol", "label")}


def record_from_dict(d):
    return FlowRecord(**{k: d[k] for k in FIELD_ORDER + ("protocol", "label")})


def write_flows(path, records):
    """Write the canonical flow file: one JSON object per line, fixed keys."""
    return write_jsonl(path, (record_to_dict(r) for r in records))


def read_flows(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"flow file not found: {path}")
    return [record_from_dict(d) for d in read_jsonl(path)]


def save_schema(path, schema):
    write_json(path, schema)
