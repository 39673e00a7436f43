"""Synthetic netflow corpus with learnable cross-field structure.

Benign flows come from a small client/server population where the server
determines the service, destination port, and the scale of every numeric
field, and each client favors two servers. Anomalous flows break exactly
that joint structure: they recombine known entities across servers, inflate
numerics, and (for a configurable share) introduce never-seen entities.
Protocol is tcp everywhere so the corpus survives protocol filtering.
"""

import csv

import numpy as np

from .ingest import BENIGN, FlowRecord, is_benign

ANOMALY = "anomaly"

# service, dst_port, duration scale, sbytes, dbytes, spkts, dpkts
SERVER_PROFILES = (
    ("http", "80", 0.4, 520, 6200, 6, 10),
    ("https", "443", 0.9, 840, 9400, 8, 12),
    ("ssh", "22", 14.0, 2600, 3100, 22, 20),
    ("dns", "53", 0.05, 130, 420, 2, 2),
    ("smtp", "25", 1.8, 4700, 800, 9, 5),
)

N_CLIENTS = 20
N_SRC_PORTS = 40

NOVEL_SERVICES = ("telnet", "irc", "rdp", "tor")


def _client_ip(i):
    return f"10.0.0.{i + 1}"


def _server_ip(i):
    return f"10.1.1.{i + 1}"


def _numeric_draws(profile, rng, inflate=1.0):
    _, _, dur, sb, db, sp, dp = profile
    noise = rng.lognormal(0.0, 0.3, size=5)
    return (
        float(dur * inflate * noise[0]),
        max(1, round(sb * inflate * noise[1])),
        max(1, round(db * inflate * noise[2])),
        max(1, round(sp * inflate * noise[3])),
        max(1, round(dp * inflate * noise[4])),
    )


def benign_flows(n, rng):
    """Client/server traffic where field combinations are strongly coupled."""
    records = []
    n_srv = len(SERVER_PROFILES)
    for _ in range(n):
        client = int(rng.integers(N_CLIENTS))
        if rng.random() < 0.85:
            # each client talks mostly to its two home servers
            server = (client + int(rng.random() < 0.5) * 2) % n_srv
        else:
            server = int(rng.integers(n_srv))
        profile = SERVER_PROFILES[server]
        duration, sb, db, sp, dp = _numeric_draws(profile, rng)
        records.append(FlowRecord(
            src_ip=_client_ip(client),
            dst_ip=_server_ip(server),
            src_port=str(49152 + int(rng.integers(N_SRC_PORTS))),
            dst_port=profile[1],
            service=profile[0],
            duration=duration,
            src_bytes=sb,
            dst_bytes=db,
            src_pkts=sp,
            dst_pkts=dp,
            protocol="tcp",
            label=BENIGN,
        ))
    return records


def anomalous_flows(n, rng, novel_rate=0.3):
    """Flows that scramble the benign structure or introduce new entities."""
    records = []
    n_srv = len(SERVER_PROFILES)
    for _ in range(n):
        novel = rng.random() < novel_rate
        client = int(rng.integers(N_CLIENTS))
        server = int(rng.integers(n_srv))
        # mismatched port/service pair plus numerics from a third profile
        port_srv = int(rng.integers(n_srv))
        svc_srv = (port_srv + 1 + int(rng.integers(n_srv - 1))) % n_srv
        num_srv = int(rng.integers(n_srv))
        inflate = float(rng.uniform(8.0, 40.0)) if rng.random() < 0.5 else 1.0
        duration, sb, db, sp, dp = _numeric_draws(SERVER_PROFILES[num_srv], rng, inflate)

        src_ip = _client_ip(client)
        dst_ip = _server_ip(server)
        src_port = str(49152 + int(rng.integers(N_SRC_PORTS)))
        dst_port = SERVER_PROFILES[port_srv][1]
        service = SERVER_PROFILES[svc_srv][0]
        if novel:
            # swap in entities the training vocabulary has never seen
            if rng.random() < 0.5:
                src_ip = f"10.9.0.{int(rng.integers(250)) + 1}"
            else:
                dst_ip = f"10.9.1.{int(rng.integers(250)) + 1}"
            if rng.random() < 0.5:
                src_port = str(1024 + int(rng.integers(1000)))
            if rng.random() < 0.5:
                service = NOVEL_SERVICES[int(rng.integers(len(NOVEL_SERVICES)))]
                dst_port = str(2000 + int(rng.integers(4000)))
        records.append(FlowRecord(
            src_ip=src_ip,
            dst_ip=dst_ip,
            src_port=src_port,
            dst_port=dst_port,
            service=service,
            duration=duration,
            src_bytes=sb,
            dst_bytes=db,
            src_pkts=sp,
            dst_pkts=dp,
            protocol="tcp",
            label=ANOMALY,
        ))
    return records


def make_corpus(n_benign, n_anomalous, seed, novel_rate=0.3):
    """Benign records followed by anomalous ones, from one seeded generator."""
    rng = np.random.default_rng(seed)
    return benign_flows(n_benign, rng) + anomalous_flows(n_anomalous, rng, novel_rate)


# Raw-CSV round trip: render records the way a capture export would look,
# so ingestion (schema resolution, labeling, protocol filter) can be
# exercised end to end without the real dataset.

RAW_HEADER = (
    "srcip", "sport", "dstip", "dsport", "proto", "state", "dur",
    "sbytes", "dbytes", "service", "spkts", "dpkts", "attack_cat", "label",
)

RAW_SCHEMA = {
    "has_header": True,
    "columns": {
        "src_ip": "srcip", "src_port": "sport", "dst_ip": "dstip",
        "dst_port": "dsport", "protocol": "proto", "duration": "dur",
        "src_bytes": "sbytes", "dst_bytes": "dbytes", "service": "service",
        "src_pkts": "spkts", "dst_pkts": "dpkts",
        "attack_category": "attack_cat", "label": "label",
    },
}


def write_raw_csv(path, records):
    """Render records as a headered capture CSV matching RAW_SCHEMA."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RAW_HEADER)
        for r in records:
            benign = is_benign(r.label)
            writer.writerow([
                r.src_ip, r.src_port, r.dst_ip, r.dst_port, r.protocol, "CON",
                repr(r.duration), r.src_bytes, r.dst_bytes, r.service,
                r.src_pkts, r.dst_pkts,
                "" if benign else r.label, "0" if benign else "1",
            ])
