import pytest

from flowae.config import config_from_dict
from flowae.ingest import write_flows
from flowae.synthetic import make_corpus


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """600 benign + 120 anomalous flows, written once per session."""
    path = tmp_path_factory.mktemp("corpus") / "flows.jsonl"
    write_flows(path, make_corpus(600, 120, seed=11))
    return path


def _merge(base, extra):
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


@pytest.fixture
def fast_config():
    """Factory for a config small enough that a full run takes ~1 s."""

    def make(corpus, out, **extra):
        base = {
            "paths": {"corpus": str(corpus), "out": str(out)},
            "split": {"test_fraction": 0.25, "seed": 7},
            "sgns": {"epochs": 2, "dim": 6, "seed": 1},
            "ae": {"hidden_dim": 8, "epochs": 6, "seed": 2},
        }
        return config_from_dict(_merge(base, extra))

    return make
