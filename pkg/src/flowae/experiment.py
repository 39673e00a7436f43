"""Training-set poisoning experiment: one pipeline run per scenario.

Each scenario trains the whole pipeline from scratch on a training set with
a controlled fraction of records from one attack class mixed in, then
evaluates on a shared test set of held-out benign traffic plus the attack
classes under study. Poison records drawn into a scenario's training set
are excluded from that scenario's test set.
"""

import dataclasses
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, FlowaeError
from .ingest import build_training_set, is_benign, poison_fraction_of, read_flows, write_flows
from .ioutil import write_json
from .pipeline import run_pipeline


def _split_pools(records):
    benign = []
    attacks = {}
    for r in records:
        if is_benign(r.label):
            benign.append(r)
        else:
            attacks.setdefault(r.label, []).append(r)
    return benign, attacks


def run_experiment(config, force=False, log=None):
    """Run every configured scenario; returns the summary written to disk.

    A scenario failure is recorded in the summary (with the error message)
    and does not stop the remaining scenarios.
    """
    log = log or (lambda msg: None)
    exp = config.experiment
    if not exp.scenarios:
        return _write_summary(config, [], [])
    if not config.paths.corpus:
        raise ConfigError("experiment needs paths.corpus")

    records = list(read_flows(config.paths.corpus))
    benign, attacks = _split_pools(records)
    if not benign:
        raise DataError(f"corpus {config.paths.corpus} holds no benign records")
    eval_classes = config.evaluate.classes
    if eval_classes is None:
        eval_classes = tuple(sorted(attacks))
    if not eval_classes:
        raise DataError("corpus holds no attack records to evaluate against")

    rng = np.random.default_rng(config.split.seed)
    perm = rng.permutation(len(benign))
    n_test = round(config.split.test_fraction * len(benign))
    test_benign = [benign[i] for i in perm[:n_test]]
    train_pool = [benign[i] for i in perm[n_test:]]
    target = exp.train_size if exp.train_size is not None else len(train_pool)
    poison_pool = attacks.get(exp.poison_class, [])

    results = []
    for index, scenario in enumerate(exp.scenarios):
        seed = scenario.seed if scenario.seed is not None else exp.seed + index
        log(f"scenario {scenario.name}: poison_fraction={scenario.poison_fraction}")
        try:
            results.append(
                _run_scenario(config, scenario, seed, train_pool, poison_pool,
                              test_benign, attacks, eval_classes, force, log)
            )
        except FlowaeError as err:
            log(f"scenario {scenario.name}: FAILED: {err}")
            results.append({
                "name": scenario.name,
                "poison_fraction": scenario.poison_fraction,
                "status": "failed",
                "error": str(err),
                "exit_code": err.exit_code,
            })
    return _write_summary(config, eval_classes, results)


def _run_scenario(config, scenario, seed, train_pool, poison_pool, test_benign,
                  attacks, eval_classes, force, log):
    train, leftover = build_training_set(
        train_pool, poison_pool, scenario.poison_fraction,
        len(train_pool) if config.experiment.train_size is None
        else config.experiment.train_size,
        seed,
    )
    if scenario.poison_fraction == 0 and any(not is_benign(r.label) for r in train):
        raise DataError("zero-poison scenario produced a non-benign training record")

    if not test_benign:
        raise DataError("benign holdout is empty; raise split.test_fraction")
    test = list(test_benign)
    for cls in eval_classes:
        cls_records = leftover if cls == config.experiment.poison_class else attacks.get(cls, [])
        if not cls_records:
            raise DataError(f"no {cls!r} records left for the test set")
        test.extend(cls_records)

    scen_dir = Path(config.paths.out) / scenario.name
    scen_dir.mkdir(parents=True, exist_ok=True)
    write_flows(scen_dir / "train.jsonl", train)
    write_flows(scen_dir / "test.jsonl", test)
    scen_config = dataclasses.replace(
        config,
        paths=dataclasses.replace(
            config.paths, out=str(scen_dir), corpus=None, train=None, test=None
        ),
        evaluate=dataclasses.replace(config.evaluate, classes=tuple(eval_classes)),
    )
    result = run_pipeline(scen_config, force=force,
                          log=lambda msg: log(f"  {scenario.name}/{msg}"))
    report = result["report"]
    return {
        "name": scenario.name,
        "poison_fraction": scenario.poison_fraction,
        "achieved_poison_fraction": poison_fraction_of(train),
        "train_records": len(train),
        "test_records": len(test),
        "status": "ok",
        "optimal": {cls: report["classes"][cls]["optimal"] for cls in eval_classes},
        "report": f"{scenario.name}/report.json",
    }


def _write_summary(config, eval_classes, results):
    out = Path(config.paths.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "poison_class": config.experiment.poison_class,
        "eval_classes": list(eval_classes),
        "scenarios": results,
    }
    write_json(out / "summary.json", summary)
    return summary
