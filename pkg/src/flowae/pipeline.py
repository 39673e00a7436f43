"""Resumable stage runner: split -> bins -> vocab -> embeddings -> AE -> scores.

Every stage persists its artifact under the output directory and is skipped
on rerun when that artifact already exists (unless forced), so an
interrupted run picks up where it stopped. All randomness comes from seeds
in the config, which makes artifacts byte-identical across reruns.
"""

import shutil
from collections import Counter
from pathlib import Path

import numpy as np

from . import autoencoder as ae
from . import evaluate as ev
from . import sgns
from .config import save_config
from .discretize import fit_quantiles, load_binners, save_binners
from .errors import ConfigError, DataError
from .ingest import BENIGN, NUMERIC_FIELDS, is_benign, read_flows, write_flows
from .ioutil import read_json, write_json
from .vocab import load_vocabulary, save_vocabulary, build_vocabulary, tokenize_flow

STAGE_ORDER = (
    "split",
    "fit-bins",
    "build-vocab",
    "train-embeddings",
    "train-ae",
    "score",
    "evaluate",
)

# Artifact filenames each stage must have produced before it can be skipped.
STAGE_ARTIFACTS = {
    "split": ("train.jsonl", "test.jsonl"),
    "fit-bins": ("binners.json",),
    "build-vocab": ("vocab.json", "pairs.npy"),
    "train-embeddings": ("embeddings.json", "sgns_losses.json"),
    "train-ae": ("train_vectors.npy", "ae.json", "ae_losses.json"),
    "score": ("scores.csv",),
    "evaluate": ("report.json",),
}


class PipelineRun:
    """One pipeline invocation over a fixed output directory."""

    def __init__(self, config, force=False, log=None):
        self.config = config
        self.force = force
        self.log = log or (lambda msg: None)
        self.out = Path(config.paths.out)
        self._flows = {}

    def path(self, name):
        return self.out / name

    def _read_flows(self, name):
        if name not in self._flows:
            self._flows[name] = list(read_flows(self.path(name)))
        return self._flows[name]

    def _done(self, stage):
        return all(self.path(n).exists() for n in STAGE_ARTIFACTS[stage])

    def run(self, stop_after=None):
        """Execute stages in order; returns {"stages": ..., "report": ...}."""
        if stop_after is not None and stop_after not in STAGE_ORDER:
            raise ConfigError(
                f"unknown stage {stop_after!r}; stages are {', '.join(STAGE_ORDER)}"
            )
        self.out.mkdir(parents=True, exist_ok=True)
        save_config(self.path("config.json"), self.config)
        statuses = {}
        report = None
        for stage in STAGE_ORDER:
            if self._done(stage) and not self.force:
                statuses[stage] = "skipped"
                self.log(f"{stage}: skipped (artifacts present)")
            else:
                result = getattr(self, "_stage_" + stage.replace("-", "_"))()
                statuses[stage] = "ran"
                self.log(f"{stage}: ran")
                if stage == "evaluate":
                    report = result
            if stage == stop_after:
                break
        if report is None and "evaluate" in statuses and self.path("report.json").exists():
            report = read_json(self.path("report.json"))
        return {"stages": statuses, "report": report, "out": str(self.out)}

    # stage bodies, in pipeline order

    def _stage_split(self):
        paths = self.config.paths
        if paths.train and paths.test:
            for src, dst in ((paths.train, "train.jsonl"), (paths.test, "test.jsonl")):
                if not Path(src).exists():
                    raise DataError(f"flow file not found: {src}")
                shutil.copyfile(src, self.path(dst))
            self._flows.clear()
            return
        if not paths.corpus:
            # A caller (the experiment driver) may have written the split
            # straight into the output directory; keep it even under --force.
            if self.path("train.jsonl").exists() and self.path("test.jsonl").exists():
                return
            raise ConfigError("config needs paths.corpus or both paths.train and paths.test")
        records = list(read_flows(paths.corpus))
        benign = [r for r in records if is_benign(r.label)]
        attacks = [r for r in records if not is_benign(r.label)]
        if not benign:
            raise DataError(f"corpus {paths.corpus} holds no benign records")
        rng = np.random.default_rng(self.config.split.seed)
        perm = rng.permutation(len(benign))
        n_test = round(self.config.split.test_fraction * len(benign))
        test = [benign[i] for i in perm[:n_test]] + attacks
        train = [benign[i] for i in perm[n_test:]]
        write_flows(self.path("train.jsonl"), train)
        write_flows(self.path("test.jsonl"), test)
        self._flows.clear()

    def _stage_fit_bins(self):
        train = self._read_flows("train.jsonl")
        if not train:
            raise DataError("empty training split")
        n_bins = self.config.discretizer.n_bins
        binners = [
            fit_quantiles([r.feature(f) for r in train], n_bins, field=f)
            for f in NUMERIC_FIELDS
        ]
        save_binners(self.path("binners.json"), binners)

    def _binner_map(self):
        return {b.field: b for b in load_binners(self.path("binners.json"))}

    def _stage_build_vocab(self):
        binners = self._binner_map()
        token_lists = [tokenize_flow(r, binners) for r in self._read_flows("train.jsonl")]
        # separate stream from the trainer's, which starts at the bare seed
        rng = np.random.default_rng([self.config.sgns.seed, 1])
        accepted = sgns.sample_positive_pairs(token_lists, self.config.sgns.rho, rng)
        vocab = build_vocabulary(accepted)
        save_vocabulary(self.path("vocab.json"), vocab)
        sgns.save_pairs(self.path("pairs.npy"), sgns.pairs_to_ids(accepted, vocab))

    def _stage_train_embeddings(self):
        vocab = load_vocabulary(self.path("vocab.json"))
        pairs = sgns.load_pairs(self.path("pairs.npy"))
        matrix, losses = sgns.train_embeddings(pairs, vocab, self.config.sgns)
        sgns.save_embeddings(self.path("embeddings.json"), matrix)
        write_json(self.path("sgns_losses.json"), {"epoch_mean_bce": losses})

    def _encode(self, name):
        flows = self._read_flows(name)
        if not flows:
            raise DataError(f"{self.path(name)} holds no records")
        binners = self._binner_map()
        vocab = load_vocabulary(self.path("vocab.json"))
        matrix = sgns.load_embeddings(self.path("embeddings.json"))
        ids = [[vocab.lookup(t) for t in tokenize_flow(r, binners)] for r in flows]
        return ae.encode_flows(ids, matrix)

    def _stage_train_ae(self):
        vectors = self._encode("train.jsonl")
        ae.save_vectors(self.path("train_vectors.npy"), vectors)
        model, losses = ae.train_ae(vectors, self.config.ae)
        ae.save_ae(self.path("ae.json"), model)
        write_json(self.path("ae_losses.json"), {"epoch_mean_mse": losses})

    def _stage_score(self):
        model = ae.load_ae(self.path("ae.json"))
        vectors = self._encode("test.jsonl")
        mses = ae.score_vectors(model, vectors)
        test = self._read_flows("test.jsonl")
        scores = ev.ScoreSet(
            (i, r.label, m) for i, (r, m) in enumerate(zip(test, mses))
        )
        ev.write_scores(self.path("scores.csv"), scores)

    def _stage_evaluate(self):
        scores = ev.read_scores(self.path("scores.csv"))
        classes = self.config.evaluate.classes
        if classes is None:
            classes = tuple(c for c in scores.classes() if c != BENIGN)
        if not classes:
            raise DataError("test set holds no attack records to evaluate against")
        per_class = {}
        for cls in classes:
            sweep = ev.sweep_thresholds(scores, cls)
            sweep_name = f"sweep_{cls}.csv"
            ev.write_sweep(self.path(sweep_name), sweep)
            best = sweep.optimal()
            per_class[cls] = {
                "optimal": {
                    "cutoff": best.cutoff,
                    "tpr": best.tpr,
                    "tnr": best.tnr,
                    "f1": best.f1,
                },
                "sweep": sweep_name,
            }
        edges, counts = ev.histogram(scores, self.config.evaluate.n_buckets)
        ev.write_histogram(self.path("histogram.csv"), edges, counts)

        train_labels = Counter(r.label for r in self._read_flows("train.jsonl"))
        test_labels = Counter(e.label for e in scores)
        n_train = sum(train_labels.values())
        poisoned = n_train - train_labels.get(BENIGN, 0)
        # Relative artifact names only: reports from identically seeded runs
        # in different directories must hash identically.
        report = {
            "train_records": n_train,
            "test_records": len(scores),
            "train_poison_fraction": poisoned / n_train if n_train else 0.0,
            "train_class_counts": dict(sorted(train_labels.items())),
            "test_class_counts": dict(sorted(test_labels.items())),
            "classes": per_class,
            "histogram": "histogram.csv",
            "artifacts": {
                "binners": "binners.json",
                "vocab": "vocab.json",
                "embeddings": "embeddings.json",
                "ae": "ae.json",
                "scores": "scores.csv",
            },
        }
        write_json(self.path("report.json"), report)
        return report


def run_pipeline(config, force=False, stop_after=None, log=None):
    return PipelineRun(config, force=force, log=log).run(stop_after=stop_after)
