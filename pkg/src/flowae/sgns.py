"""Skip-gram-with-negative-sampling training of entity embeddings.

Positive pairs are the co-occurrences of entities inside one flow record
(all 90 ordered pairs of its 10 tokens, thinned by the acceptance sampler in
:mod:`flowae.vocab`). Negatives reuse the target with a randomly drawn
context and label 0, at a fixed ratio per positive. A single shared
embedding table is trained by plain sequential SGD on the binary
cross-entropy of sigmoid(u . v); row 0 is the UNK row, pinned to zeros and
never touched by training.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DataError, DivergenceError
from .ioutil import read_json, write_json
from .vocab import UNK_ID, accept_pair, count_token_frequencies

_LOG_EPS = 1e-12
_MAX_REDRAWS = 10


class TrainingPair(NamedTuple):
    target: int
    context: int
    label: int


@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 10
    neg_ratio: int = 7
    learning_rate: float = 0.025
    epochs: int = 5
    rho: float = 1e-3
    seed: int = 1
    neg_distribution: str = "uniform"  # or "frequency" (counts ** 0.75)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"embedding dim must be >= 1, got {self.dim}")
        if self.neg_ratio < 1:
            raise ConfigError(f"neg_ratio must be >= 1, got {self.neg_ratio}")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.rho <= 0:
            raise ConfigError("rho must be positive")
        if self.neg_distribution not in ("uniform", "frequency"):
            raise ConfigError(f"unknown neg_distribution {self.neg_distribution!r}")


class EmbeddingMatrix:
    """(V+1) x dim table of entity vectors; row 0 is the all-zero UNK row."""

    def __init__(self, vectors, tokens):
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens) + 1:
            raise DataError("embedding matrix must have one row per token plus UNK")
        if not np.all(np.isfinite(vectors)):
            raise DivergenceError("non-finite entries in embedding matrix")
        if np.any(vectors[0] != 0.0):
            raise DataError("UNK row (id 0) must be all zeros")
        self.vectors = vectors
        self.tokens = tuple(tokens)

    @property
    def dim(self):
        return self.vectors.shape[1]

    @property
    def size(self):
        return len(self.tokens)

    def row(self, token_id):
        return self.vectors[token_id]


def positive_pairs(tokens):
    """All ordered (target, context) pairs of one record's tokens.

    Pairs every position with every other position: len(tokens) * (len - 1)
    candidates (90 for a full 10-token record). Acceptance sampling is the
    caller's job.
    """
    n = len(tokens)
    return [(tokens[i], tokens[j]) for i in range(n) for j in range(n) if i != j]


def sample_positive_pairs(token_lists, rho, rng):
    """Acceptance-sampled positive token pairs, corpus order preserved.

    Runs the counting pass for relative frequencies, then thins each record's
    ordered pairs with :func:`flowae.vocab.accept_pair`.
    """
    token_lists = list(token_lists)
    counts, total = count_token_frequencies(token_lists)
    if total == 0:
        raise DataError("empty corpus: no tokens to pair")
    freqs = {tok: c / total for tok, c in counts.items()}
    accepted = []
    for tokens in token_lists:
        for pair in positive_pairs(tokens):
            if accept_pair(pair, freqs, rho, rng):
                accepted.append(pair)
    return accepted


def _negative_sampler(vocab, distribution):
    """Returns draw(rng, k) -> k context ids over 1..V for the distribution."""
    v = vocab.size
    if distribution == "uniform":
        def draw(rng, k):
            return rng.integers(1, v + 1, size=k)
    else:
        weights = np.asarray(vocab.counts, dtype=float) ** 0.75
        cum = np.cumsum(weights / weights.sum())
        def draw(rng, k):
            return np.searchsorted(cum, rng.random(k), side="right") + 1
    return draw


def negative_pairs(positive, k, vocab, rng, draw=None):
    """k negative pairs for one positive: same target, random context, label 0.

    A drawn context equal to the true context is redrawn up to a small bound
    and then accepted as-is, so tiny vocabularies cannot loop forever.
    """
    if vocab.size < 2:
        raise DataError("need a vocabulary of at least 2 to draw negatives")
    if draw is None:
        draw = _negative_sampler(vocab, "uniform")
    contexts = draw(rng, k)
    out = []
    for ctx in contexts:
        ctx = int(ctx)
        for _ in range(_MAX_REDRAWS):
            if ctx != positive.context:
                break
            ctx = int(draw(rng, 1)[0])
        out.append(TrainingPair(positive.target, ctx, 0))
    return out


def training_stream(positive_ids, config, vocab, rng):
    """Yield the epoch's TrainingPairs: each positive followed by its negatives.

    Order and rng consumption match one epoch of :func:`train_embeddings`
    (minus the shuffle), so stream-level properties like the exact
    negative:positive ratio can be checked against the real pipeline.
    """
    draw = _negative_sampler(vocab, config.neg_distribution)
    for target, context in positive_ids:
        pos = TrainingPair(int(target), int(context), 1)
        if pos.target == UNK_ID or pos.context == UNK_ID:
            raise DataError("training pair references the UNK id")
        yield pos
        yield from negative_pairs(pos, config.neg_ratio, vocab, rng, draw=draw)


def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _bce(s, label):
    if label:
        return -math.log(max(s, _LOG_EPS))
    return -math.log(max(1.0 - s, _LOG_EPS))


def sgd_step(u, v, label, lr):
    """One SGD update on a single pair; returns (u_new, v_new, loss).

    With s = sigmoid(u . v) and g = s - label, both vectors move against
    their gradient computed from the pre-update values:
    u' = u - lr*g*v, v' = v - lr*g*u. Loss is the binary cross-entropy with
    clamped logs.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise DivergenceError("non-finite embedding vector in sgd_step")
    s = _sigmoid(float(u @ v))
    g = s - label
    u_new = u - (lr * g) * v
    v_new = v - (lr * g) * u
    return u_new, v_new, _bce(s, label)


def init_embeddings(vocab, config, rng=None):
    """Seeded uniform init in [-0.5/dim, 0.5/dim) for ids 1..V; UNK stays zero."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    scale = 0.5 / config.dim
    vectors = np.zeros((vocab.size + 1, config.dim))
    vectors[1:] = rng.uniform(-scale, scale, size=(vocab.size, config.dim))
    return EmbeddingMatrix(vectors, vocab.tokens)


def train_embeddings(positive_ids, vocab, config):
    """Train the embedding table on accepted positive pairs.

    positive_ids: sequence of (target_id, context_id) with ids >= 1, as
    produced by vocabulary lookup of the accepted pairs. Each epoch shuffles
    the positives and applies one positive update plus ``neg_ratio`` negative
    updates per pair, drawing fresh negative contexts every epoch. Returns
    (EmbeddingMatrix, mean-loss-per-epoch list). Fully deterministic for a
    fixed config: same inputs and seed give a bit-identical matrix.
    """
    positive_ids = np.asarray(list(positive_ids), dtype=np.int64)
    if positive_ids.size == 0:
        raise DataError("no positive pairs to train on")
    if positive_ids.min() < 1:
        raise DataError("training pair references the UNK id")
    if positive_ids.max() > vocab.size:
        raise DataError("training pair id outside the vocabulary")

    rng = np.random.default_rng(config.seed)
    matrix = init_embeddings(vocab, config, rng=rng)
    emb = matrix.vectors
    draw = _negative_sampler(vocab, config.neg_distribution)
    lr = config.learning_rate
    k = config.neg_ratio
    n = len(positive_ids)
    epoch_losses = []

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        steps = 0
        for step, idx in enumerate(order):
            t, c = positive_ids[idx]
            total_loss += _update(emb, int(t), int(c), 1, lr)
            steps += 1
            for neg in negative_pairs(TrainingPair(int(t), int(c), 1), k, vocab, rng, draw=draw):
                total_loss += _update(emb, neg.target, neg.context, 0, lr)
                steps += 1
            if not math.isfinite(total_loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, positive step {step}"
                )
        epoch_losses.append(total_loss / steps)

    if not np.all(np.isfinite(emb)):
        raise DivergenceError("non-finite embedding after training")
    return EmbeddingMatrix(emb, vocab.tokens), epoch_losses


def _update(emb, t, c, label, lr):
    """In-place sgd_step on matrix rows t and c; returns the pair's loss."""
    if t == c:
        x = emb[t]
        s = _sigmoid(float(x @ x))
        g = s - label
        # Both gradient contributions are the same scalar multiple of the row.
        emb[t] = x * (1.0 - 2.0 * lr * g)
        return _bce(s, label)
    u = emb[t]
    v = emb[c]
    s = _sigmoid(float(u @ v))
    g = s - label
    u_old = u.copy()
    u -= (lr * g) * v
    v -= (lr * g) * u_old
    return _bce(s, label)


def save_embeddings(path, matrix):
    """JSON with dim, token list, and the full row-major table (row 0 = UNK)."""
    write_json(path, {
        "dim": matrix.dim,
        "tokens": list(matrix.tokens),
        "vectors": [list(map(float, row)) for row in matrix.vectors],
    })


def load_embeddings(path):
    data = read_json(path)
    matrix = EmbeddingMatrix(np.asarray(data["vectors"], dtype=float), data["tokens"])
    if matrix.dim != int(data["dim"]):
        raise DataError("embedding dim mismatch in file")
    return matrix


def pairs_to_ids(pairs, vocab):
    """Accepted token pairs -> (N, 2) id array for the trainer."""
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    ids = np.asarray(
        [(vocab.lookup(a), vocab.lookup(b)) for a, b in pairs], dtype=np.int64
    )
    if ids.min() < 1:
        raise DataError("accepted pair contains a token missing from the vocabulary")
    return ids


def save_pairs(path, ids):
    np.save(path, np.asarray(ids, dtype=np.int64), allow_pickle=False)


def load_pairs(path):
    return np.load(path, allow_pickle=False)
