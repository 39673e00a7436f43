"""Single-hidden-layer autoencoder over concatenated entity embeddings.

A flow's ten embedding rows are concatenated into one input vector (100
dims at the default embedding size); unknown entities contribute a zero
block. The autoencoder compresses through a tanh code layer narrower than
the input, reconstructs with an identity output layer, and scores records
by per-record mean squared reconstruction error. Training never touches
the embedding table: embeddings are frozen before this phase starts.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, DivergenceError
from .ioutil import read_json, write_json


@dataclass(frozen=True)
class AeConfig:
    hidden_dim: int = 32
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 64
    seed: int = 2

    def __post_init__(self):
        if self.hidden_dim < 1:
            raise ConfigError("hidden_dim must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")


class AeModel:
    """Weights for reconstruct(x) = w2 @ tanh(w1 @ x + b1) + b2."""

    activation = "tanh"

    def __init__(self, w1, b1, w2, b2):
        self.w1 = np.asarray(w1, dtype=float)
        self.b1 = np.asarray(b1, dtype=float)
        self.w2 = np.asarray(w2, dtype=float)
        self.b2 = np.asarray(b2, dtype=float)
        hidden_dim, input_dim = self.w1.shape
        if hidden_dim >= input_dim:
            raise ConfigError(
                f"code layer must be narrower than the input: "
                f"hidden {hidden_dim} >= input {input_dim}"
            )
        if self.w2.shape != (input_dim, hidden_dim):
            raise DataError("w2 shape must be (input_dim, hidden_dim)")
        if self.b1.shape != (hidden_dim,) or self.b2.shape != (input_dim,):
            raise DataError("bias shapes must match layer widths")
        for arr in (self.w1, self.b1, self.w2, self.b2):
            if not np.all(np.isfinite(arr)):
                raise DivergenceError("non-finite autoencoder weight")

    @property
    def input_dim(self):
        return self.w1.shape[1]

    @property
    def hidden_dim(self):
        return self.w1.shape[0]


def encode_flow(token_ids, matrix):
    """Concatenate the embedding rows of one record's token ids."""
    return matrix.vectors[list(token_ids)].reshape(-1)


def encode_flows(token_id_lists, matrix):
    """Stack per-record encodings into an (N, n_fields * dim) matrix."""
    ids = np.asarray(list(token_id_lists), dtype=np.int64)
    if ids.ndim != 2:
        raise DataError("expected a rectangular batch of token-id lists")
    n, fields = ids.shape
    return matrix.vectors[ids.reshape(-1)].reshape(n, fields * matrix.dim)


def init_ae(input_dim, config, rng=None):
    """Glorot-uniform weight init (biases zero), seeded from the config."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    h, d = config.hidden_dim, input_dim
    limit = np.sqrt(6.0 / (d + h))
    w1 = rng.uniform(-limit, limit, size=(h, d))
    w2 = rng.uniform(-limit, limit, size=(d, h))
    return AeModel(w1, np.zeros(h), w2, np.zeros(d))


def forward_batch(model, x):
    """Reconstructions for an (N, input_dim) batch."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.input_dim:
        raise DataError(f"expected input width {model.input_dim}, got {x.shape[1]}")
    hidden = np.tanh(x @ model.w1.T + model.b1)
    out = hidden @ model.w2.T + model.b2
    if not np.all(np.isfinite(out)):
        raise DivergenceError("non-finite autoencoder output")
    return out


def forward(model, x):
    """Reconstruction of a single input vector."""
    return forward_batch(model, np.asarray(x, dtype=float)[None, :])[0]


def reconstruction_error(model, x):
    """Per-record mean squared error between x and its reconstruction."""
    x = np.asarray(x, dtype=float)
    diff = forward(model, x) - x
    return float(diff @ diff) / x.size


def score_vectors(model, x):
    """Vector of per-record MSEs for an (N, input_dim) batch."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    diff = forward_batch(model, x) - x
    return np.mean(diff * diff, axis=1)


def ae_gradients(model, batch):
    """Mean-over-batch MSE loss and its gradients w.r.t. every parameter.

    Backprop through tanh: with per-record loss (1/D) * sum((xhat - x)^2)
    the output delta is 2 * (xhat - x) / (D * batch).
    """
    x = np.atleast_2d(np.asarray(batch, dtype=float))
    n, d = x.shape
    pre = x @ model.w1.T + model.b1
    hidden = np.tanh(pre)
    xhat = hidden @ model.w2.T + model.b2
    diff = xhat - x
    loss = float(np.mean(np.sum(diff * diff, axis=1) / d))

    delta_out = (2.0 / (d * n)) * diff
    gw2 = delta_out.T @ hidden
    gb2 = delta_out.sum(axis=0)
    delta_h = (delta_out @ model.w2) * (1.0 - hidden * hidden)
    gw1 = delta_h.T @ x
    gb1 = delta_h.sum(axis=0)
    return loss, gw1, gb1, gw2, gb2


def train_ae(vectors, config):
    """Mini-batch SGD on reconstruction MSE; returns (model, epoch losses).

    Shuffles with a seeded generator every epoch, so identical data and
    config reproduce a bit-identical model. The loss series holds the mean
    per-record MSE of each epoch, measured before each batch's update.
    """
    x = np.atleast_2d(np.asarray(vectors, dtype=float))
    if x.size == 0:
        raise DataError("no training vectors for the autoencoder")
    n, input_dim = x.shape

    rng = np.random.default_rng(config.seed)
    model = init_ae(input_dim, config, rng=rng)
    lr = config.learning_rate
    losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = x[order[start:start + config.batch_size]]
            loss, gw1, gb1, gw2, gb2 = ae_gradients(model, batch)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch offset {start}"
                )
            model.w1 -= lr * gw1
            model.b1 -= lr * gb1
            model.w2 -= lr * gw2
            model.b2 -= lr * gb2
            epoch_loss += loss * len(batch)
        losses.append(epoch_loss / n)
    for arr in (model.w1, model.b1, model.w2, model.b2):
        if not np.all(np.isfinite(arr)):
            raise DivergenceError("non-finite autoencoder weight after training")
    return model, losses


def save_ae(path, model):
    """JSON with dims, activation name, and row-major weight arrays."""
    write_json(path, {
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "activation": model.activation,
        "w1": [list(map(float, row)) for row in model.w1],
        "b1": list(map(float, model.b1)),
        "w2": [list(map(float, row)) for row in model.w2],
        "b2": list(map(float, model.b2)),
    })


def load_ae(path):
    data = read_json(path)
    if data.get("activation") != "tanh":
        raise DataError(f"unsupported activation {data.get('activation')!r}")
    return AeModel(data["w1"], data["b1"], data["w2"], data["b2"])


def save_vectors(path, x):
    np.save(path, np.asarray(x, dtype=float), allow_pickle=False)


def load_vectors(path):
    return np.load(path, allow_pickle=False)
