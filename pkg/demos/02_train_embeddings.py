#!/usr/bin/env python3
"""Entity embeddings from co-occurrence within flows.

Every flow becomes ten field:value tokens; tokens that appear in the same
flow are positive pairs, and frequent tokens get thinned by the sqrt
subsampling rule before training. After skip-gram training with negative
sampling, entities that co-occur (a service and its usual port) end up
with high cosine similarity while unrelated entities do not.
"""

import numpy as np

from flowae.discretize import fit_quantiles
from flowae.ingest import NUMERIC_FIELDS
from flowae.sgns import SgnsConfig, sample_positive_pairs, train_embeddings
from flowae.synthetic import make_corpus
from flowae.vocab import build_vocabulary, tokenize_flow

flows = make_corpus(n_benign=1500, n_anomalous=0, seed=3)
binners = {
    field: fit_quantiles([getattr(f, field) for f in flows], 10, field=field)
    for field in NUMERIC_FIELDS
}
token_lists = [tokenize_flow(f, binners) for f in flows]

config = SgnsConfig(dim=10, epochs=5, seed=1)
rng = np.random.default_rng(config.seed)
pairs = sample_positive_pairs(token_lists, config.rho, rng)
vocab = build_vocabulary(pairs)
print(f"{len(token_lists) * 90} candidate pairs -> {len(pairs)} kept "
      f"after subsampling, vocabulary of {vocab.size} entities")

ids = [(vocab.lookup(a), vocab.lookup(b)) for a, b in pairs]
matrix, losses = train_embeddings(ids, vocab, config)
print(f"epoch mean BCE: {losses[0]:.4f} -> {losses[-1]:.4f}")


def cosine(tok_a, tok_b):
    a = matrix.row(vocab.lookup(tok_a))
    b = matrix.row(vocab.lookup(tok_b))
    return float(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))


print("\ncosine similarity between entity vectors:")
for a, b in [("service:dns", "dst_port:53"),
             ("service:http", "dst_port:80"),
             ("service:dns", "dst_port:80"),
             ("service:ssh", "dst_port:53")]:
    print(f"  {a:<14} vs {b:<12} {cosine(a, b):+.3f}")
