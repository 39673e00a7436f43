"""Field-tagged entity tokens and the vocabulary built from sampled pairs.

Every flow becomes exactly ten tokens, one per feature field, rendered as
``field_tag:value`` so equal values in different fields stay distinct
entities (src_port:80 is not dst_port:80). Numeric fields contribute their
quantile bin id as the value.

The vocabulary contains exactly the entities that survived positive-pair
subsampling; id 0 is reserved for unknown entities, which downstream embed
as the zero vector.
"""

import math

from .discretize import assign_bin
from .errors import DataError
from .ingest import FIELD_ORDER, NUMERIC_FIELDS
from .ioutil import read_json, write_json

UNK_ID = 0


def make_token(field_tag, value):
    return f"{field_tag}:{value}"


def split_token(token):
    tag, _, value = token.partition(":")
    return tag, value


def tokenize_flow(record, binners):
    """Render one record as its ten field-tagged tokens, in fixed field order.

    ``binners`` maps each numeric field name to its fitted QuantileBinner.
    Total for any record: bin assignment clamps out-of-range values.
    """
    tokens = []
    for field in FIELD_ORDER:
        value = record.feature(field)
        if field in NUMERIC_FIELDS:
            value = assign_bin(binners[field], value)
        tokens.append(f"{field}:{value}")
    return tokens


def count_token_frequencies(token_lists):
    """First pass over the tokenized corpus: absolute counts and the total."""
    counts = {}
    total = 0
    for tokens in token_lists:
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
            total += 1
    return counts, total


def acceptance_probability(freq, rho):
    """Keep-probability for one token: min(1, sqrt(rho / relative frequency))."""
    if freq <= 0.0:
        return 1.0
    p = math.sqrt(rho / freq)
    return p if p < 1.0 else 1.0


def accept_pair(pair, frequencies, rho, rng):
    """Bernoulli keep/drop for a candidate positive pair.

    Accepted with probability p(a) * p(b) where p discounts frequent tokens;
    ``frequencies`` maps token -> relative frequency from the counting pass.
    A single uniform draw is consumed per call.
    """
    a, b = pair
    p = acceptance_probability(frequencies.get(a, 0.0), rho) * acceptance_probability(
        frequencies.get(b, 0.0), rho
    )
    return rng.random() < p


class Vocabulary:
    """Token <-> id bijection for ids 1..V, with pair-occurrence counts.

    Id 0 is the reserved UNK id: it is never assigned to a token and is what
    ``lookup`` returns for entities never seen in an accepted pair.
    """

    def __init__(self, tokens, counts):
        if len(tokens) != len(counts):
            raise DataError("tokens and counts length mismatch")
        if not tokens:
            raise DataError("empty vocabulary")
        if any(c < 1 for c in counts):
            raise DataError("every vocabulary token needs a count >= 1")
        self._tokens = list(tokens)
        self._counts = list(counts)
        self._ids = {tok: i + 1 for i, tok in enumerate(self._tokens)}
        if len(self._ids) != len(self._tokens):
            raise DataError("duplicate token in vocabulary")

    @property
    def size(self):
        """Number of real (non-UNK) entities; valid ids are 1..size."""
        return len(self._tokens)

    def __len__(self):
        return len(self._tokens)

    def __contains__(self, token):
        return token in self._ids

    def lookup(self, token):
        """Token's id, or UNK_ID (0) when absent: the out-of-vocabulary path."""
        return self._ids.get(token, UNK_ID)

    def token(self, token_id):
        if not 1 <= token_id <= len(self._tokens):
            raise DataError(f"id {token_id} out of range 1..{len(self._tokens)}")
        return self._tokens[token_id - 1]

    def count(self, token_id):
        return self._counts[token_id - 1]

    @property
    def tokens(self):
        return tuple(self._tokens)

    @property
    def counts(self):
        return tuple(self._counts)

    def lookup_flow(self, tokens):
        return [self._ids.get(t, UNK_ID) for t in tokens]


def build_vocabulary(accepted_pairs):
    """Vocabulary from the accepted positive pairs, ids in first-appearance order."""
    tokens = []
    counts = {}
    for a, b in accepted_pairs:
        for tok in (a, b):
            if tok not in counts:
                tokens.append(tok)
                counts[tok] = 1
            else:
                counts[tok] += 1
    if not tokens:
        raise DataError("no accepted pairs: cannot build a vocabulary")
    return Vocabulary(tokens, [counts[t] for t in tokens])


def save_vocabulary(path, vocab):
    """JSON with the ordered token array (index = id - 1) and parallel counts."""
    write_json(path, {"tokens": list(vocab.tokens), "counts": list(vocab.counts)})


def load_vocabulary(path):
    data = read_json(path)
    return Vocabulary(data["tokens"], data["counts"])
