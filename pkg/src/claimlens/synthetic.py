"""Synthetic claim corpus with a known word-label generative model.

Each claim is a bag of words: signal words drawn with class-dependent
probabilities plus uniformly random noise words. Because the generator is
known, the exact Bayes posterior P(true | words) is computable per claim;
it serves both as an oracle for separability checks and as a planted
teacher whose probabilities a distilled student should reproduce.

Generative model (balanced classes, prior 1/2): a claim of class c
includes each of the 4 same-class signal words independently with
probability P_IN and each of the 4 opposite-class signal words with
probability P_CROSS; noise words carry no label information.
"""

from __future__ import annotations

import math
from importlib import resources
from typing import Optional

import numpy as np

from .corpus import ClaimRecord, Dataset, FAKE_LABEL, TRUE_LABEL, load_dataset
from .textprep import TextPrepConfig, stem, tokenize

SIGNAL_TRUE = ("verified", "confirmed", "peer", "journal")
SIGNAL_FAKE = ("miracle", "secret", "shocking", "hoax")
P_IN = 0.7
P_CROSS = 0.05

NOISE_WORDS = (
    "window", "garden", "coffee", "river", "mountain", "bridge", "music",
    "camera", "pencil", "orange", "yellow", "bottle", "market", "forest",
    "castle", "engine", "planet", "rocket", "silver", "copper", "stone",
    "cloud", "butter", "cheese", "ladder", "mirror", "carpet", "candle",
    "hammer", "needle", "basket", "pillow", "blanket", "lantern", "tunnel",
    "harbor", "meadow", "valley", "canyon", "desert",
)

BUNDLED_CORPUS = "synthetic_claims.jsonl"
_BUNDLED_SEED = 7
_BUNDLED_SIZE = 200


def generate_synthetic_corpus(n: int = _BUNDLED_SIZE, seed: int = _BUNDLED_SEED) -> Dataset:
    """Generate a balanced labeled corpus of n claims (n//2 true)."""
    if n < 2:
        raise ValueError("need at least 2 claims")
    rng = np.random.default_rng(seed)
    n_true = n // 2
    labels = [TRUE_LABEL] * n_true + [FAKE_LABEL] * (n - n_true)
    records = []
    for i, label in enumerate(labels):
        own = SIGNAL_TRUE if label == TRUE_LABEL else SIGNAL_FAKE
        cross = SIGNAL_FAKE if label == TRUE_LABEL else SIGNAL_TRUE
        words = [w for w in own if rng.random() < P_IN]
        words += [w for w in cross if rng.random() < P_CROSS]
        n_noise = int(rng.integers(4, 8))
        words += [str(w) for w in rng.choice(NOISE_WORDS, size=n_noise, replace=False)]
        order = rng.permutation(len(words))
        shuffled = [words[j] for j in order]
        if rng.random() < 0.5:
            shuffled.insert(0, "the")
        text = " ".join(shuffled).capitalize() + "."
        evidence = None
        source = "generator"
        if i % 7 == 0:
            evidence = f"traced to report {i} in the archive"
        records.append(
            ClaimRecord(
                id=f"syn-{i:04d}",
                text=text,
                label=label,
                source=source,
                date="2020-04-15",
                evidence=evidence,
            )
        )
    order = rng.permutation(n)
    shuffled_records = tuple(records[j] for j in order)
    return Dataset(records=shuffled_records, name=f"synthetic-{n}")


def bayes_posterior(text: str, config: Optional[TextPrepConfig] = None) -> float:
    """Exact P(true | words) under the generative model.

    Uses stemmed presence of the eight signal words; noise words cancel.
    """
    if config is None:
        config = TextPrepConfig()
    stems = set(tokenize(text, config))
    log_lr = 0.0
    for word in SIGNAL_TRUE:
        marker = stem(word) if config.stem else word
        if marker in stems:
            log_lr += math.log(P_IN / P_CROSS)
        else:
            log_lr += math.log((1.0 - P_IN) / (1.0 - P_CROSS))
    for word in SIGNAL_FAKE:
        marker = stem(word) if config.stem else word
        if marker in stems:
            log_lr -= math.log(P_IN / P_CROSS)
        else:
            log_lr -= math.log((1.0 - P_IN) / (1.0 - P_CROSS))
    return 1.0 / (1.0 + math.exp(-log_lr))


def synthetic_teacher_probabilities(
    dataset: Dataset, config: Optional[TextPrepConfig] = None
) -> dict[str, float]:
    """Planted teacher: the Bayes posterior for every record id."""
    return {rec.id: bayes_posterior(rec.text, config) for rec in dataset.records}


def load_bundled_corpus() -> Dataset:
    """The 200-claim corpus shipped inside the package."""
    ref = resources.files("claimlens").joinpath("data").joinpath(BUNDLED_CORPUS)
    with resources.as_file(ref) as path:
        return load_dataset(path, format="jsonl", name="synthetic-200")
