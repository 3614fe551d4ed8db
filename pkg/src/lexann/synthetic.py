"""Deterministic stand-in for a pretrained word-embedding table.

Real embeddings cannot always be shipped with the tests, so this builds a
corpus with the statistics that matter for nearest-neighbour experiments
on them:

* a shared offset vector common to all words;
* a few dominant directions whose coefficients vary per word but carry no
  neighbourhood information (in trained embeddings these track word
  frequency, which is why removing them helps downstream tasks);
* a two-level topic hierarchy spread over all remaining directions with a
  slowly decaying spectrum, which is what gives each word its neighbours;
* log-normal per-word norms and a Zipf-like topic size distribution.

Component scale (std around 0.4) matches published 300-d GloVe tables.
"""

from __future__ import annotations

import numpy as np

from .embeddings import EmbeddingCorpus


def _random_rotation(rng, dim):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def glove_like_corpus(n: int = 10_000, dim: int = 300, seed: int = 0, *,
                      n_nuisance: int = 7, nuisance_share: float = 0.15,
                      n_topics: int = 600, n_super: int = 40, decay: float = 0.3,
                      offset_scale: float = 0.15, super_weight: float = 0.55,
                      topic_weight: float = 0.75, word_weight: float = 0.7) -> EmbeddingCorpus:
    """Generate ``n`` synthetic ``dim``-dimensional word vectors.

    ``nuisance_share`` is the fraction of total variance carried by the
    ``n_nuisance`` dominant directions.
    """
    if n < 1 or dim < 2:
        raise ValueError(f"need n >= 1 and dim >= 2, got n={n}, dim={dim}")
    # small spaces cannot spare many directions for nuisance structure
    n_nuisance = min(n_nuisance, dim // 4)
    rng = np.random.default_rng(seed)
    basis = _random_rotation(rng, dim)
    nuisance_axes, semantic_axes = basis[:, :n_nuisance], basis[:, n_nuisance:]
    k = dim - n_nuisance
    spectrum = (np.arange(k) + 10.0) ** -decay
    spectrum /= np.sqrt(np.mean(spectrum ** 2))

    def draw(count):
        return (rng.standard_normal((count, k)) * spectrum) @ semantic_axes.T

    supers = draw(n_super) * super_weight
    topic_parent = rng.integers(0, n_super, size=n_topics)
    topics = supers[topic_parent] + draw(n_topics) * topic_weight
    weights = 1.0 / (np.arange(n_topics) + 5.0)
    word_topic = rng.choice(n_topics, size=n, p=weights / weights.sum())
    semantic = topics[word_topic] + draw(n) * word_weight

    # dominant directions: a log-frequency proxy plus independent per-word noise
    log_freq = np.log(np.arange(1, n + 1))[rng.permutation(n)]
    log_freq = (log_freq - log_freq.mean()) / (log_freq.std() or 1.0)
    loadings = rng.standard_normal(n_nuisance)
    coeff = 0.6 * log_freq[:, None] * loadings + 0.8 * rng.standard_normal((n, n_nuisance))
    coeff *= (np.linspace(1.6, 0.8, n_nuisance) / np.sqrt((coeff ** 2).mean(axis=0)))
    sem_var = (semantic ** 2).sum(axis=1).mean()
    nuis_var = (coeff ** 2).sum(axis=1).mean()
    if n_nuisance:
        coeff *= np.sqrt(nuisance_share / (1 - nuisance_share) * sem_var / nuis_var)
    nuisance = coeff @ nuisance_axes.T

    amplitude = np.exp(rng.normal(0.0, 0.25, size=(n, 1)))
    offset = rng.standard_normal(dim) * offset_scale
    vectors = offset + amplitude * (semantic + nuisance)
    vectors *= 0.4 / vectors.std()
    words = [f"w{i:05d}" for i in range(n)]
    return EmbeddingCorpus(words, vectors, "synthetic")
