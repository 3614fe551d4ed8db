"""Dense vector -> term multiset encoders.

Two schemes are provided:

* fake words: feature ``i`` becomes the term ``f<i>p`` (positive value) or
  ``f<i>n`` (negative value), repeated ``floor(Q * |w_i|)`` times.
* lexical LSH: features are rounded, tagged with their 1-based index
  (``"3_0.7"``), optionally joined into n-grams, and compressed with a
  bucketed MinHash into signature terms ``mh_<j>_<r>_<min hash hex>``.

Hash family
-----------
Token ``t`` is first hashed with 64-bit FNV-1a over its UTF-8 bytes. Hash
function ``j`` is ``splitmix64(fnv1a(t) ^ splitmix64(j))`` where
``splitmix64`` is the finalizer of Steele et al.'s SplitMix64 generator
(``x += 0x9E3779B97F4A7C15`` then the two xor-shift-multiply rounds).
Everything is unsigned 64-bit arithmetic modulo 2**64, so signatures are
identical on every platform. Bucket ``r`` of ``b`` covers hash values in
``[r * W, (r + 1) * W)`` with ``W = 2**64 // b``; the top remainder
``2**64 mod b`` values fall into the last bucket.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from functools import lru_cache

import numpy as np

from .errors import EncodingError

UNIT_TOLERANCE = 1e-6

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


@dataclass(frozen=True)
class FakeWordsConfig:
    q: int = 50

    def __post_init__(self):
        if int(self.q) != self.q or self.q <= 1:
            raise EncodingError(f"quantization factor must be an integer > 1, got {self.q!r}")


@dataclass(frozen=True)
class LexicalLshConfig:
    n: int = 1
    h: int = 1
    b: int = 300
    decimals: int = 1

    def __post_init__(self):
        for name in ("n", "h", "b", "decimals"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise EncodingError(f"{name} must be an integer >= 1, got {value!r}")


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise EncodingError(f"expected a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise EncodingError("vector has non-finite components")
    return arr


def normalize(v) -> np.ndarray:
    """Scale ``v`` to unit Euclidean length."""
    arr = _as_vector(v)
    norm = np.linalg.norm(arr)
    if norm == 0.0:
        raise EncodingError("cannot normalize the zero vector")
    return arr / norm


# -- fake words ---------------------------------------------------------

def fake_word_counts(v, q: int) -> np.ndarray:
    """``floor(q * |w_i|)`` for every feature, as int64."""
    return np.floor(q * np.abs(_as_vector(v))).astype(np.int64)


def encode_fake_words(v, cfg: FakeWordsConfig) -> dict[str, int]:
    arr = _as_vector(v)
    if abs(np.linalg.norm(arr) - 1.0) > UNIT_TOLERANCE:
        raise EncodingError("fake-words encoding needs a unit-length vector; call normalize() first")
    counts = fake_word_counts(arr, cfg.q)
    terms = {}
    for i in np.flatnonzero(counts).tolist():
        terms[f"f{i}{'p' if arr[i] > 0 else 'n'}"] = int(counts[i])
    return terms


# -- lexical LSH --------------------------------------------------------

def _round_half_away(values: np.ndarray, decimals: int) -> np.ndarray:
    """Round to ``decimals`` places, halves away from zero, as scaled integers.

    Rounding is decided on the exact binary value of each float. The numpy
    fast path is only trusted away from .5 boundaries; anything close to one
    is settled with :class:`decimal.Decimal`.
    """
    scale = 10 ** decimals
    scaled = np.abs(values) * scale
    out = np.floor(scaled + 0.5)
    frac = scaled - np.floor(scaled)
    for i in np.flatnonzero(np.abs(frac - 0.5) < 1e-6).tolist():
        exact = Decimal(float(values[i])).scaleb(decimals).quantize(Decimal(1), rounding=ROUND_HALF_UP)
        out[i] = abs(int(exact))
    return (np.sign(values) * out).astype(np.int64)


@lru_cache(maxsize=1 << 16)
def _tag(index: int, scaled: int, decimals: int) -> str:
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled), 10 ** decimals)
    return f"{index}_{sign}{whole}.{frac:0{decimals}d}"


def quantize_and_tag(v, decimals: int = 1) -> list[str]:
    """Tokens ``"<1-based feature index>_<rounded value>"`` in feature order."""
    if decimals < 1:
        raise EncodingError("decimals must be >= 1")
    scaled = _round_half_away(_as_vector(v), decimals).tolist()
    return [_tag(i + 1, s, decimals) for i, s in enumerate(scaled)]


def ngrams(tokens: list[str], n: int) -> list[str]:
    if n < 1:
        raise EncodingError(f"n must be >= 1, got {n}")
    tokens = list(tokens)
    if n == 1:
        return tokens
    if len(tokens) < n:
        # never encode a vector to nothing
        return ["|".join(tokens)] if tokens else []
    return ["|".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def fnv1a64(token: str) -> int:
    h = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & _MASK64
    return x ^ (x >> 31)


def hash64(seed: int, token: str) -> int:
    """Member ``seed`` of the hash family, evaluated on one token."""
    return splitmix64(fnv1a64(token) ^ splitmix64(seed))


def _splitmix64_array(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x + np.uint64(_GOLDEN)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX1)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX2)
    return x ^ (x >> np.uint64(31))


@lru_cache(maxsize=1 << 18)
def _base_hash(token: str) -> int:
    return fnv1a64(token)


@lru_cache(maxsize=256)
def _seed_keys(h: int) -> np.ndarray:
    return np.array([splitmix64(j) for j in range(h)], dtype=np.uint64)


def hash_matrix(tokens: list[str], h: int) -> np.ndarray:
    """``(h, len(tokens))`` uint64 array of ``hash64(j, token)``."""
    base = np.fromiter((_base_hash(t) for t in tokens), dtype=np.uint64, count=len(tokens))
    return _splitmix64_array(base[None, :] ^ _seed_keys(h)[:, None])


def bucket_of(hashes: np.ndarray, b: int) -> np.ndarray:
    if b == 1:
        return np.zeros(hashes.shape, dtype=np.int64)
    width = np.uint64((1 << 64) // b)
    return np.minimum(hashes // width, np.uint64(b - 1)).astype(np.int64)


def minhash(tokens: list[str], cfg: LexicalLshConfig) -> dict[str, int]:
    """Bucketed MinHash signature terms for a token list.

    For every hash function ``j`` and every non-empty bucket ``r``, emits
    ``mh_<j>_<r>_<16 hex digits of the bucket minimum>`` once.
    """
    if not tokens:
        raise EncodingError("cannot minhash an empty token list")
    hashes = hash_matrix(list(dict.fromkeys(tokens)), cfg.h)
    buckets = bucket_of(hashes, cfg.b)
    terms = {}
    for j in range(cfg.h):
        hj, bj = hashes[j], buckets[j]
        order = np.lexsort((hj, bj))
        first = np.ones(len(order), dtype=bool)
        first[1:] = bj[order][1:] != bj[order][:-1]
        for r, value in zip(bj[order][first].tolist(), hj[order][first].tolist()):
            terms[f"mh_{j}_{r}_{value:016x}"] = 1
    return terms


def encode_lexical_lsh(v, cfg: LexicalLshConfig) -> dict[str, int]:
    return minhash(ngrams(quantize_and_tag(v, cfg.decimals), cfg.n), cfg)


def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def signature_agreement(tokens_a: list[str], tokens_b: list[str], cfg: LexicalLshConfig) -> float:
    """Fraction of (hash, bucket) slots whose minima coincide.

    A slot counts when it is non-empty for at least one of the two sets; it
    agrees when both sets hold the same minimum there. With a single bucket
    this is the classic ``h``-permutation MinHash estimator of Jaccard
    similarity; with ``b`` buckets it is the one-permutation variant.
    """
    sig_a = minhash(tokens_a, cfg)
    sig_b = minhash(tokens_b, cfg)
    slots_a = {t.rsplit("_", 1)[0]: t for t in sig_a}
    slots_b = {t.rsplit("_", 1)[0]: t for t in sig_b}
    slots = set(slots_a) | set(slots_b)
    if not slots:
        return 1.0
    agree = sum(1 for s in slots if slots_a.get(s) is not None and slots_a.get(s) == slots_b.get(s))
    return agree / len(slots)

