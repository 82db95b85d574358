"""Embedding, exact nearest-neighbour product search, and profile filtering.

Brute force on purpose: at catalog scale an exact scan is cheap, and the
straightforward implementation doubles as its own oracle. An accelerated
index can slot in behind top_k later with this path kept as the reference.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass
from typing import Protocol, Sequence

import httpx
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .catalog import Catalog, Product, UserProfile
from .classifier import preprocess

DEFAULT_DIMENSION = 256
DEFAULT_K = 20

_INDEX_MAGIC = b"AIDX1\n"


class EmbeddingError(ValueError):
    """Bad embedder input or output (empty text, zero vector, dimension drift)."""


class TransportError(Exception):
    """Remote provider failure; carries retry metadata for the caller."""

    def __init__(self, message: str, retryable: bool = True, retry_after: float | None = None):
        super().__init__(message)
        self.retryable = retryable
        self.retry_after = retry_after


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a,b) / (|a||b|), computed in float64 regardless of input dtype."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValueError("cosine of a zero vector is undefined (broken embedder?)")
    return float(np.dot(a, b)) / (norm_a * norm_b)


class EmbeddingProvider(Protocol):
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


class HashingTextEmbedder(BaseEstimator, TransformerMixin):
    """Deterministic mock provider: token n-grams hashed into d buckets.

    Each unigram and bigram of the preprocessed text adds weight 1 to a
    bucket chosen by a stable blake2b hash; the result is L2-normalized.
    Entirely self-contained, so tests and fixtures never need a network.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        self.dimension = dimension

    def fit(self, texts: Sequence[str] | None = None, y=None) -> "HashingTextEmbedder":
        return self

    def _bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dimension

    def embed(self, text: str) -> np.ndarray:
        tokens = preprocess(text).split()
        if not tokens:
            raise EmbeddingError(f"text is empty after preprocessing: {text!r}")
        vec = np.zeros(self.dimension, dtype=np.float64)
        for gram in tokens:
            vec[self._bucket(gram)] += 1.0
        for a, b in zip(tokens, tokens[1:]):
            vec[self._bucket(f"{a} {b}")] += 1.0
        return vec / np.linalg.norm(vec)

    def transform(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self.embed(t) for t in texts])


class RemoteEmbedder:
    """Thin transport to a remote embedding endpoint; timeout plus one retry.

    Endpoint and key come from the environment (EMBED_ENDPOINT_ENV /
    EMBED_API_KEY_ENV) unless given explicitly.
    """

    ENDPOINT_ENV = "AISLEBOT_EMBED_ENDPOINT"
    API_KEY_ENV = "AISLEBOT_EMBED_API_KEY"

    def __init__(
        self,
        endpoint: str | None = None,
        dimension: int = DEFAULT_DIMENSION,
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint or os.environ.get(self.ENDPOINT_ENV, "")
        if not self.endpoint:
            raise ValueError(f"no embedding endpoint configured ({self.ENDPOINT_ENV})")
        self.dimension = dimension
        self.timeout = timeout
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def embed(self, text: str) -> np.ndarray:
        if not preprocess(text):
            raise EmbeddingError(f"text is empty after preprocessing: {text!r}")
        headers = {}
        api_key = os.environ.get(self.API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_exc: Exception | None = None
        for attempt in range(2):
            try:
                response = self._client.post(self.endpoint, json={"input": [text]}, headers=headers)
                response.raise_for_status()
                values = response.json()["data"][0]["embedding"]
                vec = np.asarray(values, dtype=np.float64)
                if vec.shape != (self.dimension,):
                    raise EmbeddingError(f"provider returned dimension {vec.shape}, expected {self.dimension}")
                return vec
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                last_exc = exc
        raise TransportError(f"embedding endpoint failed after retry: {last_exc}", retryable=True)


# ---------------------------------------------------------------------------
# Product index
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoredProduct:
    product_id: str
    score: float


class ProductIndex:
    """Per-product embeddings pinned to a catalog version, ascending id order."""

    def __init__(self, catalog_version: int, dimension: int, entries: Sequence[tuple[str, np.ndarray]]):
        self.catalog_version = catalog_version
        self.dimension = dimension
        self.entries = [(pid, np.asarray(vec, dtype=np.float64)) for pid, vec in entries]
        for pid, vec in self.entries:
            if vec.shape != (dimension,):
                raise ValueError(f"entry {pid} has dimension {vec.shape}, index expects {dimension}")

    def __len__(self) -> int:
        return len(self.entries)


def embedding_text(product: Product) -> str:
    return f"{product.name} {product.brand} {product.category} {product.description}"


def build_index(catalog: Catalog, provider: EmbeddingProvider) -> ProductIndex:
    if len(catalog) == 0:
        raise ValueError("cannot index an empty catalog")
    entries = [(p.id, provider.embed(embedding_text(p))) for p in catalog]
    return ProductIndex(catalog_version=catalog.version, dimension=provider.dimension, entries=entries)


def top_k(index: ProductIndex, query_vec: np.ndarray, k: int = DEFAULT_K) -> list[ScoredProduct]:
    """Exact brute-force scan: min(k, |index|) results, descending score,
    ties broken by ascending product id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query = np.asarray(query_vec, dtype=np.float64)
    if query.shape != (index.dimension,):
        raise ValueError(f"query dimension {query.shape} does not match index dimension {index.dimension}")
    scored = [ScoredProduct(pid, cosine(query, vec)) for pid, vec in index.entries]
    scored.sort(key=lambda s: (-s.score, s.product_id))
    return scored[:k]


def save_index(index: ProductIndex, path: str) -> None:
    """Binary layout: magic, header (dimension, catalog_version, count),
    then per row a length-prefixed id and d little-endian float32 values."""
    with open(path, "wb") as fh:
        fh.write(_INDEX_MAGIC)
        fh.write(struct.pack("<IQI", index.dimension, index.catalog_version, len(index.entries)))
        for pid, vec in index.entries:
            raw_id = pid.encode("utf-8")
            fh.write(struct.pack("<H", len(raw_id)))
            fh.write(raw_id)
            fh.write(vec.astype("<f4").tobytes())


def load_index(path: str) -> ProductIndex:
    with open(path, "rb") as fh:
        magic = fh.read(len(_INDEX_MAGIC))
        if magic != _INDEX_MAGIC:
            raise ValueError(f"{path} is not a product index file")
        dimension, catalog_version, count = struct.unpack("<IQI", fh.read(16))
        entries = []
        for _ in range(count):
            (id_len,) = struct.unpack("<H", fh.read(2))
            pid = fh.read(id_len).decode("utf-8")
            vec = np.frombuffer(fh.read(4 * dimension), dtype="<f4").astype(np.float64)
            entries.append((pid, vec))
    return ProductIndex(catalog_version=catalog_version, dimension=dimension, entries=entries)


# ---------------------------------------------------------------------------
# Profile filtering
# ---------------------------------------------------------------------------

# Hard-constraint table: which product tags each diet tag rules out, and
# which product tags satisfy a soft preference. Configuration, not code --
# the packaged default lives in data/tag_rules.json.
DEFAULT_TAG_RULES: dict = {
    "diet_conflicts": {
        "vegetarian": ["meat", "fish", "gelatin"],
        "vegan": ["meat", "fish", "dairy", "egg", "honey", "gelatin"],
        "pescatarian": ["meat"],
    },
    "preference_matches": {
        "health_conscious": ["whole_grain", "high_fiber", "low_sugar", "organic"],
        "budget": ["value"],
        "local": ["local"],
    },
}


@dataclass(frozen=True)
class KeptProduct:
    product_id: str
    score: float
    preference_hits: tuple[str, ...] = ()


@dataclass(frozen=True)
class ExcludedProduct:
    product_id: str
    score: float
    reason: str


def profile_filter(
    scored: Sequence[ScoredProduct],
    catalog: Catalog,
    profile: UserProfile,
    rules: dict | None = None,
) -> tuple[list[KeptProduct], list[ExcludedProduct]]:
    """Hard-filter retrieved products against allergens and diet before any
    model sees them; soft preferences only annotate the kept entries.

    kept + excluded is a permutation of the input, and kept preserves the
    input's relative order.
    """
    rules = DEFAULT_TAG_RULES if rules is None else rules
    diet_conflicts = rules.get("diet_conflicts", {})
    preference_matches = rules.get("preference_matches", {})

    kept: list[KeptProduct] = []
    excluded: list[ExcludedProduct] = []
    for item in scored:
        product = catalog.get(item.product_id)
        tags = product.tags if product is not None else frozenset()
        reason = None
        for allergen in sorted(profile.allergens):
            if allergen in tags:
                reason = f"allergen:{allergen}"
                break
        if reason is None:
            for diet in sorted(profile.diet):
                banned = set(diet_conflicts.get(diet, ()))
                if banned & tags:
                    reason = f"diet:{diet}"
                    break
        if reason is not None:
            excluded.append(ExcludedProduct(item.product_id, item.score, reason))
            continue
        hits = []
        for pref in sorted(profile.preferences):
            wanted = set(preference_matches.get(pref, ()))
            if pref in tags or (wanted & tags):
                hits.append(pref)
        kept.append(KeptProduct(item.product_id, item.score, tuple(hits)))
    return kept, excluded
