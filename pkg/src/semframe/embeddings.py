"""Static word vectors, precomputed contextual vectors and vector composition."""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import iter_lines
from .errors import DimensionError, ParseError, SemframeError

logger = logging.getLogger(__name__)


def _frozen(v) -> np.ndarray:
    a = np.array(v, dtype=np.float64)
    a.flags.writeable = False
    return a


class EmbeddingStore:
    """Immutable token -> vector table. Missing tokens map to the zero vector."""

    def __init__(self, dim: int, table: Mapping[str, Sequence[float]], lowercase: bool = False):
        if dim <= 0:
            raise DimensionError(f"dimension must be positive, got {dim}")
        self.dim = dim
        self.lowercase = lowercase
        self._table = {}
        for tok, vec in table.items():
            v = _frozen(vec)
            if v.shape != (dim,):
                raise DimensionError(f"vector for {tok!r} has shape {v.shape}, expected ({dim},)")
            self._table[tok.lower() if lowercase else tok] = v
        self._zero = _frozen(np.zeros(dim))

    def __len__(self):
        return len(self._table)

    def __contains__(self, token):
        return self._key(token) in self._table

    def _key(self, token: str) -> str:
        return token.lower() if self.lowercase else token

    def lookup(self, token: str) -> np.ndarray:
        return self._table.get(self._key(token), self._zero)


def load_word_vectors(source: str | Iterable[str], lowercase: bool = False) -> EmbeddingStore:
    """Read word2vec text format: a ``V D`` header then ``token x1 ... xD`` lines.

    Duplicate tokens keep the last vector. With ``lowercase`` the tokens are
    folded at load time and lookups are folded too.
    """
    it = iter(enumerate(iter_lines(source), start=1))
    try:
        _, header = next(it)
    except StopIteration:
        raise ParseError("empty vector file", 1) from None
    parts = header.split()
    try:
        if len(parts) != 2:
            raise ValueError
        vocab, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(f"expected header 'V D', got {header.strip()!r}", 1) from None
    if dim <= 0 or vocab < 0:
        raise ParseError(f"invalid header {header.strip()!r}", 1)

    table = {}
    count = 0
    for lineno, line in it:
        if not line.strip():
            continue
        # word2vec text files separate with single spaces and often end lines with one
        fields = [f for f in line.split(" ") if f]
        token, values = fields[0], fields[1:]
        if len(values) != dim:
            raise ParseError(f"expected {dim} values for {token!r}, got {len(values)}", lineno)
        try:
            vec = np.array([float(x) for x in values])
        except ValueError:
            raise ParseError(f"non-numeric value in vector for {token!r}", lineno) from None
        if not np.all(np.isfinite(vec)):
            raise ParseError(f"non-finite value in vector for {token!r}", lineno)
        key = token.lower() if lowercase else token
        if key in table:
            logger.warning("line %d: duplicate token %r, keeping the last vector", lineno, key)
        table[key] = vec
        count += 1
    if count != vocab:
        raise ParseError(f"header announces {vocab} vectors, file has {count}")
    return EmbeddingStore(dim, table, lowercase=lowercase)


def lookup(store: EmbeddingStore, token: str) -> np.ndarray:
    return store.lookup(token)


def verb_vector(store: EmbeddingStore, predicate_surfaces: Sequence[str]) -> np.ndarray:
    """Vector of a (possibly phrasal) verb: only the first word counts."""
    if not predicate_surfaces:
        raise ValueError("predicate has no surface forms")
    return store.lookup(predicate_surfaces[0])


def span_vector(store: EmbeddingStore, span_surfaces: Sequence[str]) -> np.ndarray:
    """Mean of the token vectors; OOV tokens contribute zeros but still count."""
    if not span_surfaces:
        raise ValueError("span has no surface forms")
    return np.mean([store.lookup(t) for t in span_surfaces], axis=0)


@dataclass(frozen=True)
class IdfTable:
    doc_count: int
    df: Mapping[str, int]

    def idf(self, token: str) -> float:
        # unseen tokens are treated as occurring in a single document
        return math.log(self.doc_count / self.df.get(token, 1))


def compute_idf(corpus) -> IdfTable:
    """Document frequencies over sentence surfaces (one document per sentence)."""
    if not corpus:
        raise SemframeError("cannot compute idf over an empty corpus")
    df = Counter()
    for sentence in corpus:
        df.update({t.surface for t in sentence.tokens})
    return IdfTable(len(corpus), dict(df))


def context_vector(sentence, store: EmbeddingStore, idf: IdfTable, weighting: str = "tfidf") -> np.ndarray:
    """Weighted mean of all token vectors in the sentence.

    With ``tfidf`` every token occurrence is weighted by tf(t) * idf(t),
    tf being the raw count of t in the sentence. Falls back to the plain
    mean when all weights are zero.
    """
    surfaces = [t.surface for t in sentence.tokens]
    if not surfaces:
        raise ValueError(f"sentence {sentence.id} is empty")
    vectors = np.array([store.lookup(s) for s in surfaces])
    if weighting == "uniform":
        return vectors.mean(axis=0)
    if weighting != "tfidf":
        raise ValueError(f"unknown weighting {weighting!r}")
    tf = Counter(surfaces)
    weights = np.array([tf[s] * idf.idf(s) for s in surfaces])
    total = weights.sum()
    if total == 0:
        return vectors.mean(axis=0)
    return weights @ vectors / total


@dataclass(frozen=True)
class ComposedVector:
    values: np.ndarray
    blocks: tuple[tuple[str, int, int], ...]

    def block(self, name: str) -> np.ndarray:
        for b, off, n in self.blocks:
            if b == name:
                return self.values[off:off + n]
        raise KeyError(name)


def l2_normalize(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    return v if norm == 0 else v / norm


def compose(parts: Sequence[tuple[str, np.ndarray]], normalize: bool = False) -> ComposedVector:
    """Concatenate named vectors; optionally scale the result to unit L2 norm."""
    if not parts:
        raise ValueError("nothing to compose")
    blocks = []
    arrays = []
    offset = 0
    for name, vec in parts:
        v = np.atleast_1d(np.asarray(vec, dtype=np.float64))
        if v.ndim != 1:
            raise DimensionError(f"block {name!r} is not a vector")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"block {name!r} has non-finite values")
        blocks.append((name, offset, len(v)))
        arrays.append(v)
        offset += len(v)
    values = np.concatenate(arrays)
    if normalize:
        values = l2_normalize(values)
    return ComposedVector(values, tuple(blocks))


class ContextualVectorFile:
    """Precomputed per-instance vectors keyed by instance id string."""

    def __init__(self, entries: Mapping[str, np.ndarray], dim: int):
        self.entries = dict(entries)
        self.dim = dim

    def __contains__(self, key):
        return key in self.entries

    def __len__(self):
        return len(self.entries)

    def vector(self, key: str) -> np.ndarray:
        try:
            return self.entries[key]
        except KeyError:
            raise SemframeError(f"no contextual vector for {key!r}") from None


def load_contextual_vectors(source: str | Iterable[str]) -> ContextualVectorFile:
    """Read JSONL lines ``{"id": ..., "vector": [...]}``."""
    entries = {}
    dim = None
    for lineno, line in enumerate(iter_lines(source), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", lineno) from None
        if not isinstance(obj, dict) or not isinstance(obj.get("id"), str) \
                or not isinstance(obj.get("vector"), list):
            raise ParseError("expected an object with string 'id' and list 'vector'", lineno)
        key = obj["id"]
        try:
            vec = _frozen(obj["vector"])
        except (TypeError, ValueError):
            raise ParseError(f"non-numeric vector for {key!r}", lineno) from None
        if vec.ndim != 1 or len(vec) == 0 or not np.all(np.isfinite(vec)):
            raise ParseError(f"invalid vector for {key!r}", lineno)
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise ParseError(f"dimension mismatch for {key!r}: {len(vec)} != {dim}", lineno)
        if key in entries:
            raise ParseError(f"duplicate id {key!r}", lineno)
        entries[key] = vec
    if dim is None:
        raise ParseError("no vectors in contextual vector file")
    return ContextualVectorFile(entries, dim)
