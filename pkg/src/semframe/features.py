"""Syntactic and positional features for slot instances, and feature assembly."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .embeddings import ComposedVector, l2_normalize
from .errors import DimensionError, ValidationError


class DepLabelIndex:
    """Sorted dependency-label vocabulary; label -> column position."""

    def __init__(self, labels: Iterable[str]):
        self.labels = tuple(sorted(set(labels)))
        self.position = {label: i for i, label in enumerate(self.labels)}

    def __len__(self):
        return len(self.labels)

    @classmethod
    def build(cls, *corpora) -> "DepLabelIndex":
        return cls(t.deprel for corpus in corpora for s in corpus for t in s.tokens)

    def __getitem__(self, label: str) -> int:
        try:
            return self.position[label]
        except KeyError:
            raise ValidationError(
                f"dependency label {label!r} missing from the label index; "
                "build the index over every corpus first") from None


def inbound_dependency_vector(sentence, slot, index: DepLabelIndex) -> np.ndarray:
    """-1 at the relation of every arc entering a slot token, 0 elsewhere."""
    v = np.zeros(len(index))
    for i in slot.token_indices:
        v[index[sentence.token(i).deprel]] = -1.0
    return v


def outbound_dependency_vector(sentence, slot, index: DepLabelIndex, with_inbound: bool = True) -> np.ndarray:
    """+1 at the relation of every arc leaving the slot toward a token outside it.

    With ``with_inbound`` (the default) the inbound -1 entries are overlaid
    and win on conflict.
    """
    span = set(slot.token_indices)
    v = np.zeros(len(index))
    for tok in sentence.tokens:
        if tok.head in span and tok.index not in span:
            v[index[tok.deprel]] = 1.0
    if with_inbound:
        inbound = inbound_dependency_vector(sentence, slot, index)
        v = np.where(inbound < 0, inbound, v)
    return v


def boolean_feature(verb_position: int, token_position: int) -> int:
    """0 if the verb strictly precedes the token, otherwise 1."""
    return 0 if verb_position < token_position else 1


def index_feature(slot_ordinal: int) -> int:
    if slot_ordinal < 1:
        raise ValueError(f"slot ordinals start at 1, got {slot_ordinal}")
    return slot_ordinal


@dataclass(frozen=True)
class FeatureMatrix:
    instance_ids: tuple
    values: np.ndarray
    blocks: tuple[tuple[str, int, int], ...]

    def __len__(self):
        return len(self.instance_ids)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def row(self, i: int) -> ComposedVector:
        return ComposedVector(self.values[i], self.blocks)


def assemble(blocks: Sequence[tuple[str, Callable]], instances: Sequence, normalize: bool = False,
             scales: Optional[Mapping[str, float]] = None) -> FeatureMatrix:
    """Concatenate per-instance block vectors into a matrix.

    Each block source is called with an instance id and must return a vector
    (scalars count as length 1) of the same length for every instance.
    ``scales`` multiplies named blocks before the optional L2 normalization
    of each full row.
    """
    if not blocks:
        raise ValueError("no feature blocks")
    scales = dict(scales or {})
    unknown = set(scales) - {name for name, _ in blocks}
    if unknown:
        raise ValueError(f"scale given for unknown blocks: {', '.join(sorted(unknown))}")

    widths: dict[str, int] = {}
    rows = []
    for inst in instances:
        parts = []
        for name, source in blocks:
            v = np.atleast_1d(np.asarray(source(inst), dtype=np.float64)).ravel()
            if widths.setdefault(name, len(v)) != len(v):
                raise DimensionError(
                    f"block {name!r} has length {len(v)} for instance {inst}, expected {widths[name]}")
            parts.append(v * scales.get(name, 1.0))
        row = np.concatenate(parts)
        rows.append(l2_normalize(row) if normalize else row)

    layout = []
    offset = 0
    for name, _ in blocks:
        # with no instances the widths are unknown; report empty blocks
        n = widths.get(name, 0)
        layout.append((name, offset, n))
        offset += n
    values = np.array(rows) if rows else np.zeros((0, offset))
    return FeatureMatrix(tuple(instances), values, tuple(layout))
