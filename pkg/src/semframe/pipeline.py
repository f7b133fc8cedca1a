"""Frame induction (A), generic role induction (B.2), their merge (B.1) and baselines."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from . import cluster
from .corpus import SLOT, VERB, InstanceId, Sentence, instance_ids, iter_lines, slot_lookup
from .embeddings import (ContextualVectorFile, EmbeddingStore, IdfTable, compute_idf, context_vector,
                         load_contextual_vectors, load_word_vectors, span_vector, verb_vector)
from .errors import ConfigError, ParseError, ValidationError
from .features import (DepLabelIndex, FeatureMatrix, assemble, boolean_feature, inbound_dependency_vector,
                       index_feature, outbound_dependency_vector)

logger = logging.getLogger(__name__)

SUBTASKS = ("A", "B1", "B2")
SOURCES = ("context-tfidf", "context-file", "word", "verb", "ID", "OD", "B", "123")
SLOT_ONLY = {"ID", "OD", "B", "123"}
UNKNOWN_ROLE = "UKN"

Labeling = dict  # InstanceId -> str


@dataclass(frozen=True)
class PipelineConfig:
    subtask: str = "A"
    recipe: tuple = ("context-tfidf", "word")
    normalize: bool = True
    metric: str = "manhattan"
    linkage: str = "average"
    k: int = 150
    vectors: Optional[str] = None
    contextual_vectors: Optional[str] = None
    lowercase: bool = False
    weighting: str = "tfidf"
    block_scale: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0  # reserved for stochastic engines; every shipped algorithm ignores it
    # logistic regression
    learning_rate: float = 0.1
    max_epochs: int = 500
    l2: float = 1.0
    tolerance: float = 1e-7

    @classmethod
    def for_subtask(cls, subtask: str, **overrides) -> "PipelineConfig":
        """Defaults of the submitted systems: A = normalized [c, w], manhattan,
        average linkage, 150 clusters; B2 = [c, ID], euclidean, ward, 2 clusters."""
        if subtask == "B2":
            base = cls(subtask="B2", recipe=("context-tfidf", "ID"), normalize=False,
                       metric="euclidean", linkage="ward", k=2)
        else:
            base = cls(subtask=subtask)
        return replace(base, **overrides).validate()

    def validate(self) -> "PipelineConfig":
        if self.subtask not in SUBTASKS:
            raise ConfigError(f"subtask must be one of {', '.join(SUBTASKS)}, got {self.subtask!r}")
        if not self.recipe:
            raise ConfigError("recipe is empty")
        bad = [s for s in self.recipe if s not in SOURCES]
        if bad:
            raise ConfigError(f"unknown recipe blocks {bad}; choose from {', '.join(SOURCES)}")
        if len(set(self.recipe)) != len(self.recipe):
            raise ConfigError(f"recipe lists a block twice: {list(self.recipe)}")
        if not isinstance(self.k, int) or isinstance(self.k, bool) or self.k < 1:
            raise ConfigError(f"k must be a positive integer, got {self.k!r}")
        if self.metric not in cluster.METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.linkage not in cluster.LINKAGES:
            raise ConfigError(f"unknown linkage {self.linkage!r}")
        if self.linkage == "ward" and self.metric != "euclidean":
            raise ConfigError(f"ward requires euclidean affinity, got {self.metric}")
        if self.weighting not in ("tfidf", "uniform"):
            raise ConfigError(f"weighting must be tfidf or uniform, got {self.weighting!r}")
        unknown = set(self.block_scale) - set(self.recipe)
        if unknown:
            raise ConfigError(f"block_scale names blocks not in the recipe: {sorted(unknown)}")
        return self


def load_config(path: str | os.PathLike, defaults: Optional[Mapping] = None, **overrides) -> PipelineConfig:
    """Read a TOML config; relative embedding paths resolve against its directory.

    Precedence: ``overrides`` (non-None values only) > file > ``defaults`` >
    the defaults of the configured subtask.
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    known = {f.name for f in fields(PipelineConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    for key in ("vectors", "contextual_vectors"):
        if raw.get(key):
            raw[key] = str((path.parent / raw[key]).resolve()) if not os.path.isabs(raw[key]) else raw[key]
    if "recipe" in raw:
        raw["recipe"] = _recipe(raw["recipe"])
    merged = dict(defaults or {})
    merged.update(raw)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(merged)


def _recipe(value) -> tuple:
    if isinstance(value, str):
        value = [v for v in value.replace("+", ",").split(",") if v.strip()]
    if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
        raise ConfigError(f"recipe must be a list of block names, got {value!r}")
    return tuple(v.strip() for v in value)


def config_from_dict(values: Mapping) -> PipelineConfig:
    values = dict(values)
    subtask = values.pop("subtask", "A")
    if "recipe" in values:
        values["recipe"] = _recipe(values["recipe"])
    try:
        return PipelineConfig.for_subtask(subtask, **values)
    except TypeError as e:
        raise ConfigError(str(e)) from None


# -- resources ----------------------------------------------------------------


@dataclass
class Resources:
    store: Optional[EmbeddingStore] = None
    contextual: Optional[ContextualVectorFile] = None
    idf: Optional[IdfTable] = None
    dep_index: Optional[DepLabelIndex] = None


def load_resources(config: PipelineConfig, corpus: list[Sentence], extra_corpora: Iterable = ()) -> Resources:
    """Load whatever the recipe needs, failing before any clustering starts."""
    extra_corpora = list(extra_corpora)
    res = Resources()
    needs_store = {"context-tfidf", "word", "verb"} & set(config.recipe)
    if needs_store:
        if not config.vectors:
            raise ConfigError(f"recipe blocks {sorted(needs_store)} need word vectors (--vectors)")
        with open(config.vectors, encoding="utf-8") as f:
            res.store = load_word_vectors(f, lowercase=config.lowercase)
    if "context-file" in config.recipe:
        if not config.contextual_vectors:
            raise ConfigError("recipe block context-file needs --contextual-vectors")
        with open(config.contextual_vectors, encoding="utf-8") as f:
            res.contextual = load_contextual_vectors(f)
        missing = [s.id for s in corpus if s.id not in res.contextual]
        if missing:
            raise ValidationError(f"no contextual vectors for {len(missing)} sentences, e.g. {missing[:5]}")
    if "context-tfidf" in config.recipe:
        res.idf = compute_idf(corpus + [s for c in extra_corpora for s in c])
    if SLOT_ONLY & set(config.recipe):
        res.dep_index = DepLabelIndex.build(corpus, *extra_corpora)
    return res


# -- feature construction -----------------------------------------------------


def _block_source(name: str, corpus: list[Sentence], config: PipelineConfig, res: Resources):
    sentences = {s.id: s for s in corpus}
    slots = slot_lookup(corpus)

    def sentence_of(inst):
        return sentences[inst.sentence_id]

    def slot_of(inst):
        if inst.slot_id is None:
            raise ConfigError(f"block {name} applies to slot instances only")
        return slots[inst]

    if name == "context-tfidf":
        return lambda i: context_vector(sentence_of(i), res.store, res.idf, config.weighting)
    if name == "context-file":
        return lambda i: res.contextual.vector(i.sentence_id)
    if name == "verb":
        return lambda i: verb_vector(res.store, _predicate_surfaces(sentence_of(i)))

    if name == "word":
        def word(i):
            if i.slot_id is None:
                return verb_vector(res.store, _predicate_surfaces(sentence_of(i)))
            s, slot, _ = slot_of(i)
            return span_vector(res.store, s.surfaces(slot.token_indices))
        return word
    if name == "ID":
        return lambda i: inbound_dependency_vector(*slot_of(i)[:2], res.dep_index)
    if name == "OD":
        return lambda i: outbound_dependency_vector(*slot_of(i)[:2], res.dep_index)
    if name == "B":
        def boolean(i):
            s, slot, _ = slot_of(i)
            return boolean_feature(s.verb_position, slot.token_indices[0])
        return boolean
    if name == "123":
        return lambda i: index_feature(slot_of(i)[2])
    raise ConfigError(f"unknown block {name!r}")


def _predicate_surfaces(sentence: Sentence) -> list[str]:
    return sentence.surfaces(sentence.predicate.token_indices)


def build_features(corpus: list[Sentence], kind: str, config: PipelineConfig, res: Resources) -> FeatureMatrix:
    if kind == VERB and SLOT_ONLY & set(config.recipe):
        raise ConfigError(f"blocks {sorted(SLOT_ONLY & set(config.recipe))} apply to slot instances only")
    blocks = [(name, _block_source(name, corpus, config, res)) for name in config.recipe]
    return assemble(blocks, instance_ids(corpus, kind), normalize=config.normalize, scales=config.block_scale)


def induce(corpus: list[Sentence], kind: str, config: PipelineConfig, res: Optional[Resources] = None,
           prefix: str = "c") -> tuple[Labeling, cluster.Dendrogram]:
    """Cluster the instances of ``kind`` and label them ``<prefix><cluster>``."""
    res = res or load_resources(config, corpus)
    matrix = build_features(corpus, kind, config, res)
    if len(matrix) == 0:
        raise ValidationError(f"corpus has no {kind}s")
    if config.k > len(matrix):
        raise ConfigError(f"k={config.k} exceeds the number of instances ({len(matrix)})")
    dist = cluster.pairwise_distances(matrix, config.metric)
    tree, assignment = cluster.agglomerate(dist, config.linkage, config.k)
    return {i: f"{prefix}{label}" for i, label in assignment.items()}, tree


def run_subtask_a(corpus: list[Sentence], config: PipelineConfig, res: Optional[Resources] = None) -> Labeling:
    """Frame label per verb instance."""
    return induce(corpus, VERB, config, res, prefix="f")[0]


def run_subtask_b2(corpus: list[Sentence], config: PipelineConfig, res: Optional[Resources] = None) -> Labeling:
    """Generic role label per slot instance."""
    return induce(corpus, SLOT, config, res, prefix="r")[0]


def sanitize_label(label: str) -> str:
    return label.replace(".", "_")


def merge_b1(frames: Mapping[InstanceId, str], roles: Mapping[InstanceId, str],
             corpus: list[Sentence]) -> Labeling:
    """``<frame>.<role>`` per slot; slots without a role get ``<frame>.UKN``."""
    slots = instance_ids(corpus, SLOT)
    stray = set(roles) - set(slots)
    if stray:
        logger.warning("ignoring %d role labels for slots not in the corpus", len(stray))
    out = {}
    for inst in slots:
        try:
            frame = frames[inst.verb]
        except KeyError:
            raise ValidationError(f"no frame label for sentence {inst.sentence_id}") from None
        role = roles.get(inst)
        out[inst] = f"{sanitize_label(frame)}.{UNKNOWN_ROLE if role is None else sanitize_label(role)}"
    return out


def frame_prefix(b1: Mapping[InstanceId, str]) -> Labeling:
    """Recover {verb instance: frame} from merged slot labels."""
    out = {}
    for inst, label in b1.items():
        out.setdefault(inst.verb, label.partition(".")[0])
    return out


# -- baselines ----------------------------------------------------------------


def baseline_cluster_per_verb(corpus: list[Sentence]) -> Labeling:
    return {InstanceId(s.id): s.token(s.verb_position).lemma.lower() for s in corpus}


def slot_head(sentence: Sentence, slot) -> int:
    """First slot token attached to a head outside the span (first token if none is)."""
    span = set(slot.token_indices)
    for i in slot.token_indices:
        if sentence.token(i).head not in span:
            return i
    return slot.token_indices[0]


def baseline_cluster_per_dep_role(corpus: list[Sentence]) -> Labeling:
    return {InstanceId(s.id, slot.slot_id): s.token(slot_head(s, slot)).deprel
            for s in corpus for slot in s.slots}


def baseline_boolean(corpus: list[Sentence]) -> Labeling:
    return {InstanceId(s.id, slot.slot_id): str(boolean_feature(s.verb_position, slot.token_indices[0]))
            for s in corpus for slot in s.slots}


def baseline_123(corpus: list[Sentence]) -> Labeling:
    return {InstanceId(s.id, slot.slot_id): str(index_feature(k))
            for s in corpus for k, slot in enumerate(s.slots, start=1)}


BASELINES = {
    "per-verb": baseline_cluster_per_verb,
    "per-dep-role": baseline_cluster_per_dep_role,
    "boolean": baseline_boolean,
    "123": baseline_123,
}


def gold_labeling(corpus: list[Sentence], subtask: str) -> Labeling:
    """Gold frames (A), roles (B2) or ``frame.role`` composites (B1) from the corpus."""
    if subtask not in SUBTASKS:
        raise ConfigError(f"unknown subtask {subtask!r}")
    out = {}
    for s in corpus:
        frame = s.predicate.gold_frame
        if subtask == "A":
            if frame is None:
                raise ValidationError(f"sentence {s.id}: no gold frame")
            out[InstanceId(s.id)] = frame
            continue
        for slot in s.slots:
            if slot.gold_role is None:
                raise ValidationError(f"sentence {s.id} slot {slot.slot_id}: no gold role")
            if subtask == "B2":
                out[InstanceId(s.id, slot.slot_id)] = slot.gold_role
            else:
                if frame is None:
                    raise ValidationError(f"sentence {s.id}: no gold frame")
                out[InstanceId(s.id, slot.slot_id)] = f"{sanitize_label(frame)}.{sanitize_label(slot.gold_role)}"
    return out


# -- labeling files -----------------------------------------------------------


def format_labeling(labeling: Mapping[InstanceId, str]) -> str:
    rows = sorted((str(i), label) for i, label in labeling.items())
    for key, label in rows:
        if not label or any(c in label for c in "\t\r\n"):
            raise ValidationError(f"invalid label {label!r} for {key}")
    return "".join(f"{key}\t{label}\n" for key, label in rows)


def parse_labeling(text: str | Iterable[str]) -> Labeling:
    out = {}
    for lineno, line in enumerate(iter_lines(text), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[1]:
            raise ParseError(f"expected 'instance_id<TAB>label', got {line!r}", lineno)
        try:
            inst = InstanceId.parse(parts[0])
        except ValueError as e:
            raise ParseError(str(e), lineno) from None
        if inst in out:
            raise ParseError(f"duplicate instance id {parts[0]!r}", lineno)
        out[inst] = parts[1]
    return out
