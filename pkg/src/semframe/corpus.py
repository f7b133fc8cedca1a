"""Sentences with highlighted predicates and argument slots.

Two input formats are supported:

* task JSONL, the canonical format: one sentence per line with tokens,
  the highlighted predicate and the highlighted slots;
* CoNLL-U, which yields sentences without highlights. Highlights are
  attached from an annotations sidecar (JSONL with ``id``, ``predicate``
  and ``slots``) via :func:`attach_annotations`.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

VERB = "verb-instance"
SLOT = "slot-instance"

# characters that would make instance ids ambiguous or break the TSV format
_FORBIDDEN_ID_CHARS = ("#", "\t", "\n", "\r")


@dataclass(frozen=True)
class Token:
    index: int
    surface: str
    lemma: str
    upos: str
    head: int
    deprel: str


@dataclass(frozen=True)
class PredicateSpan:
    token_indices: tuple[int, ...]
    gold_frame: Optional[str] = None


@dataclass(frozen=True)
class SlotSpan:
    slot_id: str
    token_indices: tuple[int, ...]
    gold_role: Optional[str] = None


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple[Token, ...]
    predicate: Optional[PredicateSpan] = None
    slots: tuple[SlotSpan, ...] = ()

    def __len__(self):
        return len(self.tokens)

    def token(self, index: int) -> Token:
        """Token at 1-based position ``index``."""
        return self.tokens[index - 1]

    def surfaces(self, indices: Iterable[int]) -> list[str]:
        return [self.tokens[i - 1].surface for i in indices]

    @property
    def verb_position(self) -> int:
        return self.predicate.token_indices[0]


@dataclass(frozen=True)
class InstanceId:
    """Identifier of a verb instance (one per sentence) or a slot instance.

    Serializes as ``sentence_id`` or ``sentence_id#slot_id``.
    """

    sentence_id: str
    slot_id: Optional[str] = field(default=None)

    @property
    def kind(self) -> str:
        return VERB if self.slot_id is None else SLOT

    @property
    def verb(self) -> "InstanceId":
        return InstanceId(self.sentence_id)

    def __str__(self):
        if self.slot_id is None:
            return self.sentence_id
        return f"{self.sentence_id}#{self.slot_id}"

    @classmethod
    def parse(cls, text: str) -> "InstanceId":
        sentence_id, sep, slot_id = text.partition("#")
        if not sentence_id or (sep and not slot_id):
            raise ValueError(f"malformed instance id {text!r}")
        return cls(sentence_id, slot_id if sep else None)


def iter_lines(text: str | Iterable[str]) -> Iterable[str]:
    """Lines of a string or text stream, split on LF only.

    ``str.splitlines`` would also break on U+0085 and U+2028, which may
    legitimately occur inside tokens.
    """
    if isinstance(text, str):
        text = text.split("\n")
        if text and text[-1] == "":
            text.pop()
    return (line.rstrip("\r\n") for line in text)


# -- validation ---------------------------------------------------------------


def _check_span(sid: str, what: str, indices: tuple[int, ...], n: int) -> None:
    if not indices:
        raise ValidationError(f"sentence {sid}: {what} has no token indices")
    for i in indices:
        if not 1 <= i <= n:
            raise ValidationError(
                f"sentence {sid}: {what} index out of range: {i} (sentence has {n} tokens)")
    if any(a >= b for a, b in zip(indices, indices[1:])):
        raise ValidationError(f"sentence {sid}: {what} indices not strictly increasing: {list(indices)}")


def _check_id(kind: str, value: str, sid: str) -> None:
    if not value:
        raise ValidationError(f"sentence {sid}: empty {kind}")
    bad = [c for c in _FORBIDDEN_ID_CHARS if c in value]
    if bad:
        raise ValidationError(f"sentence {sid}: {kind} {value!r} contains forbidden character {bad[0]!r}")


def validate_tokens(sentence: Sentence) -> None:
    sid = sentence.id
    _check_id("sentence id", sid, sid)
    n = len(sentence.tokens)
    if n == 0:
        raise ValidationError(f"sentence {sid}: no tokens")
    for pos, tok in enumerate(sentence.tokens, start=1):
        if tok.index != pos:
            raise ValidationError(f"sentence {sid}: token indices not contiguous at position {pos} (got {tok.index})")
        if not tok.surface:
            raise ValidationError(f"sentence {sid}: token {pos} has empty surface")
        if not tok.deprel:
            raise ValidationError(f"sentence {sid}: token {pos} has empty deprel")
        if not 0 <= tok.head <= n:
            raise ValidationError(f"sentence {sid}: token {pos} head out of range: {tok.head}")
        if tok.head == tok.index:
            raise ValidationError(f"sentence {sid}: token {pos} is its own head")
    roots = sum(1 for t in sentence.tokens if t.head == 0)
    if roots != 1:
        logger.warning("sentence %s: %d root tokens (expected 1)", sid, roots)


def validate_sentence(sentence: Sentence) -> Sentence:
    """Check every invariant of a fully annotated sentence; returns it unchanged."""
    validate_tokens(sentence)
    sid = sentence.id
    n = len(sentence.tokens)
    if sentence.predicate is None:
        raise ValidationError(f"sentence {sid}: no predicate")
    _check_span(sid, "predicate", sentence.predicate.token_indices, n)

    seen_ids = set()
    owner = {}
    for slot in sentence.slots:
        _check_id("slot id", slot.slot_id, sid)
        if slot.slot_id in seen_ids:
            raise ValidationError(f"sentence {sid}: duplicate slot id {slot.slot_id!r}")
        seen_ids.add(slot.slot_id)
        _check_span(sid, f"slot {slot.slot_id}", slot.token_indices, n)
        for i in slot.token_indices:
            if i in owner:
                raise ValidationError(
                    f"sentence {sid}: overlapping slots {owner[i]!r} and {slot.slot_id!r} at token {i}")
            owner[i] = slot.slot_id
        if set(slot.token_indices) & set(sentence.predicate.token_indices):
            logger.warning("sentence %s: slot %s overlaps the predicate", sid, slot.slot_id)
    return sentence


def validate_corpus(corpus: list[Sentence]) -> list[Sentence]:
    seen = set()
    for s in corpus:
        validate_sentence(s)
        if s.id in seen:
            raise ValidationError(f"duplicate sentence id {s.id!r}")
        seen.add(s.id)
    return corpus


# -- CoNLL-U ------------------------------------------------------------------


def parse_conllu(text: str | Iterable[str]) -> list[Sentence]:
    """Read CoNLL-U into sentences without highlights.

    Multiword-token ranges (``1-2``) and empty nodes (``1.1``) are skipped.
    Sentences lacking a ``# sent_id`` comment get ``s<ordinal>``.
    """
    lines = iter_lines(text)
    sentences = []
    tokens: list[Token] = []
    sent_id = None

    def flush():
        nonlocal tokens, sent_id
        if tokens:
            sid = sent_id
            if sid is None:
                sid = f"s{len(sentences) + 1}"
                logger.warning("sentence %d has no sent_id; using %s", len(sentences) + 1, sid)
            sentence = Sentence(sid, tuple(tokens))
            validate_tokens(sentence)
            sentences.append(sentence)
        tokens = []
        sent_id = None

    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep and key.strip() == "sent_id":
                sent_id = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(f"expected 10 tab-separated columns, got {len(cols)}: {line!r}", lineno)
        if "-" in cols[0] or "." in cols[0]:
            continue
        try:
            index = int(cols[0])
        except ValueError:
            raise ParseError(f"non-integer ID {cols[0]!r}", lineno) from None
        try:
            head = int(cols[6])
        except ValueError:
            raise ParseError(f"non-integer HEAD {cols[6]!r}", lineno) from None
        tokens.append(Token(index, cols[1], cols[2], cols[3], head, cols[7]))
    flush()
    return sentences


# -- task JSONL ---------------------------------------------------------------

_SENTENCE_KEYS = {"id", "tokens", "predicate", "slots"}
_TOKEN_KEYS = {"surface", "lemma", "upos", "head", "deprel"}
_PREDICATE_KEYS = {"token_indices", "gold_frame"}
_SLOT_KEYS = {"slot_id", "token_indices", "gold_role"}


def _warn_unknown(obj: dict, known: set, where: str) -> None:
    extra = sorted(set(obj) - known)
    if extra:
        logger.warning("%s: ignoring unknown fields %s", where, ", ".join(extra))


def _int_list(value, where: str) -> tuple[int, ...]:
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise ValidationError(f"{where}: token_indices must be a list of integers")
    return tuple(value)


def _opt_str(value, where: str) -> Optional[str]:
    if value is not None and not isinstance(value, str):
        raise ValidationError(f"{where}: expected a string label")
    return value


def _predicate_from_json(obj, sid: str) -> PredicateSpan:
    if not isinstance(obj, dict):
        raise ValidationError(f"sentence {sid}: predicate must be an object")
    _warn_unknown(obj, _PREDICATE_KEYS, f"sentence {sid} predicate")
    return PredicateSpan(_int_list(obj.get("token_indices"), f"sentence {sid} predicate"),
                         _opt_str(obj.get("gold_frame"), f"sentence {sid} predicate"))


def _slots_from_json(items, sid: str) -> tuple[SlotSpan, ...]:
    if not isinstance(items, list):
        raise ValidationError(f"sentence {sid}: slots must be a list")
    slots = []
    for obj in items:
        if not isinstance(obj, dict) or not isinstance(obj.get("slot_id"), str):
            raise ValidationError(f"sentence {sid}: each slot needs a string slot_id")
        where = f"sentence {sid} slot {obj['slot_id']}"
        _warn_unknown(obj, _SLOT_KEYS, where)
        slots.append(SlotSpan(obj["slot_id"], _int_list(obj.get("token_indices"), where),
                              _opt_str(obj.get("gold_role"), where)))
    return tuple(slots)


def sentence_from_json(obj: dict) -> Sentence:
    if not isinstance(obj, dict):
        raise ValidationError("expected a JSON object per line")
    sid = obj.get("id")
    if not isinstance(sid, str):
        raise ValidationError("sentence without a string id")
    _warn_unknown(obj, _SENTENCE_KEYS, f"sentence {sid}")
    raw_tokens = obj.get("tokens")
    if not isinstance(raw_tokens, list):
        raise ValidationError(f"sentence {sid}: tokens must be a list")
    tokens = []
    for i, t in enumerate(raw_tokens, start=1):
        if not isinstance(t, dict):
            raise ValidationError(f"sentence {sid}: token {i} must be an object")
        _warn_unknown(t, _TOKEN_KEYS, f"sentence {sid} token {i}")
        head = t.get("head")
        if not isinstance(head, int) or isinstance(head, bool):
            raise ValidationError(f"sentence {sid}: token {i} head must be an integer")
        fields = [t.get(k, "") for k in ("surface", "lemma", "upos", "deprel")]
        if not all(isinstance(f, str) for f in fields):
            raise ValidationError(f"sentence {sid}: token {i} has non-string fields")
        surface, lemma, upos, deprel = fields
        tokens.append(Token(i, surface, lemma, upos, head, deprel))
    if "predicate" not in obj:
        raise ValidationError(f"sentence {sid}: no predicate")
    return Sentence(sid, tuple(tokens), _predicate_from_json(obj["predicate"], sid),
                    _slots_from_json(obj.get("slots", []), sid))


def _json_lines(text: str | Iterable[str]):
    for lineno, line in enumerate(iter_lines(text), start=1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", lineno) from None


def parse_task_jsonl(text: str | Iterable[str]) -> list[Sentence]:
    """Parse and validate the task JSONL format."""
    corpus = [sentence_from_json(obj) for _, obj in _json_lines(text)]
    return validate_corpus(corpus)


def sentence_to_json(sentence: Sentence) -> dict:
    predicate = {"token_indices": list(sentence.predicate.token_indices)}
    if sentence.predicate.gold_frame is not None:
        predicate["gold_frame"] = sentence.predicate.gold_frame
    slots = []
    for s in sentence.slots:
        slot = {"slot_id": s.slot_id, "token_indices": list(s.token_indices)}
        if s.gold_role is not None:
            slot["gold_role"] = s.gold_role
        slots.append(slot)
    return {
        "id": sentence.id,
        "tokens": [{"surface": t.surface, "lemma": t.lemma, "upos": t.upos,
                    "head": t.head, "deprel": t.deprel} for t in sentence.tokens],
        "predicate": predicate,
        "slots": slots,
    }


def dump_task_jsonl(corpus: Iterable[Sentence]) -> str:
    return "".join(json.dumps(sentence_to_json(s), ensure_ascii=False) + "\n" for s in corpus)


def attach_annotations(sentences: list[Sentence], annotations: str | Iterable[str]) -> list[Sentence]:
    """Attach predicate and slot highlights from a JSONL sidecar keyed by sentence id.

    Sentences without an annotation line are dropped.
    """
    by_id = {}
    for lineno, obj in _json_lines(annotations):
        sid = obj.get("id") if isinstance(obj, dict) else None
        if not isinstance(sid, str):
            raise ParseError("annotation without a string id", lineno)
        if sid in by_id:
            raise ValidationError(f"duplicate annotation for sentence {sid}")
        _warn_unknown(obj, {"id", "predicate", "slots"}, f"annotation {sid}")
        by_id[sid] = obj
    known = {s.id for s in sentences}
    missing = sorted(set(by_id) - known)
    if missing:
        raise ValidationError(f"annotations for unknown sentences: {', '.join(missing)}")

    out = []
    for s in sentences:
        ann = by_id.get(s.id)
        if ann is None:
            continue
        if "predicate" not in ann:
            raise ValidationError(f"sentence {s.id}: no predicate")
        out.append(Sentence(s.id, s.tokens, _predicate_from_json(ann["predicate"], s.id),
                            _slots_from_json(ann.get("slots", []), s.id)))
    dropped = len(sentences) - len(out)
    if dropped:
        logger.warning("dropped %d sentences without annotations", dropped)
    return validate_corpus(out)


def instance_ids(corpus: Iterable[Sentence], kind: str) -> list[InstanceId]:
    """Instance ids in corpus order: one per sentence, or one per slot."""
    if kind == VERB:
        return [InstanceId(s.id) for s in corpus]
    if kind == SLOT:
        return [InstanceId(s.id, slot.slot_id) for s in corpus for slot in s.slots]
    raise ValueError(f"unknown instance kind {kind!r}")


def slot_lookup(corpus: Iterable[Sentence]) -> dict[InstanceId, tuple[Sentence, SlotSpan, int]]:
    """Map slot instance id -> (sentence, slot, 1-based slot ordinal)."""
    return {InstanceId(s.id, slot.slot_id): (s, slot, k)
            for s in corpus for k, slot in enumerate(s.slots, start=1)}
