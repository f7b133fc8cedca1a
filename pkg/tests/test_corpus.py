import json
import logging

import pytest
from hypothesis import given, strategies as st

from semframe.corpus import (SLOT, VERB, InstanceId, PredicateSpan, Sentence, SlotSpan, Token,
                             attach_annotations, dump_task_jsonl, instance_ids, parse_conllu,
                             parse_task_jsonl)
from semframe.errors import ParseError, ValidationError

CONLLU = (
    "# sent_id = s1\n"
    "1\tThe\tthe\tDET\t_\t_\t2\tdet\t_\t_\n"
    "2\tcat\tcat\tNOUN\t_\t_\t0\troot\t_\t_\n"
    "\n"
)


def row(i, form, head, deprel, lemma=None):
    return "\t".join([str(i), form, lemma or form.lower(), "X", "_", "_", str(head), deprel, "_", "_"])


def task_line(**over):
    obj = {
        "id": "s1",
        "tokens": [
            {"surface": "Kim", "lemma": "kim", "upos": "PROPN", "head": 2, "deprel": "nsubj"},
            {"surface": "bought", "lemma": "buy", "upos": "VERB", "head": 0, "deprel": "root"},
            {"surface": "shares", "lemma": "share", "upos": "NOUN", "head": 2, "deprel": "obj"},
        ],
        "predicate": {"token_indices": [2], "gold_frame": "Commerce_buy"},
        "slots": [{"slot_id": "a", "token_indices": [1], "gold_role": "Agent"}],
    }
    obj.update(over)
    return json.dumps(obj)


class TestConllu:
    def test_minimal(self):
        [s] = parse_conllu(CONLLU)
        assert s.id == "s1"
        assert [t.surface for t in s.tokens] == ["The", "cat"]
        assert s.token(2).head == 0 and s.token(2).deprel == "root"
        assert s.token(1) == Token(1, "The", "the", "DET", 2, "det")
        assert s.predicate is None and s.slots == ()

    def test_skips_ranges_and_empty_nodes(self):
        text = "\n".join([
            "# sent_id = x",
            "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_",
            row(1, "do", 0, "root"),
            row(2, "n't", 1, "advmod"),
            "1.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_",
        ]) + "\n"
        [s] = parse_conllu(text)
        assert [t.surface for t in s.tokens] == ["do", "n't"]

    def test_wrong_column_count_names_line(self):
        text = "# sent_id = x\n" + row(1, "a", 0, "root") + "\n" + "2\tb\tb\tX\t_\t_\t1\tdep\t_\n"
        with pytest.raises(ParseError, match="line 3"):
            parse_conllu(text)

    def test_non_integer_head(self):
        with pytest.raises(ParseError, match="HEAD"):
            parse_conllu(row(1, "a", "x", "root") + "\n")

    def test_missing_sent_id_is_synthesized(self, caplog):
        text = row(1, "a", 0, "root") + "\n\n" + row(1, "b", 0, "root") + "\n"
        with caplog.at_level(logging.WARNING):
            sents = parse_conllu(text)
        assert [s.id for s in sents] == ["s1", "s2"]
        assert "sent_id" in caplog.text

    def test_multi_root_warns(self, caplog):
        text = "# sent_id = m\n" + row(1, "a", 0, "root") + "\n" + row(2, "b", 0, "root") + "\n"
        with caplog.at_level(logging.WARNING):
            [s] = parse_conllu(text)
        assert len(s.tokens) == 2
        assert "2 root tokens" in caplog.text

    def test_self_loop_rejected(self):
        with pytest.raises(ValidationError, match="own head"):
            parse_conllu(row(1, "a", 1, "root") + "\n")

    def test_attach_annotations(self):
        sents = parse_conllu(CONLLU + "# sent_id = s2\n" + row(1, "x", 0, "root") + "\n")
        ann = json.dumps({"id": "s1", "predicate": {"token_indices": [2]},
                          "slots": [{"slot_id": "d", "token_indices": [1]}]})
        [s] = attach_annotations(sents, ann)
        assert s.id == "s1" and s.predicate.token_indices == (2,)
        assert s.slots[0].token_indices == (1,)

    def test_attach_unknown_sentence(self):
        ann = json.dumps({"id": "zz", "predicate": {"token_indices": [1]}})
        with pytest.raises(ValidationError, match="unknown sentences"):
            attach_annotations(parse_conllu(CONLLU), ann)


class TestTaskJsonl:
    def test_valid_line(self):
        [s] = parse_task_jsonl(task_line())
        assert len(s) == 3
        assert s.predicate == PredicateSpan((2,), "Commerce_buy")
        assert s.slots == (SlotSpan("a", (1,), "Agent"),)

    def test_overlapping_slots(self):
        line = task_line(slots=[{"slot_id": "a", "token_indices": [1, 3]},
                                {"slot_id": "b", "token_indices": [3]}])
        with pytest.raises(ValidationError, match="overlapping slots"):
            parse_task_jsonl(line)

    def test_predicate_out_of_range(self):
        with pytest.raises(ValidationError, match="index out of range") as e:
            parse_task_jsonl(task_line(predicate={"token_indices": [5]}))
        assert "s1" in str(e.value)

    def test_json_error_has_line_number(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_task_jsonl(task_line() + "\n{not json\n")

    def test_discontiguous_slot_allowed(self):
        [s] = parse_task_jsonl(task_line(slots=[{"slot_id": "a", "token_indices": [1, 3]}]))
        assert s.slots[0].token_indices == (1, 3)

    def test_unsorted_indices_rejected(self):
        with pytest.raises(ValidationError, match="strictly increasing"):
            parse_task_jsonl(task_line(slots=[{"slot_id": "a", "token_indices": [3, 1]}]))

    def test_duplicate_slot_id(self):
        line = task_line(slots=[{"slot_id": "a", "token_indices": [1]},
                                {"slot_id": "a", "token_indices": [3]}])
        with pytest.raises(ValidationError, match="duplicate slot id"):
            parse_task_jsonl(line)

    def test_duplicate_sentence_id(self):
        with pytest.raises(ValidationError, match="duplicate sentence id"):
            parse_task_jsonl(task_line() + "\n" + task_line())

    def test_hash_in_sentence_id_rejected(self):
        with pytest.raises(ValidationError, match="forbidden"):
            parse_task_jsonl(task_line(id="a#b"))

    def test_unknown_fields_warn(self, caplog):
        with caplog.at_level(logging.WARNING):
            parse_task_jsonl(task_line(comment="hi"))
        assert "comment" in caplog.text

    def test_slot_overlapping_predicate_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            parse_task_jsonl(task_line(slots=[{"slot_id": "a", "token_indices": [2]}]))
        assert "overlaps the predicate" in caplog.text

    def test_round_trip(self):
        corpus = parse_task_jsonl(task_line() + "\n" + task_line(id="s2", slots=[]))
        assert parse_task_jsonl(dump_task_jsonl(corpus)) == corpus


def two_sentence_corpus():
    return parse_task_jsonl(
        task_line(slots=[{"slot_id": "a", "token_indices": [1]}, {"slot_id": "b", "token_indices": [3]}])
        + "\n" + task_line(id="s2"))


class TestInstanceIds:
    def test_slots_in_order(self):
        ids = instance_ids(two_sentence_corpus(), SLOT)
        assert [str(i) for i in ids] == ["s1#a", "s1#b", "s2#a"]

    def test_verbs(self):
        assert [str(i) for i in instance_ids(two_sentence_corpus(), VERB)] == ["s1", "s2"]

    def test_empty(self):
        assert instance_ids([], SLOT) == []

    def test_stable(self):
        c = two_sentence_corpus()
        assert instance_ids(c, SLOT) == instance_ids(c, SLOT)

    def test_parse_round_trip(self):
        for text in ("s1", "s1#a"):
            assert str(InstanceId.parse(text)) == text
        assert InstanceId.parse("s1#a").kind == SLOT
        assert InstanceId.parse("s1").kind == VERB


# random valid corpora for the round-trip property
@st.composite
def sentences(draw, sid):
    n = draw(st.integers(1, 8))
    words = st.text(st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=5)
    root = draw(st.integers(1, n))
    tokens = []
    for i in range(1, n + 1):
        head = 0 if i == root else draw(st.sampled_from([h for h in range(1, n + 1) if h != i]))
        tokens.append(Token(i, draw(words), draw(words), "X", head, draw(st.sampled_from(["det", "obj", "nsubj"]))))
    pred = draw(st.integers(1, n))
    free = [i for i in range(1, n + 1) if i != pred]
    chosen = sorted(draw(st.lists(st.sampled_from(free), unique=True)) if free else [])
    slots = tuple(SlotSpan(f"x{k}", (i,), draw(st.none() | st.sampled_from(["A", "T"])))
                  for k, i in enumerate(chosen))
    return Sentence(sid, tuple(tokens), PredicateSpan((pred,), draw(st.none() | words)), slots)


@given(st.integers(0, 4).flatmap(lambda m: st.tuples(*[sentences(f"s{i}") for i in range(m)])))
def test_jsonl_round_trip_property(corpus):
    corpus = list(corpus)
    assert parse_task_jsonl(dump_task_jsonl(corpus)) == corpus
