import pytest
from hypothesis import given, strategies as st

from book2dialogue.dialogue import (Dialogue, DialogueMeta, Strategy,
                                    append_pair, dialogue_from_dict,
                                    dialogue_to_dict, parse_transcript,
                                    render_history, truncate_pairs)
from book2dialogue.errors import EmptyUtterance, InvalidTurnCap, NoPairsFound


def make_dialogue(*pairs):
    dialogue = Dialogue()
    for q, a in pairs:
        dialogue = append_pair(dialogue, q, a)
    return dialogue


class TestAppendPair:
    def test_base_case(self):
        d = append_pair(Dialogue(), "q", "a")
        assert len(d) == 1
        assert d.pairs[0].index == 1

    def test_ordering(self):
        d = make_dialogue(("q1", "a1"), ("q2", "a2"))
        assert [p.index for p in d.pairs] == [1, 2]
        assert d.pairs[0].question == "q1"

    def test_blank_question_rejected(self):
        with pytest.raises(EmptyUtterance):
            append_pair(Dialogue(), "  ", "a")

    def test_immutability(self):
        d1 = make_dialogue(("q", "a"))
        d2 = append_pair(d1, "q2", "a2")
        assert len(d1) == 1
        assert len(d2) == 2


class TestRenderHistory:
    def test_empty(self):
        assert render_history(Dialogue()) == ""

    def test_single_pair(self):
        d = make_dialogue(("Why?", "Because."))
        assert render_history(d) == "Student: Why?\nTeacher: Because."

    def test_two_pairs_order(self):
        d = make_dialogue(("q1", "a1"), ("q2", "a2"))
        lines = render_history(d).split("\n")
        assert lines == ["Student: q1", "Teacher: a1",
                         "Student: q2", "Teacher: a2"]


class TestParseTranscript:
    def test_single_pair(self):
        assert parse_transcript("student: q1 teacher: a1") == [("q1", "a1")]

    def test_trailing_student_dropped(self, caplog):
        with caplog.at_level("WARNING"):
            pairs = parse_transcript("Student: q1\nTeacher: a1\nStudent: q2")
        assert pairs == [("q1", "a1")]
        assert any("trailing" in r.message for r in caplog.records)

    def test_no_labels(self):
        with pytest.raises(NoPairsFound):
            parse_transcript("hello there")

    def test_case_insensitive_and_bullets(self):
        text = "- STUDENT: what is x?\n* Teacher: x is y."
        assert parse_transcript(text) == [("what is x?", "x is y.")]

    def test_multiline_utterances(self):
        text = "student: line one\nstill the question?\nteacher: the\nanswer."
        assert parse_transcript(text) == [
            ("line one\nstill the question?", "the\nanswer.")]

    @given(st.lists(st.tuples(
        st.text(alphabet="abcdefgh ?", min_size=1).filter(str.strip),
        st.text(alphabet="abcdefgh .", min_size=1).filter(str.strip)),
        min_size=1, max_size=6))
    def test_round_trip_with_render(self, qa):
        dialogue = Dialogue()
        for q, a in qa:
            dialogue = append_pair(dialogue, q, a)
        expected = [(p.question, p.answer) for p in dialogue.pairs]
        assert parse_transcript(render_history(dialogue)) == expected


class TestTruncatePairs:
    def test_caps_at_half_turns(self):
        d = make_dialogue(*[(f"q{i}", f"a{i}") for i in range(1, 9)])
        assert len(truncate_pairs(d, 12)) == 6

    def test_under_cap_unchanged(self):
        d = make_dialogue(("q1", "a1"), ("q2", "a2"), ("q3", "a3"))
        assert truncate_pairs(d, 12) is d

    def test_odd_cap_rejected(self):
        with pytest.raises(InvalidTurnCap):
            truncate_pairs(Dialogue(), 7)

    def test_cap_below_two_rejected(self):
        with pytest.raises(InvalidTurnCap):
            truncate_pairs(Dialogue(), 0)

    @given(st.integers(min_value=1, max_value=20),
           st.integers(min_value=1, max_value=10))
    def test_idempotent(self, n_pairs, half_cap):
        d = make_dialogue(*[(f"q{i}", f"a{i}") for i in range(n_pairs)])
        cap = 2 * half_cap
        once = truncate_pairs(d, cap)
        assert truncate_pairs(once, cap) == once
        assert len(once) <= cap // 2


class TestSerialization:
    def test_round_trip(self):
        d = make_dialogue(("q1", "a1"), ("q2", "a2"))
        meta = DialogueMeta(book_id="b", chapter_index=2, section_id="s",
                            strategy=Strategy.INPAINTING.value,
                            info_level="full", seed=7, dialogue_id="s:inp")
        d = Dialogue(pairs=d.pairs, meta=meta)
        assert dialogue_from_dict(dialogue_to_dict(d)) == d
