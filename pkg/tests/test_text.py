import string

from hypothesis import given, strategies as st

from book2dialogue.text import normalize_whitespace, segment_sentences, tokenize


class TestTokenize:
    def test_case_and_punctuation(self):
        assert tokenize("The cat, the CAT!") == ["the", "cat", "the", "cat"]

    def test_empty(self):
        assert tokenize("") == []

    def test_apostrophe_and_alphanumeric(self):
        assert tokenize("don't stop 2x") == ["don't", "stop", "2x"]

    def test_underscore_is_not_a_token_char(self):
        assert tokenize("a_b") == ["a", "b"]

    @given(st.text(max_size=200))
    def test_idempotent_on_own_output(self, text):
        tokens = tokenize(text)
        assert tokenize(" ".join(tokens)) == tokens


class TestSegmentSentences:
    def test_single_sentence(self):
        assert segment_sentences("Hello world.") == ["Hello world."]

    def test_abbreviation_guard(self):
        assert segment_sentences("Dr. Smith arrived. He left!") == [
            "Dr. Smith arrived.", "He left!"]

    def test_decimal_guard(self):
        assert segment_sentences("Is it 3.5? Yes.") == ["Is it 3.5?", "Yes."]

    def test_more_abbreviations(self):
        got = segment_sentences("See Fig. 3 for details. Use it, e.g. here.")
        assert got == ["See Fig. 3 for details.", "Use it, e.g. here."]

    def test_question_and_exclamation(self):
        got = segment_sentences("Why? Because! It is so.")
        assert got == ["Why?", "Because!", "It is so."]

    def test_no_empty_sentences(self):
        for sentence in segment_sentences("One.   Two.  Three."):
            assert sentence.strip()

    @given(st.text(alphabet=string.ascii_letters + " .?!,'\"0123456789",
                   max_size=300))
    def test_lossless_modulo_whitespace(self, text):
        sentences = segment_sentences(text)
        assert " ".join(sentences) == normalize_whitespace(text)
