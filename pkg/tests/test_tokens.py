import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from neuromorph.errors import ShapeError, VocabularyError
from neuromorph.tokens import (EmbeddingTable, OutputHead, Vocabulary, add_positional, detokenize, embed,
                               generate, positional_table, softmax_columns, tokenize)


class TestVocabulary:
    def test_from_text(self):
        v = Vocabulary.from_text("abca")
        assert v.symbols == ("a", "b", "c", "<eos>")
        assert v.stop_id == 4
        assert tokenize("cab", v) == [3, 1, 2]

    def test_unknown_symbol(self):
        v = Vocabulary.from_text("ab")
        with pytest.raises(VocabularyError):
            tokenize("abz", v)
        with pytest.raises(VocabularyError):
            v.symbol(0)

    def test_detokenize_drops_stop(self):
        v = Vocabulary.from_text("hi")
        assert detokenize([1, 2, v.stop_id], v) == "hi"

    @settings(max_examples=100, deadline=None)
    @given(st.text(min_size=1, max_size=40))
    def test_round_trip(self, text):
        assume("<eos>" not in text)
        v = Vocabulary.from_text(text)
        assert detokenize(tokenize(text, v), v) == text

    @settings(max_examples=100, deadline=None)
    @given(st.text(min_size=1, max_size=40))
    def test_file_round_trip(self, text):
        v = Vocabulary.from_text(text)
        assert Vocabulary.from_file_text(v.to_file_text()) == v

    def test_file_escapes(self):
        v = Vocabulary.from_text("a\nb\\")
        text = v.to_file_text()
        assert "\\n" in text and "\\\\" in text
        assert text.splitlines()[-1] == "<eos>"


class TestEmbedding:
    def test_lookup_columns(self):
        e = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(embed([3, 1], EmbeddingTable(e)), [[2.0, 0.0], [5.0, 3.0]])

    def test_bad_ids(self):
        table = EmbeddingTable(np.zeros((2, 3)))
        with pytest.raises(VocabularyError):
            embed([0], table)
        with pytest.raises(VocabularyError):
            embed([4], table)

    def test_positional_values(self):
        p = positional_table(4, 3)
        for n in range(1, 4):
            for d in range(4):
                angle = n / 10000 ** (2 * (d // 2) / 4)
                expected = math.sin(angle) if d % 2 == 0 else math.cos(angle)
                assert p[d, n - 1] == pytest.approx(expected, abs=1e-15)

    def test_add_positional(self):
        x = np.zeros((6, 5))
        np.testing.assert_array_equal(add_positional(x), positional_table(6, 5))
        with pytest.raises(ShapeError):
            add_positional(np.zeros(3))


class TestHead:
    def test_softmax_columns_sum_to_one(self, rng):
        p = softmax_columns(rng.normal(size=(5, 7)) * 30)
        np.testing.assert_allclose(p.sum(axis=0), 1.0)

    def test_decode_tie_lowest(self):
        head = OutputHead(np.array([[1.0], [1.0], [0.0]]))
        assert head.decode(np.array([2.0])) == 1

    def test_probs_with_bias(self):
        head = OutputHead(np.eye(2), np.array([0.0, math.log(3)]))
        np.testing.assert_allclose(head.probs(np.zeros(2)), [0.25, 0.75])


class TestGenerate:
    def setup_method(self):
        # with an identity "model" and tied head the greedy choice repeats the last token
        self.table = EmbeddingTable(np.eye(4) * 10)
        self.head = OutputHead.tied(self.table)

    def test_repeat_last(self):
        out = generate([2, 3], lambda x: x, self.head, 3, self.table, positional=False)
        assert out == [2, 3, 3, 3, 3]

    def test_stop_token(self):
        out = generate([1, 4], lambda x: x, self.head, 10, self.table, stop_id=4, positional=False)
        assert out == [1, 4, 4]

    def test_zero_steps(self):
        assert generate([1], lambda x: x, self.head, 0, self.table) == [1]

    def test_model_sees_growing_sequence(self):
        seen = []

        def model(x):
            seen.append(x.shape[1])
            return x

        generate([1], model, self.head, 3, self.table)
        assert seen == [1, 2, 3]
