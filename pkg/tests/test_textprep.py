from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexcase.corpus import Document
from lexcase.textprep import (
    PrepConfig,
    Stage,
    Stemmer,
    default_stemmer,
    load_negation_words,
    load_stopwords,
    preprocess,
    preprocess_all,
    preprocess_text,
    strip_paragraph_numbers,
    tokenize,
)


class TestTokenize:
    def test_lowercases_and_splits_on_punctuation(self):
        assert tokenize("The Court—held: THAT.") == ["the", "court", "held", "that"]

    def test_digits_kept_underscores_split(self):
        assert tokenize("s4b rule_12") == ["s4b", "rule", "12"]

    def test_empty(self):
        assert tokenize("") == []


class TestStripParagraphNumbers:
    @pytest.mark.parametrize("marker", ["[1] ", "12. ", "(3) "])
    def test_line_leading_markers_removed(self, marker):
        assert strip_paragraph_numbers(f"{marker}The facts.") == "The facts."

    def test_mid_line_markers_kept(self):
        text = "see para [4] above"
        assert strip_paragraph_numbers(text) == text

    def test_applies_per_line(self):
        got = strip_paragraph_numbers("[1] First.\n[2] Second.")
        assert got == "First.\nSecond."

    def test_line_leading_decimal_loses_its_integer_part(self):
        # a line-leading "N." is indistinguishable from a paragraph label
        assert strip_paragraph_numbers("3.14 ratio") == "14 ratio"


def test_bundled_stopword_list_size():
    assert len(load_stopwords()) == 127


def test_bundled_negation_words():
    words = load_negation_words()
    assert {"not", "no", "never", "cannot"} <= words


def test_prep_config_rejects_uppercase_stopwords():
    with pytest.raises(ValueError):
        PrepConfig(stage=Stage.STAGE2, stopwords=frozenset({"The"}))


def test_prep_config_rejects_zero_min_len():
    with pytest.raises(ValueError):
        PrepConfig(stage=Stage.STAGE1, min_token_len=0)


class TestStages:
    def test_stage1_keeps_stopwords_and_short_tokens(self):
        cfg = PrepConfig(stage=Stage.STAGE1)
        got = preprocess_text("[2] The court so held.", cfg)
        assert got == ["the", "court", "so", "held"]

    def test_stage2_filters_and_stems(self):
        cfg = PrepConfig(stage=Stage.STAGE2)
        got = preprocess_text("The appeals were dismissed in 1999.", cfg)
        assert got == ["appeal", "dismiss"]

    def test_stage2_drops_pure_numbers_but_not_mixed(self):
        cfg = PrepConfig(stage=Stage.STAGE2)
        assert preprocess_text("2001 s12b", cfg) == ["s12b"]

    def test_preprocess_fills_tokens(self, docs_small):
        cfg = PrepConfig(stage=Stage.STAGE2)
        out = preprocess(docs_small[0], cfg)
        assert out.tokens == ("court", "dismiss", "appeal")
        assert docs_small[0].tokens == ()

    def test_preprocess_all_order(self, docs_small):
        cfg = PrepConfig(stage=Stage.STAGE1)
        outs = preprocess_all(docs_small, cfg)
        assert [o.id for o in outs] == [d.id for d in docs_small]

    @settings(max_examples=50, deadline=None)
    @given(st.text(max_size=200))
    def test_stage2_idempotent(self, text):
        """Feeding stage-2 output back through stage 2 changes nothing."""
        cfg = PrepConfig(stage=Stage.STAGE2)
        once = preprocess_text(text, cfg)
        again = preprocess_text(" ".join(once), cfg)
        assert again == once


class TestStemmer:
    def test_frozen_vectors(self, data_files):
        stemmer = default_stemmer()
        for line in (data_files / "stemmer_vectors.tsv").read_text().splitlines():
            if not line or line.startswith("#"):
                continue
            word, expected = line.split("\t")
            assert stemmer.stem(word) == expected, word

    def test_short_words_untouched(self):
        stemmer = default_stemmer()
        assert stemmer.stem("at") == "at"
        assert stemmer.stem("be") == "be"

    @settings(max_examples=100, deadline=None)
    @given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=15))
    def test_stem_idempotent(self, word):
        stemmer = default_stemmer()
        assert stemmer.stem(stemmer.stem(word)) == stemmer.stem(word)

    def test_table_validation(self, tmp_path):
        bad = tmp_path / "rules.tsv"
        bad.write_text("1a\tsses\tss\n")  # three fields, not four
        with pytest.raises(ValueError):
            Stemmer.from_table(bad)
        bad.write_text("9\tsses\tss\t-\n")
        with pytest.raises(ValueError):
            Stemmer.from_table(bad)


def test_data_dir_override(tmp_path, monkeypatch):
    alt = tmp_path / "alt"
    alt.mkdir()
    (alt / "stopwords.txt").write_text("foo\nbar\n")
    monkeypatch.setenv("LEXCASE_DATA_DIR", str(alt))
    # bypass the cache: pass the path explicitly
    assert load_stopwords(str(alt / "stopwords.txt")) == {"foo", "bar"}
    from lexcase.textprep import data_dir

    assert data_dir() == Path(str(alt))
