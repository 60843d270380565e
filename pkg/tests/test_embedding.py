import warnings

import numpy as np
import pytest

from lexcase.corpus import Document
from lexcase.embedding import (
    EmbedConfig,
    infer,
    load_model,
    negative_sampling_step,
    rank_embed,
    save_model,
    train,
)
from lexcase.errors import DegenerateCorpusError, EmptyCorpusError


def _doc(doc_id, tokens):
    return Document(id=doc_id, text=" ".join(tokens), tokens=tuple(tokens))


def _two_topic_docs(n_per_topic=8, length=30, seed=3):
    """Documents drawn from two disjoint vocabularies."""
    rng = np.random.default_rng(seed)
    law = [f"law{i}" for i in range(10)]
    cook = [f"cook{i}" for i in range(10)]
    docs = []
    for j in range(n_per_topic):
        docs.append(_doc(f"L{j}", rng.choice(law, size=length).tolist()))
        docs.append(_doc(f"C{j}", rng.choice(cook, size=length).tolist()))
    return docs


SMALL_CFG = EmbedConfig(dim=12, window=3, epochs=5, negatives=3, seed=9, min_count=1)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            EmbedConfig(dim=0)
        with pytest.raises(ValueError):
            EmbedConfig(window=0)
        with pytest.raises(ValueError):
            EmbedConfig(lr_start=0.001, lr_end=0.01)
        with pytest.raises(ValueError):
            EmbedConfig(negatives=0)


class TestTrain:
    def test_empty_corpus_raises(self):
        with pytest.raises(EmptyCorpusError):
            train([], SMALL_CFG)

    def test_no_vocab_survives_min_count(self):
        docs = [_doc("d", ["once", "words", "alone"])]
        with pytest.raises(DegenerateCorpusError):
            train(docs, EmbedConfig(dim=4, min_count=2))

    def test_shapes_and_vocab_order(self):
        docs = [_doc("d1", ["b", "a", "a"]), _doc("d2", ["a", "b", "c"])]
        model = train(docs, SMALL_CFG)
        # most frequent first, ties alphabetical
        assert list(model.vocab) == ["a", "b", "c"]
        assert model.word_in.shape == (3, SMALL_CFG.dim)
        assert model.doc_matrix.shape == (2, SMALL_CFG.dim)
        assert model.doc_ids == ("d1", "d2")
        assert len(model.epoch_losses) == SMALL_CFG.epochs

    def test_loss_decreases(self):
        model = train(_two_topic_docs(), EmbedConfig(dim=16, epochs=8, seed=2, min_count=1))
        assert model.epoch_losses[-1] < model.epoch_losses[0]

    def test_same_seed_same_weights(self):
        docs = _two_topic_docs()
        m1 = train(docs, SMALL_CFG)
        m2 = train(docs, SMALL_CFG)
        np.testing.assert_array_equal(m1.word_in, m2.word_in)
        np.testing.assert_array_equal(m1.word_out, m2.word_out)
        np.testing.assert_array_equal(m1.doc_matrix, m2.doc_matrix)
        assert m1.epoch_losses == m2.epoch_losses

    def test_different_seed_differs(self):
        from dataclasses import replace

        docs = _two_topic_docs()
        m1 = train(docs, SMALL_CFG)
        m2 = train(docs, replace(SMALL_CFG, seed=10))
        assert not np.array_equal(m1.doc_matrix, m2.doc_matrix)


class TestGradients:
    def test_analytic_matches_central_differences(self):
        rng = np.random.default_rng(0)
        dim, vocab = 7, 9
        doc_vec = rng.normal(0, 0.3, dim)
        word_in = rng.normal(0, 0.3, (vocab, dim))
        word_out = rng.normal(0, 0.3, (vocab, dim))
        context = [1, 4, 4]  # duplicate on purpose
        target, negatives = 2, [5, 7]
        h = 1e-5

        _, grad_h, grad_out = negative_sampling_step(
            doc_vec, word_in, word_out, context, target, negatives
        )

        def loss_at(dv, wi, wo):
            loss, _, _ = negative_sampling_step(dv, wi, wo, context, target, negatives)
            return loss

        share = grad_h / (1 + len(context))
        for k in range(dim):
            bumped = doc_vec.copy()
            bumped[k] += h
            up = loss_at(bumped, word_in, word_out)
            bumped[k] -= 2 * h
            down = loss_at(bumped, word_in, word_out)
            numeric = (up - down) / (2 * h)
            assert numeric == pytest.approx(share[k], rel=1e-4, abs=1e-8)

        # word_out rows: repeated negative rows aggregate their gradients
        rows = [target] + negatives
        for i, row in enumerate(rows):
            for k in range(dim):
                bumped = word_out.copy()
                bumped[row, k] += h
                up = loss_at(doc_vec, word_in, bumped)
                bumped[row, k] -= 2 * h
                down = loss_at(doc_vec, word_in, bumped)
                numeric = (up - down) / (2 * h)
                assert numeric == pytest.approx(grad_out[i, k], rel=1e-4, abs=1e-8)


@pytest.fixture(scope="module")
def model():
    # deep enough that the two topics actually separate
    return train(
        _two_topic_docs(), EmbedConfig(dim=24, window=4, epochs=60, seed=4, min_count=1)
    )


class TestInfer:

    def test_deterministic(self, model):
        tokens = ["law1", "law2", "law3"]
        v1 = infer(model, tokens, steps=30)
        v2 = infer(model, tokens, steps=30)
        np.testing.assert_array_equal(v1, v2)

    def test_depends_on_tokens_not_call_order(self, model):
        a1 = infer(model, ["law1", "law2"], steps=10)
        infer(model, ["cook5"], steps=10)
        a2 = infer(model, ["law1", "law2"], steps=10)
        np.testing.assert_array_equal(a1, a2)

    def test_all_oov_warns_and_returns_init(self, model):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            vec = infer(model, ["zzz", "qqq"], steps=10)
        assert any("vocabulary" in str(w.message) for w in caught)
        assert vec.shape == (24,)

    def test_zero_steps_rejected(self, model):
        with pytest.raises(ValueError):
            infer(model, ["law1"], steps=0)

    def test_lands_near_own_topic(self, model):
        vec = infer(model, ["law0", "law1", "law2", "law0", "law3"] * 4, steps=200)

        def cos(a, b):
            return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))

        law = [cos(vec, model.doc_vector(f"L{j}")) for j in range(8)]
        cook = [cos(vec, model.doc_vector(f"C{j}")) for j in range(8)]
        assert np.mean(law) > np.mean(cook)


class TestRankEmbed:
    def test_trained_ids_used_without_inference(self):
        docs = _two_topic_docs()
        model = train(docs, EmbedConfig(dim=24, window=4, epochs=60, seed=4, min_count=1))
        ranked = rank_embed(
            model, ["law0", "law1", "law2"] * 5, docs[:4], query_id="q", steps=250
        )
        assert ranked.query_id == "q"
        assert set(ranked.doc_ids) == {"L0", "C0", "L1", "C1"}
        # both law docs should outrank both cookery docs
        positions = {d: i for i, d in enumerate(ranked.doc_ids)}
        assert max(positions["L0"], positions["L1"]) < min(
            positions["C0"], positions["C1"]
        )


class TestPersistence:
    def test_roundtrip_and_byte_stability(self, tmp_path):
        model = train(_two_topic_docs(), SMALL_CFG)
        p1, p2 = tmp_path / "m1.bin", tmp_path / "m2.bin"
        save_model(model, p1)
        save_model(model, p2)
        assert p1.read_bytes() == p2.read_bytes()

        loaded = load_model(p1)
        assert loaded.config == model.config
        assert loaded.vocab == model.vocab
        assert loaded.doc_ids == model.doc_ids
        assert loaded.epoch_losses == model.epoch_losses
        np.testing.assert_array_equal(loaded.word_in, model.word_in)
        np.testing.assert_array_equal(loaded.word_out, model.word_out)
        np.testing.assert_array_equal(loaded.doc_matrix, model.doc_matrix)

    def test_truncated_file_rejected(self, tmp_path):
        model = train(_two_topic_docs(), SMALL_CFG)
        path = tmp_path / "m.bin"
        save_model(model, path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 16])
        from lexcase.errors import CorpusParseError

        with pytest.raises(CorpusParseError):
            load_model(path)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "m.bin"
        path.write_bytes(b"NOT-A-MODEL\x00" + b"\x00" * 64)
        from lexcase.errors import CorpusParseError

        with pytest.raises(CorpusParseError):
            load_model(path)
