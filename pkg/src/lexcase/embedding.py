"""Paragraph vectors (PV-DM) trained with negative sampling.

Each prediction step combines a document vector with the input vectors of
the words inside a symmetric window and predicts the centre word:

    h = mean(doc_vec, word_in[context...])
    loss = -log s(h . out[target]) - sum over negatives of log s(-h . out[neg])

with s the logistic function and negatives drawn from the unigram^0.75
distribution. Mean combination (rather than concatenation) keeps the
predictor independent of context width, which is what makes inference on
texts of any length possible. Training is plain SGD, single-threaded,
with the learning rate decaying linearly from ``lr_start`` to ``lr_end``
across all epoch-position steps; every random draw comes from one seeded
generator, so identical configs give bitwise-identical models.

Inference freezes both word matrices and optimizes a fresh document
vector, seeded from the token sequence and the model seed so repeated
calls agree.
"""

from __future__ import annotations

import hashlib
import json
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Document
from .errors import CorpusParseError, DegenerateCorpusError, EmptyCorpusError
from .fusion import ScoredList

_MAGIC = b"LEXCASE-EMB\x00"
_MODEL_FORMAT_VERSION = 1
_NOISE_POWER = 0.75

DEFAULT_INFER_STEPS = 50


@dataclass(frozen=True)
class EmbedConfig:
    dim: int = 100
    window: int = 5
    epochs: int = 50
    negatives: int = 5
    lr_start: float = 0.025
    lr_end: float = 0.0001
    seed: int = 1
    min_count: int = 2

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if not self.lr_start >= self.lr_end > 0.0:
            raise ValueError("learning rates must satisfy lr_start >= lr_end > 0")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")


@dataclass
class EmbeddingModel:
    """Trained matrices plus everything needed to sample and infer."""

    config: EmbedConfig
    vocab: dict[str, int]
    counts: np.ndarray
    word_in: np.ndarray
    word_out: np.ndarray
    doc_ids: tuple[str, ...]
    doc_matrix: np.ndarray
    epoch_losses: tuple[float, ...]

    @property
    def doc_vectors(self) -> dict[str, np.ndarray]:
        return {doc_id: self.doc_matrix[i] for i, doc_id in enumerate(self.doc_ids)}

    def doc_vector(self, doc_id: str) -> np.ndarray:
        return self.doc_matrix[self.doc_ids.index(doc_id)]

    def noise_distribution(self) -> np.ndarray:
        weights = self.counts.astype(np.float64) ** _NOISE_POWER
        return weights / weights.sum()


def _sigmoid(x):
    # tanh form stays finite for any input, unlike 1/(1+exp(-x))
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def negative_sampling_step(
    doc_vec: np.ndarray,
    word_in: np.ndarray,
    word_out: np.ndarray,
    context: list[int],
    target: int,
    negatives: np.ndarray,
):
    """Loss and exact gradients for one PV-DM prediction.

    Returns ``(loss, grad_h, grad_out)`` where ``grad_out`` rows align
    with ``[target] + negatives``. The combined input h is the mean of
    the doc vector and the context rows, so each of those contributors
    (the doc vector, and each context occurrence separately) receives
    gradient ``grad_h / (1 + len(context))``.
    """
    if len(context):
        h = (doc_vec + word_in[context].sum(axis=0)) / (1 + len(context))
    else:
        h = doc_vec.copy()
    rows = np.concatenate(([target], negatives))
    out = word_out[rows]
    u = out @ h
    labels = np.zeros(len(rows))
    labels[0] = 1.0
    # -log s(u_pos) = logaddexp(0, -u);  -log s(-u_neg) = logaddexp(0, u)
    loss = np.logaddexp(0.0, -u[0]) + np.logaddexp(0.0, u[1:]).sum()
    g_u = _sigmoid(u) - labels
    grad_h = g_u @ out
    grad_out = np.outer(g_u, h)
    return loss, grad_h, grad_out


def _build_vocab(docs: list[Document], min_count: int):
    counts: dict[str, int] = {}
    for doc in docs:
        for tok in doc.tokens:
            counts[tok] = counts.get(tok, 0) + 1
    kept = [(t, c) for t, c in counts.items() if c >= min_count]
    if not kept:
        raise DegenerateCorpusError(
            f"no token reaches min_count={min_count}; nothing to train on"
        )
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    vocab = {t: i for i, (t, _) in enumerate(kept)}
    return vocab, np.array([c for _, c in kept], dtype=np.int64)


def _draw_negatives(rng, cum_noise, n_positions, negatives):
    u = rng.random((n_positions, negatives))
    return np.searchsorted(cum_noise, u, side="right")


def train(docs: list[Document], cfg: EmbedConfig) -> EmbeddingModel:
    """Fit PV-DM by seeded single-threaded SGD over the documents in order."""
    if not docs:
        raise EmptyCorpusError("cannot train an embedding on zero documents")
    vocab, counts = _build_vocab(docs, cfg.min_count)
    n_docs = len(docs)
    dim = cfg.dim
    rng = np.random.default_rng(cfg.seed)
    scale = 0.5 / dim
    word_in = rng.uniform(-scale, scale, (len(vocab), dim))
    word_out = np.zeros((len(vocab), dim))
    doc_matrix = rng.uniform(-scale, scale, (n_docs, dim))

    streams = [
        np.array([vocab[t] for t in doc.tokens if t in vocab], dtype=np.int64)
        for doc in docs
    ]
    positions_per_pass = sum(len(s) for s in streams)
    total_steps = cfg.epochs * positions_per_pass
    lr_span = cfg.lr_start - cfg.lr_end
    denom = max(1, total_steps - 1)

    noise = counts.astype(np.float64) ** _NOISE_POWER
    cum_noise = np.cumsum(noise / noise.sum())
    cum_noise[-1] = 1.0

    window = cfg.window
    epoch_losses = []
    step = 0
    for _ in range(cfg.epochs):
        negs_all = _draw_negatives(rng, cum_noise, positions_per_pass, cfg.negatives)
        pass_loss = 0.0
        offset = 0
        for d, stream in enumerate(streams):
            dv = doc_matrix[d]
            length = len(stream)
            for t in range(length):
                lo = 0 if t < window else t - window
                context = np.concatenate((stream[lo:t], stream[t + 1 : t + 1 + window]))
                target = stream[t]
                negs = negs_all[offset + t]
                negs = negs[negs != target]
                loss, grad_h, grad_out = negative_sampling_step(
                    dv, word_in, word_out, context, target, negs
                )
                lr = cfg.lr_start - lr_span * (step / denom)
                share = grad_h * (lr / (1 + len(context)))
                dv -= share
                if len(context):
                    np.add.at(word_in, context, -share)
                np.add.at(
                    word_out, np.concatenate(([target], negs)), -lr * grad_out
                )
                pass_loss += loss
                step += 1
            offset += length
        epoch_losses.append(pass_loss / max(1, positions_per_pass))

    model = EmbeddingModel(
        config=cfg,
        vocab=vocab,
        counts=counts,
        word_in=word_in,
        word_out=word_out,
        doc_ids=tuple(doc.id for doc in docs),
        doc_matrix=doc_matrix,
        epoch_losses=tuple(epoch_losses),
    )
    if not (np.isfinite(word_in).all() and np.isfinite(word_out).all() and np.isfinite(doc_matrix).all()):
        raise ArithmeticError("training produced non-finite vectors")
    return model


def _seed_for_tokens(tokens, model_seed: int) -> int:
    digest = hashlib.sha256(
        (" ".join(tokens) + "\x00" + str(model_seed)).encode("utf-8")
    ).digest()
    return int.from_bytes(digest[:8], "little")


def infer(model: EmbeddingModel, tokens, steps: int = DEFAULT_INFER_STEPS) -> np.ndarray:
    """Vector for an unseen token sequence; word matrices stay frozen."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    cfg = model.config
    rng = np.random.default_rng(_seed_for_tokens(tokens, cfg.seed))
    scale = 0.5 / cfg.dim
    dv = rng.uniform(-scale, scale, cfg.dim)
    stream = np.array([model.vocab[t] for t in tokens if t in model.vocab], dtype=np.int64)
    if len(stream) == 0:
        warnings.warn("no in-vocabulary token; returning the seeded initial vector")
        return dv

    noise = model.counts.astype(np.float64) ** _NOISE_POWER
    cum_noise = np.cumsum(noise / noise.sum())
    cum_noise[-1] = 1.0
    length = len(stream)
    total_steps = steps * length
    lr_span = cfg.lr_start - cfg.lr_end
    denom = max(1, total_steps - 1)
    window = cfg.window

    step = 0
    for _ in range(steps):
        negs_all = _draw_negatives(rng, cum_noise, length, cfg.negatives)
        for t in range(length):
            lo = 0 if t < window else t - window
            context = np.concatenate((stream[lo:t], stream[t + 1 : t + 1 + window]))
            target = stream[t]
            negs = negs_all[t]
            negs = negs[negs != target]
            _, grad_h, _ = negative_sampling_step(
                dv, model.word_in, model.word_out, context, target, negs
            )
            lr = cfg.lr_start - lr_span * (step / denom)
            dv -= grad_h * (lr / (1 + len(context)))
            step += 1
    return dv


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def rank_embed(
    model: EmbeddingModel,
    query_tokens,
    candidate_docs: list[Document],
    query_id: str = "",
    steps: int = DEFAULT_INFER_STEPS,
) -> ScoredList:
    """Cosine-rank candidates against the inferred query vector.

    Candidates that were part of training are looked up; anything else is
    inferred on the fly.
    """
    qv = infer(model, query_tokens, steps=steps)
    known = {doc_id: i for i, doc_id in enumerate(model.doc_ids)}
    scores = {}
    for doc in candidate_docs:
        if doc.id in known:
            cv = model.doc_matrix[known[doc.id]]
        else:
            cv = infer(model, doc.tokens, steps=steps)
        scores[doc.id] = _cosine(qv, cv)
    return ScoredList.ranked(query_id, scores)


def save_model(model: EmbeddingModel, path) -> None:
    """Versioned binary dump: magic, JSON header, then raw float64 buffers."""
    header = {
        "format": "lexcase-embedding",
        "version": _MODEL_FORMAT_VERSION,
        "config": {
            "dim": model.config.dim,
            "window": model.config.window,
            "epochs": model.config.epochs,
            "negatives": model.config.negatives,
            "lr_start": model.config.lr_start,
            "lr_end": model.config.lr_end,
            "seed": model.config.seed,
            "min_count": model.config.min_count,
        },
        "terms": sorted(model.vocab, key=model.vocab.__getitem__),
        "counts": model.counts.tolist(),
        "doc_ids": list(model.doc_ids),
        "epoch_losses": list(model.epoch_losses),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for arr in (model.word_in, model.word_out, model.doc_matrix):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path) -> EmbeddingModel:
    raw = Path(path).read_bytes()
    if not raw.startswith(_MAGIC):
        raise CorpusParseError(f"{path}: not a lexcase embedding file")
    offset = len(_MAGIC)
    (header_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    try:
        header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorpusParseError(f"{path}: corrupt embedding header: {exc}") from exc
    offset += header_len
    if header.get("version") != _MODEL_FORMAT_VERSION:
        raise CorpusParseError(
            f"{path}: unsupported embedding version {header.get('version')!r}"
        )
    cfg = EmbedConfig(**header["config"])
    terms = header["terms"]
    doc_ids = tuple(header["doc_ids"])
    n_vocab, n_docs, dim = len(terms), len(doc_ids), cfg.dim
    need = (2 * n_vocab + n_docs) * dim * 8
    if len(raw) - offset != need:
        raise CorpusParseError(f"{path}: embedding payload has the wrong size")

    def take(rows):
        nonlocal offset
        nbytes = rows * dim * 8
        arr = np.frombuffer(raw, dtype="<f8", count=rows * dim, offset=offset)
        offset += nbytes
        return arr.reshape(rows, dim).copy()

    word_in = take(n_vocab)
    word_out = take(n_vocab)
    doc_matrix = take(n_docs)
    return EmbeddingModel(
        config=cfg,
        vocab={t: i for i, t in enumerate(terms)},
        counts=np.array(header["counts"], dtype=np.int64),
        word_in=word_in,
        word_out=word_out,
        doc_ids=doc_ids,
        doc_matrix=doc_matrix,
        epoch_losses=tuple(float(x) for x in header["epoch_losses"]),
    )
