"""Yes/No entailment over statute/query pairs.

Each pair is reduced to five lexical-similarity features:

* ``bm25_t2_given_t1``: BM25 of the conclusion (t2) as query against the
  premise (t1) as document, using idf/avgdl statistics from an article
  collection;
* ``tfidf_cosine``: cosine of the pair's tf-idf vectors under the
  article-fitted idf table;
* ``token_overlap_jaccard``: Jaccard overlap of the token sets;
* ``len_ratio``: |t2| / |t1| in tokens, clamped to [1/16, 16];
* ``negation_mismatch``: 1 when exactly one side contains a word from
  the bundled negation list.

Similarity features use stage-2 (stemmed, stopped) tokens; negation is
detected on the raw token stream because the negation words are
themselves stopwords. A linear classifier over standardized features is
trained with seeded SGD. Externally computed per-pair vectors can be
substituted through a JSON-lines feature file and trained with the same
machinery.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bm25, tfidf
from .corpus import EntailPair
from .errors import CorpusParseError, DegenerateLabelsError, DuplicateIdError
from .textprep import PrepConfig, Stage, load_negation_words, preprocess_text, tokenize

FEATURE_NAMES = (
    "bm25_t2_given_t1",
    "tfidf_cosine",
    "token_overlap_jaccard",
    "len_ratio",
    "negation_mismatch",
)

_LEN_RATIO_CAP = 16.0
_MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PairFeatures:
    bm25_t2_given_t1: float
    tfidf_cosine: float
    token_overlap_jaccard: float
    len_ratio: float
    negation_mismatch: float
    degenerate: bool = False

    def as_vector(self) -> tuple[float, ...]:
        return (
            self.bm25_t2_given_t1,
            self.tfidf_cosine,
            self.token_overlap_jaccard,
            self.len_ratio,
            self.negation_mismatch,
        )


def featurize(
    pair: EntailPair,
    article_index: bm25.InvertedIndex,
    article_tfidf: tfidf.TfidfModel,
    params: bm25.Bm25Params = bm25.Bm25Params(),
) -> PairFeatures:
    """Features for one pair against article-collection statistics."""
    stage2 = PrepConfig(stage=Stage.STAGE2)
    t1 = preprocess_text(pair.t1.text, stage2)
    t2 = preprocess_text(pair.t2.text, stage2)
    raw1 = tokenize(pair.t1.text)
    raw2 = tokenize(pair.t2.text)
    negation = load_negation_words()
    mismatch = bool(set(raw1) & negation) != bool(set(raw2) & negation)

    degenerate = not t1 or not t2
    if degenerate:
        score = cos = jac = ratio = 0.0
    else:
        score = bm25.score_tokens(article_index, params, t2, t1)
        cos = tfidf.cosine(
            tfidf.transform(article_tfidf, t1), tfidf.transform(article_tfidf, t2)
        )
        s1, s2 = set(t1), set(t2)
        jac = len(s1 & s2) / len(s1 | s2)
        ratio = min(_LEN_RATIO_CAP, max(1.0 / _LEN_RATIO_CAP, len(t2) / len(t1)))
    return PairFeatures(
        bm25_t2_given_t1=score,
        tfidf_cosine=cos,
        token_overlap_jaccard=jac,
        len_ratio=ratio,
        negation_mismatch=1.0 if mismatch else 0.0,
        degenerate=degenerate,
    )


def featurize_pairs(pairs, article_index, article_tfidf) -> list[PairFeatures]:
    return [featurize(p, article_index, article_tfidf) for p in pairs]


@dataclass(frozen=True)
class LinearModel:
    """Logistic classifier over standardized features.

    Zero-variance features are recorded in ``dropped``; their weight is
    pinned at 0 and their std stored as 1 so the scoring formula stays
    uniform across all features.
    """

    feature_names: tuple[str, ...]
    weights: tuple[float, ...]
    bias: float
    means: tuple[float, ...]
    stds: tuple[float, ...]
    dropped: tuple[str, ...]
    seed: int
    epoch_losses: tuple[float, ...]

    def __post_init__(self):
        if any(s <= 0 for s in self.stds):
            raise ValueError("standardization constants must be positive")

    def decision(self, vector) -> float:
        x = np.asarray(vector, dtype=np.float64)
        if x.shape != (len(self.feature_names),):
            raise ValueError(
                f"expected {len(self.feature_names)} features, got {x.shape}"
            )
        z = (x - np.array(self.means)) / np.array(self.stds)
        return float(z @ np.array(self.weights) + self.bias)


def _sigmoid(z: float) -> float:
    return 0.5 * (1.0 + math.tanh(0.5 * z))


def predict(model: LinearModel, vector) -> tuple[bool, float]:
    """(label, probability); the decision boundary is strict p > 0.5."""
    p = _sigmoid(model.decision(vector))
    return p > 0.5, p


def train_classifier(
    features,
    labels,
    epochs: int = 200,
    lr: float = 0.1,
    seed: int = 0,
    feature_names: tuple[str, ...] = FEATURE_NAMES,
    full_batch: bool = False,
) -> LinearModel:
    """Seeded SGD on the logistic loss; weights start at zero.

    ``full_batch`` switches to deterministic gradient descent over the
    whole set each epoch (no shuffling), which makes the per-epoch loss
    provably non-increasing for small enough lr.
    """
    X = np.asarray(
        [f.as_vector() if isinstance(f, PairFeatures) else f for f in features],
        dtype=np.float64,
    )
    y = np.asarray([1.0 if l else 0.0 for l in labels], dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("features and labels must align, one vector per pair")
    if X.shape[1] != len(feature_names):
        raise ValueError("feature vectors do not match the declared names")
    if len(y) < 2 or len(set(y.tolist())) < 2:
        raise DegenerateLabelsError(
            "training needs at least two pairs covering both labels"
        )

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    dropped = tuple(feature_names[j] for j in range(X.shape[1]) if stds[j] == 0.0)
    stds = np.where(stds == 0.0, 1.0, stds)
    Z = (X - means) / stds

    rng = np.random.default_rng(seed)
    w = np.zeros(X.shape[1])
    b = 0.0
    losses = []
    for _ in range(epochs):
        if full_batch:
            z = Z @ w + b
            g = 0.5 * (1.0 + np.tanh(0.5 * z)) - y
            w -= lr * (g @ Z) / len(y)
            b -= lr * g.mean()
        else:
            for i in rng.permutation(len(y)):
                g = _sigmoid(float(Z[i] @ w + b)) - y[i]
                w -= lr * g * Z[i]
                b -= lr * g
        z = Z @ w + b
        losses.append(float(np.mean(np.logaddexp(0.0, z) - y * z)))
    return LinearModel(
        feature_names=tuple(feature_names),
        weights=tuple(float(v) for v in w),
        bias=float(b),
        means=tuple(float(v) for v in means),
        stds=tuple(float(v) for v in stds),
        dropped=dropped,
        seed=seed,
        epoch_losses=tuple(losses),
    )


def train_eval_split(items, seed: int, held_out_frac: float = 0.2):
    """Seeded shuffle split; returns (train, held_out)."""
    order = np.random.default_rng(seed).permutation(len(items))
    cut = int(round(len(items) * held_out_frac))
    held = [items[i] for i in order[:cut]]
    kept = [items[i] for i in order[cut:]]
    return kept, held


def load_feature_file(path) -> dict[str, list[float]]:
    """JSON-lines ``{"id":..., "values":[...]}`` per pair; ragged rows rejected."""
    vectors: dict[str, list[float]] = {}
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(f"{path}:{lineno}: bad JSON: {exc}") from exc
            if not isinstance(row, dict) or "id" not in row or "values" not in row:
                raise CorpusParseError(
                    f"{path}:{lineno}: each line needs 'id' and 'values'"
                )
            pid = str(row["id"])
            if pid in vectors:
                raise DuplicateIdError(f"{path}:{lineno}: duplicate pair id {pid!r}")
            values = [float(v) for v in row["values"]]
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise CorpusParseError(
                    f"{path}:{lineno}: expected {width} values, got {len(values)}"
                )
            vectors[pid] = values
    return vectors


def save_entail_model(
    path,
    classifier: LinearModel,
    article_index: bm25.InvertedIndex | None = None,
    article_tfidf: tfidf.TfidfModel | None = None,
) -> None:
    """Self-contained JSON model: classifier plus the collection statistics
    featurize needs (document-frequency table, avgdl, idf), so prediction
    does not require the article corpus again."""
    payload = {
        "format": "lexcase-entail-model",
        "version": _MODEL_FORMAT_VERSION,
        "classifier": {
            "feature_names": list(classifier.feature_names),
            "weights": list(classifier.weights),
            "bias": classifier.bias,
            "means": list(classifier.means),
            "stds": list(classifier.stds),
            "dropped": list(classifier.dropped),
            "seed": classifier.seed,
            "epoch_losses": list(classifier.epoch_losses),
        },
    }
    if article_index is not None:
        payload["bm25_stats"] = {
            "df": article_index.df,
            "n_docs": article_index.n_docs,
            "avgdl": article_index.avgdl,
        }
    if article_tfidf is not None:
        payload["tfidf_stats"] = {
            "idf": article_tfidf.idf,
            "n_docs": article_tfidf.n_docs,
        }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_entail_model(path):
    """Returns (classifier, article_index | None, article_tfidf | None)."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusParseError(f"{path}: not a valid entail model: {exc}") from exc
    if payload.get("format") != "lexcase-entail-model":
        raise CorpusParseError(f"{path}: not a lexcase entail model file")
    if payload.get("version") != _MODEL_FORMAT_VERSION:
        raise CorpusParseError(
            f"{path}: unsupported model version {payload.get('version')!r}"
        )
    c = payload["classifier"]
    classifier = LinearModel(
        feature_names=tuple(c["feature_names"]),
        weights=tuple(float(v) for v in c["weights"]),
        bias=float(c["bias"]),
        means=tuple(float(v) for v in c["means"]),
        stds=tuple(float(v) for v in c["stds"]),
        dropped=tuple(c["dropped"]),
        seed=int(c["seed"]),
        epoch_losses=tuple(float(v) for v in c["epoch_losses"]),
    )
    index = None
    if "bm25_stats" in payload:
        stats = payload["bm25_stats"]
        index = bm25.InvertedIndex(
            postings={},
            doc_len={},
            n_docs=int(stats["n_docs"]),
            avgdl=float(stats["avgdl"]),
            df={t: int(v) for t, v in stats["df"].items()},
        )
    model = None
    if "tfidf_stats" in payload:
        stats = payload["tfidf_stats"]
        model = tfidf.TfidfModel(
            idf={t: float(v) for t, v in stats["idf"].items()},
            doc_vectors={},
            n_docs=int(stats["n_docs"]),
        )
    return classifier, index, model
