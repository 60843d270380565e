"""Two-stage text preprocessing.

Stage 1 is minimal: paragraph-number markers are stripped and the text is
tokenized. Stage 2 additionally removes short tokens, purely numeric
tokens and stopwords, then stems what remains with a bundled
suffix-stripping rule table (a Porter-style cascade, loaded from
``stemmer_rules.tsv``).

The stage-2 filters run once before stemming and once after, and the
stemmer iterates its cascade to a fixed point, so preprocessing an
already-preprocessed stream returns it unchanged.

The stopword list, rule table and negation list live in the package's
``data/`` directory; set ``LEXCASE_DATA_DIR`` to point at an alternative
directory with the same file names.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .corpus import Document

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_PARA_MARKER_RE = re.compile(r"(?m)^(?:\[\d+\]|\(\d+\)|\d+\.)[ \t]*")

_VOWELS = frozenset("aeiou")
_MAX_STEM_PASSES = 8


def data_dir() -> Path:
    """Directory holding stopwords.txt, stemmer_rules.tsv and negation.txt."""
    override = os.environ.get("LEXCASE_DATA_DIR")
    if override:
        return Path(override)
    return Path(resources.files("lexcase") / "data")


@lru_cache(maxsize=None)
def load_stopwords(path: str | None = None) -> frozenset[str]:
    p = Path(path) if path else data_dir() / "stopwords.txt"
    words = [w.strip() for w in p.read_text(encoding="utf-8").splitlines()]
    return frozenset(w for w in words if w)


@lru_cache(maxsize=None)
def load_negation_words(path: str | None = None) -> frozenset[str]:
    p = Path(path) if path else data_dir() / "negation.txt"
    words = [w.strip() for w in p.read_text(encoding="utf-8").splitlines()]
    return frozenset(w for w in words if w)


class Stage(Enum):
    STAGE1 = "stage1"
    STAGE2 = "stage2"


@dataclass(frozen=True)
class PrepConfig:
    stage: Stage
    stopwords: frozenset[str] = field(default_factory=load_stopwords)
    min_token_len: int = 3

    def __post_init__(self):
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")
        bad = [w for w in self.stopwords if w != w.lower()]
        if bad:
            raise ValueError(f"stopwords must be lowercase, got {sorted(bad)[:5]}")


def tokenize(text: str) -> list[str]:
    """Lowercased maximal alphanumeric runs; everything else separates."""
    return _TOKEN_RE.findall(text.lower())


def strip_paragraph_numbers(text: str) -> str:
    """Drop line-leading ``[N]``, ``N.`` or ``(N)`` markers and the
    whitespace after them; markers inside a line are kept."""
    return _PARA_MARKER_RE.sub("", text)


def preprocess_text(text: str, cfg: PrepConfig) -> list[str]:
    tokens = tokenize(strip_paragraph_numbers(text))
    if cfg.stage is Stage.STAGE2:
        stemmer = default_stemmer()
        tokens = _filter_tokens(tokens, cfg)
        tokens = [stemmer.stem(t) for t in tokens]
        # stems can fall below the length floor or collide with a stopword
        # ("cans" -> "can"); filtering again keeps the stream closed under
        # repeated preprocessing
        tokens = _filter_tokens(tokens, cfg)
    return tokens


def preprocess(doc: Document, cfg: PrepConfig) -> Document:
    """Return a copy of ``doc`` with its token stream filled in."""
    return doc.with_tokens(preprocess_text(doc.text, cfg))


def preprocess_all(docs, cfg: PrepConfig) -> list[Document]:
    return [preprocess(d, cfg) for d in docs]


def _filter_tokens(tokens, cfg: PrepConfig) -> list[str]:
    return [
        t
        for t in tokens
        if len(t) >= cfg.min_token_len
        and not t.isdigit()
        and t not in cfg.stopwords
    ]


# ---------------------------------------------------------------------------
# Suffix-stripping stemmer


@dataclass(frozen=True)
class _Rule:
    suffix: str
    replacement: str
    condition: str


class Stemmer:
    """Rule-table suffix stripper.

    The table drives the plain suffix rewrites; the contextual tidying
    (restoring a trailing ``e`` after ``ed``/``ing`` removal, undoubling
    consonants, the ``y``/``i`` swap and final-``e`` handling) is fixed
    behaviour of the cascade. ``stem`` applies the cascade until the word
    stops changing, which makes it idempotent: ``stem(stem(w)) == stem(w)``.
    """

    _STEP_ORDER = ("1a", "1b", "2", "3", "4")

    def __init__(self, rules_by_step: dict[str, list[_Rule]]):
        self._steps = {
            step: sorted(rules, key=lambda r: -len(r.suffix))
            for step, rules in rules_by_step.items()
        }

    @classmethod
    def from_table(cls, path) -> "Stemmer":
        rules: dict[str, list[_Rule]] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields")
            step, suffix, replacement, condition = parts
            if step not in cls._STEP_ORDER:
                raise ValueError(f"{path}:{lineno}: unknown step {step!r}")
            rules.setdefault(step, []).append(_Rule(suffix, replacement, condition))
        return cls(rules)

    def stem(self, word: str) -> str:
        for _ in range(_MAX_STEM_PASSES):
            out = self._cascade(word)
            if out == word:
                return out
            word = out
        return word

    def _cascade(self, word: str) -> str:
        if len(word) <= 2:
            return word
        word = self._apply_step("1a", word)
        word = self._step_1b(word)
        word = self._step_1c(word)
        word = self._apply_step("2", word)
        word = self._apply_step("3", word)
        word = self._apply_step("4", word)
        word = self._step_5a(word)
        word = self._step_5b(word)
        return word

    def _apply_step(self, step: str, word: str) -> str:
        for rule in self._steps.get(step, ()):
            if word.endswith(rule.suffix):
                stem = word[: len(word) - len(rule.suffix)]
                if self._condition_holds(rule.condition, stem):
                    return stem + rule.replacement
                return word  # longest match claims the step even on failure
        return word

    def _step_1b(self, word: str) -> str:
        for rule in self._steps.get("1b", ()):
            if word.endswith(rule.suffix):
                stem = word[: len(word) - len(rule.suffix)]
                if not self._condition_holds(rule.condition, stem):
                    return word
                out = stem + rule.replacement
                if rule.suffix in ("ed", "ing"):
                    out = self._tidy_after_1b(out)
                return out
        return word

    def _tidy_after_1b(self, word: str) -> str:
        if word.endswith(("at", "bl", "iz")):
            return word + "e"
        if (
            _ends_double_consonant(word)
            and word[-1] not in "lsz"
        ):
            return word[:-1]
        if _measure(word) == 1 and _ends_cvc(word):
            return word + "e"
        return word

    def _step_1c(self, word: str) -> str:
        if word.endswith("y") and _has_vowel(word[:-1]):
            return word[:-1] + "i"
        return word

    def _step_5a(self, word: str) -> str:
        if not word.endswith("e"):
            return word
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            return stem
        return word

    def _step_5b(self, word: str) -> str:
        if word.endswith("l") and _ends_double_consonant(word) and _measure(word) > 1:
            return word[:-1]
        return word

    @staticmethod
    def _condition_holds(condition: str, stem: str) -> bool:
        if condition == "-":
            return True
        if condition == "m>0":
            return _measure(stem) > 0
        if condition == "m>1":
            return _measure(stem) > 1
        if condition == "*v*":
            return _has_vowel(stem)
        if condition == "m>1&ends(st)":
            return _measure(stem) > 1 and stem.endswith(("s", "t"))
        raise ValueError(f"unknown rule condition {condition!r}")


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel-to-consonant transitions in [C](VC)^m[V] form."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        if _is_consonant(stem, i):
            if prev_vowel:
                m += 1
            prev_vowel = False
        else:
            prev_vowel = True
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(stem: str) -> bool:
    if len(stem) < 3:
        return False
    return (
        _is_consonant(stem, len(stem) - 3)
        and not _is_consonant(stem, len(stem) - 2)
        and _is_consonant(stem, len(stem) - 1)
        and stem[-1] not in "wxy"
    )


@lru_cache(maxsize=None)
def default_stemmer(path: str | None = None) -> Stemmer:
    p = Path(path) if path else data_dir() / "stemmer_rules.tsv"
    return Stemmer.from_table(p)
