"""Closed word-level vocabulary with per-token morphological features."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BOS = "<bos>"
MASK = "[MASK]"
STOP = "."
SPECIALS = (BOS, MASK, STOP)

NUMBERS = ("none", "sg", "pl")
WORD_CLASSES = ("special", "function", "noun", "verb", "adjective")


class VocabularyError(KeyError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    """Token strings plus the grammatical number and word class of each token.

    Features feed shared embedding rows, so a word never seen in training
    still carries its number marking into the model.
    """

    tokens: tuple[str, ...]
    number: tuple[int, ...]
    word_class: tuple[int, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (len(self.tokens) == len(self.number) == len(self.word_class)):
            raise ValueError("tokens and feature columns differ in length")
        index = {t: i for i, t in enumerate(self.tokens)}
        if len(index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise VocabularyError(f"token {token!r} not in vocabulary") from None

    def ids(self, tokens) -> np.ndarray:
        return np.array([self.id(t) for t in tokens], dtype=np.int64)

    @property
    def number_array(self) -> np.ndarray:
        return np.asarray(self.number, dtype=np.int64)

    @property
    def class_array(self) -> np.ndarray:
        return np.asarray(self.word_class, dtype=np.int64)

    @classmethod
    def from_features(cls, features: dict[str, tuple[str, str]]) -> "Vocabulary":
        """Build from ``{token: (number, word_class)}``; specials first, the rest sorted."""
        merged = {t: ("none", "special") for t in SPECIALS}
        for tok, feat in features.items():
            if tok in merged and merged[tok] != feat:
                raise ValueError(f"token {tok!r} has conflicting features {merged[tok]} / {feat}")
            merged[tok] = feat
        order = list(SPECIALS) + sorted(t for t in merged if t not in SPECIALS)
        return cls(
            tokens=tuple(order),
            number=tuple(NUMBERS.index(merged[t][0]) for t in order),
            word_class=tuple(WORD_CLASSES.index(merged[t][1]) for t in order),
        )

    @classmethod
    def synthetic(cls, size: int) -> "Vocabulary":
        """Featureless vocabulary ``t0..t{size-1}`` used by tests and kernels checks."""
        return cls(tuple(f"t{i}" for i in range(size)), (0,) * size, (0,) * size)

    def to_json(self) -> dict:
        return {"tokens": list(self.tokens), "number": list(self.number), "word_class": list(self.word_class)}

    @classmethod
    def from_json(cls, data: dict) -> "Vocabulary":
        return cls(tuple(data["tokens"]), tuple(data["number"]), tuple(data["word_class"]))
