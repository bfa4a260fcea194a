"""Lexicon files and the train/probe split.

A lexicon file is UTF-8 text with tab-separated columns
``language pos lemma sg_form pl_form tags``; ``#`` starts a comment line.
``tags`` is ``-`` or a ``;``-separated list of ``key`` / ``key=value`` items:

``short``            entry belongs to the short-word list
``short=<lemma>``    short-word counterpart of an original noun or verb
``baseline``         noun used only by the bigram / plausibility baselines
``bigram=<noun>``    adjective forming a high-association bigram with ``noun``
``semantic=<noun>``  adjective stereotypically associated with ``noun``
``gen_sg`` ...       case forms (``gen``, ``dat``, ``rel``) for templates
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import DataError

LANGUAGES = ("en", "fr", "de", "nl", "fi")
POS = ("noun", "verb", "adjective", "determiner", "preposition", "postposition", "complementizer", "filler")
SPLIT_POS = ("noun", "verb")


@dataclass(frozen=True)
class LexiconEntry:
    language: str
    pos: str
    lemma: str
    sg_form: str
    pl_form: str
    tags: dict = field(default_factory=dict, hash=False, compare=False)

    def form(self, number: str, case: str | None = None) -> str:
        if case:
            key = f"{case}_{number}"
            if key not in self.tags:
                raise DataError(f"{self.language} {self.pos} {self.lemma!r} has no {key} form")
            return self.tags[key]
        return self.sg_form if number == "sg" else self.pl_form

    def forms(self) -> dict[str, str]:
        """Every surface form mapped to its number (``sg``/``pl``)."""
        out = {self.sg_form: "sg", self.pl_form: "pl"}
        for key, value in self.tags.items():
            if value and key.endswith(("_sg", "_pl")):
                out[value] = key[-2:]
        return out

    @property
    def is_short(self) -> bool:
        return "short" in self.tags and self.tags["short"] is None

    @property
    def is_baseline(self) -> bool:
        return "baseline" in self.tags or "bigram" in self.tags or "semantic" in self.tags


def _parse_tags(text: str) -> dict:
    if text in ("", "-"):
        return {}
    tags = {}
    for item in text.split(";"):
        key, sep, value = item.partition("=")
        tags[key.strip()] = value.strip() if sep else None
    return tags


class Lexicon:
    """An ordered collection of entries with lookup helpers."""

    def __init__(self, entries):
        self.entries = tuple(entries)
        for e in self.entries:
            if e.pos not in POS:
                raise DataError(f"unknown part of speech {e.pos!r} for {e.lemma!r}")
            if e.pos in SPLIT_POS and e.sg_form == e.pl_form:
                raise DataError(f"{e.language} {e.pos} {e.lemma!r}: singular and plural forms coincide")
        self._by_lemma = {(e.language, e.pos, e.lemma): e for e in self.entries}

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @classmethod
    def load(cls, path) -> "Lexicon":
        entries = []
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 6:
                raise DataError(f"{path}:{lineno}: expected 6 tab-separated columns, got {len(cols)}")
            lang, pos, lemma, sg, pl, tags = (c.strip() for c in cols)
            entries.append(LexiconEntry(lang, pos, lemma, sg, pl, _parse_tags(tags)))
        return cls(entries)

    @classmethod
    def builtin(cls, languages=LANGUAGES) -> "Lexicon":
        entries = []
        for lang in languages:
            if lang not in LANGUAGES:
                raise DataError(f"no built-in lexicon for language {lang!r}")
            with resources.as_file(resources.files("agsc.stimuli") / "data" / f"{lang}.tsv") as p:
                entries.extend(cls.load(p).entries)
        return cls(entries)

    @staticmethod
    def builtin_paths(languages=LANGUAGES) -> list[Path]:
        return [Path(str(resources.files("agsc.stimuli") / "data" / f"{lang}.tsv")) for lang in languages]

    def select(self, language: str, pos: str | None = None, *, short: bool | None = None, baseline: bool | None = False):
        out = []
        for e in self.entries:
            if e.language != language or (pos is not None and e.pos != pos):
                continue
            if short is not None and e.is_short != short:
                continue
            if baseline is not None and e.is_baseline != baseline:
                continue
            out.append(e)
        return out

    def lookup(self, language: str, pos: str, lemma: str) -> LexiconEntry:
        try:
            return self._by_lemma[(language, pos, lemma)]
        except KeyError:
            raise DataError(f"no {language} {pos} with lemma {lemma!r}") from None

    def counterpart(self, entry: LexiconEntry) -> LexiconEntry:
        """Short-word counterpart of an original noun or verb."""
        target = entry.tags.get("short")
        if entry.is_short:
            return entry
        if not target:
            raise DataError(f"{entry.language} {entry.pos} {entry.lemma!r} has no short-word counterpart")
        return self.lookup(entry.language, entry.pos, target)

    def function_word(self, language: str, pos: str) -> str:
        found = self.select(language, pos)
        if not found:
            raise DataError(f"{language} lexicon has no {pos}")
        return found[0].sg_form

    def languages(self) -> list[str]:
        return sorted({e.language for e in self.entries}, key=lambda l: (LANGUAGES + (l,)).index(l))

    def split(self, seed: int, train_fraction: float = 0.7) -> tuple["Lexicon", "Lexicon"]:
        """Seeded train/probe split over original nouns and verbs.

        Short-word and baseline entries go to the training side only. The probe
        side holds the held-out original nouns and verbs; function words are
        shared by both sides.
        """
        probe = []
        for lang in self.languages():
            for pos in SPLIT_POS:
                pool = sorted(self.select(lang, pos, short=False), key=lambda e: e.lemma)
                rng = np.random.default_rng(np.random.SeedSequence([seed, LANGUAGES.index(lang) if lang in LANGUAGES else 99, SPLIT_POS.index(pos)]))
                order = rng.permutation(len(pool))
                cut = int(round(train_fraction * len(pool)))
                keep = set(order[:cut].tolist())
                probe += [e for i, e in enumerate(pool) if i not in keep]
        held = {id(e) for e in probe}
        train = [e for e in self.entries if id(e) not in held]
        shared = [e for e in self.entries if e.pos not in ("noun", "verb", "adjective")]
        return Lexicon(train), Lexicon(probe + shared)

    def content_forms(self) -> dict[str, tuple[str, str]]:
        """Surface form -> (number, word class) for every noun, verb and adjective."""
        cls_of = {"noun": "noun", "verb": "verb", "adjective": "adjective"}
        out: dict[str, tuple[str, str]] = {}
        for e in self.entries:
            if e.pos in cls_of:
                for form, num in e.forms().items():
                    feat = ("none", "adjective") if e.pos == "adjective" else (num, cls_of[e.pos])
                    out[form] = feat
            else:
                for form in {e.sg_form, e.pl_form}:
                    out.setdefault(form, ("none", "function"))
        return out
