"""Slot templates for the agreement structures and the baselines.

Slot codes: ``DET``/``COMP``/``ADP`` are function words; ``SUBJ`` and
``ATTR`` are nouns numbered by the subject and the attractor (``:gen``,
``:dat`` and ``:rel`` select case forms); ``RCVERB`` is a verb agreeing with
the attractor; ``VERB`` is the masked verb slot. Any other code is a literal
token. Every sentence starts with ``<bos>``, added at realisation time.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import DataError

AGREEMENT = ("simple", "across_pp", "across_rc")
BASELINES = ("bigram_swap", "semantic_short", "semantic_long")
STRUCTURES = AGREEMENT + BASELINES


@dataclass(frozen=True)
class StructureTemplate:
    structure: str
    language: str
    slots: tuple[str, ...]
    range_class: str

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise DataError(f"unknown structure {self.structure!r}")
        if self.structure in AGREEMENT:
            heads = [s.split(":")[0] for s in self.slots]
            if heads.count("SUBJ") != 1 or heads.count("VERB") != 1:
                raise DataError(f"{self.language} {self.structure}: need exactly one SUBJ and one VERB slot")
            if ("ATTR" in heads) != self.structure.startswith("across_"):
                raise DataError(f"{self.language} {self.structure}: attractor slot mismatch")

    @property
    def has_attractor(self) -> bool:
        return any(s.startswith("ATTR") for s in self.slots)


_AGREEMENT_SLOTS = {
    "en": {
        "simple": "DET SUBJ VERB .",
        "across_pp": "DET SUBJ ADP DET ATTR VERB .",
        "across_rc": "DET SUBJ COMP DET ATTR RCVERB VERB .",
    },
    "fr": {
        "simple": "SUBJ VERB .",
        "across_pp": "SUBJ ADP ATTR VERB .",
        "across_rc": "SUBJ COMP ATTR RCVERB VERB .",
    },
    "de": {
        "simple": "DET SUBJ VERB .",
        "across_pp": "DET SUBJ ADP ATTR:dat VERB .",
        "across_rc": "DET SUBJ COMP DET ATTR RCVERB VERB .",
    },
    "nl": {
        "simple": "DET SUBJ VERB .",
        "across_pp": "DET SUBJ ADP DET ATTR VERB .",
        "across_rc": "DET SUBJ COMP DET ATTR RCVERB VERB .",
    },
    "fi": {
        "simple": "SUBJ VERB .",
        "across_pp": "SUBJ ATTR:gen ADP VERB .",
        "across_rc": "SUBJ:rel ATTR RCVERB VERB .",
    },
}

_BASELINE_SLOTS = {
    "bigram_swap": "DET W1 W2 .",
    "semantic_short": "DET W1 W2 .",
    "semantic_long": "DET NOUN COP ADJ .",
}


def get_template(language: str, structure: str) -> StructureTemplate:
    if structure in BASELINES:
        if language != "en":
            raise DataError("baselines are defined for English only")
        return StructureTemplate(structure, language, tuple(_BASELINE_SLOTS[structure].split()), "baseline")
    try:
        slots = _AGREEMENT_SLOTS[language][structure]
    except KeyError:
        raise DataError(f"no template for {language} {structure}") from None
    return StructureTemplate(structure, language, tuple(slots.split()), "short" if structure == "simple" else "long")
