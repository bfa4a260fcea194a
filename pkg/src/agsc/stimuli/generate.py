"""Counterfactual stimuli, baseline pairs and training corpora."""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..vocab import BOS, MASK, Vocabulary
from .lexicon import Lexicon, LexiconEntry
from .templates import AGREEMENT, StructureTemplate, get_template

OTHER = {"sg": "pl", "pl": "sg"}
VARIANTS = ("original", "short")


@dataclass(frozen=True)
class Stimulus:
    """A prompt and its number-swapped counterpart.

    ``tokens_null`` holds ``[MASK]`` at ``verb_slot``. ``v_match`` agrees with
    the subject of ``tokens_null``; ``v_mismatch`` is the competing form.
    For baselines the same fields carry the bigram/adjective analogues.
    """

    id: str
    language: str
    structure: str
    tokens_null: tuple[str, ...]
    tokens_swap: tuple[str, ...]
    subject_position: int
    attractor_number: str | None
    verb_slot: int
    v_match: str
    v_mismatch: str
    word_variant: str = "original"
    subject_number: str | None = None

    def validate(self) -> None:
        if len(self.tokens_null) != len(self.tokens_swap):
            raise DataError(f"{self.id}: null and swap prompts differ in length")
        diff = [i for i, (a, b) in enumerate(zip(self.tokens_null, self.tokens_swap)) if a != b]
        if diff != [self.subject_position]:
            raise DataError(f"{self.id}: prompts differ at {diff}, expected [{self.subject_position}]")
        if self.v_match == self.v_mismatch:
            raise DataError(f"{self.id}: verb forms coincide")
        if self.tokens_null[self.verb_slot] != MASK:
            raise DataError(f"{self.id}: no mask token at verb slot {self.verb_slot}")

    def flipped(self) -> "Stimulus":
        """The same item seen from the swapped prompt."""
        return replace(
            self,
            tokens_null=self.tokens_swap,
            tokens_swap=self.tokens_null,
            v_match=self.v_mismatch,
            v_mismatch=self.v_match,
            subject_number=OTHER.get(self.subject_number) if self.subject_number else None,
        )

    def to_json(self) -> dict:
        d = asdict(self)
        d["tokens_null"] = list(self.tokens_null)
        d["tokens_swap"] = list(self.tokens_swap)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Stimulus":
        return cls(**{**d, "tokens_null": tuple(d["tokens_null"]), "tokens_swap": tuple(d["tokens_swap"])})


def swap_number(stimulus: Stimulus) -> tuple[str, ...]:
    """The prompt with the subject's grammatical number flipped."""
    return stimulus.tokens_swap


def build_vocabulary(lexicon: Lexicon) -> Vocabulary:
    return Vocabulary.from_features(lexicon.content_forms())


def write_jsonl(stimuli, path) -> Path:
    path = Path(path)
    lines = [json.dumps(s.to_json(), ensure_ascii=False, sort_keys=True) for s in stimuli]
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def read_jsonl(path) -> list[Stimulus]:
    text = Path(path).read_text(encoding="utf-8")
    return [Stimulus.from_json(json.loads(line)) for line in text.splitlines() if line.strip()]


# ---------------------------------------------------------------- realisation


def _adpositions(lexicon: Lexicon, language: str) -> list[str]:
    return [e.sg_form for e in lexicon.select(language, "preposition") + lexicon.select(language, "postposition")]


def _realise(template: StructureTemplate, lexicon: Lexicon, subj: LexiconEntry, subj_num: str, verb_token: str,
             adp: str | None = None, attr: LexiconEntry | None = None, attr_num: str | None = None,
             rcverb: LexiconEntry | None = None):
    """Token list for one sentence plus the subject and verb positions."""
    lang = template.language
    tokens = [BOS]
    subject_position = verb_slot = -1
    for slot in template.slots:
        head, _, case = slot.partition(":")
        if head == "DET":
            tokens.append(lexicon.function_word(lang, "determiner"))
        elif head == "COMP":
            tokens.append(lexicon.function_word(lang, "complementizer"))
        elif head == "ADP":
            tokens.append(adp)
        elif head == "SUBJ":
            subject_position = len(tokens)
            tokens.append(subj.form(subj_num, case or None))
        elif head == "ATTR":
            tokens.append(attr.form(attr_num, case or None))
        elif head == "RCVERB":
            tokens.append(rcverb.form(attr_num))
        elif head == "VERB":
            verb_slot = len(tokens)
            tokens.append(verb_token)
        else:
            tokens.append(slot)
    return tokens, subject_position, verb_slot


def _content(lexicon: Lexicon, language: str, pos: str, word_variant: str) -> list[LexiconEntry]:
    return lexicon.select(language, pos, short=(word_variant == "short"))


def _cells(has_attractor: bool) -> list[tuple[str, str | None]]:
    # Ordered so that any prefix of the list is as balanced as possible.
    if has_attractor:
        return [("sg", "sg"), ("pl", "pl"), ("sg", "pl"), ("pl", "sg")]
    return [("sg", None), ("pl", None)]


def generate_agreement_stimuli(template: StructureTemplate, lexicon: Lexicon, max_n: int = 200,
                               rng: np.random.Generator | None = None, word_variant: str = "original") -> list[Stimulus]:
    """Sample up to ``max_n`` stimuli without replacement from the template's cross-product.

    Subject numbers are balanced, and for attractor structures the attractor
    number is balanced within each subject number. When the cross-product is
    smaller than ``max_n`` every combination is returned.
    """
    if template.structure not in AGREEMENT:
        raise DataError(f"{template.structure} is not an agreement structure")
    if word_variant not in VARIANTS:
        raise DataError(f"unknown word variant {word_variant!r}")
    rng = rng if rng is not None else np.random.default_rng(0)
    lang = template.language
    nouns = _content(lexicon, lang, "noun", word_variant)
    verbs = _content(lexicon, lang, "verb", word_variant)
    heads = [s.split(":")[0] for s in template.slots]
    if not nouns or not verbs:
        raise DataError(f"{lang} lexicon lacks nouns or verbs for {template.structure}")
    axes = [nouns, verbs]
    if "ADP" in heads:
        adps = _adpositions(lexicon, lang)
        if not adps:
            raise DataError(f"{lang} lexicon has no adpositions")
        axes.append(adps)
    if template.has_attractor:
        axes.append(nouns)
    if "RCVERB" in heads:
        axes.append(verbs)

    def valid(combo):
        if template.has_attractor and combo[0] is combo[-2 if "RCVERB" in heads else -1]:
            return False
        if "RCVERB" in heads and combo[1] is combo[-1]:
            return False
        return True

    combos = [c for c in itertools.product(*axes) if valid(c)]
    if not combos:
        raise DataError(f"empty cross-product for {lang} {template.structure}")
    cells = _cells(template.has_attractor)
    total = min(max_n, len(combos) * len(cells))
    base, extra = divmod(total, len(cells))
    out = []
    for ci, (subj_num, attr_num) in enumerate(cells):
        quota = base + (ci < extra)
        picks = np.sort(rng.choice(len(combos), size=quota, replace=False))
        for k in picks:
            combo = combos[k]
            subj, verb = combo[0], combo[1]
            rest = list(combo[2:])
            adp = rest.pop(0) if "ADP" in heads else None
            attr = rest.pop(0) if template.has_attractor else None
            rcverb = rest.pop(0) if "RCVERB" in heads else None
            tokens, sp, vs = _realise(template, lexicon, subj, subj_num, MASK, adp, attr, attr_num, rcverb)
            swapped = list(tokens)
            swapped[sp] = tokens_form = subj.form(OTHER[subj_num], _subject_case(template))
            del tokens_form
            stim = Stimulus(
                id=f"{lang}-{template.structure}-{word_variant}-{len(out):04d}",
                language=lang,
                structure=template.structure,
                tokens_null=tuple(tokens),
                tokens_swap=tuple(swapped),
                subject_position=sp,
                attractor_number=attr_num,
                verb_slot=vs,
                v_match=verb.form(subj_num),
                v_mismatch=verb.form(OTHER[subj_num]),
                word_variant=word_variant,
                subject_number=subj_num,
            )
            stim.validate()
            out.append(stim)
    return out


def _subject_case(template: StructureTemplate) -> str | None:
    for slot in template.slots:
        head, _, case = slot.partition(":")
        if head == "SUBJ":
            return case or None
    return None


def short_word_variant(stimuli, lexicon: Lexicon) -> list[Stimulus]:
    """Replace every original noun and verb form by its short-word counterpart."""
    index: dict[str, tuple[LexiconEntry, str]] = {}
    for e in lexicon.entries:
        if e.pos in ("noun", "verb") and not e.is_short and not e.is_baseline:
            keys = {"sg": e.sg_form, "pl": e.pl_form}
            keys.update({k: v for k, v in e.tags.items() if v and k.endswith(("_sg", "_pl"))})
            for key, form in keys.items():
                index[form] = (e, key)

    def convert(token: str) -> str:
        if token not in index:
            return token
        entry, key = index[token]
        short = lexicon.counterpart(entry)
        if key in ("sg", "pl"):
            return short.form(key)
        case, _, num = key.partition("_")
        return short.form(num, case)

    out = []
    for s in stimuli:
        if s.structure not in AGREEMENT:
            raise DataError(f"{s.id}: short-word variants exist for agreement structures only")
        new = replace(
            s,
            id=s.id.replace("-original-", "-short-"),
            tokens_null=tuple(convert(t) for t in s.tokens_null),
            tokens_swap=tuple(convert(t) for t in s.tokens_swap),
            v_match=convert(s.v_match),
            v_mismatch=convert(s.v_mismatch),
            word_variant="short",
        )
        new.validate()
        out.append(new)
    return out


# ---------------------------------------------------------------- baselines


@dataclass(frozen=True)
class BaselinePair:
    bigram_a: tuple[str, str]
    bigram_b: tuple[str, str]
    swap_slot: str = "first"
    mode: str = "bigram"

    def __post_init__(self):
        if self.swap_slot not in ("first", "second"):
            raise DataError(f"swap_slot must be 'first' or 'second', got {self.swap_slot!r}")
        if self.mode not in ("bigram", "semantic_short", "semantic_long"):
            raise DataError(f"unknown baseline mode {self.mode!r}")
        if self.bigram_a != self.bigram_b and len(set(self.bigram_a + self.bigram_b)) != 4:
            raise DataError(f"baseline pair {self.bigram_a}/{self.bigram_b} reuses a word")


def lexicon_bigrams(lexicon: Lexicon, kind: str = "bigram", language: str = "en") -> list[tuple[str, str]]:
    """``(adjective, noun)`` pairs tagged ``bigram=`` or ``semantic=`` in the lexicon."""
    out = []
    for e in lexicon.select(language, "adjective", baseline=True):
        noun = e.tags.get(kind)
        if noun:
            out.append((e.sg_form, lexicon.lookup(language, "noun", noun).sg_form))
    return out


def sample_baseline_pairs(bigrams, n: int, rng: np.random.Generator, mode: str = "bigram",
                          slots=("first",)) -> list[BaselinePair]:
    """Draw ``n`` ordered pairs of distinct bigrams; the swapped slot is drawn from ``slots``."""
    bigrams = [tuple(b) for b in bigrams]
    if len(bigrams) < 2:
        raise DataError("need at least two bigrams")
    ordered = [(a, b) for a in bigrams for b in bigrams if a != b]
    if n > len(ordered):
        raise DataError(f"requested {n} baseline pairs, only {len(ordered)} exist")
    picks = np.sort(rng.choice(len(ordered), size=n, replace=False))
    return [BaselinePair(ordered[k][0], ordered[k][1], str(slots[rng.integers(len(slots))]), mode) for k in picks]


def _baseline_stimulus(pair: BaselinePair, structure: str, idx: int) -> Stimulus:
    (a1, a2), (b1, b2) = pair.bigram_a, pair.bigram_b
    if structure == "semantic_long":
        # a1/b1 are adjectives, a2/b2 their nouns; the prompt names the noun.
        null = (BOS, "the", a2, "is", MASK, ".")
        swap = (BOS, "the", b2, "is", MASK, ".")
        sp, vs, match, mismatch = 2, 4, a1, b1
    elif pair.swap_slot == "first":
        null = (BOS, "the", a1, MASK, ".")
        swap = (BOS, "the", b1, MASK, ".")
        sp, vs, match, mismatch = 2, 3, a2, b2
    else:
        null = (BOS, "the", MASK, a2, ".")
        swap = (BOS, "the", MASK, b2, ".")
        sp, vs, match, mismatch = 3, 2, a1, b1
    return Stimulus(f"en-{structure}-original-{idx:04d}", "en", structure, null, swap, sp, None, vs, match, mismatch, "original", None)


def generate_bigram_stimuli(pairs) -> list[Stimulus]:
    """Prompts for the bigram-swap baseline.

    With ``swap_slot == "first"`` the prompt ends in ``w1`` and the ratio
    compares ``p(w2' | w1)`` with ``p(w2 | w1)``; swapping replaces ``w1`` by
    ``w1'``. With ``"second"`` the roles are mirrored around a masked first
    word (masked models only).
    """
    pairs = list(pairs)
    if len(pairs) < 1:
        raise DataError("no baseline pairs given")
    out = [_baseline_stimulus(p, "bigram_swap", i) for i, p in enumerate(pairs)]
    for s in out:
        if pairs[0].bigram_a != pairs[0].bigram_b:
            s.validate()
    return out


def generate_semantic_stimuli(mode: str, pairs) -> list[Stimulus]:
    """Semantic-plausibility baselines over ``(adjective, noun)`` pairs.

    ``short`` swaps the adjective and compares nouns, exactly like the bigram
    baseline; ``long`` uses ``the NOUN is [MASK]``, swaps the noun and
    compares the adjectives.
    """
    if mode not in ("short", "long"):
        raise DataError(f"semantic mode must be 'short' or 'long', got {mode!r}")
    structure = f"semantic_{mode}"
    return [_baseline_stimulus(p, structure, i) for i, p in enumerate(pairs)]


def generate_baseline_stimuli(structure: str, lexicon: Lexicon, max_n: int, rng: np.random.Generator,
                              slots=("first",)) -> list[Stimulus]:
    kind = "bigram" if structure == "bigram_swap" else "semantic"
    bigrams = lexicon_bigrams(lexicon, kind)
    n = min(max_n, len(bigrams) * (len(bigrams) - 1))
    if structure == "semantic_long":
        slots = ("first",)
    pairs = sample_baseline_pairs(bigrams, n, rng, "bigram" if kind == "bigram" else structure, slots)
    if structure == "bigram_swap":
        return generate_bigram_stimuli(pairs)
    return generate_semantic_stimuli(structure.split("_")[1], pairs)


# ---------------------------------------------------------------- training corpus


def check_disjoint(train: Lexicon, probe: Lexicon) -> None:
    """Refuse when a probe noun or verb form also belongs to the training lexicon."""
    def forms(lex):
        return {f for e in lex.entries if e.pos in ("noun", "verb") for f in e.forms()}

    shared = forms(train) & forms(probe)
    if shared:
        raise DataError(f"train and probe lexicons overlap in {len(shared)} forms, e.g. {sorted(shared)[:5]}")


def generate_training_corpus(language: str, lexicon_train: Lexicon, n_sentences: int, rng: np.random.Generator,
                             probe_lexicon: Lexicon | None = None, filler_rate: float = 0.2) -> list[list[str]]:
    """Grammatical sentences from the agreement templates plus filler declaratives.

    English fillers carry the adjective-noun associations the baselines probe:
    ``the ADJ NOUN .`` for both bigram kinds and ``the NOUN is ADJ .`` for the
    semantic pairs.
    """
    if probe_lexicon is not None:
        check_disjoint(lexicon_train, probe_lexicon)
    nouns = lexicon_train.select(language, "noun", short=None)
    verbs = lexicon_train.select(language, "verb", short=None)
    adps = _adpositions(lexicon_train, language)
    if not nouns or not verbs:
        raise DataError(f"training lexicon has no {language} nouns or verbs")
    templates = [get_template(language, s) for s in AGREEMENT]
    bigrams = lexicon_bigrams(lexicon_train, "bigram", language) if language == "en" else []
    semantic = lexicon_bigrams(lexicon_train, "semantic", language) if language == "en" else []
    fillers = [("pair", b) for b in bigrams + semantic] + [("copula", s) for s in semantic]
    if not fillers:
        filler_rate = 0.0
    out = []
    for _ in range(n_sentences):
        if rng.random() < filler_rate:
            kind, (adj, noun) = fillers[rng.integers(len(fillers))]
            if kind == "pair":
                out.append([BOS, "the", adj, noun, "."])
            else:
                out.append([BOS, "the", noun, "is", adj, "."])
            continue
        template = templates[rng.integers(len(templates))]
        subj = nouns[rng.integers(len(nouns))]
        subj_num = ("sg", "pl")[rng.integers(2)]
        verb = verbs[rng.integers(len(verbs))]
        attr = attr_num = rcverb = adp = None
        if template.has_attractor:
            attr = nouns[rng.integers(len(nouns))]
            attr_num = ("sg", "pl")[rng.integers(2)]
        if template.structure == "across_pp":
            adp = adps[rng.integers(len(adps))]
        if template.structure == "across_rc":
            rcverb = verbs[rng.integers(len(verbs))]
        tokens, _, _ = _realise(template, lexicon_train, subj, subj_num, verb.form(subj_num), adp, attr, attr_num, rcverb)
        out.append(tokens)
    return out


def build_corpus(languages, lexicon_train: Lexicon, n_sentences: int, rng: np.random.Generator,
                 probe_lexicon: Lexicon | None = None) -> list[list[str]]:
    """Concatenated per-language corpora (equal shares), shuffled."""
    languages = list(languages)
    shares = [n_sentences // len(languages) + (i < n_sentences % len(languages)) for i in range(len(languages))]
    corpus = []
    for lang, n in zip(languages, shares):
        corpus += generate_training_corpus(lang, lexicon_train, n, rng, probe_lexicon)
    order = rng.permutation(len(corpus))
    return [corpus[i] for i in order]
