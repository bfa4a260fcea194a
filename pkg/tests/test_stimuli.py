from collections import Counter, defaultdict

import numpy as np
import pytest
from scipy.stats import chi2_contingency

from agsc.errors import DataError
from agsc.stimuli import (
    AGREEMENT,
    LANGUAGES,
    BaselinePair,
    Lexicon,
    LexiconEntry,
    Stimulus,
    build_vocabulary,
    generate_agreement_stimuli,
    generate_baseline_stimuli,
    generate_bigram_stimuli,
    generate_semantic_stimuli,
    generate_training_corpus,
    get_template,
    read_jsonl,
    sample_baseline_pairs,
    short_word_variant,
    swap_number,
    write_jsonl,
)
from agsc.stimuli.generate import check_disjoint
from agsc.stimuli.templates import StructureTemplate


# ---------------------------------------------------------------- lexicons


def test_forms_are_unique_across_languages(lexicon):
    owners = defaultdict(set)
    for e in lexicon:
        for form in e.forms():
            owners[form].add((e.language, e.pos, e.lemma))
    for form, who in owners.items():
        content = [w for w in who if w[1] in ("noun", "verb", "adjective")]
        if content:
            assert len(who) == 1, (form, who)


def test_nouns_and_verbs_mark_number(lexicon):
    for e in lexicon:
        if e.pos in ("noun", "verb"):
            assert e.sg_form != e.pl_form
            assert " " not in e.sg_form and " " not in e.pl_form


def test_split_is_seeded_and_disjoint(lexicon):
    train_a, probe_a = lexicon.split(7)
    train_b, probe_b = lexicon.split(7)
    assert [e.lemma for e in probe_a] == [e.lemma for e in probe_b]
    check_disjoint(train_a, probe_a)
    for lang in LANGUAGES:
        for pos in ("noun", "verb"):
            n_probe = len(probe_a.select(lang, pos, short=False))
            n_all = len(lexicon.select(lang, pos, short=False))
            assert n_probe == n_all - round(0.7 * n_all)
    assert lexicon.split(8)[1].select("en", "noun") != probe_a.select("en", "noun")


def test_lexicon_rejects_bad_rows(tmp_path):
    p = tmp_path / "x.tsv"
    p.write_text("en\tnoun\tcat\tcat\n", encoding="utf-8")
    with pytest.raises(DataError):
        Lexicon.load(p)
    p.write_text("en\tnoun\tsheep\tsheep\tsheep\t-\n", encoding="utf-8")
    with pytest.raises(DataError):
        Lexicon.load(p)
    p.write_text("# comment\nen\tverb\tsee\tsees\tsee\tshort\n", encoding="utf-8")
    assert Lexicon.load(p).entries[0].is_short


def test_overlapping_lexicons_are_refused(en_lexicon):
    with pytest.raises(DataError, match="overlap"):
        generate_training_corpus("en", en_lexicon, 10, np.random.default_rng(0), en_lexicon)


# ---------------------------------------------------------------- templates


def test_template_invariants():
    for lang in LANGUAGES:
        for s in AGREEMENT:
            t = get_template(lang, s)
            assert t.has_attractor == s.startswith("across_")
    fi = get_template("fi", "across_pp").slots
    assert fi.index("ATTR:gen") < fi.index("ADP")
    with pytest.raises(DataError):
        StructureTemplate("simple", "en", ("DET", "SUBJ", "ATTR", "VERB"), "short")
    with pytest.raises(DataError):
        get_template("fr", "bigram_swap")


# ---------------------------------------------------------------- agreement stimuli


def _stim(lex, lang, structure, n=200, seed=0):
    return generate_agreement_stimuli(get_template(lang, structure), lex, n, np.random.default_rng(seed))


def test_english_examples(en_lexicon):
    simple = _stim(en_lexicon, "en", "simple", 10_000)
    s = next(s for s in simple if s.tokens_null[2] == "athlete" and s.v_match == "investigates")
    assert s.tokens_null == ("<bos>", "the", "athlete", "[MASK]", ".")
    assert s.v_mismatch == "investigate"
    pp = _stim(en_lexicon, "en", "across_pp", 100_000)
    s = next(s for s in pp if s.tokens_null[2:6] == ("manager", "behind", "the", "bikes"))
    assert s.attractor_number == "pl" and s.subject_number == "sg"
    assert s.v_match == s.v_mismatch + "s"
    assert swap_number(s) == ("<bos>", "the", "managers", "behind", "the", "bikes", "[MASK]", ".")


@pytest.mark.parametrize("lang", LANGUAGES)
@pytest.mark.parametrize("structure", AGREEMENT)
def test_stimulus_contract(lexicon, lang, structure):
    _, probe = lexicon.split(0)
    vocab = build_vocabulary(lexicon)
    stimuli = _stim(probe, lang, structure)
    assert len(stimuli) == 200
    assert len({(s.tokens_null, s.v_match) for s in stimuli}) == 200
    counts = Counter(s.subject_number for s in stimuli)
    assert abs(counts["sg"] - counts["pl"]) <= 1
    for s in stimuli:
        diff = [i for i, (a, b) in enumerate(zip(s.tokens_null, s.tokens_swap)) if a != b]
        assert diff == [s.subject_position]
        assert s.v_match != s.v_mismatch
        for tok in s.tokens_null + s.tokens_swap + (s.v_match, s.v_mismatch):
            assert tok in vocab
        assert s.flipped().flipped() == s


@pytest.mark.parametrize("structure", ["across_pp", "across_rc"])
def test_attractor_number_is_independent_of_subject(en_split, structure):
    stimuli = _stim(en_split[1], "en", structure)
    table = np.zeros((2, 2))
    for s in stimuli:
        table[("sg", "pl").index(s.subject_number), ("sg", "pl").index(s.attractor_number)] += 1
    assert chi2_contingency(table)[1] > 0.01
    assert np.all(table == 50)


def test_small_cross_product_is_exhausted():
    entries = [LexiconEntry("en", "noun", f"n{i}", f"n{i}", f"n{i}s") for i in range(5)]
    entries += [LexiconEntry("en", "verb", f"v{i}", f"v{i}s", f"v{i}") for i in range(15)]
    entries += [LexiconEntry("en", "determiner", "the", "the", "the")]
    stimuli = _stim(Lexicon(entries), "en", "simple", 200)
    assert len(stimuli) == 150
    assert len({(s.tokens_null, s.v_match) for s in stimuli}) == 150


def test_missing_slot_entries_raise():
    entries = [LexiconEntry("en", "noun", "n", "n", "ns"), LexiconEntry("en", "determiner", "the", "the", "the")]
    with pytest.raises(DataError):
        _stim(Lexicon(entries), "en", "simple")


def test_generation_is_deterministic(en_split):
    assert _stim(en_split[1], "en", "across_rc", seed=4) == _stim(en_split[1], "en", "across_rc", seed=4)
    assert _stim(en_split[1], "en", "across_rc", seed=4) != _stim(en_split[1], "en", "across_rc", seed=5)


def test_short_word_variant(en_lexicon):
    stimuli = _stim(en_lexicon, "en", "simple", 10_000)
    short = short_word_variant(stimuli, en_lexicon)
    assert len(short) == len(stimuli)
    assert {s.structure for s in short} == {"simple"}
    assert all(s.word_variant == "short" for s in short)
    pairs = {(s.tokens_null[2], s.v_match): (t.tokens_null[2], t.v_match) for s, t in zip(stimuli, short)}
    assert pairs[("managers", "observe")] == ("cats", "see")


def test_jsonl_round_trip(tmp_path, en_split):
    stimuli = _stim(en_split[1], "en", "across_pp", 20)
    path = write_jsonl(stimuli, tmp_path / "s.jsonl")
    assert read_jsonl(path) == stimuli
    fields = set(__import__("json").loads(path.read_text().splitlines()[0]))
    assert {"tokens_null", "tokens_swap", "subject_position", "attractor_number", "verb_slot",
            "v_match", "v_mismatch", "word_variant"} <= fields


# ---------------------------------------------------------------- baselines


def test_bigram_stimuli_follow_the_prompt_shape():
    pairs = [BaselinePair(("coaxial", "cable"), ("police", "officer"))]
    (s,) = generate_bigram_stimuli(pairs)
    assert s.tokens_null == ("<bos>", "the", "coaxial", "[MASK]", ".")
    assert s.tokens_swap == ("<bos>", "the", "police", "[MASK]", ".")
    # y_null = p(officer | coaxial) / p(cable | coaxial)
    assert (s.v_mismatch, s.v_match) == ("officer", "cable")
    (s2,) = generate_bigram_stimuli([BaselinePair(("coaxial", "cable"), ("police", "officer"), "second")])
    assert s2.tokens_null == ("<bos>", "the", "[MASK]", "cable", ".")
    assert (s2.v_mismatch, s2.v_match) == ("police", "coaxial")


def test_baseline_pairs_need_distinct_words():
    with pytest.raises(DataError):
        BaselinePair(("a", "b"), ("a", "c"))
    with pytest.raises(DataError):
        sample_baseline_pairs([("a", "b")], 1, np.random.default_rng(0))
    with pytest.raises(DataError):
        generate_bigram_stimuli([])


def test_self_swap_pair_is_identical():
    (s,) = generate_bigram_stimuli([BaselinePair(("coaxial", "cable"), ("coaxial", "cable"))])
    assert s.tokens_null == s.tokens_swap


def test_semantic_stimuli():
    pairs = [BaselinePair(("square", "tv"), ("red", "apple"))]
    (short,) = generate_semantic_stimuli("short", pairs)
    assert short.tokens_null == ("<bos>", "the", "square", "[MASK]", ".")
    assert (short.v_match, short.v_mismatch) == ("tv", "apple")
    (long,) = generate_semantic_stimuli("long", pairs)
    assert long.tokens_null == ("<bos>", "the", "tv", "is", "[MASK]", ".")
    assert long.tokens_swap == ("<bos>", "the", "apple", "is", "[MASK]", ".")
    assert (long.v_match, long.v_mismatch) == ("square", "red")


@pytest.mark.parametrize("structure", ["bigram_swap", "semantic_short", "semantic_long"])
def test_baseline_set_size(en_lexicon, structure):
    stimuli = generate_baseline_stimuli(structure, en_lexicon, 50, np.random.default_rng(0))
    assert len(stimuli) == 50
    vocab = build_vocabulary(en_lexicon)
    assert all(t in vocab for s in stimuli for t in s.tokens_null + s.tokens_swap)


# ---------------------------------------------------------------- corpus


def test_training_corpus(en_split):
    train_lex, probe_lex = en_split
    corpus = generate_training_corpus("en", train_lex, 10_000, np.random.default_rng(0), probe_lex)
    assert len(corpus) == 10_000
    probe_forms = {f for e in probe_lex if e.pos in ("noun", "verb") for f in e.forms()}
    assert not any(tok in probe_forms for sent in corpus for tok in sent)
    number = {}
    for e in train_lex:
        if e.pos in ("noun", "verb"):
            for f, n in e.forms().items():
                number[f] = (e.pos, n)
    agreeing = 0
    for sent in corpus:
        if "that" in sent or "is" in sent or "are" in sent:
            continue
        nouns = [number[t][1] for t in sent if t in number and number[t][0] == "noun"]
        verbs = [number[t][1] for t in sent if t in number and number[t][0] == "verb"]
        if nouns and verbs:
            assert nouns[0] == verbs[-1], sent
            agreeing += 1
    assert agreeing > 1000


def test_stimulus_validation():
    s = Stimulus("x", "en", "simple", ("<bos>", "a", "[MASK]"), ("<bos>", "b", "[MASK]"), 1, None, 2, "v", "w")
    s.validate()
    with pytest.raises(DataError):
        Stimulus("x", "en", "simple", ("<bos>", "a", "[MASK]"), ("<bos>", "a", "[MASK]"), 1, None, 2, "v", "w").validate()
    with pytest.raises(DataError):
        Stimulus("x", "en", "simple", ("<bos>", "a", "[MASK]"), ("<bos>", "b", "[MASK]"), 1, None, 2, "v", "v").validate()
