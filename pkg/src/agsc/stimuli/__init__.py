"""Lexicons, templates and stimulus generation."""

from .generate import (
    BaselinePair,
    Stimulus,
    build_corpus,
    build_vocabulary,
    generate_agreement_stimuli,
    generate_baseline_stimuli,
    generate_bigram_stimuli,
    generate_semantic_stimuli,
    generate_training_corpus,
    read_jsonl,
    sample_baseline_pairs,
    short_word_variant,
    swap_number,
    write_jsonl,
)
from .lexicon import LANGUAGES, Lexicon, LexiconEntry
from .templates import AGREEMENT, BASELINES, STRUCTURES, StructureTemplate, get_template
