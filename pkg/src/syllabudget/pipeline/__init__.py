"""Benchmark construction: segmentation, cleaning, filtering, deduplication, sampling and core events."""

from .build import BenchRecord, BuildConfig, BuildResult, build_bench, corpus_mean_syllables, load_records, make_record
from .dedup import InsufficientSupplyError, jaccard, lsh_threshold, minhash_dedup, quota_sample, shingles
from .events import CoreEvent, LexiconTagger, Tagger, extract_core_events, match_core_events
from .filters import FilterConfig, FilterDecision, character_count, filter_record, repetition_ratio, script_fraction
from .segment import (
    CONTEXT_OFFSET, CONTEXT_SIZE, Domain, PreprocessConfig, RawSegment, TimedToken, clean_text, context_windows,
    preprocess, segment,
)

# ``filter`` shadows the builtin inside this namespace only
filter = filter_record
