"""Stroke data: corpus format, preprocessing and rendering."""

from .corpus import (
    CorpusReport,
    corpus_from_dict,
    corpus_report,
    corpus_to_json,
    load_corpus,
    load_stats,
    parse_selector,
    save_corpus,
    save_stats,
    select_sample,
)
from .preprocess import (
    compute_stats,
    encode_corpus,
    from_model_space,
    labels_to_text,
    split_corpus,
    split_long_samples,
    to_model_space,
    train_validation_split,
)
from .svg import pen_runs, render_svg, save_svg

__all__ = [
    "CorpusReport",
    "corpus_from_dict",
    "corpus_report",
    "corpus_to_json",
    "load_corpus",
    "load_stats",
    "parse_selector",
    "save_corpus",
    "save_stats",
    "select_sample",
    "compute_stats",
    "encode_corpus",
    "from_model_space",
    "labels_to_text",
    "split_corpus",
    "split_long_samples",
    "to_model_space",
    "train_validation_split",
    "pen_runs",
    "render_svg",
    "save_svg",
]
