"""Load, save and summarize stroke corpora in the JSON interchange format."""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from ..errors import InkDataError, UsageError
from ..models import CORPUS_VERSION, Alphabet, Corpus, InkSample, NormStats
from ..storage import atomic_write_text

logger = logging.getLogger(__name__)

SAMPLE_FIELDS = ("author", "text", "points", "y", "eoc", "bow")


def _sample_to_dict(sample: InkSample) -> Dict[str, Any]:
    return {
        "author": sample.author,
        "text": sample.text,
        "points": [[float(u), float(v), int(p)] for u, v, p in sample.points],
        "y": [int(i) for i in sample.y],
        "eoc": [int(i) for i in sample.eoc],
        "bow": [int(i) for i in sample.bow],
    }


def corpus_to_dict(corpus: Corpus) -> Dict[str, Any]:
    """Plain JSON-ready form of a corpus."""
    return {
        "version": corpus.version,
        "alphabet": corpus.alphabet.symbols,
        "samples": [_sample_to_dict(s) for s in corpus.samples],
    }


def corpus_to_json(corpus: Corpus) -> str:
    """Canonical text: sorted keys, compact separators, shortest round-trip floats."""
    for i, sample in enumerate(corpus.samples):
        if not np.all(np.isfinite(sample.points)):
            raise InkDataError("non-finite coordinate", sample_index=i, field="points")
    return json.dumps(corpus_to_dict(corpus), sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _binary_list(values, index: int, name: str) -> List[int]:
    if not isinstance(values, list):
        raise InkDataError("expected a list", sample_index=index, field=name)
    out = []
    for v in values:
        if isinstance(v, bool) or v not in (0, 1):
            raise InkDataError("expected 0 or 1 values", sample_index=index, field=name)
        out.append(int(v))
    return out


def _parse_sample(raw: Any, index: int, alphabet: Alphabet) -> InkSample:
    if not isinstance(raw, dict):
        raise InkDataError("sample must be an object", sample_index=index)
    for name in SAMPLE_FIELDS:
        if name not in raw:
            raise InkDataError("missing field", sample_index=index, field=name)
    if not isinstance(raw["author"], str):
        raise InkDataError("expected a string", sample_index=index, field="author")
    if not isinstance(raw["text"], str):
        raise InkDataError("expected a string", sample_index=index, field="text")

    points = raw["points"]
    if not isinstance(points, list):
        raise InkDataError("expected a list", sample_index=index, field="points")
    rows = []
    for p in points:
        if (not isinstance(p, list) or len(p) != 3 or not _is_number(p[0]) or not _is_number(p[1])
                or isinstance(p[2], bool) or p[2] not in (0, 1)):
            raise InkDataError("points must be [u, v, pen] with finite u, v and pen 0/1",
                               sample_index=index, field="points")
        rows.append((float(p[0]), float(p[1]), int(p[2])))

    y = raw["y"]
    if not isinstance(y, list) or any(isinstance(i, bool) or not isinstance(i, int) for i in y):
        raise InkDataError("expected a list of integers", sample_index=index, field="y")
    if any(not 0 <= i < len(alphabet) for i in y):
        raise InkDataError(f"character index outside alphabet of size {len(alphabet)}",
                           sample_index=index, field="y")
    eoc = _binary_list(raw["eoc"], index, "eoc")
    bow = _binary_list(raw["bow"], index, "bow")
    for name, labels in (("y", y), ("eoc", eoc), ("bow", bow)):
        if len(labels) != len(rows):
            raise InkDataError("label length mismatch", sample_index=index, field=name)

    return InkSample(np.array(rows, dtype=np.float64).reshape(-1, 3), y, eoc, bow,
                     author=raw["author"], text=raw["text"])


def corpus_from_dict(data: Any) -> Corpus:
    """Validate and build a Corpus from parsed JSON."""
    if not isinstance(data, dict):
        raise InkDataError("corpus must be a JSON object")
    if data.get("version") != CORPUS_VERSION:
        raise InkDataError(f"unsupported corpus version {data.get('version')!r}", field="version")
    if not isinstance(data.get("alphabet"), str):
        raise InkDataError("alphabet must be a string", field="alphabet")
    alphabet = Alphabet(data["alphabet"])
    samples = data.get("samples")
    if not isinstance(samples, list):
        raise InkDataError("samples must be a list", field="samples")
    return Corpus(alphabet, [_parse_sample(raw, i, alphabet) for i, raw in enumerate(samples)])


def load_corpus(path: Union[str, Path]) -> Corpus:
    """Read and validate a corpus file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InkDataError(f"cannot read corpus {path}: {e}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InkDataError(f"corpus {path} is not valid JSON: {e}") from None
    corpus = corpus_from_dict(data)
    logger.info(f"Loaded {len(corpus)} samples from {path}")
    return corpus


def save_corpus(corpus: Corpus, path: Union[str, Path]) -> str:
    """Write the canonical JSON form atomically; returns the path."""
    written = atomic_write_text(path, corpus_to_json(corpus))
    logger.info(f"Saved {len(corpus)} samples to {path}")
    return written


def save_stats(stats: NormStats, path: Union[str, Path]) -> str:
    """Write norm stats as compact JSON."""
    return atomic_write_text(path, json.dumps(stats.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")


def load_stats(path: Union[str, Path]) -> NormStats:
    """Read norm stats written by save_stats."""
    try:
        return NormStats.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except OSError as e:
        raise InkDataError(f"cannot read stats {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise InkDataError(f"stats {path} is not valid JSON: {e}") from None


def parse_selector(selector: str) -> Tuple[str, int]:
    """Split a 'file.json#index' sample selector."""
    path, sep, index = selector.rpartition("#")
    if not sep or not path:
        raise UsageError(f"sample selector {selector!r} must look like file.json#index")
    try:
        return path, int(index)
    except ValueError:
        raise UsageError(f"sample selector {selector!r} has a non-integer index") from None


def select_sample(selector: str) -> Tuple[Corpus, InkSample]:
    """Load the corpus a selector names and pick its sample; a bare file name means sample 0."""
    if "#" in selector:
        path, index = parse_selector(selector)
    else:
        path, index = selector, 0
    corpus = load_corpus(path)
    if not 0 <= index < len(corpus):
        raise InkDataError(f"sample index {index} out of range for {len(corpus)} samples")
    return corpus, corpus.samples[index]


@dataclass(frozen=True)
class CorpusReport:
    samples: int
    authors: int
    word_instances: int
    unique_words: int
    characters: int

    def to_dict(self) -> Dict[str, int]:
        return {
            "samples": self.samples,
            "authors": self.authors,
            "word_instances": self.word_instances,
            "unique_words": self.unique_words,
            "characters": self.characters,
        }


def corpus_report(corpus: Corpus) -> CorpusReport:
    """Sample, author, word and character counts."""
    words = [w for s in corpus.samples for w in s.text.split()]
    return CorpusReport(
        samples=len(corpus.samples),
        authors=len({s.author for s in corpus.samples}),
        word_instances=len(words),
        unique_words=len(set(words)),
        characters=sum(len(w) for w in words),
    )
