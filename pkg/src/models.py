"""Data models for ink samples, corpora and model configuration."""

import os
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from .errors import ContractError, InkDataError

# Numbers, letters and punctuation of the full-scale alphabet (K = 69).
FULL_ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ'.,-()/"

CORPUS_VERSION = 1


@dataclass(frozen=True)
class Alphabet:
    """Ordered symbol set; symbol position is the class index."""

    symbols: str

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise InkDataError("alphabet symbols must be unique", field="alphabet")
        if " " in self.symbols:
            raise InkDataError("alphabet must not contain the space character", field="alphabet")
        object.__setattr__(self, "_index", {ch: i for i, ch in enumerate(self.symbols)})

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, ch: str) -> bool:
        return ch in self._index

    def index(self, ch: str) -> int:
        try:
            return self._index[ch]
        except KeyError:
            raise InkDataError(f"character {ch!r} is not in the alphabet") from None

    def symbol(self, i: int) -> str:
        return self.symbols[i]


def _as_int_labels(values, name: str) -> np.ndarray:
    try:
        return np.asarray(values, dtype=np.int64).reshape(-1)
    except (TypeError, ValueError):
        raise InkDataError(f"labels in {name!r} must be integers", field=name) from None


@dataclass(eq=False)
class InkSample:
    """One handwritten sequence with per-point labels.

    points is a T x 3 array of (u, v, pen). y holds character indices,
    eoc marks the last point of a character and bow the first point of a word.
    """

    points: np.ndarray
    y: np.ndarray
    eoc: np.ndarray
    bow: np.ndarray
    author: str = ""
    text: str = ""
    # In-memory only; never serialized. e.g. "hard_split"
    flags: FrozenSet[str] = frozenset()

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.y = _as_int_labels(self.y, "y")
        self.eoc = _as_int_labels(self.eoc, "eoc")
        self.bow = _as_int_labels(self.bow, "bow")
        T = len(self.points)
        for name in ("y", "eoc", "bow"):
            if len(getattr(self, name)) != T:
                raise InkDataError("label length mismatch", field=name)
        for name, col in (("pen", self.points[:, 2]), ("eoc", self.eoc), ("bow", self.bow)):
            if not np.all((col == 0) | (col == 1)):
                raise InkDataError("binary column holds values other than 0/1", field=name)
        if T and np.any(self.y < 0):
            raise InkDataError("negative character index", field="y")

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, InkSample):
            return NotImplemented
        return (
            self.author == other.author
            and self.text == other.text
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.eoc, other.eoc)
            and np.array_equal(self.bow, other.bow)
        )

    def slice(self, start: int, stop: int) -> "InkSample":
        """Return the sub-sample covering points [start, stop)."""
        return InkSample(
            self.points[start:stop].copy(),
            self.y[start:stop].copy(),
            self.eoc[start:stop].copy(),
            self.bow[start:stop].copy(),
            author=self.author,
            text=self.text,
        )


@dataclass(eq=False)
class Corpus:
    """A collection of samples sharing an alphabet."""

    alphabet: Alphabet
    samples: List[InkSample] = field(default_factory=list)
    version: int = CORPUS_VERSION

    def __len__(self) -> int:
        return len(self.samples)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            self.version == other.version
            and self.alphabet == other.alphabet
            and len(self.samples) == len(other.samples)
            and all(a == b for a, b in zip(self.samples, other.samples))
        )


@dataclass(frozen=True)
class NormStats:
    """Mean and standard deviation of (du, dv) over the training deltas."""

    mean: Tuple[float, float]
    std: Tuple[float, float]

    def __post_init__(self):
        if len(self.mean) != 2 or len(self.std) != 2:
            raise InkDataError("norm stats need 2-vectors", field="mean/std")
        if any(not s > 0 for s in self.std):
            raise InkDataError("norm stats std must be positive", field="std")

    @property
    def mean_array(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=np.float64)

    @property
    def std_array(self) -> np.ndarray:
        return np.asarray(self.std, dtype=np.float64)

    def to_dict(self) -> Dict[str, List[float]]:
        return {"mean": [float(m) for m in self.mean], "std": [float(s) for s in self.std]}

    @classmethod
    def from_dict(cls, data: dict) -> "NormStats":
        try:
            return cls(tuple(float(m) for m in data["mean"]), tuple(float(s) for s in data["std"]))
        except (KeyError, TypeError, ValueError) as e:
            raise InkDataError(f"invalid norm stats: {e}") from None


@dataclass(eq=False)
class EncodedSequence:
    """A sample in model space: normalized deltas plus labels.

    deltas is T x 3 (du, dv, pen); row 0 is (0, 0, pen_0).
    """

    deltas: np.ndarray
    y: np.ndarray
    eoc: np.ndarray
    bow: np.ndarray
    author: str = ""
    text: str = ""

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=np.float64).reshape(-1, 3)
        self.y = _as_int_labels(self.y, "y")
        self.eoc = _as_int_labels(self.eoc, "eoc")
        self.bow = _as_int_labels(self.bow, "bow")
        T = len(self.deltas)
        for name in ("y", "eoc", "bow"):
            if len(getattr(self, name)) != T:
                raise InkDataError("label length mismatch", field=name)

    def __len__(self) -> int:
        return len(self.deltas)


@dataclass
class LossBreakdown:
    """Loss terms of one training step, averaged over the batch."""

    recon_nll: float = 0.0
    kl_z: float = 0.0
    kl_pi: float = 0.0
    classification: float = 0.0
    eoc_nll: float = 0.0
    total: float = 0.0
    kl_weight: float = 1.0

    TERMS = ("recon_nll", "kl_z", "kl_pi", "classification", "eoc_nll")

    def to_dict(self) -> Dict[str, float]:
        return {name: float(getattr(self, name)) for name in self.TERMS + ("total",)}


def _default_precision() -> str:
    return os.environ.get("INK_PRECISION", "float64")


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("INK_THREADS", "1")))
    except ValueError:
        return 1


class _ConfigMixin:
    """to_dict/from_dict for flat dataclass configs."""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict):
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


def _require(condition: bool, message: str):
    if not condition:
        raise ContractError(message)


@dataclass
class CvrnnConfig(_ConfigMixin):
    """Sizes of the conditional variational RNN.

    Full-scale values are hidden_size=512, latent_size=gmm_size=32, ff_size=512.
    """

    alphabet_size: int = 5
    hidden_size: int = 32
    latent_size: int = 8
    gmm_size: int = 8
    ff_size: int = 32
    input_size: int = 3
    activation: str = "relu"
    precision: str = field(default_factory=_default_precision)

    def __post_init__(self):
        for name in ("alphabet_size", "hidden_size", "latent_size", "gmm_size", "ff_size", "input_size"):
            _require(getattr(self, name) >= 1, f"CvrnnConfig.{name} must be >= 1")
        _require(self.input_size == 3, "CvrnnConfig.input_size must be 3 (du, dv, pen)")
        _require(self.activation == "relu", "only the rectified-linear activation is supported")
        _require(self.precision in ("float64", "float32"), f"unknown precision {self.precision!r}")


@dataclass
class ClassifierConfig(_ConfigMixin):
    """Sizes of the stacked recurrent character recognizer.

    Full-scale values are hidden_size=512, projection_size=256.
    """

    alphabet_size: int = 5
    hidden_size: int = 32
    projection_size: int = 16
    num_layers: int = 3
    bidirectional: bool = True
    input_size: int = 3
    precision: str = field(default_factory=_default_precision)

    def __post_init__(self):
        for name in ("alphabet_size", "hidden_size", "projection_size", "num_layers", "input_size"):
            _require(getattr(self, name) >= 1, f"ClassifierConfig.{name} must be >= 1")
        _require(self.precision in ("float64", "float32"), f"unknown precision {self.precision!r}")


@dataclass
class SamplingConfig(_ConfigMixin):
    """Controls for conditional synthesis."""

    eoc_threshold: float = 0.5
    max_strokes_per_char: int = 50
    greedy: bool = False
    seed: int = 0

    def __post_init__(self):
        _require(0.0 < self.eoc_threshold < 1.0, "eoc_threshold must lie in (0, 1)")
        _require(self.max_strokes_per_char >= 1, "max_strokes_per_char must be >= 1")


@dataclass
class TrainConfig(_ConfigMixin):
    """Optimization settings.

    Full-scale training ran 200 epochs with batches of 64; the defaults here
    are the desk-scale ones.
    """

    lr0: float = 0.001
    decay_rate: float = 0.96
    decay_steps: int = 1000
    epochs: int = 30
    batch_size: int = 16
    kl_weight: float = 1.0
    kl_warmup_steps: int = 0
    grad_clip: Optional[float] = 5.0
    checkpoint_every: int = 10
    max_steps: Optional[int] = None
    validation_fraction: float = 0.0
    seed: int = 0
    threads: int = field(default_factory=_default_threads)

    def __post_init__(self):
        _require(self.lr0 > 0, "lr0 must be positive")
        _require(0 < self.decay_rate <= 1, "decay_rate must lie in (0, 1]")
        _require(self.decay_steps >= 1, "decay_steps must be >= 1")
        _require(self.epochs >= 1, "epochs must be >= 1")
        _require(self.batch_size >= 1, "batch_size must be >= 1")
        _require(self.kl_warmup_steps >= 0, "kl_warmup_steps must be >= 0")
        _require(self.grad_clip is None or self.grad_clip > 0, "grad_clip must be positive or None")
        _require(self.checkpoint_every >= 1, "checkpoint_every must be >= 1")
        _require(0.0 <= self.validation_fraction < 1.0, "validation_fraction must lie in [0, 1)")
        _require(self.threads >= 1, "threads must be >= 1")
