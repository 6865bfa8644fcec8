"""Binary checkpoint container.

Layout:
    8 bytes   magic b"CVRNNCK1"
    8 bytes   little-endian manifest length
    n bytes   UTF-8 JSON manifest
    rest      little-endian binary64 buffers, in manifest order

The manifest records the model kind and config, the alphabet, the norm stats,
the LSTM gate order, every buffer's name, shape and byte offset, and the
trainer position so a run can resume.
"""

import json
import logging
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..classifier import Classifier
from ..cvrnn import CvrnnModel
from ..errors import InkDataError
from ..models import Alphabet, NormStats
from ..nn import GATE_ORDER, InkModel, ParamStore
from ..storage import atomic_write_bytes
from .adam import AdamState

logger = logging.getLogger(__name__)

MAGIC = b"CVRNNCK1"
HEADER = struct.Struct("<Q")
LE_FLOAT64 = np.dtype("<f8")

MODEL_KINDS = {
    CvrnnModel.kind: CvrnnModel,
    Classifier.kind: Classifier,
}


@dataclass
class TrainerPosition:
    """Where a training run stopped: optimizer steps, finished epochs, batches into the current epoch."""

    step: int = 0
    epoch: int = 0
    seed: int = 0
    batch: int = 0


@dataclass
class Checkpoint:
    kind: str
    config: object
    alphabet: Alphabet
    params: ParamStore
    stats: Optional[NormStats] = None
    position: TrainerPosition = field(default_factory=TrainerPosition)
    adam: Optional[AdamState] = None

    def build_model(self) -> InkModel:
        return MODEL_KINDS[self.kind](self.config, self.alphabet, self.params)


def _layout(arrays: Dict[str, np.ndarray], offset: int) -> Tuple[List[dict], int]:
    entries = []
    for name, arr in arrays.items():
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.size * LE_FLOAT64.itemsize
    return entries, offset


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    """Serialise a checkpoint to its binary form."""
    sections = [("params", dict(ckpt.params))]
    if ckpt.adam is not None:
        sections += [("adam_m", ckpt.adam.m), ("adam_v", ckpt.adam.v)]

    manifest = {
        "kind": ckpt.kind,
        "config": ckpt.config.to_dict(),
        "alphabet": ckpt.alphabet.symbols,
        "stats": ckpt.stats.to_dict() if ckpt.stats else None,
        "gate_order": GATE_ORDER,
        "trainer": asdict(ckpt.position),
        "adam_step": ckpt.adam.step if ckpt.adam is not None else None,
    }
    offset = 0
    buffers = []
    for section, arrays in sections:
        manifest[section], offset = _layout(arrays, offset)
        buffers.extend(np.ascontiguousarray(a, dtype=LE_FLOAT64).tobytes() for a in arrays.values())

    header = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + HEADER.pack(len(header)) + header + b"".join(buffers)


def _read_section(manifest: dict, section: str, data: memoryview) -> Dict[str, np.ndarray]:
    arrays = {}
    for entry in manifest.get(section) or []:
        try:
            name, shape, offset = entry["name"], tuple(int(s) for s in entry["shape"]), int(entry["offset"])
        except (KeyError, TypeError, ValueError):
            raise InkDataError(f"malformed buffer entry in checkpoint section {section!r}") from None
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * LE_FLOAT64.itemsize
        if offset < 0 or end > len(data):
            raise InkDataError(f"checkpoint buffer {name!r} runs past the end of the file")
        arrays[name] = np.frombuffer(data[offset:end], dtype=LE_FLOAT64).astype(np.float64).reshape(shape)
    return arrays


def decode_checkpoint(blob: bytes) -> Checkpoint:
    """Parse checkpoint bytes, raising InkDataError on malformed input."""
    if len(blob) < len(MAGIC) + HEADER.size or blob[:len(MAGIC)] != MAGIC:
        raise InkDataError("not a checkpoint: bad magic")
    (length,) = HEADER.unpack_from(blob, len(MAGIC))
    start = len(MAGIC) + HEADER.size
    if start + length > len(blob):
        raise InkDataError("checkpoint manifest is truncated")
    try:
        manifest = json.loads(blob[start:start + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise InkDataError(f"checkpoint manifest is not valid JSON: {e}") from None

    kind = manifest.get("kind")
    if kind not in MODEL_KINDS:
        raise InkDataError(f"unknown model kind {kind!r} in checkpoint")
    if manifest.get("gate_order") != GATE_ORDER:
        raise InkDataError(f"checkpoint gate order {manifest.get('gate_order')!r} != {GATE_ORDER!r}")

    data = memoryview(blob)[start + length:]
    try:
        config = MODEL_KINDS[kind].config_cls.from_dict(manifest["config"])
        alphabet = Alphabet(manifest["alphabet"])
        stats = NormStats.from_dict(manifest["stats"]) if manifest.get("stats") else None
        trainer = manifest.get("trainer") or {}
        position = TrainerPosition(**{name: int(trainer.get(name, 0)) for name in ("step", "epoch", "seed", "batch")})
    except (KeyError, TypeError, ValueError) as e:
        raise InkDataError(f"malformed checkpoint manifest: {e}") from None

    params = ParamStore(_read_section(manifest, "params", data))
    adam = None
    if manifest.get("adam_step") is not None:
        adam = AdamState(_read_section(manifest, "adam_m", data), _read_section(manifest, "adam_v", data),
                         int(manifest["adam_step"]))
    return Checkpoint(kind, config, alphabet, params, stats, position, adam)


def save_checkpoint(path: Union[str, Path], ckpt: Checkpoint) -> str:
    """Encode ckpt and write it atomically to path."""
    written = atomic_write_bytes(path, encode_checkpoint(ckpt))
    logger.info(f"Saved {ckpt.kind} checkpoint at step {ckpt.position.step} to {path}")
    return written


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """Read and decode a checkpoint file."""
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise InkDataError(f"cannot read checkpoint {path}: {e}") from None
    return decode_checkpoint(blob)


def model_from_checkpoint(path: Union[str, Path], kind: Optional[str] = None) -> Tuple[InkModel, Checkpoint]:
    """Load a checkpoint and rebuild its model; kind, when given, must match."""
    ckpt = load_checkpoint(path)
    if kind is not None and ckpt.kind != kind:
        raise InkDataError(f"expected a {kind} checkpoint, got {ckpt.kind}")
    return ckpt.build_model(), ckpt
