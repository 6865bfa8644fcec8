"""Time-major padding of variable-length sequences."""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..errors import ContractError
from ..models import EncodedSequence


@dataclass(frozen=True)
class PaddedBatch:
    """Sequences stacked time-major and zero-padded to the longest one.

    Attributes:
        deltas: T x B x 3
        y, eoc, bow: T x B integer arrays
        mask: T x B, 1.0 on real steps
        lengths: B
    """

    deltas: np.ndarray
    y: np.ndarray
    eoc: np.ndarray
    bow: np.ndarray
    mask: np.ndarray
    lengths: np.ndarray

    @property
    def size(self) -> int:
        return len(self.lengths)

    @property
    def steps(self) -> int:
        return self.mask.shape[0]

    @classmethod
    def from_sequences(cls, batch: Sequence[EncodedSequence]) -> "PaddedBatch":
        if not batch:
            raise ContractError("cannot pad an empty batch")
        lengths = np.array([len(seq) for seq in batch], dtype=np.int64)
        T, B = int(lengths.max()), len(batch)
        deltas = np.zeros((T, B, 3))
        y = np.zeros((T, B), dtype=np.int64)
        eoc = np.zeros((T, B), dtype=np.int64)
        bow = np.zeros((T, B), dtype=np.int64)
        for b, seq in enumerate(batch):
            n = len(seq)
            deltas[:n, b] = seq.deltas
            y[:n, b] = seq.y
            eoc[:n, b] = seq.eoc
            bow[:n, b] = seq.bow
        mask = (np.arange(T)[:, None] < lengths[None, :]).astype(np.float64)
        return cls(deltas, y, eoc, bow, mask, lengths)

    def step_noise(self, rngs: Sequence[np.random.Generator], *sizes: int) -> List[np.ndarray]:
        """Standard-normal draws per step and item, zero on padding.

        Item b draws from rngs[b] step by step, one vector per entry of
        sizes, so its noise does not depend on the rest of the batch.
        """
        if len(rngs) != self.size:
            raise ContractError(f"{len(rngs)} noise sources for {self.size} sequences")
        out = [np.zeros((self.steps, self.size, n)) for n in sizes]
        for b, rng in enumerate(rngs):
            for t in range(int(self.lengths[b])):
                for arr, n in zip(out, sizes):
                    arr[t, b] = rng.standard_normal(n)
        return out
