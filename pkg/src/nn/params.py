"""Named parameter storage and initializers."""

import math
from typing import Dict, Iterator, Mapping, Tuple

import numpy as np

from ..errors import ContractError


class ParamStore(Mapping[str, np.ndarray]):
    """Ordered registry of uniquely named parameter arrays."""

    def __init__(self, arrays: Mapping[str, np.ndarray] = None):
        self._arrays: Dict[str, np.ndarray] = {}
        for name, value in (arrays or {}).items():
            self.add(name, value)

    def add(self, name: str, value) -> np.ndarray:
        if name in self._arrays:
            raise ContractError(f"parameter {name!r} is already registered")
        arr = np.array(value, dtype=np.float64)
        self._arrays[name] = arr
        return arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    @property
    def num_entries(self) -> int:
        return sum(a.size for a in self._arrays.values())

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: a.shape for name, a in self._arrays.items()}

    def replace(self, updates: Mapping[str, np.ndarray]) -> "ParamStore":
        """Return a new store with some arrays swapped; shapes must match."""
        out = ParamStore()
        for name, value in self._arrays.items():
            new = updates.get(name, value)
            if np.shape(new) != value.shape:
                raise ContractError(f"parameter {name!r}: shape {np.shape(new)} != {value.shape}")
            out.add(name, new)
        return out

    def copy(self) -> "ParamStore":
        return ParamStore(self._arrays)

    def zeros_like(self) -> Dict[str, np.ndarray]:
        return {name: np.zeros_like(a) for name, a in self._arrays.items()}


def uniform_init(rng: np.random.Generator, shape: Tuple[int, ...], fan: int) -> np.ndarray:
    """uniform(-1/sqrt(fan), 1/sqrt(fan))."""
    bound = 1.0 / math.sqrt(fan)
    return rng.uniform(-bound, bound, size=shape)
