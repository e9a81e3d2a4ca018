from __future__ import annotations

from collections import deque
from typing import NamedTuple

import numpy as np

from ..env import Experience


class Batch(NamedTuple):
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray


class ReplayBuffer:
    """Bounded FIFO of transitions with uniform sampling without replacement."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self._items: deque[Experience] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def add(self, exp: Experience) -> None:
        self._items.append(exp)

    def __getitem__(self, i: int) -> Experience:
        return self._items[i]

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if batch_size > len(self._items):
            raise ValueError(f"cannot draw {batch_size} from {len(self._items)} transitions")
        return rng.choice(len(self._items), size=batch_size, replace=False)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        idx = self.sample_indices(batch_size, rng)
        items = [self._items[i] for i in idx]
        return Batch(
            s=np.stack([e.s for e in items]),
            a=np.stack([e.a for e in items]),
            r=np.array([e.r for e in items]),
            s_next=np.stack([e.s_next for e in items]),
        )
