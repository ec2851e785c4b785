"""
Deterministic seed splitting.

    master_seed -> SeedSequence(master_seed).spawn(n_instances)[i]   (instance i)
    instance    -> spawn(len(STREAMS)), one child per name in STREAMS

Instance i always gets the same streams whatever the number of workers or
the sweep value, so sweeps and scenarios compare on identical geometry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

STREAMS = ("geometry", "placement", "optimizer", "fitness", "coverage", "temporal")


def seed_of(seq: np.random.SeedSequence) -> int:
    """A stable 63-bit integer summarizing a seed sequence (recorded in results)."""
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def instance_sequence(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))


@dataclass(frozen=True)
class InstanceStreams:
    index: int
    seed: int
    sequences: Dict[str, np.random.SeedSequence]

    @classmethod
    def from_master(cls, master_seed: int, index: int) -> "InstanceStreams":
        root = instance_sequence(master_seed, index)
        children = root.spawn(len(STREAMS))
        return cls(index=index, seed=seed_of(root), sequences=dict(zip(STREAMS, children)))

    def rng(self, name: str) -> np.random.Generator:
        return np.random.default_rng(self.sequences[name])

    def int_seed(self, name: str) -> int:
        return seed_of(self.sequences[name])

    def child(self, name: str, k: int) -> np.random.Generator:
        """The k-th sub-stream of a named stream."""
        seq = self.sequences[name]
        return np.random.default_rng(np.random.SeedSequence(seq.entropy, spawn_key=seq.spawn_key + (k,)))
