"""Deterministic, splittable random streams built on the Philox counter-based generator.

Every random draw in the package flows through an :class:`RngSpec`: a root
seed plus a tuple of integer stream ids.  Identical (seed, stream) pairs
always produce identical draws, and distinct stream tuples are statistically
independent, so parallel work (per-look noise, per-patch decoder fits) can be
seeded without coordination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Stream namespaces.  Child streams append further integers (look index,
# outer iteration, patch coordinates, ...).
STREAM_SENSING = 1
STREAM_LOOK = 2
STREAM_SCENE = 3
STREAM_DIP = 4
STREAM_HARNESS = 5


@dataclass(frozen=True)
class RngSpec:
    """A reproducible random stream: root seed plus stream-id path."""

    seed: int
    stream: tuple[int, ...] = ()

    def child(self, *ids: int) -> "RngSpec":
        return RngSpec(self.seed, self.stream + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(ss))
