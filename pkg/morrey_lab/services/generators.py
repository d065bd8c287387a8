"""Deterministic sequence generators and seed sub-streams."""
import hashlib
import logging
from typing import Optional, Union

import numpy as np

from morrey_lab.config import DEFAULT_SEED
from morrey_lab.schemas import GeneratorSpec
from morrey_lab.services.lattice import (
    BoundingBox, FiniteSequence, guard_cells
)

logger = logging.getLogger(__name__)


def _stream_key(part: Union[str, int]) -> int:
    if isinstance(part, str):
        return int.from_bytes(hashlib.sha256(part.encode("utf-8")).digest()[:4], "big")
    return int(part)


def derive_seed(master: int, *stream: Union[str, int]) -> int:
    """
    Seed for a named sub-stream of the master seed, e.g. ("fs", "phi", 17).

    Depends only on (master, stream), so parallel schedules draw identical values.
    """
    sequence = np.random.SeedSequence(
        entropy=int(master), spawn_key=tuple(_stream_key(p) for p in stream)
    )
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def _draw_values(rng: np.random.Generator, spec: GeneratorSpec, n: int) -> np.ndarray:
    if spec.value_low == spec.value_high:
        return np.full(n, float(spec.value_low))
    return rng.uniform(spec.value_low, spec.value_high, size=n)


def _draw_center(rng: np.random.Generator, spec: GeneratorSpec) -> tuple:
    if spec.offset == 0:
        return (0,) * spec.dim
    return tuple(int(c) for c in rng.integers(-spec.offset, spec.offset + 1, size=spec.dim))


def generate(
    spec: GeneratorSpec,
    seed: Optional[int] = None,
    cell_limit: Optional[int] = None
) -> FiniteSequence:
    """Build the sequence described by `spec`; identical (spec, seed) gives identical output."""
    if seed is None:
        seed = DEFAULT_SEED if spec.seed is None else spec.seed
    rng = np.random.default_rng(seed)
    center = _draw_center(rng, spec)
    box = BoundingBox.around(center, spec.radius)
    guard_cells(box, cell_limit)

    if spec.kind == "spike":
        return FiniteSequence.spike(center, float(_draw_values(rng, spec, 1)[0]))

    if spec.kind == "multi-spike":
        grid = box.grid()
        count = min(spec.count, len(grid))
        chosen = np.sort(rng.choice(len(grid), size=count, replace=False))
        values = _draw_values(rng, spec, count)
        points = {tuple(int(c) for c in grid[j]): float(v) for j, v in zip(chosen, values)}
        return FiniteSequence.from_points(points, d=spec.dim, cell_limit=cell_limit)

    if spec.kind == "cube-indicator":
        return FiniteSequence(box, np.full(box.shape, float(_draw_values(rng, spec, 1)[0])))

    if spec.kind == "uniform-random-box":
        values = _draw_values(rng, spec, box.size).reshape(box.shape)
        if spec.density < 1.0:
            values = values * (rng.random(box.shape) < spec.density)
        return FiniteSequence(box, values)

    if spec.kind == "power-decay-truncated":
        offsets = np.abs(box.grid() - np.asarray(center, dtype=np.int64)).max(axis=1)
        values = np.zeros(len(offsets))
        inside = offsets >= 1
        values[inside] = offsets[inside].astype(np.float64) ** (-spec.beta)
        return FiniteSequence(box, values.reshape(box.shape))

    raise ValueError(f"Unknown generator kind {spec.kind!r}")
