"""Reader and writer for the plain-text sequence file format."""
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import numpy as np

from morrey_lab.exceptions import SequenceFormatError
from morrey_lab.services.lattice import FiniteSequence, support_hull

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def parse_sequence(lines: Iterable[str], cell_limit: Optional[int] = None) -> FiniteSequence:
    """
    Parse sequence text.

    Format: `#` starts a comment; the first non-comment line is `dim <d>`;
    every other line is `<k_1> ... <k_d> <value>`. Duplicate points are errors.
    """
    dim: Optional[int] = None
    points: Dict[tuple, float] = {}

    for line_number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()

        if dim is None:
            if len(tokens) != 2 or tokens[0] != "dim":
                raise SequenceFormatError("expected header `dim <d>`", line_number)
            try:
                dim = int(tokens[1])
            except ValueError:
                raise SequenceFormatError(f"invalid dimension {tokens[1]!r}", line_number)
            if dim < 1:
                raise SequenceFormatError(f"dimension must be >= 1, got {dim}", line_number)
            continue

        if len(tokens) != dim + 1:
            raise SequenceFormatError(
                f"expected {dim} coordinates and a value, got {len(tokens)} fields",
                line_number
            )
        try:
            point = tuple(int(t) for t in tokens[:dim])
        except ValueError:
            raise SequenceFormatError(f"non-integer coordinate in {line!r}", line_number)
        try:
            value = float(tokens[dim])
        except ValueError:
            raise SequenceFormatError(f"invalid value {tokens[dim]!r}", line_number)
        if not np.isfinite(value):
            raise SequenceFormatError(f"non-finite value {tokens[dim]!r}", line_number)
        if point in points:
            raise SequenceFormatError(f"duplicate point {point}", line_number)
        points[point] = value

    if dim is None:
        raise SequenceFormatError("missing `dim <d>` header")
    return FiniteSequence.from_points(points, d=dim, cell_limit=cell_limit)


def read_sequence(path: PathLike, cell_limit: Optional[int] = None) -> FiniteSequence:
    """Load a sequence file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            x = parse_sequence(f, cell_limit=cell_limit)
    except UnicodeDecodeError as e:
        raise SequenceFormatError(f"{path} is not valid UTF-8 text: {e.reason}")
    logger.info(f"Loaded {path}: dim={x.dim}, box={x.box.lo}..{x.box.hi}")
    return x


def format_sequence(x: FiniteSequence, dense: bool = False, comments: List[str] = None) -> str:
    """
    Render a sequence in row-major order.

    Sparse mode writes the nonzeros of the tight hull; dense mode writes
    every point of the storage box (fields keep their window that way).
    """
    out = [f"# {c}" for c in (comments or [])]
    out.append(f"dim {x.dim}")
    if dense:
        box = x.box
        values = x.values.reshape(-1)
        for point, value in zip(box.points(), values):
            out.append(" ".join(str(k) for k in point) + f" {float(value)!r}")
    else:
        hull = support_hull(x)
        values = x.dense_over(hull).reshape(-1) if not hull.is_empty else []
        for point, value in zip(hull.points(), values):
            if value != 0:
                out.append(" ".join(str(k) for k in point) + f" {float(value)!r}")
    return "\n".join(out) + "\n"


def write_sequence(
    x: FiniteSequence,
    path: PathLike,
    dense: bool = False,
    comments: List[str] = None
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_sequence(x, dense=dense, comments=comments))
    return path
