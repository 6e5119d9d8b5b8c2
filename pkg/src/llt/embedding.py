"""Time-delay embedding of beats into overlapping lagged windows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .types import Beat


@dataclass
class EmbeddedMatrix:
    """Rows of lagged windows, newest sample first in each row.

    ``row_provenance[r] = (beat_index, base_offset)`` such that
    ``data[r, i] == beats[beat_index].samples[base_offset - i]``.
    """

    data: np.ndarray
    width: int
    row_provenance: list[tuple[int, int]]

    @property
    def rows(self) -> int:
        return self.data.shape[0]


def embed_series(values: np.ndarray, width: int) -> np.ndarray:
    """Embed a 1-D series into an (n-width+1, width) matrix.

    Row j holds [v[j+width-1], v[j+width-2], ..., v[j]]: the window
    ending at index j+width-1, newest first.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    if width < 2:
        raise ValueError(f"embedding width must be >= 2, got {width}")
    if width > n:
        raise ValueError(f"embedding width {width} exceeds series length {n}")
    return np.ascontiguousarray(sliding_window_view(values, width)[:, ::-1])


def embed_beat(beat: Beat, width: int, beat_index: int = 0) -> EmbeddedMatrix:
    data = embed_series(beat.samples, width)
    prov = [(beat_index, j + width - 1) for j in range(data.shape[0])]
    return EmbeddedMatrix(data=data, width=width, row_provenance=prov)


def embed_class(beats: list[Beat], width: int) -> EmbeddedMatrix:
    """Stack per-beat embeddings into one block matrix, in input order."""
    if not beats:
        raise ValueError("cannot fit law on empty class")
    lengths = {len(b.samples) for b in beats}
    if len(lengths) != 1:
        raise ValueError(f"beats have mixed lengths {sorted(lengths)}")
    blocks = []
    prov: list[tuple[int, int]] = []
    for m, beat in enumerate(beats):
        e = embed_beat(beat, width, beat_index=m)
        blocks.append(e.data)
        prov.extend(e.row_provenance)
    return EmbeddedMatrix(data=np.vstack(blocks), width=width, row_provenance=prov)


def dump_embedding_csv(matrix: EmbeddedMatrix, path) -> None:
    """Debug dump: one row per line with provenance columns first."""
    with open(path, "w", encoding="utf-8") as f:
        for (m, k), row in zip(matrix.row_provenance, matrix.data):
            vals = ",".join(f"{v:.17g}" for v in row)
            f.write(f"{m},{k},{vals}\n")
