"""Shared domain types for beats, corpora and linear laws."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Label(str, Enum):
    NORMAL = "N"
    ECTOPIC = "E"
    UNLABELED = "?"

    @classmethod
    def from_token(cls, token: str) -> "Label":
        try:
            return cls(token)
        except ValueError:
            raise ValueError(f"unknown label token {token!r}") from None


class Role(str, Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


@dataclass
class Beat:
    """Fixed-length window centered on a detected peak.

    ``artifact`` marks beats where peak detection or standardization
    failed; their samples are placeholders and must not be embedded.
    """

    samples: np.ndarray
    label: Label = Label.UNLABELED
    artifact: bool = False
    source_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or len(self.samples) < 2:
            raise ValueError("beat needs a 1-D sample vector of length >= 2")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("beat contains non-finite samples")


@dataclass
class Corpus:
    beats: list[Beat]
    window_len: int
    role: Role = Role.TRAIN

    def __post_init__(self):
        for i, b in enumerate(self.beats):
            if len(b.samples) != self.window_len:
                raise ValueError(
                    f"beat {i}: length {len(b.samples)} != corpus length {self.window_len}"
                )

    def __len__(self) -> int:
        return len(self.beats)

    def with_label(self, label: Label) -> list[Beat]:
        return [b for b in self.beats if b.label == label]

    def non_artifact(self) -> list[Beat]:
        return [b for b in self.beats if not b.artifact]


@dataclass
class LinearLaw:
    """Unit-norm coefficient vector whose sliding dot product with a
    class's embedded windows is (near) zero.

    ``lam`` is the smallest eigenvalue of the fitted correlation matrix,
    which equals the training variance of the residuals.
    """

    w: np.ndarray
    lam: float
    class_tag: str
    train_row_count: int = 0

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.ndim != 1:
            raise ValueError("law coefficients must be a vector")
        norm = float(np.linalg.norm(self.w))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"coefficients not unit norm (norm={norm:.6g})")
        if self.lam < -1e-12:
            raise ValueError("negative eigenvalue on a PSD correlation matrix")

    @property
    def width(self) -> int:
        return len(self.w)
