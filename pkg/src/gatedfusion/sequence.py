"""Variable-length sequences with validity masks, and masked pooling.

Padding is tail-only: the mask is a run of ones followed by a run of zeros,
and padded feature rows are zero. Pooling averages over valid rows only, so
appending padding never changes downstream results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import EmptySequenceError, ShapeError


@dataclass(frozen=True)
class MaskedSequence:
    """Features (T_max x d) plus a {0,1} validity mask of length T_max."""

    features: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=np.float64)
        if feats.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {feats.shape}")
        if mask.shape != (feats.shape[0],):
            raise ShapeError(f"mask length {mask.shape} does not match {feats.shape[0]} rows")
        if not np.all((mask == 0.0) | (mask == 1.0)):
            raise ShapeError("mask entries must be 0 or 1")
        n = int(mask.sum())
        if n < 1:
            raise EmptySequenceError("sequence has no valid positions")
        if not np.all(mask[:n] == 1.0):
            raise ShapeError("mask must be a prefix of ones (tail-only padding)")
        if not np.all(feats[n:] == 0.0):
            raise ShapeError("padded rows must be zero")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_valid(cls, features) -> "MaskedSequence":
        """Build an unpadded sequence (all rows valid)."""
        feats = np.asarray(features, dtype=np.float64)
        return cls(feats, np.ones(feats.shape[0]))

    @property
    def valid_count(self) -> int:
        return int(self.mask.sum())

    @property
    def width(self) -> int:
        return self.features.shape[1]

    @property
    def length(self) -> int:
        return self.features.shape[0]

    def valid_features(self) -> np.ndarray:
        return self.features[: self.valid_count]

    def padded_to(self, length: int) -> "MaskedSequence":
        if length < self.length:
            raise ShapeError(f"cannot shrink sequence of length {self.length} to {length}")
        extra = length - self.length
        feats = np.vstack([self.features, np.zeros((extra, self.width))])
        mask = np.concatenate([self.mask, np.zeros(extra)])
        return MaskedSequence(feats, mask)


def masked_mean_pool(features: T.Tensor, mask: np.ndarray) -> T.Tensor:
    """Mean of the valid rows of a taped T x d tensor: (1/N) sum_i m_i h_i.

    Gradient flows only to valid rows; padded rows receive exactly zero.
    """
    mask = np.asarray(mask, dtype=np.float64)
    n = mask.sum()
    if n < 1:
        raise EmptySequenceError("cannot pool a sequence with no valid positions")
    weights = features.tape.constant((mask / n).reshape(1, -1))
    return T.matmul(weights, features)


def expand_context(ctx: T.Tensor, length: int) -> T.Tensor:
    """Replicate a 1 x d context row `length` times; backward sums rows back."""
    if length < 1:
        raise ShapeError(f"expansion length must be >= 1, got {length}")
    ones = ctx.tape.constant(np.ones((length, 1)))
    return T.matmul(ones, ctx)


def pool_sequence(seq: MaskedSequence) -> np.ndarray:
    """Untaped masked mean pool, for callers outside a forward pass."""
    tape = T.Tape()
    out = masked_mean_pool(tape.constant(seq.features), seq.mask)
    return out.data


def pad_batch(seqs: list[MaskedSequence]) -> tuple[np.ndarray, np.ndarray]:
    """Stack sequences into (B x T_max x d) features and (B x T_max) masks."""
    if not seqs:
        raise ShapeError("cannot batch zero sequences")
    d = seqs[0].width
    for s in seqs:
        if s.width != d:
            raise ShapeError(f"mixed feature widths in batch: {s.width} vs {d}")
    t_max = max(s.length for s in seqs)
    feats = np.zeros((len(seqs), t_max, d))
    masks = np.zeros((len(seqs), t_max))
    for i, s in enumerate(seqs):
        p = s.padded_to(t_max)
        feats[i] = p.features
        masks[i] = p.mask
    return feats, masks


def unpad_batch(feats: np.ndarray, masks: np.ndarray) -> list[MaskedSequence]:
    """Inverse of pad_batch: recover each sequence at its own valid length."""
    out = []
    for f, m in zip(feats, masks):
        n = int(m.sum())
        out.append(MaskedSequence.from_valid(f[:n]))
    return out
