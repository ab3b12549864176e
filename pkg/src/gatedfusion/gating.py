"""Adaptive per-frame gating driven by pooled global context.

Each frame/token gets one sigmoid scalar gate computed from the frame itself
concatenated with a temporally expanded global context vector. In cross-modal
mode the context comes from the *other* modality's masked mean; in unimodal
mode from the sequence's own. The gate rescales the frame's whole feature row
(one scalar broadcast across all d channels). Gates at padded positions are
forced to 0 so refined padding stays zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .sequence import MaskedSequence, expand_context, masked_mean_pool


class GatingMode(str, Enum):
    NONE = "none"
    UNIMODAL = "unimodal"
    CROSS_MODAL = "cross_modal"


@dataclass
class GatingParams:
    """Learnable gate projections, one 2d -> 1 map per modality plus bias."""

    w_a: T.Parameter
    w_t: T.Parameter
    b_a: T.Parameter
    b_t: T.Parameter

    @classmethod
    def init(cls, d: int, rng: np.random.Generator) -> "GatingParams":
        # zero init: gates start exactly neutral (0.5) with no accidental
        # frame preference; a single output unit has no symmetry to break
        del rng
        return cls(
            w_a=T.Parameter("gate.w_a", np.zeros((2 * d, 1))),
            w_t=T.Parameter("gate.w_t", np.zeros((2 * d, 1))),
            b_a=T.Parameter("gate.b_a", np.zeros((1, 1))),
            b_t=T.Parameter("gate.b_t", np.zeros((1, 1))),
        )

    @property
    def d(self) -> int:
        return self.w_a.data.shape[0] // 2

    def parameters(self) -> list[T.Parameter]:
        return [self.w_a, self.w_t, self.b_a, self.b_t]


@dataclass(frozen=True)
class GateOutput:
    """Per-frame gate column (padded positions 0) and the refined sequence."""

    gates: np.ndarray
    refined: MaskedSequence

    def valid_gates(self) -> np.ndarray:
        return self.gates[: self.refined.valid_count, 0]


def gate_sequence(
    features: T.Tensor,
    mask: np.ndarray,
    context_features: T.Tensor,
    context_mask: np.ndarray,
    w: T.Tensor,
    b: T.Tensor,
) -> T.Tensor:
    """Taped gate computation: sigma(W [H || expanded context] + b), masked.

    Returns a T x 1 gate column with padded entries forced to 0.
    """
    t_len, d = features.data.shape
    if w.data.shape != (2 * d, 1):
        raise ShapeError(f"gate projection must be ({2 * d}, 1), got {w.data.shape}")
    ctx = masked_mean_pool(context_features, context_mask)
    expanded = expand_context(ctx, t_len)
    pre = T.add(T.matmul(T.concat_cols(features, expanded), w), b)
    gates = T.sigmoid(pre)
    mask_col = features.tape.constant(np.asarray(mask, dtype=np.float64).reshape(-1, 1))
    return T.mul(gates, mask_col)


def refine_sequence(features: T.Tensor, gates: T.Tensor) -> T.Tensor:
    """Taped feature refinement: row i scaled by its gate scalar."""
    return T.row_scale(features, gates)


def _run_gate(seq: MaskedSequence, ctx: MaskedSequence, w: T.Parameter, b: T.Parameter) -> GateOutput:
    if seq.width != ctx.width:
        raise ShapeError(f"modality widths differ: {seq.width} vs {ctx.width}")
    tape = T.Tape()
    feats = tape.constant(seq.features)
    gates = gate_sequence(feats, seq.mask, tape.constant(ctx.features), ctx.mask, tape.leaf(w), tape.leaf(b))
    refined = refine_sequence(feats, gates)
    return GateOutput(gates.data, MaskedSequence(refined.data, seq.mask))


def gate_cross_modal(
    seq_a: MaskedSequence, seq_t: MaskedSequence, params: GatingParams
) -> tuple[GateOutput, GateOutput]:
    """Gate each modality using the other modality's pooled context."""
    out_a = _run_gate(seq_a, seq_t, params.w_a, params.b_a)
    out_t = _run_gate(seq_t, seq_a, params.w_t, params.b_t)
    return out_a, out_t


def gate_unimodal(seq: MaskedSequence, w: T.Parameter, b: T.Parameter) -> GateOutput:
    """Gate a modality using its own pooled context."""
    return _run_gate(seq, seq, w, b)


def refine(seq: MaskedSequence, gates: np.ndarray) -> MaskedSequence:
    """Row-wise rescale of a sequence by a T x 1 gate column; mask unchanged."""
    gates = np.asarray(gates, dtype=np.float64)
    if gates.shape != (seq.length, 1):
        raise ShapeError(f"gates must be ({seq.length}, 1), got {gates.shape}")
    return MaskedSequence(seq.features * gates * seq.mask.reshape(-1, 1), seq.mask)
