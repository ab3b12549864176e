"""Single-modality transformer encoder built on the tape kernel.

Post-norm layers: x = LN(x + MHA(x)); x = LN(x + FFN(x)). Attention logits at
invalid key positions get an additive -1e9 mask so padding never leaks into
valid rows. Dropout applies to sublayer outputs during training only.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import ShapeError

_ATTN_MASK_VALUE = -1e9


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, (fan_in, fan_out))


def _dropout(x: T.Tensor, rate: float, rng: np.random.Generator | None) -> T.Tensor:
    if rng is None or rate <= 0.0:
        return x
    keep = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    return T.mul(x, x.tape.constant(keep))


class EncoderLayer:
    """One attention + feedforward block with learnable layernorm affines."""

    def __init__(self, name: str, d_model: int, n_heads: int, ff_mult: int, rng: np.random.Generator):
        if d_model % n_heads != 0:
            raise ShapeError(f"d_model {d_model} not divisible by n_heads {n_heads}")
        self.d_model = d_model
        self.n_heads = n_heads
        d_ff = d_model * ff_mult
        p = T.Parameter
        self.wq = p(f"{name}.wq", xavier_uniform(rng, d_model, d_model))
        self.wk = p(f"{name}.wk", xavier_uniform(rng, d_model, d_model))
        self.wv = p(f"{name}.wv", xavier_uniform(rng, d_model, d_model))
        self.wo = p(f"{name}.wo", xavier_uniform(rng, d_model, d_model))
        self.bq = p(f"{name}.bq", np.zeros((1, d_model)))
        self.bv = p(f"{name}.bv", np.zeros((1, d_model)))
        self.bo = p(f"{name}.bo", np.zeros((1, d_model)))
        self.ln1_g = p(f"{name}.ln1_g", np.ones((1, d_model)))
        self.ln1_b = p(f"{name}.ln1_b", np.zeros((1, d_model)))
        self.w1 = p(f"{name}.ffn_w1", xavier_uniform(rng, d_model, d_ff))
        self.b1 = p(f"{name}.ffn_b1", np.zeros((1, d_ff)))
        self.w2 = p(f"{name}.ffn_w2", xavier_uniform(rng, d_ff, d_model))
        self.b2 = p(f"{name}.ffn_b2", np.zeros((1, d_model)))
        self.ln2_g = p(f"{name}.ln2_g", np.ones((1, d_model)))
        self.ln2_b = p(f"{name}.ln2_b", np.zeros((1, d_model)))

    def parameters(self) -> list[T.Parameter]:
        return [
            self.wq, self.wk, self.wv, self.wo,
            self.bq, self.bv, self.bo,
            self.ln1_g, self.ln1_b,
            self.w1, self.b1, self.w2, self.b2,
            self.ln2_g, self.ln2_b,
        ]

    def _attention(self, x: T.Tensor, mask: np.ndarray) -> T.Tensor:
        tape = x.tape
        t_len = x.data.shape[0]
        dh = self.d_model // self.n_heads
        q = T.add(T.matmul(x, tape.leaf(self.wq)), tape.leaf(self.bq))
        # no key bias: a shared key offset cancels inside the row softmax
        k = T.matmul(x, tape.leaf(self.wk))
        v = T.add(T.matmul(x, tape.leaf(self.wv)), tape.leaf(self.bv))
        key_mask = np.where(np.asarray(mask, dtype=np.float64) > 0.0, 0.0, _ATTN_MASK_VALUE)
        mask_mat = tape.constant(np.broadcast_to(key_mask, (t_len, t_len)).copy())
        heads = []
        for h in range(self.n_heads):
            lo, hi = h * dh, (h + 1) * dh
            qh = T.slice_cols(q, lo, hi)
            kh = T.slice_cols(k, lo, hi)
            vh = T.slice_cols(v, lo, hi)
            scores = T.scale(T.matmul(qh, T.transpose(kh)), 1.0 / np.sqrt(dh))
            attn = T.softmax_rows(T.add(scores, mask_mat))
            heads.append(T.matmul(attn, vh))
        merged = heads[0]
        for head in heads[1:]:
            merged = T.concat_cols(merged, head)
        return T.add(T.matmul(merged, tape.leaf(self.wo)), tape.leaf(self.bo))

    def _ffn(self, x: T.Tensor) -> T.Tensor:
        tape = x.tape
        hidden = T.relu(T.add(T.matmul(x, tape.leaf(self.w1)), tape.leaf(self.b1)))
        return T.add(T.matmul(hidden, tape.leaf(self.w2)), tape.leaf(self.b2))

    def _ln(self, x: T.Tensor, gain: T.Parameter, bias: T.Parameter) -> T.Tensor:
        tape = x.tape
        return T.add(T.row_broadcast_mul(T.layernorm_rows(x), tape.leaf(gain)), tape.leaf(bias))

    def forward(
        self,
        x: T.Tensor,
        mask: np.ndarray,
        dropout_rate: float = 0.0,
        dropout_rng: np.random.Generator | None = None,
    ) -> T.Tensor:
        attn = _dropout(self._attention(x, mask), dropout_rate, dropout_rng)
        x = self._ln(T.add(x, attn), self.ln1_g, self.ln1_b)
        ff = _dropout(self._ffn(x), dropout_rate, dropout_rng)
        return self._ln(T.add(x, ff), self.ln2_g, self.ln2_b)


def sinusoidal_positions(t_len: int, d_model: int) -> np.ndarray:
    """Standard interleaved sin/cos position table, shape T x d."""
    pos = np.arange(t_len)[:, None]
    idx = np.arange(d_model)[None, :]
    angle = pos / np.power(10000.0, (2 * (idx // 2)) / d_model)
    table = np.zeros((t_len, d_model))
    table[:, 0::2] = np.sin(angle[:, 0::2])
    table[:, 1::2] = np.cos(angle[:, 1::2])
    return table
