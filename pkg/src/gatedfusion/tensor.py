"""Minimal reverse-mode autodiff over 2-D float64 numpy arrays.

Every differentiable value is a `Tensor` tied to a `Tape`. Ops append a
backward closure to the tape; `Tape.backward` replays the closures in exact
reverse order, accumulating partials additively into operand `.grad` buffers.
One tape serves one forward/backward pair; tensors are never mutated after
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteError, ShapeError

# exp() overflows beyond this in float64
_EXP_CLAMP = 709.0


class Tensor:
    """A 2-D array with an optional gradient buffer on a tape.

    grad is None for constants (no gradient is tracked through them).
    """

    __slots__ = ("data", "grad", "tape")

    def __init__(self, data: np.ndarray, tape: "Tape", grad: np.ndarray | None):
        self.data = data
        self.grad = grad
        self.tape = tape

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, const={self.grad is None})"


class Parameter:
    """A named learnable array with a persistent gradient slot."""

    __slots__ = ("name", "data", "grad")

    def __init__(self, name: str, data: np.ndarray):
        self.name = name
        self.data = np.array(data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ShapeError(f"parameter {name!r} must be 2-D, got shape {self.data.shape}")
        self.grad = np.zeros_like(self.data)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)


@dataclass
class Tape:
    """Ordered record of ops from one forward pass."""

    _steps: list = field(default_factory=list)

    def record(self, name: str, out: Tensor, backward) -> None:
        self._steps.append((name, out, backward))

    def leaf(self, param: Parameter) -> Tensor:
        """Enter a parameter; backward accumulates into its grad slot."""
        return Tensor(param.data, self, param.grad)

    def tensor(self, data) -> Tensor:
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        return Tensor(arr, self, np.zeros_like(arr))

    def constant(self, data) -> Tensor:
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        return Tensor(arr, self, None)

    def first_nonfinite(self) -> str | None:
        for name, out, _ in self._steps:
            if not np.all(np.isfinite(out.data)):
                return name
        return None

    def backward(self, loss: Tensor) -> None:
        if loss.data.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.data.shape}")
        if not np.isfinite(loss.data.reshape(-1)[0]):
            culprit = self.first_nonfinite() or "loss"
            raise NonFiniteError(f"non-finite loss; first non-finite intermediate: {culprit!r}")
        loss.grad[...] = 1.0
        for _, _, backward in reversed(self._steps):
            backward()


def _out(tape: Tape, name: str, data: np.ndarray, backward) -> Tensor:
    t = Tensor(data, tape, np.zeros_like(data))
    tape.record(name, t, backward)
    return t


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul inner dims differ: {a.data.shape} x {b.data.shape}")
    out_data = a.data @ b.data

    def backward():
        if a.grad is not None:
            a.grad += out.grad @ b.data.T
        if b.grad is not None:
            b.grad += a.data.T @ out.grad

    out = _out(a.tape, "matmul", out_data, backward)
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; b may also be a 1xN row broadcast over a's rows."""
    if a.data.shape == b.data.shape:
        row_bcast = False
    elif b.data.shape == (1, a.data.shape[1]):
        row_bcast = True
    else:
        raise ShapeError(f"add shapes incompatible: {a.data.shape} vs {b.data.shape}")
    out_data = a.data + b.data

    def backward():
        if a.grad is not None:
            a.grad += out.grad
        if b.grad is not None:
            if row_bcast:
                b.grad += out.grad.sum(axis=0, keepdims=True)
            else:
                b.grad += out.grad

    out = _out(a.tape, "add", out_data, backward)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"mul shapes differ: {a.data.shape} vs {b.data.shape}")
    out_data = a.data * b.data

    def backward():
        if a.grad is not None:
            a.grad += out.grad * b.data
        if b.grad is not None:
            b.grad += out.grad * a.data

    out = _out(a.tape, "mul", out_data, backward)
    return out


def scale(a: Tensor, s: float) -> Tensor:
    out_data = a.data * s

    def backward():
        if a.grad is not None:
            a.grad += out.grad * s

    out = _out(a.tape, "scale", out_data, backward)
    return out


def row_scale(h: Tensor, g: Tensor) -> Tensor:
    """Scale row i of h by the scalar g[i, 0] (g is Tx1)."""
    if g.data.shape != (h.data.shape[0], 1):
        raise ShapeError(f"row_scale needs g of shape ({h.data.shape[0]}, 1), got {g.data.shape}")
    out_data = h.data * g.data

    def backward():
        if h.grad is not None:
            h.grad += out.grad * g.data
        if g.grad is not None:
            g.grad += (out.grad * h.data).sum(axis=1, keepdims=True)

    out = _out(h.tape, "row_scale", out_data, backward)
    return out


def sigmoid(x: Tensor) -> Tensor:
    z = np.clip(x.data, -_EXP_CLAMP, _EXP_CLAMP)
    out_data = np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))
    # keep the open interval (0, 1) representable in float64
    out_data = np.clip(out_data, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))

    def backward():
        if x.grad is not None:
            x.grad += out.grad * out_data * (1.0 - out_data)

    out = _out(x.tape, "sigmoid", out_data, backward)
    return out


def relu(x: Tensor) -> Tensor:
    out_data = np.maximum(x.data, 0.0)

    def backward():
        if x.grad is not None:
            x.grad += out.grad * (x.data > 0.0)

    out = _out(x.tape, "relu", out_data, backward)
    return out


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[0] != b.data.shape[0]:
        raise ShapeError(f"concat_cols row counts differ: {a.data.shape} vs {b.data.shape}")
    na = a.data.shape[1]
    out_data = np.concatenate([a.data, b.data], axis=1)

    def backward():
        if a.grad is not None:
            a.grad += out.grad[:, :na]
        if b.grad is not None:
            b.grad += out.grad[:, na:]

    out = _out(a.tape, "concat_cols", out_data, backward)
    return out


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    if not (0 <= start < stop <= a.data.shape[1]):
        raise ShapeError(f"slice_cols [{start}:{stop}] out of range for shape {a.data.shape}")
    out_data = a.data[:, start:stop].copy()

    def backward():
        if a.grad is not None:
            a.grad[:, start:stop] += out.grad

    out = _out(a.tape, "slice_cols", out_data, backward)
    return out


def transpose(a: Tensor) -> Tensor:
    out_data = a.data.T.copy()

    def backward():
        if a.grad is not None:
            a.grad += out.grad.T

    out = _out(a.tape, "transpose", out_data, backward)
    return out


def softmax_rows(x: Tensor) -> Tensor:
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=1, keepdims=True)

    def backward():
        if x.grad is not None:
            dot = (out.grad * out_data).sum(axis=1, keepdims=True)
            x.grad += out_data * (out.grad - dot)

    out = _out(x.tape, "softmax_rows", out_data, backward)
    return out


def layernorm_rows(x: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-row standardization, pre-affine (apply gain/bias via mul/add)."""
    if eps <= 0:
        raise ShapeError(f"layernorm epsilon must be > 0, got {eps}")
    mu = x.data.mean(axis=1, keepdims=True)
    var = x.data.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    out_data = (x.data - mu) * inv

    def backward():
        if x.grad is not None:
            n = x.data.shape[1]
            dy = out.grad
            x.grad += inv * (
                dy
                - dy.mean(axis=1, keepdims=True)
                - out_data * (dy * out_data).sum(axis=1, keepdims=True) / n
            )

    out = _out(x.tape, "layernorm_rows", out_data, backward)
    return out


def row_broadcast_mul(x: Tensor, g: Tensor) -> Tensor:
    """Multiply every row of x by the 1xd row g (layernorm gain)."""
    if g.data.shape != (1, x.data.shape[1]):
        raise ShapeError(f"row gain must be (1, {x.data.shape[1]}), got {g.data.shape}")
    out_data = x.data * g.data

    def backward():
        if x.grad is not None:
            x.grad += out.grad * g.data
        if g.grad is not None:
            g.grad += (out.grad * x.data).sum(axis=0, keepdims=True)

    out = _out(x.tape, "row_broadcast_mul", out_data, backward)
    return out


def sum_all(x: Tensor) -> Tensor:
    out_data = np.array([[x.data.sum()]])

    def backward():
        if x.grad is not None:
            x.grad += out.grad[0, 0]

    out = _out(x.tape, "sum_all", out_data, backward)
    return out


def cross_entropy(logits: Tensor, label: int) -> Tensor:
    """-log softmax(logits)[label] for a 1xC logit row."""
    if logits.data.shape[0] != 1:
        raise ShapeError(f"cross_entropy expects a 1xC row, got {logits.data.shape}")
    n = logits.data.shape[1]
    if not 0 <= label < n:
        from .errors import LabelError

        raise LabelError(f"label {label} outside [0, {n})")
    shifted = logits.data - logits.data.max()
    e = np.exp(shifted)
    p = e / e.sum()
    out_data = np.array([[-np.log(p[0, label])]])

    def backward():
        if logits.grad is not None:
            d = p.copy()
            d[0, label] -= 1.0
            logits.grad += out.grad[0, 0] * d

    out = _out(logits.tape, "cross_entropy", out_data, backward)
    return out


@dataclass
class GradcheckEntry:
    name: str
    max_rel_err: float
    passed: bool


@dataclass
class GradcheckReport:
    entries: list[GradcheckEntry]
    tol: float

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def worst(self) -> float:
        return max(e.max_rel_err for e in self.entries)

    def __str__(self) -> str:
        lines = [
            f"{'PASS' if e.passed else 'FAIL'}  {e.name:<32s} max rel err {e.max_rel_err:.3e}"
            for e in self.entries
        ]
        return "\n".join(lines)


def gradcheck(loss_fn, params: list[Parameter], step: float = 1e-5, tol: float = 1e-4,
              grad_hook=None) -> GradcheckReport:
    """Compare analytic gradients of loss_fn against central finite differences.

    loss_fn must rebuild the forward pass on a fresh tape each call and return
    the scalar loss Tensor; it reads the current contents of `params`.
    grad_hook(params), if given, runs after the analytic backward pass (test
    hook for verifying that corrupted gradients are caught).
    """
    for p in params:
        p.zero_grad()
    loss = loss_fn()
    if not np.isfinite(loss.data.reshape(-1)[0]):
        culprit = loss.tape.first_nonfinite() or "loss"
        raise NonFiniteError(f"non-finite loss; first non-finite intermediate: {culprit!r}")
    loss.tape.backward(loss)
    if grad_hook is not None:
        grad_hook(params)
    analytic = {p.name: p.grad.copy() for p in params}

    entries = []
    for p in params:
        g_a = analytic[p.name]
        max_rel = 0.0
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = loss_fn().item()
            flat[i] = orig - step
            f_minus = loss_fn().item()
            flat[i] = orig
            g_n = (f_plus - f_minus) / (2.0 * step)
            g = g_a.reshape(-1)[i]
            rel = abs(g - g_n) / max(abs(g), abs(g_n), 1e-8)
            max_rel = max(max_rel, rel)
        entries.append(GradcheckEntry(p.name, max_rel, max_rel <= tol))
    return GradcheckReport(entries, tol)
