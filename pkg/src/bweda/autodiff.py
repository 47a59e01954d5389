"""Reverse-mode automatic differentiation over float64 numpy arrays.

A deliberately small engine: just the operations the waveform models and
adversarial losses need, each with a hand-written backward rule. Everything
runs in float64 so finite-difference gradient verification can use tight
tolerances, and every operation is deterministic (plain numpy, no threading
surprises beyond BLAS, which is reproducible for fixed shapes).

Graphs are built eagerly: each operation returns a new :class:`Tensor`
holding its value, its parents, and a closure that routes the incoming
gradient to those parents. ``backward`` walks the graph once in reverse
topological order, accumulating into ``Tensor.grad`` on every tensor that
``requires_grad``.

Broadcasting is intentionally restricted: binary operations accept either two
tensors of identical shape or a tensor and a python scalar. The convolution
handles its own bias broadcast internally. Keeping the rules this narrow
makes every backward exact and easy to audit.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

Array = np.ndarray


class Tensor:
    """A float64 array with an optional gradient and graph linkage."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(
        self,
        data: object,
        requires_grad: bool = False,
        _parents: tuple["Tensor", ...] = (),
        _backward: Callable[[Array], None] | None = None,
    ) -> None:
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Array | None = None
        self.requires_grad = bool(requires_grad)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def __float__(self) -> float:
        return self.item()

    def detach(self) -> "Tensor":
        """A constant tensor sharing this tensor's values, cut from the graph."""
        return Tensor(self.data)

    def accumulate_grad(self, g: Array) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    # -- operator sugar -------------------------------------------------
    def __add__(self, other: "Tensor | float") -> "Tensor":
        return add(self, other)

    def __radd__(self, other: float) -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor | float") -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: float) -> "Tensor":
        return add(mul(self, -1.0), float(other))

    def __mul__(self, other: "Tensor | float") -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: float) -> "Tensor":
        return mul(self, other)

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)

    def __truediv__(self, other: float) -> "Tensor":
        if isinstance(other, Tensor):
            raise TypeError("tensor/tensor division is not supported")
        return mul(self, 1.0 / float(other))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def as_tensor(value: object) -> Tensor:
    """Wrap ``value`` as a constant Tensor (no gradient tracking)."""
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(data: Array, parents: Sequence[Tensor], backward: Callable[[Array], None]) -> Tensor:
    tracked = tuple(p for p in parents if p.requires_grad or p._parents)
    if tracked:
        return Tensor(data, requires_grad=True, _parents=tracked, _backward=backward)
    return Tensor(data)


def backward(root: Tensor) -> None:
    """Accumulate gradients of scalar ``root`` into every reachable leaf.

    Gradients add onto existing ``.grad`` buffers; call ``zero_grad`` on the
    leaves between optimization steps. Multiple ``backward`` calls on graphs
    with disjoint leaves are safe.
    """
    if root.data.size != 1:
        raise ValueError(f"backward requires a scalar root, got shape {root.shape}")
    if not (root.requires_grad or root._parents):
        return
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    grads: dict[int, Array] = {id(root): np.ones_like(root.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad and node._backward is None:
            node.accumulate_grad(g)
        if node._backward is not None:
            node._backward_dispatch(g, grads)  # type: ignore[attr-defined]


def _backward_dispatch(self: Tensor, g: Array, grads: dict[int, Array]) -> None:
    """Route gradient ``g`` to parents via the op's closure."""
    outputs: list[tuple[Tensor, Array]] = self._backward(g)  # type: ignore[misc]
    for parent, contribution in outputs:
        if not (parent.requires_grad or parent._parents):
            continue
        if parent.requires_grad and parent._backward is None:
            parent.accumulate_grad(contribution)
        key = id(parent)
        if parent._backward is not None:
            if key in grads:
                grads[key] = grads[key] + contribution
            else:
                grads[key] = contribution


Tensor._backward_dispatch = _backward_dispatch  # type: ignore[attr-defined]


# ---------------------------------------------------------------------------
# elementwise and reduction operations
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor | float) -> Tensor:
    if not isinstance(b, Tensor):
        bv = float(b)
        return _make(a.data + bv, (a,), lambda g: [(a, g)])
    if a.shape != b.shape:
        raise ValueError(f"add shape mismatch: {a.shape} vs {b.shape}")
    return _make(a.data + b.data, (a, b), lambda g: [(a, g), (b, g)])


def sub(a: Tensor, b: Tensor | float) -> Tensor:
    if not isinstance(b, Tensor):
        bv = float(b)
        return _make(a.data - bv, (a,), lambda g: [(a, g)])
    if a.shape != b.shape:
        raise ValueError(f"sub shape mismatch: {a.shape} vs {b.shape}")
    return _make(a.data - b.data, (a, b), lambda g: [(a, g), (b, -g)])


def mul(a: Tensor, b: Tensor | float) -> Tensor:
    if not isinstance(b, Tensor):
        bv = float(b)
        return _make(a.data * bv, (a,), lambda g: [(a, g * bv)])
    if a.shape != b.shape:
        raise ValueError(f"mul shape mismatch: {a.shape} vs {b.shape}")
    return _make(a.data * b.data, (a, b), lambda g: [(a, g * b.data), (b, g * a.data)])


def square(a: Tensor) -> Tensor:
    return _make(a.data * a.data, (a,), lambda g: [(a, g * (2.0 * a.data))])


def sqrt(a: Tensor) -> Tensor:
    """Elementwise square root; gradient is undefined at exactly zero."""
    root = np.sqrt(a.data)
    return _make(root, (a,), lambda g: [(a, g * (0.5 / root))])


def absolute(a: Tensor) -> Tensor:
    """Elementwise absolute value; subgradient 0 at the kink."""
    return _make(np.abs(a.data), (a,), lambda g: [(a, g * np.sign(a.data))])


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    return _make(y, (a,), lambda g: [(a, g * (1.0 - y * y))])


def leaky_relu(a: Tensor, slope: float = 0.1) -> Tensor:
    mask = a.data > 0.0
    factor = np.where(mask, 1.0, slope)
    return _make(a.data * factor, (a,), lambda g: [(a, g * factor)])


def tsum(a: Tensor) -> Tensor:
    return _make(
        np.asarray(a.data.sum()),
        (a,),
        lambda g: [(a, np.broadcast_to(g, a.shape).copy() if a.shape else np.asarray(g))],
    )


def tmean(a: Tensor) -> Tensor:
    n = a.data.size
    return _make(
        np.asarray(a.data.mean()),
        (a,),
        lambda g: [(a, np.broadcast_to(g / n, a.shape).copy() if a.shape else np.asarray(g / n))],
    )


def mean_axes(a: Tensor, axes: tuple[int, ...]) -> Tensor:
    """Mean over ``axes``, dropping them from the shape."""
    axes = tuple(ax % a.data.ndim for ax in axes)
    count = 1
    for ax in axes:
        count *= a.shape[ax]
    out = a.data.mean(axis=axes)

    def back(g: Array) -> list[tuple[Tensor, Array]]:
        expanded = np.expand_dims(g, axes)
        return [(a, np.broadcast_to(expanded / count, a.shape).copy())]

    return _make(out, (a,), back)


def sum_axes(a: Tensor, axes: tuple[int, ...]) -> Tensor:
    """Sum over ``axes``, dropping them from the shape."""
    axes = tuple(ax % a.data.ndim for ax in axes)
    out = a.data.sum(axis=axes)

    def back(g: Array) -> list[tuple[Tensor, Array]]:
        expanded = np.expand_dims(g, axes)
        return [(a, np.broadcast_to(expanded, a.shape).copy())]

    return _make(out, (a,), back)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    out = a.data.reshape(shape)

    def back(g: Array) -> list[tuple[Tensor, Array]]:
        return [(a, g.reshape(a.shape))]

    return _make(out, (a,), back)


def param_slice(params: Tensor, start: int, shape: tuple[int, ...]) -> Tensor:
    """View a contiguous slice of a flat parameter vector as ``shape``.

    The gradient scatters back into the matching slice positions, which is
    how layer weights draw from a model's single flat parameter tensor.
    """
    if params.data.ndim != 1:
        raise ValueError("param_slice expects a flat vector")
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    stop = start + count
    if stop > params.data.size:
        raise ValueError(f"slice [{start}:{stop}] exceeds parameter vector of size {params.data.size}")
    out = params.data[start:stop].reshape(shape)

    def back(g: Array) -> list[tuple[Tensor, Array]]:
        full = np.zeros_like(params.data)
        full[start:stop] = g.reshape(-1)
        return [(params, full)]

    return _make(out, (params,), back)


# ---------------------------------------------------------------------------
# structural operations for waveform models
# ---------------------------------------------------------------------------

def conv1d(
    x: Tensor,
    w: Tensor,
    b: Tensor | None = None,
    stride: int = 1,
    dilation: int = 1,
    padding: int = 0,
) -> Tensor:
    """1-D convolution (cross-correlation): (B,C,T) * (O,C,K) -> (B,O,T_out).

    ``padding`` zeros are added at both ends; ``T_out = (T + 2*padding -
    (K-1)*dilation - 1) // stride + 1``. Forward and weight gradients run as
    single einsum contractions over a sliding-window view of the input; the
    input gradient of a unit-stride convolution is itself a convolution of
    the upstream gradient with the tap-reversed kernel, while strided
    convolutions fall back to a scatter over kernel taps.
    """
    if x.data.ndim != 3 or w.data.ndim != 3:
        raise ValueError(f"conv1d expects 3-D input and weight, got {x.shape} and {w.shape}")
    batch, c_in, t_in = x.shape
    c_out, c_in_w, k = w.shape
    if c_in != c_in_w:
        raise ValueError(f"conv1d channel mismatch: input {c_in}, weight {c_in_w}")
    span = (k - 1) * dilation + 1
    t_pad = t_in + 2 * padding
    if t_pad < span:
        raise ValueError(f"conv1d input length {t_in} (+2*{padding} pad) shorter than kernel span {span}")
    t_out = (t_pad - span) // stride + 1
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding))) if padding else x.data
    # (B, C, T_out, K) strided view: window t picks taps xp[., ., t*stride + j*dilation]
    cols = np.lib.stride_tricks.sliding_window_view(xp, span, axis=2)
    cols = cols[:, :, ::stride, :][..., ::dilation]
    y = np.einsum("bctk,ock->bot", cols, w.data, optimize=True)
    if b is not None:
        if b.data.shape != (c_out,):
            raise ValueError(f"conv1d bias shape {b.data.shape}, expected ({c_out},)")
        y += b.data[None, :, None]

    parents = (x, w) if b is None else (x, w, b)

    def back(g: Array) -> list[tuple[Tensor, Array]]:
        outputs: list[tuple[Tensor, Array]] = []
        need_x = x.requires_grad or bool(x._parents)
        need_w = w.requires_grad or bool(w._parents)
        if need_x:
            if stride == 1:
                gp = np.pad(g, ((0, 0), (0, 0), (span - 1, span - 1)))
                gcols = np.lib.stride_tricks.sliding_window_view(gp, span, axis=2)
                gcols = gcols[..., ::dilation]
                gxp = np.einsum(
                    "bosk,ock->bcs", gcols, w.data[:, :, ::-1], optimize=True
                )
            else:
                gxp = np.zeros((batch, c_in, t_pad))
                last = (t_out - 1) * stride
                for tap in range(k):
                    lo = tap * dilation
                    gxp[:, :, lo : lo + last + 1 : stride] += np.matmul(
                        w.data[:, :, tap].T, g
                    )
            gx = gxp[:, :, padding : padding + t_in] if padding else gxp
            outputs.append((x, gx))
        if need_w:
            gw = np.einsum("bot,bctk->ock", g, cols, optimize=True)
            outputs.append((w, gw))
        if b is not None:
            outputs.append((b, g.sum(axis=(0, 2))))
        return outputs

    return _make(y, parents, back)


def period_view(x: Tensor, period: int) -> Tensor:
    """Fold (B, 1, T) into (B*period, 1, T//period) phase tracks.

    Sample ``t`` of the input lands in track ``t % period`` at position
    ``t // period``; a trailing remainder of fewer than ``period`` samples is
    dropped. Convolving the result mixes samples that are ``period`` apart in
    the original signal, the stride trick behind multi-period scoring.
    """
    if x.data.ndim != 3 or x.shape[1] != 1:
        raise ValueError(f"period_view expects (B, 1, T), got {x.shape}")
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    batch, _, t_in = x.shape
    frames = t_in // period
    if frames == 0:
        raise ValueError(f"input length {t_in} shorter than period {period}")
    used = frames * period
    out = (
        x.data[:, 0, :used]
        .reshape(batch, frames, period)
        .transpose(0, 2, 1)
        .reshape(batch * period, 1, frames)
    )

    def back(g: Array) -> list[tuple[Tensor, Array]]:
        gx = np.zeros_like(x.data)
        gx[:, 0, :used] = (
            g.reshape(batch, period, frames).transpose(0, 2, 1).reshape(batch, used)
        )
        return [(x, gx)]

    return _make(out, (x,), back)


def add_scalars(terms: Sequence[Tensor]) -> Tensor:
    """Left-to-right sum of scalar tensors."""
    if not terms:
        raise ValueError("add_scalars needs at least one term")
    total = terms[0]
    for term in terms[1:]:
        total = add(total, term)
    return total
