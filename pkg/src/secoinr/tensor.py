"""Dense 2-D float64 tensors with a reverse-mode gradient tape.

Everything is a (rows, cols) numpy array. Gradients are recorded on an
explicit ``Tape``: ops executed while a tape is active append a record with
the saved values their adjoint needs; ``Tape.backward`` replays the records
in reverse and accumulates into ``Tensor.grad``. With no active tape, ops
are plain numpy forward computations.
"""

from __future__ import annotations

import ctypes
import ctypes.util

import numpy as np

from . import _kernels


class ShapeError(ValueError):
    """Operand shapes violate an operation's contract."""


_ALLOCATOR_TUNED = False


def tune_allocator() -> None:
    """Keep freed multi-megabyte blocks in the heap instead of returning
    them to the OS. Training churns same-sized temporaries every epoch, and
    glibc's default mmap/trim thresholds make each one page-fault afresh.
    No-op where glibc's mallopt is unavailable."""
    global _ALLOCATOR_TUNED
    if _ALLOCATOR_TUNED:
        return
    _ALLOCATOR_TUNED = True
    try:
        libc = ctypes.CDLL(ctypes.util.find_library("c"), use_errno=True)
        libc.mallopt(-3, 1 << 30)  # M_MMAP_THRESHOLD
        libc.mallopt(-1, 1 << 30)  # M_TRIM_THRESHOLD
    except (OSError, AttributeError, TypeError):
        pass


_ACTIVE: "Tape | None" = None


class Tensor:
    """A rows x cols float64 array, optionally carrying a gradient accumulator."""

    __slots__ = ("data", "requires_grad", "grad", "_traced")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got {arr.ndim}-D input")
        if not np.isfinite(arr).all():
            raise ValueError("tensor values must be finite")
        self.data = np.array(arr, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self._traced = False

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Tensor":
        # Internal fast path for op outputs: no copy, no finiteness scan.
        out = cls.__new__(cls)
        out.data = arr
        out.requires_grad = False
        out.grad = None
        out._traced = False
        return out

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.data.shape}")
        return float(self.data[0, 0])

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # Arithmetic sugar; scalars go through the constant-folding primitives.
    def __add__(self, other):
        if isinstance(other, Tensor):
            return add(self, other)
        return add_const(self, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Tensor):
            return sub(self, other)
        return add_const(self, -float(other))

    def __rsub__(self, other):
        return add_const(neg(self), float(other))

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


class Tape:
    """Ordered record of primitive ops for one forward/backward cycle.

    Use as a context manager around the forward pass; records are appended
    in execution order, which is by construction a topological order.
    """

    def __init__(self):
        self._records: list[tuple[Tensor, tuple[Tensor, ...], object]] = []

    def __enter__(self) -> "Tape":
        global _ACTIVE
        if _ACTIVE is not None:
            raise RuntimeError("a Tape is already active; tapes do not nest")
        _ACTIVE = self
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        global _ACTIVE
        _ACTIVE = None
        for out, _, _ in self._records:
            out._traced = False

    def _append(self, out: Tensor, inputs: tuple[Tensor, ...], vjp) -> None:
        out._traced = True
        self._records.append((out, inputs, vjp))

    def backward(self, loss: Tensor) -> None:
        """Populate .grad of every requires_grad tensor reachable from loss."""
        if loss.shape != (1, 1):
            raise ShapeError(f"backward needs a 1x1 loss, got {loss.shape}")
        adjoints: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
        for out, inputs, vjp in reversed(self._records):
            g = adjoints.pop(id(out), None)
            if g is None:
                continue
            for t, gi in zip(inputs, vjp(g)):
                if gi is None:
                    continue
                if t.requires_grad:
                    t.grad += gi
                elif t._traced:
                    acc = adjoints.get(id(t))
                    if acc is None:
                        adjoints[id(t)] = gi
                    else:
                        acc += gi


def _needs(t: Tensor) -> bool:
    return t.requires_grad or t._traced


def _record(out: Tensor, inputs: tuple[Tensor, ...], vjp) -> None:
    if _ACTIVE is not None and any(_needs(t) for t in inputs):
        _ACTIVE._append(out, inputs, vjp)


# ---------------------------------------------------------------------------
# Primitives


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise ShapeError(f"matmul inner dims differ: {a.shape} @ {b.shape}")
    out = Tensor._wrap(a.data @ b.data)
    if _ACTIVE is not None and (_needs(a) or _needs(b)):
        A, B = a.data, b.data
        na, nb = _needs(a), _needs(b)

        def vjp(g):
            return (g @ B.T if na else None, A.T @ g if nb else None)

        _ACTIVE._append(out, (a, b), vjp)
    return out


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """Row-broadcast addition of a 1 x n bias to an m x n tensor."""
    if b.rows != 1 or b.cols != x.cols:
        raise ShapeError(f"bias must be 1x{x.cols}, got {b.shape}")
    out = Tensor._wrap(x.data + b.data)
    _record(out, (x, b), lambda g: (g, g.sum(axis=0, keepdims=True)))
    return out


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op} needs equal shapes, got {a.shape} and {b.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    out = Tensor._wrap(a.data + b.data)
    _record(out, (a, b), lambda g: (g, g))
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "sub")
    out = Tensor._wrap(a.data - b.data)
    _record(out, (a, b), lambda g: (g, -g))
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "mul")
    out = Tensor._wrap(a.data * b.data)
    A, B = a.data, b.data
    _record(out, (a, b), lambda g: (g * B, g * A))
    return out


def scale(x: Tensor, c: float) -> Tensor:
    out = Tensor._wrap(x.data * c)
    _record(out, (x,), lambda g: (g * c,))
    return out


def add_const(x: Tensor, c: float) -> Tensor:
    out = Tensor._wrap(x.data + c)
    _record(out, (x,), lambda g: (g,))
    return out


def neg(x: Tensor) -> Tensor:
    out = Tensor._wrap(-x.data)
    _record(out, (x,), lambda g: (-g,))
    return out


def sin(x: Tensor) -> Tensor:
    if _ACTIVE is not None and _needs(x):
        S, C = _kernels.sincos(x.data)
        out = Tensor._wrap(S)
        _ACTIVE._append(out, (x,), lambda g: (g * C,))
        return out
    return Tensor._wrap(np.sin(x.data))


def cos(x: Tensor) -> Tensor:
    X = x.data
    out = Tensor._wrap(np.cos(X))
    _record(out, (x,), lambda g: (-g * np.sin(X),))
    return out


def exp(x: Tensor) -> Tensor:
    E = np.exp(x.data)
    out = Tensor._wrap(E)
    _record(out, (x,), lambda g: (g * E,))
    return out


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0.0):
        raise ValueError("log domain error: all values must be positive")
    X = x.data
    out = Tensor._wrap(np.log(X))
    _record(out, (x,), lambda g: (g / X,))
    return out


def relu(x: Tensor) -> Tensor:
    X = x.data
    out = Tensor._wrap(np.maximum(X, 0.0))
    _record(out, (x,), lambda g: (g * (X > 0.0),))
    return out


def clamp_min(x: Tensor, c: float) -> Tensor:
    X = x.data
    out = Tensor._wrap(np.maximum(X, c))
    _record(out, (x,), lambda g: (g * (X > c),))
    return out


def square(x: Tensor) -> Tensor:
    X = x.data
    out = Tensor._wrap(X * X)
    _record(out, (x,), lambda g: (g * (2.0 * X),))
    return out


def sum_all(x: Tensor) -> Tensor:
    out = Tensor._wrap(np.array([[x.data.sum()]]))
    shape = x.shape
    _record(out, (x,), lambda g: (np.full(shape, g[0, 0]),))
    return out


def mean_all(x: Tensor) -> Tensor:
    return scale(sum_all(x), 1.0 / x.data.size)


def cols(x: Tensor, j0: int, j1: int) -> Tensor:
    """Slice columns [j0, j1); adjoint scatters back into a zero tensor."""
    if not (0 <= j0 < j1 <= x.cols):
        raise ShapeError(f"column slice [{j0}:{j1}] out of range for {x.shape}")
    out = Tensor._wrap(x.data[:, j0:j1].copy())
    shape = x.shape

    def vjp(g):
        gx = np.zeros(shape)
        gx[:, j0:j1] = g
        return (gx,)

    _record(out, (x,), vjp)
    return out


def softmax_rows(x: Tensor) -> Tensor:
    """Row-wise softmax. The max shift is a detached constant, so the
    adjoint is the exact softmax Jacobian action."""
    Z = x.data - x.data.max(axis=1, keepdims=True)
    E = np.exp(Z)
    P = E / E.sum(axis=1, keepdims=True)
    out = Tensor._wrap(P)
    _record(out, (x,), lambda g: (P * (g - (g * P).sum(axis=1, keepdims=True)),))
    return out


def modulated_sin(
    z: Tensor,
    amplitude: Tensor,
    frequency: Tensor,
    phase: Tensor,
    shift: Tensor,
    omega0: float,
) -> Tensor:
    """Per-row modulated sine: amp * sin(freq * omega0 * z + phase) + shift.

    ``z`` is n x d; the four modulation tensors are n x 1 and broadcast
    across the d columns of their row.
    """
    n, d = z.shape
    for name, t in (("amplitude", amplitude), ("frequency", frequency),
                    ("phase", phase), ("shift", shift)):
        if t.shape != (n, 1):
            raise ShapeError(f"{name} must be {n}x1, got {t.shape}")
    fw = frequency.data[:, 0] * omega0
    inputs = (z, amplitude, frequency, phase, shift)
    if _ACTIVE is None or not any(_needs(t) for t in inputs):
        U = fw[:, None] * z.data
        U += phase.data
        res = amplitude.data * np.sin(U)
        res += shift.data
        return Tensor._wrap(res)

    Zd, A = z.data, amplitude.data[:, 0]
    res, S, C = _kernels.modulated_sin_forward(Zd, fw, phase.data[:, 0], A,
                                               shift.data[:, 0])
    out = Tensor._wrap(res)

    def vjp(g):
        gz, gamp, gfreq, gph, gsh = _kernels.modulated_sin_backward(
            g, S, C, A, fw, Zd, omega0)
        return (gz, gamp[:, None], gfreq[:, None], gph[:, None], gsh[:, None])

    _ACTIVE._append(out, inputs, vjp)
    return out
