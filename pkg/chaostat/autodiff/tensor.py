"""
chaostat - Reverse-mode automatic differentiation
Dense real/complex arrays recorded on a tape; complex quantities use the real-pair
gradient convention grad = dL/dRe + i dL/dIm, so every backward rule is a plain adjoint.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erf

from chaostat.utils.errors import ShapeError

logger = logging.getLogger(__name__)

ArrayLike = Union["DiffArray", np.ndarray, float, int, complex]
Backward = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_SQRT_2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass
class _Record:
    output: int
    inputs: Tuple[int, ...]
    backward: Backward


class Tape:
    """Operation records in creation (topological) order"""

    def __init__(self):
        self.records: List[_Record] = []
        self._arrays: Dict[int, "DiffArray"] = {}
        self._next_id = 0
        self._consumed = False

    def _register(self, array: "DiffArray") -> int:
        node_id = self._next_id
        self._next_id += 1
        self._arrays[node_id] = array
        return node_id

    def leaf(self, values, name: Optional[str] = None, requires_grad: bool = True) -> "DiffArray":
        return DiffArray(np.array(values), self, requires_grad=requires_grad, name=name)

    def constant(self, values) -> "DiffArray":
        return DiffArray(np.asarray(values), self, requires_grad=False)

    def reset(self):
        """Drop records and gradients so the tape can be reused"""
        self.records.clear()
        for array in self._arrays.values():
            array.grad = None
        self._consumed = False

    def backward(self, loss: "DiffArray") -> Dict[str, np.ndarray]:
        """Populate .grad on every array that requires it; returns gradients of named leaves"""
        if loss.tape is not self:
            raise ValueError("loss was not recorded on this tape")
        if loss.value.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        if np.iscomplexobj(loss.value):
            raise ValueError("backward needs a real-valued loss")
        if self._consumed:
            raise RuntimeError("backward already ran on this tape; call reset() first")
        self._consumed = True

        grads: Dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.value, dtype=np.float64)}
        for record in reversed(self.records):
            g = grads.pop(record.output, None)
            if g is None:
                continue
            for node_id, contribution in zip(record.inputs, record.backward(g)):
                if contribution is None:
                    continue
                target = self._arrays[node_id]
                if not target.requires_grad:
                    continue
                if not np.iscomplexobj(target.value):
                    contribution = np.real(contribution)
                if node_id in grads:
                    grads[node_id] = grads[node_id] + contribution
                else:
                    grads[node_id] = contribution

        named: Dict[str, np.ndarray] = {}
        for node_id, array in self._arrays.items():
            if array.is_leaf and array.requires_grad:
                g = grads.get(node_id)
                array.grad = np.zeros_like(array.value) if g is None else np.asarray(g).reshape(array.shape)
                if array.name is not None:
                    named[array.name] = array.grad
        return named


class DiffArray:
    """Array value plus its position on a tape"""

    __array_priority__ = 100

    def __init__(self, value: np.ndarray, tape: Tape, requires_grad: bool = False,
                 name: Optional[str] = None, is_leaf: bool = True):
        self.value = value
        self.tape = tape
        self.requires_grad = requires_grad
        self.name = name
        self.is_leaf = is_leaf
        self.grad: Optional[np.ndarray] = None
        self.node_id = tape._register(self)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.value)

    def __repr__(self) -> str:
        return f"DiffArray(shape={self.shape}, name={self.name!r}, requires_grad={self.requires_grad})"

    def __add__(self, other: ArrayLike) -> "DiffArray":
        return add(self, other)

    def __radd__(self, other: ArrayLike) -> "DiffArray":
        return add(other, self)

    def __sub__(self, other: ArrayLike) -> "DiffArray":
        return sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "DiffArray":
        return sub(other, self)

    def __mul__(self, other: ArrayLike) -> "DiffArray":
        if np.isscalar(other):
            return scale(self, other)
        return mul(self, other)

    def __rmul__(self, other: ArrayLike) -> "DiffArray":
        return self.__mul__(other)

    def __truediv__(self, other) -> "DiffArray":
        if not np.isscalar(other):
            raise ShapeError("only division by a scalar is supported")
        return scale(self, 1.0 / other)

    def __neg__(self) -> "DiffArray":
        return scale(self, -1.0)


# ----------------------------------------------------------------------
# plumbing
# ----------------------------------------------------------------------

def _tape_of(*operands) -> Tape:
    for op in operands:
        if isinstance(op, DiffArray):
            return op.tape
    raise ValueError("at least one operand must be a DiffArray")


def _lift(x: ArrayLike, tape: Tape, like: Optional[DiffArray] = None) -> DiffArray:
    if isinstance(x, DiffArray):
        if x.tape is not tape:
            raise ValueError("operands live on different tapes")
        return x
    if like is not None and np.isscalar(x):
        return tape.constant(np.full(like.shape, x))
    return tape.constant(np.asarray(x))


def _lift_pair(a: ArrayLike, b: ArrayLike) -> Tuple[Tape, DiffArray, DiffArray]:
    tape = _tape_of(a, b)
    if isinstance(a, DiffArray):
        a = _lift(a, tape)
        return tape, a, _lift(b, tape, like=a)
    b = _lift(b, tape)
    return tape, _lift(a, tape, like=b), b


def _emit(tape: Tape, value: np.ndarray, inputs: Sequence[DiffArray], backward: Backward) -> DiffArray:
    requires = any(x.requires_grad for x in inputs)
    out = DiffArray(value, tape, requires_grad=requires, is_leaf=False)
    if requires:
        tape.records.append(_Record(out.node_id, tuple(x.node_id for x in inputs), backward))
    return out


def _same_shape(opname: str, a: DiffArray, b: DiffArray):
    if a.shape != b.shape:
        raise ShapeError(f"{opname}: shape mismatch {a.shape} vs {b.shape}")


# ----------------------------------------------------------------------
# primitives
# ----------------------------------------------------------------------

def add(a: ArrayLike, b: ArrayLike) -> DiffArray:
    tape, a, b = _lift_pair(a, b)
    _same_shape("add", a, b)
    return _emit(tape, a.value + b.value, (a, b), lambda g: (g, g))


def sub(a: ArrayLike, b: ArrayLike) -> DiffArray:
    tape, a, b = _lift_pair(a, b)
    _same_shape("sub", a, b)
    return _emit(tape, a.value - b.value, (a, b), lambda g: (g, -g))


def mul(a: ArrayLike, b: ArrayLike) -> DiffArray:
    tape, a, b = _lift_pair(a, b)
    _same_shape("mul", a, b)
    av, bv = a.value, b.value
    return _emit(tape, av * bv, (a, b), lambda g: (g * np.conj(bv), g * np.conj(av)))


def scale(a: DiffArray, c: Union[float, complex]) -> DiffArray:
    return _emit(a.tape, a.value * c, (a,), lambda g: (g * np.conj(c),))


def _parse_subscripts(subscripts: str) -> Tuple[str, str, str]:
    try:
        inputs, out = subscripts.replace(" ", "").split("->")
        left, right = inputs.split(",")
    except ValueError:
        raise ShapeError(f"contract needs explicit 'ab,bc->ac' subscripts, got {subscripts!r}")
    for operand in (left, right, out):
        if len(set(operand)) != len(operand):
            raise ShapeError(f"repeated index within one operand in {subscripts!r}")
    for operand, other in ((left, right), (right, left)):
        missing = set(operand) - set(out) - set(other)
        if missing:
            raise ShapeError(f"index {sorted(missing)} of {subscripts!r} is summed within one operand")
    return left, right, out


def contract(a: ArrayLike, b: ArrayLike, subscripts: str) -> DiffArray:
    """Two-operand einsum contraction with explicit subscripts"""
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    left, right, out = _parse_subscripts(subscripts)
    try:
        value = np.einsum(f"{left},{right}->{out}", a.value, b.value)
    except ValueError as e:
        raise ShapeError(f"contract {subscripts!r}: shapes {a.shape} and {b.shape} do not match ({e})")
    av, bv = a.value, b.value

    def backward(g):
        ga = np.einsum(f"{out},{right}->{left}", g, np.conj(bv))
        gb = np.einsum(f"{out},{left}->{right}", g, np.conj(av))
        return ga, gb

    return _emit(tape, value, (a, b), backward)


def matmul(a: ArrayLike, b: ArrayLike) -> DiffArray:
    """(..., m, k) @ (k, n) over the last axis of a"""
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    if a.value.ndim < 1 or b.value.ndim != 2 or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: shape mismatch {a.shape} vs {b.shape}")
    letters = "abcdefgh"[: a.value.ndim - 1]
    return contract(a, b, f"{letters}y,yz->{letters}z")


def fft(a: DiffArray, axes: Sequence[int]) -> DiffArray:
    """Forward-normalized transform over `axes`; adjoint is numpy's ifft"""
    axes = tuple(axes)
    n = int(np.prod([a.shape[ax] for ax in axes]))
    value = np.fft.fftn(a.value, axes=axes) / n
    return _emit(a.tape, value, (a,), lambda g: (np.fft.ifftn(g, axes=axes),))


def ifft(a: DiffArray, axes: Sequence[int]) -> DiffArray:
    """Inverse of `fft` (unnormalized synthesis); adjoint is numpy's fft"""
    axes = tuple(axes)
    n = int(np.prod([a.shape[ax] for ax in axes]))
    value = np.fft.ifftn(a.value, axes=axes) * n
    return _emit(a.tape, value, (a,), lambda g: (np.fft.fftn(g, axes=axes),))


def gelu(a: DiffArray) -> DiffArray:
    """x * Phi(x) with the exact Gaussian CDF"""
    x = a.value
    cdf = 0.5 * (1.0 + erf(x / _SQRT_2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return _emit(a.tape, x * cdf, (a,), lambda g: (g * (cdf + x * pdf),))


def sqrt(a: DiffArray) -> DiffArray:
    y = np.sqrt(a.value)

    def backward(g):
        safe = np.where(y > 0, y, 1.0)
        return (np.where(y > 0, g / (2.0 * safe), 0.0),)

    return _emit(a.tape, y, (a,), backward)


def reduce_sum(a: DiffArray, axis: Optional[Union[int, Tuple[int, ...]]] = None) -> DiffArray:
    shape = a.shape
    value = np.sum(a.value, axis=axis)

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _emit(a.tape, np.asarray(value), (a,), backward)


def mean(a: DiffArray, axis: Optional[Union[int, Tuple[int, ...]]] = None) -> DiffArray:
    if axis is None:
        count = a.value.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return scale(reduce_sum(a, axis), 1.0 / count)


def take(a: DiffArray, axis: int, start: int, stop: int) -> DiffArray:
    """Contiguous slice [start:stop] along axis"""
    axis = axis % a.value.ndim
    if not 0 <= start <= stop <= a.shape[axis]:
        raise ShapeError(f"slice [{start}:{stop}] out of range for axis {axis} of shape {a.shape}")
    index = [slice(None)] * a.value.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    shape, dtype = a.shape, a.value.dtype

    def backward(g):
        full = np.zeros(shape, dtype=np.result_type(dtype, g.dtype))
        full[index] = g
        return (full,)

    return _emit(a.tape, a.value[index], (a,), backward)


def concat(arrays: Sequence[ArrayLike], axis: int) -> DiffArray:
    tape = _tape_of(*arrays)
    parts = [_lift(x, tape) for x in arrays]
    ndim = parts[0].value.ndim
    axis = axis % ndim
    for p in parts[1:]:
        other = [s for i, s in enumerate(p.shape) if i != axis]
        first = [s for i, s in enumerate(parts[0].shape) if i != axis]
        if p.value.ndim != ndim or other != first:
            raise ShapeError(f"concat: shape mismatch {parts[0].shape} vs {p.shape} on axis {axis}")
    value = np.concatenate([p.value for p in parts], axis=axis)
    bounds = np.cumsum([0] + [p.shape[axis] for p in parts])

    def backward(g):
        out = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            index = [slice(None)] * ndim
            index[axis] = slice(int(lo), int(hi))
            out.append(g[tuple(index)])
        return out

    return _emit(tape, value, parts, backward)


def roll(a: DiffArray, shift: int, axis: int) -> DiffArray:
    """Periodic shift built from two slices, same as numpy.roll"""
    n = a.shape[axis]
    shift = shift % n
    if shift == 0:
        return a
    return concat([take(a, axis, n - shift, n), take(a, axis, 0, n - shift)], axis)


def broadcast(a: DiffArray, shape: Tuple[int, ...]) -> DiffArray:
    """Explicit numpy-style broadcast; backward sums over the expanded axes"""
    src = a.shape
    try:
        value = np.broadcast_to(a.value, shape).copy()
    except ValueError:
        raise ShapeError(f"broadcast: cannot broadcast {src} to {shape}")
    lead = len(shape) - len(src)

    def backward(g):
        g = np.sum(g, axis=tuple(range(lead))) if lead else g
        axes = tuple(i for i, s in enumerate(src) if s == 1 and g.shape[i] != 1)
        if axes:
            g = np.sum(g, axis=axes, keepdims=True)
        return (g,)

    return _emit(a.tape, value, (a,), backward)


def reshape(a: DiffArray, shape: Tuple[int, ...]) -> DiffArray:
    src = a.shape
    try:
        value = a.value.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {src} to {shape}")
    return _emit(a.tape, value, (a,), lambda g: (g.reshape(src),))


def real(a: DiffArray) -> DiffArray:
    return _emit(a.tape, np.real(a.value).copy(), (a,), lambda g: (g.astype(np.complex128),))


def imag(a: DiffArray) -> DiffArray:
    return _emit(a.tape, np.imag(a.value).copy(), (a,), lambda g: (1j * g,))


def conj(a: DiffArray) -> DiffArray:
    return _emit(a.tape, np.conj(a.value), (a,), lambda g: (np.conj(g),))


def make_complex(re: DiffArray, im: DiffArray) -> DiffArray:
    """re + i im from two real arrays (complex parameters as real pairs)"""
    tape = _tape_of(re, im)
    re, im = _lift(re, tape), _lift(im, tape)
    _same_shape("make_complex", re, im)
    return _emit(tape, re.value + 1j * im.value, (re, im), lambda g: (np.real(g), np.imag(g)))


def numerical_gradient(fn: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function, used for gradient checks"""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + eps
        up = fn(x)
        flat[i] = saved - eps
        down = fn(x)
        flat[i] = saved
        gflat[i] = (up - down) / (2.0 * eps)
    return grad


def parameters_on(tape: Tape, params: Dict[str, np.ndarray], trainable: Optional[Iterable[str]] = None) -> Dict[str, DiffArray]:
    """Lift a name -> array dictionary to named leaves"""
    trainable = set(params) if trainable is None else set(trainable)
    return {name: tape.leaf(value, name=name, requires_grad=name in trainable) for name, value in params.items()}
