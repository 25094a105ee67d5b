# app/core/ops.py
"""
Primitivas diferenciables.

Conjunto mínimo para expresar los clasificadores y todos los gradientes de
los ataques: suma, resta, producto elemento a elemento, producto matricial,
convolución 2-D (stride 1), max-pool 2×2, ReLU, sigmoide, reducciones de
media y suma, reshape y remuestreo espacial lineal (transformación de
DII-FGSM). Además `sign` y `l1_normalize`, que no registran gradiente.
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from app.core.tensor import ArrayLike, Tensor, as_tensor, record
from app.errors import ShapeError

Operand = Union[Tensor, ArrayLike]


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Suma las dimensiones difundidas para volver a `shape`."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(primitive: str, a: Tensor, b: Tensor) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(primitive, a.shape, b.shape) from None


def add(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record("add", (a, b), a.data + b.data, backward)


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return record("sub", (a, b), a.data - b.data, backward)


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return record("mul", (a, b), a.data * b.data, backward)


def matmul(a: Operand, b: Operand) -> Tensor:
    """Producto matricial 2-D: [n, k] @ [k, m] -> [n, m]."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return record("matmul", (a, b), a.data @ b.data, backward)


def conv2d(x: Operand, weight: Operand, bias: Optional[Operand] = None, padding: int = 0) -> Tensor:
    """
    Convolución 2-D con stride 1 y relleno de ceros simétrico.

    x: [N, C, H, W]; weight: [F, C, k, k]; bias: [F] -> [N, F, H+2p-k+1, W+2p-k+1].
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if (
        x.ndim != 4
        or weight.ndim != 4
        or x.shape[1] != weight.shape[1]
        or weight.shape[2] != weight.shape[3]
        or x.shape[2] + 2 * padding < weight.shape[2]
        or x.shape[3] + 2 * padding < weight.shape[3]
    ):
        raise ShapeError("conv2d", x.shape, weight.shape)
    k = weight.shape[2]
    p = padding
    height, width = x.shape[2], x.shape[3]
    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p))) if p else x.data
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))  # [N, C, Ho, Wo, k, k]
    out = np.tensordot(windows, weight.data, axes=([1, 4, 5], [1, 2, 3]))  # [N, Ho, Wo, F]
    out = out.transpose(0, 3, 1, 2)

    inputs: Tuple[Tensor, ...] = (x, weight)
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (weight.shape[0],):
            raise ShapeError("conv2d", weight.shape, bias.shape)
        out = out + bias.data[None, :, None, None]
        inputs = (x, weight, bias)

    def backward(g):
        grad_w = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))  # [F, C, k, k]
        gp = np.pad(g, ((0, 0), (0, 0), (k - 1, k - 1), (k - 1, k - 1)))
        g_windows = sliding_window_view(gp, (k, k), axis=(2, 3))  # [N, F, Hp, Wp, k, k]
        flipped = weight.data[:, :, ::-1, ::-1]
        grad_xp = np.tensordot(g_windows, flipped, axes=([1, 4, 5], [0, 2, 3]))  # [N, Hp, Wp, C]
        grad_xp = grad_xp.transpose(0, 3, 1, 2)
        grad_x = grad_xp[:, :, p:p + height, p:p + width]
        grads = [grad_x, grad_w]
        if len(inputs) == 3:
            grads.append(g.sum(axis=(0, 2, 3)))
        return grads

    return record("conv2d", inputs, np.ascontiguousarray(out), backward)


def max_pool2d(x: Operand) -> Tensor:
    """Max-pool 2×2 con stride 2 sobre [N, C, H, W] con H y W pares."""
    x = as_tensor(x)
    if x.ndim != 4 or x.shape[2] % 2 or x.shape[3] % 2:
        raise ShapeError("max_pool2d", x.shape, (2, 2))
    n, c, h, w = x.shape
    blocks = x.data.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    winner = blocks.argmax(axis=-1)[..., None]
    out = np.take_along_axis(blocks, winner, axis=-1)[..., 0]

    def backward(g):
        scattered = np.zeros_like(blocks)
        np.put_along_axis(scattered, winner, g[..., None], axis=-1)
        return (scattered.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w),)

    return record("max_pool2d", (x,), out, backward)


def relu(x: Operand) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0

    def backward(g):
        return (g * mask,)

    return record("relu", (x,), np.where(mask, x.data, 0.0), backward)


def sigmoid(x: Operand) -> Tensor:
    x = as_tensor(x)
    s = expit(x.data)

    def backward(g):
        return (g * s * (1.0 - s),)

    return record("sigmoid", (x,), s, backward)


def sum(x: Operand, axis: Optional[Union[int, Tuple[int, ...]]] = None) -> Tensor:  # noqa: A001
    x = as_tensor(x)
    out = x.data.sum(axis=axis)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, x.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),)

    return record("sum", (x,), np.asarray(out), backward)


def mean(x: Operand, axis: Optional[Union[int, Tuple[int, ...]]] = None) -> Tensor:
    x = as_tensor(x)
    out = x.data.mean(axis=axis)
    count = x.size // max(np.asarray(out).size, 1)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g / count, x.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g / count, axis), x.shape).copy(),)

    return record("mean", (x,), np.asarray(out), backward)


def reshape(x: Operand, shape: Tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", x.shape, tuple(shape)) from None

    def backward(g):
        return (g.reshape(x.shape),)

    return record("reshape", (x,), out, backward)


def resample(x: Operand, rows: np.ndarray, cols: np.ndarray) -> Tensor:
    """
    Mapa espacial lineal `rows @ x @ cols.T` sobre los dos últimos ejes.

    `rows` y `cols` son constantes [.., H', H] y [.., W', W] que difunden
    contra los ejes iniciales de x (una matriz por ejemplo).
    """
    x = as_tensor(x)
    if x.ndim < 2 or rows.shape[-1] != x.shape[-2] or cols.shape[-1] != x.shape[-1]:
        raise ShapeError("resample", x.shape, rows.shape, cols.shape)
    cols_t = np.swapaxes(cols, -1, -2)
    out = np.matmul(np.matmul(rows, x.data), cols_t)

    def backward(g):
        grad = np.matmul(np.matmul(np.swapaxes(rows, -1, -2), g), cols)
        return (_unbroadcast(grad, x.shape),)

    return record("resample", (x,), out, backward)


def sign(t: Operand) -> Tensor:
    """Signo elemento a elemento con sign(0) = 0."""
    t = as_tensor(t)
    return Tensor(np.sign(t.data))


class L1Normalized(NamedTuple):
    tensor: Tensor
    degenerate: np.ndarray  # bool por grupo normalizado


def l1_normalize(t: Operand, per_example: bool = False) -> L1Normalized:
    """
    t / ||t||₁. Con norma nula devuelve ceros y marca el grupo como degenerado.

    Con `per_example=True` normaliza cada índice del eje 0 por separado.
    """
    t = as_tensor(t)
    data = t.data
    if per_example and data.ndim > 0:
        axes = tuple(range(1, data.ndim))
        norms = np.abs(data).sum(axis=axes, keepdims=True)
    else:
        norms = np.asarray(np.abs(data).sum())
    degenerate = norms == 0
    safe = np.where(degenerate, 1.0, norms)
    out = np.where(degenerate, 0.0, data / safe)
    flags = degenerate.reshape(-1) if per_example and data.ndim > 0 else np.asarray(bool(degenerate))
    return L1Normalized(Tensor(out), flags)
