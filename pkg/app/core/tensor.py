# app/core/tensor.py
"""
Tensor denso con diferenciación en modo reverso.

Un `Tensor` envuelve un arreglo float64 de numpy. Las primitivas de
`app.core.ops` registran cada operación en la `Tape` activa cuando alguna
entrada requiere gradiente; `Tape.backward` recorre el registro en orden
inverso y acumula gradientes exactos en `Tensor.grad`.

La cinta activa vive en una `ContextVar`, así que dos tareas concurrentes
(hilos distintos) nunca comparten registros.
"""

from __future__ import annotations

from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from app.errors import GradientError

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]

_active_tape: ContextVar[Optional["Tape"]] = ContextVar("axrx_active_tape", default=None)


class Tensor:
    """
    Arreglo n-dimensional float64 con gradiente opcional.

    Los datos no se mutan después de crear el tensor; solo `grad` cambia
    (acumulación en backward y `zero_grad`).
    """

    __slots__ = ("data", "requires_grad", "grad", "__weakref__")

    def __init__(self, data: ArrayLike, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def detach(self) -> "Tensor":
        """Mismos datos, sin gradiente ni historial."""
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, value: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(value, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + value

    def backward(self) -> None:
        backward(self)

    # Azúcar sintáctico sobre las primitivas
    def __add__(self, other):
        from app.core import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from app.core import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from app.core import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from app.core import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from app.core import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from app.core import ops
        return ops.mul(other, self)

    def __matmul__(self, other):
        from app.core import ops
        return ops.matmul(self, other)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    """Convierte constantes y arreglos en tensores sin gradiente."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False)


BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class TapeNode:
    """Registro de una primitiva ejecutada."""

    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward_fn: BackwardFn


@dataclass
class Tape:
    """
    Registro ordenado de primitivas ejecutadas.

    Se usa como context manager:

        with Tape() as tape:
            loss = bce_loss(model.forward(x), y)
            tape.backward(loss)
    """

    nodes: list = field(default_factory=list)
    _token: object = field(default=None, repr=False)

    def __enter__(self) -> "Tape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _active_tape.reset(self._token)
        self._token = None

    def record(self, node: TapeNode) -> None:
        self.nodes.append(node)

    def produced(self, tensor: Tensor) -> bool:
        return any(node.output is tensor for node in self.nodes)

    def backward(self, loss: Tensor) -> None:
        """
        Propaga d(loss)/d(·) hacia todos los tensores con requires_grad.

        Llamadas repetidas sin `zero_grad` acumulan.
        """
        if loss.size != 1:
            raise GradientError(f"backward requiere un escalar, recibido shape {loss.shape}")
        if not self.produced(loss):
            raise GradientError("backward sin cinta: la pérdida no fue registrada en esta Tape")

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        touched: dict[int, Tensor] = {id(loss): loss}

        for node in reversed(self.nodes):
            upstream = grads.get(id(node.output))
            if upstream is None:
                continue
            input_grads = node.backward_fn(upstream)
            for tensor, g in zip(node.inputs, input_grads):
                if g is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + g
                else:
                    grads[key] = g
                    touched[key] = tensor

        leaves = [(key, tensor) for key, tensor in touched.items() if tensor.requires_grad]
        # Sin acumulación parcial: se valida todo antes de escribir
        for key, tensor in leaves:
            if not np.all(np.isfinite(grads[key])):
                raise GradientError(f"❌ gradiente no finito para un tensor de shape {tensor.shape}")
        for key, tensor in leaves:
            tensor.accumulate_grad(grads[key])


def current_tape() -> Optional[Tape]:
    return _active_tape.get()


def record(op: str, inputs: Tuple[Tensor, ...], out_data: np.ndarray, backward_fn: BackwardFn) -> Tensor:
    """Crea el tensor de salida y lo registra si hace falta."""
    requires_grad = any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=requires_grad)
    if requires_grad:
        tape = _active_tape.get()
        if tape is not None:
            tape.record(TapeNode(op=op, inputs=inputs, output=out, backward_fn=backward_fn))
    return out


def backward(loss: Tensor) -> None:
    """Backward sobre la cinta activa del contexto actual."""
    tape = _active_tape.get()
    if tape is None:
        raise GradientError("backward sin cinta activa")
    tape.backward(loss)
