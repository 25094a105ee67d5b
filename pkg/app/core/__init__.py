"""Motor de tensores con diferenciación en modo reverso."""

from app.core.tensor import Tensor, Tape, TapeNode, as_tensor, backward, current_tape
from app.core.losses import bce_loss
from app.core.ops import l1_normalize, sign

__all__ = [
    'Tensor', 'Tape', 'TapeNode', 'as_tensor', 'backward', 'current_tape',
    'bce_loss', 'l1_normalize', 'sign',
]
