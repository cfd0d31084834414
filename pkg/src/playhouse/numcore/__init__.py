from .tensor import (Tensor, Tape, tape_context, active_tape, set_default_dtype,
                     default_dtype, backward)
from .params import ParameterSet, ParameterScope, gradients
from .layers import (Dense, MLP, Embedding, Conv2d, ConvStack, LSTMCell,
                     MultiHeadAttention, LayerNorm, TransformerBlock,
                     forward_layer, glorot, zeros)
from .optim import Adam
from .checkpoint import save_checkpoint, load_checkpoint, CheckpointError

__all__ = [
    "Tensor", "Tape", "tape_context", "active_tape", "set_default_dtype",
    "default_dtype", "backward", "ParameterSet", "ParameterScope", "gradients",
    "Dense", "MLP", "Embedding", "Conv2d", "ConvStack", "LSTMCell",
    "MultiHeadAttention", "LayerNorm", "TransformerBlock", "forward_layer",
    "glorot", "zeros", "Adam", "save_checkpoint", "load_checkpoint",
    "CheckpointError",
]
