"""Dense float64 tensors with tape-based reverse-mode gradients."""

from . import ops
from .checkpoint import CHECKPOINT_MAGIC, load_checkpoint, save_checkpoint
from .core import ComputationTape, Tensor, apply, backward, is_recording, recording
from .gradcheck import GradCheckResult, check_gradients, numeric_gradient
from .nn import LayerNorm, Linear, Mlp, Module, Parameter
from .optim import AdamW, clip_grad_norm, cosine_lr

__all__ = [
    "CHECKPOINT_MAGIC",
    "AdamW",
    "ComputationTape",
    "GradCheckResult",
    "LayerNorm",
    "Linear",
    "Mlp",
    "Module",
    "Parameter",
    "Tensor",
    "apply",
    "backward",
    "check_gradients",
    "clip_grad_norm",
    "cosine_lr",
    "is_recording",
    "load_checkpoint",
    "numeric_gradient",
    "ops",
    "recording",
    "save_checkpoint",
]
