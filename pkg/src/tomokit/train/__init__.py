from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import central_diff_grad, grad_check, max_rel_error
from .linear import LinearHead, forward_linear, softmax, softmax_ce, softmax_ce_batch
from .loop import FitResult, TrainConfig, fit_linear_head
from .optim import OptimState, ScheduleConfig, adamw_step, cosine_lr
from .rng import (
    Xoshiro256,
    derive_seed,
    epoch_permutation,
    log_uniform_grid,
    split_indices,
)

__all__ = [
    "FitResult",
    "LinearHead",
    "OptimState",
    "ScheduleConfig",
    "TrainConfig",
    "Xoshiro256",
    "adamw_step",
    "central_diff_grad",
    "cosine_lr",
    "derive_seed",
    "epoch_permutation",
    "fit_linear_head",
    "forward_linear",
    "grad_check",
    "load_checkpoint",
    "log_uniform_grid",
    "max_rel_error",
    "save_checkpoint",
    "softmax",
    "softmax_ce",
    "softmax_ce_batch",
    "split_indices",
]
