"""Joint imitation training, probe evaluation, scaling sweep and transfer
fine-tuning harnesses."""

from .checkpoints import load_agent, save_agent
from .evaluate import EvalReport, evaluate, run_probe_episode
from .loop import TrainResult, TrainSchedule, clip_global_norm, train
from .ablations import AblationSpec, modality_deficits, run_ablations
from .losses import (LAMBDA_CONTRASTIVE, LossReport, bc_loss,
                     contrastive_loss, joint_loss)
from .sweep import SweepSpec, fraction_loss_curve, run_sweep
from .transfer import TransferSpec, budget_curve, finetune_transfer

__all__ = [
    "AblationSpec", "EvalReport", "LAMBDA_CONTRASTIVE", "LossReport",
    "SweepSpec", "modality_deficits", "run_ablations",
    "TrainResult", "TrainSchedule", "TransferSpec", "bc_loss", "budget_curve",
    "clip_global_norm", "contrastive_loss", "evaluate", "finetune_transfer",
    "fraction_loss_curve", "joint_loss", "load_agent", "run_probe_episode",
    "run_sweep", "save_agent", "train",
]
