"""Training stages: teacher fitting, adversarial consistency distillation, evaluation."""
from .common import RunResult
from .distill import load_teacher, run_distill
from .evaluate import compare_ablation, evaluate, load_generator, sample_images
from .optim import apply_update, build_optimizer
from .teacher import train_teacher

__all__ = [
    "RunResult",
    "train_teacher",
    "run_distill", "load_teacher",
    "evaluate", "load_generator", "sample_images", "compare_ablation",
    "build_optimizer", "apply_update",
]
