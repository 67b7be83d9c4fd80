"""Networks: conditional denoiser U-net and conditional discriminator."""
from .denoiser import Denoiser, clone_weights, freeze, init_denoiser, predict_noise
from .discriminator import Discriminator, discriminate

__all__ = [
    "Denoiser", "clone_weights", "freeze", "init_denoiser", "predict_noise",
    "Discriminator", "discriminate",
]
