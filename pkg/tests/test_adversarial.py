"""Tests for the hinge adversarial losses."""
import pytest
import torch

from src.diffusion.adversarial import d_loss, g_adv_loss, hinge_d_loss, hinge_g_loss
from src.models.denoiser import init_denoiser
from src.models.discriminator import Discriminator
from src.utils.errors import ShapeMismatchError


class TestHingeLosses:
    """Test the score-level losses."""

    def test_discriminator_example(self):
        """D(real) = [0.5, 2.0], D(fake) = [−0.5, 1.0] → 0.25 + 1.25 = 1.5."""
        real = torch.tensor([0.5, 2.0])
        fake = torch.tensor([-0.5, 1.0])

        assert float(hinge_d_loss(real, fake)) == pytest.approx(1.5)

    def test_confident_discriminator_has_zero_loss(self):
        assert float(hinge_d_loss(torch.tensor([1.0, 3.0]), torch.tensor([-1.0, -2.0]))) == 0.0

    def test_generator_example(self):
        """D(fake) = [1, 3] → −2."""
        assert float(hinge_g_loss(torch.tensor([1.0, 3.0]))) == pytest.approx(-2.0)

    def test_zero_scores(self):
        """A zero-initialized head scores everything 0: D loss 2, G loss 0."""
        zeros = torch.zeros(4)

        assert float(hinge_d_loss(zeros, zeros)) == 2.0
        assert float(hinge_g_loss(zeros)) == 0.0


class TestNetworkLosses:
    """Test the losses evaluated through a discriminator."""

    @pytest.fixture
    def disc(self, small_config):
        disc = Discriminator.from_denoiser(init_denoiser(small_config, seed=0))
        with torch.no_grad():
            disc.head.weight.normal_(generator=torch.Generator().manual_seed(0))
        return disc

    def _images(self, small_config, n=2):
        gen = torch.Generator().manual_seed(5)
        size = small_config.tile_size
        real = torch.rand(n, 3, size, size, generator=gen) * 2 - 1
        fake = torch.rand(n, 3, size, size, generator=gen) * 2 - 1
        cond = torch.rand(n, 1, size, size, generator=gen) * 2 - 1
        return real, fake, cond

    def test_d_loss_does_not_reach_generator(self, disc, small_config):
        """The fake batch is detached inside d_loss."""
        real, fake, cond = self._images(small_config)
        fake.requires_grad_(True)

        d_loss(disc, real, fake, cond).backward()

        assert fake.grad is None
        assert disc.head.weight.grad is not None

    def test_g_loss_reaches_generator(self, disc, small_config):
        _, fake, cond = self._images(small_config)
        fake.requires_grad_(True)

        g_adv_loss(disc, fake, cond).backward()

        assert fake.grad is not None
        assert fake.grad.abs().sum() > 0

    def test_shape_mismatch(self, disc, small_config):
        real, fake, cond = self._images(small_config)

        with pytest.raises(ShapeMismatchError):
            d_loss(disc, real, fake[:1], cond)

    def test_d_loss_non_negative(self, disc, small_config):
        real, fake, cond = self._images(small_config)

        assert float(d_loss(disc, real, fake, cond)) >= 0.0
