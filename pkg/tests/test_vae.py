import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fd_gradient_check
from scenediff.errors import NonFiniteLoss, ShapeMismatch
from scenediff.nn import init_parameters
from scenediff.vae import MotionVae, VaeConfig, kl_standard_normal, reparameterize, vae_loss

TINY = VaeConfig(layers=1, heads=2, model_width=16, latent_dim=8)


def tiny_vae(n_frames=2, n_joints=3, seed=0, dtype=torch.float64):
    model = MotionVae(TINY, n_frames, n_joints).to(dtype)
    init_parameters(model, torch.Generator().manual_seed(seed))
    return model


def motion(n_frames=2, n_joints=3, seed=0):
    gen = torch.Generator().manual_seed(seed)
    return torch.randn(1, n_frames, n_joints, 3, generator=gen, dtype=torch.float64)


class TestEncode:
    def test_output_shapes_and_sigma_positive(self):
        model = tiny_vae()
        mu, sigma = model.encode(motion())
        assert mu.shape == (1, 8)
        assert sigma.shape == (1, 8)
        assert (sigma > 0).all()

    def test_purity_bit_identical(self):
        model = tiny_vae()
        x = motion()
        mu1, sigma1 = model.encode(x)
        mu2, sigma2 = model.encode(x)
        assert torch.equal(mu1, mu2)
        assert torch.equal(sigma1, sigma2)

    def test_frame_permutation_changes_output(self):
        # position encodings are active, so order matters
        model = tiny_vae(n_frames=3)
        x = motion(n_frames=3)
        mu1, _ = model.encode(x)
        mu2, _ = model.encode(x[:, [2, 0, 1]])
        assert (mu1 - mu2).abs().max() > 0

    def test_wrong_shape_raises(self):
        with pytest.raises(ShapeMismatch):
            tiny_vae().encode(torch.zeros(1, 4, 3, 3, dtype=torch.float64))


class TestReparameterize:
    def test_zero_eps_returns_mu(self):
        mu, sigma = torch.tensor([1.0, -2.0]), torch.tensor([0.5, 2.0])
        assert torch.equal(reparameterize(mu, sigma, torch.zeros(2)), mu)

    def test_sigma_floor_keeps_z_near_mu(self):
        mu = torch.tensor([1.0, -2.0], dtype=torch.float64)
        sigma = torch.full((2,), 1e-6, dtype=torch.float64)
        eps = torch.tensor([3.0, -4.0], dtype=torch.float64)
        # equality case: allow the IEEE rounding of (mu + sigma*eps) at |mu| ~ 2
        bound = 1e-6 * eps.abs().max() + 8 * torch.finfo(torch.float64).eps
        assert (reparameterize(mu, sigma, eps) - mu).abs().max() <= bound

    def test_standard_normal_identity(self):
        eps = torch.tensor([0.3, -1.2, 2.0])
        z = reparameterize(torch.zeros(3), torch.ones(3), eps)
        assert torch.equal(z, eps)


class TestDecode:
    def test_deterministic(self):
        model = tiny_vae()
        z = torch.randn(1, 8, generator=torch.Generator().manual_seed(1), dtype=torch.float64)
        assert torch.equal(model.decode(z), model.decode(z))

    def test_output_shape(self):
        model = tiny_vae(n_frames=4, n_joints=5)
        out = model.decode(torch.zeros(2, 8, dtype=torch.float64))
        assert out.shape == (2, 4, 5, 3)

    def test_overfit_single_sample_reconstructs_below_1mm(self):
        # overfit oracle: a tiny VAE memorizes one clip; decode(encode mean) lands < 1 mm
        model = tiny_vae(seed=3)
        target = motion(seed=5) * 0.5
        cfg = VaeConfig(layers=1, heads=2, model_width=16, latent_dim=8, lambda_kl=0.0)
        opt = torch.optim.Adam(model.parameters(), lr=3e-3)
        for step in range(2000):
            if step in (1000, 1600):
                for g in opt.param_groups:
                    g["lr"] *= 1 / 3 if step == 1000 else 0.2
            mu, sigma = model.encode(target)
            recon = model.decode(mu)
            losses = vae_loss(target, recon, mu, sigma, cfg)
            opt.zero_grad()
            losses["total"].backward()
            opt.step()
        with torch.no_grad():
            mu, _ = model.encode(target)
            recon = model.decode(mu)
        mpjpe_mm = torch.linalg.vector_norm(recon - target, dim=-1).mean().item() * 1000
        assert mpjpe_mm < 1.0


class TestVaeLoss:
    def test_perfect_reconstruction_standard_posterior_is_zero(self):
        x = motion()
        mu = torch.zeros(1, 8, dtype=torch.float64)
        sigma = torch.ones(1, 8, dtype=torch.float64)
        losses = vae_loss(x, x, mu, sigma, TINY)
        assert losses["total"].item() == 0.0
        assert losses["l_mr"].item() == 0.0
        assert losses["l_kl"].item() == 0.0

    def test_kl_closed_form_unit_mean(self):
        # KL(N(1,1) || N(0,1)) = 0.5 per component
        mu = torch.tensor([[1.0] + [0.0] * 7], dtype=torch.float64)
        sigma = torch.ones(1, 8, dtype=torch.float64)
        losses = vae_loss(motion(), motion(), mu, sigma, TINY)
        assert abs(losses["l_kl"].item() - 0.5) < 1e-12

    def test_doubling_lambda_kl_doubles_kl_contribution(self):
        x, y = motion(seed=1), motion(seed=2)
        mu = torch.full((1, 8), 0.3, dtype=torch.float64)
        sigma = torch.full((1, 8), 0.8, dtype=torch.float64)
        base = vae_loss(x, y, mu, sigma, TINY)
        doubled_cfg = VaeConfig(layers=1, heads=2, model_width=16, latent_dim=8,
                                lambda_kl=2 * TINY.lambda_kl)
        doubled = vae_loss(x, y, mu, sigma, doubled_cfg)
        kl_part = base["total"] - TINY.lambda_mr * base["l_mr"]
        kl_part_doubled = doubled["total"] - TINY.lambda_mr * doubled["l_mr"]
        assert torch.allclose(kl_part_doubled, 2 * kl_part)

    def test_hand_computed_l_mr(self):
        # one joint offset by (3,4,0) mm in one frame of one joint -> 5 mm mean distance
        x = torch.zeros(1, 1, 1, 3, dtype=torch.float64)
        y = torch.tensor([[[[0.003, 0.004, 0.0]]]], dtype=torch.float64)
        losses = vae_loss(x, y, torch.zeros(1, 8), torch.ones(1, 8), TINY)
        assert abs(losses["l_mr"].item() - 0.005) < 1e-15

    def test_non_finite_raises(self):
        x = motion()
        bad = x.clone()
        bad[0, 0, 0, 0] = float("nan")
        with pytest.raises(NonFiniteLoss):
            vae_loss(x, bad, torch.zeros(1, 8), torch.ones(1, 8), TINY)


class TestKlProperties:
    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=4, max_size=4),
           st.lists(st.floats(0.05, 3), min_size=4, max_size=4))
    def test_kl_nonnegative(self, mu, sigma):
        kl = kl_standard_normal(torch.tensor([mu], dtype=torch.float64),
                                torch.tensor([sigma], dtype=torch.float64))
        assert kl.item() >= -1e-12

    def test_kl_zero_iff_standard(self):
        kl = kl_standard_normal(torch.zeros(1, 6, dtype=torch.float64),
                                torch.ones(1, 6, dtype=torch.float64))
        assert abs(kl.item()) < 1e-12
        kl_off = kl_standard_normal(torch.full((1, 6), 0.1, dtype=torch.float64),
                                    torch.ones(1, 6, dtype=torch.float64))
        assert kl_off.item() > 1e-12


class TestGradients:
    def test_total_loss_matches_finite_differences(self):
        model = tiny_vae(seed=7)
        target = motion(seed=11)
        eps = torch.randn(1, 8, generator=torch.Generator().manual_seed(13), dtype=torch.float64)

        def build_loss():
            mu, sigma = model.encode(target)
            recon = model.decode(reparameterize(mu, sigma, eps))
            return vae_loss(target, recon, mu, sigma, TINY)["total"]

        max_rel = fd_gradient_check(build_loss, list(model.parameters()), n_probes=220)
        assert max_rel < 1e-4
