import numpy as np
import pytest
import torch

from scenediff.config import RunConfig
from scenediff.domain import RngHandle
from scenediff.synthdata import RoomSpec, generate_dataset, write_dataset

TINY_ROOM = RoomSpec(extents=(4.0, 2.5, 4.0), obstacle_count=2, points_per_m2=40.0)


def fd_gradient_check(build_loss, params, n_probes=200, h=1e-5, seed=0,
                      cover_every_param=True):
    """Central finite differences vs. autograd on randomly probed parameters.

    Everything must already be float64. Returns the max relative error over
    probes, where the relative error uses max(|analytic|, |numerical|, 1e-3)
    as denominator so near-zero gradients compare absolutely.
    """
    params = [p for p in params if p.requires_grad]
    for p in params:
        p.grad = None
    loss = build_loss()
    loss.backward()
    analytic = [p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p) for p in params]

    gen = np.random.default_rng(seed)
    probes = []
    if cover_every_param:
        for j, p in enumerate(params):
            probes.append((j, int(gen.integers(p.numel()))))
    while len(probes) < n_probes:
        j = int(gen.integers(len(params)))
        probes.append((j, int(gen.integers(params[j].numel()))))

    max_rel = 0.0
    with torch.no_grad():
        for j, i in probes:
            flat = params[j].reshape(-1)
            orig = flat[i].item()
            flat[i] = orig + h
            loss_plus = build_loss().item()
            flat[i] = orig - h
            loss_minus = build_loss().item()
            flat[i] = orig
            numerical = (loss_plus - loss_minus) / (2 * h)
            a = analytic[j].reshape(-1)[i].item()
            rel = abs(a - numerical) / max(abs(a), abs(numerical), 1e-3)
            max_rel = max(max_rel, rel)
    return max_rel


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Small but real dataset: 10 samples covering every behavior."""
    path = tmp_path_factory.mktemp("data") / "tiny.jsonl"
    samples = generate_dataset(10, RngHandle(123), room=TINY_ROOM, T=5, dt=10)
    write_dataset(samples, path)
    return path


@pytest.fixture(scope="session")
def mini_cfg():
    """Config small enough that a short training run takes seconds."""
    return RunConfig.desk(
        latent_dim=16, vae_width=32, vae_layers=2,
        krp_width=32, krp_layers=1, mae_width=32, mae_layers=1,
        denoiser_width=32, denoiser_layers=2,
        region_points=48, diffusion_steps=12, beta_end=0.85,
        stage1_steps=40, stage2_steps=12, batch_size=8,
        train_samples=10, test_samples=4,
    )


@pytest.fixture(scope="session")
def mini_ckpts(tmp_path_factory, mini_cfg, tiny_dataset):
    """Quickly trained stage-1 and stage-2 checkpoints for pipeline tests."""
    from scenediff.training import train_diffusion, train_vae

    out = tmp_path_factory.mktemp("ckpts")
    vae_path = out / "vae.ckpt"
    model_path = out / "model.ckpt"
    train_vae(mini_cfg, tiny_dataset, out_path=vae_path)
    train_diffusion(mini_cfg, tiny_dataset, vae_path, out_path=model_path)
    return {"vae": vae_path, "model": model_path, "cfg": mini_cfg, "data": tiny_dataset}
