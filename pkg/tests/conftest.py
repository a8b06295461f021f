import numpy as np
import pytest
import torch

from latres.dataset import DatasetManifest, build_dataset
from latres.restorer import LatentRestorer, RestorerConfig
from latres.vae import FeaturePrior, ImageVAE, VAEConfig

_acceptance_results: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _acceptance_results.append((name, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _acceptance_results:
        tag = "PASS" if outcome == "PASSED" else outcome
        terminalreporter.write_line(f"{tag:6s} {name}")

TOY_VAE_CFG = VAEConfig(in_channels=3, widths=(4,), latent_channels=2, downsample=2)


@pytest.fixture(scope="session")
def small_dataset():
    return build_dataset(DatasetManifest(count=12, resolution=64, seed=3))


@pytest.fixture()
def toy_vae():
    torch.manual_seed(0)
    return ImageVAE(TOY_VAE_CFG).double()


@pytest.fixture()
def toy_prior():
    torch.manual_seed(1)
    prior = FeaturePrior(
        seed=7, feature_dim=8, in_channels=3, latent_channels=2, downsample=2, widths=(4,)
    ).double()
    return prior


@pytest.fixture()
def toy_restorer():
    torch.manual_seed(2)
    return LatentRestorer(RestorerConfig(latent_channels=2, width=4, blocks=1)).double()


def trainable(module):
    return [p for p in module.parameters() if p.requires_grad]


def fd_gradients(loss_fn, params, eps=1e-6):
    """Central-difference gradients of loss_fn w.r.t. each param tensor."""
    grads = []
    with torch.no_grad():
        for p in params:
            g = torch.zeros_like(p)
            flat = p.view(-1)
            gflat = g.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + eps
                hi = float(loss_fn())
                flat[i] = orig - eps
                lo = float(loss_fn())
                flat[i] = orig
                gflat[i] = (hi - lo) / (2 * eps)
            grads.append(g)
    return grads


def gradcheck_against_fd(loss_fn, params, tol=1e-3, eps=1e-6):
    """Assert analytic gradients match central differences in relative L2."""
    loss = loss_fn()
    analytic = torch.autograd.grad(loss, params, allow_unused=True)
    analytic = [
        torch.zeros_like(p) if g is None else g for p, g in zip(params, analytic)
    ]
    numeric = fd_gradients(loss_fn, params, eps=eps)
    a = torch.cat([g.reshape(-1) for g in analytic])
    n = torch.cat([g.reshape(-1) for g in numeric])
    rel = float((a - n).norm() / max(float(n.norm()), 1e-12))
    assert rel < tol, f"gradient mismatch: relative error {rel:.3e}"
    return rel
