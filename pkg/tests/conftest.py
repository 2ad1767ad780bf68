import numpy as np
import pytest
import torch

from agppo.nets import NetConfig, init_params

SMALL = NetConfig(conv_channels=(3, 4, 5), hidden=(6, 5))


def central_difference(loss_fn, param: torch.Tensor, indices, h: float = 1e-4) -> np.ndarray:
    """Finite-difference derivative of ``loss_fn()`` w.r.t. selected entries of ``param``."""
    flat = param.data.view(-1)
    grads = []
    with torch.no_grad():
        for i in indices:
            orig = flat[i].item()
            flat[i] = orig + h
            up = loss_fn().item()
            flat[i] = orig - h
            down = loss_fn().item()
            flat[i] = orig
            grads.append((up - down) / (2 * h))
    return np.asarray(grads)


def gradient_check(loss_fn, params, n_entries: int = 6, seed: int = 0) -> float:
    """Worst relative error between autograd and central differences over ``params``."""
    rng = np.random.default_rng(seed)
    for p in params:
        p.grad = None
    loss_fn().backward()
    worst = 0.0
    for p in params:
        idx = rng.choice(p.numel(), size=min(n_entries, p.numel()), replace=False)
        analytic = p.grad.view(-1)[idx].numpy()
        numeric = central_difference(loss_fn, p, idx)
        # floor: some gradients are identically zero (e.g. the attention key bias)
        scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-6)
        worst = max(worst, np.linalg.norm(analytic - numeric) / scale)
    return worst


@pytest.fixture
def small_nets():
    def make(aux_width=0, seed=0):
        cfg = NetConfig(conv_channels=SMALL.conv_channels, hidden=SMALL.hidden, aux_width=aux_width)
        nets = init_params(seed, cfg, dtype=torch.float64)
        # perturb biases away from zero so ReLU kinks are not hit exactly
        gen = torch.Generator().manual_seed(seed + 100)
        with torch.no_grad():
            for p in nets.parameters():
                p.add_(0.05 * torch.randn(p.shape, generator=gen, dtype=p.dtype))
        return nets

    return make


@pytest.fixture
def random_obs():
    rng = np.random.default_rng(42)
    return rng.integers(0, 5, size=(4, 7, 7, 3)) / 4.0


# acceptance criteria append (number, passed, detail) here; summarised at the end of the run
ACCEPTANCE_RESULTS: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
