from __future__ import annotations

import math

import pytest
import torch

from src.errors import DivergenceError
from src.losses.objectives import (
    DICE_SMOOTH,
    cross_entropy,
    dice_loss,
    guidance_loss,
    seg_loss,
    total_loss,
)
from src.losses.ssim import ssim_index, ssim_loss
from src.models.config import LossWeights, SsimParams
from src.models.losses import LossValues


def _images(seed: int, shape: tuple[int, ...] = (1, 1, 24, 24)) -> tuple[torch.Tensor, torch.Tensor]:
    gen = torch.Generator().manual_seed(seed)
    return (
        torch.rand(*shape, generator=gen, dtype=torch.float64),
        torch.rand(*shape, generator=gen, dtype=torch.float64),
    )


def test_ssim_loss_of_identical_images_is_zero():
    x, _ = _images(0)
    assert abs(float(ssim_loss(x, x))) < 1e-6


def test_ssim_of_constant_zero_and_one_has_closed_form():
    p = SsimParams()
    zero = torch.zeros(1, 1, 16, 16, dtype=torch.float64)
    one = torch.ones(1, 1, 16, 16, dtype=torch.float64)
    c1 = (p.k1 * p.dynamic_range) ** 2
    # Means 0 and 1, no variance: only the stabilizing constants remain
    expected = c1 / (1.0 + c1)
    assert float(ssim_index(zero, one, p)) == pytest.approx(expected, abs=1e-9)
    assert float(ssim_loss(zero, one)) == pytest.approx(1.0 - expected, abs=1e-9)


def test_ssim_is_symmetric_and_loss_bounded():
    p = SsimParams()
    for seed in range(5):
        x, y = _images(seed)
        assert float(ssim_index(x, y, p)) == pytest.approx(float(ssim_index(y, x, p)), abs=1e-12)
        loss = float(ssim_loss(x, y))
        assert 0.0 <= loss <= 2.0


def test_ssim_accepts_unbatched_images():
    x, y = _images(1, (1, 16, 16))
    assert float(ssim_index(x, y, SsimParams())) == pytest.approx(
        float(ssim_index(x[None], y[None], SsimParams()))
    )


def test_ssim_gradient_reaches_proxy_only():
    x, y = _images(2)
    proxy = x.clone().requires_grad_(True)
    target = y.clone().requires_grad_(True)
    ssim_loss(proxy, target).backward()
    assert proxy.grad is not None and proxy.grad.abs().sum() > 0
    assert target.grad is None


def test_ssim_rejects_small_images_and_bad_windows():
    x = torch.rand(1, 1, 8, 8)
    with pytest.raises(ValueError):
        _ = ssim_loss(x, x)
    with pytest.raises(ValueError):
        _ = ssim_loss(x, x, SsimParams(window_size=4))
    with pytest.raises(ValueError):
        _ = ssim_loss(x, torch.rand(1, 1, 8, 9))


def test_uniform_prediction_cross_entropy_is_log_k():
    pred = torch.full((4, 5, 5), 0.25)
    target = torch.randint(0, 4, (5, 5), generator=torch.Generator().manual_seed(0))
    assert float(cross_entropy(pred, target)) == pytest.approx(math.log(4), rel=1e-6)


def test_perfect_prediction_loss_is_near_zero():
    target = torch.randint(0, 3, (2, 6, 6), generator=torch.Generator().manual_seed(1))
    pred = torch.nn.functional.one_hot(target, 3).permute(0, 3, 1, 2).double()
    assert float(seg_loss(pred, target)) < 1e-6


def test_disjoint_hard_prediction_dice_is_one():
    target = torch.zeros(6, 6, dtype=torch.long)
    pred = torch.zeros(2, 6, 6, dtype=torch.float64)
    pred[1] = 1.0
    assert float(dice_loss(pred, target)) == pytest.approx(1.0, abs=DICE_SMOOTH)


def test_seg_loss_gradient_matches_finite_differences():
    gen = torch.Generator().manual_seed(2)
    for _ in range(3):
        logits = torch.randn(3, 4, 4, generator=gen, dtype=torch.float64, requires_grad=True)
        target = torch.randint(0, 3, (4, 4), generator=gen)
        assert torch.autograd.gradcheck(
            lambda z: seg_loss(torch.softmax(z, dim=0), target),
            (logits,),
            eps=1e-6,
            atol=1e-8,
            rtol=1e-4,
        )


def test_seg_loss_rejects_out_of_range_labels():
    pred = torch.full((3, 4, 4), 1 / 3)
    target = torch.full((4, 4), 3, dtype=torch.long)
    with pytest.raises(ValueError):
        _ = seg_loss(pred, target)
    with pytest.raises(ValueError):
        _ = seg_loss(pred, torch.zeros(4, 5, dtype=torch.long))


def test_guidance_loss_values():
    x = torch.rand(3, 4, 4)
    assert float(guidance_loss(x, x.clone())) == 0.0

    student = torch.zeros(2, 5, 5)
    teacher = torch.zeros(2, 5, 5)
    teacher[1, 2, 3] = 1.0
    assert float(guidance_loss(student, teacher)) == pytest.approx(1 / 50)


def test_guidance_loss_gradient_flows_only_to_student():
    student = torch.rand(3, 4, 4, requires_grad=True)
    teacher = torch.rand(3, 4, 4, requires_grad=True)
    guidance_loss(student, teacher).backward()
    assert student.grad is not None
    assert teacher.grad is None


def test_total_loss_weighted_sum():
    w = LossWeights(alpha=0.01, beta=0.01)
    one = torch.tensor(1.0, dtype=torch.float64)
    total = total_loss(one, one, torch.tensor(0.5, dtype=torch.float64), torch.tensor(0.2, dtype=torch.float64), w)
    assert float(total) == pytest.approx(1.007, abs=1e-12)

    zero = torch.tensor(0.0)
    assert float(total_loss(zero, zero, zero, zero, w)) == 0.0
    assert float(total_loss(torch.tensor(2.0), torch.tensor(4.0), torch.tensor(9.0), torch.tensor(9.0), LossWeights(0.0, 0.0))) == 3.0


def test_total_loss_rejects_non_finite_components():
    finite = torch.tensor(1.0)
    with pytest.raises(DivergenceError) as info:
        _ = total_loss(finite, finite, torch.tensor(float("nan")), finite, LossWeights())
    assert "l_rec" in info.value.snapshot


def test_loss_values_assemble_exactly():
    w = LossWeights(alpha=0.01, beta=0.01)
    values = LossValues.assemble(1.0, 1.0, 0.5, 0.2, w)
    assert values.l_all == (1.0 + 1.0) / 2 + 0.01 * 0.5 + 0.01 * 0.2
    assert list(values.as_row()) == ["l_a", "l_b", "l_rec", "l_g", "l_all"]
