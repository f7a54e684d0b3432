from __future__ import annotations

import pytest
import torch
import torch.nn as nn

from src.networks.ema import create_teacher, ema_update
from src.networks.unet import DualHeadUNet, argmax_labels, forward_recon, forward_seg


@pytest.fixture
def net() -> DualHeadUNet:
    _ = torch.manual_seed(0)
    return DualHeadUNet(in_channels=1, num_classes=3, widths=(4, 8, 16)).eval()


def test_segmentation_is_a_per_pixel_simplex(net: DualHeadUNet):
    probs = forward_seg(net, torch.rand(2, 1, 16, 16))
    assert probs.shape == (2, 3, 16, 16)
    assert torch.allclose(probs.sum(dim=1), torch.ones(2, 16, 16), atol=1e-5)
    assert probs.min() >= 0 and probs.max() <= 1


def test_unbatched_input_gives_unbatched_output(net: DualHeadUNet):
    img = torch.rand(1, 16, 16)
    assert forward_seg(net, img).shape == (3, 16, 16)
    assert forward_recon(net, img).shape == (1, 16, 16)


def test_inference_is_deterministic(net: DualHeadUNet):
    img = torch.rand(1, 1, 16, 16)
    assert torch.equal(forward_seg(net, img), forward_seg(net, img.clone()))


def test_reconstruction_is_bounded(net: DualHeadUNet):
    recon = forward_recon(net, torch.rand(1, 1, 16, 16) * 10)
    assert recon.shape == (1, 1, 16, 16)
    assert recon.min() >= 0 and recon.max() <= 1


def test_multichannel_reconstruction_width():
    model = DualHeadUNet(in_channels=3, num_classes=2, widths=(4, 8)).eval()
    out = model(torch.rand(1, 3, 8, 8))
    assert out.seg_logits.shape == (1, 2, 8, 8)
    assert out.recon.shape == (1, 3, 8, 8)


def test_heads_share_the_trunk(net: DualHeadUNet):
    img = torch.rand(1, 1, 16, 16)
    seg_before = forward_seg(net, img)
    recon_before = forward_recon(net, img)
    with torch.no_grad():
        first_conv = net.encoders[0][0]
        assert isinstance(first_conv, nn.Conv2d)
        first_conv.weight.add_(0.5)
    assert not torch.equal(forward_seg(net, img), seg_before)
    assert not torch.equal(forward_recon(net, img), recon_before)


def test_input_shape_is_checked(net: DualHeadUNet):
    with pytest.raises(ValueError, match="divisible"):
        _ = forward_seg(net, torch.rand(1, 1, 18, 16))
    with pytest.raises(ValueError):
        _ = forward_seg(net, torch.rand(1, 2, 16, 16))


def test_argmax_labels():
    onehot = torch.zeros(3, 2, 2)
    onehot[2] = 1.0
    assert torch.equal(argmax_labels(onehot), torch.full((2, 2), 2))
    assert torch.equal(argmax_labels(torch.full((4, 2, 2), 0.25)), torch.zeros(2, 2, dtype=torch.long))
    p = torch.tensor([0.2, 0.5, 0.3]).view(3, 1, 1)
    assert int(argmax_labels(p)) == 1


def _filled(value: float) -> nn.Module:
    module = nn.Linear(2, 2)
    with torch.no_grad():
        for param in module.parameters():
            param.fill_(value)
    return module


def test_ema_extremes_and_formula():
    teacher, student = _filled(1.0), _filled(0.0)
    ema_update(teacher, student, 1.0)
    assert all(torch.equal(p, torch.ones_like(p)) for p in teacher.parameters())

    ema_update(teacher, student, 0.99)
    assert all(torch.allclose(p, torch.full_like(p, 0.99)) for p in teacher.parameters())

    ema_update(teacher, student, 0.0)
    assert all(torch.equal(p, torch.zeros_like(p)) for p in teacher.parameters())


def test_ema_contracts_toward_a_frozen_student():
    _ = torch.manual_seed(1)
    student = nn.Linear(3, 3)
    teacher = nn.Linear(3, 3)
    with torch.no_grad():
        for t, s in zip(teacher.parameters(), student.parameters()):
            # dyadic values keep the recurrence exact
            s.copy_(torch.round(s * 64) / 64)
            t.copy_(s + 1.0)
    for k in range(1, 6):
        ema_update(teacher, student, 0.5)
        for t, s in zip(teacher.parameters(), student.parameters()):
            assert torch.equal(t - s, torch.full_like(t, 0.5**k))


def test_ema_handles_batch_norm_buffers():
    student = DualHeadUNet(1, 2, (4, 8))
    teacher = create_teacher(student)
    _ = student.train()
    _ = student(torch.rand(2, 1, 8, 8))
    ema_update(teacher, student, 0.9)
    t_state, s_state = teacher.state_dict(), student.state_dict()
    name = "encoders.0.1.num_batches_tracked"
    assert torch.equal(t_state[name], s_state[name])
    assert not torch.equal(t_state["encoders.0.1.running_mean"], s_state["encoders.0.1.running_mean"])


def test_teacher_starts_as_frozen_copy():
    student = DualHeadUNet(1, 2, (4, 8))
    teacher = create_teacher(student)
    assert not teacher.training
    for (name, t), (_, s) in zip(teacher.named_parameters(), student.named_parameters()):
        assert torch.equal(t, s), name
        assert not t.requires_grad


def test_ema_rejects_mismatched_networks():
    with pytest.raises(ValueError):
        ema_update(nn.Linear(2, 2), nn.Linear(2, 3), 0.5)
    with pytest.raises(ValueError):
        ema_update(nn.Linear(2, 2), nn.Linear(2, 2), 1.5)
