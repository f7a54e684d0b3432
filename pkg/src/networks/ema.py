"""Exponential moving average teacher update."""

from __future__ import annotations

import copy

import torch
import torch.nn as nn


def create_teacher(student: nn.Module) -> nn.Module:
    """Teacher initialised as an exact copy of the student, excluded from autograd."""
    teacher = copy.deepcopy(student)
    for param in teacher.parameters():
        param.requires_grad_(False)
    _ = teacher.eval()
    return teacher


@torch.no_grad()
def ema_update(teacher: nn.Module, student: nn.Module, ema_lambda: float) -> None:
    """``teacher = lambda * teacher + (1 - lambda) * student`` for every named tensor.

    Floating point buffers (batch-norm running statistics) follow the same
    recurrence; integer buffers are copied from the student.

    Raises:
        ValueError: If lambda is outside [0, 1] or the state dicts differ
    """
    if not 0.0 <= ema_lambda <= 1.0:
        raise ValueError(f"EMA lambda must lie in [0, 1], got {ema_lambda}")

    t_state = teacher.state_dict(keep_vars=True)
    s_state = student.state_dict(keep_vars=True)
    if t_state.keys() != s_state.keys():
        missing = sorted(set(t_state) ^ set(s_state))
        raise ValueError(f"Teacher and student tensors differ by name: {missing}")

    for name, t_tensor in t_state.items():
        s_tensor = s_state[name]
        if t_tensor.shape != s_tensor.shape:
            raise ValueError(
                f"Shape mismatch for {name}: {tuple(t_tensor.shape)} vs {tuple(s_tensor.shape)}"
            )
        if t_tensor.is_floating_point():
            t_tensor.data.mul_(ema_lambda).add_(s_tensor.data, alpha=1.0 - ema_lambda)
        else:
            t_tensor.data.copy_(s_tensor.data)
