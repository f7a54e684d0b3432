from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np
import pytest
import torch

from src.models.layout import MixLayout
from src.processors.puzzle import identity_layout, inverse_mix, make_layout, mix, mix_labels


def _with_assignment(h: int, w: int, n: int, assignment: tuple[int, ...]) -> MixLayout:
    base = make_layout(h, w, n, np.random.default_rng(0))
    return dataclasses.replace(base, assignment=assignment)


def _balanced_assignments(n: int) -> list[tuple[int, ...]]:
    cells = n * n
    ones = math.ceil(cells / 2)
    return [
        tuple(1 if j in chosen else 0 for j in range(cells))
        for chosen in itertools.combinations(range(cells), ones)
    ]


def test_layout_bounds_for_two_and_three():
    rng = np.random.default_rng(0)
    two = make_layout(256, 256, 2, rng)
    assert two.row_bounds == (0, 128, 256)
    assert two.col_bounds == (0, 128, 256)

    three = make_layout(256, 256, 3, rng)
    sizes = np.diff(three.row_bounds).tolist()
    assert sizes == [85, 85, 86]
    assert len(three.patches()) == 9


def test_single_cell_layout_covers_image():
    layout = make_layout(10, 12, 1, np.random.default_rng(0))
    assert layout.row_bounds == (0, 10)
    assert layout.col_bounds == (0, 12)
    assert layout.assignment == (1,)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_assignment_is_balanced(n: int):
    rng = np.random.default_rng(n)
    for _ in range(20):
        layout = make_layout(20, 20, n, rng)
        assert len(layout.assignment) == n * n
        assert sum(layout.assignment) == math.ceil(n * n / 2)
        assert all(b > a for a, b in zip(layout.row_bounds, layout.row_bounds[1:]))


def test_layout_is_reproducible_from_seed():
    a = [make_layout(16, 16, 3, np.random.default_rng(7)).encode() for _ in range(3)]
    assert len(set(a)) == 1


def test_all_balanced_assignments_are_reachable():
    rng = np.random.default_rng(0)
    seen = {make_layout(4, 4, 2, rng).assignment for _ in range(400)}
    assert seen == set(_balanced_assignments(2))


def test_grid_larger_than_image_is_rejected():
    with pytest.raises(ValueError):
        _ = make_layout(4, 4, 5, np.random.default_rng(0))


def test_extreme_assignments():
    xl = np.full((1, 6, 6), 0.25, dtype=np.float32)
    xu = np.full((1, 6, 6), 0.75, dtype=np.float32)
    ones = _with_assignment(6, 6, 2, (1, 1, 1, 1))
    a, b = mix(xl, xu, ones)
    np.testing.assert_array_equal(a, xl)
    np.testing.assert_array_equal(b, xu)

    zeros = _with_assignment(6, 6, 2, (0, 0, 0, 0))
    a, b = mix(xl, xu, zeros)
    np.testing.assert_array_equal(a, xu)
    np.testing.assert_array_equal(b, xl)
    np.testing.assert_array_equal(inverse_mix(a, b, zeros), a)


def test_diagonal_assignment_places_labeled_quadrants():
    xl = np.full((1, 4, 4), 1.0, dtype=np.float32)
    xu = np.zeros((1, 4, 4), dtype=np.float32)
    layout = _with_assignment(4, 4, 2, (1, 0, 0, 1))
    a, b = mix(xl, xu, layout)
    expected = np.zeros((4, 4), dtype=np.float32)
    expected[:2, :2] = 1.0
    expected[2:, 2:] = 1.0
    np.testing.assert_array_equal(a[0], expected)
    np.testing.assert_array_equal(b[0], 1.0 - expected)


def test_mix_labels_checkerboard():
    yl = np.zeros((4, 4), dtype=np.int64)
    yu = np.ones((4, 4), dtype=np.int64)
    layout = _with_assignment(4, 4, 2, (1, 0, 0, 1))
    ya, yb = mix_labels(yl, yu, layout)
    np.testing.assert_array_equal(ya, [[0, 0, 1, 1], [0, 0, 1, 1], [1, 1, 0, 0], [1, 1, 0, 0]])
    np.testing.assert_array_equal(yb, 1 - ya)


@pytest.mark.parametrize("assignment", _balanced_assignments(2))
def test_inverse_mix_recovers_unlabeled_content_exhaustively(assignment: tuple[int, ...]):
    rng = np.random.default_rng(sum(assignment[i] << i for i in range(4)))
    xl = rng.random((1, 4, 4)).astype(np.float32)
    xu = rng.random((1, 4, 4)).astype(np.float32)
    layout = _with_assignment(4, 4, 2, assignment)
    a, b = mix(xl, xu, layout)
    np.testing.assert_array_equal(inverse_mix(a, b, layout), xu)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_roundtrip_on_tensors_with_batch_axes(n: int):
    gen = torch.Generator().manual_seed(n)
    xl = torch.rand(2, 3, 9, 11, generator=gen)
    xu = torch.rand(2, 3, 9, 11, generator=gen)
    layout = make_layout(9, 11, n, np.random.default_rng(n))
    a, b = mix(xl, xu, layout)
    assert torch.equal(inverse_mix(a, b, layout), xu)


def test_mix_conserves_pixels_and_is_complementary():
    rng = np.random.default_rng(5)
    xl = rng.random((1, 7, 7))
    xu = rng.random((1, 7, 7)) + 2.0
    layout = make_layout(7, 7, 3, rng)
    a, b = mix(xl, xu, layout)
    np.testing.assert_array_equal(
        np.sort(np.concatenate([a.ravel(), b.ravel()])),
        np.sort(np.concatenate([xl.ravel(), xu.ravel()])),
    )
    # Every pixel of a comes from the opposite source of the same pixel in b
    assert np.all((a >= 2.0) != (b >= 2.0))


def test_labels_follow_image_provenance():
    rng = np.random.default_rng(9)
    xl = np.zeros((1, 8, 8))
    xu = np.ones((1, 8, 8))
    yl = np.zeros((8, 8), dtype=np.int64)
    yu = np.ones((8, 8), dtype=np.int64)
    layout = make_layout(8, 8, 3, rng)
    a, _ = mix(xl, xu, layout)
    ya, _ = mix_labels(yl, yu, layout)
    np.testing.assert_array_equal(a[0].astype(np.int64), ya)


def test_mix_keeps_gradients():
    pa = torch.rand(1, 3, 4, 4, requires_grad=True)
    pb = torch.rand(1, 3, 4, 4, requires_grad=True)
    layout = _with_assignment(4, 4, 2, (1, 1, 0, 0))
    inverse_mix(pa, pb, layout).sum().backward()
    assert pa.grad is not None and pb.grad is not None
    assert pa.grad[..., 2:, :].eq(1).all() and pa.grad[..., :2, :].eq(0).all()
    assert pb.grad[..., :2, :].eq(1).all() and pb.grad[..., 2:, :].eq(0).all()


def test_identity_layout_is_plain_pairing():
    xl = np.zeros((1, 5, 5))
    xu = np.ones((1, 5, 5))
    a, b = mix(xl, xu, identity_layout(5, 5))
    np.testing.assert_array_equal(a, xl)
    np.testing.assert_array_equal(b, xu)


def test_shape_mismatch_is_rejected():
    layout = make_layout(4, 4, 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        _ = mix(np.zeros((1, 4, 4)), np.zeros((1, 4, 5)), layout)
    with pytest.raises(ValueError):
        _ = mix(np.zeros((1, 6, 6)), np.zeros((1, 6, 6)), layout)
