from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.ndimage import map_coordinates

from padlens.padding import (CIRCULAR, DISTRIBUTION, REFLECT, REPLICATE, SYMMETRIC, ZERO,
                             PaddingError, PaddingMode, distribution_pad, pad, pad_adjoint,
                             pad_array, parse_mode, same_amounts)

ROW = np.array([[[1.0, 2.0, 3.0, 4.0]]])
NP_MODES = {ZERO: "constant", CIRCULAR: "wrap", SYMMETRIC: "symmetric",
            REFLECT: "reflect", REPLICATE: "edge"}


@pytest.mark.parametrize("mode,expected", [
    ("zero", [0, 0, 1, 2, 3, 4, 0, 0]),
    ("circular", [3, 4, 1, 2, 3, 4, 1, 2]),
    ("symmetric", [2, 1, 1, 2, 3, 4, 4, 3]),
    ("reflect", [3, 2, 1, 2, 3, 4, 3, 2]),
    ("replicate", [1, 1, 1, 2, 3, 4, 4, 4]),
])
def test_one_dimensional_examples(mode, expected):
    out, _ = pad(ROW, mode, (0, 0, 2, 2))
    assert out.data[0, 0].tolist() == expected


@pytest.mark.parametrize("mode", list(NP_MODES))
def test_matches_numpy_pad(mode, rng):
    x = rng.normal(size=(2, 5, 6))
    amounts = (2, 1, 3, 0)
    out, _ = pad(x, mode, amounts)
    ref = np.pad(x, ((0, 0), (2, 1), (3, 0)), mode=NP_MODES[mode])
    np.testing.assert_array_equal(out.data, ref)


@pytest.mark.parametrize("mode", [CIRCULAR, SYMMETRIC, REFLECT, REPLICATE])
def test_padded_values_equal_their_sources(mode, rng):
    x = rng.normal(size=(1, 6, 5))
    out, src = pad(x, mode, (3, 2, 1, 4))
    for y in range(out.height):
        for xx in range(out.width):
            r, c = src.source(y, xx)
            assert out.data[0, y, xx] == x[0, r, c]


def test_zero_padding_sources_are_synthetic():
    out, src = pad(np.ones((1, 3, 3)), ZERO, (1, 1, 1, 1))
    assert src.source(0, 0) is None
    assert src.source(1, 1) == (0, 0)


@pytest.mark.parametrize("mode", ["zero", "full", "circular", "symmetric", "reflect",
                                  "replicate", "partialconv", "distribution", "valid"])
def test_zero_amounts_identity(mode, rng):
    x = rng.normal(size=(2, 4, 3))
    out, _ = pad(x, mode, (0, 0, 0, 0))
    np.testing.assert_array_equal(out.data, x)


def test_symmetric_equals_replicate_at_width_one(rng):
    for _ in range(100):
        h, w = rng.integers(1, 9, size=2)
        x = rng.normal(size=(1, h, w))
        a, _ = pad(x, SYMMETRIC, (1, 1, 1, 1))
        b, _ = pad(x, REPLICATE, (1, 1, 1, 1))
        assert a == b


@pytest.mark.parametrize("mode", ["circular", "symmetric", "reflect", "replicate", "distribution"])
def test_constant_preserved(mode):
    out, _ = pad(np.full((1, 4, 4), 2.5), mode, (2, 3, 1, 2))
    assert np.all(out.data == 2.5)


def test_zero_modes_keep_only_zero_constants():
    out, _ = pad(np.full((1, 3, 3), 2.0), ZERO, (1, 1, 1, 1))
    assert out.data.min() == 0 and out.data.max() == 2
    out, _ = pad(np.zeros((1, 3, 3)), ZERO, (1, 1, 1, 1))
    assert np.all(out.data == 0)


@pytest.mark.parametrize("mode,amount,dim", [
    ("reflect", 3, 3), ("symmetric", 4, 3), ("replicate", 4, 3), ("circular", 4, 3)])
def test_amount_bounds(mode, amount, dim):
    with pytest.raises(PaddingError, match="exceeds"):
        pad(np.zeros((1, dim, dim)), mode, (amount, 0, 0, 0))


def test_bounds_at_limit_are_accepted():
    pad(np.zeros((1, 3, 3)), "reflect", (2, 2, 2, 2))
    pad(np.zeros((1, 3, 3)), "symmetric", (3, 3, 3, 3))


def test_valid_rejects_amounts():
    with pytest.raises(PaddingError):
        PaddingMode("valid", (1, 0, 0, 0))
    with pytest.raises(PaddingError):
        pad(np.zeros((1, 3, 3)), "valid", (1, 1, 1, 1))


def test_parse_mode_names():
    assert parse_mode("symmetric") == SYMMETRIC
    assert parse_mode("partialconv") == "partial_conv"
    with pytest.raises(PaddingError):
        parse_mode("mirror")


@pytest.mark.parametrize("k,d,expected", [
    (3, 1, (1, 1, 1, 1)),
    (3, 2, (2, 2, 2, 2)),
    (2, 1, (0, 1, 0, 1)),
    ((5, 3), 1, (2, 2, 1, 1)),
])
def test_same_amounts(k, d, expected):
    assert same_amounts(k, d) == expected


def test_same_amounts_rejects_stride():
    with pytest.raises(PaddingError):
        same_amounts(3, 1, stride=2)


# --- distribution padding ----------------------------------------------------

def bilinear_oracle(grid, out_h, out_w):
    """Corner-aligned bilinear resize through scipy's linear spline sampler."""
    h, w = grid.shape
    ys = np.array([q * (h - 1) / max(out_h - 1, 1) for q in range(out_h)])
    xs = np.array([q * (w - 1) / max(out_w - 1, 1) for q in range(out_w)])
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return map_coordinates(grid, [yy, xx], order=1, mode="nearest")


def test_distribution_two_by_two():
    x = np.array([[0.0, 1.0], [2.0, 3.0]])
    out = distribution_pad(x, (1, 1, 1, 1)).data[0]
    # frozen from the scipy oracle: the resize of this linear ramp is 2*y/3 + x/3
    t = 1 / 3
    expected = np.array([
        [0, t, 2 * t, 1],
        [2 * t, 0, 1, 5 * t],
        [4 * t, 2, 3, 7 * t],
        [2, 7 * t, 8 * t, 3],
    ])
    oracle = bilinear_oracle(x, 4, 4)
    oracle[1:3, 1:3] = x
    np.testing.assert_allclose(oracle, expected, rtol=0, atol=1e-15)
    np.testing.assert_allclose(out, expected, rtol=0, atol=1e-15)


def test_distribution_matches_bilinear_oracle(rng):
    x = rng.normal(size=(5, 7))
    amounts = (2, 1, 3, 2)
    out = distribution_pad(x, amounts).data[0]
    ref = bilinear_oracle(x, 8, 12)
    ref[2:7, 3:10] = x
    np.testing.assert_allclose(out, ref, rtol=1e-13, atol=1e-13)


def test_distribution_degenerate_and_constant():
    out = distribution_pad(np.array([[4.0]]), (1, 1, 1, 1)).data
    np.testing.assert_array_equal(out, np.full((1, 3, 3), 4.0))
    out = distribution_pad(np.full((3, 4), -1.5), (2, 1, 1, 3)).data
    assert np.all(out == -1.5)


# --- adjoint -----------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.sampled_from([ZERO, CIRCULAR, SYMMETRIC, REFLECT, REPLICATE, DISTRIBUTION]),
       st.integers(3, 6), st.integers(3, 6), st.lists(st.integers(0, 2), min_size=4, max_size=4),
       st.integers(0, 2**32 - 1))
def test_adjoint_identity(mode, h, w, amounts, seed):
    """<pad(x), g> == <x, pad_adjoint(g)> for every mode."""
    r = np.random.default_rng(seed)
    x = r.normal(size=(1, h, w))
    px = pad_array(x, mode, amounts)
    g = r.normal(size=px.shape)
    lhs = float((px * g).sum())
    rhs = float((x * pad_adjoint(g, (h, w), mode, amounts)).sum())
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))


def test_exact_pad_on_fractions():
    x = np.array([[[Fraction(1), Fraction(2)], [Fraction(3), Fraction(4)]]], dtype=object)
    out = pad_array(x, DISTRIBUTION, (1, 1, 1, 1))
    assert out[0, 0, 1] == Fraction(4, 3)
    out = pad_array(x, SYMMETRIC, (1, 1, 1, 1))
    assert out[0, 0, 0] == 1
