import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from padlens.tensor import (FeatureMap, KernelSet, accumulate_mean, channel_mean,
                            format_csv, read_csv, write_csv)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_channel_mean_two_values():
    out = channel_mean(np.array([2.0, 4.0]).reshape(2, 1, 1))
    assert out.shape == (1, 1, 1)
    assert out.data[0, 0, 0] == 3.0


def test_channel_mean_single_channel_is_identity(rng):
    x = FeatureMap(rng.normal(size=(1, 4, 5)))
    assert channel_mean(x) == x


def test_channel_mean_constant():
    out = channel_mean(np.full((3, 2, 2), 5.0))
    np.testing.assert_array_equal(out.data, np.full((1, 2, 2), 5.0))


def test_accumulate_mean_examples():
    assert accumulate_mean([[[1.0]], [[3.0]]]).data[0, 0, 0] == 2.0
    x = FeatureMap(np.arange(6.0).reshape(1, 2, 3))
    assert accumulate_mean([x]) == x
    maps = [np.full((2, 3, 3), 2.5)] * 30
    np.testing.assert_array_equal(accumulate_mean(maps).data, np.full((2, 3, 3), 2.5))
    # non-dyadic constants pick up rounding from the left-to-right sum
    maps = [np.full((2, 3, 3), 0.7)] * 30
    np.testing.assert_allclose(accumulate_mean(maps).data, 0.7, rtol=1e-14)


def test_accumulate_mean_shape_mismatch_names_index():
    with pytest.raises(ValueError, match="map 2"):
        accumulate_mean([np.zeros((1, 2, 2)), np.zeros((1, 2, 2)), np.zeros((1, 3, 2))])


def test_accumulate_mean_deterministic(rng):
    maps = [rng.normal(size=(2, 5, 5)) for _ in range(17)]
    a, b = accumulate_mean(maps), accumulate_mean(list(maps))
    assert a.data.tobytes() == b.data.tobytes()


def test_accumulate_mean_permutation(rng):
    maps = [rng.normal(size=(2, 5, 5)) for _ in range(17)]
    a = accumulate_mean(maps).data
    b = accumulate_mean(maps[::-1]).data
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


@settings(max_examples=50)
@given(arrays(np.float64, (3, 4, 5), elements=finite), arrays(np.float64, (3, 4, 5), elements=finite),
       st.floats(-10, 10), st.floats(-10, 10))
def test_channel_mean_linear(x, y, a, b):
    lhs = channel_mean(a * x + b * y).data
    rhs = a * channel_mean(x).data + b * channel_mean(y).data
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-6)


def test_feature_map_invariants():
    with pytest.raises(ValueError):
        FeatureMap(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        FeatureMap(np.zeros((1, 0, 3)))
    fm = FeatureMap(np.zeros((2, 3)))
    assert (fm.channels, fm.height, fm.width) == (1, 2, 3)
    with pytest.raises(ValueError):
        fm.data[0, 0, 0] = 1.0


def test_kernel_set_shapes():
    ks = KernelSet(np.zeros((4, 3, 3, 5)), np.zeros(4))
    assert (ks.out_channels, ks.in_channels, ks.kernel_h, ks.kernel_w) == (4, 3, 3, 5)
    with pytest.raises(ValueError):
        KernelSet(np.zeros((4, 3, 3, 3)), np.zeros(3))


def test_csv_format_and_roundtrip(tmp_path, rng):
    text = format_csv(np.array([[1.0, 0.1], [1e20, -2.5]]))
    assert text == "1,0.10000000000000001\n1e+20,-2.5\n"
    grid = rng.normal(size=(4, 6))
    write_csv(tmp_path / "m.csv", grid)
    raw = (tmp_path / "m.csv").read_bytes()
    assert b"\r" not in raw
    np.testing.assert_array_equal(read_csv(tmp_path / "m.csv"), grid)


def test_csv_rejects_multichannel():
    with pytest.raises(ValueError):
        format_csv(np.zeros((2, 2, 2)))
