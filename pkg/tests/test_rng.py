"""The seeded generator every randomized piece of the library shares."""

import numpy as np
import pytest

from descent_lab import SplitMix64


def test_reference_stream_from_seed_zero():
    # First three outputs of the standard splitmix64 finalizer; these pin
    # the exact bit stream that every seeded experiment depends on.
    rng = SplitMix64(0)
    assert [rng.next_uint64() for _ in range(3)] == [
        16294208416658607535,
        7960286522194355700,
        487617019471545679,
    ]


def test_same_seed_same_stream():
    a = SplitMix64(2024)
    b = SplitMix64(2024)
    assert [a.next_uint64() for _ in range(10)] == [b.next_uint64() for _ in range(10)]
    assert not np.array_equal(SplitMix64(1).normals(8), SplitMix64(2).normals(8))


def test_uniform_range_and_determinism():
    rng = SplitMix64(99)
    draws = [rng.uniform() for _ in range(1000)]
    assert all(0.0 <= u < 1.0 for u in draws)
    replay = SplitMix64(99)
    assert draws == [replay.uniform() for _ in range(1000)]


def test_below_covers_range_without_bias_holes():
    rng = SplitMix64(7)
    seen = {rng.below(5) for _ in range(500)}
    assert seen == {0, 1, 2, 3, 4}
    with pytest.raises(ValueError):
        rng.below(0)


def test_normals_shape_and_moments():
    sample = SplitMix64(123).normals((200, 5))
    assert sample.shape == (200, 5)
    # Loose sanity on the Box-Muller output, not a statistical test.
    assert abs(sample.mean()) < 0.1
    assert abs(sample.std() - 1.0) < 0.1


def test_normal_stream_is_flat_order_independent():
    # normals() must consume the stream exactly like repeated normal() calls.
    rng = SplitMix64(55)
    flat = [rng.normal() for _ in range(6)]
    np.testing.assert_array_equal(SplitMix64(55).normals((2, 3)).ravel(), flat)
