import numpy as np
import pytest

from activesysid.rng import RngStream


def test_same_seed_same_sequence():
    a = RngStream(123).normal(size=100)
    b = RngStream(123).normal(size=100)
    assert np.array_equal(a, b)


def test_different_seeds_differ():
    assert not np.array_equal(RngStream(1).normal(size=10), RngStream(2).normal(size=10))


def test_substream_deterministic():
    a = RngStream(7).substream("planner", 3).normal(size=16)
    b = RngStream(7).substream("planner", 3).normal(size=16)
    assert np.array_equal(a, b)


def test_substream_independent_of_parent_consumption():
    parent = RngStream(7)
    parent.normal(size=1000)  # consuming the parent must not shift children
    a = parent.substream("x").normal(size=8)
    b = RngStream(7).substream("x").normal(size=8)
    assert np.array_equal(a, b)


def test_substream_keys_distinguish():
    base = RngStream(7)
    assert not np.array_equal(
        base.substream("a").normal(size=8), base.substream("b").normal(size=8)
    )
    assert not np.array_equal(
        base.substream("a", 0).normal(size=8), base.substream("a", 1).normal(size=8)
    )


def test_nested_substreams():
    a = RngStream(1).substream("x").substream(4).normal(size=4)
    b = RngStream(1).substream("x").substream(4).normal(size=4)
    assert np.array_equal(a, b)


def test_rejects_negative_key():
    with pytest.raises(ValueError):
        RngStream(1).substream(-1)


def test_uniform_bounds():
    draws = RngStream(3).uniform(-2.0, 2.0, size=1000)
    assert draws.min() >= -2.0 and draws.max() <= 2.0
