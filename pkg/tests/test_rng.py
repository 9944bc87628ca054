import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from copulascen.rng import SeededRng, map_row_blocks


def test_same_key_same_stream():
    a = SeededRng(42, 7).uniforms(100, 3)
    b = SeededRng(42, 7).uniforms(100, 3)
    assert a.tobytes() == b.tobytes()


def test_different_keys_differ():
    base = SeededRng(42, 7).uniforms(10, 2)
    assert not np.array_equal(base, SeededRng(43, 7).uniforms(10, 2))
    assert not np.array_equal(base, SeededRng(42, 8).uniforms(10, 2))


def test_open_interval():
    u = SeededRng(0).uniforms(50_000, 4)
    assert u.min() > 0.0 and u.max() < 1.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(1, 7), st.integers(0, 60), st.integers(1, 40))
def test_any_row_range_matches_full_stream(seed, dim, start, count):
    rng = SeededRng(seed, 3)
    full = rng.uniforms(start + count, dim)
    part = rng.uniforms(count, dim, start=start)
    assert part.tobytes() == full[start:].tobytes()


@pytest.mark.parametrize("threads, block", [(1, 7), (4, 7), (8, 1000), (3, 64)])
def test_block_mapping_is_partition_independent(threads, block):
    rng = SeededRng(9)
    ref = rng.uniforms(500, 3)
    out = map_row_blocks(lambda s, n: rng.uniforms(n, 3, s), 500, threads, block)
    assert out.tobytes() == ref.tobytes()


def test_rejects_non_integer_seed():
    with pytest.raises(TypeError):
        SeededRng(1.5)


def test_uniform_moments():
    u = SeededRng(123).uniforms(200_000, 1).ravel()
    assert abs(u.mean() - 0.5) < 0.003
    assert abs(u.var() - 1 / 12) < 0.001
