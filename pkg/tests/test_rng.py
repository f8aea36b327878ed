import numpy as np
import pytest

from streamkm.rng import Xorshift64Star, derive_seed, splitmix64


def test_same_seed_same_stream():
    a, b = Xorshift64Star(42), Xorshift64Star(42)
    assert [a.next_u64() for _ in range(20)] == [b.next_u64() for _ in range(20)]


def test_zero_seed_is_usable():
    g = Xorshift64Star(0)
    assert len({g.next_u64() for _ in range(100)}) == 100


def test_derived_streams_differ():
    assert derive_seed(1, 2) != derive_seed(1, 3)
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
    assert Xorshift64Star.derive(5, 1).next_u64() != Xorshift64Star.derive(5, 2).next_u64()


def test_splitmix_is_64_bit():
    for x in (0, 1, 2**64 - 1):
        assert 0 <= splitmix64(x) < 2**64


def test_uniform_moments():
    u = Xorshift64Star(7).random_array(20000)
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.01
    assert abs(u.var() - 1 / 12) < 0.005


def test_integers_in_range_and_balanced():
    counts = np.bincount(Xorshift64Star(3).integers_array(7, 14000), minlength=7)
    assert counts.sum() == 14000 and len(counts) == 7
    assert np.all(np.abs(counts - 2000) < 200)


def test_integers_rejects_nonpositive():
    with pytest.raises(ValueError):
        Xorshift64Star(1).integers(0)


def test_normal_moments():
    z = Xorshift64Star(11).normal_array((20000,))
    assert abs(z.mean()) < 0.03
    assert abs(z.std() - 1) < 0.03
