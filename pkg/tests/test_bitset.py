import numpy as np
from hypothesis import given, strategies as st

from cohortshap import bitset


@given(st.lists(st.booleans(), min_size=1, max_size=300))
def test_pack_roundtrip(flags):
    flags = np.array(flags)
    words = bitset.pack(flags)
    assert words.dtype == np.dtype("<u8")
    assert len(words) == bitset.n_words(len(flags))
    np.testing.assert_array_equal(bitset.unpack(words, len(flags)), flags)
    assert bitset.popcount(words) == flags.sum()


@given(st.lists(st.booleans(), min_size=1, max_size=200),
       st.lists(st.booleans(), min_size=1, max_size=200))
def test_and_matches_boolean_and(a, b):
    n = min(len(a), len(b))
    a, b = np.array(a[:n]), np.array(b[:n])
    got = bitset.unpack(bitset.pack(a) & bitset.pack(b), n)
    np.testing.assert_array_equal(got, a & b)


def test_bit_layout():
    flags = np.zeros(70, dtype=bool)
    flags[[0, 63, 64, 69]] = True
    w = bitset.pack(flags)
    assert w[0] == (1 | 1 << 63)
    assert w[1] == (1 | 1 << 5)


def test_full_has_no_stray_bits():
    for n in (1, 63, 64, 65, 128):
        assert bitset.popcount(bitset.full(n)) == n


def test_popcount_ints():
    v = np.arange(256)
    np.testing.assert_array_equal(bitset.popcount_ints(v), [bin(x).count("1") for x in v])
