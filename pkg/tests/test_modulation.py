import itertools

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from hybridbf.modulation import QAM4, qam4_detect, qam4_map, random_bits, random_symbols
from hybridbf.numerics import RngStream


def test_gray_map_convention():
    assert qam4_map(np.array([0, 0])) == (1 + 1j) / np.sqrt(2)
    for b0, b1 in itertools.product((0, 1), repeat=2):
        expected = ((1 - 2 * b0) + 1j * (1 - 2 * b1)) / np.sqrt(2)
        assert qam4_map(np.array([b0, b1])) == expected
        assert QAM4[2 * b0 + b1] == expected


def test_detect_quadrant():
    np.testing.assert_array_equal(qam4_detect(np.array(0.9 - 1.1j)), [0, 1])


def test_map_detect_roundtrip():
    bits = np.array(list(itertools.product((0, 1), repeat=2)))
    np.testing.assert_array_equal(qam4_detect(qam4_map(bits)), bits)


def test_unit_average_energy():
    s = random_symbols(100_000, 2, RngStream(0))
    np.testing.assert_allclose(np.abs(s) ** 2, 1.0, rtol=1e-12)
    assert abs(np.mean(np.sum(np.abs(s) ** 2, axis=1)) - 2) < 0.04


def test_random_bits_reproducible():
    np.testing.assert_array_equal(random_bits((3, 2), RngStream(4)), random_bits((3, 2), RngStream(4)))


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False).filter(lambda z: min(abs(z.real), abs(z.imag)) > 1e-9))
def test_detect_picks_nearest_symbol(z):
    nearest = np.argmin(np.abs(QAM4 - z))
    np.testing.assert_array_equal(qam4_detect(np.array(z)), [nearest >> 1, nearest & 1])
