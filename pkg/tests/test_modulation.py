import cmath

import numpy as np
import pytest

from pnclab.gf2 import BitVector
from pnclab.modulation import demodulate_hard, make_constellation, modulate


@pytest.fixture(scope="module")
def qam4():
    return make_constellation("qam4")


@pytest.fixture(scope="module")
def qam16():
    return make_constellation("qam16")


def all_labels(m):
    for idx in range(1 << m):
        yield tuple((idx >> (m - 1 - j)) & 1 for j in range(m))


def test_qam4_label_anchor(qam4):
    assert cmath.isclose(modulate(qam4, (0, 0)), (1 + 1j) / np.sqrt(2))


def test_qam4_point_set(qam4):
    got = {modulate(qam4, w) for w in all_labels(2)}
    want = {(a + b * 1j) / np.sqrt(2) for a in (-1, 1) for b in (-1, 1)}
    assert {(round(z.real, 12), round(z.imag, 12)) for z in got} == {
        (round(z.real, 12), round(z.imag, 12)) for z in want
    }


def test_unit_energy(qam4, qam16):
    # 16QAM normalization: mean |p|^2 over the {+-1,+-3} grid is 10
    grid = [complex(a, b) for a in (-3, -1, 1, 3) for b in (-3, -1, 1, 3)]
    assert np.mean([abs(z) ** 2 for z in grid]) == pytest.approx(10.0)
    for c in (qam4, qam16):
        assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_roundtrip(qam4, qam16):
    for c in (qam4, qam16):
        for w in all_labels(c.bits_per_symbol):
            assert demodulate_hard(c, modulate(c, w)).to_bits() == w


def test_tie_break_lowest_index(qam4):
    assert demodulate_hard(qam4, 0j).to_bits() == (0, 0)


def test_small_perturbation_16qam(qam16):
    for w in all_labels(4):
        y = modulate(qam16, w) + 0.01 * (1 + 1j)
        assert demodulate_hard(qam16, y).to_bits() == w


def test_gray_adjacency_16qam(qam16):
    step = 2 / np.sqrt(10)
    pts = qam16.points
    for i in range(16):
        for j in range(16):
            d = pts[i] - pts[j]
            if abs(abs(d) - step) < 1e-9 and (abs(d.real) < 1e-9 or abs(d.imag) < 1e-9):
                assert bin(i ^ j).count("1") == 1


def test_label_bitvector_interface(qam4):
    w = BitVector.from_bits((1, 0))
    assert modulate(qam4, w) == modulate(qam4, (1, 0))


def test_bad_modulation_name():
    with pytest.raises(ValueError):
        make_constellation("qam64")


def test_label_length_check(qam4):
    with pytest.raises(ValueError):
        modulate(qam4, (1, 0, 1))
