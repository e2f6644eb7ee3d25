import itertools
import math

import numpy as np
import pytest
from conftest import random_image
from hypothesis import given
from hypothesis import strategies as st

from pplbp.grid import GrayImage, new_image
from pplbp.lbp import (
    DEFAULT_LBP_SET,
    LbpConfig,
    SamplingError,
    lbp_code_map,
    lbp_histogram,
    lbp_riu2,
    neighbor_coords,
    riu2_from_bits,
    sample_bilinear,
    uniformity,
)


def oracle_code(bits):
    """riu2 by string inspection: uniform iff the circular string has at most one '01' boundary."""
    s = "".join(map(str, bits))
    boundaries = sum(1 for p in range(len(s)) if s[p - 1] == "0" and s[p] == "1")
    return s.count("1") if boundaries <= 1 else len(s) + 1


def oracle_sample(a, x, y):
    x0, y0 = int(math.floor(x)), int(math.floor(y))
    fx, fy = x - x0, y - y0
    v00 = a[x0, y0]
    v01 = a[x0, y0 + 1] if fy else v00
    v10 = a[x0 + 1, y0] if fx else v00
    v11 = a[x0 + 1, y0 + 1] if fx and fy else (v10 if fx else v01)
    top = v00 + fy * (v01 - v00)
    bot = v10 + fy * (v11 - v10)
    return top + fx * (bot - top)


def oracle_histogram(a, P, R):
    """Naive per-pixel double loop."""
    m, l = a.shape
    c = math.ceil(R)
    hist = np.zeros(P + 2, dtype=np.int64)
    for i in range(c, m - c):
        for j in range(c, l - c):
            bits = []
            for p in range(P):
                x = i - R * math.sin(2 * math.pi * p / P)
                y = j + R * math.cos(2 * math.pi * p / P)
                x = round(x) if abs(x - round(x)) < 1e-9 else x
                y = round(y) if abs(y - round(y)) < 1e-9 else y
                bits.append(int(oracle_sample(a, x, y) >= a[i, j]))
            hist[oracle_code(bits)] += 1
    return hist


def test_config_validation():
    assert LbpConfig(8, 1).n_bins == 10
    assert [str(c) for c in DEFAULT_LBP_SET] == ["(8,1)", "(16,2)", "(24,3)", "(24,4)"]
    for bad in ((3, 1), (8, 0.5), (8.5, 1)):
        with pytest.raises(ValueError):
            LbpConfig(*bad)


def test_neighbor_coords():
    assert neighbor_coords(5, 7, 0, LbpConfig(8, 1)) == (5.0, 8.0)
    x, y = neighbor_coords(5, 7, 2, LbpConfig(8, 1))
    assert x == pytest.approx(4.0, abs=1e-15) and y == pytest.approx(7.0, abs=1e-15)
    x, y = neighbor_coords(0, 0, 1, LbpConfig(8, 1))
    assert x == pytest.approx(-math.sqrt(2) / 2) and y == pytest.approx(math.sqrt(2) / 2)


def test_sample_bilinear():
    a = np.array([[0.0, 0.0, 9.0], [255.0, 255.0, 9.0], [1.0, 2.0, 3.0]])
    img = GrayImage(a)
    assert sample_bilinear(img, 1, 2) == 9.0
    assert sample_bilinear(img, 0.5, 0.5) == 127.5
    assert sample_bilinear(new_image(5, 5, 3.7), 1.29, 2.71) == 3.7
    with pytest.raises(SamplingError):
        sample_bilinear(img, -0.5, 1)
    with pytest.raises(SamplingError):
        sample_bilinear(img, 1, 2.5)


def test_uniformity_examples():
    assert uniformity([1] * 8) == 0
    assert uniformity([1, 1, 1, 1, 0, 0, 0, 0]) == 2
    assert uniformity([1, 0, 1, 0, 1, 0, 1, 0]) == 8


def test_exhaustive_p8_census():
    codes = [riu2_from_bits(bits) for bits in itertools.product((0, 1), repeat=8)]
    assert codes == [oracle_code(b) for b in itertools.product((0, 1), repeat=8)]
    assert sum(c <= 8 for c in codes) == 58
    assert sum(c == 9 for c in codes) == 198


@given(st.lists(st.integers(0, 1), min_size=4, max_size=24), st.integers(0, 23))
def test_code_rotation_and_reflection_invariant(bits, shift):
    s = shift % len(bits)
    rotated = bits[s:] + bits[:s]
    assert riu2_from_bits(rotated) == riu2_from_bits(bits)
    assert riu2_from_bits(bits[::-1]) == riu2_from_bits(bits)


def pattern_image(bits):
    """3x3 image whose (8,1) neighbors realize ``bits`` around a zero center."""
    a = np.zeros((3, 3))
    for p, b in enumerate(bits):
        dx = -math.sin(2 * math.pi * p / 8)
        dy = math.cos(2 * math.pi * p / 8)
        i, j = 1 + int(np.sign(round(dx, 6))), 1 + int(np.sign(round(dy, 6)))
        a[i, j] = (100.0 if p % 2 else 1.0) * (1 if b else -1)
    return GrayImage(a)


def test_pixel_codes_all_256_patterns():
    cfg = LbpConfig(8, 1)
    for bits in itertools.product((0, 1), repeat=8):
        assert lbp_riu2(pattern_image(bits), 1, 1, cfg) == oracle_code(bits)


def test_riu2_examples():
    cfg = LbpConfig(8, 1)
    assert lbp_riu2(new_image(3, 3, 50.0), 1, 1, cfg) == 8
    peak = np.zeros((3, 3))
    peak[1, 1] = 10.0
    assert lbp_riu2(GrayImage(peak), 1, 1, cfg) == 0
    assert lbp_riu2(pattern_image([1, 0] * 4), 1, 1, cfg) == 9


def test_histogram_constant_images():
    h = lbp_histogram(new_image(10, 10, 3.0), LbpConfig(8, 1))
    assert h.bins.tolist() == [0] * 8 + [64, 0]
    h = lbp_histogram(new_image(10, 10, 3.0), LbpConfig(24, 3))
    assert h.bins[24] == 16 and h.total == 16


def test_histogram_too_small():
    with pytest.raises(SamplingError):
        lbp_histogram(new_image(8, 8), LbpConfig(24, 4))


@pytest.mark.parametrize("cfg", list(DEFAULT_LBP_SET) + [LbpConfig(12, 1.5)])
def test_histogram_matches_naive(backend, rng, cfg):
    for integer in (True, False):
        img = random_image(rng, 16, 16, integer=integer)
        h = lbp_histogram(img, cfg)
        assert np.array_equal(h.bins, oracle_histogram(img.data, cfg.P, cfg.R))
        c = math.ceil(cfg.R)
        assert h.total == (16 - 2 * c) ** 2


def test_code_map_matches_pixelwise(rng):
    img = random_image(rng, 12, 14)
    cfg = LbpConfig(16, 2)
    codes = lbp_code_map(img, cfg)
    for i in range(codes.shape[0]):
        for j in range(codes.shape[1]):
            assert codes[i, j] == lbp_riu2(img, i + 2, j + 2, cfg)


def test_shift_invariance(rng):
    img = random_image(rng, 20, 20)
    for cfg in DEFAULT_LBP_SET:
        assert np.array_equal(lbp_code_map(img, cfg), lbp_code_map(GrayImage(img.data + 17.0), cfg))
