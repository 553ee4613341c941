import math
import warnings

import numpy as np
import pytest

from conftest import crandn
from oracles import circular_convolution
from ocdm.channel import (
    EVA_PDP,
    ChannelModel,
    ChannelRealization,
    GuardTooShortWarning,
    apply,
    complex_normal,
    mrc_combine,
    normalize_branches,
    realize,
)
from ocdm.modem import add_guard, strip_guard


def test_eva_table_as_printed():
    assert [d for d, _ in EVA_PDP] == [0, 30, 150, 310, 370, 710, 1090, 1730, 2510]
    assert [p for _, p in EVA_PDP] == [0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9]


def test_eva_quantization_at_10mhz():
    # nearest 100 ns sample: 0, 0.3, 1.5, 3.1, 3.7, 7.1, 10.9, 17.3, 25.1
    raw_idx = [0, 0, 2, 3, 4, 7, 11, 17, 25]
    lin = [10 ** (p / 10) for _, p in EVA_PDP]
    expect = {}
    for i, p in zip(raw_idx, lin):
        expect[i] = expect.get(i, 0.0) + p
    total = sum(expect.values())
    taps, power = ChannelModel("eva", 1e7).quantized_profile()
    assert list(taps) == sorted(expect)
    np.testing.assert_allclose(power, [expect[t] / total for t in sorted(expect)], rtol=1e-12)
    assert power[0] == pytest.approx((1 + 10 ** -0.15) / total)
    assert ChannelModel("eva", 1e7).max_delay_samples() == 25


@pytest.mark.parametrize("kind,draws", [("eva", 10_000), ("ten_ray", 10_000)])
def test_average_power_is_unity(kind, draws):
    rng = np.random.default_rng(11)
    model = ChannelModel(kind)
    total = [np.sum(np.abs(realize(model, rng, 128).cir) ** 2) for _ in range(draws)]
    assert 0.99 <= np.mean(total) <= 1.01


def test_ten_ray_support():
    rng = np.random.default_rng(2)
    model = ChannelModel("ten_ray")
    assert model.max_delay_samples() == 54
    lens = [realize(model, rng, 128).n_taps for _ in range(500)]
    assert max(lens) <= 55
    # delay 0 is not forced: some draws start late
    firsts = [np.flatnonzero(realize(model, rng, 128).cir)[0] for _ in range(200)]
    assert max(firsts) > 0


def test_identity_custom_channel():
    re = realize(ChannelModel("custom", taps=(1,)), np.random.default_rng(0), 16)
    np.testing.assert_array_equal(re.cfr, np.ones(16))
    re = realize(ChannelModel("awgn"), None, 8)
    np.testing.assert_array_equal(re.cfr, np.ones(8))


def test_custom_pdp_model():
    model = ChannelModel("custom", pdp=((0, 0), (200, -3)))
    taps, power = model.quantized_profile()
    assert list(taps) == [0, 2]
    re = realize(model, np.random.default_rng(0), 16)
    assert re.n_taps <= 3


def test_model_validation():
    with pytest.raises(ValueError):
        ChannelModel("custom")
    with pytest.raises(ValueError):
        ChannelModel("bogus")
    with pytest.raises(ValueError):
        realize(ChannelModel("eva"), np.random.default_rng(0), 16)


def test_cfr_diagonalizes_circulant(rng):
    n = 16
    re = ChannelRealization.from_taps(crandn(rng, 4), n)
    s = crandn(rng, n)
    y = np.fft.fft(circular_convolution(re.cir, s), norm="ortho")
    np.testing.assert_allclose(y, re.cfr * np.fft.fft(s, norm="ortho"), atol=1e-12)


def test_apply_identity_and_delay(rng):
    s = crandn(rng, 10)
    out = apply(ChannelRealization.from_taps([1], 10), s, None, 0.0)
    np.testing.assert_array_equal(out, s)
    out = apply(ChannelRealization.from_taps([0, 1], 10), s, None, 0.0)
    np.testing.assert_allclose(out, np.r_[0, s], atol=0)


def test_apply_cp_then_strip_is_circular(rng):
    n, g = 8, 3
    h = crandn(rng, 3)
    re = ChannelRealization.from_taps(h, n)
    s = crandn(rng, n)
    frame = add_guard(s, g, "CP")
    out = strip_guard(apply(re, frame, None, 0.0), g, "CP", n)
    assert np.abs(out - circular_convolution(re.cir, s)).max() < 1e-10


def test_cp_zp_equivalence(rng):
    n, g = 64, 16
    for _ in range(20):
        re = ChannelRealization.from_taps(crandn(rng, 12), n)
        s = crandn(rng, n)
        a = strip_guard(apply(re, add_guard(s, g, "CP"), None, 0.0), g, "CP", n)
        b = strip_guard(apply(re, add_guard(s, g, "ZP"), None, 0.0), g, "ZP", n)
        assert np.abs(a - b).max() < 1e-10


def test_noise_calibration():
    rng = np.random.default_rng(3)
    sigma2 = 0.37
    frame = np.zeros(1_000_000, dtype=complex)
    out = apply(ChannelRealization.from_taps([1], 4), frame, rng, sigma2)
    assert abs(np.var(out) / sigma2 - 1) < 0.01
    # real and imaginary parts carry half each
    assert abs(np.var(out.real) / (sigma2 / 2) - 1) < 0.01


def test_quasi_static_repeatable(rng):
    re = ChannelRealization.from_taps(crandn(rng, 5), 32)
    s = add_guard(crandn(rng, 32), 8, "CP")
    a = apply(re, s, np.random.default_rng(9), 0.1)
    b = apply(re, s, np.random.default_rng(9), 0.1)
    np.testing.assert_array_equal(a, b)


def test_guard_too_short_warns_and_proceeds(rng):
    re = ChannelRealization.from_taps(crandn(rng, 6), 16)
    frame = add_guard(crandn(rng, 16), 2, "CP")
    with pytest.warns(GuardTooShortWarning):
        out = apply(re, frame, None, 0.0)
    assert len(out) == 18 + 5
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        apply(re, add_guard(crandn(rng, 16), 5, "CP"), None, 0.0)


def test_complex_normal_variance():
    z = complex_normal(np.random.default_rng(0), 200_000, 2.0)
    assert abs(np.mean(np.abs(z) ** 2) - 2.0) < 0.02


# -- MRC ----------------------------------------------------------------------

def test_mrc_single_branch_passthrough(rng):
    y, c = crandn(rng, 8), crandn(rng, 8)
    z, ce = mrc_combine([y], [c])
    np.testing.assert_array_equal(z, y)
    np.testing.assert_array_equal(ce, c)


def test_mrc_identical_branches(rng):
    x, lam = crandn(rng, 16), crandn(rng, 16)
    z, ce = mrc_combine([lam * x, lam * x], [lam, lam])
    np.testing.assert_allclose(z / ce, x, atol=1e-12)
    np.testing.assert_allclose(np.abs(ce) ** 2, 2 * np.abs(lam) ** 2, rtol=1e-12)


def test_mrc_null_on_one_branch(rng):
    x = crandn(rng, 4)
    l1 = np.array([1, 0, 1, 1], dtype=complex)
    l2 = np.array([0.5, 2j, 1, -1], dtype=complex)
    z, ce = mrc_combine([l1 * x, l2 * x], [l1, l2])
    assert abs(ce[1]) == pytest.approx(2)
    assert z[1] / ce[1] == pytest.approx(x[1])


def test_mrc_noise_stays_white():
    rng = np.random.default_rng(4)
    lam = crandn(rng, 2, 8)
    w = complex_normal(rng, (2, 8, 40_000), 0.5)
    z = np.stack([mrc_combine(w[:, :, t], lam)[0] for t in range(w.shape[-1])])
    np.testing.assert_allclose(np.var(z, axis=0), 0.5, rtol=0.05)


def test_mrc_length_mismatch():
    with pytest.raises(ValueError):
        mrc_combine(np.ones((2, 4)), np.ones((2, 5)))


def test_branch_normalization(rng):
    reals = [ChannelRealization.from_taps(crandn(rng, 3), 16) for _ in range(2)]
    scaled = normalize_branches(reals)
    for a, b in zip(reals, scaled):
        np.testing.assert_allclose(b.cir, a.cir / math.sqrt(2))
    assert normalize_branches(reals[:1])[0] is reals[0]
