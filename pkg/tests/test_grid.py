import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rosenau_lab.errors import ConfigError
from rosenau_lab.grid import (
    Field,
    NormLedger,
    dealias,
    dealias_mask,
    deriv,
    derivative_multiplier,
    fourier_resample,
    make_grid,
    norms,
)


def test_grid_pi_8_spacing_and_wavenumbers():
    g = make_grid(math.pi, 8)
    assert g.spacing == pytest.approx(math.pi / 4, abs=1e-15)
    np.testing.assert_allclose(g.wavenumbers, [0, 1, 2, 3, -4, -3, -2, -1], atol=1e-14)
    assert g.x[0] == -math.pi
    assert g.x[-1] < math.pi


def test_grid_spacing_quarter():
    assert make_grid(32, 256).spacing == 0.25


@pytest.mark.parametrize("n", [7, 9, 0, -2, 6])
def test_grid_rejects_odd_or_small(n):
    with pytest.raises(ConfigError):
        make_grid(math.pi, n)


@pytest.mark.parametrize("L", [0.0, -1.0, float("nan"), float("inf")])
def test_grid_rejects_bad_length(L):
    with pytest.raises(ConfigError):
        make_grid(L, 16)


def test_field_is_read_only_and_checks_shape():
    g = make_grid(math.pi, 8)
    f = Field(g, np.zeros(8))
    with pytest.raises(ValueError):
        f.samples[0] = 1.0
    with pytest.raises(ConfigError):
        Field(g, np.zeros(7))


def test_field_finite_flag():
    g = make_grid(math.pi, 8)
    s = np.zeros(8)
    s[3] = np.nan
    assert not Field(g, s).finite
    assert Field(g, np.ones(8)).finite


def _sin_field(n=64, mode=1):
    g = make_grid(math.pi, n)
    return Field(g, np.sin(mode * g.x)), g


def test_deriv_sin_first_order():
    f, g = _sin_field()
    assert np.max(np.abs(deriv(f, 1).samples - np.cos(g.x))) <= 1e-12


def test_deriv_sin2x_third_order():
    f, g = _sin_field(mode=2)
    assert np.max(np.abs(deriv(f, 3).samples + 8 * np.cos(2 * g.x))) <= 1e-10


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_deriv_of_constant_is_zero(order):
    g = make_grid(5.0, 32)
    out = deriv(Field(g, np.full(32, 3.0)), order)
    assert np.max(np.abs(out.samples)) <= 1e-13


@pytest.mark.parametrize("order", [0, 5, -1])
def test_deriv_rejects_order(order):
    f, _ = _sin_field()
    with pytest.raises(ConfigError):
        deriv(f, order)


def test_odd_multiplier_drops_nyquist():
    g = make_grid(math.pi, 16)
    m1 = derivative_multiplier(g, 1)
    m3 = derivative_multiplier(g, 3)
    assert m1[-1] == 0 and m3[-1] == 0
    assert derivative_multiplier(g, 2)[-1] != 0


def test_norms_constant_one():
    g = make_grid(math.pi, 32)
    led = norms(Field(g, np.ones(32)))
    assert led.l2 == pytest.approx(math.sqrt(2 * math.pi), rel=1e-14)
    assert led.linf == 1.0
    assert led.h1_semi == pytest.approx(0.0, abs=1e-13)


def test_norms_zero():
    g = make_grid(math.pi, 16)
    led = norms(Field(g, np.zeros(16)))
    assert (led.l2, led.l4, led.linf, led.h1_semi, led.h2_semi) == (0, 0, 0, 0, 0)


def test_norms_sin_closed_form():
    f, _ = _sin_field()
    led = norms(f)
    assert abs(led.l2 - math.sqrt(math.pi)) <= 1e-12
    # int sin^4 = 3 pi / 4
    assert led.l4 == pytest.approx((0.75 * math.pi) ** 0.25, rel=1e-12)
    assert led.h1_semi == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert led.h2_semi == pytest.approx(math.sqrt(math.pi), rel=1e-12)


def test_norm_ledger_rejects_negative():
    with pytest.raises(ConfigError):
        NormLedger(-1.0, 0, 0, 0, 0)


def test_dealias_n12_keeps_modes_up_to_4():
    out = dealias(np.ones(12, dtype=complex))
    j = np.fft.fftfreq(12, 1 / 12)
    np.testing.assert_array_equal(out != 0, np.abs(j) <= 4)


def test_dealias_zero_and_low_mode():
    assert not np.any(dealias(np.zeros(16, dtype=complex)))
    f, _ = _sin_field(n=8)
    c = np.fft.fft(f.samples)
    np.testing.assert_allclose(dealias(c), c, atol=1e-15)


def test_dealias_mask_half_matches_rule():
    m = dealias_mask(12)
    np.testing.assert_array_equal(m, np.arange(7) <= 4)


def test_fourier_resample_exact_for_trig_polynomial():
    g = make_grid(math.pi, 32)
    u = np.sin(g.x) + 0.3 * np.cos(5 * g.x)
    h = 2 * math.pi / 96
    out = fourier_resample(u, g, 96, shift=0.5 * h)
    xs = -math.pi + h * np.arange(96) + 0.5 * h
    np.testing.assert_allclose(out, np.sin(xs) + 0.3 * np.cos(5 * xs), atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=16, max_size=16), st.floats(-3, 3))
def test_norms_homogeneous(vals, c):
    g = make_grid(2.0, 16)
    a = norms(Field(g, np.array(vals)))
    b = norms(Field(g, c * np.array(vals)))
    for x, y in [(a.l2, b.l2), (a.l4, b.l4), (a.linf, b.linf), (a.h1_semi, b.h1_semi)]:
        assert y == pytest.approx(abs(c) * x, rel=1e-9, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=32, max_size=32))
def test_derivative_has_zero_mean(vals):
    g = make_grid(3.0, 32)
    d = deriv(Field(g, np.array(vals)), 1)
    assert abs(np.mean(d.samples)) <= 1e-12 * (1 + max(abs(v) for v in vals))
