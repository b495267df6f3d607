import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rosenau_lab.errors import BlowUpError, ConfigError
from rosenau_lab.grid import Field, make_grid, norms
from rosenau_lab.solver import (
    EdgeLeakageWarning,
    ModelParams,
    Variant,
    check_initial_bounds,
    gaussian,
    mollified_riemann,
    nonlinear_rhs,
    solve,
    stable_dt,
    step_ifrk4,
    symbol,
)

RKV = Variant.RKV_RLW
RR = Variant.R_RLW


def _mp_symbol(c, eps, beta, k):
    mpmath.mp.dps = 40
    k = mpmath.mpf(k)
    num = mpmath.mpc(-eps * k ** 2, c * beta * k ** 3)
    return complex(num / (1 + beta * k ** 2 + beta ** 2 * k ** 4))


def test_variant_parse():
    assert Variant.parse("rkv-rlw") is RKV
    assert Variant.parse("R_RLW") is RR
    with pytest.raises(ConfigError):
        Variant.parse("kdv")


def test_params_validation():
    with pytest.raises(ConfigError):
        ModelParams(RKV, -0.1, 1e-4)
    with pytest.raises(ConfigError):
        ModelParams(RKV, 0.1, 0.0)


def test_params_from_coupling():
    p = ModelParams.from_coupling(RKV, 0.2, 1.0)
    assert p.beta == pytest.approx(0.0016, rel=1e-14)


@pytest.mark.parametrize("variant", [RKV, RR])
def test_symbol_zero_mode(variant):
    assert symbol(ModelParams(variant, 0.3, 0.2), 0.0) == 0


def test_symbol_rkv_k1():
    got = symbol(ModelParams(RKV, 0.1, 1e-4), 1.0)
    want = _mp_symbol(1, 0.1, 1e-4, 1)
    assert abs(got - want) <= 1e-15
    # -0.1 / 1.00010001 = -0.09999000..., 1e-4 / 1.00010001 = 9.9990e-5
    assert got.real == pytest.approx(-0.0999900, rel=1e-6)
    assert got.imag == pytest.approx(9.99900e-5, rel=1e-6)


def test_symbol_rrlw_k10():
    got = symbol(ModelParams(RR, 0.1, 1e-4), 10.0)
    assert abs(got - _mp_symbol(0, 0.1, 1e-4, 10)) <= 1e-14
    # -10 / (1 + 0.01 + 0.0001) = -9.90001...
    assert got.real == pytest.approx(-9.90001, abs=5e-6)
    assert got.imag == 0


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2), st.floats(1e-6, 2), st.floats(-200, 200))
def test_symbol_is_dissipative(eps, beta, k):
    lam = symbol(ModelParams(RKV, eps, beta), k)
    assert lam.real <= 0
    assert lam.real == pytest.approx(-eps * k * k / (1 + beta * k * k + beta ** 2 * k ** 4),
                                     rel=1e-12, abs=1e-300)


def test_nonlinear_rhs_of_constant_vanishes():
    g = make_grid(4.0, 32)
    out = nonlinear_rhs(Field(g, np.full(32, 2.5)), ModelParams(RKV, 0.1, 0.01))
    assert np.max(np.abs(out.samples)) <= 1e-13


@pytest.mark.parametrize("beta", [0.5, 3.0])
def test_nonlinear_rhs_sin_mode_two(beta):
    # -(sin^2 x)_x = -sin 2x, divided by the mass symbol at k = 2
    g = make_grid(math.pi, 32)
    out = nonlinear_rhs(Field(g, np.sin(g.x)), ModelParams(RKV, 0.1, beta))
    want = -np.sin(2 * g.x) / (1 + 4 * beta + 16 * beta ** 2)
    np.testing.assert_allclose(out.samples, want, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=24, max_size=24))
def test_nonlinear_rhs_mean_zero(vals):
    g = make_grid(3.0, 24)
    out = nonlinear_rhs(Field(g, np.array(vals)), ModelParams(RR, 0.1, 0.01))
    assert abs(np.mean(out.samples)) <= 1e-14 * (1 + max(v * v for v in vals))


def test_stable_dt_matches_scan():
    p = ModelParams(RKV, 0.1, 1e-4)
    g = make_grid(32, 256)
    lam_max = max(abs(_mp_symbol(1, 0.1, 1e-4, k)) for k in g.wavenumbers)
    assert stable_dt(p, g, 1.0, 0.5) == pytest.approx(0.5 * min(2.8 / lam_max, 0.125), rel=1e-12)


def test_stable_dt_zero_umax_uses_linear_bound():
    p = ModelParams(RKV, 0.1, 1e-4)
    g = make_grid(32, 256)
    lam_max = np.max(np.abs(symbol(p, g.wavenumbers)))
    assert stable_dt(p, g, 0.0, 1.0) == pytest.approx(2.8 / lam_max, rel=1e-12)


def test_stable_dt_advective_bound_halves():
    p = ModelParams(RR, 0.0, 1.0)  # tiny symbol, advective bound active
    g = make_grid(32, 256)
    a = stable_dt(p, g, 10.0, 1.0)
    b = stable_dt(p, g, 20.0, 1.0)
    assert a == pytest.approx(g.spacing / 20.0)
    assert b == pytest.approx(0.5 * a)


@pytest.mark.parametrize("variant", [RKV, RR])
def test_step_preserves_constants(variant):
    g = make_grid(5.0, 64)
    f = Field(g, np.full(64, -0.7))
    out = step_ifrk4(f, ModelParams(variant, 0.2, 0.01), 0.3)
    np.testing.assert_allclose(out.samples, -0.7, atol=1e-14)


def test_linear_step_is_exact_exponential():
    p = ModelParams(RKV, 0.0, 0.05)
    g = make_grid(math.pi, 32)
    f = Field(g, np.sin(g.x))
    dt = 0.37
    out = step_ifrk4(f, p, dt, nonlinear=False)
    lam = symbol(p, 1.0)
    # sin x = Im e^{ix}; mode 1 is multiplied by e^{lam dt}
    want = np.imag(np.exp(lam * dt) * np.exp(1j * g.x))
    np.testing.assert_allclose(out.samples, want, atol=1e-14)


@pytest.mark.parametrize("variant", [RKV, RR])
def test_fourth_order_in_time(variant):
    p = ModelParams(variant, 0.1, 1e-2)
    g = make_grid(8.0, 128)
    u0 = gaussian(g, 0.8, 0.0, 1.5)
    T, dt = 0.1, 0.02
    ref = solve(p, u0, T, dt=dt / 16).final.samples
    e1 = np.max(np.abs(solve(p, u0, T, dt=dt).final.samples - ref))
    e2 = np.max(np.abs(solve(p, u0, T, dt=dt / 2).final.samples - ref))
    assert 12 <= e1 / e2 <= 20


def test_zero_stays_zero():
    g = make_grid(6.0, 64)
    tr = solve(ModelParams(RKV, 0.1, 0.01), Field(g, np.zeros(64)), 0.5)
    assert not np.any(tr.snapshot_array())


def test_small_sin_l2_nonincreasing():
    g = make_grid(math.pi, 64)
    tr = solve(ModelParams(RKV, 0.05, 0.01), Field(g, 0.01 * np.sin(g.x)), 0.5)
    l2 = tr.ledger["l2"]
    assert np.all(np.diff(l2) <= 1e-15)


@pytest.mark.parametrize("variant", [RKV, RR])
def test_gaussian_mass_conserved(variant):
    g = make_grid(32, 512)
    u0 = gaussian(g)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EdgeLeakageWarning)
        tr = solve(ModelParams(variant, 0.1, 1e-4), u0, 1.0)
    m0 = np.sum(u0.samples) * g.spacing
    m1 = np.sum(tr.final.samples) * g.spacing
    assert abs(m1 - m0) <= 1e-10 * abs(m0)


def test_viscous_shock_travelling_wave():
    # 1/(1 + exp((x - t)/eps)) solves u_t + (u^2)_x = eps u_xx exactly;
    # beta is small enough for the dispersive correction to stay below 1e-3
    eps = 0.1
    g = make_grid(16.0, 2048)
    p = ModelParams(RKV, eps, 1e-7)
    u0 = mollified_riemann(1.0, 0.0, 2 * eps, g)
    tr = solve(p, u0, 2.0)
    x = g.x
    mask = (x > -4) & (x < 8)   # clear of the fan from the periodic return ramp
    want = 0.5 * (1 - np.tanh((x - 2.0) / (2 * eps)))
    assert np.max(np.abs(tr.final.samples - want)[mask]) < 1e-3


def test_fixed_dt_lands_on_multiples():
    g = make_grid(4.0, 32)
    tr = solve(ModelParams(RR, 0.1, 0.1), gaussian(g), 1.0, output_stride=4, dt=0.05)
    np.testing.assert_array_equal(tr.step_times, np.arange(21) * 0.05)
    np.testing.assert_array_equal(tr.times, np.arange(0, 21, 4) * 0.05)


def test_solve_rejects_bad_inputs():
    g = make_grid(4.0, 32)
    p = ModelParams(RR, 0.1, 0.1)
    with pytest.raises(ConfigError):
        solve(p, gaussian(g), 0.0)
    with pytest.raises(ConfigError):
        solve(p, gaussian(g), 1.0, output_stride=0)


def test_blow_up_carries_partial_trajectory():
    # an absurd fixed step on inviscid data overflows
    g = make_grid(4.0, 64)
    p = ModelParams(RR, 0.0, 1e-6)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(BlowUpError) as info:
            solve(p, gaussian(g, 50.0), 100.0, dt=5.0)
    assert info.value.trajectory is not None
    assert info.value.time is not None


def test_check_c0_refuses_inadmissible_data():
    g = make_grid(4.0, 64)
    p = ModelParams(RKV, 0.1, 1e-4)
    with pytest.raises(ConfigError):
        solve(p, gaussian(g, 10.0), 0.1, check_c0=1.0)
    solve(p, gaussian(g, 10.0), 0.01, check_c0=1.0, force=True)


def test_mollified_equal_states_is_constant():
    g = make_grid(8.0, 64)
    np.testing.assert_array_equal(mollified_riemann(0.3, 0.3, 1.0, g).samples, 0.3)


def test_mollified_midpoint():
    g = make_grid(8.0, 64)
    u = mollified_riemann(1.0, 0.0, 0.5, g)
    # exact up to the exp(-2 * 6 / 0.5) tail of the return ramp
    assert u.samples[32] == pytest.approx(0.5, abs=1e-9)   # x = 0


def test_mollified_width_floor():
    g = make_grid(8.0, 64)
    with pytest.raises(ConfigError):
        mollified_riemann(1.0, 0.0, g.spacing, g)


def test_mollified_norm_scalings():
    # width = eps: beta ||u_x||^2 ~ eps^3 -> 0 while eps^2 ||u_x||^2 ~ eps stays bounded
    vals = []
    for eps in (0.4, 0.2, 0.1):
        g = make_grid(16.0, int(round(32 * 8 / eps)))
        h1 = norms(mollified_riemann(1.0, 0.0, eps, g)).h1_semi ** 2
        vals.append((eps ** 4 * h1, eps ** 2 * h1))
    a, b = zip(*vals)
    assert a[0] > a[1] > a[2]
    assert max(b) <= 2 * b[0]
    assert b[2] < b[0]


def test_initial_bounds_zero_passes():
    g = make_grid(4.0, 32)
    for v in (RKV, RR):
        ib = check_initial_bounds(Field(g, np.zeros(32)), ModelParams(v, 0.1, 1e-4), 1e-9)
        assert ib.passed
        assert all(x == 0 for x in ib.terms.values())


def test_initial_bounds_homogeneity():
    g = make_grid(8.0, 256)
    p = ModelParams(RKV, 0.2, 0.0016)
    u0 = mollified_riemann(1.0, 0.0, 0.2, g)
    a = check_initial_bounds(u0, p).terms
    b = check_initial_bounds(u0 * 2.0, p).terms
    assert b["l2_sq"] == pytest.approx(4 * a["l2_sq"], rel=1e-13)
    assert b["l4_4th"] == pytest.approx(16 * a["l4_4th"], rel=1e-13)


def test_edge_leakage_warning():
    g = make_grid(4.0, 64)
    with pytest.warns(EdgeLeakageWarning):
        solve(ModelParams(RR, 0.1, 0.01), gaussian(g), 1.0)
