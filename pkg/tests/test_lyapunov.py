import math

import numpy as np
import pytest

from ccnet import (
    CocycleRunConfig,
    LyapunovResult,
    ModelParams,
    exponent_lower_bounds,
    localization_length,
    lyapunov_spectrum,
    thouless_rhs,
    xi_upper_bound,
    z_independence_check,
)

HALF_LOG_2 = 0.5 * math.log(2.0)  # mean exponent at the self-dual point


# ---------------------------------------------------------------------------
# closed forms


def test_thouless_rhs_on_circle(critical):
    assert thouless_rhs(1.0, critical) == pytest.approx(0.346574, abs=5e-7)
    assert thouless_rhs(np.exp(0.9j), critical) == pytest.approx(HALF_LOG_2, abs=1e-14)


def test_thouless_rhs_off_circle(critical):
    assert thouless_rhs(2.0, critical) == pytest.approx(1.039721, abs=5e-7)
    assert thouless_rhs(0.5, critical) == pytest.approx(1.039721, abs=5e-7)


def test_thouless_rhs_quadrature_oracle(critical):
    # oracle: trapezoid quadrature of the logarithmic potential of the
    # uniform circle measure against the closed form log max(1, |z|)
    theta = np.linspace(0.0, 2.0 * np.pi, 1 << 16, endpoint=False)
    circle = np.exp(1j * theta)
    for z in (2.0, 0.5, 1.7 * np.exp(1.3j), 0.81 * np.exp(-0.4j)):
        quad = float(np.mean(np.log(np.abs(z - circle))))
        closed = math.log(max(1.0, abs(z)))
        assert quad == pytest.approx(closed, abs=1e-10)
        expected = 2 * quad + 0.5 * math.log(1 / critical.rt) - math.log(abs(z))
        assert thouless_rhs(z, critical) == pytest.approx(expected, abs=1e-9)


def test_thouless_rhs_rejects_zero(critical):
    with pytest.raises(ValueError):
        thouless_rhs(0.0, critical)


def test_exponent_lower_bounds_values():
    bounds = exponent_lower_bounds(0.34657, 0.535, 4)
    assert bounds[0] == pytest.approx(0.34657, abs=1e-12)
    assert bounds[1] == pytest.approx(0.16824, abs=5e-6)
    assert np.all(np.diff(bounds) < 0)


def test_exponent_lower_bounds_zero_delta():
    assert np.allclose(exponent_lower_bounds(0.2, 0.0, 5), 0.2)


def test_exponent_lower_bounds_validation():
    with pytest.raises(ValueError):
        exponent_lower_bounds(-1.0, 0.1, 3)


def test_xi_upper_bound_m1(critical):
    assert xi_upper_bound(critical, 1) == pytest.approx(2.885390, abs=5e-7)


def test_xi_upper_bound_vacuous_at_critical(critical):
    assert xi_upper_bound(critical, 2) == "vacuous"


def test_xi_upper_bound_shrinks_with_r():
    values = [xi_upper_bound(ModelParams.from_r(r), 1) for r in (0.2, 0.1, 0.05, 0.01)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] < 0.5


# ---------------------------------------------------------------------------
# config validation


def test_config_rejects_extreme_params():
    with pytest.raises(ValueError):
        CocycleRunConfig(params=ModelParams.from_r(0.0), M=2, n_steps=100, seed=1)


def test_config_rejects_bad_shapes(critical):
    with pytest.raises(ValueError):
        CocycleRunConfig(params=critical, M=0, n_steps=100, seed=1)
    with pytest.raises(ValueError):
        CocycleRunConfig(params=critical, M=2, n_steps=100, seed=1, batch_count=1)
    with pytest.raises(ValueError):
        CocycleRunConfig(params=critical, M=2, n_steps=10, seed=1, batch_count=20)
    with pytest.raises(ValueError):
        CocycleRunConfig(params=critical, M=2, n_steps=100, seed=1, z=0.0)


# ---------------------------------------------------------------------------
# spectrum estimation


def _run(params, M, n, seed, **kw):
    return lyapunov_spectrum(
        CocycleRunConfig(params=params, M=M, n_steps=n, seed=seed, **kw)
    )


def test_spectrum_deterministic(critical):
    a = _run(critical, 2, 5000, 7)
    b = _run(critical, 2, 5000, 7)
    assert np.array_equal(a.exponents, b.exponents)
    assert np.array_equal(a.stderrs, b.stderrs)


def test_spectrum_sorted_and_symmetric(critical):
    res = _run(critical, 3, 20_000, 3)
    assert np.all(np.diff(res.exponents) <= 0)
    # the full sum vanishes exactly (every layer has unit |det|)
    assert abs(res.exponents.sum()) <= 1e-10
    assert np.all(res.symmetry_defects() <= 3 * res.symmetry_sigmas() + 1e-12)


def test_spectrum_mean_law_small_run(critical, lopsided):
    for params, target in ((critical, HALF_LOG_2), (lopsided, 0.366985)):
        res = _run(params, 2, 40_000, 11)
        assert abs(res.mean_top() - target) <= max(0.01, 4 * res.mean_top_stderr())


def test_spectrum_norm_cap(critical):
    res = _run(critical, 2, 10_000, 5)
    cap = 0.5 * (
        math.log(1 / critical.rt)
        + math.log((1 + critical.r) * (1 + critical.t))
    )
    assert res.exponents[0] <= cap + 3 * res.stderrs[0]


def test_spectrum_reorth_period_consistency(critical):
    base = _run(critical, 2, 30_000, 9)
    coarse = _run(critical, 2, 30_000, 9, reorth_period=5)
    assert np.max(np.abs(base.exponents - coarse.exponents)) <= 4 * np.max(
        base.stderrs + coarse.stderrs
    )


def test_spectrum_overflow_guard_off_circle(critical):
    # |z| = 2 grows like e^{2.08} per step: an un-guarded product over 500
    # steps would overflow; the early orthonormalization keeps it finite and
    # leaves the estimate intact
    guarded = _run(critical, 2, 10_000, 21, z=2.0, reorth_period=500)
    assert np.all(np.isfinite(guarded.exponents))
    assert abs(guarded.mean_top() - thouless_rhs(2.0, critical)) <= 0.02


def test_spectrum_stderr_shrinks_with_n(critical):
    short = _run(critical, 2, 20_000, 13)
    long = _run(critical, 2, 80_000, 13)
    ratio = short.mean_top_stderr() / long.mean_top_stderr()
    # quadrupling the run should halve the error; allow wide stochastic slack
    assert 1.2 <= ratio <= 3.5


def test_gammas_and_gaps(critical):
    res = _run(critical, 2, 20_000, 17)
    assert np.allclose(res.gammas, np.exp(res.exponents))
    gaps = res.gaps()
    assert gaps.shape == (2,)
    assert gaps[-1] == pytest.approx(res.exponents[1], abs=1e-15)
    assert res.gap_stderrs().shape == (2,)


# ---------------------------------------------------------------------------
# localization length


def _fake_result(lambdas, stderrs):
    lambdas = np.asarray(lambdas, dtype=float)
    stderrs = np.asarray(stderrs, dtype=float)
    batches = np.tile(lambdas, (4, 1))
    return LyapunovResult(exponents=lambdas, stderrs=stderrs, batch_means=batches, config=None)


def test_localization_length_exact_value():
    res = _fake_result([0.8, 0.5, -0.5, -0.8], [0.01] * 4)
    xi = localization_length(res)
    assert xi.status == "ok"
    assert xi.value == pytest.approx(2.0, abs=1e-12)
    assert xi.stderr == pytest.approx(0.01 / 0.25, abs=1e-12)


def test_localization_length_not_resolved():
    res = _fake_result([0.8, 0.01, -0.01, -0.8], [0.02, 0.02, 0.02, 0.02])
    assert localization_length(res).status == "not resolved"


def test_localization_length_m1_critical(critical):
    res = _run(critical, 1, 60_000, 19)
    xi = localization_length(res)
    assert xi.status == "ok"
    assert xi.value == pytest.approx(1.0 / HALF_LOG_2, rel=0.10)


# ---------------------------------------------------------------------------
# z-independence


def test_z_independence_same_seed_identical(critical):
    rep = z_independence_check(critical, 2, 1.0, 1.0, 5000, (3, 3))
    assert np.array_equal(rep.lambda1, rep.lambda2)
    assert rep.all_pass


def test_z_independence_passes_on_circle(critical):
    rep = z_independence_check(critical, 2, 1.0, np.exp(1j * np.pi / 5), 40_000, (1, 2))
    assert rep.all_pass


def test_z_independence_rejects_off_circle(critical):
    with pytest.raises(ValueError):
        z_independence_check(critical, 2, 1.0, 2.0, 1000, (1, 2))
