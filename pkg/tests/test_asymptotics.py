"""Special functions, the decay envelope and the comparison functions."""
import math

import numpy as np
import pytest
from scipy import special
from scipy.integrate import quad

from choquard_lab.asymptotics import (
    IDENTITY_LAMBDAS,
    ComparisonKind,
    DecayEnvelope,
    SignVerdict,
    anchored_bracket_check,
    dawson,
    decay_envelope,
    erfi,
    fit_mu,
    identity_check,
    log_decay_envelope,
    ratio_decay_exponent,
    refined_subsuper,
    rough_rate,
    rough_rate_profile,
    rough_subsuper_check,
    sqrtlog_integral,
    sqrtlog_integral_closed,
    trusted_window,
)
from choquard_lab.errors import InputDomainError, WindowError
from choquard_lab.radial_core import RadialProfile, make_log_grid

# -- sqrtlog integral ------------------------------------------------------


def test_sqrtlog_integral_empty_interval():
    assert sqrtlog_integral(1.0) == 0.0
    assert sqrtlog_integral_closed(1.0) == 0.0


def test_sqrtlog_integral_at_e_against_direct_quadrature():
    # direct integrand sqrt(ln s) on [1, e] (endpoint singularity of the derivative)
    oracle, _ = quad(lambda s: math.sqrt(math.log(s)), 1.0, math.e, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert sqrtlog_integral(math.e) == pytest.approx(oracle, abs=1e-12)
    assert oracle == pytest.approx(1.2556300825518, abs=1e-12)


def test_sqrtlog_integral_leading_asymptotics():
    ratios = [sqrtlog_integral(lam) / (lam * math.sqrt(math.log(lam))) for lam in (1e3, 1e6, 1e12)]
    assert all(abs(1 - q) < 0.5 for q in ratios)
    assert abs(1 - ratios[2]) < abs(1 - ratios[1]) < abs(1 - ratios[0])


def test_sqrtlog_integral_domain():
    with pytest.raises(InputDomainError):
        sqrtlog_integral(0.5)
    with pytest.raises(InputDomainError):
        sqrtlog_integral_closed(0.5)


@pytest.mark.parametrize("lam", IDENTITY_LAMBDAS)
def test_closed_form_matches_quadrature(lam):
    q = sqrtlog_integral(lam)
    assert abs(q - sqrtlog_integral_closed(lam)) / q <= 1e-10


def test_identity_check_over_wide_range():
    worst, gaps = identity_check(np.geomspace(1.5, 1e6, 25))
    assert worst <= 1e-10 and len(gaps) == 25


def test_closed_form_derivative_is_sqrt_log():
    for lam in (1.5, 7.0, 300.0):
        h = 1e-5 * lam
        fd = (sqrtlog_integral_closed(lam + h) - sqrtlog_integral_closed(lam - h)) / (2 * h)
        assert fd == pytest.approx(math.sqrt(math.log(lam)), rel=1e-8)


# -- Dawson / erfi ---------------------------------------------------------


def test_odd_functions_vanish_at_zero():
    assert dawson(0.0) == 0.0 and erfi(0.0) == 0.0
    x = np.linspace(0.1, 5, 7)
    assert np.array_equal(dawson(-x), -dawson(x))


def test_dawson_small_argument_taylor():
    # F(x) = x - 2x^3/3 + O(x^5)
    for x in (1e-2, 1e-3):
        assert (x - dawson(x)) / x**3 == pytest.approx(2.0 / 3.0, rel=1e-3)


def test_dawson_against_scipy_reference():
    x = np.concatenate([np.linspace(-6, 6, 1201), np.geomspace(6, 1e4, 200)])
    ref = special.dawsn(x)
    assert np.max(np.abs(dawson(x) - ref) / np.maximum(np.abs(ref), 1e-300)) <= 1e-13


def test_erfi_one_against_quadrature():
    oracle = 2 / math.sqrt(math.pi) * quad(lambda t: math.exp(t * t), 0, 1)[0]
    assert erfi(1.0) == pytest.approx(oracle, rel=1e-13)
    assert erfi(1.0) == pytest.approx(1.6504257587975428, rel=1e-13)


def test_erfi_against_scipy_reference():
    x = np.linspace(-6, 6, 241)
    assert np.max(np.abs(erfi(x) - special.erfi(x)) / np.maximum(np.abs(special.erfi(x)), 1e-300)) <= 1e-13


def test_erfi_overflow_is_an_error():
    with pytest.raises(OverflowError):
        erfi(30.0)


# -- envelope --------------------------------------------------------------


def test_envelope_validation():
    with pytest.raises(InputDomainError):
        DecayEnvelope(a=-1.0, M=1.0)
    with pytest.raises(InputDomainError):
        DecayEnvelope(a=1.0, M=1.0, mu=0.0)
    with pytest.raises(InputDomainError):
        decay_envelope(1.0, DecayEnvelope(1.0, 2.0))


def test_envelope_is_linear_in_mu():
    r = np.array([2.0, 5.0, 11.0])
    e1 = decay_envelope(r, DecayEnvelope(1.0, 2.0))
    e3 = decay_envelope(r, DecayEnvelope(1.0, 2.0, mu=3.0))
    assert np.allclose(e3, 3 * e1, rtol=1e-14)


def test_envelope_log_derivative():
    env = DecayEnvelope(1.0, 9.0)
    for r in (20.0, 60.0):
        h = 1e-5 * r
        fd = (log_decay_envelope(r + h, env) - log_decay_envelope(r - h, env)) / (2 * h)
        expected = -math.sqrt(env.M * math.log(r) + env.a) - 0.5 / r - 0.25 / (r * math.log(r))
        assert fd == pytest.approx(expected, rel=1e-8)


def test_envelope_nearly_solves_far_field_equation():
    a, M = 1.0, 9.0
    env = DecayEnvelope(a, M)
    rel = []
    for r in (10.0, 40.0, 160.0):
        h = 1e-3
        t = math.log(r)
        f = [log_decay_envelope(math.exp(t + k * h), env) for k in (-2, -1, 0, 1, 2)]
        # psi_t / psi and psi_tt / psi from the log by fourth-order differences
        lt = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
        ltt = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
        lap = (ltt + lt * lt) / r**2
        V = a + M * t
        rel.append(abs(-lap + V) / V)
    assert rel[0] > rel[1] > rel[2] and rel[2] < 1e-3


def test_fit_mu_on_synthetic_envelope():
    g = make_log_grid(1e-6, 60.0, 2048)
    env = DecayEnvelope(1.0, 2.0, mu=3.0)
    r = g.nodes
    u = np.where(r > 1.5, decay_envelope(np.maximum(r, 1.5), env), 1.0)

    class Synthetic:
        a, M = env.a, env.M
        grid = g

    Synthetic.r = r
    Synthetic.u = RadialProfile(g, u)
    mu, drift = fit_mu(Synthetic)
    assert mu == pytest.approx(3.0, rel=1e-12) and drift <= 1e-12


def test_rough_rate_of_synthetic_profile():
    g = make_log_grid(1e-3, 200.0, 2048)
    r = g.nodes

    class Synthetic:
        a, M = 1.0, 1.0
        grid = g

    Synthetic.r = r
    Synthetic.u = RadialProfile(g, np.exp(-r * np.sqrt(np.log(np.maximum(r, 1.0001)))))
    assert rough_rate(Synthetic) == pytest.approx(-1.0, rel=1e-12)


def test_empty_window_is_reported():
    g = make_log_grid(1e-6, 2000.0, 512)

    class Synthetic:
        a, M = 1.0, 1.0
        grid = g

    Synthetic.r = g.nodes
    Synthetic.u = RadialProfile(g, np.exp(-g.nodes))
    with pytest.raises(WindowError):
        trusted_window(Synthetic)


def test_ground_state_ratio_is_flat(gs):
    mu, drift = fit_mu(gs)
    assert mu > 0 and drift <= 2e-2


def test_drift_shrinks_outward(gs):
    drifts = [fit_mu(gs, window=(lo, lo + 0.1))[1] for lo in (0.3, 0.45, 0.6)]
    assert drifts[0] > drifts[1] > drifts[2]


def test_rough_rate_decreases_toward_limit(gs):
    _, rates = rough_rate_profile(gs)
    assert np.all(np.diff(rates) < 0)
    assert rates[-1] > -math.sqrt(gs.M)


# -- rough comparison functions --------------------------------------------


@pytest.fixture(scope="module")
def log_potential():
    g = make_log_grid(1e-3, 1e4, 4096)
    return RadialProfile(g, 4.0 * np.log(g.nodes))  # V = lam ln r, lam = 4


def test_rough_below_critical_rate_is_super(log_potential):
    # (-Lap W + V W)/W ~ (lam - tau^2) ln r: positive for tau < sqrt(lam)
    rep = rough_subsuper_check(2.0 * 0.9, log_potential, 2.0)
    assert rep.verdict is SignVerdict.SUPER
    assert rep.r_uniform < 1e4


def test_rough_above_critical_rate_is_sub(log_potential):
    rep = rough_subsuper_check(2.0 * 1.1, log_potential, 2.0)
    assert rep.verdict is SignVerdict.SUB


def test_rough_critical_rate_is_inconclusive(log_potential):
    rep = rough_subsuper_check(2.0, log_potential, 2.0)
    assert rep.verdict is SignVerdict.INCONCLUSIVE and rep.note


def test_rough_sign_ratio_against_symbolic_derivatives(log_potential):
    # oracle: -W''/W - W'/(r W) + V from the closed form by complex-step differentiation
    tau = 1.7
    rep = rough_subsuper_check(tau, log_potential, 2.0)
    r = rep.r[::400]

    def logw(x):
        return -tau * x * np.sqrt(np.log(x))

    h = 1e-20
    d1 = np.imag(logw(r + 1j * h)) / h
    eps = 1e-4 * r
    d2 = (logw(r + eps) - 2 * logw(r) + logw(r - eps)) / eps**2
    expected = -(d2 + d1 * d1) - d1 / r + 4.0 * np.log(r)
    assert np.allclose(rep.ratio[::400], expected, rtol=1e-5)


def test_comparison_needs_R_above_one(log_potential):
    with pytest.raises(InputDomainError):
        rough_subsuper_check(1.0, log_potential, 0.5)


# -- refined comparison functions ------------------------------------------


@pytest.fixture(scope="module")
def far_potential(gs):
    return RadialProfile(gs.grid, gs.a + gs.M * gs.grid.t)


@pytest.mark.parametrize(
    "tau, sign, kind, verdict",
    [
        (-1.0, "-", ComparisonKind.REFINED_SUB_MINUS, SignVerdict.SUB),
        (1.0, "-", ComparisonKind.REFINED_SUPER_MINUS, SignVerdict.SUPER),
        (1.0, "+", ComparisonKind.REFINED_SUB_PLUS, SignVerdict.SUB),
        (-1.0, "+", ComparisonKind.REFINED_SUPER_PLUS, SignVerdict.SUPER),
    ],
)
def test_refined_signs(far_potential, tau, sign, kind, verdict):
    func, rep = refined_subsuper(tau, sign, 1.0, far_potential, 2.0)
    assert func.kind is kind
    assert rep.verdict is verdict
    assert rep.r_uniform < 20.0
    assert np.all(np.isfinite(func.log_values))


def test_refined_without_correction_is_inconclusive(far_potential):
    func, rep = refined_subsuper(0.0, "-", 1.0, far_potential, 2.0)
    assert func.kind is None and rep.verdict is SignVerdict.INCONCLUSIVE


def test_refined_domain_errors(far_potential):
    with pytest.raises(InputDomainError):
        refined_subsuper(5.0, "-", 1.0, far_potential, 2.0)  # 1 - tau/r <= 0 at r < 5
    with pytest.raises(InputDomainError):
        refined_subsuper(1.0, "x", 1.0, far_potential, 2.0)
    with pytest.raises(InputDomainError):
        refined_subsuper(1.0, "-", 1.5, far_potential, 2.0)


def test_refined_ratio_gap_decays(far_potential):
    k = ratio_decay_exponent(far_potential, 2.0, beta=1.0)
    assert k > 0.5


def test_ground_state_is_bracketed(gs):
    check = anchored_bracket_check(gs)
    assert check.holds
    assert check.under_report.verdict is SignVerdict.SUB
    assert check.over_report.verdict is SignVerdict.SUPER
