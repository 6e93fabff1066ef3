"""Grids, radial quadrature, shell potentials and tail bounds."""
import math

import numpy as np
import pytest
from scipy.integrate import quad

from choquard_lab.errors import InputDomainError, StructuralError
from choquard_lab.radial_core import (
    RadialProfile,
    cumulative_radial,
    exterior_potential,
    integrate_radial,
    make_log_grid,
    potential_tail_bound,
    shell_potential,
    tail_bound_profile,
)


@pytest.fixture(scope="module")
def g50():
    return make_log_grid(1e-6, 50, 4096)


def prof(grid, f):
    return RadialProfile(grid, f(grid.nodes))


# -- make_log_grid ---------------------------------------------------------


def test_degenerate_interval_rejected():
    with pytest.raises(InputDomainError):
        make_log_grid(1.0, 1.0, 64)


@pytest.mark.parametrize("args", [(0.0, 1.0, 64), (-1.0, 1.0, 64), (2.0, 1.0, 64), (1e-3, math.inf, 64), (1e-3, 1.0, 8), (1e-3, 1.0, 20.5)])
def test_invalid_grid_arguments(args):
    with pytest.raises(InputDomainError):
        make_log_grid(*args)


def test_grid_is_geometric_and_deterministic(g50):
    r = g50.nodes
    assert r[0] == 1e-6 and r[-1] == 50.0
    assert np.all(np.diff(r) > 0) and np.all(g50.weights > 0)
    ratios = r[1:] / r[:-1]
    assert np.allclose(ratios, ratios[0], rtol=1e-12)
    again = make_log_grid(1e-6, 50, 4096)
    assert np.array_equal(again.nodes, r) and np.array_equal(again.weights, g50.weights)


def test_weight_sum_is_half_r_max_squared(g50):
    # int_0^R r dr = R^2/2
    assert abs(g50.weights.sum() - 1250.0) / 1250.0 <= 1e-6


def test_exponential_moment_against_adaptive_quadrature(g50):
    oracle, _ = quad(lambda r: r * math.exp(-r), 0, 50, epsabs=1e-14, epsrel=1e-14)
    assert abs(integrate_radial(prof(g50, lambda r: np.exp(-r))) - oracle) <= 1e-8


# -- integrate_radial ------------------------------------------------------


def test_zero_function_integrates_to_zero(g50):
    assert integrate_radial(RadialProfile(g50, np.zeros(g50.n))) == 0.0


def test_gaussian_integral(g50):
    # int_0^inf r e^{-r^2} dr = 1/2
    assert abs(integrate_radial(prof(g50, lambda r: np.exp(-r * r))) - 0.5) <= 1e-9


@pytest.mark.parametrize("p", [0, 1, 2])
def test_monomials_reproduced_at_fourth_order(p):
    exact = 50.0 ** (p + 2) / (p + 2)
    errors = []
    for n in (2049, 4097):
        g = make_log_grid(1e-6, 50, n)
        errors.append(abs(integrate_radial(prof(g, lambda r: r**p)) - exact) / exact)
    assert errors[1] <= 1e-8
    assert errors[0] / errors[1] >= 2**3.5


def test_cumulative_matches_antiderivative(g50):
    c = cumulative_radial(prof(g50, lambda r: np.exp(-r)))
    r = g50.nodes
    exact = 1.0 - (1.0 + r) * np.exp(-r)
    assert np.max(np.abs(c - exact)) <= 1e-9


def test_profile_validation(g50):
    with pytest.raises(StructuralError):
        RadialProfile(g50, np.ones(10))
    with pytest.raises(InputDomainError):
        RadialProfile(g50, np.full(g50.n, np.nan))
    p = RadialProfile(g50, np.ones(g50.n))
    with pytest.raises(ValueError):
        p.values[0] = 2.0
    with pytest.raises(StructuralError):
        integrate_radial(np.ones(g50.n))


def test_csv_round_trip_real_and_complex(tmp_path):
    g = make_log_grid(1e-3, 10, 64)
    for values in (np.exp(-g.nodes) / 3.0, np.exp(-g.nodes) * (1 + 1j / 7)):
        p = RadialProfile(g, values)
        path = tmp_path / "p.csv"
        p.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == ("r,value,value_im" if p.is_complex else "r,value")
        back = RadialProfile.from_csv(path, g)
        assert np.array_equal(back.values, p.values)


# -- shell_potential -------------------------------------------------------


def test_zero_density_gives_zero_potential(g50):
    assert np.all(shell_potential(RadialProfile(g50, np.zeros(g50.n))).values == 0.0)


def test_negative_density_rejected(g50):
    with pytest.raises(InputDomainError):
        shell_potential(RadialProfile(g50, -np.exp(-g50.nodes)))


def test_unit_disc_indicator_outside():
    # density 1 on (0, 1], seen from r = 2: int_0^1 s ln(1/2) ds = -(1/2) ln 2
    g = make_log_grid(1e-6, 1.0, 4096)
    dens = RadialProfile(g, np.ones(g.n))
    assert exterior_potential(dens, 2.0) == pytest.approx(-0.5 * math.log(2.0), abs=1e-10)
    # inside: -(r^2/2) ln r - int_r^1 s ln s ds = (1 - r^2)/4
    r = g.nodes
    w = shell_potential(dens).values
    assert np.max(np.abs(w - (1 - r * r) / 4)) <= 1e-10


def test_gaussian_density_against_closed_form(g50):
    # density e^{-s^2}: w(r) = -(1/2) ln r - E1(r^2)/4
    from scipy.special import exp1

    r = g50.nodes
    w = shell_potential(prof(g50, lambda s: np.exp(-s * s))).values
    exact = -0.5 * np.log(r) - exp1(r * r) / 4
    assert np.max(np.abs(w - exact)) <= 1e-9


def test_shell_potential_is_nonincreasing(g50):
    w = shell_potential(prof(g50, lambda s: (1 + s) * np.exp(-s))).values
    assert np.all(np.diff(w) <= 1e-13)


def test_exterior_potential_is_monopole(g50):
    dens = prof(g50, lambda s: np.exp(-s * s))
    m = integrate_radial(dens)
    assert exterior_potential(dens, 60.0) == pytest.approx(-m * math.log(60.0), rel=1e-14)
    with pytest.raises(InputDomainError):
        exterior_potential(dens, 10.0)


# -- potential_tail_bound --------------------------------------------------


def test_tail_bound_empty_tail():
    g = make_log_grid(1e-6, 10, 1024)
    dens = RadialProfile(g, (g.nodes <= 2.0).astype(float))
    assert potential_tail_bound(dens, 3.0) == 0.0


def test_tail_bound_indicator_closed_form():
    # density 1 on (0, 2], r = 1: int_1^2 s ln s ds = 2 ln 2 - 3/4
    g = make_log_grid(1e-6, 2.0, 8193)
    dens = RadialProfile(g, np.ones(g.n))
    assert potential_tail_bound(dens, 1.0) == pytest.approx(2 * math.log(2) - 0.75, abs=1e-10)


def test_tail_bound_off_node_interpolates():
    g = make_log_grid(1e-6, 2.0, 8193)
    dens = RadialProfile(g, np.ones(g.n))
    r = 1.2345
    exact = (4 * math.log(2) - 2) / 2 - (r * r * math.log(r) / 2 - r * r / 4) - math.log(r) * (2 - r * r / 2)
    assert potential_tail_bound(dens, r) == pytest.approx(exact, abs=1e-10)


def test_tail_bound_out_of_range():
    g = make_log_grid(1e-3, 2.0, 64)
    with pytest.raises(InputDomainError):
        potential_tail_bound(RadialProfile(g, np.ones(g.n)), 3.0)


def test_tail_law_for_nonnegative_density(g50):
    dens = prof(g50, lambda s: s * s * np.exp(-s))
    m = integrate_radial(dens)
    w = shell_potential(dens).values
    bound = tail_bound_profile(dens)
    assert np.all(np.abs(w + m * g50.t) <= bound + 1e-11)


def test_ground_state_tail_bound_is_negligible(gs):
    r = 0.8 * gs.grid.r_max
    assert potential_tail_bound(RadialProfile(gs.grid, gs.u.values**2), r) < 1e-10
