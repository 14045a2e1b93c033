import numpy as np
import pytest
from math import erf, pi, sqrt

from cases import (CASES, FreeStream, SphericalExplosion, StokesFirstProblem, SteadyVortex, TaylorGreen,
                   TravellingVortex, UnsupportedExactSolution, make_case)
from dg import DIRICHLET, TRANSMISSIVE
from errors import ConfigurationError


def test_vortex_far_field_is_background():
    w = SteadyVortex().initial(np.array([0.0, 0.0, 3.0]))
    np.testing.assert_allclose(w, [1.0, 0.0, 0.0, 0.0, 1.0], atol=1e-9)


def test_vortex_core_is_isentropic():
    case = SteadyVortex()
    w = case.initial(np.array([5.0, 5.0, 1.0]))
    assert w[0] < 1.0
    assert w[4] == pytest.approx(w[0] ** 1.4)
    np.testing.assert_allclose(w[1:4], 0.0, atol=1e-15)


def test_steady_vortex_does_not_move():
    case = SteadyVortex()
    x = np.random.default_rng(0).uniform(0.0, 10.0, size=(20, 3))
    np.testing.assert_array_equal(case.exact(x, 3.0), case.initial(x))


def test_travelling_vortex_is_advected():
    case = TravellingVortex()
    x = np.array([[5.5, 4.0, 2.0], [7.0, 6.5, 8.0]])
    np.testing.assert_allclose(case.exact(x + 1.0 * np.array([1.0, 1.0, 0.0]), 1.0), case.exact(x, 0.0))
    assert case.exact(np.array([6.0, 6.0, 0.0]), 1.0)[1] == pytest.approx(1.0)


def test_explosion_interface_value():
    case = SphericalExplosion(alpha0=0.1)
    w = case.initial(np.array([1.0, 0.5, 0.5]))
    assert w[4] == pytest.approx(0.55)
    assert w[0] == pytest.approx(0.5625)
    sharp = SphericalExplosion(alpha0=0.0)
    assert sharp.initial(np.array([0.5, 0.5, 0.6]))[0] == 1.0
    assert sharp.initial(np.array([0.0, 0.0, 0.0]))[4] == pytest.approx(0.1)


def test_explosion_setup_uses_smallest_cell():
    case = SphericalExplosion()
    case.setup(0.2)
    assert case.alpha0 == pytest.approx(0.3)
    assert case.boundary.default == TRANSMISSIVE
    profile = case.radial_initial(np.array([0.0, 0.5, 1.0]))
    assert profile.shape == (3, 3)
    np.testing.assert_allclose(profile[:, 1], 0.0)


def test_explosion_has_no_exact_solution():
    case = SphericalExplosion()
    assert not case.has_exact
    with pytest.raises(UnsupportedExactSolution):
        case.exact(np.zeros(3), 0.1)


def test_taylor_green_initial_velocity():
    w = TaylorGreen().initial(np.array([pi / 2, 0.0, 1.3]))
    assert w[1] == pytest.approx(1.0)
    assert w[2] == pytest.approx(0.0, abs=1e-15)


def test_taylor_green_decay():
    case = TaylorGreen(nu=0.1)
    x = np.array([pi / 2, 0.0, 0.0])
    assert case.exact(x, 2.0)[1] == pytest.approx(np.exp(-0.4))
    assert case.initial(x)[4] == pytest.approx(100.0 / 1.4 + 0.25 * (np.cos(pi) + 1.0))


def test_stokes_profile():
    case = StokesFirstProblem()
    assert case.exact(np.array([0.5, 0.1, 0.1]), 0.7)[2] == pytest.approx(0.0, abs=1e-15)
    assert case.exact(np.array([50.0, 0.1, 0.1]), 0.3)[2] == pytest.approx(-0.1)
    assert case.exact(np.array([-50.0, 0.1, 0.1]), 0.3)[2] == pytest.approx(0.1)
    assert case.initial(np.array([0.6, 0.0, 0.0]))[4] == pytest.approx(1 / 1.4)


def test_stokes_starts_from_smoothed_layer():
    case = StokesFirstProblem()
    v = case.initial(np.array([[0.5, 0.1, 0.1], [0.51, 0.1, 0.1]]))[:, 2]
    assert v[0] == pytest.approx(0.0, abs=1e-15)
    assert v[1] == pytest.approx(-0.1 * erf(0.01 / (2.0 * sqrt(1e-3 * 0.05))))
    assert -0.1 < v[1] < -0.05


def test_stokes_needs_viscosity():
    with pytest.raises(ConfigurationError):
        StokesFirstProblem(nu=0.0)


@pytest.mark.parametrize('name', [n for n, cls in CASES.items() if cls.has_exact])
def test_initial_matches_exact_at_zero(name):
    case = make_case(name)
    lo, hi = np.array(case.domain[:3]), np.array(case.domain[3:])
    x = lo + (hi - lo) * np.random.default_rng(1).random((10, 3))
    np.testing.assert_allclose(case.initial(x), case.exact(x, 0.0))
    assert case.boundary.default == DIRICHLET


def test_make_case_viscosity_override():
    assert make_case('taylor-green').mu == pytest.approx(1e-2)
    assert make_case('taylor-green', nu=0.05).mu == pytest.approx(0.05)
    assert make_case('steady-vortex').mu == 0.0


def test_unknown_case():
    with pytest.raises(ConfigurationError, match='Unknown case'):
        make_case('riemann-2d')


def test_free_stream_is_uniform():
    w = FreeStream().exact(np.random.default_rng(3).random((4, 6, 3)), 0.2)
    assert w.shape == (4, 6, 5)
    np.testing.assert_array_equal(w, np.broadcast_to(FreeStream.state, (4, 6, 5)))
