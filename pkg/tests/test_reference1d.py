import numpy as np
import pytest

from cases import SphericalExplosion
from errors import ConfigurationError
from physics import GasParams
from reference1d import SphericalMuscl, minmod, muscl_1d_reference


def test_minmod():
    a = np.array([1.0, -2.0, 3.0, 0.0, -1.0])
    b = np.array([2.0, -1.0, -3.0, 5.0, -4.0])
    np.testing.assert_array_equal(minmod(a, b), [1.0, -1.0, 0.0, 0.0, -1.0])


def test_grid():
    solver = SphericalMuscl(4, GasParams())
    np.testing.assert_allclose(solver.r, [0.125, 0.375, 0.625, 0.875])
    assert solver.area[0] == 0.0
    assert solver.volume.sum() == pytest.approx(1.0 / 3.0)


def test_invalid_arguments():
    with pytest.raises(ConfigurationError):
        SphericalMuscl(3, GasParams())
    with pytest.raises(ConfigurationError):
        SphericalMuscl(100, GasParams(), cfl=1.5)
    with pytest.raises(ConfigurationError):
        muscl_1d_reference(100, -0.1)


def test_uniform_state_at_rest_stays_put():
    gas = GasParams()
    solver = SphericalMuscl(50, gas)
    U = np.stack([np.ones(50), np.zeros(50), np.full(50, 2.5)])
    dU, outflow = solver.rhs(U)
    np.testing.assert_allclose(dU, 0.0, atol=1e-12)
    assert outflow == 0.0


def test_zero_final_time_returns_initial_profile():
    profile = muscl_1d_reference(64, 0.0, alpha0=0.05)
    initial = SphericalExplosion(alpha0=0.05).radial_initial(profile.r)
    assert profile.steps == 0
    np.testing.assert_allclose(profile.rho, initial[:, 0])
    np.testing.assert_allclose(profile.p, initial[:, 2])
    np.testing.assert_allclose(profile.speed, 0.0)


def test_mass_is_conserved():
    profile = muscl_1d_reference(200, 0.05)
    assert profile.steps > 0
    assert profile.t == 0.05
    assert profile.conservation_error() < 1e-10
    assert np.all(profile.rho > 0.0) and np.all(profile.p > 0.0)


@pytest.mark.slow
def test_explosion_wave_pattern():
    profile = muscl_1d_reference(2000, 0.25)
    assert profile.conservation_error() < 1e-10
    # outgoing shock still inside the domain, compressed gas behind it
    assert profile.rho[-1] == pytest.approx(0.125)
    assert profile.p[-1] == pytest.approx(0.1)
    assert profile.p[(profile.r > 0.6) & (profile.r < 0.95)].max() > 0.15
    assert profile.speed.max() > 0.3
