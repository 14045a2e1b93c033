#!/usr/bin/env python3
"""
Cases Module for LPR-ADER
Benchmark initial conditions, analytic solutions and boundary setup
"""

import logging
from math import pi
from typing import Dict, Optional, Tuple, Type

import numpy as np
from scipy.special import erf

from dg import DIRICHLET, TRANSMISSIVE, BoundaryCondition
from errors import ConfigurationError
from physics import GasParams

logger = logging.getLogger('LPR-ADER.Cases')


class UnsupportedExactSolution(ConfigurationError):
    """The case has no closed-form solution"""


class TestCase:
    """Base case: primitive initial data Q0(x) and, where known, Q(x, t)"""

    __test__ = False  # keep pytest from collecting this class

    name = 'base'
    domain: Tuple[float, ...] = (0.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    t_final = 1.0
    has_exact = True
    error_fields: Tuple[str, ...] = ('rho',)

    def __init__(self, gas: Optional[GasParams] = None, nu: float = 0.0):
        self.gas = gas or GasParams()
        self.nu = nu

    @property
    def mu(self) -> float:
        """Dynamic viscosity, the cases run at unit reference density"""
        return self.nu

    @property
    def boundary(self) -> BoundaryCondition:
        return BoundaryCondition(DIRICHLET)

    def setup(self, h_min: float):
        """Mesh-dependent parameters; most cases have none"""

    def initial(self, x: np.ndarray) -> np.ndarray:
        return self.exact(x, 0.0)

    def exact(self, x: np.ndarray, t: float) -> np.ndarray:
        raise UnsupportedExactSolution(f"Case '{self.name}' has no analytic solution")


def _prim(rho, u, v, w, p) -> np.ndarray:
    return np.stack(np.broadcast_arrays(rho, u, v, w, p), axis=-1).astype(float)


class SteadyVortex(TestCase):
    """Isentropic vortex at rest in [0,10]^3, exact solution equals the initial condition"""

    name = 'steady-vortex'
    domain = (0.0, 0.0, 0.0, 10.0, 10.0, 10.0)
    t_final = 1.0
    strength = 5.0
    background = (0.0, 0.0, 0.0)

    def _vortex(self, x: np.ndarray, cx: float, cy: float) -> np.ndarray:
        g = self.gas.gamma
        eps = self.strength
        dx = x[..., 0] - cx
        dy = x[..., 1] - cy
        r2 = dx * dx + dy * dy
        dT = -(g - 1.0) * eps ** 2 / (8.0 * g * pi ** 2) * np.exp(1.0 - r2)
        amp = eps / (2.0 * pi) * np.exp(0.5 * (1.0 - r2))
        rho = (1.0 + dT) ** (1.0 / (g - 1.0))
        p = (1.0 + dT) ** (g / (g - 1.0))
        u0, v0, w0 = self.background
        return _prim(rho, u0 - amp * dy, v0 + amp * dx, w0 + 0.0 * dx, p)

    def exact(self, x: np.ndarray, t: float) -> np.ndarray:
        return self._vortex(np.asarray(x, dtype=float), 5.0, 5.0)


class TravellingVortex(SteadyVortex):
    """Same vortex advected by the background velocity (1, 1, 0)"""

    name = 'travelling-vortex'
    background = (1.0, 1.0, 0.0)

    def exact(self, x: np.ndarray, t: float) -> np.ndarray:
        return self._vortex(np.asarray(x, dtype=float), 5.0 + t * self.background[0], 5.0 + t * self.background[1])


class StokesFirstProblem(TestCase):
    """Viscous shear layer v(x, t) in [0,1]x[0,0.2]^2

    The +-0.1 shear step is started from its erf solution at t_offset, so initial() == exact(x, 0).
    """

    name = 'stokes'
    error_fields = ('v',)
    domain = (0.0, 0.0, 0.0, 1.0, 0.2, 0.2)
    t_final = 1.0
    v_left = 0.1
    v_right = -0.1
    t_offset = 0.05

    def __init__(self, gas: Optional[GasParams] = None, nu: float = 1e-3):
        super().__init__(gas, nu)
        if nu <= 0.0:
            raise ConfigurationError("The Stokes problem needs a positive viscosity")

    def exact(self, x: np.ndarray, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        arg = (x[..., 0] - 0.5) / (2.0 * np.sqrt(self.nu * (t + self.t_offset)))
        v = 0.5 * (self.v_left + self.v_right) + 0.5 * (self.v_right - self.v_left) * erf(arg)
        zero = 0.0 * x[..., 0]
        return _prim(1.0 + zero, zero, v, zero, 1.0 / self.gas.gamma + zero)


class SphericalExplosion(TestCase):
    """Smoothed spherical Riemann problem in [0,1]^3, no analytic solution"""

    name = 'explosion'
    domain = (0.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    t_final = 0.25
    has_exact = False
    radius = 0.5
    center = (0.5, 0.5, 0.5)
    rho_in, rho_out = 1.0, 0.125
    p_in, p_out = 1.0, 0.1

    def __init__(self, gas: Optional[GasParams] = None, nu: float = 0.0, alpha0: float = 0.0):
        super().__init__(gas, nu)
        self.alpha0 = alpha0

    @property
    def boundary(self) -> BoundaryCondition:
        return BoundaryCondition(TRANSMISSIVE)

    def setup(self, h_min: float):
        self.alpha0 = 1.5 * h_min
        logger.debug(f"Explosion smoothing width alpha0 = {self.alpha0:.4g}")

    def smooth(self, r: np.ndarray, inside: float, outside: float) -> np.ndarray:
        """1/2 [(out + in) + (out - in) erf((r - R)/alpha0)], a sharp step for alpha0 = 0"""
        r = np.asarray(r, dtype=float)
        if self.alpha0 > 0.0:
            s = erf((r - self.radius) / self.alpha0)
        else:
            s = np.sign(r - self.radius)
        return 0.5 * ((outside + inside) + (outside - inside) * s)

    def radial_initial(self, r: np.ndarray) -> np.ndarray:
        """(rho, u_r, p) on radii r"""
        zero = 0.0 * np.asarray(r, dtype=float)
        return np.stack([self.smooth(r, self.rho_in, self.rho_out), zero,
                         self.smooth(r, self.p_in, self.p_out)], axis=-1)

    def initial(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x - np.array(self.center), axis=-1)
        zero = 0.0 * r
        return _prim(self.smooth(r, self.rho_in, self.rho_out), zero, zero, zero,
                     self.smooth(r, self.p_in, self.p_out))


class TaylorGreen(TestCase):
    """Decaying 2D Taylor-Green vortex in [0, 2 pi]^3"""

    name = 'taylor-green'
    error_fields = ('u', 'v')
    domain = (0.0, 0.0, 0.0, 2.0 * pi, 2.0 * pi, 2.0 * pi)
    t_final = 0.5
    p0 = 100.0

    def __init__(self, gas: Optional[GasParams] = None, nu: float = 1e-2):
        super().__init__(gas, nu)

    def exact(self, x: np.ndarray, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        X, Y = x[..., 0], x[..., 1]
        decay = np.exp(-2.0 * self.nu * t)
        u = np.sin(X) * np.cos(Y) * decay
        v = -np.cos(X) * np.sin(Y) * decay
        p = self.p0 / self.gas.gamma + 0.25 * (np.cos(2.0 * X) + np.cos(2.0 * Y)) * decay ** 2
        return _prim(1.0 + 0.0 * X, u, v, 0.0 * X, p)


class FreeStream(TestCase):
    """Uniform flow, preserved exactly by the scheme on any mesh"""

    name = 'free-stream'
    domain = (0.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    t_final = 0.1
    state = (1.0, 0.3, -0.2, 0.1, 1.0)

    def exact(self, x: np.ndarray, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.array(self.state, dtype=float), x.shape[:-1] + (5,)).copy()


CASES: Dict[str, Type[TestCase]] = {
    cls.name: cls for cls in (SteadyVortex, TravellingVortex, StokesFirstProblem,
                              SphericalExplosion, TaylorGreen, FreeStream)
}


def make_case(name: str, gas: Optional[GasParams] = None, nu: Optional[float] = None) -> TestCase:
    """Instantiate a registered case, optionally overriding its viscosity"""
    cls = CASES.get(name)
    if cls is None:
        raise ConfigurationError(f"Unknown case '{name}', available: {', '.join(sorted(CASES))}")
    if nu is None:
        return cls(gas)
    return cls(gas, nu=nu)
