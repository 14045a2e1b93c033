#!/usr/bin/env python3
"""
Physics Module for LPR-ADER
Handles compressible Euler/Navier-Stokes state algebra: EOS, fluxes, stress tensor, wave speeds

Array convention: the last axis of a state holds (rho, rho*u, rho*v, rho*w, rho*E) for
conserved states and (rho, u, v, w, p) for primitive states. Gradients carry an extra
axis before it, grad[..., d, k] = dQ_k/dx_d, and so do flux tensors, F[..., d, k].
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from errors import ConfigurationError, PositivityError

logger = logging.getLogger('LPR-ADER.Physics')

NVAR = 5


@dataclass(frozen=True)
class GasParams:
    """Ideal gas with constant viscosity and heat conduction"""

    gamma: float = 1.4
    R: float = 1.0
    mu: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ConfigurationError(f"gamma must be > 1, got {self.gamma}")
        if not self.R > 0.0:
            raise ConfigurationError(f"Gas constant must be > 0, got {self.R}")
        if self.mu < 0.0 or self.kappa < 0.0:
            raise ConfigurationError(f"Transport coefficients must be >= 0 (mu={self.mu}, kappa={self.kappa})")

    @property
    def c_v(self) -> float:
        return self.R / (self.gamma - 1.0)

    @property
    def prandtl(self) -> float:
        """Pr = mu*gamma*c_v/kappa, infinite for kappa = 0"""
        if self.kappa == 0.0:
            return float('inf')
        return self.mu * self.gamma * self.c_v / self.kappa


@dataclass
class ConservedState:
    rho: float
    mom: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rhoE: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([self.rho, *np.asarray(self.mom, dtype=float), self.rhoE])

    @classmethod
    def from_array(cls, q) -> 'ConservedState':
        q = np.asarray(q, dtype=float)
        return cls(float(q[0]), q[1:4].copy(), float(q[4]))


@dataclass
class PrimitiveState:
    rho: float
    vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    p: float = 1.0

    def to_array(self) -> np.ndarray:
        return np.array([self.rho, *np.asarray(self.vel, dtype=float), self.p])

    @classmethod
    def from_array(cls, w) -> 'PrimitiveState':
        w = np.asarray(w, dtype=float)
        return cls(float(w[0]), w[1:4].copy(), float(w[4]))


@dataclass
class FluxTensor:
    """Flux vectors per Cartesian direction"""
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray

    @classmethod
    def from_array(cls, F) -> 'FluxTensor':
        return cls(F[..., 0, :], F[..., 1, :], F[..., 2, :])

    def to_array(self) -> np.ndarray:
        return np.stack([self.f, self.g, self.h], axis=-2)


@dataclass
class StateGradient:
    dx: np.ndarray
    dy: np.ndarray
    dz: np.ndarray

    def to_array(self) -> np.ndarray:
        return np.stack([self.dx, self.dy, self.dz], axis=-2)


def _check_positive(values: np.ndarray, name: str, cell: Optional[int]):
    bad = ~(values > 0.0)
    if np.any(bad):
        raise PositivityError(f"Non-positive {name} {np.min(values):.6g}", cell)


def cons_to_prim(q, gas: GasParams, cell: Optional[int] = None):
    """Conserved to primitive variables through the ideal gas EOS"""
    if isinstance(q, ConservedState):
        return PrimitiveState.from_array(cons_to_prim(q.to_array(), gas, cell))
    q = np.asarray(q, dtype=float)
    rho = q[..., 0]
    _check_positive(rho, 'density', cell)
    vel = q[..., 1:4] / rho[..., None]
    p = (gas.gamma - 1.0) * (q[..., 4] - 0.5 * rho * np.sum(vel * vel, axis=-1))
    _check_positive(p, 'pressure', cell)
    w = np.empty_like(q)
    w[..., 0] = rho
    w[..., 1:4] = vel
    w[..., 4] = p
    return w


def prim_to_cons(w, gas: GasParams, cell: Optional[int] = None):
    """Primitive to conserved variables, rhoE = p/(gamma-1) + rho|v|^2/2"""
    if isinstance(w, PrimitiveState):
        return ConservedState.from_array(prim_to_cons(w.to_array(), gas, cell))
    w = np.asarray(w, dtype=float)
    rho = w[..., 0]
    _check_positive(rho, 'density', cell)
    _check_positive(w[..., 4], 'pressure', cell)
    q = np.empty_like(w)
    q[..., 0] = rho
    q[..., 1:4] = rho[..., None] * w[..., 1:4]
    q[..., 4] = w[..., 4] / (gas.gamma - 1.0) + 0.5 * rho * np.sum(w[..., 1:4] ** 2, axis=-1)
    return q


def viscous_stress(w, grad_v, gas: GasParams, mu=None) -> np.ndarray:
    """sigma = (p + 2/3 mu div v) I - mu (grad v + grad v^T), pressure included

    Args:
        w: primitive state(s), (..., 5) or PrimitiveState
        grad_v: velocity gradient(s), grad_v[..., i, j] = dv_i/dx_j
        mu: dynamic viscosity override (scalar or per point), defaults to gas.mu
    """
    if isinstance(w, PrimitiveState):
        w = w.to_array()
    w = np.asarray(w, dtype=float)
    grad_v = np.asarray(grad_v, dtype=float)
    mu = np.asarray(gas.mu if mu is None else mu, dtype=float)
    p = w[..., 4]
    div = np.trace(grad_v, axis1=-2, axis2=-1)
    eye = np.eye(3)
    sigma = (p + (2.0 / 3.0) * mu * div)[..., None, None] * eye
    sigma = sigma - mu[..., None, None] * (grad_v + np.swapaxes(grad_v, -1, -2))
    return sigma


def velocity_gradient(q: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """dv_i/dx_j from conserved state and conserved gradient via the quotient rule"""
    rho = q[..., 0]
    vel = q[..., 1:4] / rho[..., None]
    # grad[..., j, 1+i] - v_i grad[..., j, 0], transposed to [i, j]
    dm = np.swapaxes(grad[..., :, 1:4], -1, -2)
    drho = grad[..., :, 0]
    return (dm - vel[..., :, None] * drho[..., None, :]) / rho[..., None, None]


def temperature_gradient(q: np.ndarray, grad: np.ndarray, gas: GasParams) -> np.ndarray:
    """grad T with T = p/(rho R)"""
    rho = q[..., 0]
    vel = q[..., 1:4] / rho[..., None]
    p = (gas.gamma - 1.0) * (q[..., 4] - 0.5 * rho * np.sum(vel * vel, axis=-1))
    drho = grad[..., :, 0]
    dm = grad[..., :, 1:4]
    dE = grad[..., :, 4]
    ke = 0.5 * np.sum(vel * vel, axis=-1)
    dp = (gas.gamma - 1.0) * (dE - np.einsum('...i,...di->...d', vel, dm) + ke[..., None] * drho)
    return (dp * rho[..., None] - p[..., None] * drho) / (rho[..., None] ** 2 * gas.R)


def total_flux(q, grad, gas: GasParams, mu=None, cell: Optional[int] = None):
    """Inviscid plus viscous flux tensor F[..., d, k]

    Args:
        q: conserved state(s), (..., 5) or ConservedState
        grad: conserved gradient(s) (..., 3, 5), StateGradient or None for zero gradients
        mu: viscosity override, scalar or per point; defaults to gas.mu
    """
    if isinstance(q, ConservedState):
        g = grad.to_array() if isinstance(grad, StateGradient) else grad
        return FluxTensor.from_array(total_flux(q.to_array(), g, gas, mu, cell))
    if isinstance(grad, StateGradient):
        grad = grad.to_array()
    q = np.asarray(q, dtype=float)
    w = cons_to_prim(q, gas, cell)
    rho = w[..., 0]
    vel = w[..., 1:4]
    p = w[..., 4]
    mu = np.asarray(gas.mu if mu is None else mu, dtype=float)

    F = np.empty(q.shape[:-1] + (3, NVAR))
    F[..., :, 0] = q[..., 1:4]
    # rho v_d v_i
    F[..., :, 1:4] = rho[..., None, None] * vel[..., :, None] * vel[..., None, :]
    F[..., :, 4] = vel * q[..., 4][..., None]

    viscous = grad is not None and (np.any(mu > 0.0) or gas.kappa > 0.0)
    if not viscous:
        for d in range(3):
            F[..., d, 1 + d] += p
        F[..., :, 4] += vel * p[..., None]
        return F

    grad = np.asarray(grad, dtype=float)
    sigma = viscous_stress(w, velocity_gradient(q, grad), gas, mu)
    F[..., :, 1:4] += np.swapaxes(sigma, -1, -2)
    F[..., :, 4] += np.einsum('...i,...id->...d', vel, sigma)
    if gas.kappa > 0.0:
        F[..., :, 4] -= gas.kappa * temperature_gradient(q, grad, gas)
    return F


def sound_speed(q: np.ndarray, gas: GasParams, cell: Optional[int] = None) -> np.ndarray:
    w = cons_to_prim(q, gas, cell)
    return np.sqrt(gas.gamma * w[..., 4] / w[..., 0])


def eigenvalues(q, gas: GasParams, mu=None, cell: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Convective eigenvalues (|v|+c, |v|, |v|, |v|, |v|-c) and viscous (4mu/(3rho), kappa/(c_v rho))"""
    if isinstance(q, ConservedState):
        q = q.to_array()
    q = np.asarray(q, dtype=float)
    w = cons_to_prim(q, gas, cell)
    rho = w[..., 0]
    speed = np.linalg.norm(w[..., 1:4], axis=-1)
    c = np.sqrt(gas.gamma * w[..., 4] / rho)
    lam = np.stack([speed + c, speed, speed, speed, speed - c], axis=-1)
    mu = np.asarray(gas.mu if mu is None else mu, dtype=float)
    lam_visc = np.stack(np.broadcast_arrays(4.0 * mu / (3.0 * rho), gas.kappa / (gas.c_v * rho)), axis=-1)
    return lam, lam_visc


def max_signal_speed(qL, qR, n, gas: GasParams, mu_l=None, mu_r=None) -> Tuple[np.ndarray, np.ndarray]:
    """Largest |v.n| + c and largest viscous eigenvalue over both states"""
    if isinstance(qL, ConservedState):
        qL = qL.to_array()
    if isinstance(qR, ConservedState):
        qR = qR.to_array()
    n = np.asarray(n, dtype=float)
    out = []
    for q, mu in ((qL, mu_l), (qR, mu_r)):
        w = cons_to_prim(q, gas)
        c = np.sqrt(gas.gamma * w[..., 4] / w[..., 0])
        vn = np.abs(np.sum(w[..., 1:4] * n, axis=-1))
        _, lam_visc = eigenvalues(q, gas, mu)
        out.append((vn + c, np.max(lam_visc, axis=-1)))
    return np.maximum(out[0][0], out[1][0]), np.maximum(out[0][1], out[1][1])


def mach_number(q: np.ndarray, gas: GasParams) -> np.ndarray:
    w = cons_to_prim(q, gas)
    return np.linalg.norm(w[..., 1:4], axis=-1) / np.sqrt(gas.gamma * w[..., 4] / w[..., 0])
