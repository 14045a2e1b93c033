#!/usr/bin/env python3
"""
ADER Module for LPR-ADER
Handles the cell-local space-time Galerkin predictor: transformed fluxes, fixed-point
iteration and time-averaged state and fluxes

Space-time arrays of a sub-tet use the index q*Np + j (temporal node q, spatial node j),
space-time cell arrays use q*N_i + dof. Time averages are averages over [t^n, t^n+dt],
the corrector carries the dt factor.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from afe import CellMatrices
from basis import UniversalMatrices
from config import Config
from errors import NumericalFault
from physics import GasParams, total_flux

logger = logging.getLogger('LPR-ADER.ADER')


@dataclass
class PredictorCoeffs:
    """Space-time predictor of one cell with its iteration record"""

    cell: int
    q: np.ndarray          # (n_time * N_i, 5)
    iterations: int
    residual: float
    converged: bool


@dataclass
class TimeAveraged:
    """Time averages of one cell

    Attributes:
        q_bar: (N_i, 5) averaged state in the cell basis
        flux: (n_sub, Np, 3, 5) averaged physical flux at sub-tet nodes
        flux_ref: (n_sub, 3, Np, 5) averaged reference flux J^-1 F (no dt)
        grad: (n_sub, Np, 3, 5) averaged physical state gradient, None for inviscid runs
    """

    q_bar: np.ndarray
    flux: np.ndarray
    flux_ref: np.ndarray
    grad: Optional[np.ndarray]


def is_viscous(gas: GasParams, mu) -> bool:
    return bool(np.any(np.asarray(gas.mu if mu is None else mu) > 0.0) or gas.kappa > 0.0)


def nodal_gradients(q_nodes: np.ndarray, Jinv: np.ndarray, U: UniversalMatrices) -> np.ndarray:
    """Physical gradients at the nodes by nodal collocation

    Args:
        q_nodes: (n_sub, n_time * Np, 5) or (n_sub, Np, 5)
        Jinv: (n_sub, 3, 3), Jinv[k, d, e] = dxi_d/dx_e

    Returns:
        (..., 3, 5) gradients with the node axis kept
    """
    n_sub = q_nodes.shape[0]
    Np = U.n_nodes
    slices = q_nodes.reshape(n_sub, -1, Np, q_nodes.shape[-1])
    grad_ref = np.einsum('jld,kqlv->kqjdv', U.node_grad, slices)
    grad = np.einsum('kde,kqjdv->kqjev', Jinv, grad_ref)
    return grad.reshape(q_nodes.shape[:-1] + (3, q_nodes.shape[-1]))


def nodal_fluxes(q_nodes: np.ndarray, Jinv: np.ndarray, U: UniversalMatrices, gas: GasParams,
                 mu=None, cell: Optional[int] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Physical flux F[k, node, e, v] at every node, plus the gradients used"""
    grad = nodal_gradients(q_nodes, Jinv, U) if is_viscous(gas, mu) else None
    return total_flux(q_nodes, grad, gas, mu, cell), grad


def transform_fluxes(q_nodes: np.ndarray, Jinv: np.ndarray, dt: float, U: UniversalMatrices,
                     gas: GasParams, mu=None, cell: Optional[int] = None) -> np.ndarray:
    """F*_d = dt * sum_e dxi_d/dx_e F_e, returned as (n_sub, 3, nodes, 5)"""
    F, _ = nodal_fluxes(q_nodes, Jinv, U, gas, mu, cell)
    return dt * np.einsum('kde,ktev->kdtv', Jinv, F)


def predictor_solve(cm: CellMatrices, u_hat: np.ndarray, dt: float, Jinv: np.ndarray, detJ: np.ndarray,
                    U: UniversalMatrices, gas: GasParams, mu=None,
                    tol: float = Config.PREDICTOR_TOLERANCE) -> PredictorCoeffs:
    """Fixed-point iteration q <- K1^-1 [F0 u - sum_k |J_k| K_d F*_d]

    Args:
        cm: matrices of the cell
        u_hat: (N_i, 5) cell coefficients at t^n
        Jinv, detJ: geometry of the cell's sub-tets
        mu: effective viscosity of the cell for this step
    """
    n = cm.n_dofs
    q = np.tile(u_hat, (U.n_time, 1))
    if dt == 0.0:
        return PredictorCoeffs(cm.cell, q, 0, 0.0, True)

    rhs0 = cm.f0 @ u_hat
    max_iter = 2 * (U.degree + 2)
    residual = np.inf
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        Fstar = transform_fluxes(q[cm.st_l2c], Jinv, dt, U, gas, mu, cm.cell)
        contrib = np.einsum('dab,kdbv->kav', U.stiff, Fstar) * detJ[:, None, None]
        rhs = rhs0.copy()
        np.subtract.at(rhs, cm.st_l2c, contrib)
        q_new = cm.k1_inv @ rhs
        if not np.all(np.isfinite(q_new)):
            raise NumericalFault("NaN in space-time predictor", cell=cm.cell)
        residual = float(np.max(np.abs(q_new - q)))
        q = q_new
        if residual <= tol * max(1.0, float(np.max(np.abs(q)))):
            converged = True
            break

    if not converged:
        logger.warning(f"⚠️ Predictor of cell {cm.cell} not converged after {iterations} iterations (residual {residual:.3e})")
    return PredictorCoeffs(cm.cell, q, iterations, residual, converged)


def time_average(pred: PredictorCoeffs, cm: CellMatrices, Jinv: np.ndarray, U: UniversalMatrices,
                 gas: GasParams, mu=None) -> TimeAveraged:
    """Apply the Gauss-Legendre weights over the temporal nodes of q and F(q)"""
    n = cm.n_dofs
    w = U.time_weights
    q_bar = np.einsum('q,qnv->nv', w, pred.q.reshape(U.n_time, n, -1))

    q_nodes = pred.q[cm.st_l2c]
    F, grad = nodal_fluxes(q_nodes, Jinv, U, gas, mu, cm.cell)
    n_sub = len(cm.subtets)
    F_bar = np.einsum('q,kqjev->kjev', w, F.reshape(n_sub, U.n_time, U.n_nodes, 3, -1))
    F_ref = np.einsum('kde,kjev->kdjv', Jinv, F_bar)
    grad_bar = None
    if grad is not None:
        grad_bar = np.einsum('q,kqjev->kjev', w, grad.reshape(n_sub, U.n_time, U.n_nodes, 3, -1))
    return TimeAveraged(q_bar, F_bar, F_ref, grad_bar)


@dataclass
class PredictorStats:
    max_iterations: int = 0
    max_residual: float = 0.0
    not_converged: int = 0

    def add(self, pred: PredictorCoeffs):
        self.max_iterations = max(self.max_iterations, pred.iterations)
        self.max_residual = max(self.max_residual, pred.residual)
        if not pred.converged:
            self.not_converged += 1

    def merge(self, other: 'PredictorStats'):
        self.max_iterations = max(self.max_iterations, other.max_iterations)
        self.max_residual = max(self.max_residual, other.max_residual)
        self.not_converged += other.not_converged
