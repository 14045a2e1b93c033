#!/usr/bin/env python3
"""
Limiter Module for LPR-ADER
Handles troubled-cell detection with the flattener variable and the artificial
viscosity injected into troubled cells for the upcoming step
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from config import Config
from dg import BoundaryCondition, Discretization, ghost_states
from physics import cons_to_prim

logger = logging.getLogger('LPR-ADER.Limiter')


@dataclass
class LimiterState:
    """Per-cell flattener, added viscosity and effective viscosity"""

    beta: np.ndarray
    mu_add: np.ndarray
    mu: np.ndarray
    troubled: np.ndarray

    @property
    def n_troubled(self) -> int:
        return int(np.count_nonzero(self.troubled))

    @property
    def fraction(self) -> float:
        return self.n_troubled / max(1, len(self.beta))

    @classmethod
    def inactive(cls, n_cells: int, mu: float) -> 'LimiterState':
        zeros = np.zeros(n_cells)
        return cls(zeros, zeros.copy(), np.full(n_cells, float(mu)), np.zeros(n_cells, dtype=bool))

    def rows(self, step: int, t: float) -> List[Tuple]:
        """CSV rows (step, t, cell, beta, mu_add) of the troubled cells"""
        return [(step, t, int(c), float(self.beta[c]), float(self.mu_add[c]))
                for c in np.flatnonzero(self.troubled)]


def cell_divergence(volume: float, areas, normals, v_plus, v_minus) -> float:
    """(1/|P|) sum_k |dP_k| (v+ - v-).n_k over the faces of one cell

    v_minus are the face-mean interior traces, v_plus the neighbor or ghost ones,
    normals point outward.
    """
    jump = np.asarray(v_plus, dtype=float) - np.asarray(v_minus, dtype=float)
    return float(np.sum(np.asarray(areas) * np.sum(jump * np.asarray(normals), axis=-1)) / volume)


def _face_means(q: np.ndarray, gas) -> Tuple[np.ndarray, np.ndarray]:
    """Face-mean velocity (rows, 3) and the smallest nodal sound speed (rows,)"""
    w = cons_to_prim(q, gas)
    c = np.sqrt(gas.gamma * w[..., 4] / w[..., 0])
    return w[..., 1:4].mean(axis=-2), c.min(axis=-1)


def all_cell_divergences(disc: Discretization, u: np.ndarray, case, bc: BoundaryCondition,
                         t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Discrete velocity divergence and minimum trace sound speed of every cell

    An internal face adds the same (v_neighbor - v_owner).n |dP| to both of its cells.
    """
    f = disc.faces
    ctx = disc.context
    gas = disc.gas
    div = np.zeros(disc.n_cells)
    c_min = np.full(disc.n_cells, np.inf)

    if f.n_internal:
        v_o, c_o = _face_means(u[f.owner_dofs], gas)
        v_n, c_n = _face_means(u[f.neighbor_dofs], gas)
        jump = ctx.area * np.sum((v_n - v_o) * ctx.normal, axis=-1)
        np.add.at(div, f.owner, jump)
        np.add.at(div, f.neighbor, jump)
        c_face = np.minimum(c_o, c_n)
        np.minimum.at(c_min, f.owner, c_face)
        np.minimum.at(c_min, f.neighbor, c_face)

    if f.n_boundary:
        q_in = u[f.b_dofs]
        q_gh, _ = ghost_states(disc, q_in, t, case, bc)
        v_in, c_in = _face_means(q_in, gas)
        v_gh, c_gh = _face_means(q_gh, gas)
        np.add.at(div, f.b_cell, ctx.b_area * np.sum((v_gh - v_in) * ctx.b_normal, axis=-1))
        np.minimum.at(c_min, f.b_cell, np.minimum(c_in, c_gh))

    return div / disc.geom.volume, c_min


def flattener_beta(div_v, c_s_min, m1: float = Config.FLATTENER_M1) -> np.ndarray:
    """beta = min[1, max(0, -(div v + m1 c) / (m1 c))]"""
    mc = m1 * np.asarray(c_s_min, dtype=float)
    return np.clip(-(np.asarray(div_v, dtype=float) + mc) / mc, 0.0, 1.0)


def artificial_viscosity(beta, rho_max, lam_max, h, N: int, mu) -> np.ndarray:
    """mu_i = max(mu, rho |lam_max| h/(2N+1)) on troubled cells, mu elsewhere"""
    beta = np.asarray(beta, dtype=float)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), beta.shape)
    h_s = np.asarray(h, dtype=float) / (2 * N + 1)
    unity_re = np.asarray(rho_max, dtype=float) * np.asarray(lam_max, dtype=float) * h_s
    return np.where(beta > 0.0, np.maximum(mu, unity_re), mu)


def cell_maxima(disc: Discretization, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Largest density and |v| + c over the DOFs of every cell"""
    gas = disc.gas
    w = cons_to_prim(u, gas)
    lam = np.linalg.norm(w[:, 1:4], axis=1) + np.sqrt(gas.gamma * w[:, 4] / w[:, 0])
    starts = disc.dofs.offsets[:-1]
    return np.maximum.reduceat(w[:, 0], starts), np.maximum.reduceat(lam, starts)


def update_limiter(disc: Discretization, u: np.ndarray, t: float, case, bc: BoundaryCondition,
                   mu: float, enabled: bool = True, step: Optional[int] = None) -> LimiterState:
    """Detector and viscosity for the step starting at t"""
    if not enabled:
        return LimiterState.inactive(disc.n_cells, mu)
    div, c_min = all_cell_divergences(disc, u, case, bc, t)
    beta = flattener_beta(div, c_min)
    rho_max, lam_max = cell_maxima(disc, u)
    mu_cell = artificial_viscosity(beta, rho_max, lam_max, disc.geom.h, disc.degree, mu)
    troubled = beta > 0.0
    state = LimiterState(beta, mu_cell - mu, mu_cell, troubled)
    if state.n_troubled:
        logger.debug(f"Step {step}: {state.n_troubled} troubled cells ({100.0 * state.fraction:.1f}%), "
                     f"max mu_add {state.mu_add.max():.3e}")
    return state
