#!/usr/bin/env python3
"""
DG Module for LPR-ADER
Handles the quadrature-free one-step corrector: volume term, Rusanov face fluxes with
viscous penalty, boundary ghost states and the DOF update

Update per cell: M_i (u^{n+1} - u^n) = dt [ sum_k |J_ik| V_d F*_d - sum_f |dP_f| Z G_f ],
with F* and G built from time averages (see ader).
"""

import logging
from dataclasses import dataclass, field
from math import pi, sqrt
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import cho_solve

from afe import CellDofMap, CellMatrices, FaceDofPermutation, build_all_cell_matrices, build_cell_dof_map, build_face_maps
from basis import ReferenceBasis, UniversalMatrices, assemble_universal_matrices, reference_basis
from errors import ConfigurationError, NumericalFault
from mesh import BOUNDARY_TAGS, CellGeometry, PolyMesh, compute_geometry
from physics import GasParams, max_signal_speed, prim_to_cons, total_flux

logger = logging.getLogger('LPR-ADER.DG')

DIRICHLET = 'dirichlet-exact'
TRANSMISSIVE = 'transmissive'
BC_KINDS = (DIRICHLET, TRANSMISSIVE)


@dataclass
class FaceFluxContext:
    """Face measures for the internal and boundary rows of a FaceDofPermutation"""

    area: np.ndarray
    normal: np.ndarray      # outward from the owner
    h_owner: np.ndarray
    h_neighbor: np.ndarray
    b_area: np.ndarray
    b_normal: np.ndarray
    b_h: np.ndarray


@dataclass
class BoundaryCondition:
    """Boundary kind per tag; unknown tags fall back to the default"""

    default: str = DIRICHLET
    per_tag: Dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        for kind in [self.default, *self.per_tag.values()]:
            if kind not in BC_KINDS:
                raise ConfigurationError(f"Unknown boundary kind '{kind}', expected one of {BC_KINDS}")

    def kind(self, tag: int) -> str:
        return self.per_tag.get(int(tag), self.default)


@dataclass
class Discretization:
    """Everything the predictor and corrector need about mesh and basis"""

    pm: PolyMesh
    geom: CellGeometry
    basis: ReferenceBasis
    U: UniversalMatrices
    dofs: CellDofMap
    cells: List[CellMatrices]
    faces: FaceDofPermutation
    context: FaceFluxContext
    gas: GasParams

    @property
    def degree(self) -> int:
        return self.basis.degree

    @property
    def n_cells(self) -> int:
        return self.pm.n_cells


def build_face_context(pm: PolyMesh, geom: CellGeometry, faces: FaceDofPermutation) -> FaceFluxContext:
    area = np.array([geom.face_area[c][f] for c, f in zip(faces.owner, faces.owner_face)])
    normal = np.array([geom.face_normal[c][f] for c, f in zip(faces.owner, faces.owner_face)]).reshape(-1, 3)
    b_area = np.array([geom.face_area[c][f] for c, f in zip(faces.b_cell, faces.b_face)])
    b_normal = np.array([geom.face_normal[c][f] for c, f in zip(faces.b_cell, faces.b_face)]).reshape(-1, 3)
    return FaceFluxContext(area, normal, geom.h[faces.owner], geom.h[faces.neighbor],
                           b_area, b_normal, geom.h[faces.b_cell])


def build_discretization(pm: PolyMesh, N: int, gas: GasParams, threads: int = 1) -> Discretization:
    """Geometry, DOF maps, cell matrices and face pairings for degree N"""
    geom = compute_geometry(pm)
    basis = reference_basis(N)
    U = assemble_universal_matrices(N)
    dofs = build_cell_dof_map(pm, basis)
    cells = build_all_cell_matrices(pm, dofs, geom, U, threads)
    faces = build_face_maps(pm, dofs, basis)
    context = build_face_context(pm, geom, faces)
    return Discretization(pm, geom, basis, U, dofs, cells, faces, context, gas)


def penalty_coefficient(N: int, h_plus, h_minus):
    """epsilon = (2N+1) / ((h+ + h-) sqrt(pi/2))"""
    return (2 * N + 1) / ((np.asarray(h_plus) + np.asarray(h_minus)) * sqrt(pi / 2.0))


def rusanov_flux(q_plus, q_minus, F_plus, F_minus, n, gas: GasParams, N: int, h_plus, h_minus,
                 mu_plus=None, mu_minus=None) -> np.ndarray:
    """G = 1/2 (F+ + F-).n - 1/2 (|lam_max| + 2 eps |lam_visc_max|) (q+ - q-)

    The minus side is the interior and n points away from it. Arrays broadcast over
    leading axes: q (..., 5), F (..., 3, 5), n (..., 3).
    """
    n = np.asarray(n, dtype=float)
    q_plus = np.asarray(q_plus, dtype=float)
    q_minus = np.asarray(q_minus, dtype=float)
    lam, lam_visc = max_signal_speed(q_minus, q_plus, n, gas, mu_minus, mu_plus)
    eps = penalty_coefficient(N, h_plus, h_minus)
    central = 0.5 * np.sum(n[..., :, None] * (np.asarray(F_plus) + np.asarray(F_minus)), axis=-2)
    speed = np.asarray(np.abs(lam) + 2.0 * eps * np.abs(lam_visc))
    return central - 0.5 * speed[..., None] * (q_plus - q_minus)


def ghost_states(disc: Discretization, q_in: np.ndarray, time: float, case,
                 bc: BoundaryCondition) -> Tuple[np.ndarray, np.ndarray]:
    """Conserved ghost states on boundary face nodes and the Dirichlet rows

    Transmissive rows copy the interior trace, Dirichlet rows take the exact solution.
    """
    faces = disc.faces
    q_ghost = q_in.copy()
    kinds = np.array([bc.kind(t) for t in faces.b_tag])
    rows = np.flatnonzero(kinds == DIRICHLET)
    if len(rows) == 0:
        return q_ghost, rows
    if case is None or not getattr(case, 'has_exact', False):
        name = getattr(case, 'name', None)
        raise ConfigurationError(f"Dirichlet boundary requires an analytic solution (case {name})")
    x = disc.dofs.coords[faces.b_dofs[rows]]
    q_ghost[rows] = prim_to_cons(case.exact(x, time), disc.gas)
    return q_ghost, rows


def apply_bc(disc: Discretization, q_in: np.ndarray, F_in: np.ndarray, grad_in: Optional[np.ndarray],
             time: float, case, bc: BoundaryCondition, mu_in=None):
    """Ghost states and fluxes on boundary face nodes

    Args:
        q_in: (n_b, nf, 5) interior trace; F_in: (n_b, nf, 3, 5) interior flux
        grad_in: interior gradients reused for the ghost viscous flux
        time: evaluation time of the exact solution (midpoint of the step)

    Returns:
        (q_ghost, F_ghost)
    """
    q_ghost, rows = ghost_states(disc, q_in, time, case, bc)
    F_ghost = F_in.copy()
    if len(rows) == 0:
        return q_ghost, F_ghost
    grad = None if grad_in is None else grad_in[rows]
    mu = None if mu_in is None else np.asarray(mu_in)[rows][:, None]
    F_ghost[rows] = total_flux(q_ghost[rows], grad, disc.gas, mu)
    return q_ghost, F_ghost


@dataclass
class SolverState:
    """Global DOF coefficients and the current time"""

    u: np.ndarray           # (n_global_dofs, 5)
    t: float = 0.0
    step: int = 0

    def cell_values(self, dofs: CellDofMap, cid: int) -> np.ndarray:
        return self.u[dofs.cell_slice(cid)]


@dataclass
class StepAverages:
    """Time averages of all cells gathered into global arrays"""

    q_bar: np.ndarray       # (n_global_dofs, 5)
    flux: np.ndarray        # (n_subtets, Np, 3, 5)
    flux_ref: np.ndarray    # (n_subtets, 3, Np, 5)
    grad: Optional[np.ndarray]

    @classmethod
    def gather(cls, disc: Discretization, averages: list) -> 'StepAverages':
        n_sub = disc.pm.n_subtets
        Np = disc.U.n_nodes
        q_bar = np.empty((disc.dofs.total, 5))
        flux = np.empty((n_sub, Np, 3, 5))
        flux_ref = np.empty((n_sub, 3, Np, 5))
        viscous = any(avg.grad is not None for avg in averages)
        grad = np.zeros((n_sub, Np, 3, 5)) if viscous else None
        for cm, avg in zip(disc.cells, averages):
            q_bar[disc.dofs.cell_slice(cm.cell)] = avg.q_bar
            flux[cm.subtets] = avg.flux
            flux_ref[cm.subtets] = avg.flux_ref
            if avg.grad is not None:
                grad[cm.subtets] = avg.grad
        return cls(q_bar, flux, flux_ref, grad)


def volume_update(disc: Discretization, avg: StepAverages, dt: float) -> np.ndarray:
    """dt * sum_k |J_ik| (V_xi f* + V_eta g* + V_zeta h*) scattered to global DOFs"""
    contrib = np.einsum('dml,kdlv->kmv', disc.U.deriv, avg.flux_ref) * disc.geom.detJ[:, None, None]
    R = np.zeros((disc.dofs.total, 5))
    np.add.at(R, disc.dofs.l2g, dt * contrib)
    return R


def internal_face_fluxes(disc: Discretization, avg: StepAverages, mu_cell: np.ndarray) -> np.ndarray:
    """Rusanov flux at the nodes of every internal face, owner orientation, (n_i, nf, 5)"""
    f = disc.faces
    ctx = disc.context
    q_o = avg.q_bar[f.owner_dofs]
    q_n = avg.q_bar[f.neighbor_dofs]
    F_o = avg.flux[f.owner_sub[:, None], f.owner_nodes]
    F_n = avg.flux[f.neighbor_sub[:, None], f.neighbor_nodes]
    n = ctx.normal[:, None, :]
    return rusanov_flux(q_n, q_o, F_n, F_o, n, disc.gas, disc.degree,
                        ctx.h_neighbor[:, None], ctx.h_owner[:, None],
                        mu_cell[f.neighbor][:, None], mu_cell[f.owner][:, None])


def boundary_face_fluxes(disc: Discretization, avg: StepAverages, mu_cell: np.ndarray, time: float,
                         case, bc: BoundaryCondition) -> np.ndarray:
    f = disc.faces
    ctx = disc.context
    q_in = avg.q_bar[f.b_dofs]
    F_in = avg.flux[f.b_sub[:, None], f.b_nodes]
    grad_in = None if avg.grad is None else avg.grad[f.b_sub[:, None], f.b_nodes]
    mu_b = mu_cell[f.b_cell]
    q_gh, F_gh = apply_bc(disc, q_in, F_in, grad_in, time, case, bc, mu_b)
    return rusanov_flux(q_gh, q_in, F_gh, F_in, ctx.b_normal[:, None, :], disc.gas, disc.degree,
                        ctx.b_h[:, None], ctx.b_h[:, None], mu_b[:, None], mu_b[:, None])


def surface_update(disc: Discretization, G_int: np.ndarray, G_bnd: np.ndarray, dt: float) -> np.ndarray:
    """dt * |dP| Z G per face: owner gets -, neighbor + in its own node order"""
    f = disc.faces
    ctx = disc.context
    Z = np.stack(disc.U.face_mass)
    R = np.zeros((disc.dofs.total, 5))
    if f.n_internal:
        w = (dt * ctx.area)[:, None, None]
        own = w * np.einsum('fab,fbv->fav', Z[f.owner_local], G_int)
        G_native = np.take_along_axis(G_int, f.perm[:, :, None], axis=1)
        nb = w * np.einsum('fab,fbv->fav', Z[f.neighbor_local], G_native)
        native_dofs = np.take_along_axis(f.neighbor_dofs, f.perm, axis=1)
        np.subtract.at(R, f.owner_dofs, own)
        np.add.at(R, native_dofs, nb)
    if f.n_boundary:
        w = (dt * ctx.b_area)[:, None, None]
        np.subtract.at(R, f.b_dofs, w * np.einsum('fab,fbv->fav', Z[f.b_local], G_bnd))
    return R


def step(state: SolverState, disc: Discretization, avg: StepAverages, dt: float, case=None,
         bc: Optional[BoundaryCondition] = None, mu_cell: Optional[np.ndarray] = None) -> SolverState:
    """u^{n+1} = u^n + M^-1 (volume - surface), predictor already done"""
    if dt == 0.0:
        return SolverState(state.u.copy(), state.t, state.step + 1)
    bc = bc or BoundaryCondition()
    mu_cell = np.full(disc.n_cells, disc.gas.mu) if mu_cell is None else mu_cell

    # phase 1: face buffers
    G_int = internal_face_fluxes(disc, avg, mu_cell) if disc.faces.n_internal else None
    G_bnd = boundary_face_fluxes(disc, avg, mu_cell, state.t + 0.5 * dt, case, bc) if disc.faces.n_boundary else None

    # phase 2: per-cell gather and solve
    R = volume_update(disc, avg, dt) - surface_update(disc, G_int, G_bnd, dt)
    u_new = state.u.copy()
    for cm in disc.cells:
        sl = disc.dofs.cell_slice(cm.cell)
        du = cho_solve(cm.mass_factor, R[sl])
        if not np.all(np.isfinite(du)):
            raise NumericalFault("NaN in corrector update", cell=cm.cell, step=state.step + 1)
        u_new[sl] += du
    return SolverState(u_new, state.t + dt, state.step + 1)


def boundary_tag_names(faces: FaceDofPermutation) -> Dict[str, int]:
    tags, counts = np.unique(faces.b_tag, return_counts=True)
    return {BOUNDARY_TAGS[t]: int(c) for t, c in zip(tags, counts)}
