#!/usr/bin/env python3
"""
Solver Module for LPR-ADER
Handles the time loop: CFL time step, initial interpolation, limiter, predictor
and corrector phases, snapshots and the run record
"""

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from ader import PredictorStats, predictor_solve, time_average
from analysis import error_norms
from cases import TestCase, make_case
from config import RunConfig
from database import DatabaseManager
from dg import Discretization, SolverState, StepAverages, build_discretization, step
from errors import NumericalFault, SolverError
from limiter import LimiterState, update_limiter
from mesh import PolyMesh, build_mesh
from output import write_csv, write_vtk
from physics import GasParams, cons_to_prim, prim_to_cons

logger = logging.getLogger('LPR-ADER.Solver')

LIMITER_CSV_HEADER = ['step', 't', 'cell', 'beta', 'mu_add']
NORMS_CSV_HEADER = ['case', 'degree', 'generator', 'h', 'h_max', 'cells', 'dofs', 't', 'field', 'L1', 'L2']


def stable_dt(lam_max, lam_visc, h, N: int, cfl: float) -> float:
    """CFL h / ((2N+1)(|lam| + 2 |lam_v| (2N+1)/h)), minimised over cells"""
    h = np.asarray(h, dtype=float)
    k = 2 * N + 1
    speed = np.asarray(lam_max, dtype=float) + 2.0 * np.asarray(lam_visc, dtype=float) * k / h
    with np.errstate(divide='ignore'):
        return float(cfl * np.min(h / (k * speed)))


def compute_dt(u: np.ndarray, disc: Discretization, cfl: float,
               mu_cell: Optional[np.ndarray] = None) -> float:
    """Largest stable step for the current coefficients, extrema over every cell DOF"""
    gas = disc.gas
    w = cons_to_prim(u, gas)
    rho = w[:, 0]
    lam = np.linalg.norm(w[:, 1:4], axis=1) + np.sqrt(gas.gamma * w[:, 4] / rho)
    mu = np.full(disc.n_cells, gas.mu) if mu_cell is None else np.asarray(mu_cell, dtype=float)
    mu_dof = np.repeat(mu, disc.dofs.n_dofs)
    lam_v = np.maximum(4.0 * mu_dof / (3.0 * rho), gas.kappa / (gas.c_v * rho))
    starts = disc.dofs.offsets[:-1]
    dt = stable_dt(np.maximum.reduceat(lam, starts), np.maximum.reduceat(lam_v, starts),
                   disc.geom.h, disc.degree, cfl)
    if not np.isfinite(dt) or dt <= 0.0:
        raise NumericalFault(f"Non-finite time step {dt}")
    return dt


def init_case(case: TestCase, disc: Discretization) -> SolverState:
    """Nodal interpolation of the initial condition at every cell DOF

    Cases with an analytic solution start from exact(x, 0). For the Stokes layer that is the erf
    profile at the +0.05 time offset, not the piecewise +-0.1 shear step.
    """
    case.setup(disc.pm.h_min)
    return SolverState(prim_to_cons(case.initial(disc.dofs.coords), disc.gas), 0.0, 0)


def _predict_cell(disc: Discretization, u: np.ndarray, dt: float, mu_cell: np.ndarray, cid: int):
    cm = disc.cells[cid]
    Jinv = disc.geom.Jinv[cm.subtets]
    mu = float(mu_cell[cid])
    pred = predictor_solve(cm, u[disc.dofs.cell_slice(cid)], dt, Jinv, disc.geom.detJ[cm.subtets],
                           disc.U, disc.gas, mu)
    return pred, time_average(pred, cm, Jinv, disc.U, disc.gas, mu)


def advance(state: SolverState, disc: Discretization, dt: float, case: TestCase, limiter: LimiterState,
            pool: Optional[ThreadPoolExecutor] = None, stats: Optional[PredictorStats] = None) -> SolverState:
    """One ADER step: per-cell predictors, then the corrector"""
    cells = range(disc.n_cells)
    work = partial(_predict_cell, disc, state.u, dt, limiter.mu)
    results = list(pool.map(work, cells)) if pool is not None else [work(c) for c in cells]
    if stats is not None:
        for pred, _ in results:
            stats.add(pred)
    avg = StepAverages.gather(disc, [a for _, a in results])
    return step(state, disc, avg, dt, case, case.boundary, limiter.mu)


@dataclass
class RunResult:
    """Final state of a run with its diagnostics"""

    config: RunConfig
    case: TestCase
    disc: Discretization
    state: SolverState
    norms: Dict[Tuple[str, int], float] = field(default_factory=dict)
    max_troubled_fraction: float = 0.0
    predictor: PredictorStats = field(default_factory=PredictorStats)
    wall_time: float = 0.0
    run_id: Optional[int] = None

    @property
    def steps(self) -> int:
        return self.state.step

    @property
    def h_max(self) -> float:
        return self.disc.pm.h_max

    @property
    def n_cells(self) -> int:
        return self.disc.n_cells

    @property
    def n_dofs(self) -> int:
        return self.disc.dofs.total

    def norm_lines(self) -> List[str]:
        return [f"L{p}({name}) = {value:.6e}" for (name, p), value in sorted(self.norms.items())]


def setup_run(config: RunConfig) -> Tuple[TestCase, Discretization, float]:
    """Case, mesh and discretization for a validated configuration"""
    gas = GasParams(config.gamma, config.gas_constant, 0.0, config.kappa)
    case = make_case(config.case, gas, config.mu)
    gas = replace(gas, mu=case.mu)
    case.gas = gas
    bounds = config.bounds or case.domain
    t_final = case.t_final if config.t_final is None else config.t_final
    pm: PolyMesh = build_mesh(bounds, config.h, config.generator, config.jitter, config.seed)
    disc = build_discretization(pm, config.degree, gas, config.threads)
    return case, disc, t_final


def _snapshot(config: RunConfig, case: TestCase, disc: Discretization, state: SolverState,
              limiter: Optional[LimiterState]):
    path = os.path.join(config.out_dir, f"{case.name}_P{config.degree}_{state.step:06d}.vtk")
    write_vtk(path, state.u, disc, None if limiter is None else limiter.beta,
              title=f"{case.name} P{config.degree} t={state.t:.6g}")


def run(config: RunConfig) -> RunResult:
    """Run one simulation to its final time"""
    config.validate()
    started = time.perf_counter()
    case, disc, t_final = setup_run(config)
    state = init_case(case, disc)
    logger.info(f"Running {case.name} P{config.degree} on {disc.n_cells} cells ({disc.dofs.total} DOFs), "
                f"t_f={t_final}, CFL={config.cfl}, mu={disc.gas.mu}")

    result = RunResult(config, case, disc, state)
    limiter_rows = []
    limiter = None
    pool = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None
    try:
        while state.t < t_final:
            limiter = update_limiter(disc, state.u, state.t, case, case.boundary, disc.gas.mu,
                                     config.limiter, state.step + 1)
            result.max_troubled_fraction = max(result.max_troubled_fraction, limiter.fraction)
            if config.limiter_csv:
                limiter_rows.extend(limiter.rows(state.step + 1, state.t))

            dt = compute_dt(state.u, disc, config.cfl, limiter.mu)
            last = dt >= t_final - state.t
            if last:
                dt = t_final - state.t
            step_stats = PredictorStats()
            state = advance(state, disc, dt, case, limiter, pool, step_stats)
            if last:
                state.t = t_final
            result.predictor.merge(step_stats)
            logger.debug(f"Step {state.step}: t={state.t:.6g} dt={dt:.4e} predictor iterations "
                         f"<= {step_stats.max_iterations}, residual {step_stats.max_residual:.2e}")
            if step_stats.not_converged:
                logger.warning(f"⚠️ Step {state.step}: {step_stats.not_converged} predictors not converged")

            if config.out_dir and config.vtk_every and state.step % config.vtk_every == 0:
                _snapshot(config, case, disc, state, limiter)
    except SolverError as e:
        logger.error(f"Run aborted at step {state.step + 1} (t={state.t:.6g}): {e}")
        raise
    finally:
        if pool is not None:
            pool.shutdown()
        if config.limiter_csv:
            write_csv(config.limiter_csv, LIMITER_CSV_HEADER, limiter_rows)

    result.state = state
    if config.out_dir:
        _snapshot(config, case, disc, state, limiter)
    if case.has_exact:
        for p in (1, 2):
            for name, value in error_norms(state.u, case, state.t, disc, p, case.error_fields).items():
                result.norms[(name, p)] = value
    result.wall_time = time.perf_counter() - started
    if config.limiter:
        logger.info(f"Largest troubled-cell fraction: {100.0 * result.max_troubled_fraction:.2f}%")
    logger.info(f"✅ {case.name} finished: {state.step} steps to t={state.t:.6g} in {result.wall_time:.1f}s")

    if config.csv_path and result.norms:
        write_csv(config.csv_path, NORMS_CSV_HEADER, norms_rows(result))
    if config.database:
        result.run_id = DatabaseManager(config.database).record_run(
            case.name, config.degree, config.generator, config.h, result.h_max, result.n_cells,
            result.n_dofs, state.t, state.step, result.wall_time, result.norms, result.max_troubled_fraction)
    return result


def norms_rows(result: RunResult) -> List[list]:
    cfg = result.config
    return [[result.case.name, cfg.degree, cfg.generator, cfg.h, result.h_max, result.n_cells, result.n_dofs,
             result.state.t, name, result.norms[(name, 1)], result.norms[(name, 2)]]
            for name in result.case.error_fields]
