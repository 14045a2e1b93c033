#!/usr/bin/env python3
"""
Analysis Module for LPR-ADER
Handles error norms against analytic solutions, convergence studies with fitted orders,
and the radial and line diagnostics used for the explosion and Stokes runs
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from basis import quadrature
from database import DatabaseManager
from errors import ConfigurationError, SolverError
from output import write_csv
from physics import cons_to_prim, prim_to_cons

logger = logging.getLogger('LPR-ADER.Analysis')

FIELDS = {'rho': 0, 'u': 1, 'v': 2, 'w': 3, 'p': 4}
EXACT_THRESHOLD = 1e-12


def _field_index(name: str) -> int:
    if name not in FIELDS:
        raise ConfigurationError(f"Unknown field '{name}', expected one of {tuple(FIELDS)}")
    return FIELDS[name]


def sample_subtets(u: np.ndarray, disc, order: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Conserved state and physical points at a tet rule on every sub-tet

    Returns:
        (q (n_sub, n_q, 5), x (n_sub, n_q, 3), weights (n_sub, n_q) including |J|)
    """
    rule = quadrature('tet', order)
    phi = disc.basis.eval(rule.points)
    q = np.einsum('qj,kjv->kqv', phi, u[disc.dofs.l2g])
    x = disc.geom.x0[:, None, :] + np.einsum('kde,qe->kqd', disc.geom.J, rule.points)
    w = disc.geom.detJ[:, None] * rule.weights[None, :]
    return q, x, w


def error_norms(u: np.ndarray, case, t: float, disc, p: int = 2,
                fields: Sequence[str] = ('rho',)) -> Dict[str, float]:
    """Absolute L_p error of primitive fields, (sum_k int |w_h - w_e|^p)^(1/p)

    Integrals use a rule of order 2N+2 on every sub-tet.
    """
    if p not in (1, 2):
        raise ConfigurationError(f"Only L1 and L2 norms are supported, got p={p}")
    q, x, w = sample_subtets(u, disc, 2 * disc.degree + 2)
    w_h = cons_to_prim(q, disc.gas)
    w_e = case.exact(x, t)
    out = {}
    for name in fields:
        k = _field_index(name)
        diff = np.abs(w_h[..., k] - w_e[..., k])
        out[name] = float(np.sum(w * diff ** p) ** (1.0 / p))
    return out


def interpolate_exact(case, t: float, disc) -> np.ndarray:
    """Nodal interpolant of the analytic solution at every DOF"""
    return prim_to_cons(case.exact(disc.dofs.coords, t), disc.gas)


def fit_order(h: Sequence[float], errors: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(error) against log(h); None when every error is at round-off"""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    if len(h) < 2:
        raise ConfigurationError("Order fit needs at least two levels")
    if np.all(e < EXACT_THRESHOLD):
        return None
    slope, _ = np.polyfit(np.log(h), np.log(np.maximum(e, EXACT_THRESHOLD)), 1)
    return float(slope)


@dataclass
class LevelErrors:
    h: float
    h_max: float
    n_cells: int
    n_dofs: int
    norms: Dict[Tuple[str, int], float]


@dataclass
class ErrorReport:
    """Error norms per refinement level and the fitted orders"""

    case: str
    degree: int
    fields: Tuple[str, ...]
    levels: List[LevelErrors] = field(default_factory=list)
    orders: Dict[Tuple[str, int], Optional[float]] = field(default_factory=dict)

    def fit(self) -> 'ErrorReport':
        h = [lv.h_max for lv in self.levels]
        for name in self.fields:
            for p in (1, 2):
                self.orders[(name, p)] = fit_order(h, [lv.norms[(name, p)] for lv in self.levels])
        return self

    def csv_rows(self) -> Tuple[List[str], List[list]]:
        header = ['case', 'degree', 'level', 'h', 'h_max', 'cells', 'dofs', 'field', 'L1', 'L2']
        rows = []
        for i, lv in enumerate(self.levels):
            for name in self.fields:
                rows.append([self.case, self.degree, i, lv.h, lv.h_max, lv.n_cells, lv.n_dofs, name,
                             lv.norms[(name, 1)], lv.norms[(name, 2)]])
        if self.orders:
            for name in self.fields:
                rows.append([self.case, self.degree, 'order', '', '', '', '', name,
                             _order_text(self.orders.get((name, 1))), _order_text(self.orders.get((name, 2)))])
        return header, rows


def _order_text(order: Optional[float]) -> str:
    return 'exact' if order is None else f"{order:.4f}"


def format_error_table(report: ErrorReport) -> str:
    """h_max / L1 / L2 columns per field followed by an Order row"""
    head = f"{'h_max':>10}"
    for name in report.fields:
        head += f"  {'L1(' + name + ')':>12}  {'L2(' + name + ')':>12}"
    lines = [f"{report.case}  P{report.degree}", head]
    for lv in report.levels:
        line = f"{lv.h_max:>10.4f}"
        for name in report.fields:
            line += f"  {lv.norms[(name, 1)]:>12.4e}  {lv.norms[(name, 2)]:>12.4e}"
        lines.append(line)
    if report.orders:
        line = f"{'Order':>10}"
        for name in report.fields:
            line += f"  {_order_text(report.orders.get((name, 1))):>12}  {_order_text(report.orders.get((name, 2))):>12}"
        lines.append(line)
    return '\n'.join(lines)


def convergence_study(template, h_list: Sequence[float], csv_path: Optional[str] = None,
                      runner=None) -> ErrorReport:
    """Run the template configuration on every spacing and fit the orders

    A failing level aborts the study; the levels finished so far are still written to csv_path.
    """
    if runner is None:
        from solver import run as runner

    if len(h_list) < 2:
        raise ConfigurationError("A convergence study needs at least two refinement levels")

    report = None
    try:
        for h in h_list:
            result = runner(replace(template, h=h, csv_path=None))
            if report is None:
                report = ErrorReport(template.case, template.degree, tuple(result.case.error_fields))
            if not result.norms:
                raise ConfigurationError(f"Case '{template.case}' has no analytic solution to converge to")
            report.levels.append(LevelErrors(h, result.h_max, result.n_cells, result.n_dofs, dict(result.norms)))
            logger.info(f"Level h={h}: h_max={result.h_max:.4f} " +
                        ' '.join(f"L{p}({f})={v:.4e}" for (f, p), v in result.norms.items()))
    except SolverError as e:
        logger.error(f"Convergence study aborted: {e}")
        if report is not None and csv_path:
            write_csv(csv_path, *report.csv_rows())
            logger.warning(f"⚠️ Partial results ({len(report.levels)} levels) saved to {csv_path}")
        raise

    report.fit()
    if csv_path:
        write_csv(csv_path, *report.csv_rows())
    if getattr(template, 'database', None):
        DatabaseManager(template.database).record_study(report.case, report.degree, len(report.levels), report.orders)
    logger.info(f"✅ Convergence study finished\n{format_error_table(report)}")
    return report


@dataclass
class RadialProfile:
    """Solution samples against the distance from a centre, sorted by radius"""

    r: np.ndarray
    rho: np.ndarray
    speed: np.ndarray
    p: np.ndarray


def radial_profile(u: np.ndarray, disc, center=(0.5, 0.5, 0.5)) -> RadialProfile:
    w = cons_to_prim(u, disc.gas)
    r = np.linalg.norm(disc.dofs.coords - np.asarray(center, dtype=float), axis=1)
    order = np.argsort(r, kind='stable')
    return RadialProfile(r[order], w[order, 0], np.linalg.norm(w[order, 1:4], axis=1), w[order, 4])


def shell_statistics(r: np.ndarray, values: np.ndarray, n_shells: int = 20,
                     r_max: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean and relative standard deviation of values in equal-width radial shells

    Returns:
        (shell centres, means, relative std), NaN for empty shells
    """
    r_max = float(r.max()) if r_max is None else r_max
    edges = np.linspace(0.0, r_max, n_shells + 1)
    idx = np.clip(np.digitize(r, edges) - 1, 0, n_shells - 1)
    inside = r <= r_max
    counts = np.bincount(idx[inside], minlength=n_shells).astype(float)
    sums = np.bincount(idx[inside], weights=values[inside], minlength=n_shells)
    squares = np.bincount(idx[inside], weights=values[inside] ** 2, minlength=n_shells)
    with np.errstate(invalid='ignore', divide='ignore'):
        mean = sums / counts
        var = np.maximum(squares / counts - mean ** 2, 0.0)
        rel = np.sqrt(var) / np.abs(mean)
    return 0.5 * (edges[1:] + edges[:-1]), mean, rel


def front_position(r: np.ndarray, values: np.ndarray, n_shells: int = 50,
                   r_range: Optional[Tuple[float, float]] = None) -> float:
    """Radius of the steepest drop of the shell-averaged values inside r_range"""
    centres, mean, _ = shell_statistics(r, values, n_shells)
    ok = np.isfinite(mean)
    centres, mean = centres[ok], mean[ok]
    slope = np.diff(mean) / np.diff(centres)
    mid = 0.5 * (centres[1:] + centres[:-1])
    if r_range is not None:
        keep = (mid >= r_range[0]) & (mid <= r_range[1])
        mid, slope = mid[keep], slope[keep]
    if len(slope) == 0:
        raise ConfigurationError("No samples in the requested radial range")
    return float(mid[np.argmin(slope)])


def line_cut(u: np.ndarray, disc, y: float, z: float, field_name: str = 'v',
             tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    """Field values along the x-parallel line through (y, z), using the nearest DOF row"""
    k = _field_index(field_name)
    coords = disc.dofs.coords
    dist = np.hypot(coords[:, 1] - y, coords[:, 2] - z)
    sel = np.flatnonzero(dist <= dist.min() + tol)
    w = cons_to_prim(u[sel], disc.gas)
    x = coords[sel, 0]
    order = np.argsort(x, kind='stable')
    return x[order], w[order, k]
