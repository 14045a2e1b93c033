#!/usr/bin/env python3
"""
Output Module for LPR-ADER
Handles legacy ASCII VTK snapshots of the solution and flat CSV tables
"""

import csv
import logging
import os
from typing import Iterable, Optional, Sequence

import numpy as np

from errors import OutputError
from physics import cons_to_prim, mach_number

logger = logging.getLogger('LPR-ADER.Output')

VTK_TETRA = 10


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def vertex_nodes(basis) -> np.ndarray:
    """Reference node ids sitting on the four sub-tet vertices"""
    return np.array([int(np.flatnonzero(basis.alpha[:, j] == basis.degree)[0]) for j in range(4)])


def write_vtk(path: str, u: np.ndarray, disc, beta: Optional[np.ndarray] = None,
              title: str = 'LPR-ADER solution'):
    """Unstructured grid with one point per cell DOF and the sub-tets as linear tetrahedra

    Point data: rho, velocity, p, Mach and the cell flattener beta.
    """
    coords = disc.dofs.coords
    n_pts = len(coords)
    conn = disc.dofs.l2g[:, vertex_nodes(disc.basis)]
    w = cons_to_prim(u, disc.gas)
    mach = mach_number(u, disc.gas)
    cell_of_dof = np.repeat(np.arange(disc.n_cells), disc.dofs.n_dofs)
    beta_pts = np.zeros(n_pts) if beta is None else np.asarray(beta, dtype=float)[cell_of_dof]

    try:
        _ensure_parent(path)
        with open(path, 'w', encoding='ascii') as f:
            f.write("# vtk DataFile Version 2.0\n")
            f.write(f"{title}\n")
            f.write("ASCII\n")
            f.write("DATASET UNSTRUCTURED_GRID\n")
            f.write(f"POINTS {n_pts} double\n")
            np.savetxt(f, coords, fmt='%.17g')
            f.write(f"CELLS {len(conn)} {5 * len(conn)}\n")
            np.savetxt(f, np.hstack([np.full((len(conn), 1), 4), conn]), fmt='%d')
            f.write(f"CELL_TYPES {len(conn)}\n")
            np.savetxt(f, np.full(len(conn), VTK_TETRA), fmt='%d')
            f.write(f"CELL_DATA {len(conn)}\n")
            f.write("SCALARS cell_id int 1\nLOOKUP_TABLE default\n")
            np.savetxt(f, disc.dofs.subtet_cell, fmt='%d')
            f.write(f"POINT_DATA {n_pts}\n")
            for name, values in (('rho', w[:, 0]), ('p', w[:, 4]), ('Mach', mach), ('beta', beta_pts)):
                f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                np.savetxt(f, values, fmt='%.17g')
            f.write("VECTORS velocity double\n")
            np.savetxt(f, w[:, 1:4], fmt='%.17g')
    except OSError as e:
        raise OutputError(f"Cannot write VTK file ({e.strerror})", path)
    logger.debug(f"VTK snapshot written to {path} ({n_pts} points, {len(conn)} tetrahedra)")


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]):
    """Flat table with a header row"""
    try:
        _ensure_parent(path)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    except OSError as e:
        raise OutputError(f"Cannot write CSV file ({e.strerror})", path)
    logger.debug(f"CSV written to {path}")
