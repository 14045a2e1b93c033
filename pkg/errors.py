#!/usr/bin/env python3
"""
Errors Module for LPR-ADER
Exception hierarchy shared by mesh generation, setup and time stepping
"""

from typing import Optional


class SolverError(Exception):
    """Base class for every fault raised by the solver library"""


class ConfigurationError(SolverError):
    """Invalid user input: degree, CFL, box, case name, quadrature order"""


class PositivityError(SolverError):
    """Non-positive density or pressure"""

    def __init__(self, message: str, cell: Optional[int] = None):
        self.cell = cell
        if cell is not None:
            message = f"{message} (cell {cell})"
        super().__init__(message)


class GeometryError(SolverError):
    """Non-positive sub-tetrahedron volume or Jacobian"""


class ConformityError(SolverError):
    """Unmatched face or DOF key between sub-tetrahedra or cells"""


class MeshLogicError(SolverError):
    """Violated precondition of a mesh operation"""


class SetupError(SolverError):
    """Singular or ill-conditioned element matrix"""


class NumericalFault(SolverError):
    """NaN or infinity during predictor or corrector"""

    def __init__(self, message: str, cell: Optional[int] = None, step: Optional[int] = None):
        self.cell = cell
        self.step = step
        where = []
        if step is not None:
            where.append(f"step {step}")
        if cell is not None:
            where.append(f"cell {cell}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class OutputError(SolverError):
    """Result file could not be written"""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        if path is not None:
            message = f"{message}: {path}"
        super().__init__(message)
