#!/usr/bin/env python3
"""
LPR-ADER - polyhedral mesh generation and ADER-AFE-DG runs from the command line
Subcommands: mesh, run, convergence, reference1d
"""

import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

from analysis import convergence_study, format_error_table
from cases import SphericalExplosion
from config import Config, RunConfig, load_run_config, parse_box
from errors import ConfigurationError, SolverError
from mesh import apply_generator, build_box_tet_mesh, build_mesh, mesh_stats, read_tet_mesh, validate_mesh, write_poly_mesh
from output import write_csv
from reference1d import muscl_1d_reference
from solver import run

logger = logging.getLogger('LPR-ADER')


class ConsoleLoggingHandler:
    """Sends INFO/DEBUG to STDOUT and WARNING/ERROR to STDERR"""

    def __init__(self, level: str = Config.LOG_LEVEL):
        self.formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

        root_logger = logging.getLogger()
        root_logger.handlers.clear()  # Prevent duplicate handlers
        root_logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))

        self.stdout_handler = logging.StreamHandler(sys.stdout)
        self.stdout_handler.setLevel(logging.DEBUG)
        self.stdout_handler.setFormatter(self.formatter)
        self.stdout_handler.addFilter(lambda record: record.levelno < logging.WARNING)

        self.stderr_handler = logging.StreamHandler(sys.stderr)
        self.stderr_handler.setLevel(logging.WARNING)
        self.stderr_handler.setFormatter(self.formatter)

        root_logger.addHandler(self.stdout_handler)
        root_logger.addHandler(self.stderr_handler)


def _add_mesh_flags(p: argparse.ArgumentParser):
    p.add_argument('--box', type=str, help='x0,y0,z0,x1,y1,z1 (default: case domain or unit cube)')
    p.add_argument('--h', type=float, help='target lattice spacing')
    p.add_argument('--generator', choices=Config.GENERATORS, help='polyhedral generator')
    p.add_argument('--jitter', type=float, help='interior vertex perturbation, fraction of h')
    p.add_argument('--seed', type=int, help='seed of the jitter')


def _add_run_flags(p: argparse.ArgumentParser):
    _add_mesh_flags(p)
    p.add_argument('--case', type=str, help='steady-vortex, travelling-vortex, stokes, explosion, taylor-green, free-stream')
    p.add_argument('--degree', type=int, help='polynomial degree N (1-3)')
    p.add_argument('--cfl', type=float, help='CFL number (default 0.3)')
    p.add_argument('--tf', type=float, help='final time (default: case value)')
    p.add_argument('--mu', type=float, help='viscosity override')
    p.add_argument('--no-limiter', action='store_true', help='disable the artificial viscosity limiter')
    p.add_argument('--threads', type=int, help='predictor worker threads')
    p.add_argument('--config', type=str, help='[mesh]/[case]/[solver]/[output] file, overrides flags')
    p.add_argument('--db', type=str, help='SQLite run registry')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='lpr-ader', description='LPR polyhedral meshes and ADER-AFE-DG runs')
    parser.add_argument('--verbose', '-v', action='store_true', help='DEBUG logging')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('mesh', help='generate a polyhedral mesh and print its statistics')
    _add_mesh_flags(p)
    p.add_argument('--input', type=str, help='tetrahedral mesh file instead of the box lattice')
    p.add_argument('--out', type=str, help='poly mesh file to write')

    p = sub.add_parser('run', help='single simulation')
    _add_run_flags(p)
    p.add_argument('--out', type=str, help='VTK output directory')
    p.add_argument('--vtk-every', type=int, help='VTK cadence in steps (0: final state only)')
    p.add_argument('--csv', type=str, help='error norm CSV')
    p.add_argument('--limiter-csv', type=str, help='per-step troubled cell CSV')

    p = sub.add_parser('convergence', help='convergence study over refined meshes')
    _add_run_flags(p)
    p.add_argument('--levels', type=int, default=2, help='number of refinement levels')
    p.add_argument('--ratio', type=float, default=0.75, help='spacing ratio between levels')
    p.add_argument('--out', type=str, default=None, help='study CSV')

    p = sub.add_parser('reference1d', help='1D spherical explosion reference')
    p.add_argument('--points', type=int, default=Config.REFERENCE_POINTS, help='radial cells')
    p.add_argument('--tf', type=float, default=Config.REFERENCE_TF, help='final time')
    p.add_argument('--alpha0', type=float, default=None, help='initial smoothing width (default: 1.5 h_min of the --h mesh, 0 without --h)')
    p.add_argument('--h', type=float, default=None, help='3D lattice spacing the smoothing width is taken from')
    p.add_argument('--generator', choices=Config.GENERATORS, default='lpr', help='3D polyhedral generator')
    p.add_argument('--out', type=str, default=None, help='profile CSV')
    return parser


# CLI flag -> RunConfig field
_FLAG_FIELDS = {
    'case': 'case', 'degree': 'degree', 'cfl': 'cfl', 'tf': 't_final', 'h': 'h',
    'generator': 'generator', 'jitter': 'jitter', 'seed': 'seed', 'mu': 'mu',
    'threads': 'threads', 'db': 'database', 'vtk_every': 'vtk_every', 'csv': 'csv_path',
    'limiter_csv': 'limiter_csv',
}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Flags first, then the config file on top"""
    updates = {}
    for flag, name in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            updates[name] = value
    if getattr(args, 'box', None):
        updates['bounds'] = parse_box(args.box)
    if getattr(args, 'no_limiter', False):
        updates['limiter'] = False
    if args.command == 'run' and args.out:
        updates['out_dir'] = args.out
    cfg = replace(RunConfig(), **updates)
    if getattr(args, 'config', None):
        cfg = load_run_config(args.config, cfg)
    return cfg.validate()


def cmd_mesh(args: argparse.Namespace) -> int:
    bounds = parse_box(args.box) if args.box else (0.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    if args.input:
        tm = read_tet_mesh(args.input, bounds if args.box else None)
    else:
        tm = build_box_tet_mesh(bounds, args.h or 0.25, args.jitter or 0.0, args.seed)
    pm = apply_generator(tm, args.generator or 'lpr')
    for line in mesh_stats(pm).lines():
        print(line)
    violations = validate_mesh(pm)
    for v in violations:
        logger.warning(f"⚠️ {v.kind} violation at {v.entity}: {v.message}")
    if args.out:
        write_poly_mesh(pm, args.out)
        logger.info(f"✅ Mesh written to {args.out}")
    return 1 if violations else 0


def cmd_run(args: argparse.Namespace) -> int:
    result = run(config_from_args(args))
    print(f"t = {result.state.t:.6g}  steps = {result.steps}  cells = {result.n_cells}  h_max = {result.h_max:.4f}")
    for line in result.norm_lines():
        print(line)
    return 0


def cmd_convergence(args: argparse.Namespace) -> int:
    template = config_from_args(args)
    if args.levels < 2:
        raise ConfigurationError("--levels must be at least 2")
    if not 0.0 < args.ratio < 1.0:
        raise ConfigurationError("--ratio must lie in (0, 1)")
    h_list = [template.h * args.ratio ** i for i in range(args.levels)]
    out = args.out or os.path.join(Config.OUTPUT_DIR, f"convergence_{template.case}_P{template.degree}.csv")
    report = convergence_study(template, h_list, out)
    print(format_error_table(report))
    return 0


def explosion_alpha0(h: float, generator: str = 'lpr') -> float:
    """Smoothing width the 3D explosion run uses on the mesh of spacing h"""
    case = SphericalExplosion()
    case.setup(build_mesh(case.domain, h, generator).h_min)
    return case.alpha0


def cmd_reference1d(args: argparse.Namespace) -> int:
    if args.alpha0 is not None:
        alpha0 = args.alpha0
    elif args.h is not None:
        alpha0 = explosion_alpha0(args.h, args.generator)
    else:
        alpha0 = 0.0
    if alpha0 < 0.0:
        raise ConfigurationError("--alpha0 must be non-negative")
    profile = muscl_1d_reference(args.points, args.tf, alpha0)
    out = args.out or os.path.join(Config.OUTPUT_DIR, 'reference1d.csv')
    write_csv(out, ['r', 'rho', 'speed', 'p'], zip(profile.r, profile.rho, profile.speed, profile.p))
    print(f"{profile.steps} steps to t = {profile.t:.6g} (alpha0 = {alpha0:.6g}), profile written to {out}")
    return 0


COMMANDS = {
    'mesh': cmd_mesh,
    'run': cmd_run,
    'convergence': cmd_convergence,
    'reference1d': cmd_reference1d,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    ConsoleLoggingHandler('DEBUG' if args.verbose else Config.LOG_LEVEL)
    try:
        return COMMANDS[args.command](args)
    except SolverError as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 130


if __name__ == '__main__':
    sys.exit(main())
