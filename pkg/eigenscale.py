#!/usr/bin/env python3
"""
EIGENSCALE - command-line harness for the eigenvector / row-sum scaling law

Subcommands:
  gen      write one seeded random matrix (%%symcoord format)
  scaling  dimension / density sweep: per-matrix CSV + per-cell aggregates
  model    Hubbard or transverse-field Ising: exact vs. variational ground state
  solve    ground state, scaling report and (optionally) variational fit of a matrix file
  table    exact vs. variational energies for a list of Ising lengths and Hubbard couplings
  rerun    replay a stored manifest

Every command that writes --out also writes <out>.manifest.json.

Exit codes: 0 ok, 2 usage or bad input, 3 data / degenerate / invalid cell,
4 no convergence.
"""

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from eigen import AUTO, METHODS, LanczosConfig, ground_state
from errors import EigenScaleError, InvalidCellError, InvalidSpecError
from matcore import (
    DiagDominantSpec,
    EnsembleSpec,
    Gaussian,
    RowAmplification,
    Uniform,
    generate_any,
    read_matrix,
    write_matrix,
)
from models import HubbardSpec, IsingSpec, basis_labels, build_model
from run_manifest import RunManifest, load_manifest, manifest_path, save_manifest
from scaling import analyze, sweep
from varmin import optimize

load_dotenv(override=True)

logger = logging.getLogger('EigenScaleCLI')

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
BASIS_COLUMNS = ['index', 'state', 'g', 's', 'g_variational']
SUMMARY_COLUMNS = ['model', 'dim', 'sites', 'c', 'e_scaling', 'e_exact', 'relative_error',
                   'lambda_min', 'residual', 'rms', 'slope', 'intercept']

_installed_handlers: List[logging.Handler] = []


def setup_logging(command: str):
    """Console logging, plus <EIGENSCALE_LOG_DIR>/eigenscale_<command>.log when configured"""
    root = logging.getLogger()
    for handler in _installed_handlers:
        root.removeHandler(handler)
    _installed_handlers.clear()

    level = os.getenv('EIGENSCALE_LOG_LEVEL', 'INFO').upper()
    root.setLevel(getattr(logging, level, logging.INFO))
    formatter = logging.Formatter(LOG_FORMAT)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    _installed_handlers.append(console_handler)

    log_dir = os.getenv('EIGENSCALE_LOG_DIR')
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(Path(log_dir) / f"eigenscale_{command}.log", encoding='utf-8')
        file_handler.setFormatter(formatter)
        _installed_handlers.append(file_handler)

    for handler in _installed_handlers:
        root.addHandler(handler)


# ========== ARGUMENT PARSING ==========

def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(',') if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(',') if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _rowscale(text: str) -> List[float]:
    try:
        row, factor = text.split(':')
        return [int(row), float(factor)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROW:FACTOR, got '{text}'")


def _add_ensemble_args(p: argparse.ArgumentParser, density_type):
    p.add_argument('--dist', choices=['uniform', 'gaussian'], default='uniform')
    p.add_argument('--xmin', type=float, default=-1.0, help='uniform elements drawn from [xmin, 0)')
    p.add_argument('--mean', type=float, default=-2.0, help='gaussian mean')
    p.add_argument('--stddev', type=float, default=1.0, help='gaussian standard deviation')
    p.add_argument('--density', type=density_type, default=density_type('1.0'))
    p.add_argument('--inverse-n', action='store_true',
                   help='density given at N=100, scaled as 100/N for other dimensions')
    p.add_argument('--rowscale', type=_rowscale, action='append', default=[],
                   metavar='ROW:FACTOR', help='scale row and column ROW (0-based) by FACTOR; repeatable')
    p.add_argument('--amplify', action='store_true',
                   help='enlarge 5 random rows x10 and reduce 5 random rows x0.1')
    width = p.add_mutually_exclusive_group()
    width.add_argument('--diag-dominant', type=float, metavar='W',
                       help='redraw the diagonal uniformly from [-W, W]')
    width.add_argument('--diag-dominant-factor', type=float, metavar='K',
                       help='as --diag-dominant with W = K * N * density * E|element|')
    p.add_argument('--seed', type=int, default=0)


def _add_solver_args(p: argparse.ArgumentParser, default_method: str):
    p.add_argument('--method', choices=METHODS, default=default_method)
    p.add_argument('--max-iter', type=int, default=2000, help='Lanczos matrix-vector product budget')
    p.add_argument('--tol', type=float, default=1e-10, help='residual target relative to max(1, |lambda|)')
    p.add_argument('--restart-dim', type=int, default=64)


def _add_output_args(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument('--out', required=required)
    p.add_argument('--format', choices=['csv', 'json'], default='csv')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='eigenscale', description=__doc__.split('\n\n')[0].strip())
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('gen', help='write one random matrix')
    p.add_argument('--dim', type=int, required=True)
    _add_ensemble_args(p, float)
    p.add_argument('--out', required=True)

    p = sub.add_parser('scaling', help='sweep dimensions and densities')
    p.add_argument('--dims', type=_int_list, required=True)
    p.add_argument('--samples', type=int, default=20)
    _add_ensemble_args(p, _float_list)
    _add_solver_args(p, AUTO)
    p.add_argument('--parallelism', type=int, default=1)
    p.add_argument('--scatter', help='also write (index, g, s) of the first matrix of every cell')
    _add_output_args(p)

    p = sub.add_parser('model', help='exact and variational ground state of a model Hamiltonian')
    models = p.add_subparsers(dest='model', required=True)
    hub = models.add_parser('hubbard')
    hub.add_argument('--sites', type=int, default=4)
    hub.add_argument('--n-up', type=int, default=2)
    hub.add_argument('--n-down', type=int, default=2)
    hub.add_argument('--t', type=float, default=1.0)
    hub.add_argument('--u', type=float, default=0.0)
    ising = models.add_parser('ising')
    ising.add_argument('--length', type=int, required=True)
    ising.add_argument('--g', type=float, default=10.0)
    for mp in (hub, ising):
        _add_solver_args(mp, AUTO)
        _add_output_args(mp)

    p = sub.add_parser('solve', help='ground state of a matrix file')
    p.add_argument('--input', required=True)
    _add_solver_args(p, 'lanczos')
    p.add_argument('--variational', action='store_true')
    p.add_argument('--out', help='write the JSON summary here instead of stdout')

    p = sub.add_parser('table', help='exact vs. variational energies per site')
    p.add_argument('--lengths', type=_int_list, default=[4, 6, 8, 10, 12, 14])
    p.add_argument('--g', type=float, default=10.0)
    p.add_argument('--us', type=_float_list, default=[0.0, 1.0])
    _add_solver_args(p, AUTO)
    _add_output_args(p)

    p = sub.add_parser('rerun', help='replay a stored manifest')
    p.add_argument('manifest')
    p.add_argument('--out', help='write to this path instead of the recorded one')

    return parser


# ========== ENSEMBLE / MODEL CONSTRUCTION ==========

def _lanczos_config(args) -> LanczosConfig:
    cfg = LanczosConfig(max_iterations=args.max_iter, tolerance=args.tol, restart_dim=args.restart_dim)
    cfg.validate()
    return cfg


def _ensemble_spec(args, dim: int, density: float):
    distribution = Uniform(x_min=args.xmin) if args.dist == 'uniform' else Gaussian(args.mean, args.stddev)
    base = EnsembleSpec(
        dim=dim,
        distribution=distribution,
        density=density,
        density_mode='inverse_n' if args.inverse_n else 'fixed',
        row_scale=tuple((int(row), float(factor)) for row, factor in args.rowscale),
        seed=args.seed,
        amplification=RowAmplification() if args.amplify else None,
    )
    if args.diag_dominant is None and args.diag_dominant_factor is None:
        return base
    return DiagDominantSpec(base, diagonal_width=args.diag_dominant or 0.0,
                            width_factor=args.diag_dominant_factor)


def _model_spec(args):
    if args.model == 'hubbard':
        return HubbardSpec(sites=args.sites, n_up=args.n_up, n_down=args.n_down, t=args.t, u=args.u)
    return IsingSpec(length=args.length, g=args.g)


# ========== OUTPUT ==========

def _clean(value: Any) -> Any:
    """JSON-safe scalars: numpy -> python, NaN / inf -> None"""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _write_frame(frame: pd.DataFrame, path: str, fmt: str = 'csv') -> str:
    if fmt == 'json':
        frame.to_json(path, orient='records', indent=2, double_precision=15)
    else:
        frame.to_csv(path, index=False)
    logger.info(f"💾 Wrote {len(frame)} rows to {path}")
    return path


def _sidecar(out: str, name: str, fmt: str) -> str:
    return f"{out}.{name}.{fmt}"


def _save_run(args, started: float, outputs: List[str]):
    recorded = {k: v for k, v in vars(args).items() if k != 'handler'}
    manifest = RunManifest(command=args.command, args=recorded,
                           wall_time_s=round(time.perf_counter() - started, 3), outputs=outputs)
    save_manifest(manifest, manifest_path(args.out))


# ========== COMMANDS ==========

def cmd_gen(args) -> int:
    started = time.perf_counter()
    spec = _ensemble_spec(args, args.dim, args.density)
    m = generate_any(spec)
    write_matrix(m, args.out)
    _save_run(args, started, [args.out])
    return 0


def cmd_scaling(args) -> int:
    started = time.perf_counter()
    threads = os.getenv('EIGENSCALE_THREADS')
    try:
        workers = int(threads) if threads else args.parallelism
    except ValueError:
        raise InvalidSpecError(f"EIGENSCALE_THREADS must be an integer, got '{threads}'")
    if workers < 1:
        raise InvalidSpecError(f"parallelism must be >= 1, got {workers}")

    template = _ensemble_spec(args, args.dims[0], args.density[0])
    result = sweep(args.dims, template, args.samples, densities=args.density, global_seed=args.seed,
                   cfg=_lanczos_config(args), method=args.method, workers=workers,
                   scatter=bool(args.scatter))

    outputs = [_write_frame(result.to_frame(), args.out, args.format),
               _write_frame(result.cells_frame(), _sidecar(args.out, 'cells', args.format), args.format)]
    if args.scatter:
        outputs.append(_write_frame(result.scatter_frame(), args.scatter))
    _save_run(args, started, outputs)

    if not result.valid:
        bad = [f"N={c.dim} rho={c.density:g}" for c in result.cells if not c.valid]
        raise InvalidCellError(f"{len(bad)} invalid cell(s): {', '.join(bad)}")
    return 0


def run_model(spec, cfg: LanczosConfig, method: str = AUTO):
    """Build, solve exactly, fit the ansatz; returns (matrix, pair, variational, report)"""
    m = build_model(spec)
    pair = ground_state(m, cfg, method)
    variational = optimize(m, exact_energy=pair.value, sites=spec.per_site)
    report = analyze(m, pair, tag=spec.tag(), keep_vectors=True)
    return m, pair, variational, report


def _summary_row(spec, pair, variational, report) -> Dict[str, Any]:
    return {
        'model': spec.tag(),
        'dim': spec.dim,
        'sites': spec.per_site,
        'c': variational.offset,
        'e_scaling': variational.energy_per_site,
        'e_exact': variational.exact_per_site,
        'relative_error': variational.relative_error,
        'lambda_min': pair.value,
        'residual': pair.residual,
        'rms': report.rms,
        'slope': report.slope,
        'intercept': report.intercept,
    }


def cmd_model(args) -> int:
    started = time.perf_counter()
    spec = _model_spec(args)
    m, pair, variational, report = run_model(spec, _lanczos_config(args), args.method)

    basis = pd.DataFrame({
        'index': np.arange(m.dim),
        'state': basis_labels(spec),
        'g': pair.vector,
        's': report.s,
        'g_variational': variational.vector,
    }, columns=BASIS_COLUMNS)
    summary = pd.DataFrame([_summary_row(spec, pair, variational, report)], columns=SUMMARY_COLUMNS)

    logger.info(f"🎯 {spec.tag()}: E_exact/site={variational.exact_per_site:.8f} "
                f"E_scaling/site={variational.energy_per_site:.8f} c={variational.offset}")
    outputs = [_write_frame(basis, args.out, args.format),
               _write_frame(summary, _sidecar(args.out, 'summary', args.format), args.format)]
    _save_run(args, started, outputs)
    return 0


def cmd_table(args) -> int:
    started = time.perf_counter()
    cfg = _lanczos_config(args)
    specs = [IsingSpec(length=L, g=args.g) for L in args.lengths] + [HubbardSpec(u=u) for u in args.us]

    rows = []
    for i, spec in enumerate(specs, 1):
        logger.info(f"📊 [{i}/{len(specs)}] {spec.tag()}")
        _, pair, variational, report = run_model(spec, cfg, args.method)
        rows.append(_summary_row(spec, pair, variational, report))

    outputs = [_write_frame(pd.DataFrame(rows, columns=SUMMARY_COLUMNS), args.out, args.format)]
    _save_run(args, started, outputs)
    return 0


def cmd_solve(args) -> int:
    started = time.perf_counter()
    m = read_matrix(args.input)
    pair = ground_state(m, _lanczos_config(args), args.method)
    report = analyze(m, pair)

    summary = {
        'dim': m.dim,
        'method': pair.method,
        'lambda_min': pair.value,
        'residual': pair.residual,
        'iterations': pair.iterations,
        'degenerate': pair.degenerate,
        'scaling': {k: v for k, v in report.to_row().items() if k not in ('seed', 'density', 'dist')},
    }
    if args.variational:
        variational = optimize(m, exact_energy=pair.value)
        summary['variational'] = {
            'c': variational.c,
            'offset': variational.offset,
            'energy': variational.energy,
            'relative_error': variational.relative_error,
            'degenerate': variational.degenerate,
        }

    text = json.dumps(_clean(summary), indent=2)
    if args.out:
        Path(args.out).write_text(text + '\n')
        logger.info(f"💾 Wrote solve summary to {args.out}")
        _save_run(args, started, [args.out])
    else:
        print(text)
    return 0


def cmd_rerun(args) -> int:
    manifest = load_manifest(args.manifest)
    if manifest.command not in HANDLERS or manifest.command == 'rerun':
        raise InvalidSpecError(f"manifest command '{manifest.command}' cannot be replayed")

    replay = argparse.Namespace(**manifest.args)
    if args.out:
        replay.out = args.out
    logger.info(f"🔁 Replaying '{manifest.command}' from {args.manifest}")
    return HANDLERS[manifest.command](replay)


HANDLERS = {
    'gen': cmd_gen,
    'scaling': cmd_scaling,
    'model': cmd_model,
    'solve': cmd_solve,
    'table': cmd_table,
    'rerun': cmd_rerun,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.command)

    try:
        return HANDLERS[args.command](args)
    except EigenScaleError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"❌ I/O error: {e}")
        return 2


if __name__ == '__main__':
    sys.exit(main())
