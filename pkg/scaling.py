"""
SCALING - ground-state eigenvector vs. row-sum analysis

For a matrix H with ground vector g and normalized row sums s, the scaling law
says g_i ~ -s_i. This module measures how well it holds:

- analyze(): OLS fit of g on s, rms distance from the line g = -s,
  Pearson / Spearman correlation of g with -s
- breakdown_diagnostics(): the same numbers for diagonal-dominant matrices,
  where only the correlation sign is expected to survive
- sweep(): (dim, density) grid of seeded random matrices solved on a worker
  pool and aggregated per cell with pandas
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from eigen import LANCZOS, EigenPair, LanczosConfig, ground_state
from errors import EigenScaleError, InvalidSpecError, ZeroVectorError
from matcore import DiagDominantSpec, EnsembleSpec, SymMatrix, generate_any, row_sums

logger = logging.getLogger('ScalingAnalyzer')

MAX_FAILURE_RATE = 0.10         # cells above this are invalid
SPREAD_RTOL = 1e-12             # s with smaller relative spread cannot be fitted
LINEAR_SLOPE_TOL = 0.1

REPORT_COLUMNS = ['dim', 'density', 'dist', 'seed', 'slope', 'intercept', 'rms',
                  'pearson', 'spearman', 'lambda_min', 'degenerate']
CELL_COLUMNS = ['dim', 'density', 'dist', 'sample_count', 'rms_median', 'rms_mean',
                'rms_stddev', 'slope_mean', 'intercept_mean', 'failures', 'flagged',
                'positive_offdiag_mean', 'positive_s_mean', 'valid']
SCATTER_COLUMNS = ['dim', 'density', 'dist', 'seed', 'index', 'g', 's']

Spec = Union[EnsembleSpec, DiagDominantSpec]


@dataclass
class ScalingReport:
    """Fit and deviation numbers for one matrix"""
    dim: int
    slope: float
    intercept: float
    rms: float
    pearson: float
    spearman: float
    degenerate: bool = False            # ground state degenerate, fit omitted
    degenerate_fit: bool = False        # s has no spread, fit omitted
    lambda_min: float = math.nan
    tag: str = ''
    seed: Optional[int] = None
    density: Optional[float] = None
    positive_s: int = 0
    positive_offdiag: float = math.nan
    g: Optional[np.ndarray] = field(default=None, repr=False)
    s: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def flagged(self) -> bool:
        return self.degenerate or self.degenerate_fit

    def to_row(self) -> Dict:
        return {
            'dim': self.dim,
            'density': self.density,
            'dist': self.tag,
            'seed': self.seed,
            'slope': self.slope,
            'intercept': self.intercept,
            'rms': self.rms,
            'pearson': self.pearson,
            'spearman': self.spearman,
            'lambda_min': self.lambda_min,
            'degenerate': self.flagged,
        }


def normalize_s(s_raw) -> np.ndarray:
    """Scale row sums to unit 2-norm, keeping their signs"""
    s_raw = np.asarray(s_raw, dtype=float)
    norm = float(np.linalg.norm(s_raw))
    if norm == 0.0:
        raise ZeroVectorError("row-sum vector is identically zero")
    return s_raw / norm


def _spec_fields(spec: Optional[Spec], tag: str) -> Tuple[str, Optional[int], Optional[float]]:
    if spec is None:
        return tag, None, None
    base = spec.base if isinstance(spec, DiagDominantSpec) else spec
    return tag or spec.label(), spec.seed, base.effective_density()


def analyze(m: SymMatrix, pair: EigenPair, spec: Optional[Spec] = None, tag: str = '',
            keep_vectors: bool = False) -> ScalingReport:
    s = normalize_s(row_sums(m))
    g = np.asarray(pair.vector, dtype=float)
    label, seed, density = _spec_fields(spec, tag)

    report = ScalingReport(
        dim=m.dim, slope=math.nan, intercept=math.nan,
        rms=float(np.sqrt(np.mean((g + s) ** 2))),
        pearson=math.nan, spearman=math.nan,
        lambda_min=pair.value, tag=label, seed=seed, density=density,
        positive_s=int(np.count_nonzero(s > 0)),
        g=g if keep_vectors else None, s=s if keep_vectors else None,
    )

    if pair.degenerate:
        logger.warning(f"⚠️ Degenerate ground state for {m}: fit omitted")
        report.degenerate = True
        return report

    if np.ptp(s) <= SPREAD_RTOL * np.max(np.abs(s)):
        logger.warning(f"⚠️ Row sums are uniform for {m}: fit omitted")
        report.degenerate_fit = True
        return report

    fit = stats.linregress(s, g)
    report.slope = float(fit.slope)
    report.intercept = float(fit.intercept)
    if np.ptp(g) > 0:
        report.pearson = float(stats.pearsonr(g, -s)[0])
        report.spearman = float(stats.spearmanr(g, -s)[0])

    if report.positive_s:
        logger.debug(f"{report.positive_s} positive row sums in {m}")
    return report


def breakdown_diagnostics(m: SymMatrix, pair: EigenPair, spec: Optional[Spec] = None,
                          tag: str = '', keep_vectors: bool = False) -> ScalingReport:
    """
    analyze() for diagonal-dominant matrices.

    The numbers are identical; only the expectation differs. A monotone
    relation (spearman > 0) is expected, a slope near -1 is not.
    """
    report = analyze(m, pair, spec, tag, keep_vectors)
    if report.flagged:
        return report

    linear = abs(report.slope + 1.0) <= LINEAR_SLOPE_TOL
    if report.spearman > 0:
        logger.info(f"Correlation kept (spearman {report.spearman:.3f}), "
                    f"{'still' if linear else 'no longer'} linear (slope {report.slope:.3f})")
    else:
        logger.warning(f"⚠️ Correlation lost on {m}: spearman {report.spearman:.3f}")
    return report


# ========== SWEEPS ==========

def derive_seed(global_seed: int, dim: int, density: float, sample_index: int) -> int:
    """Per-matrix seed; depends only on its own cell coordinates"""
    key = f"{global_seed}:{dim}:{density!r}:{sample_index}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], 'big')


def cell_spec(template: Spec, dim: int, density: Optional[float] = None) -> Spec:
    """The template at one (dim, density) grid point"""
    spec = template.with_dim(dim)
    if density is None:
        return spec
    if isinstance(spec, DiagDominantSpec):
        return replace(spec, base=replace(spec.base, density=density))
    return replace(spec, density=density)


def _effective_density(spec: Spec) -> float:
    base = spec.base if isinstance(spec, DiagDominantSpec) else spec
    return base.effective_density()


@dataclass
class SweepCell:
    dim: int
    density: float
    distribution: str
    sample_count: int
    rms_median: float
    rms_mean: float
    rms_stddev: float
    slope_mean: float
    intercept_mean: float
    failures: int = 0
    flagged: int = 0
    positive_offdiag_mean: float = math.nan
    positive_s_mean: float = math.nan
    valid: bool = True

    def to_row(self) -> Dict:
        row = {name: getattr(self, name) for name in CELL_COLUMNS if name != 'dist'}
        row['dist'] = self.distribution
        return {name: row[name] for name in CELL_COLUMNS}


@dataclass
class SampleFailure:
    dim: int
    density: float
    seed: int
    error: str
    exit_code: int


@dataclass
class SweepResult:
    cells: List[SweepCell]
    reports: List[ScalingReport]
    failures: List[SampleFailure] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return all(cell.valid for cell in self.cells)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_row() for r in self.reports], columns=REPORT_COLUMNS)

    def cells_frame(self) -> pd.DataFrame:
        return pd.DataFrame([c.to_row() for c in self.cells], columns=CELL_COLUMNS)

    def scatter_frame(self) -> pd.DataFrame:
        """(i, g_i, s_i) rows for every report that kept its vectors"""
        frames = []
        for r in self.reports:
            if r.g is None:
                continue
            frames.append(pd.DataFrame({
                'dim': r.dim, 'density': r.density, 'dist': r.tag, 'seed': r.seed,
                'index': np.arange(r.dim), 'g': r.g, 's': r.s,
            }))
        if not frames:
            return pd.DataFrame(columns=SCATTER_COLUMNS)
        return pd.concat(frames, ignore_index=True)[SCATTER_COLUMNS]


@dataclass(frozen=True)
class _SweepTask:
    spec: Spec
    cfg: LanczosConfig
    method: str
    keep_vectors: bool


def run_sample(spec: Spec, cfg: Optional[LanczosConfig] = None, method: str = LANCZOS,
               keep_vectors: bool = False) -> ScalingReport:
    """generate -> solve -> analyze for one seeded spec"""
    m = generate_any(spec)
    pair = ground_state(m, cfg, method)
    if isinstance(spec, DiagDominantSpec):
        report = breakdown_diagnostics(m, pair, spec, keep_vectors=keep_vectors)
    else:
        report = analyze(m, pair, spec, keep_vectors=keep_vectors)
    report.positive_offdiag = m.positive_offdiag_fraction()
    return report


def _run_task(task: _SweepTask) -> Union[ScalingReport, SampleFailure]:
    # worker entry point, must stay top-level for pickling
    try:
        return run_sample(task.spec, task.cfg, task.method, task.keep_vectors)
    except EigenScaleError as e:
        return SampleFailure(dim=task.spec.dim, density=_effective_density(task.spec),
                             seed=task.spec.seed, error=str(e), exit_code=e.exit_code)


def _aggregate(key: Tuple[int, float, str], samples: int, reports: List[ScalingReport],
               failures: int) -> SweepCell:
    dim, density, dist = key
    frame = pd.DataFrame({
        'rms': [r.rms for r in reports],
        'slope': [r.slope for r in reports],
        'intercept': [r.intercept for r in reports],
        'positive_offdiag': [r.positive_offdiag for r in reports],
        'positive_s': [r.positive_s for r in reports],
        'flagged': pd.Series([r.flagged for r in reports], dtype=bool),
    })
    usable = frame[~frame['flagged']]
    valid = failures <= MAX_FAILURE_RATE * samples and len(usable) >= 1

    cell = SweepCell(
        dim=dim, density=density, distribution=dist,
        sample_count=len(usable),
        rms_median=float(usable['rms'].median()) if len(usable) else math.nan,
        rms_mean=float(usable['rms'].mean()) if len(usable) else math.nan,
        rms_stddev=float(usable['rms'].std(ddof=0)) if len(usable) else math.nan,
        slope_mean=float(usable['slope'].mean()) if len(usable) else math.nan,
        intercept_mean=float(usable['intercept'].mean()) if len(usable) else math.nan,
        failures=failures,
        flagged=int(frame['flagged'].sum()) if len(frame) else 0,
        positive_offdiag_mean=float(frame['positive_offdiag'].mean()) if len(frame) else math.nan,
        positive_s_mean=float(frame['positive_s'].mean()) if len(frame) else math.nan,
        valid=valid,
    )
    if not valid:
        logger.warning(f"⚠️ Cell N={dim} rho={density:g} invalid: "
                       f"{failures}/{samples} failures, {len(usable)} usable")
    return cell


def sweep(dims: Sequence[int], template: Spec, samples_per_cell: int,
          densities: Optional[Sequence[float]] = None, global_seed: int = 0,
          cfg: Optional[LanczosConfig] = None, method: str = LANCZOS,
          workers: int = 1, scatter: bool = False) -> SweepResult:
    """
    Generate, solve and analyze samples_per_cell matrices for every
    (dim, density) cell, then aggregate each cell.

    Matrix seeds come from derive_seed(), so a cell's rows do not depend on
    which other cells are in the sweep. Results are ordered by cell and then
    sample index regardless of the worker count. With scatter=True the first
    matrix of each cell keeps its (g, s) vectors.
    """
    if not dims or any(d < 2 for d in dims):
        raise InvalidSpecError(f"sweep dimensions must be a non-empty list of values >= 2, got {list(dims)}")
    if samples_per_cell < 1:
        raise InvalidSpecError(f"samples per cell must be >= 1, got {samples_per_cell}")
    cfg = cfg or LanczosConfig()
    nominal = list(densities) if densities else [None]

    cells: List[Tuple[int, float, str]] = []
    tasks: List[_SweepTask] = []
    for dim in dims:
        for density in nominal:
            spec = cell_spec(template, dim, density)
            spec.validate()
            rho = _effective_density(spec)
            cells.append((dim, rho, spec.label()))
            for index in range(samples_per_cell):
                seeded = spec.with_seed(derive_seed(global_seed, dim, rho, index))
                tasks.append(_SweepTask(seeded, cfg, method, scatter and index == 0))

    logger.info(f"🚀 Sweep: {len(cells)} cells x {samples_per_cell} samples on {workers} worker(s)")
    if workers > 1:
        with Pool(processes=workers) as pool:
            outcomes = pool.map(_run_task, tasks, chunksize=1)
    else:
        outcomes = [_run_task(t) for t in tasks]

    result = SweepResult(cells=[], reports=[])
    for i, key in enumerate(cells):
        chunk = outcomes[i * samples_per_cell:(i + 1) * samples_per_cell]
        reports = [o for o in chunk if isinstance(o, ScalingReport)]
        failed = [o for o in chunk if isinstance(o, SampleFailure)]
        for f in failed:
            logger.error(f"❌ N={f.dim} seed={f.seed}: {f.error}")

        cell = _aggregate(key, samples_per_cell, reports, len(failed))
        result.cells.append(cell)
        result.reports.extend(reports)
        result.failures.extend(failed)
        logger.info(f"📊 [{i + 1}/{len(cells)}] N={cell.dim} rho={cell.density:g} {cell.distribution}: "
                    f"rms median {cell.rms_median:.5f} over {cell.sample_count} matrices")
    return result
