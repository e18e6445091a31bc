"""
MATCORE - symmetric matrix storage, random ensembles and matrix transforms

Every solver and analyzer in eigenscale consumes a SymMatrix. This module owns:
- SymMatrix: immutable real symmetric matrix, dense ndarray or scipy CSR storage
- EnsembleSpec / DiagDominantSpec: seeded recipes for random matrices with
  non-positive (uniform) or mostly non-positive (Gaussian) elements
- generate / generate_diag_dominant: the ensemble generators
- shift_diagonal / row_sums: the deterministic transforms the analysis uses
- write_matrix / read_matrix: the `%%symcoord` text format

Random draws come from per-row Philox streams keyed on (seed, stream, row), so a
matrix element never depends on the order in which rows are visited.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Dict, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.stats import foldnorm

from errors import (
    DegenerateEnsembleError,
    DuplicateEntryError,
    IndexOutOfRangeError,
    InvalidSpecError,
    MalformedHeaderError,
    MatrixFormatError,
)

logger = logging.getLogger('MatCore')

# Ensemble constants
REFERENCE_DIM = 100                 # InverseN mode: rho_eff = rho * REFERENCE_DIM / N
SPARSE_DENSITY_THRESHOLD = 0.25     # store sparse below this fill
SPARSE_DIM_THRESHOLD = 4096         # ... or above this dimension
HEADER_TAG = '%%symcoord'

# Philox stream ids
_ELEMENT_STREAM = 0
_DIAGONAL_STREAM = 1
_AMPLIFY_STREAM = 2


def _stream(seed: int, stream: int, row: int) -> np.random.Generator:
    """Counter-based generator for one (seed, stream, row) triple"""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(stream, row))
    return np.random.Generator(np.random.Philox(seq))


# ========== DISTRIBUTIONS ==========

@dataclass(frozen=True)
class Uniform:
    """Elements drawn uniformly from [x_min, 0]"""
    x_min: float = -1.0

    name = 'uniform'

    def validate(self):
        if not self.x_min < 0:
            raise InvalidSpecError(f"uniform distribution needs x_min < 0, got {self.x_min}")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.x_min, 0.0, size)

    def expected_abs(self) -> float:
        return abs(self.x_min) / 2.0


@dataclass(frozen=True)
class Gaussian:
    """Elements drawn from Normal(mean, stddev**2); positive draws are kept"""
    mean: float = -2.0
    stddev: float = 1.0

    name = 'gaussian'

    def validate(self):
        if not self.stddev > 0:
            raise InvalidSpecError(f"gaussian distribution needs stddev > 0, got {self.stddev}")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(self.mean, self.stddev, size)

    def expected_abs(self) -> float:
        # mean of |X| for X ~ N(mean, stddev^2)
        return float(foldnorm(abs(self.mean) / self.stddev, scale=self.stddev).mean())


Distribution = Union[Uniform, Gaussian]


@dataclass(frozen=True)
class RowAmplification:
    """Randomly chosen rows (and columns) enlarged or reduced by a factor"""
    enlarged: int = 5
    reduced: int = 5
    enlarge_factor: float = 10.0
    reduce_factor: float = 0.1


@dataclass(frozen=True)
class EnsembleSpec:
    """Recipe for one random matrix"""
    dim: int
    distribution: Distribution = field(default_factory=Uniform)
    density: float = 1.0
    density_mode: str = 'fixed'          # 'fixed' or 'inverse_n'
    row_scale: Tuple[Tuple[int, float], ...] = ()
    seed: int = 0
    amplification: Optional[RowAmplification] = None

    def validate(self):
        if self.dim < 2:
            raise InvalidSpecError(f"dimension must be >= 2, got {self.dim}")
        if not 0 < self.density <= 1:
            raise InvalidSpecError(f"density must lie in (0, 1], got {self.density}")
        if self.density_mode not in ('fixed', 'inverse_n'):
            raise InvalidSpecError(f"unknown density mode '{self.density_mode}'")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidSpecError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        self.distribution.validate()

        rows = [r for r, _ in self.row_scale]
        if len(set(rows)) != len(rows):
            raise InvalidSpecError(f"row_scale indices must be distinct: {rows}")
        for row, factor in self.row_scale:
            if not 0 <= row < self.dim:
                raise InvalidSpecError(f"row_scale index {row} outside [0, {self.dim})")
            if not factor > 0:
                raise InvalidSpecError(f"row_scale factor for row {row} must be positive, got {factor}")

        amp = self.amplification
        if amp is not None:
            if amp.enlarged < 0 or amp.reduced < 0 or amp.enlarged + amp.reduced > self.dim:
                raise InvalidSpecError(
                    f"cannot amplify {amp.enlarged}+{amp.reduced} rows of a {self.dim}-dim matrix")
            if not (amp.enlarge_factor > 0 and amp.reduce_factor > 0):
                raise InvalidSpecError("row amplification factors must be positive")

    def effective_density(self) -> float:
        if self.density_mode == 'inverse_n':
            return min(1.0, self.density * REFERENCE_DIM / self.dim)
        return self.density

    def with_dim(self, dim: int) -> 'EnsembleSpec':
        return replace(self, dim=dim)

    def with_seed(self, seed: int) -> 'EnsembleSpec':
        return replace(self, seed=seed)

    def prefers_sparse(self) -> bool:
        return self.effective_density() < SPARSE_DENSITY_THRESHOLD or self.dim > SPARSE_DIM_THRESHOLD

    def label(self) -> str:
        return self.distribution.name


@dataclass(frozen=True)
class DiagDominantSpec:
    """Base ensemble whose diagonal is redrawn uniformly from [-W, W]"""
    base: EnsembleSpec
    diagonal_width: float = 0.0
    width_factor: Optional[float] = None    # W = factor * dominance_bound(), overrides diagonal_width
    enforce: bool = True

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def seed(self) -> int:
        return self.base.seed

    def dominance_bound(self) -> float:
        """Expected magnitude of an off-diagonal row sum, N * rho * E|element|"""
        return self.base.dim * self.base.effective_density() * self.base.distribution.expected_abs()

    def effective_width(self) -> float:
        if self.width_factor is not None:
            return self.width_factor * self.dominance_bound()
        return self.diagonal_width

    def validate(self):
        self.base.validate()
        width = self.effective_width()
        if width < 0:
            raise InvalidSpecError(f"diagonal width must be >= 0, got {width}")
        if self.enforce and width > 0 and width <= self.dominance_bound():
            raise InvalidSpecError(
                f"diagonal width {width:g} does not dominate the expected "
                f"off-diagonal row sum {self.dominance_bound():g}")

    def with_dim(self, dim: int) -> 'DiagDominantSpec':
        return replace(self, base=self.base.with_dim(dim))

    def with_seed(self, seed: int) -> 'DiagDominantSpec':
        return replace(self, base=self.base.with_seed(seed))

    def label(self) -> str:
        return f"{self.base.label()}+diag"


# ========== SYMMETRIC MATRIX ==========

class SymMatrix:
    """
    Immutable real symmetric matrix.

    Dense storage keeps the full symmetric ndarray; sparse storage keeps a
    symmetric CSR matrix with no explicit zeros. Both expose the same API.
    """

    def __init__(self, dim: int, dense: Optional[np.ndarray] = None,
                 csr: Optional[sp.csr_matrix] = None):
        if dim < 2:
            raise InvalidSpecError(f"matrix dimension must be >= 2, got {dim}")
        if (dense is None) == (csr is None):
            raise ValueError("exactly one of dense / csr storage is required")

        self._dim = int(dim)
        self._dense = None
        self._csr = None

        if dense is not None:
            dense = np.array(dense, dtype=float)
            dense.setflags(write=False)
            self._dense = dense
        else:
            csr = sp.csr_matrix(csr, dtype=float, copy=True)
            csr.eliminate_zeros()
            csr.sort_indices()
            for arr in (csr.data, csr.indices, csr.indptr):
                arr.setflags(write=False)
            self._csr = csr

    # ---------- constructors ----------

    @classmethod
    def from_dense(cls, array, sparse: bool = False) -> 'SymMatrix':
        a = np.asarray(array, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidSpecError(f"expected a square matrix, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise InvalidSpecError("matrix is not exactly symmetric")
        if sparse:
            return cls(a.shape[0], csr=sp.csr_matrix(a))
        return cls(a.shape[0], dense=a)

    @classmethod
    def from_lower_coordinates(cls, dim: int, rows, cols, values,
                               sparse: Optional[bool] = None) -> 'SymMatrix':
        """Build from (row, col, value) triples with row >= col"""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=float)

        if rows.size and (rows.min() < 0 or rows.max() >= dim or cols.min() < 0 or cols.max() >= dim):
            raise IndexOutOfRangeError(f"coordinate outside a {dim}x{dim} matrix")
        if np.any(rows < cols):
            raise IndexOutOfRangeError("coordinate above the diagonal (row < col)")

        keys = rows * dim + cols
        unique_keys, counts = np.unique(keys, return_counts=True)
        if np.any(counts > 1):
            dup = int(unique_keys[counts > 1][0])
            raise DuplicateEntryError(f"duplicate entry ({dup // dim + 1}, {dup % dim + 1})")

        keep = values != 0.0
        rows, cols, values = rows[keep], cols[keep], values[keep]

        if sparse is None:
            lower_total = dim * (dim + 1) // 2
            sparse = values.size < SPARSE_DENSITY_THRESHOLD * lower_total or dim > SPARSE_DIM_THRESHOLD

        if sparse:
            off = rows != cols
            r = np.concatenate([rows, cols[off]])
            c = np.concatenate([cols, rows[off]])
            v = np.concatenate([values, values[off]])
            return cls(dim, csr=sp.csr_matrix((v, (r, c)), shape=(dim, dim)))

        a = np.zeros((dim, dim))
        a[rows, cols] = values
        a[cols, rows] = values
        return cls(dim, dense=a)

    # ---------- properties ----------

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def is_sparse(self) -> bool:
        return self._csr is not None

    @property
    def nnz_lower(self) -> int:
        if self._dense is not None:
            return int(np.count_nonzero(np.tril(self._dense)))
        return int(sp.tril(self._csr).nnz)

    def __repr__(self):
        storage = 'sparse' if self.is_sparse else 'dense'
        return f"SymMatrix(dim={self._dim}, storage={storage}, nnz_lower={self.nnz_lower})"

    # ---------- access ----------

    def lower_coordinates(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nonzero lower-triangle entries in row-major order"""
        if self._dense is not None:
            rows, cols = np.nonzero(np.tril(self._dense))
            return rows, cols, self._dense[rows, cols].copy()
        t = sp.tril(self._csr, format='coo')
        order = np.lexsort((t.col, t.row))
        return t.row[order].astype(np.int64), t.col[order].astype(np.int64), t.data[order].copy()

    def element(self, i: int, j: int) -> float:
        if self._dense is not None:
            return float(self._dense[i, j])
        return float(self._csr[i, j])

    def diagonal(self) -> np.ndarray:
        if self._dense is not None:
            return np.diag(self._dense).copy()
        return self._csr.diagonal()

    def to_dense(self) -> np.ndarray:
        if self._dense is not None:
            return np.array(self._dense)
        return self._csr.toarray()

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self._dim,):
            raise ValueError(f"vector of shape {v.shape} does not match dimension {self._dim}")
        if self._dense is not None:
            return self._dense @ v
        return self._csr @ v

    def row_sums(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense.sum(axis=1)
        return np.asarray(self._csr.sum(axis=1)).ravel()

    def equals(self, other: 'SymMatrix') -> bool:
        """Exact value equality, independent of storage"""
        if self._dim != other.dim:
            return False
        mine, theirs = self.lower_coordinates(), other.lower_coordinates()
        return all(np.array_equal(a, b) for a, b in zip(mine, theirs))

    # ---------- structure ----------

    def is_connected(self) -> bool:
        """True when the graph of nonzero off-diagonal elements is connected"""
        rows, cols, _ = self.lower_coordinates()
        off = rows != cols
        pattern = sp.csr_matrix((np.ones(np.count_nonzero(off)), (rows[off], cols[off])),
                                shape=(self._dim, self._dim))
        n_components, _ = connected_components(pattern, directed=False)
        return n_components == 1

    def offdiagonal_values(self) -> np.ndarray:
        rows, cols, vals = self.lower_coordinates()
        return vals[rows != cols]

    def positive_offdiag_fraction(self) -> float:
        off = self.offdiagonal_values()
        if off.size == 0:
            return 0.0
        return float(np.count_nonzero(off > 0)) / off.size

    def offdiag_nonpositive(self) -> bool:
        return not np.any(self.offdiagonal_values() > 0)

    # ---------- derived matrices ----------

    def scaled(self, factor: float) -> 'SymMatrix':
        if self._dense is not None:
            return SymMatrix(self._dim, dense=self._dense * factor)
        return SymMatrix(self._dim, csr=self._csr * factor)

    def permuted(self, perm) -> 'SymMatrix':
        """Simultaneous row/column permutation: new[i, j] = old[perm[i], perm[j]]"""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self._dim)):
            raise InvalidSpecError("not a permutation of the matrix indices")
        if self._dense is not None:
            return SymMatrix(self._dim, dense=self._dense[np.ix_(perm, perm)])
        return SymMatrix(self._dim, csr=self._csr[perm][:, perm])

    def with_diagonal(self, diagonal) -> 'SymMatrix':
        diagonal = np.asarray(diagonal, dtype=float)
        if self._dense is not None:
            a = np.array(self._dense)
            np.fill_diagonal(a, diagonal)
            return SymMatrix(self._dim, dense=a)
        rows, cols, vals = self.lower_coordinates()
        off = rows != cols
        idx = np.arange(self._dim)
        return SymMatrix.from_lower_coordinates(
            self._dim,
            np.concatenate([rows[off], idx]),
            np.concatenate([cols[off], idx]),
            np.concatenate([vals[off], diagonal]),
            sparse=True,
        )


# ========== ENSEMBLE GENERATION ==========

def _row_factors(spec: EnsembleSpec) -> np.ndarray:
    factors = np.ones(spec.dim)
    for row, factor in spec.row_scale:
        factors[row] *= factor

    amp = spec.amplification
    if amp is not None and amp.enlarged + amp.reduced > 0:
        chosen = _stream(spec.seed, _AMPLIFY_STREAM, 0).permutation(spec.dim)[:amp.enlarged + amp.reduced]
        factors[chosen[:amp.enlarged]] *= amp.enlarge_factor
        factors[chosen[amp.enlarged:]] *= amp.reduce_factor
    return factors


def generate(spec: EnsembleSpec) -> SymMatrix:
    """Draw one random symmetric matrix from an ensemble recipe"""
    spec.validate()
    n = spec.dim
    rho = spec.effective_density()

    row_parts, col_parts, val_parts = [], [], []
    for i in range(n):
        rng = _stream(spec.seed, _ELEMENT_STREAM, i)
        values = spec.distribution.draw(rng, i + 1)      # columns 0..i
        keep = rng.random(i + 1) < rho
        cols = np.nonzero(keep)[0]
        row_parts.append(np.full(cols.size, i, dtype=np.int64))
        col_parts.append(cols)
        val_parts.append(values[keep])

    rows = np.concatenate(row_parts)
    cols = np.concatenate(col_parts)
    vals = np.concatenate(val_parts)

    factors = _row_factors(spec)
    if not np.all(factors == 1.0):
        # off-diagonal (r, c) picks up f_r * f_c; the diagonal is scaled once
        vals = np.where(rows == cols, vals * factors[rows], vals * factors[rows] * factors[cols])

    m = SymMatrix.from_lower_coordinates(n, rows, cols, vals, sparse=spec.prefers_sparse())
    if not m.is_connected():
        logger.error(f"Disconnected matrix for {spec.label()} N={n} rho={rho:.4f} seed={spec.seed}")
        raise DegenerateEnsembleError(
            f"off-diagonal graph is disconnected (N={n}, rho={rho:.4f}, seed={spec.seed})")

    logger.debug(f"Generated {m} from {spec.label()} rho={rho:.4f} seed={spec.seed}")
    return m


def generate_diag_dominant(spec: DiagDominantSpec) -> SymMatrix:
    """Ensemble matrix whose diagonal is redrawn uniformly from [-W, W]"""
    spec.validate()
    m = generate(spec.base)
    width = spec.effective_width()
    if width == 0:
        return m
    rng = _stream(spec.base.seed, _DIAGONAL_STREAM, 0)
    return m.with_diagonal(rng.uniform(-width, width, spec.dim))


def generate_any(spec: Union[EnsembleSpec, DiagDominantSpec]) -> SymMatrix:
    if isinstance(spec, DiagDominantSpec):
        return generate_diag_dominant(spec)
    return generate(spec)


# ========== TRANSFORMS ==========

def shift_diagonal(m: SymMatrix, d: float) -> SymMatrix:
    """m + d * I"""
    if d == 0:
        return m
    return m.with_diagonal(m.diagonal() + d)


def row_sums(m: SymMatrix) -> np.ndarray:
    """Raw S_i = sum_j H_ij, diagonal included"""
    return m.row_sums()


# ========== FILE FORMAT ==========

def write_matrix(m: SymMatrix, sink: Union[str, Path, IO[str]]):
    """Write the lower triangle in `%%symcoord N NNZ` format, 1-based indices"""
    rows, cols, vals = m.lower_coordinates()
    lines = [f"{HEADER_TAG} {m.dim} {rows.size}\n"]
    lines.extend(f"{i + 1} {j + 1} {v:.16e}\n" for i, j, v in zip(rows.tolist(), cols.tolist(), vals.tolist()))

    if isinstance(sink, (str, Path)):
        with open(sink, 'w', encoding='utf-8', newline='\n') as f:
            f.writelines(lines)
        logger.info(f"💾 Wrote {m} to {sink}")
    else:
        sink.writelines(lines)


def _parse_header(line: str) -> Tuple[int, int]:
    tokens = line.split()
    if len(tokens) != 3 or tokens[0] != HEADER_TAG:
        raise MalformedHeaderError(f"expected '{HEADER_TAG} N NNZ', got '{line.strip()}'")
    try:
        dim, nnz = int(tokens[1]), int(tokens[2])
    except ValueError:
        raise MalformedHeaderError(f"non-integer size in header '{line.strip()}'")
    if dim < 2 or nnz < 0 or nnz > dim * (dim + 1) // 2:
        raise MalformedHeaderError(f"impossible header sizes N={dim} NNZ={nnz}")
    return dim, nnz


def read_matrix(source: Union[str, Path, IO[str]]) -> SymMatrix:
    """Parse a `%%symcoord` file back into a SymMatrix"""
    if isinstance(source, (str, Path)):
        with open(source, 'r', encoding='utf-8') as f:
            text = f.read()
    else:
        text = source.read()

    header: Optional[Tuple[int, int]] = None
    rows, cols, vals = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        if header is None:
            header = _parse_header(line)
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise MatrixFormatError(f"line {lineno}: expected 'i j v', got '{line}'")
        try:
            i, j, v = int(tokens[0]), int(tokens[1]), float(tokens[2])
        except ValueError:
            raise MatrixFormatError(f"line {lineno}: cannot parse '{line}'")
        dim = header[0]
        if not (1 <= j <= i <= dim):
            raise IndexOutOfRangeError(f"line {lineno}: entry ({i}, {j}) outside the lower triangle of N={dim}")
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)

    if header is None:
        raise MalformedHeaderError("missing header line")
    dim, nnz = header
    if len(vals) != nnz:
        raise MalformedHeaderError(f"header declares {nnz} entries, file holds {len(vals)}")

    m = SymMatrix.from_lower_coordinates(dim, rows, cols, vals)
    logger.debug(f"Read {m}")
    return m
