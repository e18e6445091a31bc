"""
MODELS - exact Hamiltonian matrices for the validation systems

- 1-D Hubbard ring, fixed (n_up, n_down) sector, anti-periodic boundary
- 1-D transverse-field Ising ring in the sigma-z basis, periodic boundary

Both builders return a SymMatrix over the full basis (no symmetry sectors)
so row sums stay comparable with the random-ensemble analysis.
"""

import logging
from dataclasses import dataclass
from math import comb
from typing import List, Union

import numpy as np

from errors import InvalidSpecError, LengthOutOfRangeError, UnsupportedFillingError
from matcore import SymMatrix

logger = logging.getLogger('ModelBuilder')

HUBBARD_MAX_DIM = 4096
ISING_MIN_LENGTH = 3
ISING_MAX_LENGTH = 14
ISING_SPARSE_FROM = 10


@dataclass(frozen=True)
class HubbardSpec:
    sites: int = 4
    n_up: int = 2
    n_down: int = 2
    t: float = 1.0
    u: float = 0.0
    boundary: str = 'antiperiodic'

    @property
    def dim(self) -> int:
        return comb(self.sites, self.n_up) * comb(self.sites, self.n_down)

    @property
    def per_site(self) -> int:
        return self.sites

    def validate(self):
        if self.sites < 3:
            raise InvalidSpecError(f"Hubbard ring needs at least 3 sites, got {self.sites}")
        if not self.t > 0:
            raise InvalidSpecError(f"hopping t must be positive, got {self.t}")
        if self.boundary != 'antiperiodic':
            raise InvalidSpecError(f"unsupported boundary '{self.boundary}'")
        if not (0 <= self.n_up <= self.sites and 0 <= self.n_down <= self.sites):
            raise UnsupportedFillingError(
                f"filling ({self.n_up} up, {self.n_down} down) impossible on {self.sites} sites")
        if self.dim > HUBBARD_MAX_DIM:
            raise UnsupportedFillingError(
                f"Hubbard basis of {self.dim} states exceeds the dense limit {HUBBARD_MAX_DIM}")

    def tag(self) -> str:
        return f"hubbard_L{self.sites}_U{self.u:g}"


@dataclass(frozen=True)
class IsingSpec:
    length: int
    g: float = 10.0
    boundary: str = 'periodic'

    @property
    def dim(self) -> int:
        return 2 ** self.length

    @property
    def per_site(self) -> int:
        return self.length

    def validate(self):
        if not ISING_MIN_LENGTH <= self.length <= ISING_MAX_LENGTH:
            raise LengthOutOfRangeError(
                f"Ising length {self.length} outside [{ISING_MIN_LENGTH}, {ISING_MAX_LENGTH}]")
        if not self.g > 0:
            raise InvalidSpecError(f"transverse field g must be positive, got {self.g}")
        if self.boundary != 'periodic':
            raise InvalidSpecError(f"unsupported boundary '{self.boundary}'")

    def tag(self) -> str:
        return f"ising_L{self.length}_g{self.g:g}"


ModelSpec = Union[HubbardSpec, IsingSpec]


# ========== HUBBARD ==========

def _site_occupied(config: int, site: int, sites: int) -> int:
    # site 0 is the most significant (leftmost) bit
    return (config >> (sites - 1 - site)) & 1


def species_configs(sites: int, particles: int) -> List[int]:
    """All occupations of one spin species, in lexicographic bit-string order"""
    return [c for c in range(2 ** sites) if bin(c).count('1') == particles]


def _hop_sign(config: int, i: int, j: int, sites: int) -> int:
    """Jordan-Wigner sign of moving a fermion between sites i and j"""
    lo, hi = min(i, j), max(i, j)
    between = sum(_site_occupied(config, k, sites) for k in range(lo + 1, hi))
    return -1 if between % 2 else 1


def _species_hops(configs: List[int], sites: int, t: float):
    """(from_index, to_index, amplitude) for every single-particle hop of one species"""
    index = {c: k for k, c in enumerate(configs)}
    hops = []
    for k, config in enumerate(configs):
        for i in range(sites):
            j = (i + 1) % sites
            boundary = -1.0 if j == 0 else 1.0
            for src, dst in ((i, j), (j, i)):
                if _site_occupied(config, src, sites) and not _site_occupied(config, dst, sites):
                    moved = config ^ (1 << (sites - 1 - src)) ^ (1 << (sites - 1 - dst))
                    amplitude = -t * boundary * _hop_sign(config, src, dst, sites)
                    hops.append((k, index[moved], amplitude))
    return hops


def build_hubbard(spec: HubbardSpec) -> SymMatrix:
    """
    Hubbard Hamiltonian -t sum (c+_i c_j + h.c.) + U sum n_up n_down.

    Basis index = up_index * len(down_configs) + down_index. All up operators
    precede all down operators, so a hop picks up a sign only from same-species
    fermions it passes. The boundary bond carries an extra -1.
    """
    spec.validate()
    L = spec.sites
    ups = species_configs(L, spec.n_up)
    downs = species_configs(L, spec.n_down)
    n_down = len(downs)
    dim = len(ups) * n_down

    rows, cols, vals = [], [], []
    for a, up in enumerate(ups):
        for b, down in enumerate(downs):
            double = bin(up & down).count('1')
            if double and spec.u != 0:
                idx = a * n_down + b
                rows.append(idx)
                cols.append(idx)
                vals.append(spec.u * double)

    for src, dst, amp in _species_hops(ups, L, spec.t):
        for b in range(n_down):
            old, new = src * n_down + b, dst * n_down + b
            if new > old:
                rows.append(new)
                cols.append(old)
                vals.append(amp)
    for src, dst, amp in _species_hops(downs, L, spec.t):
        for a in range(len(ups)):
            old, new = a * n_down + src, a * n_down + dst
            if new > old:
                rows.append(new)
                cols.append(old)
                vals.append(amp)

    m = SymMatrix.from_lower_coordinates(dim, rows, cols, vals, sparse=False)
    logger.info(f"🔧 Built {spec.tag()}: {dim} states, {m.nnz_lower} stored elements")
    return m


def hubbard_labels(spec: HubbardSpec) -> List[str]:
    L = spec.sites
    ups = species_configs(L, spec.n_up)
    downs = species_configs(L, spec.n_down)
    return [f"{up:0{L}b}|{down:0{L}b}" for up in ups for down in downs]


# ========== TRANSVERSE-FIELD ISING ==========

def _ising_spins(length: int) -> np.ndarray:
    """sigma-z of every site for every basis state; bit i is site i, 1 means +1"""
    states = np.arange(2 ** length, dtype=np.int64)
    bits = (states[:, None] >> np.arange(length)) & 1
    return 2 * bits - 1


def build_ising(spec: IsingSpec) -> SymMatrix:
    """H = -g sum sigma-x - sum sigma-z sigma-z on a periodic ring"""
    spec.validate()
    L = spec.length
    dim = spec.dim
    states = np.arange(dim, dtype=np.int64)

    spins = _ising_spins(L)
    diagonal = -(spins * np.roll(spins, -1, axis=1)).sum(axis=1).astype(float)

    rows, cols = [states], [states]
    for site in range(L):
        flipped = states ^ (1 << site)
        lower = flipped < states
        rows.append(states[lower])
        cols.append(flipped[lower])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate([diagonal, np.full(rows.size - dim, -spec.g)])

    m = SymMatrix.from_lower_coordinates(dim, rows, cols, vals, sparse=L >= ISING_SPARSE_FROM)
    logger.info(f"🔧 Built {spec.tag()}: {dim} states ({'sparse' if m.is_sparse else 'dense'})")
    return m


def ising_labels(spec: IsingSpec) -> List[str]:
    L = spec.length
    return [''.join(str((state >> site) & 1) for site in range(L)) for state in range(spec.dim)]


def build_model(spec: ModelSpec) -> SymMatrix:
    if isinstance(spec, HubbardSpec):
        return build_hubbard(spec)
    return build_ising(spec)


def basis_labels(spec: ModelSpec) -> List[str]:
    if isinstance(spec, HubbardSpec):
        return hubbard_labels(spec)
    return ising_labels(spec)
