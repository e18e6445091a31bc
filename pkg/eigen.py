"""
EIGEN - ground-state eigensolvers for SymMatrix

- Lanczos with full reorthogonalization and Ritz-vector restarts (production)
- Cyclic Jacobi with round-robin parallel ordering (dense oracle, N <= 4096)
- Rayleigh quotient and residual helpers shared with the variational solver

Returned vectors follow one sign convention: the component of largest
magnitude is positive. For connected matrices with non-positive off-diagonal
elements this makes every component non-negative.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal

from errors import DimensionTooLargeForDenseError, InvalidSpecError, NoConvergenceError, ZeroVectorError
from matcore import SymMatrix

logger = logging.getLogger('EigenSolver')

LANCZOS = 'lanczos'
DENSE_ORACLE = 'dense'
AUTO = 'auto'
METHODS = (LANCZOS, DENSE_ORACLE, AUTO)

DENSE_ORACLE_LIMIT = 4096
AUTO_DENSE_LIMIT = 256          # 'auto' uses the Jacobi oracle up to this size
DEGENERACY_GAP = 1e-12
START_NOISE = 1e-3
BREAKDOWN_RTOL = 1e-12
JACOBI_MAX_SWEEPS = 60


@dataclass(frozen=True)
class LanczosConfig:
    max_iterations: int = 500       # total matrix-vector products
    tolerance: float = 1e-10        # residual target relative to max(1, |lambda|)
    restart_dim: int = 64
    seed: int = 0                   # start-vector noise

    def validate(self):
        if not self.tolerance > 0:
            raise InvalidSpecError(f"tolerance must be positive, got {self.tolerance}")
        if self.restart_dim < 8:
            raise InvalidSpecError(f"restart_dim must be >= 8, got {self.restart_dim}")
        if self.max_iterations < 1:
            raise InvalidSpecError(f"max_iterations must be >= 1, got {self.max_iterations}")

    def residual_target(self, value: float) -> float:
        return self.tolerance * max(1.0, abs(value))


@dataclass
class EigenPair:
    """Minimum eigenvalue with its sign-fixed unit eigenvector"""
    value: float
    vector: np.ndarray
    method: str
    residual: float
    degenerate: bool = False
    gap: Optional[float] = None
    iterations: int = 0


# ========== HELPERS ==========

def fix_sign(vector: np.ndarray) -> np.ndarray:
    """Flip so that the largest-magnitude component is positive"""
    vector = np.asarray(vector, dtype=float)
    if vector[np.argmax(np.abs(vector))] < 0:
        return -vector
    return vector


def residual_norm(m: SymMatrix, value: float, vector: np.ndarray) -> float:
    """||H g - lambda g||_2"""
    return float(np.linalg.norm(m.matvec(vector) - value * vector))


def rayleigh_quotient(m: SymMatrix, v) -> float:
    """v^T H v / v^T v"""
    v = np.asarray(v, dtype=float)
    norm_sq = float(v @ v)
    if norm_sq == 0.0:
        raise ZeroVectorError("Rayleigh quotient of the zero vector")
    return float(v @ m.matvec(v)) / norm_sq


def _is_degenerate(gap: Optional[float], value: float) -> bool:
    return gap is not None and gap < DEGENERACY_GAP * max(1.0, abs(value))


# ========== LANCZOS ==========

def _orthogonalize(w: np.ndarray, basis: np.ndarray) -> np.ndarray:
    # classical Gram-Schmidt, twice
    for _ in range(2):
        w = w - basis @ (basis.T @ w)
    return w


def _lanczos_cycle(m: SymMatrix, q0: np.ndarray, k: int, rng: np.random.Generator,
                   locked: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    k Lanczos steps from q0; returns (Ritz values, lowest Ritz vector).

    With `locked` (columns of an orthonormal block) every basis vector is kept
    orthogonal to that block, so the cycle works on its complement.
    """
    n = m.dim
    basis = np.zeros((n, k))
    alphas = np.zeros(k)
    betas = np.zeros(k - 1)
    q0 = q0 if locked is None else _orthogonalize(q0, locked)
    basis[:, 0] = q0 / np.linalg.norm(q0)
    scale = 0.0

    for j in range(k):
        w = m.matvec(basis[:, j])
        scale = max(scale, float(np.linalg.norm(w)))
        alphas[j] = basis[:, j] @ w
        if j == k - 1:
            break

        if locked is not None:
            w = _orthogonalize(w, locked)
        w = _orthogonalize(w, basis[:, :j + 1])
        beta = float(np.linalg.norm(w))
        if beta <= BREAKDOWN_RTOL * max(scale, 1.0):
            # invariant subspace reached; continue from a fresh orthogonal direction
            logger.debug(f"Lanczos breakdown at step {j + 1}, injecting random direction")
            w = rng.standard_normal(n)
            if locked is not None:
                w = _orthogonalize(w, locked)
            w = _orthogonalize(w, basis[:, :j + 1])
            basis[:, j + 1] = w / np.linalg.norm(w)
            betas[j] = 0.0
        else:
            basis[:, j + 1] = w / beta
            betas[j] = beta

    if k == 1:
        return alphas, basis[:, 0]
    theta, y = eigh_tridiagonal(alphas, betas)
    return theta, basis @ y[:, 0]


@dataclass
class _Restarted:
    value: float
    vector: np.ndarray
    residual: float
    best_residual: float
    iterations: int
    converged: bool


def _restarted_lanczos(m: SymMatrix, q: np.ndarray, cfg: LanczosConfig, rng: np.random.Generator,
                       locked: Optional[np.ndarray] = None) -> _Restarted:
    """Restart from the lowest Ritz vector until the residual target or the matvec budget is hit"""
    free_dim = m.dim - (0 if locked is None else locked.shape[1])
    iterations = 0
    best_residual = np.inf
    value, x, residual = math.nan, q, np.inf
    while iterations < cfg.max_iterations:
        k = min(cfg.restart_dim, free_dim, cfg.max_iterations - iterations)
        theta, x = _lanczos_cycle(m, q, k, rng, locked)
        iterations += k

        x = fix_sign(x / np.linalg.norm(x))
        value = float(theta[0])
        residual = residual_norm(m, value, x)
        best_residual = min(best_residual, residual)
        logger.debug(f"Lanczos cycle: {iterations} matvecs, lambda={value:.15g}, residual={residual:.3e}")

        if residual <= cfg.residual_target(value):
            return _Restarted(value, x, residual, best_residual, iterations, True)
        q = x
    return _Restarted(value, x, residual, best_residual, iterations, False)


def _next_level(m: SymMatrix, x: np.ndarray, cfg: LanczosConfig, rng: np.random.Generator) -> Optional[float]:
    """
    Lowest eigenvalue of m on the complement of x, from a random start.

    A single Krylov space holds one direction of a repeated eigenvalue, so a
    second ground-state direction only shows up once x is locked out. When the
    budget runs out the last Ritz value is returned; it bounds the level from
    above.
    """
    if m.dim < 2:
        return None
    locked = x.reshape(-1, 1)
    found = _restarted_lanczos(m, rng.standard_normal(m.dim), cfg, rng, locked)
    if not found.converged:
        logger.debug(f"Second level not converged in {found.iterations} matvecs, "
                     f"Ritz bound {found.value:.15g}")
    return found.value


def lanczos_ground_state(m: SymMatrix, cfg: LanczosConfig) -> EigenPair:
    cfg.validate()
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    q = np.ones(m.dim) + START_NOISE * rng.standard_normal(m.dim)

    found = _restarted_lanczos(m, q, cfg, rng)
    if not found.converged:
        logger.error(f"❌ Lanczos did not converge on {m}: best residual {found.best_residual:.3e}")
        raise NoConvergenceError(found.iterations, float(found.best_residual))

    second = _next_level(m, found.vector, cfg, rng)
    gap = None if second is None else max(second - found.value, 0.0)
    pair = EigenPair(value=found.value, vector=found.vector, method=LANCZOS, residual=found.residual,
                     degenerate=_is_degenerate(gap, found.value), gap=gap, iterations=found.iterations)
    if pair.degenerate:
        logger.warning(f"⚠️ Degenerate ground state (gap {gap:.3e}) for {m}")
    return pair


# ========== DENSE ORACLE (cyclic Jacobi) ==========

def _round_robin(n: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """n-1 rounds of disjoint (p, q) pairs covering every pair once"""
    size = n + (n % 2)
    players = list(range(size))
    rounds = []
    for _ in range(size - 1):
        pairs = [(players[i], players[size - 1 - i]) for i in range(size // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < n and b < n]
        rounds.append((np.array([a for a, _ in pairs], dtype=np.int64),
                       np.array([b for _, b in pairs], dtype=np.int64)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _rotate_round(a: np.ndarray, v: np.ndarray, p: np.ndarray, q: np.ndarray):
    """Annihilate a[p, q] for every disjoint pair of one round at once"""
    apq = a[p, q]
    active = apq != 0.0
    if not active.any():
        return
    p, q, apq = p[active], q[active], apq[active]

    with np.errstate(over='ignore'):
        theta = (a[q, q] - a[p, p]) / (2.0 * apq)
        t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c

    ap, aq = a[:, p], a[:, q]
    a[:, p] = ap * c - aq * s
    a[:, q] = ap * s + aq * c

    ap, aq = a[p, :], a[q, :]
    a[p, :] = c[:, None] * ap - s[:, None] * aq
    a[q, :] = s[:, None] * ap + c[:, None] * aq

    vp, vq = v[:, p], v[:, q]
    v[:, p] = vp * c - vq * s
    v[:, q] = vp * s + vq * c


def _offdiagonal_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def jacobi_eigh(matrix: np.ndarray, max_sweeps: int = JACOBI_MAX_SWEEPS) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Full eigendecomposition of a dense symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors as columns, sweeps used). Sweeps stop once
    the off-diagonal norm reaches the rounding floor or stops shrinking.
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    frob = float(np.linalg.norm(a))
    floor = n * np.finfo(float).eps * frob
    rounds = _round_robin(n)

    off = _offdiagonal_norm(a)
    sweeps = 0
    while off > floor and sweeps < max_sweeps:
        for p, q in rounds:
            _rotate_round(a, v, p, q)
        sweeps += 1
        previous, off = off, _offdiagonal_norm(a)
        logger.debug(f"Jacobi sweep {sweeps}: off-diagonal norm {off:.3e}")
        if off >= 0.5 * previous and off < 1e-10 * frob:
            break

    return np.diag(a).copy(), v, sweeps


def dense_ground_state(m: SymMatrix, cfg: LanczosConfig) -> EigenPair:
    cfg.validate()
    n = m.dim
    if n > DENSE_ORACLE_LIMIT:
        raise DimensionTooLargeForDenseError(n, DENSE_ORACLE_LIMIT)

    values, vectors, sweeps = jacobi_eigh(m.to_dense())
    order = np.argsort(values, kind='stable')
    value = float(values[order[0]])
    vector = vectors[:, order[0]]
    vector = fix_sign(vector / np.linalg.norm(vector))
    gap = float(values[order[1]] - value)
    residual = residual_norm(m, value, vector)

    if residual > cfg.residual_target(value):
        logger.error(f"❌ Jacobi oracle residual {residual:.3e} above target on {m}")
        raise NoConvergenceError(sweeps, residual)

    pair = EigenPair(value=value, vector=vector, method=DENSE_ORACLE, residual=residual,
                     degenerate=_is_degenerate(gap, value), gap=gap, iterations=sweeps)
    if pair.degenerate:
        logger.warning(f"⚠️ Degenerate ground state (gap {gap:.3e}) for {m}")
    return pair


# ========== ENTRY POINT ==========

def ground_state(m: SymMatrix, cfg: Optional[LanczosConfig] = None, method: str = LANCZOS) -> EigenPair:
    """Algebraically smallest eigenpair of m"""
    cfg = cfg or LanczosConfig()
    if method == AUTO:
        method = DENSE_ORACLE if m.dim <= AUTO_DENSE_LIMIT else LANCZOS
    if method == DENSE_ORACLE:
        pair = dense_ground_state(m, cfg)
    elif method == LANCZOS:
        pair = lanczos_ground_state(m, cfg)
    else:
        raise InvalidSpecError(f"unknown eigensolver method '{method}' (choose from {METHODS})")

    logger.debug(f"{pair.method}: lambda_min={pair.value:.15g} residual={pair.residual:.3e} "
                 f"iterations={pair.iterations}")
    return pair
