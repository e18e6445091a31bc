"""
VARMIN - one-parameter variational ground state from row sums

Trial vector v(c) = s + c * 1, with s the normalized row-sum vector. E(c) is a
ratio of two quadratics in c, so its minimum over the whole real line (plus
c -> +-inf, where v ~ 1) is found in closed form from the moments

    a = s'Hs   b = 1'Hs   d = 1'H1   p = s's   q = 1's   r = N

Stationary points solve (b r - d q) c^2 + (a r - d p) c + (a q - b p) = 0.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from eigen import fix_sign, rayleigh_quotient
from errors import ZeroVectorError
from matcore import SymMatrix, row_sums
from scaling import normalize_s

logger = logging.getLogger('VariationalSolver')

PARALLEL_TOL = 1e-10
ZERO_VECTOR_TOL = 1e-14
LINEAR_RTOL = 1e-14
CANCELLATION_RTOL = 1e-12


@dataclass
class VariationalResult:
    c: Optional[float]              # None when s is parallel to 1, inf for v ~ 1
    energy: float
    vector: np.ndarray
    exact_energy: Optional[float] = None
    relative_error: Optional[float] = None
    degenerate: bool = False
    sites: int = 1

    @property
    def offset(self) -> Optional[float]:
        """Coefficient of 1 in the ansatz written against -s, i.e. g ~ -s + offset * 1"""
        return None if self.c is None else -self.c

    @property
    def energy_per_site(self) -> float:
        return self.energy / self.sites

    @property
    def exact_per_site(self) -> Optional[float]:
        return None if self.exact_energy is None else self.exact_energy / self.sites


@dataclass(frozen=True)
class _Moments:
    a: float
    b: float
    d: float
    p: float
    q: float
    r: float

    def energy(self, c: float) -> float:
        if math.isinf(c):
            return self.d / self.r
        return (self.a + 2 * self.b * c + self.d * c * c) / (self.p + 2 * self.q * c + self.r * c * c)


def _moments(m: SymMatrix, s: np.ndarray) -> _Moments:
    ones = np.ones(m.dim)
    hs = m.matvec(s)
    h1 = m.matvec(ones)
    return _Moments(a=float(s @ hs), b=float(ones @ hs), d=float(ones @ h1),
                    p=float(s @ s), q=float(s.sum()), r=float(m.dim))


def _stationary_points(mo: _Moments) -> List[float]:
    A = mo.b * mo.r - mo.d * mo.q
    B = mo.a * mo.r - mo.d * mo.p
    C = mo.a * mo.q - mo.b * mo.p

    if abs(A) <= LINEAR_RTOL * max(abs(B), abs(C), 1.0):
        return [-C / B] if B != 0 else []

    disc = B * B - 4 * A * C
    if disc < 0:
        return []
    root = -0.5 * (B + math.copysign(math.sqrt(disc), B))
    points = [root / A]
    if root != 0:
        points.append(C / root)
    return points


def _ansatz(s: np.ndarray, c: float) -> np.ndarray:
    if math.isinf(c):
        return np.ones_like(s)
    return s + c


def _finish(m: SymMatrix, v: np.ndarray, c: Optional[float], degenerate: bool,
            exact_energy: Optional[float], sites: int) -> VariationalResult:
    vector = fix_sign(v / np.linalg.norm(v))
    energy = rayleigh_quotient(m, vector)
    relative = None
    if exact_energy is not None and exact_energy != 0:
        relative = abs(energy - exact_energy) / abs(exact_energy)
    return VariationalResult(c=c, energy=energy, vector=vector, exact_energy=exact_energy,
                             relative_error=relative, degenerate=degenerate, sites=sites)


def optimize(m: SymMatrix, exact_energy: Optional[float] = None, sites: int = 1) -> VariationalResult:
    """Minimize the Rayleigh quotient of s + c * 1 over c, including c -> inf"""
    s = normalize_s(row_sums(m))
    ones = np.ones(m.dim)

    if np.linalg.norm(s - s.mean() * ones) < PARALLEL_TOL:
        logger.warning(f"⚠️ Row sums parallel to the all-ones vector for {m}: c undefined")
        return _finish(m, ones, None, True, exact_energy, sites)

    mo = _moments(m, s)
    candidates = _stationary_points(mo) + [math.inf]
    best = min(candidates, key=mo.energy)

    result = _finish(m, _ansatz(s, best), best, False, exact_energy, sites)
    logger.info(f"🎯 c={best:.6g} E={result.energy:.10g}"
                + (f" (exact {exact_energy:.10g}, rel err {result.relative_error:.3e})"
                   if result.relative_error is not None else ""))
    return result


def evaluate_at(m: SymMatrix, c: float) -> float:
    """Rayleigh quotient of s + c * 1"""
    v = _ansatz(normalize_s(row_sums(m)), c)
    if np.linalg.norm(v) < ZERO_VECTOR_TOL:
        raise ZeroVectorError(f"trial vector vanishes at c={c}")
    return rayleigh_quotient(m, v)


def energy_landscape(m: SymMatrix, cs: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    E(c) on a grid, from the moments (two matvecs for the whole grid).

    Returns (cs, energies). Grid points where the trial vector vanishes to
    rounding get NaN.
    """
    s = normalize_s(row_sums(m))
    mo = _moments(m, s)
    cs = np.asarray(cs, dtype=float)
    numerator = mo.a + 2 * mo.b * cs + mo.d * cs * cs
    denominator = mo.p + 2 * mo.q * cs + mo.r * cs * cs
    energies = np.full(cs.shape, np.nan)
    scale = mo.p + 2 * np.abs(mo.q * cs) + mo.r * cs * cs
    ok = denominator > CANCELLATION_RTOL * scale
    energies[ok] = numerator[ok] / denominator[ok]
    if not ok.all():
        logger.warning(f"⚠️ Trial vector vanishes at {int((~ok).sum())} grid point(s)")
    return cs, energies
