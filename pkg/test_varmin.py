import math

import numpy as np
import pytest

from eigen import DENSE_ORACLE, ground_state
from errors import ZeroVectorError
from matcore import EnsembleSpec, Gaussian, SymMatrix, Uniform, generate, row_sums, shift_diagonal
from models import HubbardSpec, IsingSpec, build_hubbard, build_ising
from scaling import normalize_s
from varmin import energy_landscape, evaluate_at, optimize

ISING_TABLE = [
    # length, offset, E_scaling per site
    (4, 0.000620, -10.024938),
    (6, -0.0413, -10.024907),
    (8, -0.0311, -10.024876),
    (10, -0.0187, -10.024845),
    (12, -0.0104, -10.024815),
]


def random_matrices(count: int, dim: int = 60):
    for k in range(count):
        distribution = Gaussian() if k % 2 else Uniform()
        yield generate(EnsembleSpec(dim=dim, distribution=distribution, density=(1.0, 0.5)[k % 2], seed=300 + k))


class TestOptimize:
    def test_uniform_row_sums_are_degenerate(self, pair_matrix):
        result = optimize(pair_matrix)
        assert result.degenerate
        assert result.c is None and result.offset is None
        assert result.energy == pytest.approx(-1.0, abs=1e-15)

    def test_vector_in_span_of_s_and_ones(self, uniform_spec):
        m = generate(uniform_spec)
        result = optimize(m)
        s = normalize_s(row_sums(m))
        v = s + result.c
        assert abs(np.dot(v / np.linalg.norm(v), result.vector)) == pytest.approx(1.0, abs=1e-12)
        assert result.vector.min() >= 0
        assert np.linalg.norm(result.vector) == pytest.approx(1.0)

    def test_relative_error(self, uniform_spec):
        m = generate(uniform_spec)
        exact = ground_state(m).value
        result = optimize(m, exact_energy=exact)
        assert result.exact_energy == exact
        assert result.relative_error == pytest.approx(abs(result.energy - exact) / abs(exact))

    def test_exact_when_ground_state_in_span(self, rng):
        n = 40
        u = rng.random(n) + 0.1
        u /= np.linalg.norm(u)
        a = -6.0 * np.outer(u, u) + 2.0 * (np.eye(n) - np.outer(u, u))
        m = SymMatrix.from_dense((a + a.T) / 2)
        result = optimize(m)
        assert result.energy == pytest.approx(-6.0, abs=1e-10)
        assert abs(np.dot(result.vector, u)) == pytest.approx(1.0, abs=1e-10)

    def test_variational_bound(self):
        for m in random_matrices(10):
            exact = ground_state(m, method=DENSE_ORACLE).value
            assert optimize(m).energy >= exact - 1e-12 * abs(exact)

    def test_shift_covariance(self, gaussian_spec):
        m = generate(gaussian_spec)
        base = optimize(m)
        for d in (-5.0, 7.3):
            shifted = optimize(shift_diagonal(m, d))
            assert shifted.energy == pytest.approx(base.energy + d, abs=1e-9)
            assert abs(np.dot(shifted.vector, base.vector)) >= 1 - 1e-12

    def test_sign_convention(self, uniform_spec):
        m = generate(uniform_spec)
        result = optimize(m)
        assert result.vector[np.argmax(np.abs(result.vector))] > 0


class TestClosedForm:
    def test_evaluate_at_optimum(self, uniform_spec):
        m = generate(uniform_spec)
        result = optimize(m)
        assert evaluate_at(m, result.c) == pytest.approx(result.energy, rel=1e-12)

    def test_grid_never_beats_closed_form(self):
        cs = np.linspace(-1.0, 1.0, 100_001)
        for m in random_matrices(20, dim=50):
            best = optimize(m).energy
            _, energies = energy_landscape(m, cs)
            assert np.nanmin(energies) >= best - 1e-10

    def test_landscape_matches_rayleigh_quotient(self, gaussian_spec):
        m = generate(gaussian_spec)
        cs, energies = energy_landscape(m, [-0.3, 0.0, 0.25])
        for c, e in zip(cs, energies):
            assert e == pytest.approx(evaluate_at(m, c), rel=1e-12)

    def test_infinite_offset_is_all_ones(self, pair_matrix):
        assert evaluate_at(pair_matrix, math.inf) == pytest.approx(-1.0)

    def test_vanishing_trial_vector(self, pair_matrix):
        c = -normalize_s(row_sums(pair_matrix))[0]
        with pytest.raises(ZeroVectorError):
            evaluate_at(pair_matrix, c)
        _, energies = energy_landscape(pair_matrix, [c, 0.0])
        assert math.isnan(energies[0]) and not math.isnan(energies[1])


class TestModelTable:
    @pytest.mark.parametrize('length,offset,energy', ISING_TABLE)
    def test_ising(self, length, offset, energy):
        m = build_ising(IsingSpec(length=length, g=10.0))
        result = optimize(m, sites=length)
        assert result.energy_per_site == pytest.approx(energy, abs=1e-5)
        if length == 4:
            assert result.offset == pytest.approx(offset, abs=1e-4)
        else:
            assert result.offset == pytest.approx(offset, rel=0.1)

    def test_ising_six_sites_at_table_offset(self):
        m = build_ising(IsingSpec(length=6, g=10.0))
        # the tabulated offset -0.0413 is the coefficient of 1 against -s
        assert evaluate_at(m, 0.0413) / 6 == pytest.approx(-10.024907, abs=1e-5)

    @pytest.mark.slow
    def test_ising_fourteen_sites(self):
        m = build_ising(IsingSpec(length=14, g=10.0))
        result = optimize(m, sites=14)
        assert result.energy_per_site == pytest.approx(-10.024785, abs=1e-5)
        assert result.offset == pytest.approx(-0.00556, rel=0.1)

    @pytest.mark.parametrize('u,offset,energy,exact', [
        (0.0, 0.00954, -1.41202, -1.41421),
        (1.0, 0.04996, -1.175869, -1.18082),
    ])
    def test_hubbard(self, u, offset, energy, exact):
        m = build_hubbard(HubbardSpec(u=u))
        pair = ground_state(m, method=DENSE_ORACLE)
        result = optimize(m, exact_energy=pair.value, sites=4)
        assert result.energy_per_site == pytest.approx(energy, abs=1e-4)
        assert result.exact_per_site == pytest.approx(exact, abs=1e-5)
        assert result.offset == pytest.approx(offset, rel=0.1)
        assert result.energy >= pair.value
