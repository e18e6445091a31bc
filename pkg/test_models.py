import numpy as np
import pytest

from eigen import DENSE_ORACLE, LANCZOS, ground_state
from errors import InvalidSpecError, LengthOutOfRangeError, UnsupportedFillingError
from models import (
    HubbardSpec,
    IsingSpec,
    basis_labels,
    build_hubbard,
    build_ising,
    build_model,
    hubbard_labels,
    ising_labels,
    species_configs,
)

ISING_EXACT = {4: -10.0250935, 6: -10.025015, 8: -10.025016, 10: -10.025016, 12: -10.025016, 14: -10.025016}


class TestHubbard:
    def test_dimension(self):
        m = build_hubbard(HubbardSpec(u=1.0))
        assert m.dim == 36
        assert HubbardSpec().dim == 36

    def test_lexicographic_basis(self):
        assert species_configs(4, 2) == [0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]
        labels = hubbard_labels(HubbardSpec())
        assert labels[0] == '0011|0011'
        assert labels[1] == '0011|0101'
        assert labels[-1] == '1100|1100'

    def test_double_occupancy_diagonal(self):
        u = 2.5
        m = build_hubbard(HubbardSpec(u=u))
        labels = hubbard_labels(HubbardSpec(u=u))
        assert m.element(labels.index('0011|0011'), labels.index('0011|0011')) == 2 * u
        assert m.element(labels.index('0011|0101'), labels.index('0011|0101')) == u
        assert m.element(labels.index('0011|1100'), labels.index('0011|1100')) == 0.0

    def test_off_diagonal_all_minus_t(self):
        m = build_hubbard(HubbardSpec(t=1.0, u=1.0))
        off = m.offdiagonal_values()
        assert off.size > 0
        assert np.all(off == -1.0)
        assert m.offdiag_nonpositive()
        assert m.is_connected()

    def test_hops_keep_particle_numbers(self):
        spec = HubbardSpec(u=1.0)
        m = build_hubbard(spec)
        labels = hubbard_labels(spec)
        rows, cols, _ = m.lower_coordinates()
        for i, j in zip(rows.tolist(), cols.tolist()):
            if i == j:
                continue
            up_i, down_i = (int(x, 2) for x in labels[i].split('|'))
            up_j, down_j = (int(x, 2) for x in labels[j].split('|'))
            assert bin(up_i).count('1') == bin(up_j).count('1') == 2
            assert bin(down_i).count('1') == bin(down_j).count('1') == 2
            moved = bin(up_i ^ up_j).count('1') + bin(down_i ^ down_j).count('1')
            assert moved == 2
            assert up_i == up_j or down_i == down_j

    def test_u_enters_diagonal_only(self):
        a = 0.7
        diff = build_hubbard(HubbardSpec(u=a)).to_dense() - build_hubbard(HubbardSpec(u=0.0)).to_dense()
        assert np.all(diff[~np.eye(36, dtype=bool)] == 0.0)
        assert set(np.round(np.diag(diff) / a, 12).tolist()) <= {0.0, 1.0, 2.0}

    @pytest.mark.parametrize('u,exact', [(0.0, -1.41421), (1.0, -1.18082)])
    def test_ground_energy_per_site(self, u, exact):
        pair = ground_state(build_hubbard(HubbardSpec(u=u)), method=DENSE_ORACLE)
        assert pair.value / 4 == pytest.approx(exact, abs=1e-5)
        assert pair.vector.min() >= -1e-12

    def test_free_fermion_energy(self):
        pair = ground_state(build_hubbard(HubbardSpec(u=0.0)), method=DENSE_ORACLE)
        assert pair.value == pytest.approx(-4 * np.sqrt(2), abs=1e-10)

    def test_invalid_filling(self):
        with pytest.raises(UnsupportedFillingError):
            build_hubbard(HubbardSpec(n_up=5))
        with pytest.raises(UnsupportedFillingError):
            build_hubbard(HubbardSpec(sites=14, n_up=7, n_down=7))
        with pytest.raises(InvalidSpecError):
            build_hubbard(HubbardSpec(sites=2, n_up=1, n_down=1))
        with pytest.raises(InvalidSpecError):
            build_hubbard(HubbardSpec(t=-1.0))


class TestIsing:
    def test_dimension_and_storage(self):
        assert build_ising(IsingSpec(length=4)).dim == 16
        assert not build_ising(IsingSpec(length=8)).is_sparse
        assert build_ising(IsingSpec(length=10)).is_sparse

    def test_aligned_states(self):
        m = build_ising(IsingSpec(length=4, g=10.0))
        assert m.element(0b1111, 0b1111) == -4.0
        assert m.element(0, 0) == -4.0
        assert m.element(0b0101, 0b0101) == 4.0

    @pytest.mark.parametrize('length', [3, 4, 6])
    def test_rows_have_length_flips(self, length):
        g = 10.0
        a = build_ising(IsingSpec(length=length, g=g)).to_dense()
        off = a - np.diag(np.diag(a))
        assert np.all(np.count_nonzero(off, axis=1) == length)
        assert np.all(off[off != 0] == -g)

    @pytest.mark.parametrize('length', [3, 4, 5, 6, 7, 8])
    def test_global_flip_symmetry(self, length):
        diag = build_ising(IsingSpec(length=length)).diagonal()
        flipped = np.arange(2 ** length) ^ (2 ** length - 1)
        assert np.array_equal(diag, diag[flipped])
        assert set(diag.tolist()) <= set(range(-length, length + 1, 4))

    def test_small_chain_matches_numpy(self):
        m = build_ising(IsingSpec(length=3, g=1.0))
        assert m.dim == 8
        pair = ground_state(m, method=DENSE_ORACLE)
        assert pair.value == pytest.approx(np.linalg.eigvalsh(m.to_dense())[0], abs=1e-12)

    @pytest.mark.parametrize('length', [4, 6, 8, 10, 12])
    def test_ground_energy_per_site(self, length):
        m = build_ising(IsingSpec(length=length, g=10.0))
        pair = ground_state(m, method=LANCZOS if length >= 10 else DENSE_ORACLE)
        assert pair.value / length == pytest.approx(ISING_EXACT[length], abs=1e-5)
        assert pair.vector.min() >= -1e-12

    def test_four_site_energy_tight(self):
        pair = ground_state(build_ising(IsingSpec(length=4, g=10.0)), method=DENSE_ORACLE)
        assert pair.value / 4 == pytest.approx(-10.0250935, abs=1e-6)

    @pytest.mark.slow
    def test_fourteen_sites(self):
        m = build_ising(IsingSpec(length=14, g=10.0))
        assert m.dim == 16384 and m.is_sparse
        pair = ground_state(m, method=LANCZOS)
        assert pair.value / 14 == pytest.approx(-10.025016, abs=1e-5)

    @pytest.mark.parametrize('length', [2, 15])
    def test_length_out_of_range(self, length):
        with pytest.raises(LengthOutOfRangeError):
            build_ising(IsingSpec(length=length))

    def test_field_must_be_positive(self):
        with pytest.raises(InvalidSpecError):
            build_ising(IsingSpec(length=4, g=0.0))

    def test_labels(self):
        labels = ising_labels(IsingSpec(length=3))
        assert labels[1] == '100'
        assert labels[6] == '011'


def test_dispatch():
    assert build_model(IsingSpec(length=3)).dim == 8
    assert build_model(HubbardSpec()).dim == 36
    assert len(basis_labels(IsingSpec(length=5))) == 32
    assert IsingSpec(length=6).per_site == 6 and HubbardSpec().per_site == 4
