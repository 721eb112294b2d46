"""Dense statevector backend: gates, partial trace, entropy, Haar draws."""

import numpy as np
import pytest
import scipy.linalg

from helpers import SWAP, h_qubit_vec, random_pure_vec
from resourcedyn.statevec import (
    DensityMatrix,
    QuditState,
    apply_two_site_gate,
    haar_random_unitary,
    partial_trace,
    qutrit_magic_state,
    shannon_entropy_bits,
    von_neumann_entropy,
)


def random_state(d, L, rng):
    return QuditState(d, L, random_pure_vec(d**L, rng))


def bell_state():
    amps = np.zeros(4, dtype=complex)
    amps[0] = amps[3] = 1 / np.sqrt(2)
    return QuditState(2, 2, amps)


class TestGateApplication:
    def test_identity_leaves_state_unchanged(self):
        rng = np.random.default_rng(0)
        state = random_state(2, 4, rng)
        before = state.amps.copy()
        for site in range(1, 4):
            apply_two_site_gate(state, np.eye(4), site)
        assert np.allclose(state.amps, before, atol=1e-12)

    def test_swap_exchanges_basis_states(self):
        state = QuditState(2, 2, np.array([0, 1, 0, 0], dtype=complex))
        apply_two_site_gate(state, SWAP, 1)
        assert np.allclose(state.amps, [0, 0, 1, 0], atol=1e-12)

    def test_swap_acts_on_the_named_pair_only(self):
        # |010> with SWAP on sites (2, 3) -> |001>.
        amps = np.zeros(8, dtype=complex)
        amps[0b010] = 1.0
        state = QuditState(2, 3, amps)
        apply_two_site_gate(state, SWAP, 2)
        assert abs(state.amps[0b001] - 1.0) < 1e-12

    def test_gate_then_inverse_restores_state(self):
        rng = np.random.default_rng(1)
        state = random_state(2, 5, rng)
        before = state.amps.copy()
        for _ in range(20):
            u = haar_random_unitary(4, rng)
            site = int(rng.integers(1, 5))
            apply_two_site_gate(state, u, site)
            apply_two_site_gate(state, u.conj().T, site)
        assert np.abs(state.amps - before).max() < 1e-9

    def test_qutrit_gate_paths(self):
        rng = np.random.default_rng(2)
        state = random_state(3, 3, rng)
        before = state.amps.copy()
        u = haar_random_unitary(9, rng)
        apply_two_site_gate(state, u, 2)
        apply_two_site_gate(state, u.conj().T, 2)
        assert np.abs(state.amps - before).max() < 1e-9

    def test_non_unitary_gate_rejected(self):
        state = QuditState.all_zero(2, 2)
        with pytest.raises(ValueError):
            apply_two_site_gate(state, np.ones((4, 4)), 1)

    def test_out_of_range_site_rejected(self):
        state = QuditState.all_zero(2, 3)
        for site in (0, 3, 7):
            with pytest.raises(ValueError):
                apply_two_site_gate(state, np.eye(4), site)

    def test_wrong_gate_shape_rejected(self):
        state = QuditState.all_zero(3, 2)
        with pytest.raises(ValueError):
            apply_two_site_gate(state, np.eye(4), 1)

    def test_norm_preserved_over_long_random_sequence(self):
        rng = np.random.default_rng(5)
        state = random_state(2, 6, rng)
        for _ in range(1000):
            apply_two_site_gate(
                state, haar_random_unitary(4, rng), int(rng.integers(1, 6))
            )
        assert abs(state.norm() - 1.0) < 1e-10


class TestPartialTrace:
    def test_product_state_site_is_pure(self):
        rho = partial_trace(QuditState.all_zero(2, 2), (1, 1))
        assert np.allclose(rho.mat, [[1, 0], [0, 0]], atol=1e-12)
        rho.validate()

    def test_bell_site_is_maximally_mixed(self):
        rho = partial_trace(bell_state(), (1, 1))
        assert np.allclose(rho.mat, np.eye(2) / 2, atol=1e-12)

    def test_zero_region_beside_rotated_cluster_is_vacuum(self):
        zero = np.array([1, 0], dtype=complex)
        rotated = h_qubit_vec()
        state = QuditState.from_site_states(
            2, [zero, zero, rotated, rotated, zero, zero]
        )
        rho = partial_trace(state, (1, 2))
        vac = np.zeros((4, 4))
        vac[0, 0] = 1.0
        assert np.allclose(rho.mat, vac, atol=1e-12)

    def test_full_window_returns_projector(self):
        rng = np.random.default_rng(7)
        state = random_state(2, 3, rng)
        rho = partial_trace(state, (1, 3))
        assert np.allclose(rho.mat, np.outer(state.amps, state.amps.conj()))

    def test_window_validation(self):
        state = QuditState.all_zero(2, 4)
        for window in ((0, 2), (1, 0), (4, 2), (3, 3)):
            with pytest.raises(ValueError):
                partial_trace(state, window)

    def test_complement_spectra_match(self):
        rng = np.random.default_rng(8)
        state = random_state(2, 7, rng)
        wa = np.linalg.eigvalsh(partial_trace(state, (1, 3)).mat)
        wb = np.linalg.eigvalsh(partial_trace(state, (4, 4)).mat)
        wa = np.sort(wa[wa > 1e-12])[::-1]
        wb = np.sort(wb[wb > 1e-12])[::-1]
        assert wa.shape == wb.shape
        assert np.abs(wa - wb).max() < 1e-9

    def test_entropy_invariant_under_complement_gates(self):
        rng = np.random.default_rng(9)
        state = random_state(2, 6, rng)
        before = von_neumann_entropy(partial_trace(state, (1, 2)))
        for _ in range(30):
            apply_two_site_gate(
                state, haar_random_unitary(4, rng), int(rng.integers(3, 6))
            )
        after = von_neumann_entropy(partial_trace(state, (1, 2)))
        assert abs(after - before) < 1e-9


class TestEntropy:
    def test_pure_state_has_zero_entropy(self):
        assert von_neumann_entropy(partial_trace(bell_state(), (1, 2))) < 1e-12

    def test_maximally_mixed_three_sites(self):
        rho = DensityMatrix(2, 3, np.eye(8, dtype=complex) / 8)
        assert abs(von_neumann_entropy(rho) - 3.0) < 1e-12

    def test_flat_rank_two_spectrum(self):
        mat = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
        assert abs(von_neumann_entropy(DensityMatrix(2, 2, mat)) - 1.0) < 1e-12

    def test_shannon_entropy_rejects_negative_probability(self):
        with pytest.raises(ValueError):
            shannon_entropy_bits(np.array([0.5, 0.5, -0.1]))

    def test_entropy_rejects_wild_spectrum(self):
        mat = np.diag([2.0, -1.0]).astype(complex)
        with pytest.raises(ValueError):
            von_neumann_entropy(DensityMatrix(2, 1, mat))


class TestDensityMatrixValidation:
    def test_accepts_valid_matrix(self):
        DensityMatrix(2, 1, np.eye(2, dtype=complex) / 2).validate()

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            DensityMatrix(2, 2, np.eye(2, dtype=complex) / 2).validate()

    def test_rejects_non_hermitian(self):
        mat = np.array([[0.5, 1.0], [0.0, 0.5]], dtype=complex)
        with pytest.raises(ValueError):
            DensityMatrix(2, 1, mat).validate()

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError):
            DensityMatrix(2, 1, np.eye(2, dtype=complex)).validate()

    def test_rejects_negative_eigenvalue(self):
        mat = np.diag([1.5, -0.5]).astype(complex)
        with pytest.raises(ValueError):
            DensityMatrix(2, 1, mat).validate()


class TestHaarDraws:
    def test_unitarity(self):
        rng = np.random.default_rng(10)
        for dim in (2, 3, 4, 9):
            u = haar_random_unitary(dim, rng)
            assert np.abs(u @ u.conj().T - np.eye(dim)).max() < 1e-10

    def test_first_entry_moment(self):
        # For Haar measure on U(4), |U_11|^2 is Beta(1, 3) with mean 1/4.
        rng = np.random.default_rng(11)
        samples = np.array(
            [abs(haar_random_unitary(4, rng)[0, 0]) ** 2 for _ in range(10_000)]
        )
        sigma = samples.std(ddof=1) / np.sqrt(samples.size)
        assert abs(samples.mean() - 0.25) < 3 * sigma

    def test_distinct_seeds_differ(self):
        u1 = haar_random_unitary(4, np.random.default_rng(1))
        u2 = haar_random_unitary(4, np.random.default_rng(2))
        assert np.abs(u1 - u2).max() > 1e-3


class TestConstruction:
    def test_all_zero_has_unit_amplitude_at_origin(self):
        state = QuditState.all_zero(3, 4)
        assert state.amps[0] == 1.0
        assert abs(state.norm() - 1.0) < 1e-12

    def test_only_qubits_and_qutrits(self):
        with pytest.raises(ValueError):
            QuditState.all_zero(5, 2)

    def test_qutrit_cap_enforced(self):
        with pytest.raises(ValueError):
            QuditState.all_zero(3, 15)
        state = QuditState.all_zero(3, 15, allow_large=True)
        assert state.amps.size == 3**15

    def test_from_site_states_orders_sites_most_significant_first(self):
        zero = np.array([1, 0], dtype=complex)
        one = np.array([0, 1], dtype=complex)
        state = QuditState.from_site_states(2, [one, zero])
        assert abs(state.amps[0b10] - 1.0) < 1e-12

    def test_from_site_states_rejects_wrong_dimension(self):
        with pytest.raises(ValueError):
            QuditState.from_site_states(3, [np.array([1.0, 0.0])])

    def test_copy_is_independent(self):
        state = QuditState.all_zero(2, 2)
        dup = state.copy()
        dup.amps[0] = 0.0
        assert state.amps[0] == 1.0


def test_qutrit_magic_state_matches_exponential_oracle():
    shift = np.zeros((3, 3), dtype=complex)
    for j in range(3):
        shift[(j + 1) % 3, j] = 1.0
    ham = shift + shift.conj().T
    expected = scipy.linalg.expm(-1j * (np.pi / 9) * ham) @ np.array(
        [1.0, 0.0, 0.0], dtype=complex
    )
    got = qutrit_magic_state()
    assert abs(np.linalg.norm(got) - 1.0) < 1e-12
    assert np.abs(got - expected).max() < 1e-12
