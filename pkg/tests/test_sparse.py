"""Sparse permutation-phase backend against the dense statevector oracle."""

import numpy as np
import pytest

from resourcedyn.ensembles import PermutationPhaseGate
from resourcedyn.monotones import relative_entropy_of_coherence
from resourcedyn.sparse import SparseState
from resourcedyn.statevec import (
    apply_two_site_gate,
    partial_trace,
    von_neumann_entropy,
)

IDENTITY_PERM = np.arange(4)
SWAP_PERM = np.array([0, 2, 1, 3])
ZERO_PHASES = np.zeros(4)


def random_pp_draw(rng):
    perm = rng.permutation(4)
    phases = rng.uniform(0.0, 2 * np.pi, size=4)
    return perm, np.exp(1j * phases)


class TestConstruction:
    def test_basis_state_is_normalized_single_config(self):
        state = SparseState.basis_state(10, (2, 5))
        assert state.configs.size == 1
        assert abs(state.norm() - 1.0) < 1e-12
        # site 2 -> bit L-2, site 5 -> bit L-5
        assert int(state.configs[0]) == (1 << 8) | (1 << 5)

    def test_basis_state_site_range_checked(self):
        with pytest.raises(ValueError):
            SparseState.basis_state(4, (5,))

    def test_plus_cluster_support_and_dense_form(self):
        state = SparseState.plus_cluster(8, (3, 4))
        assert state.configs.size == 16
        assert abs(state.norm() - 1.0) < 1e-12
        dense = state.to_dense()
        rho = partial_trace(dense, (3, 4))
        assert abs(von_neumann_entropy(rho)) < 1e-10
        assert abs(relative_entropy_of_coherence(rho) - 4.0) < 1e-9

    def test_duplicate_configurations_rejected(self):
        with pytest.raises(ValueError):
            SparseState(3, np.array([1, 1]), np.array([0.7, 0.7]))

    def test_length_bounds(self):
        with pytest.raises(ValueError):
            SparseState(0, np.array([0]), np.array([1.0]))
        with pytest.raises(ValueError):
            SparseState(65, np.array([0]), np.array([1.0]))


class TestGateApplication:
    def test_identity_gate_is_a_no_op(self):
        state = SparseState.plus_cluster(6, (2, 3))
        before_c = state.configs.copy()
        before_a = state.amps.copy()
        state.apply_permutation_phase(IDENTITY_PERM, ZERO_PHASES + 1.0, 3)
        assert np.array_equal(state.configs, before_c)
        assert np.allclose(state.amps, before_a)

    def test_swap_moves_an_excitation(self):
        state = SparseState.basis_state(2, (2,))  # |01>
        state.apply_permutation_phase(SWAP_PERM, np.ones(4), 1)
        assert int(state.configs[0]) == 0b10
        assert abs(state.amps[0] - 1.0) < 1e-12

    def test_support_size_is_conserved(self):
        rng = np.random.default_rng(31)
        state = SparseState.plus_cluster(16, (7, 4))
        for _ in range(500):
            perm, phases = random_pp_draw(rng)
            state.apply_permutation_phase(perm, phases, int(rng.integers(1, 16)))
            assert state.configs.size == 16

    def test_norm_conserved_over_many_gates(self):
        rng = np.random.default_rng(32)
        state = SparseState.plus_cluster(24, (9, 8))
        for _ in range(10_000):
            perm, phases = random_pp_draw(rng)
            state.apply_permutation_phase(perm, phases, int(rng.integers(1, 24)))
        assert abs(state.norm() - 1.0) < 1e-10

    def test_matches_dense_backend_every_layer(self):
        rng = np.random.default_rng(33)
        L = 12
        state = SparseState.plus_cluster(L, (5, 4))
        dense = state.to_dense()
        for layer in range(20):
            start = 1 if layer % 2 == 0 else 2
            for site in range(start, L, 2):
                perm, phases = random_pp_draw(rng)
                state.apply_permutation_phase(perm, phases, site)
                gate = PermutationPhaseGate(perm, phases)
                apply_two_site_gate(dense, gate.unitary(), site)
            assert np.abs(state.to_dense().amps - dense.amps).max() < 1e-10

    def test_validation(self):
        state = SparseState.plus_cluster(4, (1, 2))
        with pytest.raises(ValueError):
            state.apply_permutation_phase(np.array([0, 0, 1, 2]), np.ones(4), 1)
        with pytest.raises(ValueError):
            state.apply_permutation_phase(IDENTITY_PERM, 2.0 * np.ones(4), 1)
        with pytest.raises(ValueError):
            state.apply_permutation_phase(IDENTITY_PERM, np.ones(4), 4)


class TestSubsystemQueries:
    def test_single_configuration_window_is_pure(self):
        state = SparseState.basis_state(6, ())
        rho = state.reduced_density_matrix((2, 3))
        expected = np.zeros((8, 8))
        expected[0, 0] = 1.0
        assert np.allclose(rho.mat, expected, atol=1e-12)
        assert state.subsystem_coherence((2, 3)) == 0.0

    def test_cluster_window_is_pure_with_full_coherence(self):
        state = SparseState.plus_cluster(10, (4, 3))
        rho = state.reduced_density_matrix((4, 3))
        rho.validate()
        assert abs(von_neumann_entropy(rho)) < 1e-10
        assert abs(state.subsystem_coherence((4, 3)) - 3.0) < 1e-9

    def test_reduced_density_matches_dense_partial_trace(self):
        rng = np.random.default_rng(34)
        L = 12
        state = SparseState.plus_cluster(L, (5, 4))
        for layer in range(14):
            start = 1 if layer % 2 == 0 else 2
            for site in range(start, L, 2):
                perm, phases = random_pp_draw(rng)
                state.apply_permutation_phase(perm, phases, site)
        dense = state.to_dense()
        for window in ((1, 3), (4, 5), (9, 4)):
            rho = state.reduced_density_matrix(window)
            ref = partial_trace(dense, window)
            assert np.abs(rho.mat - ref.mat).max() < 1e-10
            got = state.subsystem_coherence(window)
            want = relative_entropy_of_coherence(ref)
            assert abs(got - want) < 1e-9

    def test_coherence_on_wide_chain_without_dense_conversion(self):
        rng = np.random.default_rng(35)
        L = 48
        state = SparseState.plus_cluster(L, (21, 6))
        for layer in range(30):
            start = 1 if layer % 2 == 0 else 2
            for site in range(start, L, 2):
                perm, phases = random_pp_draw(rng)
                state.apply_permutation_phase(perm, phases, site)
        value = state.subsystem_coherence((19, 10))
        assert 0.0 <= value <= 10.0
        assert state.configs.size == 64

    def test_reduced_density_cap(self):
        state = SparseState.plus_cluster(16, (1, 2))
        with pytest.raises(ValueError):
            state.reduced_density_matrix((1, 13))

    def test_window_validation(self):
        state = SparseState.plus_cluster(6, (1, 2))
        for window in ((0, 2), (1, 0), (6, 2)):
            with pytest.raises(ValueError):
                state.subsystem_coherence(window)


def test_copy_is_independent():
    state = SparseState.plus_cluster(5, (2, 2))
    dup = state.copy()
    dup.apply_permutation_phase(SWAP_PERM, np.ones(4), 1)
    assert not np.array_equal(state.configs, dup.configs) or not np.allclose(
        state.amps, dup.amps
    )
