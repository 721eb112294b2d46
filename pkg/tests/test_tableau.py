"""Stabilizer tableau backend validated against the dense statevector."""

import numpy as np
import pytest

from resourcedyn.ensembles import (
    cnot_gate,
    enumerate_c2,
    filter_matchgate,
    hadamard_left_gate,
    swap_gate,
)
from resourcedyn.monotones import (
    covariance_from_density,
    relative_entropy_of_coherence,
)
from resourcedyn.pauli import PauliString, hermitian_phase
from resourcedyn.statevec import (
    QuditState,
    apply_two_site_gate,
    partial_trace,
    von_neumann_entropy,
)
from resourcedyn.tableau import Tableau


def all_hermitian_paulis(L):
    out = []
    for x in range(1 << L):
        for z in range(1 << L):
            out.append(PauliString(L, x, z, hermitian_phase(x, z)))
    return out


def same_state(tab_a, tab_b):
    """Stabilizer states coincide iff every Pauli expectation matches."""
    for p in all_hermitian_paulis(tab_a.L):
        if tab_a.pauli_expectation(p) != tab_b.pauli_expectation(p):
            return False
    return True


def evolve_both(L, placements):
    """Run the same Clifford circuit on a tableau and a dense state."""
    tab = Tableau.all_zero(L)
    state = QuditState.all_zero(2, L)
    for gate, site in placements:
        tab.apply_clifford(gate.image_bits, site)
        apply_two_site_gate(state, gate.unitary(), site)
    return tab, state


def random_placements(L, depth, rng, pool):
    out = []
    for layer in range(depth):
        start = 1 if layer % 2 == 0 else 2
        for site in range(start, L, 2):
            out.append((pool[int(rng.integers(len(pool)))], site))
    return out


def dense_pauli_expectation(state, pauli):
    return float(
        np.real(state.amps.conj() @ (pauli.dense() @ state.amps))
    )


class TestBasics:
    def test_all_zero_ranks_entropy_coherence(self):
        tab = Tableau.all_zero(8)
        for first, size in ((1, 3), (2, 5), (6, 3)):
            assert tab.subsystem_ranks((first, size)) == (size, size)
            assert tab.entanglement_entropy((first, size)) == 0.0
            assert tab.coherence((first, size)) == 0.0

    def test_hadamard_turns_z_into_x(self):
        tab = Tableau.all_zero(2)
        tab.apply_clifford(hadamard_left_gate().image_bits, 1)
        assert tab.pauli_expectation(PauliString.from_label("XI")) == 1.0
        assert tab.pauli_expectation(PauliString.from_label("ZI")) == 0.0
        assert tab.coherence((1, 1)) == 1.0

    def test_bell_pair_stabilizers(self):
        tab = Tableau.all_zero(2)
        tab.apply_clifford(hadamard_left_gate().image_bits, 1)
        tab.apply_clifford(cnot_gate().image_bits, 1)
        assert tab.pauli_expectation(PauliString.from_label("XX")) == 1.0
        assert tab.pauli_expectation(PauliString.from_label("ZZ")) == 1.0
        assert tab.pauli_expectation(PauliString.from_label("YY")) == -1.0
        assert tab.pauli_expectation(PauliString.from_label("XI")) == 0.0
        assert tab.subsystem_ranks((1, 1)) == (0, 0)
        assert tab.entanglement_entropy((1, 1)) == 1.0

    def test_plus_zero_coherence_matches_dense(self):
        tab = Tableau.all_zero(2)
        tab.apply_clifford(hadamard_left_gate().image_bits, 1)
        state = QuditState.all_zero(2, 2)
        apply_two_site_gate(state, hadamard_left_gate().unitary(), 1)
        dense = relative_entropy_of_coherence(partial_trace(state, (1, 2)))
        assert abs(tab.coherence((1, 2)) - 1.0) < 1e-12
        assert abs(dense - 1.0) < 1e-9

    def test_gate_then_inverse_restores_state(self):
        rng = np.random.default_rng(21)
        pool = enumerate_c2()
        tab, _ = evolve_both(4, random_placements(4, 4, rng, pool))
        reference = tab.copy()
        for _ in range(20):
            gate = pool[int(rng.integers(len(pool)))]
            site = int(rng.integers(1, 4))
            tab.apply_clifford(gate.image_bits, site)
            tab.apply_clifford(gate.inverse().image_bits, site)
        assert same_state(tab, reference)

    def test_swap_then_swap_is_identity(self):
        tab = Tableau.all_zero(3)
        reference = tab.copy()
        tab.apply_clifford(swap_gate().image_bits, 2)
        tab.apply_clifford(swap_gate().image_bits, 2)
        assert same_state(tab, reference)


class TestDenseAgreement:
    def test_entropy_and_coherence_track_dense_every_layer(self):
        rng = np.random.default_rng(22)
        pool = enumerate_c2()
        L, depth = 12, 24
        tab = Tableau.all_zero(L)
        state = QuditState.all_zero(2, L)
        windows = ((1, 4), (4, 6), (9, 4), (1, 2))
        for layer in range(depth):
            start = 1 if layer % 2 == 0 else 2
            for site in range(start, L, 2):
                gate = pool[int(rng.integers(len(pool)))]
                tab.apply_clifford(gate.image_bits, site)
                apply_two_site_gate(state, gate.unitary(), site)
            for window in windows:
                rho = partial_trace(state, window)
                assert (
                    abs(tab.entanglement_entropy(window) - von_neumann_entropy(rho))
                    < 1e-9
                )
                assert (
                    abs(tab.coherence(window) - relative_entropy_of_coherence(rho))
                    < 1e-9
                )

    def test_twenty_qubit_ranks_match_dense_entropy(self):
        rng = np.random.default_rng(23)
        pool = enumerate_c2()
        L = 20
        tab, state = evolve_both(
            L, random_placements(L, 8, rng, pool)
        )
        for window in ((1, 5), (8, 6), (14, 7)):
            rank_full, rank_diag = tab.subsystem_ranks(window)
            assert 0 <= rank_diag <= rank_full <= window[1]
            dense = von_neumann_entropy(partial_trace(state, window))
            assert abs((window[1] - rank_full) - dense) < 1e-9

    def test_pauli_expectations_match_dense(self):
        rng = np.random.default_rng(24)
        pool = enumerate_c2()
        L = 10
        tab, state = evolve_both(L, random_placements(L, 8, rng, pool))
        for _ in range(100):
            x = int(rng.integers(1 << L))
            z = int(rng.integers(1 << L))
            p = PauliString(L, x, z, hermitian_phase(x, z))
            got = tab.pauli_expectation(p)
            assert got in (-1.0, 0.0, 1.0)
            assert abs(got - dense_pauli_expectation(state, p)) < 1e-9

    def test_coherence_is_integer_valued(self):
        rng = np.random.default_rng(25)
        pool = enumerate_c2()
        tab, _ = evolve_both(9, random_placements(9, 10, rng, pool))
        for window in ((1, 3), (2, 5), (5, 4)):
            value = tab.coherence(window)
            assert value == round(value)


class TestCovariance:
    def test_vacuum_blocks(self):
        tab = Tableau.all_zero(6)
        gamma = tab.covariance_matrix((2, 3))
        block = np.array([[0.0, 1.0], [-1.0, 0.0]])
        expected = np.kron(np.eye(3), block)
        assert np.array_equal(gamma, expected)

    def test_maximally_mixed_window_is_zero(self):
        # Bell pairs on (1,3) and (2,4): sites 2 and 3 are each half of a
        # different pair, so their joint state is I/4.
        tab = Tableau.all_zero(4)
        tab.apply_clifford(hadamard_left_gate().image_bits, 1)
        tab.apply_clifford(cnot_gate().image_bits, 1)
        tab.apply_clifford(hadamard_left_gate().image_bits, 3)
        tab.apply_clifford(cnot_gate().image_bits, 3)
        tab.apply_clifford(swap_gate().image_bits, 2)
        assert tab.entanglement_entropy((2, 2)) == 2.0
        assert np.array_equal(tab.covariance_matrix((2, 2)), np.zeros((4, 4)))

    def test_matchgate_circuit_matches_dense(self):
        rng = np.random.default_rng(26)
        pool = filter_matchgate(enumerate_c2())
        L = 12
        tab = Tableau.all_zero(L)
        state = QuditState.all_zero(2, L)
        window = (5, 4)
        for layer in range(16):
            start = 1 if layer % 2 == 0 else 2
            for site in range(start, L, 2):
                gate = pool[int(rng.integers(len(pool)))]
                tab.apply_clifford(gate.image_bits, site)
                apply_two_site_gate(state, gate.unitary(), site)
            gamma = tab.covariance_matrix(window)
            dense = covariance_from_density(partial_trace(state, window))
            assert np.abs(gamma - dense).max() < 1e-9
            assert set(np.unique(gamma)).issubset({-1.0, 0.0, 1.0})

    def test_antisymmetric_and_contractive_on_clifford_states(self):
        rng = np.random.default_rng(27)
        pool = enumerate_c2()
        for trial in range(5):
            tab, _ = evolve_both(10, random_placements(10, 6, rng, pool))
            gamma = tab.covariance_matrix((3, 4))
            assert np.array_equal(gamma, -gamma.T)
            w = np.linalg.eigvalsh(gamma.T @ gamma)
            assert w.min() > -1e-12
            assert w.max() < 1.0 + 1e-12


class TestSerialization:
    def test_dump_roundtrip_preserves_state(self):
        rng = np.random.default_rng(28)
        pool = enumerate_c2()
        tab, _ = evolve_both(5, random_placements(5, 6, rng, pool))
        clone = Tableau.from_debug_dump(tab.debug_dump())
        assert same_state(tab, clone)

    def test_dump_roundtrip_multiword(self):
        rng = np.random.default_rng(29)
        pool = enumerate_c2()
        L = 70
        tab = Tableau.all_zero(L)
        for _ in range(60):
            gate = pool[int(rng.integers(len(pool)))]
            tab.apply_clifford(gate.image_bits, int(rng.integers(1, L)))
        dump = tab.debug_dump()
        assert dump.splitlines()[0] == f"resourcedyn-tableau v1 L={L}"
        assert Tableau.from_debug_dump(dump).debug_dump() == dump

    def test_dump_header_is_checked(self):
        tab = Tableau.all_zero(2)
        dump = tab.debug_dump()
        with pytest.raises(ValueError):
            Tableau.from_debug_dump(dump.replace("v1", "v9"))
        with pytest.raises(ValueError):
            Tableau.from_debug_dump("\n".join(dump.splitlines()[:-1]))


class TestValidation:
    def test_window_bounds(self):
        tab = Tableau.all_zero(5)
        for window in ((0, 2), (1, 0), (5, 2)):
            with pytest.raises(ValueError):
                tab.subsystem_ranks(window)
            with pytest.raises(ValueError):
                tab.covariance_matrix(window)

    def test_gate_site_bounds(self):
        tab = Tableau.all_zero(3)
        for site in (0, 3):
            with pytest.raises(ValueError):
                tab.apply_clifford(cnot_gate().image_bits, site)

    def test_expectation_length_and_hermiticity(self):
        tab = Tableau.all_zero(3)
        with pytest.raises(ValueError):
            tab.pauli_expectation(PauliString.from_label("XX"))
        with pytest.raises(ValueError):
            tab.pauli_expectation(PauliString(3, 1, 1, 0))

    def test_l_must_be_positive(self):
        with pytest.raises(ValueError):
            Tableau(0)
