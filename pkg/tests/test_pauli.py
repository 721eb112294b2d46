"""Phase-exact Pauli algebra checked against dense matrix arithmetic."""

import numpy as np
import pytest

from helpers import PAULI, pauli_dense
from resourcedyn.pauli import (
    PauliString,
    hermitian_phase,
    mult,
    pauli_sign,
    symplectic_parity,
)


def test_label_roundtrip():
    for label in ("I", "X", "Y", "Z", "XIZY", "YYXZ", "IIII"):
        assert PauliString.from_label(label).label == label


def test_single_letters_match_dense():
    for letter, mat in PAULI.items():
        assert np.allclose(PauliString.from_label(letter).dense(), mat)


def test_negative_sign_flips_dense():
    p = PauliString.from_label("XZY", sign=-1)
    assert np.allclose(p.dense(), -pauli_dense("XZY"))
    assert p.sign == -1
    assert p.is_hermitian


def test_product_matches_dense():
    rng = np.random.default_rng(3)
    letters = "IXYZ"
    for _ in range(200):
        la = "".join(rng.choice(list(letters), size=4))
        lb = "".join(rng.choice(list(letters), size=4))
        a = PauliString.from_label(la)
        b = PauliString.from_label(lb)
        assert np.allclose((a * b).dense(), a.dense() @ b.dense(), atol=1e-12)


def test_commutation_matches_dense():
    rng = np.random.default_rng(4)
    letters = "IXYZ"
    for _ in range(100):
        la = "".join(rng.choice(list(letters), size=3))
        lb = "".join(rng.choice(list(letters), size=3))
        a = PauliString.from_label(la)
        b = PauliString.from_label(lb)
        comm = a.dense() @ b.dense() - b.dense() @ a.dense()
        assert a.commutes_with(b) == np.allclose(comm, 0.0)
        assert a.commutes_with(b) == (
            symplectic_parity(a.x, a.z, b.x, b.z) == 0
        )


def test_hermitian_phase_gives_hermitian_with_requested_sign():
    for x in range(4):
        for z in range(4):
            for sign in (+1, -1):
                u = hermitian_phase(x, z, sign)
                p = PauliString(2, x, z, u)
                assert p.is_hermitian
                assert p.sign == sign
                m = p.dense()
                assert np.allclose(m, m.conj().T)


def test_pauli_sign_rejects_non_hermitian():
    with pytest.raises(ValueError):
        pauli_sign(1, 1, 0)


def test_mult_tracks_the_z_past_x_phase():
    # Z X = i Y, so the canonical product must carry phase exponent 2:
    # i^2 X Z = -XZ = iY.
    u, x, z = mult(0, 0, 1, 0, 1, 0)
    assert (u, x, z) == (2, 1, 1)
    zp = PauliString.from_label("Z")
    xp = PauliString.from_label("X")
    assert np.allclose((zp * xp).dense(), 1j * PAULI["Y"])


def test_weight_counts_non_identity_sites():
    assert PauliString.from_label("IXYZ").weight() == 3
    assert PauliString.from_label("IIII").weight() == 0


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        PauliString.from_label("XX") * PauliString.from_label("X")


def test_bad_letter_rejected():
    with pytest.raises(ValueError):
        PauliString.from_label("XQ")


def test_dense_capped():
    with pytest.raises(ValueError):
        PauliString(13, 0, 0, 0).dense()


def test_phase_property_is_power_of_i():
    p = PauliString.from_label("Y")
    assert p.phase == 1j
    assert np.allclose(p.dense(), 1j * pauli_dense("X") @ pauli_dense("Z"))
