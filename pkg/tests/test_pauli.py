import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specfinder.pauli import (
    NON_IDENTITY,
    PauliAxis,
    PauliString,
    basis_state,
    embed,
    expm_i,
    hermitian_eig,
    is_hermitian,
    is_unitary,
    pauli_expm,
    single,
    spectral_norm,
)

from conftest import random_hermitian

X, Y, Z = PauliAxis.X, PauliAxis.Y, PauliAxis.Z


def test_successor_cycle():
    assert X.succ() is Y and Y.succ() is Z and Z.succ() is X
    for a in NON_IDENTITY:
        assert a.succ().succ().succ() is a
    with pytest.raises(ValueError):
        PauliAxis.I.succ()


def test_axis_parse():
    assert PauliAxis.parse("x") is X
    assert PauliAxis.parse("Z") is Z
    assert PauliAxis.parse("1") is PauliAxis.I
    with pytest.raises(ValueError):
        PauliAxis.parse("w")


def test_embed_examples():
    assert np.array_equal(embed(PauliString.from_terms(1, [(0, "x")])), [[0, 1], [1, 0]])
    zz = embed(PauliString.from_terms(2, [(0, "z"), (1, "z")]))
    assert np.array_equal(zz, np.diag([1, -1, -1, 1]))


def test_one_axis_per_qubit():
    with pytest.raises(ValueError):
        PauliString.from_terms(1, [(0, "x"), (0, "y")])
    with pytest.raises(ValueError):
        PauliString.from_terms(2, [(2, "x")])


def test_qubit_zero_is_leftmost_factor():
    x0 = single(2, 0, "x")
    assert np.array_equal(x0, np.kron(X.matrix, np.eye(2)))


def test_string_parse_roundtrip():
    p = PauliString.parse("X0.Z2", 3)
    assert str(p) == "X0.Z2"
    assert p.support == (0, 2)
    assert PauliString.parse("I", 3) == PauliString.identity(3)


def test_product_table():
    for a in NON_IDENTITY:
        for b in NON_IDENTITY:
            prod = a.matrix @ b.matrix
            if a is b:
                assert np.array_equal(prod, np.eye(2))
                continue
            c = next(g for g in NON_IDENTITY if g not in (a, b))
            sign = 1 if b is a.succ() else -1
            assert np.array_equal(prod, sign * 1j * c.matrix)


@given(st.lists(st.sampled_from("IXYZ"), min_size=3, max_size=3), st.lists(st.sampled_from("IXYZ"), min_size=3, max_size=3))
def test_commutation_matches_dense(a, b):
    p = PauliString.from_mapping(3, {q: s for q, s in enumerate(a) if s != "I"})
    q = PauliString.from_mapping(3, {i: s for i, s in enumerate(b) if s != "I"})
    pa, qa = embed(p), embed(q)
    commute = np.allclose(pa @ qa, qa @ pa)
    anti = np.allclose(pa @ qa, -qa @ pa)
    assert commute != anti
    assert p.commutes_with(q) == commute


def test_eig_examples():
    w, _ = hermitian_eig(np.diag([3.0, -1.0]))
    assert np.allclose(w, [-1, 3])
    w, _ = hermitian_eig(X.matrix)
    assert np.allclose(w, [-1, 1])
    h = single(2, 0, "z") + single(2, 1, "z") + single(2, 0, "x") @ single(2, 1, "x")
    w, _ = hermitian_eig(h)
    assert np.max(np.abs(w - [-math.sqrt(5), -1, 1, math.sqrt(5)])) < 1e-9


@pytest.mark.parametrize("dim,seed", [(2, 0), (5, 1), (16, 2), (33, 3), (64, 4)])
def test_eig_roundtrip(dim, seed):
    a = random_hermitian(dim, seed)
    w, v = hermitian_eig(a)
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm((v * w) @ v.conj().T - a) < 1e-9
    assert np.linalg.norm(v.conj().T @ v - np.eye(dim)) < 1e-10
    # independent route
    assert np.max(np.abs(w - np.linalg.eigvalsh(a))) < 1e-9


def test_eig_degenerate():
    a = np.kron(np.eye(4), Z.matrix)
    w, v = hermitian_eig(a)
    assert np.allclose(w, [-1] * 4 + [1] * 4)
    assert np.linalg.norm((v * w) @ v.conj().T - a) < 1e-12


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValueError):
        hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def test_expm_examples():
    assert np.allclose(expm_i(np.zeros((4, 4)), 1.3), np.eye(4))
    u = expm_i(Z.matrix, math.pi / 2)
    assert np.allclose(u, np.diag([np.exp(-1j * math.pi / 2), np.exp(1j * math.pi / 2)]), atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(-3, 3))
def test_expm_group_property(seed, t):
    a = random_hermitian(4, seed)
    u = expm_i(a, t)
    assert is_unitary(u)
    assert np.linalg.norm(u @ expm_i(a, -t) - np.eye(4)) < 1e-10


def test_expm_against_taylor():
    a = random_hermitian(8, 11)
    t = 0.9 / np.linalg.norm(a, 2)
    m = -1j * a * t
    series, term = np.eye(8, dtype=complex), np.eye(8, dtype=complex)
    for k in range(1, 21):
        term = term @ m / k
        series = series + term
    assert np.linalg.norm(expm_i(a, t) - series) < 1e-8


def test_pauli_expm_matches_dense():
    p = embed(PauliString.parse("X0.Y1", 2))
    assert np.linalg.norm(pauli_expm(p, 0.37) - expm_i(p, 0.37)) < 1e-12


def test_spectral_norm_examples():
    assert abs(spectral_norm(np.eye(3)) - 1) < 1e-12
    assert abs(spectral_norm(np.diag([2.0, -5.0])) - 5) < 1e-12
    assert abs(spectral_norm(np.kron(X.matrix, Z.matrix)) - 1) < 1e-12
    m = np.random.default_rng(5).normal(size=(6, 6))
    assert abs(spectral_norm(m) - np.linalg.norm(m, 2)) < 1e-10


def test_predicates():
    assert is_hermitian(Y.matrix)
    assert not is_hermitian(np.array([[0, 1], [0, 0]]))
    assert is_unitary(Y.matrix)
    assert not is_unitary(2 * np.eye(2))


def test_basis_state():
    psi = basis_state("10")
    assert psi[2] == 1 and np.sum(np.abs(psi)) == 1
