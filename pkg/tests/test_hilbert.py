import cmath

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phonon_gate import hilbert as hs
from phonon_gate.errors import InvalidDimensionError

cutoffs = st.integers(min_value=2, max_value=10)


@given(cutoffs, st.data())
def test_flatten_is_bijection(n, data):
    idx = data.draw(st.integers(0, hs.full_dim(n) - 1))
    a, i, ph = hs.unflatten(idx, n)
    assert hs.flatten(a, i, ph, n) == idx
    assert idx == (a * hs.ION_DIM + i) * n + ph


def test_flatten_covers_space():
    n = 5
    seen = {hs.flatten(a, i, p, n) for a in range(3) for i in range(2) for p in range(n)}
    assert seen == set(range(hs.full_dim(n)))


def test_flatten_rejects_out_of_range():
    with pytest.raises(InvalidDimensionError):
        hs.flatten(3, 0, 0, 4)
    with pytest.raises(InvalidDimensionError):
        hs.flatten(0, 0, 4, 4)
    with pytest.raises(InvalidDimensionError):
        hs.unflatten(hs.full_dim(4), 4)


@pytest.mark.parametrize("text", ["0,01", "1,10", "r,01", "r,00", "1,111"])
def test_label_roundtrip(text):
    assert hs.label(*hs.parse_label(text)) == text


def test_parse_label_accepts_ket_brackets():
    assert hs.parse_label("|r,10>") == (2, 1, 0)
    with pytest.raises(ValueError):
        hs.parse_label("x,01")


@given(cutoffs)
def test_ladder_commutator_identity_below_top(n):
    a = hs.annihilation(n)
    c = a @ a.conj().T - a.conj().T @ a
    assert np.allclose(c[: n - 1, : n - 1], np.eye(n - 1), atol=1e-12)
    # the truncated creation operator annihilates the top Fock state
    assert np.allclose(a.conj().T[:, n - 1], 0)


def test_number_operator():
    n = 7
    a = hs.annihilation(n)
    assert np.allclose(a.conj().T @ a, hs.number_op(n))


def test_qubit_algebra():
    q = hs.qubit_ops()
    comm = q["sigma_plus"] @ q["sigma_minus"] - q["sigma_minus"] @ q["sigma_plus"]
    assert np.allclose(comm, q["sigma_z"])
    assert np.allclose(q["sigma_z"], np.diag([-1, 1]))
    # sigma_plus raises |0> to |1>
    assert np.allclose(q["sigma_plus"] @ np.array([1, 0]), [0, 1])


def test_atom_projectors():
    ops = hs.atom_ops()
    assert np.allclose(ops["rr"] @ ops["rr"], ops["rr"])
    assert np.allclose(ops["r0"].conj().T, ops["0r"])
    assert np.allclose(ops["00"] + ops["11"] + ops["rr"], np.eye(3))


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_disjoint_embeddings_commute(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    B = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    C = rng.normal(size=(2, 2))
    ea, eb, ec = hs.embed(A, "atom", n), hs.embed(B, "phonon", n), hs.embed(C, "ion", n)
    assert np.allclose(ea @ eb, eb @ ea)
    assert np.allclose(ea @ ec, ec @ ea)
    assert np.allclose(eb @ ec, ec @ eb)


def test_embed_rejects_wrong_shape():
    with pytest.raises(InvalidDimensionError):
        hs.embed(np.eye(2), "atom", 4)


def test_atom_conditioned_matches_embedding():
    n = 4
    a = hs.annihilation(n)
    op = np.kron(np.eye(2), a)
    lhs = hs.atom_conditioned(hs.atom_ops()["rr"], op)
    rhs = hs.embed(hs.atom_ops()["rr"], "atom", n) @ hs.embed(op, "ion_phonon", n)
    assert np.allclose(lhs, rhs)


@given(st.floats(0, 2 * np.pi), st.integers(0, 2**32 - 1))
def test_overlap_invariant_under_global_phase(theta, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=12) + 1j * rng.normal(size=12)
    phi = rng.normal(size=12) + 1j * rng.normal(size=12)
    g = cmath.exp(1j * theta)
    assert abs(hs.overlap(g * psi, g * phi)) ** 2 == pytest.approx(abs(hs.overlap(psi, phi)) ** 2, rel=1e-12)


def test_basis_state_and_populations():
    n = 4
    psi = hs.state_from_label("r,01", n)
    assert hs.check_normalized(psi) < 1e-15
    assert psi[hs.flatten(2, 0, 1, n)] == 1
    assert np.allclose(hs.populations_by_atom(psi, n), [0, 0, 1])
    assert hs.top_fock_population(hs.state_from_label("0,03", n), n) == 1


def test_hermitian_and_unitary_predicates():
    q = hs.qubit_ops()
    assert hs.is_hermitian(q["sigma_x"])
    assert not hs.is_hermitian(q["sigma_plus"])
    assert hs.is_unitary(q["sigma_x"])
    assert not hs.is_unitary(2 * q["sigma_x"])
