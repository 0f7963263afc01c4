"""
Truncated atom ⊗ ion ⊗ phonon Hilbert space.

The composite basis is ordered atom ⊗ ion ⊗ phonon with

    flat = (atom * 2 + ion) * cutoff + phonon

where atom levels are 0 -> |0>, 1 -> |1>, 2 -> |r>, ion levels are 0, 1 and
phonon numbers run over 0 .. cutoff-1.  States and operators are plain dense
complex numpy arrays; nothing here carries units.
"""

from typing import Dict, Tuple

import numpy as np

from .errors import InvalidDimensionError

ATOM_DIM = 3
ION_DIM = 2
ATOM_LEVELS = {"0": 0, "1": 1, "r": 2}
ATOM_NAMES = {v: k for k, v in ATOM_LEVELS.items()}

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
NORM_TOL = 1e-10


def full_dim(cutoff: int) -> int:
    return ATOM_DIM * ION_DIM * cutoff


def _check_cutoff(cutoff):
    if int(cutoff) != cutoff or cutoff < 2:
        raise InvalidDimensionError(f"phonon cutoff must be an integer >= 2, got {cutoff}")


def flatten(atom: int, ion: int, phonon: int, cutoff: int) -> int:
    _check_cutoff(cutoff)
    if not (0 <= atom < ATOM_DIM and 0 <= ion < ION_DIM and 0 <= phonon < cutoff):
        raise InvalidDimensionError(
            f"basis index (atom={atom}, ion={ion}, phonon={phonon}) out of range for cutoff {cutoff}"
        )
    return (atom * ION_DIM + ion) * cutoff + phonon


def unflatten(index: int, cutoff: int) -> Tuple[int, int, int]:
    _check_cutoff(cutoff)
    if not 0 <= index < full_dim(cutoff):
        raise InvalidDimensionError(f"flat index {index} out of range for cutoff {cutoff}")
    block, phonon = divmod(index, cutoff)
    atom, ion = divmod(block, ION_DIM)
    return atom, ion, phonon


def label(atom: int, ion: int, phonon: int) -> str:
    """Ket label in the ``a,i ph`` form used throughout, e.g. ``r,01``."""
    return f"{ATOM_NAMES[atom]},{ion}{phonon}"


def parse_label(text: str) -> Tuple[int, int, int]:
    """Inverse of :func:`label`; accepts ``"0,01"``, ``"|r,10>"`` etc."""
    s = text.strip().strip("|>⟩ ")
    try:
        a, rest = s.split(",")
        return ATOM_LEVELS[a.strip()], int(rest.strip()[0]), int(rest.strip()[1:])
    except (ValueError, KeyError, IndexError):
        raise ValueError(f"cannot parse basis label {text!r}") from None


def annihilation(cutoff: int) -> np.ndarray:
    """Phonon lowering operator, <n-1|a|n> = sqrt(n), truncated at ``cutoff``."""
    _check_cutoff(cutoff)
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(complex)


def number_op(cutoff: int) -> np.ndarray:
    _check_cutoff(cutoff)
    return np.diag(np.arange(cutoff, dtype=float)).astype(complex)


def qubit_ops() -> Dict[str, np.ndarray]:
    """Ion two-level operators in the (|0>, |1>) basis; sigma_z is +1 on |1>."""
    sp = np.array([[0, 0], [1, 0]], dtype=complex)
    sm = sp.conj().T
    return {
        "sigma_plus": sp,
        "sigma_minus": sm,
        "sigma_z": np.diag([-1.0, 1.0]).astype(complex),
        "sigma_x": sp + sm,
        "identity": np.eye(2, dtype=complex),
    }


def atom_ops() -> Dict[str, np.ndarray]:
    """Atom operators in the (|0>, |1>, |r>) basis."""

    def ketbra(i, j):
        m = np.zeros((ATOM_DIM, ATOM_DIM), dtype=complex)
        m[i, j] = 1.0
        return m

    return {
        "rr": ketbra(2, 2),
        "r0": ketbra(2, 0),
        "0r": ketbra(0, 2),
        "11": ketbra(1, 1),
        "00": ketbra(0, 0),
        "identity": np.eye(ATOM_DIM, dtype=complex),
    }


def embed(op: np.ndarray, subsystem: str, cutoff: int) -> np.ndarray:
    """Kronecker-extend ``op`` acting on one factor to the full space.

    ``subsystem`` is one of ``"atom"``, ``"ion"``, ``"phonon"``, or
    ``"ion_phonon"`` for an operator already on the joint ion ⊗ phonon factor.
    """
    _check_cutoff(cutoff)
    dims = {"atom": ATOM_DIM, "ion": ION_DIM, "phonon": cutoff, "ion_phonon": ION_DIM * cutoff}
    if subsystem not in dims:
        raise InvalidDimensionError(f"unknown subsystem {subsystem!r}")
    op = np.asarray(op, dtype=complex)
    d = dims[subsystem]
    if op.shape != (d, d):
        raise InvalidDimensionError(f"operator shape {op.shape} does not match {subsystem} dimension {d}")
    ia, ii, ip = np.eye(ATOM_DIM), np.eye(ION_DIM), np.eye(cutoff)
    if subsystem == "atom":
        return np.kron(op, np.kron(ii, ip))
    if subsystem == "ion":
        return np.kron(ia, np.kron(op, ip))
    if subsystem == "phonon":
        return np.kron(ia, np.kron(ii, op))
    return np.kron(ia, op)


def atom_conditioned(atom_op: np.ndarray, ion_phonon_op: np.ndarray) -> np.ndarray:
    """``atom_op ⊗ ion_phonon_op`` on the full space."""
    return np.kron(np.asarray(atom_op, dtype=complex), np.asarray(ion_phonon_op, dtype=complex))


def basis_state(atom: int, ion: int, phonon: int, cutoff: int) -> np.ndarray:
    psi = np.zeros(full_dim(cutoff), dtype=complex)
    psi[flatten(atom, ion, phonon, cutoff)] = 1.0
    return psi


def state_from_label(text: str, cutoff: int) -> np.ndarray:
    return basis_state(*parse_label(text), cutoff)


def overlap(psi: np.ndarray, phi: np.ndarray) -> complex:
    """<psi|phi>, conjugating the first argument."""
    psi = np.asarray(psi)
    phi = np.asarray(phi)
    if psi.shape != phi.shape:
        raise InvalidDimensionError(f"state shapes differ: {psi.shape} vs {phi.shape}")
    return complex(np.vdot(psi, phi))


def check_normalized(psi: np.ndarray, tol: float = NORM_TOL) -> float:
    """Return |‖psi‖ - 1| and raise if it exceeds ``tol``."""
    drift = abs(np.linalg.norm(psi) - 1.0)
    if drift > tol:
        raise ValueError(f"state is not normalized (|norm - 1| = {drift:.3e})")
    return drift


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL, relative: bool = False) -> bool:
    a = np.asarray(a)
    err = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if relative:
        scale = np.max(np.abs(a)) if a.size else 0.0
        return err <= tol * max(scale, np.finfo(float).tiny)
    return err < tol


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol


def populations_by_atom(psi: np.ndarray, cutoff: int) -> np.ndarray:
    """Total probability in each atom level (|0>, |1>, |r>)."""
    p = np.abs(np.asarray(psi)) ** 2
    return p.reshape(ATOM_DIM, ION_DIM * cutoff).sum(axis=1)


def top_fock_population(psi: np.ndarray, cutoff: int) -> float:
    p = np.abs(np.asarray(psi)) ** 2
    return float(p.reshape(ATOM_DIM * ION_DIM, cutoff)[:, -1].sum())
