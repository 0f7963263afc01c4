"""
Ion–Rydberg-atom interaction, trap renormalization and Hamiltonian builders.

Everything is SI with ħ explicit: Hamiltonians are returned in joules,
frequencies are angular (rad/s).  The interaction-picture clock ``t`` is the
global protocol time; the optical frequencies never appear.

Sign convention for C4
----------------------
``PhysicalParams.C4`` holds the signed long-range coefficient (the Rb n=90
value is negative, i.e. the polarization potential is attractive).  The
potential and its expansion use the signed value directly,
``V = C4 / (x_a - x)**4``.  The trap-shift formulas are written with the
positive magnitude ``C4_eff = -C4``::

    omega_bar**2 = omega_i**2 - 2*c*C4_eff / (m * d**6)
    offset       = 4*C4_eff / (m * omega_bar**2 * d**5)

with ``c`` the second-order expansion coefficient (4 as published, 10 for
the true Taylor series).  This is the curvature and force of the expanded
attractive potential, so both give a downward frequency shift and an offset
toward the atom.
"""

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
import scipy.constants as sc

from . import hilbert as hs
from .errors import ExpansionInvalidError, PhysicsError, SingularSeparationError, TrapDestabilizedError

HBAR = sc.hbar
AMU = sc.atomic_mass
HARTREE = sc.physical_constants["Hartree energy"][0]
BOHR = sc.physical_constants["Bohr radius"][0]
TWO_PI = 2.0 * math.pi

EXPANSION_COEFFS = {"paper": 4.0, "taylor": 10.0}
# prefactors (linear, quadratic) multiplying U1_0 (a + a†) and U2_0 (a + a†)^2-type terms
LADDER_NORMALIZATIONS = {"position": (0.5, 0.5), "printed": (1.0 / math.sqrt(2.0), 1.0)}
BETA_MAX = 0.2
LAMB_DICKE_MAX = 0.5


def mhz(f):
    """Cyclic frequency in MHz -> angular frequency in rad/s."""
    return TWO_PI * f * 1e6


def ghz(f):
    return TWO_PI * f * 1e9


def to_mhz(w):
    """Angular frequency in rad/s -> cyclic MHz."""
    return w / TWO_PI / 1e6


def um(x):
    return x * 1e-6


def convert_C4(value_au: float, scale: float = 1.0) -> float:
    """C4 in atomic units (E_h a0^4) times an enhancement ``scale`` -> J m^4."""
    return value_au * scale * HARTREE * BOHR**4


C4_RB90_AU = -160.0
C4_RB90_SCALE = 5.07e10


@dataclass(frozen=True)
class PhysicalParams:
    """Physical constants and laser parameters, SI units.

    Defaults are the 87Rb(n=90) + 9Be+ working point: tweezer 2.57 um from the
    ion, trap 2pi x 11.2 MHz, eta = 0.1, ion Rabi 2pi x 1 MHz, atom Rabi
    2pi x 1 GHz, two-photon detuning resonant with the shifted Rydberg line.
    ``delta_r=None`` means resonant, delta_r = V0/hbar.
    """

    m_i: float = 9.0 * AMU
    omega_i: float = mhz(11.2)
    omega_01: float = ghz(1.25)
    C4: float = convert_C4(C4_RB90_AU, C4_RB90_SCALE)
    x_a: float = 2.57e-6
    eta_LD: float = 0.1
    Omega_i: float = mhz(1.0)
    Omega_a: float = ghz(1.0)
    delta_r: Optional[float] = None
    phi: float = 0.0
    N_cutoff: int = 12
    rydberg_lifetime: float = 100e-6
    expansion_order2_coeff: str = "paper"
    ladder_normalization: str = "position"

    def __post_init__(self):
        if not self.m_i > 0:
            raise PhysicsError("ion mass must be positive")
        if not self.omega_i > 0:
            raise PhysicsError("trap frequency must be positive")
        if not self.x_a > 0:
            raise PhysicsError("ion-atom distance must be positive")
        if int(self.N_cutoff) != self.N_cutoff or self.N_cutoff < 2:
            raise PhysicsError(f"N_cutoff must be an integer >= 2, got {self.N_cutoff}")
        if self.expansion_order2_coeff not in EXPANSION_COEFFS:
            raise PhysicsError(
                f"expansion_order2_coeff must be one of {sorted(EXPANSION_COEFFS)}, got {self.expansion_order2_coeff!r}"
            )
        if self.ladder_normalization not in LADDER_NORMALIZATIONS:
            raise PhysicsError(
                f"ladder_normalization must be one of {sorted(LADDER_NORMALIZATIONS)}, got {self.ladder_normalization!r}"
            )
        if self.beta >= BETA_MAX:
            raise ExpansionInvalidError(f"beta = {self.beta:.3g} >= {BETA_MAX}: multipole expansion invalid")
        trap_shift(self)

    @property
    def lambda_i(self) -> float:
        """Ground-state width sqrt(hbar / (m omega))."""
        return math.sqrt(HBAR / (self.m_i * self.omega_i))

    @property
    def beta(self) -> float:
        return 4.0 * math.sqrt(2.0) * self.lambda_i / self.x_a

    @property
    def C4_eff(self) -> float:
        return -self.C4

    @property
    def order2_coeff(self) -> float:
        return EXPANSION_COEFFS[self.expansion_order2_coeff]

    @property
    def V0(self) -> float:
        return self.C4 / self.x_a**4

    @property
    def delta_r_value(self) -> float:
        return self.V0 / HBAR if self.delta_r is None else self.delta_r

    @property
    def delta_a(self) -> float:
        """Atomic detuning from the interaction-shifted Rydberg line."""
        return self.delta_r_value - self.V0 / HBAR

    @property
    def sideband_rabi(self) -> float:
        """eta * Omega_i, the n=1 red-sideband Rabi frequency."""
        return self.eta_LD * self.Omega_i

    def with_(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(
            lambda_i=self.lambda_i,
            beta=self.beta,
            V0=self.V0,
            delta_a=self.delta_a,
        )
        return d


@dataclass(frozen=True)
class TrapShift:
    omega_bar: float
    equilibrium_offset: float
    Delta: float


@dataclass(frozen=True)
class ExpansionTerms:
    """Multipole coefficients of the Rydberg-conditioned potential.

    ``linear`` and ``quadratic`` are the operator prefactors actually used:
    U1 = linear * U1_0 (a e^{-iwt} + h.c.),
    U2 = quadratic * U2_0 (a^2 e^{-2iwt} + h.c. + a a† + a† a).
    """

    V0: float
    U1_0: float
    U2_0: float
    beta: float
    linear: float = 0.5
    quadratic: float = 0.5


def trap_shift(p: PhysicalParams, distance: Optional[float] = None) -> TrapShift:
    """Shifted trap frequency and equilibrium offset with the atom in |r>.

    Raises :class:`TrapDestabilizedError` when the Rydberg-induced curvature
    exceeds the bare trap curvature.
    """
    d = p.x_a if distance is None else distance
    if not d > 0:
        raise PhysicsError("distance must be positive")
    w2 = p.omega_i**2 - 2.0 * p.order2_coeff * p.C4_eff / (p.m_i * d**6)
    if w2 <= 0:
        raise TrapDestabilizedError(
            f"trap destabilized at distance {d:.4g} m (shifted omega^2 = {w2:.4g} rad^2/s^2)"
        )
    omega_bar = math.sqrt(w2)
    offset = 4.0 * p.C4_eff / (p.m_i * w2 * d**5)
    return TrapShift(omega_bar=omega_bar, equilibrium_offset=offset, Delta=p.omega_i - omega_bar)


def full_potential(p: PhysicalParams, ion_displacement, model: str = "exact"):
    """Ion-atom interaction energy (J) at ion displacement ``x`` from the trap centre.

    ``model="exact"`` is C4/(x_a - x)^4; ``model="expanded"`` is the
    second-order multipole expansion with the configured coefficient.
    """
    x = np.asarray(ion_displacement, dtype=float)
    if np.any(x >= p.x_a):
        raise SingularSeparationError("ion displacement reaches the atom position")
    if model == "exact":
        v = p.C4 / (p.x_a - x) ** 4
    elif model == "expanded":
        u = x / p.x_a
        v = p.V0 * (1.0 + 4.0 * u + p.order2_coeff * u**2)
    else:
        raise ValueError(f"unknown potential model {model!r}")
    return v if v.ndim else float(v)


def total_potential(p: PhysicalParams, x, model: str = "exact"):
    """Harmonic trap plus interaction potential along the trap axis."""
    x = np.asarray(x, dtype=float)
    return 0.5 * p.m_i * p.omega_i**2 * x**2 + full_potential(p, x, model)


def expansion_terms(p: PhysicalParams) -> ExpansionTerms:
    beta = p.beta
    if beta >= BETA_MAX:
        raise ExpansionInvalidError(f"beta = {beta:.3g} >= {BETA_MAX}")
    v0 = p.V0
    f1, f2 = LADDER_NORMALIZATIONS[p.ladder_normalization]
    return ExpansionTerms(
        V0=v0,
        U1_0=v0 * beta,
        U2_0=v0 * beta**2 / 8.0 * (p.order2_coeff / 4.0),
        beta=beta,
        linear=f1,
        quadratic=f2,
    )


# --- Hamiltonians (joules) -------------------------------------------------


def H_atom_drive(p: PhysicalParams) -> np.ndarray:
    """(hbar Omega_a / 2)(|r><0| + h.c.) - hbar delta_a |r><r| on the full space."""
    ops = hs.atom_ops()
    h = 0.5 * HBAR * p.Omega_a * (ops["r0"] + ops["0r"]) - HBAR * p.delta_a * ops["rr"]
    return hs.embed(h, "atom", p.N_cutoff)


def phonon_coupling(p: PhysicalParams, t: float, terms: Optional[ExpansionTerms] = None) -> np.ndarray:
    """U1(t) + U2(t) on the phonon factor (interaction picture of the bare trap).

    With ``ladder_normalization="position"`` this is exactly the expanded
    potential evaluated at x = lambda_i (a + a†) / sqrt(2); ``"printed"``
    uses the larger 1/sqrt(2) and 1 prefactors on U1_0 and U2_0.
    """
    terms = terms or expansion_terms(p)
    a = hs.annihilation(p.N_cutoff)
    ad = a.conj().T
    e1 = np.exp(-1j * p.omega_i * t)
    u1 = terms.linear * terms.U1_0 * (a * e1 + ad * np.conj(e1))
    e2 = e1 * e1
    u2 = terms.quadratic * terms.U2_0 * (a @ a * e2 + ad @ ad * np.conj(e2) + a @ ad + ad @ a)
    return u1 + u2


def H_ion_atom_coupling(p: PhysicalParams, t: float, terms: Optional[ExpansionTerms] = None) -> np.ndarray:
    """(U1(t) + U2(t)) ⊗ |r><r| on the full space."""
    ion_phonon = np.kron(np.eye(hs.ION_DIM), phonon_coupling(p, t, terms))
    return hs.atom_conditioned(hs.atom_ops()["rr"], ion_phonon)


def sideband_coupling(p: PhysicalParams, phase: float = None) -> np.ndarray:
    """(hbar eta Omega_i / 2)(a sigma_+ e^{i phase} + h.c.) on ion ⊗ phonon."""
    phase = p.phi if phase is None else phase
    sp = hs.qubit_ops()["sigma_plus"]
    a = hs.annihilation(p.N_cutoff)
    k = 0.5 * HBAR * p.eta_LD * p.Omega_i * np.exp(1j * phase) * np.kron(sp, a)
    return k + k.conj().T


@dataclass
class SidebandHamiltonian:
    """Red-sideband Hamiltonian on ion ⊗ phonon, possibly Δ-detuned.

    ``frame="effective"`` is the time-independent form with an
    (hbar Delta / 2) sigma_z term; ``frame="lab"`` keeps the explicit
    exp(i(phi + Delta t)) phase.  Both give identical populations.
    """

    p: PhysicalParams
    Delta: float = 0.0
    frame: str = "effective"
    warnings: List[str] = field(default_factory=list)

    @property
    def time_dependent(self) -> bool:
        return self.frame == "lab" and self.Delta != 0.0

    def __call__(self, t: float = 0.0) -> np.ndarray:
        if self.frame == "lab":
            return sideband_coupling(self.p, self.p.phi + self.Delta * t)
        sz = hs.qubit_ops()["sigma_z"]
        return sideband_coupling(self.p) + 0.5 * HBAR * self.Delta * np.kron(sz, np.eye(self.p.N_cutoff))


def lamb_dicke_warning(p: PhysicalParams) -> Optional[str]:
    x = p.eta_LD * math.sqrt(p.N_cutoff)
    if x >= LAMB_DICKE_MAX:
        return f"eta*sqrt(N_cutoff) = {x:.3f} >= {LAMB_DICKE_MAX}: Lamb-Dicke expansion not valid at the cutoff"
    return None


def H_red_sideband(p: PhysicalParams, shift: Optional[TrapShift] = None, frame: str = "effective") -> SidebandHamiltonian:
    if frame not in ("effective", "lab"):
        raise ValueError(f"unknown sideband frame {frame!r}")
    h = SidebandHamiltonian(p=p, Delta=0.0 if shift is None else shift.Delta, frame=frame)
    msg = lamb_dicke_warning(p)
    if msg:
        h.warnings.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return h


def effective_sideband_block(Omega_n: float, Delta: float) -> np.ndarray:
    """2x2 Hamiltonian / hbar on {|0_i, n>, |1_i, n-1>}: (Omega_n sigma_x + Delta sigma_z)/2.

    sigma_z is +1 on the ion-excited member, matching the full-space convention.
    """
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([-1.0, 1.0]).astype(complex)
    return 0.5 * (Omega_n * sx + Delta * sz)


def H_interaction_full(p: PhysicalParams, t: float, detuning: Optional[float] = None) -> np.ndarray:
    """Ion-laser coupling before the sideband RWA, on ion ⊗ phonon (joules).

    Carrier plus both first-order sidebands,
    (hbar Omega_i/2) sigma_+ {1 + i eta (a e^{-i w t} + a† e^{i w t})} e^{i(phi - delta_i t)} + h.c.
    with ``delta_i = -omega_i`` (red-sideband resonance) unless given.
    The phase is offset by -pi/2 so the resonant term equals the RWA form exactly.
    """
    delta_i = -p.omega_i if detuning is None else detuning
    sp = hs.qubit_ops()["sigma_plus"]
    n = p.N_cutoff
    a = hs.annihilation(n)
    e = np.exp(-1j * p.omega_i * t)
    motion = np.eye(n) + 1j * p.eta_LD * (a * e + a.conj().T * np.conj(e))
    phase = np.exp(1j * (p.phi - 0.5 * math.pi - delta_i * t))
    k = 0.5 * HBAR * p.Omega_i * phase * np.kron(sp, motion)
    return k + k.conj().T


def displaced_trap_perturbation(p: PhysicalParams, shift: TrapShift) -> np.ndarray:
    """Shifted-and-displaced trap minus the bare trap, on the bare Fock basis (J).

    W = (m/2)(omega_bar^2 - omega_i^2) x^2 - m omega_bar^2 xbar x, constants dropped.
    """
    a = hs.annihilation(p.N_cutoff)
    x = p.lambda_i / math.sqrt(2.0) * (a + a.conj().T)
    return 0.5 * p.m_i * (shift.omega_bar**2 - p.omega_i**2) * (x @ x) - p.m_i * shift.omega_bar**2 * shift.equilibrium_offset * x


def interaction_picture(op: np.ndarray, omega: float, t: float) -> np.ndarray:
    """e^{i w a†a t} op e^{-i w a†a t} for a phonon-factor matrix."""
    n = np.arange(op.shape[0])
    ph = np.exp(1j * omega * t * n)
    return ph[:, None] * op * np.conj(ph)[None, :]
