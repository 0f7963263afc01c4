"""
Time evolution of state vectors under piecewise Hamiltonians.

Time-independent segments are exponentiated exactly (Hermitian
eigendecomposition).  Time-dependent segments use the midpoint rule: on each
step of length dt the Hamiltonian is frozen at the step midpoint and
exponentiated, which is second-order accurate and unitary by construction.
A static Hamiltonian given in a frame rotating with a diagonal generator K
(``Segment.rotating``) is also propagated exactly, by returning to the
non-rotating frame, exponentiating K + H there and rotating back.

Hamiltonians are in joules; ``hbar`` is divided out here.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Union

import numpy as np

from . import hilbert as hs
from .errors import PropagationError
from .physics import HBAR, H_interaction_full, PhysicalParams, expansion_terms, sideband_coupling

HamiltonianSource = Union[np.ndarray, Callable[[float], np.ndarray]]

DEFAULT_STEPS_PER_PERIOD = 50
DEFAULT_NORM_TOL = 1e-9


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t / hbar) for Hermitian ``h`` in joules."""
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t / HBAR)) @ v.conj().T


def frequency_scale(h: np.ndarray) -> float:
    """Largest |eigenvalue| / hbar (rad/s): the fastest phase rotation generated by ``h``."""
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (h + h.conj().T))))) / HBAR


@dataclass
class Segment:
    """One piece of a propagation plan.

    ``hamiltonian`` is a matrix (time-independent) or a callable ``H(t)`` of
    the global clock.  ``max_step`` defaults to 2pi / (steps_per_period *
    scale), where scale is the larger of ``extra_frequency`` and the
    spectral radius of H at the segment start and midpoint.

    ``rotating`` (rad/s, diagonal of K / hbar) marks a static ``hamiltonian``
    as written in the frame rotating with K on the global clock, i.e. the
    true interaction-picture Hamiltonian is e^{iKt} H e^{-iKt}.
    """

    hamiltonian: HamiltonianSource
    duration: float
    max_step: Optional[float] = None
    label: str = ""
    samples: int = 0
    extra_frequency: float = 0.0
    steps_per_period: int = DEFAULT_STEPS_PER_PERIOD
    rotating: Optional[np.ndarray] = None

    @property
    def time_dependent(self) -> bool:
        return callable(self.hamiltonian)

    def resolve_max_step(self, t_start: float) -> float:
        if not self.time_dependent:
            return self.duration if self.max_step is None else self.max_step
        scale = max(
            self.extra_frequency,
            frequency_scale(self.hamiltonian(t_start)),
            frequency_scale(self.hamiltonian(t_start + 0.5 * self.duration)),
        )
        ceiling = 2 * math.pi / (self.steps_per_period * scale) if scale > 0 else self.duration
        if self.max_step is None:
            return min(ceiling, self.duration)
        if self.max_step > ceiling * (1 + 1e-12):
            raise ValueError(
                f"segment {self.label!r}: max_step {self.max_step:.3e} s exceeds 2pi/({self.steps_per_period}*scale) = {ceiling:.3e} s"
            )
        return self.max_step


@dataclass
class PropagationPlan:
    segments: List[Segment]
    tolerance: float = DEFAULT_NORM_TOL
    t0: float = 0.0

    def __post_init__(self):
        for s in self.segments:
            if not s.duration > 0:
                raise ValueError(f"segment {s.label!r}: duration must be positive")
            if s.max_step is not None and not 0 < s.max_step <= s.duration:
                raise ValueError(f"segment {s.label!r}: max_step must lie in (0, duration]")
            if s.samples < 0:
                raise ValueError("samples must be non-negative")
            if s.rotating is not None and s.time_dependent:
                raise ValueError(f"segment {s.label!r}: a rotating-frame segment needs a static Hamiltonian")

    @property
    def total_duration(self) -> float:
        return sum(s.duration for s in self.segments)


@dataclass
class PropagationResult:
    final_state: np.ndarray
    norm_drift: float
    top_fock_population: float
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    segment_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    fraction: np.ndarray = field(default_factory=lambda: np.zeros(0))
    states: Optional[np.ndarray] = None
    steps: int = 0

    @property
    def failed(self) -> bool:
        return not np.isfinite(self.norm_drift)


def evolve(psi0: np.ndarray, plan: PropagationPlan, cutoff: Optional[int] = None) -> PropagationResult:
    """Propagate ``psi0`` through every segment of ``plan`` in order.

    Segments with ``samples > 0`` record the state at ``samples + 1`` uniformly
    spaced instants including both ends (a shared boundary is recorded once).  ``cutoff`` enables top-Fock
    leakage monitoring for full-space states.
    """
    psi = np.array(psi0, dtype=complex)
    drift0 = abs(np.linalg.norm(psi) - 1.0)
    if drift0 > hs.NORM_TOL:
        raise ValueError(f"initial state not normalized (|norm - 1| = {drift0:.3e})")

    def leak(v):
        return hs.top_fock_population(v, cutoff) if cutoff else 0.0

    max_drift = 0.0
    max_top = leak(psi)
    times, seg_idx, frac, states = [], [], [], []
    t = plan.t0
    n_steps_total = 0

    for k, seg in enumerate(plan.segments):
        t_start = t
        step = seg.resolve_max_step(t_start)
        n = max(1, math.ceil(seg.duration / step - 1e-9))
        if seg.samples:
            n = seg.samples * math.ceil(n / seg.samples)
            stride = n // seg.samples
            # the previous sampled segment already recorded this instant
            if not (k > 0 and plan.segments[k - 1].samples):
                times.append(t_start)
                seg_idx.append(k)
                frac.append(0.0)
                states.append(psi.copy())
        dt = seg.duration / n
        if seg.rotating is not None:
            kdiag = np.asarray(seg.rotating, dtype=float)
            u_static = expm_hermitian(np.asarray(seg.hamiltonian) + HBAR * np.diag(kdiag), dt)
            psi_s = np.exp(-1j * kdiag * t_start) * psi
        else:
            u_static = None if seg.time_dependent else expm_hermitian(np.asarray(seg.hamiltonian), dt)
        for j in range(n):
            if seg.rotating is not None:
                psi_s = u_static @ psi_s
                psi = np.exp(1j * kdiag * (t_start + (j + 1) * dt)) * psi_s
            elif u_static is None:
                psi = expm_hermitian(seg.hamiltonian(t_start + (j + 0.5) * dt), dt) @ psi
            else:
                psi = u_static @ psi
            if not np.all(np.isfinite(psi)):
                raise PropagationError(
                    f"non-finite amplitudes in segment {seg.label!r} at step {j}",
                    {"segment": seg.label, "step": j},
                )
            max_drift = max(max_drift, abs(np.linalg.norm(psi) - 1.0))
            max_top = max(max_top, leak(psi))
            if seg.samples and (j + 1) % stride == 0:
                times.append(t_start + (j + 1) * dt)
                seg_idx.append(k)
                frac.append((j + 1) / n)
                states.append(psi.copy())
        n_steps_total += n
        t = t_start + seg.duration

    if max_drift > plan.tolerance:
        raise PropagationError(
            f"norm drift {max_drift:.3e} exceeds tolerance {plan.tolerance:.1e}",
            {"norm_drift": max_drift, "top_fock_population": max_top},
        )
    return PropagationResult(
        final_state=psi,
        norm_drift=max_drift,
        top_fock_population=max_top,
        times=np.array(times),
        segment_index=np.array(seg_idx, dtype=int),
        fraction=np.array(frac),
        states=np.array(states) if states else None,
        steps=n_steps_total,
    )


def propagator(h: HamiltonianSource, duration: float, t0: float = 0.0, max_step: Optional[float] = None,
               steps_per_period: int = DEFAULT_STEPS_PER_PERIOD) -> np.ndarray:
    """Full unitary matrix of one segment (midpoint rule for callables)."""
    seg = Segment(h, duration, max_step=max_step, steps_per_period=steps_per_period)
    if not seg.time_dependent:
        return expm_hermitian(np.asarray(h), duration)
    step = seg.resolve_max_step(t0)
    n = max(1, math.ceil(duration / step - 1e-9))
    dt = duration / n
    u = None
    for j in range(n):
        uj = expm_hermitian(h(t0 + (j + 0.5) * dt), dt)
        u = uj if u is None else uj @ u
    return u


# --- analytic propagators ---------------------------------------------------


def integrated_detuning(p: PhysicalParams, t: float, t0: float = 0.0) -> np.ndarray:
    """Phonon operator  ∫_{t0}^{t0+t} (delta_a - (U1 + U2)/hbar) dt'  in radians.

    The oscillating integrals are done in closed form.
    """
    terms = expansion_terms(p)
    n = p.N_cutoff
    a = hs.annihilation(n)
    ad = a.conj().T
    w = p.omega_i

    def osc(freq):
        # ∫ e^{-i freq t'} dt' over [t0, t0 + t]
        if freq == 0:
            return t
        return (np.exp(-1j * freq * t0) - np.exp(-1j * freq * (t0 + t))) / (1j * freq)

    i1 = osc(w)
    i2 = osc(2 * w)
    u1 = terms.linear * terms.U1_0 * (a * i1 + ad * np.conj(i1))
    u2 = terms.quadratic * terms.U2_0 * (a @ a * i2 + ad @ ad * np.conj(i2) + (a @ ad + ad @ a) * t)
    eta = p.delta_a * t * np.eye(n) - (u1 + u2) / HBAR
    return 0.5 * (eta + eta.conj().T)


@dataclass
class AnalyticAtomUnitary:
    matrix: np.ndarray
    warnings: List[str] = field(default_factory=list)


def analytic_atom_unitary(p: PhysicalParams, t: float, t0: float = 0.0, validity_ratio: float = 2.0) -> AnalyticAtomUnitary:
    """Closed-form atomic-pulse unitary on the full space.

    With eta = ∫(delta_a - U/hbar) as a phonon operator and
    theta = sqrt(eta^2 + (Omega_a t)^2), the {|0>, |r>} block is

        e^{i eta/2} [cos(theta/2) - i sin(theta/2)/theta (Omega_a t sigma_x + eta sigma_z)]

    with sigma_z = |0><0| - |r><r|.  The prefactor e^{i eta/2} is the
    identity-part of the integrated |r><r| projector; it is a phonon operator,
    not a pure global phase.  |1>_a is left untouched.  This is the exact
    exponential of the time-integrated Hamiltonian (first Magnus term).
    """
    msgs = []
    terms = expansion_terms(p)
    u1 = abs(terms.U1_0) / HBAR
    if p.Omega_a < validity_ratio * u1:
        msgs.append(f"Omega_a = {p.Omega_a:.3e} rad/s is not >> U1_0/hbar = {u1:.3e} rad/s")
    n = p.N_cutoff
    eta = integrated_detuning(p, t, t0)
    ev, vec = np.linalg.eigh(eta)
    om = p.Omega_a * t
    theta = np.sqrt(ev**2 + om**2)
    sinc = np.where(theta > 0, np.sin(theta / 2) / np.where(theta > 0, theta, 1.0), 0.5)

    def f(vals):
        return (vec * vals) @ vec.conj().T

    pre = f(np.exp(0.5j * ev))
    c = f(np.cos(theta / 2))
    s_eta = f(sinc * ev)
    s_om = f(sinc * om)
    b00 = pre @ (c - 1j * s_eta)
    brr = pre @ (c + 1j * s_eta)
    b0r = pre @ (-1j * s_om)

    u = np.zeros((hs.full_dim(n), hs.full_dim(n)), dtype=complex)
    ident_ion = np.eye(hs.ION_DIM)
    blocks = {(0, 0): b00, (2, 2): brr, (0, 2): b0r, (2, 0): b0r, (1, 1): np.eye(n)}
    m = hs.ION_DIM * n
    for (i, j), b in blocks.items():
        u[i * m:(i + 1) * m, j * m:(j + 1) * m] = np.kron(ident_ion, b)
    return AnalyticAtomUnitary(matrix=u, warnings=msgs)


def analytic_sideband_unitary(Omega_n: float, Delta: float, t: float) -> np.ndarray:
    """2x2 detuned sideband unitary on {|0_i, n>, |1_i, n-1>} (sigma_z = diag(-1, 1))."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([-1.0, 1.0]).astype(complex)
    gen = math.hypot(Omega_n, Delta)
    if gen == 0:
        return np.eye(2, dtype=complex)
    th = t * gen
    return (math.cos(th / 2) * np.eye(2) - 1j * (Delta / gen) * math.sin(th / 2) * sz
            - 1j * (Omega_n / gen) * math.sin(th / 2) * sx)


# --- RWA diagnostic ---------------------------------------------------------


@dataclass
class FrameCheckReport:
    discrepancy: float
    bound: float
    passed: bool
    rwa_parameter: float
    stark_shift: float
    compensated: bool
    duration: float


def interaction_frame_check(p: PhysicalParams, compensate_stark: bool = True, samples: int = 400,
                            steps_per_period: int = DEFAULT_STEPS_PER_PERIOD, bound: Optional[float] = None,
                            duration: Optional[float] = None) -> FrameCheckReport:
    """Compare carrier-plus-sidebands dynamics with the red-sideband-only RWA.

    Starting in |0_i, 1>, both models run for one sideband pi-pulse; the
    reported discrepancy is the largest difference in any basis population
    over ``samples`` uniformly spaced instants.  The off-resonant carrier
    produces a differential light shift Omega_i^2 / (2 omega_i); with
    ``compensate_stark`` the laser detuning absorbs it, as in practice.
    What remains is the fast carrier wiggle, whose population amplitude is
    (Omega_i / omega_i)^2; the default pass bound is twice that.
    """
    n = p.N_cutoff
    eps = p.eta_LD * p.Omega_i / p.omega_i
    stark = p.Omega_i**2 / (2.0 * p.omega_i)
    dur = math.pi / p.sideband_rabi if duration is None else duration
    if bound is None:
        bound = 2.0 * (p.Omega_i / p.omega_i) ** 2
    if p.Omega_i == 0:
        return FrameCheckReport(0.0, bound, True, eps, 0.0, compensate_stark, dur)
    psi0 = np.zeros(hs.ION_DIM * n, dtype=complex)
    psi0[1] = 1.0  # ion 0, phonon 1

    detuning = -p.omega_i + (stark if compensate_stark else 0.0)
    full = Segment(lambda t: H_interaction_full(p, t, detuning), dur, samples=samples,
                   extra_frequency=2 * p.omega_i, steps_per_period=steps_per_period)
    rwa = Segment(sideband_coupling(p), dur, samples=samples)
    r_full = evolve(psi0, PropagationPlan([full]))
    r_rwa = evolve(psi0, PropagationPlan([rwa]))
    diff = np.max(np.abs(np.abs(r_full.states) ** 2 - np.abs(r_rwa.states) ** 2))
    return FrameCheckReport(float(diff), bound, bool(diff <= bound), eps, stark, compensate_stark, dur)
