"""Built-in oracle suite run by ``phonon-gate check``."""

import math
from dataclasses import dataclass, replace
from typing import Callable, List

import numpy as np
from scipy.linalg import expm

from . import hilbert as hs
from .errors import PhononGateError
from .physics import HBAR, PhysicalParams, effective_sideband_block, trap_shift
from .propagate import PropagationPlan, analytic_atom_unitary, analytic_sideband_unitary, evolve, interaction_frame_check
from .protocol import (
    DEFAULT_OPTIONS,
    ProtocolOptions,
    atom_pulse_segment,
    ion_pulse_segment,
    run_cnot,
    run_input,
    step1_excite_control,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    bound: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: value={self.value:.3e} bound={self.bound:.1e} {self.detail}".rstrip()


def state_infidelity(a: np.ndarray, b: np.ndarray) -> float:
    return 1.0 - abs(np.vdot(a, b)) ** 2


def check_sideband_oracle(p: PhysicalParams, options: ProtocolOptions = DEFAULT_OPTIONS) -> CheckResult:
    delta = trap_shift(p).Delta
    om = p.sideband_rabi
    t = math.pi / om
    err = 0.0
    for n in (1, 2, 3):
        om_n = om * math.sqrt(n)
        u_ref = expm(-1j * effective_sideband_block(om_n, delta) * t)
        err = max(err, float(np.max(np.abs(analytic_sideband_unitary(om_n, delta, t) - u_ref))))
    return CheckResult("sideband_unitary_oracle", err < 1e-12, err, 1e-12)


def check_atom_oracle(p: PhysicalParams, options: ProtocolOptions = DEFAULT_OPTIONS) -> CheckResult:
    t = math.pi / p.Omega_a
    u = analytic_atom_unitary(p, t).matrix
    worst = 0.0
    for ket in ("0,01", "0,10"):
        psi = hs.state_from_label(ket, p.N_cutoff)
        worst = max(worst, state_infidelity(u @ psi, step1_excite_control(psi, p, options)))
    return CheckResult("atom_unitary_oracle", worst < 1e-3, worst, 1e-3)


def check_rwa_frame(p: PhysicalParams, options: ProtocolOptions = DEFAULT_OPTIONS) -> CheckResult:
    r = interaction_frame_check(p, steps_per_period=options.steps_per_period)
    return CheckResult("rwa_interaction_frame", r.passed, r.discrepancy, r.bound,
                       f"(Stark-compensated, light shift {r.stark_shift / (2 * math.pi) / 1e3:.1f} kHz)")


def check_cutoff_convergence(p: PhysicalParams, options: ProtocolOptions = DEFAULT_OPTIONS) -> CheckResult:
    f8 = run_cnot(p.with_(N_cutoff=8), options).fidelity_avg
    f16 = run_cnot(p.with_(N_cutoff=16), options).fidelity_avg
    d = abs(f16 - f8)
    return CheckResult("cutoff_convergence_8_16", d < 1e-4, d, 1e-4)


def check_step_halving(p: PhysicalParams, options: ProtocolOptions = DEFAULT_OPTIONS) -> CheckResult:
    fine = replace(options, steps_per_period=2 * options.steps_per_period)
    worst = 0.0
    for k in range(4):
        a = run_input(p, k, options).final_state
        b = run_input(p, k, fine).final_state
        worst = max(worst, float(np.max(np.abs(a - b))))
    return CheckResult("step_halving", worst < 1e-6, worst, 1e-6)


def check_norm(p: PhysicalParams, options: ProtocolOptions = DEFAULT_OPTIONS) -> CheckResult:
    rep = run_cnot(p, options)
    return CheckResult("norm_conservation", rep.norm_drift < 1e-9, rep.norm_drift, 1e-9)


def check_decoupling(p: PhysicalParams, options: ProtocolOptions = DEFAULT_OPTIONS) -> CheckResult:
    n = p.N_cutoff
    seg = atom_pulse_segment(p, options, samples=50)
    res = evolve(hs.state_from_label("1,01", n), PropagationPlan([seg]))
    m = hs.ION_DIM * n
    worst = float(np.max(np.abs(res.states[:, 2 * m:])))
    return CheckResult("control1_decoupling", worst < 1e-12, worst, 1e-12)


def check_blockade(p: PhysicalParams, options: ProtocolOptions = DEFAULT_OPTIONS) -> CheckResult:
    r = blockade_transfer(p, options)
    ok = r["max_transfer"] <= 1.5 * r["rabi_bound"]
    return CheckResult("blockade_suppression", ok, r["max_transfer"], 1.5 * r["rabi_bound"])


def blockade_transfer(p: PhysicalParams, options: ProtocolOptions = DEFAULT_OPTIONS, samples: int = 400) -> dict:
    """Population leaving |r, 0_i 1> during the ion pulse vs. the detuned-Rabi bound."""
    n = p.N_cutoff
    delta = trap_shift(p).Delta if options.blockade else 0.0
    om = p.sideband_rabi
    seg = ion_pulse_segment(p, options, samples=samples)
    res = evolve(hs.state_from_label("r,01", n), PropagationPlan([seg], tolerance=options.norm_tol), cutoff=n)
    target = hs.flatten(*hs.parse_label("r,10"), n)
    tr = np.abs(res.states[:, target]) ** 2
    return {
        "max_transfer": float(tr.max()),
        "final_transfer": float(tr[-1]),
        "rabi_bound": om**2 / (om**2 + delta**2),
        "Delta": delta,
        "atom_populations": hs.populations_by_atom(res.final_state, n),
    }


CHECKS: List[Callable[[PhysicalParams, ProtocolOptions], CheckResult]] = [
    check_sideband_oracle,
    check_atom_oracle,
    check_rwa_frame,
    check_cutoff_convergence,
    check_step_halving,
    check_norm,
    check_decoupling,
    check_blockade,
]


def run_checks(p: PhysicalParams, options: ProtocolOptions = DEFAULT_OPTIONS) -> List[CheckResult]:
    out = []
    for fn in CHECKS:
        name = fn.__name__.replace("check_", "")
        try:
            out.append(fn(p, options))
        except PhononGateError as exc:
            out.append(CheckResult(name, False, math.nan, math.nan, f"error: {exc}"))
    return out
