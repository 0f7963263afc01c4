"""
Parameter scans and amplitude traces, with CSV output.

Every CSV starts with ``#``-prefixed provenance lines (package version and
all resolved parameters in SI) followed by a header row whose column names
carry their units.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from . import hilbert as hs
from .errors import PhononGateError
from .physics import EXPANSION_COEFFS, PhysicalParams, ghz, to_mhz, trap_shift
from .protocol import DEFAULT_OPTIONS, LOGICAL_KETS, ProtocolOptions, protocol_plan, run_cnot
from .propagate import evolve

VARIABLES = ("distance", "omega_a", "phonon_cutoff", "expansion_coeff")

DISTANCE_GRID = tuple(np.linspace(1.5e-6, 5e-6, 200))
OMEGA_A_GRID = tuple(ghz(f) for f in (0.25, 0.5, 1.0, 1.5, 2.0))


@dataclass
class SweepSpec:
    """What to scan.  Grid values are SI (m, rad/s), integers for the cutoff,
    and 4 / 10 (or their names) for the expansion coefficient."""

    variable: str
    grid: Sequence[Any]
    fixed: PhysicalParams = field(default_factory=PhysicalParams)
    options: ProtocolOptions = DEFAULT_OPTIONS
    workers: int = 1

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}; expected one of {VARIABLES}")
        if len(self.grid) == 0:
            raise ValueError("empty sweep grid")
        if self.variable == "expansion_coeff":
            self.grid = [_coeff_name(g) for g in self.grid]
            if len(set(self.grid)) != len(self.grid):
                raise ValueError("expansion_coeff grid has duplicates")
            return
        g = np.asarray(self.grid, dtype=float)
        d = np.diff(g)
        if len(g) > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("sweep grid must be strictly monotone")


def _coeff_name(v):
    if isinstance(v, str):
        if v not in EXPANSION_COEFFS:
            raise ValueError(f"unknown expansion coefficient {v!r}")
        return v
    for name, c in EXPANSION_COEFFS.items():
        if float(v) == c:
            return name
    raise ValueError(f"expansion coefficient must be 4 or 10, got {v!r}")


@dataclass
class SweepResult:
    columns: List[Tuple[str, str]]
    rows: List[Dict[str, Any]]
    provenance: Dict[str, Any]

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def write_csv(self, path) -> None:
        write_csv(path, self.columns, self.rows, self.provenance)


def provenance(p: PhysicalParams, options: Optional[ProtocolOptions] = None, **extra) -> Dict[str, Any]:
    prov = {"package": f"phonon_gate {__version__}"}
    prov.update({f"param.{k}": v for k, v in p.as_dict().items()})
    if options is not None:
        prov.update({f"option.{k}": getattr(options, k) for k in options.__dataclass_fields__})
    prov.update(extra)
    return prov


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return str(v)


def write_csv(path, columns, rows, prov) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for k, v in prov.items():
            fh.write(f"# {k} = {v!r}\n" if isinstance(v, float) else f"# {k} = {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(f"{name} [{unit}]" if unit else name for name, unit in columns)
        for r in rows:
            w.writerow(_fmt(r[name]) for name, _ in columns)


def _map_ordered(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- trap shift vs distance ---------------------------------------------------


def _shift_row(p, d):
    row = {"distance": d * 1e6, "valid": True, "flag": ""}
    try:
        s = trap_shift(p, d)
    except PhononGateError as exc:
        row.update(omega_bar=math.nan, offset=math.nan, Delta=math.nan, valid=False,
                   flag=type(exc).__name__)
        return row
    row.update(omega_bar=to_mhz(s.omega_bar), offset=s.equilibrium_offset * 1e6, Delta=to_mhz(s.Delta))
    beta = 4.0 * math.sqrt(2.0) * p.lambda_i / d
    if beta >= 0.2:
        row.update(valid=False, flag="ExpansionInvalid")
    return row


def sweep_trap_shift(spec: SweepSpec) -> SweepResult:
    """Shifted trap frequency, equilibrium offset and shift vs. distance.

    Destabilized or expansion-invalid distances are kept as flagged rows.
    """
    if spec.variable != "distance":
        raise ValueError("sweep_trap_shift needs variable='distance'")
    p = spec.fixed
    rows = _map_ordered(lambda d: _shift_row(p, float(d)), list(spec.grid), spec.workers)
    cols = [("distance", "um"), ("omega_bar", "MHz"), ("offset", "um"), ("Delta", "MHz"),
            ("valid", ""), ("flag", "")]
    return SweepResult(cols, rows, provenance(p, None, sweep="trap_shift",
                                              unperturbed_MHz=to_mhz(p.omega_i)))


# --- fidelity scans ---------------------------------------------------------


def _params_at(p: PhysicalParams, variable: str, value) -> PhysicalParams:
    if variable == "distance":
        return p.with_(x_a=float(value))
    if variable == "omega_a":
        return p.with_(Omega_a=float(value))
    if variable == "phonon_cutoff":
        return p.with_(N_cutoff=int(value))
    return p.with_(expansion_order2_coeff=value)


def _display(variable, value):
    if variable == "distance":
        return float(value) * 1e6
    if variable == "omega_a":
        return float(value) / (2 * math.pi) / 1e9
    return value


UNITS = {"distance": "um", "omega_a": "GHz", "phonon_cutoff": "", "expansion_coeff": ""}


def sweep_fidelity(spec: SweepSpec) -> SweepResult:
    """Full gate simulation at each grid point; failures become flagged rows."""
    options = spec.options

    def point(value):
        row = {spec.variable: _display(spec.variable, value), "valid": True, "flag": ""}
        try:
            p = _params_at(spec.fixed, spec.variable, value)
            rep = run_cnot(p, ProtocolOptions(**{**options.__dict__, "max_workers": 1}))
        except PhononGateError as exc:
            row.update(fidelity_avg=math.nan, fidelity_process=math.nan, leakage_max=math.nan,
                       norm_drift=math.nan, valid=False, flag=type(exc).__name__)
            return row
        row.update(
            fidelity_avg=rep.fidelity_avg,
            fidelity_process=rep.fidelity_process,
            leakage_max=max(rep.leakage.values()) if rep.leakage else math.nan,
            norm_drift=rep.norm_drift,
        )
        if rep.failed:
            row.update(valid=False, flag="PropagationError")
        return row

    rows = _map_ordered(point, list(spec.grid), spec.workers)
    cols = [(spec.variable, UNITS[spec.variable]), ("fidelity_avg", ""), ("fidelity_process", ""),
            ("leakage_max", ""), ("norm_drift", ""), ("valid", ""), ("flag", "")]
    return SweepResult(cols, rows, provenance(spec.fixed, options, sweep=f"fidelity_vs_{spec.variable}"))


def sweep_fidelity_vs_omega_a(spec: SweepSpec) -> SweepResult:
    if spec.variable != "omega_a":
        raise ValueError("sweep_fidelity_vs_omega_a needs variable='omega_a'")
    return sweep_fidelity(spec)


# --- amplitude traces ---------------------------------------------------------


DEFAULT_TRACKED = ("0,01", "0,10", "1,01", "1,10", "r,01", "r,10")


@dataclass
class AmplitudeTraces:
    """Amplitudes of tracked basis states across the three pulses.

    ``t`` is dimensionless: pulse k (0, 1, 2) maps its own duration onto
    [k, k+1].  ``t_seconds`` is the protocol clock.
    """

    initial: str
    labels: Tuple[str, ...]
    t: np.ndarray
    t_seconds: np.ndarray
    amplitudes: np.ndarray
    norms: np.ndarray

    def rows(self):
        for i, tt in enumerate(self.t):
            for j, lab in enumerate(self.labels):
                z = self.amplitudes[i, j]
                yield {"t": float(tt), "label": lab, "re": float(z.real), "im": float(z.imag)}

    def write_csv(self, path, prov=None) -> None:
        prov = dict(prov or {})
        prov.setdefault("time_axis", "pulse k spans [k, k+1] in units of its own duration")
        prov.setdefault("initial", self.initial)
        write_csv(path, [("t", "dimensionless"), ("label", ""), ("re", ""), ("im", "")], list(self.rows()), prov)


def amplitude_traces(p: PhysicalParams, initial: str, options: ProtocolOptions = DEFAULT_OPTIONS,
                     samples_per_step: int = 100, tracked: Sequence[str] = DEFAULT_TRACKED) -> AmplitudeTraces:
    """Sample tracked amplitudes uniformly within each pulse (S gate not applied)."""
    if initial not in LOGICAL_KETS:
        hs.parse_label(initial)
    n = p.N_cutoff
    psi0 = hs.state_from_label(initial, n)
    res = evolve(psi0, protocol_plan(p, options, samples=samples_per_step), cutoff=n)
    idx = [hs.flatten(*hs.parse_label(l), n) for l in tracked]
    return AmplitudeTraces(
        initial=initial,
        labels=tuple(tracked),
        t=res.segment_index + res.fraction,
        t_seconds=res.times,
        amplitudes=res.states[:, idx],
        norms=np.linalg.norm(res.states, axis=1),
    )
