"""
Command-line front end.

    phonon-gate <mode> [--config FILE] [--set key=value]... [--out PATH]

Modes: gate, sweep-shift, sweep-fidelity, traces, check.

Configuration is flat ``key = value [unit]`` text, one entry per line, ``#``
starts a comment.  Physical quantities need a unit: frequencies take
Hz/kHz/MHz/GHz (cyclic, converted to rad/s) or rad/s, lengths nm/um/m, times
ns/us/ms/s, masses u/kg, and C4 takes au.  ``--set`` entries override the
file.  Exit codes: 0 ok, 1 physics/validation error, 2 numeric failure or
failed check, 3 I/O error.
"""

import argparse
import math
import os
import re
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import hilbert as hs
from .errors import ConfigError, PhononGateError, PhysicsError, PropagationError
from .physics import AMU, PhysicalParams, convert_C4
from .protocol import REFERENCE_FIDELITY, ProtocolOptions, run_cnot

MODES = ("gate", "sweep-shift", "sweep-fidelity", "traces", "check")

TWO_PI = 2 * math.pi
UNITS = {
    "frequency": {"Hz": TWO_PI, "kHz": TWO_PI * 1e3, "MHz": TWO_PI * 1e6, "GHz": TWO_PI * 1e9, "rad/s": 1.0},
    "length": {"nm": 1e-9, "um": 1e-6, "m": 1.0},
    "time": {"ns": 1e-9, "us": 1e-6, "ms": 1e-3, "s": 1.0},
    "mass": {"u": AMU, "kg": 1.0},
    "c4": {"au": 1.0},
    "angle": {"rad": 1.0, "": 1.0},
}


@dataclass(frozen=True)
class Key:
    kind: str  # a UNITS kind, or float/int/bool/choice/label/grid
    default: str
    choices: Tuple[str, ...] = ()
    auto: bool = False


KEYS: Dict[str, Key] = {
    "x_a": Key("length", "2.57 um"),
    "trap_freq": Key("frequency", "11.2 MHz"),
    "qubit_freq": Key("frequency", "1.25 GHz"),
    "eta": Key("float", "0.1"),
    "omega_ion": Key("frequency", "1 MHz"),
    "omega_a": Key("frequency", "1 GHz"),
    "delta_r": Key("frequency", "auto", auto=True),
    "phi": Key("angle", "0"),
    "c4": Key("c4", "-160 au"),
    "c4_scale": Key("float", "5.07e10"),
    "ion_mass": Key("mass", "9 u"),
    "n_cutoff": Key("int", "12"),
    "rydberg_lifetime": Key("time", "100 us"),
    "expansion_order2_coeff": Key("choice", "paper", ("paper", "taylor")),
    "ladder_normalization": Key("choice", "position", ("position", "printed")),
    "step2_duration_mode": Key("choice", "sideband", ("sideband", "literal")),
    "step2_model": Key("choice", "shift", ("shift", "microscopic")),
    "blocked_frame": Key("choice", "effective", ("effective", "lab")),
    "blockade": Key("bool", "true"),
    "steps_per_period": Key("int", "50"),
    "norm_tol": Key("float", "1e-9"),
    "workers": Key("int", "4"),
    "sweep_variable": Key("choice", "omega_a", ("distance", "omega_a", "phonon_cutoff", "expansion_coeff")),
    "grid": Key("grid", "auto", auto=True),
    "trace_input": Key("label", "0,01"),
    "trace_samples": Key("int", "100"),
}

GRID_KIND = {"distance": "length", "omega_a": "frequency", "phonon_cutoff": "int", "expansion_coeff": "choice"}

_KEY_RE = re.compile(r"^[a-z][a-z0-9_]*$")
_NUM_UNIT_RE = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)$")


def _parse_quantity(key, kind, text, line):
    m = _NUM_UNIT_RE.match(text)
    if not m:
        raise ConfigError(f"{key}: malformed value {text!r}", line, key)
    number, unit = float(m.group(1)), m.group(2)
    units = UNITS[kind]
    if unit not in units:
        allowed = "|".join(u for u in units if u) or "none"
        if not unit:
            raise ConfigError(f"{key}: missing unit (expected {allowed})", line, key)
        raise ConfigError(f"{key}: unit {unit!r} does not fit a {kind} (expected {allowed})", line, key)
    return number, unit


def _canon_number(x: float) -> str:
    return repr(float(x))


def _normalize(key: str, text: str, line: Optional[int]) -> str:
    """Validate one raw value and return its canonical text form."""
    spec = KEYS[key]
    text = text.strip()
    if spec.auto and text == "auto":
        return "auto"
    kind = spec.kind
    if kind in UNITS:
        number, unit = _parse_quantity(key, kind, text, line)
        return f"{_canon_number(number)} {unit}".rstrip()
    if kind == "float":
        try:
            return _canon_number(float(text))
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {text!r}", line, key) from None
    if kind == "int":
        if not re.fullmatch(r"[-+]?\d+", text):
            raise ConfigError(f"{key}: expected an integer, got {text!r}", line, key)
        return str(int(text))
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return "true"
        if low in ("false", "no", "0", "off"):
            return "false"
        raise ConfigError(f"{key}: expected true/false, got {text!r}", line, key)
    if kind == "choice":
        if text not in spec.choices:
            raise ConfigError(f"{key}: expected one of {'|'.join(spec.choices)}, got {text!r}", line, key)
        return text
    if kind == "label":
        try:
            a, i, n = hs.parse_label(text)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", line, key) from None
        return hs.label(a, i, n)
    if kind == "grid":
        return _normalize_grid(key, text, line)
    raise AssertionError(kind)


def _normalize_grid(key, text, line):
    """``v1, v2, ... [unit]`` or ``start:stop:count [unit]``."""
    m = re.match(r"^(.*?)\s*([A-Za-z/]+)?$", text)
    body, unit = m.group(1).strip(), (m.group(2) or "")
    if body in ("paper", "taylor") or re.fullmatch(r"[a-z, ]+", text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        return ", ".join(items)
    try:
        if ":" in body:
            start, stop, count = body.split(":")
            if int(count) < 1:
                raise ValueError
            body = f"{_canon_number(float(start))}:{_canon_number(float(stop))}:{int(count)}"
        else:
            body = ", ".join(_canon_number(float(t)) for t in body.split(",") if t.strip())
    except ValueError:
        raise ConfigError(f"{key}: malformed grid {text!r}", line, key) from None
    return f"{body} {unit}".rstrip()


@dataclass
class RunConfig:
    """A fully validated run.  ``values`` holds every key in canonical text form."""

    mode: str
    values: Dict[str, str]
    output_path: Optional[str] = None
    params: PhysicalParams = field(default=None, compare=False)
    options: ProtocolOptions = field(default=None, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.params is None or self.options is None:
            self.params, self.options = resolve(self.values)

    def get(self, key):
        return self.values[key]

    def quantity(self, key) -> float:
        """SI value of a dimensional or numeric key."""
        text = self.values[key]
        kind = KEYS[key].kind
        if kind in UNITS:
            number, unit = _parse_quantity(key, kind, text, None)
            return number * UNITS[kind][unit]
        if kind == "int":
            return int(text)
        return float(text)

    def grid(self, variable: str) -> List[Any]:
        text = self.values["grid"]
        if text == "auto":
            return default_grid(variable)
        kind = GRID_KIND[variable]
        if kind == "choice":
            return [t.strip() for t in text.split(",")]
        m = re.match(r"^(.*?)\s*([A-Za-z/]+)?$", text)
        body, unit = m.group(1).strip(), (m.group(2) or "")
        if kind == "int":
            if unit:
                raise ConfigError(f"grid: {variable} takes no unit")
            factor = 1
        else:
            if unit not in UNITS[kind] or not unit:
                raise ConfigError(f"grid: unit {unit!r} does not fit {variable} ({kind})", key="grid")
            factor = UNITS[kind][unit]
        if ":" in body:
            start, stop, count = body.split(":")
            vals = list(np.linspace(float(start), float(stop), int(count)))
        else:
            vals = [float(t) for t in body.split(",")]
        if kind == "int":
            return [int(v) for v in vals]
        return [v * factor for v in vals]

    def to_text(self) -> str:
        return format_config(self)


def default_grid(variable: str) -> List[Any]:
    from .sweep import DISTANCE_GRID, OMEGA_A_GRID

    if variable == "distance":
        return list(DISTANCE_GRID)
    if variable == "omega_a":
        return list(OMEGA_A_GRID)
    if variable == "phonon_cutoff":
        return [6, 8, 10, 12, 16]
    return ["paper", "taylor"]


def resolve(values: Dict[str, str]) -> Tuple[PhysicalParams, ProtocolOptions]:
    def q(key):
        text = values[key]
        kind = KEYS[key].kind
        number, unit = _parse_quantity(key, kind, text, None)
        return number * UNITS[kind][unit]

    try:
        c4_au, _ = _parse_quantity("c4", "c4", values["c4"], None)
        params = PhysicalParams(
            m_i=q("ion_mass"),
            omega_i=q("trap_freq"),
            omega_01=q("qubit_freq"),
            C4=convert_C4(c4_au, float(values["c4_scale"])),
            x_a=q("x_a"),
            eta_LD=float(values["eta"]),
            Omega_i=q("omega_ion"),
            Omega_a=q("omega_a"),
            delta_r=None if values["delta_r"] == "auto" else q("delta_r"),
            phi=q("phi"),
            N_cutoff=int(values["n_cutoff"]),
            rydberg_lifetime=q("rydberg_lifetime"),
            expansion_order2_coeff=values["expansion_order2_coeff"],
            ladder_normalization=values["ladder_normalization"],
        )
        options = ProtocolOptions(
            step2_duration_mode=values["step2_duration_mode"],
            step2_model=values["step2_model"],
            blocked_frame=values["blocked_frame"],
            blockade=values["blockade"] == "true",
            steps_per_period=int(values["steps_per_period"]),
            norm_tol=float(values["norm_tol"]),
            max_workers=int(values["workers"]),
        )
    except PhysicsError as exc:
        raise ConfigError(f"parameter validation failed: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if params.Omega_a <= 0 or params.Omega_i <= 0 or params.eta_LD <= 0:
        raise ConfigError("Rabi frequencies and eta must be positive")
    if options.steps_per_period < 1 or options.max_workers < 1:
        raise ConfigError("steps_per_period and workers must be >= 1")
    return params, options


def _split_line(raw: str, line: Optional[int]):
    text = raw.split("#", 1)[0].strip()
    if not text:
        return None
    if "=" not in text:
        raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line)
    key, value = (s.strip() for s in text.split("=", 1))
    if not _KEY_RE.match(key):
        raise ConfigError(f"malformed key {key!r} (keys are lower_snake_case)", line, key)
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}", line, key)
    if not value:
        raise ConfigError(f"{key}: empty value", line, key)
    return key, value


def parse_config(text: str = "", overrides: Sequence[str] = (), mode: str = "gate",
                 output_path: Optional[str] = None) -> RunConfig:
    """Parse configuration text plus ``key=value`` overrides into a RunConfig."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    text = text.removeprefix("\ufeff")
    values = {k: _normalize(k, spec.default, None) for k, spec in KEYS.items()}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        kv = _split_line(raw, lineno)
        if kv is None:
            continue
        key, value = kv
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first on line {seen[key]})", lineno, key)
        seen[key] = lineno
        values[key] = _normalize(key, value, lineno)
    for item in overrides:
        kv = _split_line(item, None)
        if kv is None:
            raise ConfigError(f"empty override {item!r}")
        key, value = kv
        values[key] = _normalize(key, value, None)
    return RunConfig(mode=mode, values=values, output_path=output_path)


def format_config(config: RunConfig) -> str:
    lines = [f"# phonon-gate configuration (mode: {config.mode})"]
    lines += [f"{k} = {config.values[k]}" for k in KEYS]
    return "\n".join(lines) + "\n"


# --- dispatch -----------------------------------------------------------------


DEFAULT_OUT = {
    "gate": "gate_report.txt",
    "sweep-shift": "trap_shift.csv",
    "sweep-fidelity": "fidelity_sweep.csv",
    "traces": "amplitude_traces.csv",
    "check": None,
}


def _atomic_write(path: str, write) -> None:
    """Write through a temporary file so a failure never leaves a partial output."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".phonon_gate_", suffix=".tmp")
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def _config_provenance(config: RunConfig) -> Dict[str, Any]:
    return {f"config.{k}": v for k, v in config.values.items()}


def _run_gate(config, out, echo):
    from .sweep import provenance, write_csv

    rep = run_cnot(config.params, config.options)
    prov = provenance(config.params, config.options, **_config_provenance(config))

    def write_report(path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(rep.to_text())
            for k, v in _config_provenance(config).items():
                fh.write(f"{k} = {v}\n")

    _atomic_write(out, write_report)
    stem, _ = os.path.splitext(out)
    cols = [("in_label", ""), ("out_label", ""), ("re", ""), ("im", "")]
    rows = [dict(zip(("in_label", "out_label", "re", "im"), r)) for r in rep.truth_table_rows()]
    _atomic_write(stem + "_truth_table.csv", lambda p: write_csv(p, cols, rows, prov))
    echo(f"fidelity_avg = {rep.fidelity_avg:.6f}")
    echo(f"fidelity_process = {rep.fidelity_process:.6f}")
    echo(f"matched_definition = {rep.matched_definition} (reference {REFERENCE_FIDELITY})")
    echo(f"report -> {out}")
    return 2 if rep.failed else 0


def _run_sweep_shift(config, out, echo):
    from .sweep import SweepSpec, sweep_trap_shift

    res = sweep_trap_shift(SweepSpec("distance", config.grid("distance"), config.params,
                                     config.options, workers=config.options.max_workers))
    res.provenance.update(_config_provenance(config))
    _atomic_write(out, res.write_csv)
    bad = sum(1 for r in res.rows if not r["valid"])
    echo(f"{len(res.rows)} rows ({bad} flagged) -> {out}")
    return 0


def _run_sweep_fidelity(config, out, echo):
    from .sweep import SweepSpec, sweep_fidelity

    var = config.values["sweep_variable"]
    res = sweep_fidelity(SweepSpec(var, config.grid(var), config.params, config.options,
                                   workers=config.options.max_workers))
    res.provenance.update(_config_provenance(config))
    _atomic_write(out, res.write_csv)
    for r in res.rows:
        echo(f"{var}={r[var]}: fidelity_avg={r['fidelity_avg']:.6f} fidelity_process={r['fidelity_process']:.6f}"
             + ("" if r["valid"] else f" [{r['flag']}]"))
    echo(f"-> {out}")
    return 0 if all(r["valid"] for r in res.rows) else 2


def _run_traces(config, out, echo):
    from .sweep import amplitude_traces, provenance

    tr = amplitude_traces(config.params, config.values["trace_input"], config.options,
                          samples_per_step=int(config.values["trace_samples"]))
    prov = provenance(config.params, config.options, **_config_provenance(config))
    _atomic_write(out, lambda p: tr.write_csv(p, prov))
    echo(f"{len(tr.t)} samples x {len(tr.labels)} states -> {out}")
    return 0


def _run_check(config, out, echo):
    from .checks import run_checks

    results = run_checks(config.params, config.options)
    text = "\n".join(r.line() for r in results) + "\n"
    echo(text.rstrip())
    if out:
        _atomic_write(out, lambda p: open(p, "w", encoding="utf-8").write(text))
    return 0 if all(r.passed for r in results) else 2


RUNNERS = {
    "gate": _run_gate,
    "sweep-shift": _run_sweep_shift,
    "sweep-fidelity": _run_sweep_fidelity,
    "traces": _run_traces,
    "check": _run_check,
}


def run(config: RunConfig, echo=print) -> int:
    """Execute ``config``; return the process exit status."""
    out = config.output_path or DEFAULT_OUT[config.mode]
    try:
        return RUNNERS[config.mode](config, out, echo)
    except PropagationError as exc:
        echo(f"error: numeric failure: {exc}")
        return 2
    except (PhysicsError, ConfigError) as exc:
        echo(f"error: {exc}")
        return 1
    except OSError as exc:
        echo(f"error: I/O: {exc}")
        return 3
    except PhononGateError as exc:
        echo(f"error: {exc}")
        return 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phonon-gate", description="Ion-atom phonon-blockade CNOT simulator")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", metavar="FILE", help="flat key = value configuration file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override one configuration key (repeatable)")
    ap.add_argument("--out", metavar="PATH", help="output file")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    text = ""
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                text = fh.read().decode("utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 3
    try:
        config = parse_config(text, args.overrides, mode=args.mode, output_path=args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
