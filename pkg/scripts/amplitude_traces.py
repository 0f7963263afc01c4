"""Tracked basis-state amplitudes through the three pulses for each logical input.

    python3 scripts/amplitude_traces.py [--samples 200] [--outdir results]
"""

import argparse
from pathlib import Path

import numpy as np

from phonon_gate import PhysicalParams
from phonon_gate.protocol import LOGICAL_KETS
from phonon_gate.sweep import amplitude_traces, provenance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=200, help="samples per pulse")
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)

    p = PhysicalParams()
    for ket in LOGICAL_KETS:
        tr = amplitude_traces(p, ket, samples_per_step=args.samples)
        path = out / f"traces_{ket.replace(',', '_')}.csv"
        tr.write_csv(path, provenance(p))
        final = np.abs(tr.amplitudes[-1]) ** 2
        top = ", ".join(f"{l}: {v:.3f}" for l, v in zip(tr.labels, final) if v > 1e-3)
        print(f"|{ket}>  end of pulse III -> {top}   -> {path}")


if __name__ == "__main__":
    main()
