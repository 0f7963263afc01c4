"""Gate fidelity against the atomic Rabi frequency.

    python3 scripts/fidelity_vs_atom_rabi.py [--grid 0.25 0.5 1 1.5 2] [--out results/fidelity_vs_omega_a.csv]
"""

import argparse
from pathlib import Path

from phonon_gate import PhysicalParams
from phonon_gate.physics import ghz
from phonon_gate.protocol import ProtocolOptions
from phonon_gate.sweep import SweepSpec, sweep_fidelity


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=float, nargs="+", default=[0.25, 0.5, 1.0, 1.5, 2.0], help="GHz")
    ap.add_argument("--n-cutoff", type=int, default=12)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", default="results/fidelity_vs_omega_a.csv")
    args = ap.parse_args()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)

    spec = SweepSpec("omega_a", [ghz(g) for g in args.grid], PhysicalParams(N_cutoff=args.n_cutoff),
                     ProtocolOptions(), workers=args.workers)
    res = sweep_fidelity(spec)
    res.write_csv(args.out)
    for r in res.rows:
        print(f"Omega_a/2pi = {r['omega_a']:5.2f} GHz  F_avg = {r['fidelity_avg']:.4f}  "
              f"F_proc = {r['fidelity_process']:.4f}  max leakage = {r['leakage_max']:.3f}")
    print(f"-> {args.out}")


if __name__ == "__main__":
    main()
