"""Shifted trap frequency, equilibrium offset and shift vs. ion-atom distance.

    python3 scripts/trap_shift_curve.py [--out results/trap_shift.csv]
"""

import argparse
from pathlib import Path

from phonon_gate import PhysicalParams
from phonon_gate.sweep import DISTANCE_GRID, SweepSpec, sweep_trap_shift


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/trap_shift.csv")
    args = ap.parse_args()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)

    res = sweep_trap_shift(SweepSpec("distance", DISTANCE_GRID, PhysicalParams()))
    res.write_csv(args.out)
    bad = [r for r in res.rows if not r["valid"]]
    print(f"{len(res.rows)} distances, {len(bad)} flagged ({bad[-1]['distance']:.3f} um and below)" if bad
          else f"{len(res.rows)} distances, none flagged")
    for r in res.rows:
        if abs(r["distance"] - 2.57) < 0.01:
            print(f"  {r['distance']:.3f} um: omega_bar/2pi = {r['omega_bar']:.3f} MHz, offset = {r['offset']:.4f} um")
    print(f"-> {args.out}")


if __name__ == "__main__":
    main()
