"""Full gate simulation at the working point, with the oracle checks.

    python3 scripts/gate_report.py [--out results/gate_report.txt]
"""

import argparse
from pathlib import Path

from phonon_gate import PhysicalParams, run_cnot
from phonon_gate.checks import run_checks


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/gate_report.txt")
    args = ap.parse_args()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)

    p = PhysicalParams()
    rep = run_cnot(p)
    Path(args.out).write_text(rep.to_text(), encoding="utf-8")
    print(f"F_avg = {rep.fidelity_avg:.4f}, F_proc = {rep.fidelity_process:.4f} "
          f"(closest to reference: {rep.matched_definition})")
    print("populations |<out|U|in>|^2 (columns = inputs 00 01 10 11):")
    for row in rep.populations:
        print("   " + "  ".join(f"{v:.4f}" for v in row))
    for c in run_checks(p):
        print(c.line())
    print(f"-> {args.out}")


if __name__ == "__main__":
    main()
