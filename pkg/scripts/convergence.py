"""Energy and broken-H1 convergence tables for every mesh family and both stabilizations.

    python scripts/convergence.py --levels 8 16 32 64 --out results/
"""
import argparse
import pathlib

from polyvem.harness import convergence_study, mean_eoc, rows_to_csv
from polyvem.mesh import FAMILIES


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, nargs="+", default=[8, 16, 32, 64])
    ap.add_argument("--families", nargs="+", default=sorted(FAMILIES))
    ap.add_argument("--case", default="sinsin")
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for fam in args.families:
        for kind in ("patch", "original"):
            rows = convergence_study(FAMILIES[fam], args.levels, args.case, kind)
            rows_to_csv(rows, args.out / f"converge_{fam}_{kind}.csv")
            print(f"{fam:8s} {kind:8s} mean EOC energy {mean_eoc(rows):.3f}  "
                  f"h1 {mean_eoc(rows, 'eoc_h1'):.3f}  last energy {rows[-1].energy_err:.3e}")


if __name__ == "__main__":
    main()
