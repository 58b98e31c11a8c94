"""Mean NF and TD error over the three scenario sweeps, written as CSV (one file per scenario)."""
import argparse
import time
from pathlib import Path

from resonant.evaluation import run_scenario_sweep, write_sweep_csv

SWEEPS = {
    1: (5.0, 10.0, 15.0, 20.0, 25.0),  # SNR in dB
    2: (0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0),  # residue std
    3: (0.0, 0.001, 0.005, 0.01, 0.05, 0.1),  # frequency perturbation std
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenarios", type=int, nargs="+", default=[1, 2, 3], choices=[1, 2, 3])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--test-per-class", type=int, default=250)
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    a = ap.parse_args()
    a.out_dir.mkdir(parents=True, exist_ok=True)

    for sc in a.scenarios:
        t0 = time.perf_counter()
        rows, cells = run_scenario_sweep(sc, SWEEPS[sc], range(a.seeds), 3, a.test_per_class)
        path = a.out_dir / f"scenario{sc}.csv"
        with open(path, "w", newline="") as fh:
            write_sweep_csv(rows, fh)
        print(f"scenario {sc}: {path} ({time.perf_counter() - t0:.0f}s)")
        for r in rows:
            print(f"  {r.sweep_value:>8g} {r.method}  {r.mean_error:.4f} +- {r.std_error:.4f}")
        bad = [c for c in cells if c.failed]
        if bad:
            print(f"  {len(bad)} failed cells, e.g. {bad[0].failed}")


if __name__ == "__main__":
    main()
