"""Scenario 1 at 10 dB: NF vs TD error rate and confusion matrices averaged over seeds."""
import argparse
import warnings
from dataclasses import replace

import numpy as np

from resonant.cli import format_report
from resonant.evaluation import evaluate, train_pipeline, train_td_baseline
from resonant.signal_model import generate_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--snr", type=float, default=10.0)
    ap.add_argument("--train-per-class", type=int, default=3)
    ap.add_argument("--test-per-class", type=int, default=1000)
    a = ap.parse_args()
    warnings.simplefilter("ignore")

    reports = {"NF": [], "TD": []}
    for seed in range(a.seeds):
        train, test = generate_scenario(1, a.snr, a.train_per_class, a.test_per_class, seed)
        nf = evaluate(train_pipeline(train), test)
        td = evaluate(train_td_baseline(train), test)
        reports["NF"].append(nf)
        reports["TD"].append(td)
        print(f"seed {seed}: NF {nf.error_rate:.4f}  TD {td.error_rate:.4f}", flush=True)

    for method, rs in reports.items():
        mean = replace(rs[0], error_rate=float(np.mean([r.error_rate for r in rs])),
                       confusion=np.mean([r.confusion for r in rs], axis=0))
        print()
        print(format_report(method, mean, [1, 2]))
        print(f"std over seeds: {np.std([r.error_rate for r in rs]):.4f}")


if __name__ == "__main__":
    main()
