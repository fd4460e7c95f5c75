"""Consensus time for N=5 agents on a 5x5 grid, exact vs noisy reference."""

import argparse

from markov_consensus import ScenarioSweep, run_ensemble

SCENARIOS = {
    "xi_r = 1": {},
    "xi_r ~ N(1, 0.02) [variance]": {"noise_var": 0.02},
    "xi_r ~ N(1, 0.02^2) [std]": {"noise_var": 0.02, "noise_parameter": "std"},
}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    for label, episode in SCENARIOS.items():
        (row,) = run_ensemble(ScenarioSweep(agents=(5,), sides=(5,), runs=args.runs, base_seed=args.seed, episode=episode))
        print(f"{label:32s} {row.mean_tc_s:9.1f} +/- {row.std_tc_s:8.1f} s   (unconverged: {row.unconverged})")


if __name__ == "__main__":
    main()
