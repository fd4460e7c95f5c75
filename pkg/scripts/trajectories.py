"""Information-state trajectories for single runs (2 agents on 3x3, 5 agents on 10x10)."""

import argparse

from markov_consensus import EpisodeConfig, run_episode

CASES = {"n2_c3": (2, 3), "n5_c10": (5, 10)}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prefix", default="trajectory")
    args = p.parse_args()
    for name, (n, c) in CASES.items():
        res = run_episode(EpisodeConfig(c=c, N=n, seed=args.seed, record_history=True))
        path = f"{args.prefix}_{name}.csv"
        res.write_history_csv(path)
        print(f"{name}: T_c = {res.consensus_time_s} s -> {path}")


if __name__ == "__main__":
    main()
