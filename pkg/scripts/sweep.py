"""Full (N, c) sweep: stats CSV, exponential fit, and the plateau check."""

import argparse
import json
from pathlib import Path

from markov_consensus import ScenarioSweep, fit_exponential, run_ensemble
from markov_consensus.ensemble import write_stats_csv

HERE = Path(__file__).parent


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=HERE / "full_sweep.json")
    p.add_argument("--out", default="sweep_stats.csv")
    p.add_argument("--runs", type=int, help="override runs per scenario")
    p.add_argument("--parallel", default="auto")
    args = p.parse_args()

    data = json.loads(Path(args.config).read_text())
    if args.runs:
        data["runs"] = args.runs
    rows = run_ensemble(ScenarioSweep.from_dict(data), parallel=args.parallel)
    write_stats_csv(rows, args.out)

    fit = fit_exponential(rows)
    print(json.dumps(fit.to_dict()))
    mu_min = min(r.mean_tc_s for r in rows)
    print(f"{'N':>3} {'c':>3} {'density':>8} {'mu':>9} {'sigma':>9} {'mu/min':>7}")
    for r in sorted(rows, key=lambda r: r.density):
        print(f"{r.N:3d} {r.c:3d} {r.density:8.4f} {r.mean_tc_s:9.1f} {r.std_tc_s:9.1f} {r.mean_tc_s / mu_min:7.2f}")


if __name__ == "__main__":
    main()
