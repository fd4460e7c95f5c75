"""Command-line entry point: simulate, ensemble, fit, verify.

Exit codes: 0 success, 1 configuration/input error or a failed ``verify``
check, 2 consensus not reached within ``--max-steps`` (``simulate`` only).
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from markov_consensus import __version__
from markov_consensus.chain_analysis import COMPOSITE_CAP, verify_report
from markov_consensus.engine import EpisodeConfig, run_episode
from markov_consensus.ensemble import (
    ScenarioSweep,
    fit_exponential,
    fit_to_json,
    read_stats_csv,
    run_ensemble,
    stats_to_csv,
)
from markov_consensus.errors import ConfigError

EXIT_OK, EXIT_ERROR, EXIT_NOT_REACHED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _feature_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"feature nodes must be a comma list of integers, got {text!r}") from None


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_ERROR


def _write_text(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_simulate(args) -> int:
    defaults = EpisodeConfig.__dataclass_fields__
    overrides = {
        "alpha": args.alpha,
        "epsilon": args.epsilon,
        "feature_nodes": args.feature_nodes,
        "r_comm": args.comm_radius,
        "noise_var": args.noise_var,
        "noise_parameter": args.noise_parameter,
        "noise_per_agent": args.noise_per_agent or None,
        "max_steps": args.max_steps,
        "d": args.spacing,
        "step_seconds": args.step_seconds,
    }
    kw = {k: v for k, v in overrides.items() if v is not None and k in defaults}
    try:
        cfg = EpisodeConfig(c=args.grid_dim, N=args.agents, seed=args.seed, record_history=args.history is not None, **kw)
        res = run_episode(cfg)
        _write_text(args.out, res.to_json() + "\n")
        if args.history is not None:
            res.write_history_csv(args.history)
    except ConfigError as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(f"{exc.filename}: {exc.strerror}")
    return EXIT_OK if res.reached else EXIT_NOT_REACHED


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


def cmd_ensemble(args) -> int:
    try:
        data = json.loads(Path(args.config).read_text())
    except OSError as exc:
        return _fail(f"{args.config}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        return _fail(f"{args.config}: malformed JSON ({exc.msg} at line {exc.lineno})")
    if not isinstance(data, dict):
        return _fail(f"{args.config}: top level must be an object")
    try:
        sweep = ScenarioSweep.from_dict(data)
        rows = run_ensemble(sweep, parallel=args.parallel)
    except ConfigError as exc:
        return _fail(f"{args.config}: {exc}")
    out = Path(args.out)
    try:
        out.write_text(stats_to_csv(rows))
        manifest = {
            "tool": "markov-consensus",
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config": sweep.to_dict(),
            "outputs": [str(out)],
        }
        _manifest_path(out).write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        return _fail(f"{exc.filename}: {exc.strerror}")
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        rows = read_stats_csv(args.stats)
        fit = fit_exponential(rows)
    except OSError as exc:
        return _fail(f"{args.stats}: {exc.strerror}")
    except (ConfigError, KeyError, ValueError) as exc:
        return _fail(f"{args.stats}: {exc}")
    print(fit_to_json(fit))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        rep = verify_report(args.grid_dim, args.agents, cap=args.cap, seed=args.seed)
    except ConfigError as exc:
        return _fail(str(exc))
    print(rep.to_json() if args.json else rep.to_text())
    return EXIT_OK if rep.passed else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="markov-consensus", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run one seeded episode")
    s.add_argument("--agents", type=int, required=True)
    s.add_argument("--grid-dim", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--alpha", type=float)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--feature-nodes", type=_feature_list, help='comma list, e.g. "4,5,6"; "" for none')
    s.add_argument("--comm-radius", type=float)
    s.add_argument("--noise-var", type=float)
    s.add_argument("--noise-parameter", choices=("variance", "std"))
    s.add_argument("--noise-per-agent", action="store_true")
    s.add_argument("--max-steps", type=int)
    s.add_argument("--spacing", type=float)
    s.add_argument("--step-seconds", type=float)
    s.add_argument("--history", metavar="PATH", help="write per-step CSV history")
    s.add_argument("--out", metavar="PATH", help="result JSON (default: stdout)")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("ensemble", help="Monte Carlo sweep over (N, c)")
    e.add_argument("--config", required=True, metavar="JSON")
    e.add_argument("--out", required=True, metavar="CSV")
    e.add_argument("--parallel", default="1", help="worker count or 'auto'")
    e.set_defaults(func=cmd_ensemble)

    f = sub.add_parser("fit", help="fit mu = a*exp(b*density) to a stats CSV")
    f.add_argument("--stats", required=True, metavar="CSV")
    f.set_defaults(func=cmd_fit)

    v = sub.add_parser("verify", help="numerical Markov-chain checks")
    v.add_argument("--grid-dim", type=int, required=True)
    v.add_argument("--agents", type=int, required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--cap", type=int, default=COMPOSITE_CAP)
    v.add_argument("--json", action="store_true", help="print the report as JSON")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
