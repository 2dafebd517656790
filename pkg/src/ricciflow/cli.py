"""Command-line front end: run scenarios, fit grid ladders, list checks.

Exit codes follow the CI contract: 0 when every check passed, 1 when a
check failed, 2 on configuration, parse, or runtime errors.  The output
directory comes from --out, which the RFL_OUT environment variable
overrides.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

from . import scenario as scn
from .exceptions import RicciFlowError, ScenarioError


def bundled_names() -> list[str]:
    root = resources.files("ricciflow") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario(arg: str) -> dict:
    """Load a scenario from a file path or a bundled scenario name."""
    path = Path(arg)
    if path.exists():
        return scn.load_scenario(path)
    if _NAMEISH(arg):
        res = resources.files("ricciflow") / "scenarios" / f"{arg}.json"
        if res.is_file():
            data = json.loads(res.read_text())
            scn.validate_scenario(data, origin=f"bundled:{arg}")
            return data
        raise ScenarioError(
            f"{arg}: no such file, and no bundled scenario by that name"
            f" (bundled: {', '.join(bundled_names())})"
        )
    raise ScenarioError(f"{arg}: no such file")


def _NAMEISH(arg: str) -> bool:
    return scn._NAME_RE.match(arg) is not None


def _out_dir(args) -> Path:
    env = os.environ.get("RFL_OUT")
    return Path(env) if env else Path(args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ricciflow",
        description="Scenario-driven flow runs, soliton certificates, "
        "and convergence ladders.",
    )
    parser.add_argument(
        "--tolerance-scale",
        type=float,
        default=1.0,
        help="global multiplier applied to check tolerances (default 1.0)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write artifacts")
    run.add_argument("scenario", help="scenario file path or bundled name")
    run.add_argument(
        "--out",
        default="reports",
        help="output directory (env RFL_OUT overrides; default ./reports)",
    )

    ladder = sub.add_parser(
        "ladder", help="re-run a scenario across grids and fit orders"
    )
    ladder.add_argument("scenario", help="scenario file path or bundled name")
    ladder.add_argument(
        "--grids",
        required=True,
        help="comma-separated resolutions, at least 3 (e.g. 32,64,128)",
    )
    ladder.add_argument(
        "--min-order",
        type=float,
        default=1.8,
        help="minimum acceptable fitted convergence order (default 1.8)",
    )
    ladder.add_argument(
        "--out",
        default="reports",
        help="output directory (env RFL_OUT overrides; default ./reports)",
    )

    sub.add_parser("list-checks", help="print the check registry and exit")
    return parser


def _parse_grids(text: str) -> list[int]:
    try:
        grids = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ScenarioError(f"--grids: {text!r} is not a comma-separated "
                            "list of integers") from exc
    return grids


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "list-checks":
        print(scn.registry_table())
        print()
        print("bundled scenarios:")
        for name in bundled_names():
            print(f"  {name}")
        return 0

    try:
        scenario = resolve_scenario(args.scenario)
        if args.command == "run":
            run = scn.run_scenario(
                scenario, _out_dir(args), tolerance_scale=args.tolerance_scale
            )
            print(scn.format_summary(run))
            print(f"artifacts: {run.out_dir}")
            return 0 if run.passed else 1
        if args.command == "ladder":
            out = scn.run_ladder(
                scenario,
                _parse_grids(args.grids),
                _out_dir(args),
                min_order=args.min_order,
                tolerance_scale=args.tolerance_scale,
            )
            print(scn.format_ladder(out))
            return 0 if out["passed"] else 1
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except RicciFlowError as err:
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
