"""Command line: ``localis run``, ``localis verify`` and ``localis export``.

Exit codes: 0 success, 1 error (bad config, unknown suite, I/O), 2 verdict
failure (an experiment's expectation or an invariant did not hold).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .experiments import ConfigError, load_config, run_config, verify_report
from .formats import read_matrix, write_matrix_csv

OK, ERROR = 0, 1


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out or cfg.get("output") or Path("localis-out") / Path(args.config).stem)
    status, summary = run_config(cfg, out)
    print(json.dumps({"output": str(out), "status": status, **summary}, default=float, sort_keys=True))
    return status


def _cmd_verify(args) -> int:
    status, report = verify_report(args.suite)
    for prop in report["properties"]:
        mark = "PASS" if prop["pass"] else "FAIL"
        print(f"{mark}  {prop['suite']:<15} {prop['property']:<55} "
              f"residual={prop['residual']:.3e}  threshold={prop['threshold']:.1e}")
    print(f"{sum(p['pass'] for p in report['properties'])}/{len(report['properties'])} properties hold")
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return status


def _cmd_export(args) -> int:
    d = Path(args.field_dir)
    man_path = d / "field.json"
    if not man_path.exists():
        raise ConfigError(f"{d}: no field.json manifest found")
    man = json.loads(man_path.read_text())
    out = Path(args.out) if args.out else d / "csv"
    out.mkdir(parents=True, exist_ok=True)
    lattice = np.asarray(man["lattice"], float)
    with open(out / "lattice.csv", "w") as fh:
        fh.write(",".join(["index"] + [f"g{c}" for c in range(lattice.shape[1])]) + "\n")
        for j, g in enumerate(lattice):
            fh.write(",".join([str(j)] + [repr(float(c)) for c in g]) + "\n")
    for name in sorted(man["blocks"]):
        write_matrix_csv(out / (Path(name).stem + ".csv"), read_matrix(d / name))
    print(f"wrote {len(man['blocks'])} blocks to {out}")
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="localis", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("config", help="path to the experiment config")
    run.add_argument("--out", help="output directory (default: config 'output' key)")
    run.set_defaults(func=_cmd_run)

    ver = sub.add_parser("verify", help="run an invariant suite")
    ver.add_argument("suite", help="group, representation, localization, synthesis or all")
    ver.add_argument("--report", help="write the JSON report to this path")
    ver.set_defaults(func=_cmd_verify)

    exp = sub.add_parser("export", help="convert a saved field's binary blocks to CSV")
    exp.add_argument("field_dir")
    exp.add_argument("--csv", action="store_true", default=True, help="CSV output (the only format)")
    exp.add_argument("--out", help="output directory (default: <field-dir>/csv)")
    exp.set_defaults(func=_cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"localis: error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
