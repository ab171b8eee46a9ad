"""Command-line entry points.

Subcommands::

    pnpfluid run <config> [--out DIR] [--until T] [--snapshot-every DT]
                          [--quiet] [--threads N]
    pnpfluid check <config>            validate and echo the resolved config
    pnpfluid diag <snapshot...>        recompute diagnostics rows from snapshots
    pnpfluid plot <run-dir> [--out DIR]
    pnpfluid oracle [--fast]           analytic validation suite

Failures exit nonzero with a machine-readable JSON error on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, PnpFluidError


def _fail(code: int, err_type: str, message: str, details=None) -> int:
    payload = {"error": err_type, "message": message}
    if details:
        payload["details"] = list(details)
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pnpfluid",
                                description="2D electrokinetic particle simulator")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run a simulation")
    pr.add_argument("config")
    pr.add_argument("--out", default=None, help="output directory")
    pr.add_argument("--until", type=float, default=None,
                    help="override run.t_end")
    pr.add_argument("--snapshot-every", type=float, default=None,
                    help="override snapshot cadence (time units)")
    pr.add_argument("--quiet", action="store_true")
    pr.add_argument("--threads", type=int, default=1,
                    help="FFT worker threads for the fast solvers")

    pc = sub.add_parser("check", help="validate a configuration")
    pc.add_argument("config")

    pd = sub.add_parser("diag", help="recompute diagnostics from snapshots")
    pd.add_argument("snapshots", nargs="+")
    pd.add_argument("--out", default=None, help="write CSV here instead of stdout")

    pp = sub.add_parser("plot", help="emit plots for a finished run")
    pp.add_argument("run_dir")
    pp.add_argument("--out", default=None)

    po = sub.add_parser("oracle", help="run the analytic validation suite")
    po.add_argument("--fast", action="store_true", help="smaller grids")
    return p


def cli_main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "diag":
            return _cmd_diag(args)
        if args.command == "plot":
            return _cmd_plot(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
    except ConfigError as exc:
        return _fail(2, "ConfigError", "invalid configuration", exc.violations)
    except PnpFluidError as exc:
        return _fail(3, type(exc).__name__, str(exc))
    except OSError as exc:
        return _fail(4, "IOError", str(exc))
    return 0


def _cmd_check(args) -> int:
    from .config import parse_config
    cfg = parse_config(args.config)
    sys.stdout.write(cfg.echo_yaml())
    return 0


def _cmd_run(args) -> int:
    from .config import parse_config
    from .stepper import run

    if args.threads and args.threads > 1:
        from . import solvers
        solvers.FFT_WORKERS = max(1, int(args.threads))
    cfg = parse_config(args.config)
    out = args.out or (Path(args.config).stem + ".out")
    result = run(cfg, out_dir=out, until=args.until,
                 snapshot_every=args.snapshot_every, quiet=args.quiet)
    if not args.quiet:
        print(f"status={result.status} steps={result.steps} "
              f"t={result.state.t:.6g} out={out}")
    if result.status == "error":
        return _fail(3, "RunError", result.error or "run aborted")
    return 0


def _cmd_diag(args) -> int:
    from . import snapshot_io
    from .stepper import ledger_row

    lines = []
    header = None
    for path in args.snapshots:
        state, ctx = snapshot_io.read_snapshot(path)
        row = ledger_row(state, ctx)
        if header is None:
            header = snapshot_io.csv_columns(len(state.N))
            lines.append(",".join(header))
        lines.append(",".join(snapshot_io.format_value(row[c]) for c in header))
    text = snapshot_io.CSV_EOL.join(lines) + snapshot_io.CSV_EOL
    if args.out:
        Path(args.out).write_text(text, newline="")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_plot(args) -> int:
    from .plots import plot_run
    written = plot_run(args.run_dir, out_dir=args.out)
    for w in written:
        print(w)
    return 0


def _cmd_oracle(args) -> int:
    from .validation import run_validation_suite
    ok = run_validation_suite(fast=args.fast, stream=sys.stdout)
    return 0 if ok else 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
