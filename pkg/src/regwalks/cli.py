"""Command-line entry point.

Exit codes: 0 success, 1 configuration/usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, RegwalksError
from .experiment import TASKS, ExperimentConfig, run
from .graphs import generate_regular, load_graph, serialize_graph
from .plotting import PLOT_KINDS, emit_plot, read_csv_text
from .rmt import predictions_csv, predictions_table
from .spectral import spectral_data, spectrum_csv
from .walks import (
    BRUTE_FORCE_BUDGET,
    BRUTE_FORCE_MAX_T,
    brute_force_count,
    build_hashimoto,
    count_periodic_exact,
    walk_counts_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _write(text: str | bytes, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text.decode() if isinstance(text, bytes) else text)
        return
    Path(out).write_bytes(text if isinstance(text, bytes) else text.encode())


def _read_graph(path: str):
    return load_graph(Path(path).read_bytes())


def cmd_generate(args) -> int:
    g = generate_regular(args.V, args.d, args.seed, sampler=args.sampler)
    _write(serialize_graph(g), args.out)
    return EXIT_OK


def cmd_walks(args) -> int:
    g = _read_graph(args.graph)
    counts = count_periodic_exact(build_hashimoto(g), args.tmax)
    _write(walk_counts_csv(counts), args.out)
    if args.oracle:
        mismatches = 0
        for t in range(1, args.tmax + 1):
            if t > BRUTE_FORCE_MAX_T or (g.d - 1) ** t * g.V * g.d > BRUTE_FORCE_BUDGET:
                print(f"oracle: t={t} skipped (enumeration budget)", file=sys.stderr)
                continue
            bf = brute_force_count(g, t)
            ok = bf == counts.P[t]
            mismatches += not ok
            print(f"oracle: t={t} exact={counts.P[t]} brute={bf} {'ok' if ok else 'MISMATCH'}",
                  file=sys.stderr)
        if mismatches:
            return EXIT_RUNTIME
    return EXIT_OK


def cmd_spectrum(args) -> int:
    _write(spectrum_csv(spectral_data(_read_graph(args.graph))), args.out)
    return EXIT_OK


_OVERRIDES = {
    "V": "V", "d": "d", "trials": "n_trials", "tmax": "t_max", "seed": "base_seed",
    "workers": "workers", "out": "outputs", "shard_size": "shard_size",
    "window": "smoothing_window",
}


def cmd_run(args) -> int:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for flag, key in _OVERRIDES.items():
        val = getattr(args, flag)
        if val is not None:
            data[key] = val
    if args.tasks is not None:
        data["tasks"] = [t for t in args.tasks.split(",") if t]
    if args.no_plots:
        data["plots"] = False
    cfg = ExperimentConfig.from_dict(data)
    manifest = run(cfg)
    n_fail = len(manifest.get("failed_trials", []))
    if n_fail:
        print(f"warning: {n_fail} trial(s) dropped", file=sys.stderr)
    print(f"wrote {len(manifest['files'])} file(s) to {cfg.outputs}", file=sys.stderr)
    return EXIT_OK


def cmd_predict(args) -> int:
    if args.d < 3 or args.tau_min <= 0 or args.tau_max < args.tau_min or args.points < 1:
        raise ConfigError("need d >= 3, 0 < tau-min <= tau-max, points >= 1")
    taus = np.geomspace(args.tau_min, args.tau_max, args.points)
    _write(predictions_csv(predictions_table(taus, args.d, args.tol)), args.out)
    return EXIT_OK


def cmd_plot(args) -> int:
    tables = [read_csv_text(Path(p).read_text()) for p in args.input]
    if args.kind == "collapse":
        if not args.d or len(args.d) != len(tables):
            raise ConfigError("collapse needs one --d per --input file")
        svg = emit_plot(dict(zip(args.d, tables)), "collapse")
    else:
        if len(tables) != 1:
            raise ConfigError(f"{args.kind} takes exactly one input table")
        svg = emit_plot(tables[0], args.kind, d=args.d[0] if args.d else None)
    _write(svg, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="regwalks", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="sample a random d-regular graph")
    g.add_argument("--V", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--sampler", default="auto", choices=["auto", "pairing", "steger_wormald"])
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    w = sub.add_parser("walks", help="exact non-backtracking periodic walk counts")
    w.add_argument("--graph", required=True)
    w.add_argument("--tmax", type=int, required=True)
    w.add_argument("--oracle", action="store_true", help="cross-check by brute-force enumeration")
    w.add_argument("--out")
    w.set_defaults(func=cmd_walks)

    s = sub.add_parser("spectrum", help="adjacency spectrum with R / Rc split and unfolding")
    s.add_argument("--graph", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_spectrum)

    r = sub.add_parser("run", help="ensemble experiment")
    r.add_argument("--config")
    r.add_argument("--V", type=int)
    r.add_argument("--d", type=int)
    r.add_argument("--trials", type=int)
    r.add_argument("--tmax", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--out")
    r.add_argument("--tasks", help=f"comma-separated subset of {','.join(TASKS)}")
    r.add_argument("--shard-size", dest="shard_size", type=int)
    r.add_argument("--window", type=int, help="centered moving-average width in t")
    r.add_argument("--no-plots", action="store_true")
    r.set_defaults(func=cmd_run)

    pr = sub.add_parser("predict", help="COE reference curves on a tau grid")
    pr.add_argument("--d", type=int, required=True)
    pr.add_argument("--tau-min", type=float, default=1e-4)
    pr.add_argument("--tau-max", type=float, default=10.0)
    pr.add_argument("--points", type=int, default=200)
    pr.add_argument("--tol", type=float, default=1e-10)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_predict)

    pl = sub.add_parser("plot", help="render a CSV table as SVG")
    pl.add_argument("--kind", required=True, choices=PLOT_KINDS)
    pl.add_argument("--input", nargs="+", required=True)
    pl.add_argument("--d", type=int, nargs="*")
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RegwalksError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
