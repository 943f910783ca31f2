"""The ``dimvar`` command line tool.

Exit codes: 0 when every certified row passes, 1 when any row fails,
2 on configuration or domain errors.  Subcommands that only transform
data (variation, decompose, body-invariants, operator-run) exit 0 on
success.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from dimvar import bodies, experiments, operators
from dimvar.dyadic import decompose
from dimvar.grids import read_field, write_field
from dimvar.paths import path_from_csv
from dimvar.variation import vr_exact


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_csv(path, header, rows):
    fh, close = _open_out(path)
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    finally:
        if close:
            fh.close()


def _cmd_variation(args) -> int:
    path = path_from_csv(args.path)
    report = vr_exact(path, args.order)
    _write_csv(args.out, ["order", "value"],
               [[repr(float(report.order)), repr(float(report.value))]])
    return 0


def _cmd_decompose(args) -> int:
    intervals = decompose(args.lo, args.hi)
    _write_csv(args.out, ["n", "m", "k", "lo", "hi"],
               [[iv.n, iv.m, iv.k, repr(float(iv.lo)), repr(float(iv.hi))]
                for iv in intervals])
    return 0


def _cmd_body_invariants(args) -> int:
    body, seed = bodies.body_from_file(args.bodyfile)
    data = bodies.invariants_sigma_q(body, samples=args.samples, seed=seed)
    se = data.mc_stderr
    _write_csv(args.out,
               ["volume", "volume_stderr", "L", "L_stderr", "sigma_inv",
                "sigma_inv_stderr", "Q", "Q_stderr"],
               [[repr(float(data.volume)), repr(float(se.get("volume", 0.0))),
                 repr(float(data.L)), repr(float(se.get("L", 0.0))),
                 repr(float(data.sigma_inv)),
                 repr(float(se.get("sigma_inv", 0.0))),
                 repr(float(data.Q)), repr(float(se.get("Q", 0.0)))]])
    return 0


def _parse_dims(text):
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.replace(",", " ").split()]


def _cmd_certify_multiplier(args) -> int:
    rows = experiments.certify_multiplier_table(args.body,
                                                _parse_dims(args.dims),
                                                args.eps)
    header = ["d", "xi_id", "r1", "r2", "r3", "minsum_max", "decay_C",
              "diff_sum_slope"]
    _write_csv(args.out, header,
               [[row["d"], row["xi_id"]]
                + [repr(float(row[k])) for k in header[2:]] for row in rows])
    ratio_cap = experiments.THRESHOLDS["multiplier-ratio-bound"].value
    minsum_cap = experiments.THRESHOLDS["dyadic-min-sum-bound"].value
    ok = all(row["r1"] <= ratio_cap and row["r2"] <= ratio_cap
             and row["r3"] <= ratio_cap and row["minsum_max"] <= minsum_cap
             for row in rows)
    return 0 if ok else 1


def _cmd_operator_run(args) -> int:
    field = read_field(args.field)
    if args.op == "average":
        if args.body is None or args.t is None:
            raise ValueError("op average needs --body and --t")
        body = experiments._body_for(args.body, field.d)
        out = operators.average_mt(field, body, args.t)
    elif args.op == "poisson":
        if args.t is None:
            raise ValueError("op poisson needs --t")
        out = operators.poisson_apply(field, args.t)
    elif args.op == "band":
        if args.n is None:
            raise ValueError("op band needs --n")
        out = operators.littlewood_paley_band(field, args.n, L=args.scale)
    elif args.op == "g":
        out = operators.g_function(field)
    elif args.op == "sphere":
        if args.t is None:
            raise ValueError("op sphere needs --t")
        out = operators.spherical_mean(field, args.t)
    else:
        raise ValueError(f"unknown operator {args.op!r}")
    if args.out is None and args.dump_csv is None:
        raise ValueError("give --out and/or --dump-csv")
    if args.out is not None:
        write_field(args.out, out)
    if args.dump_csv is not None:
        flat = out.data.reshape(-1)
        _write_csv(args.dump_csv, ["point", "re", "im"],
                   [[i, repr(float(v.real)), repr(float(v.imag))]
                    for i, v in enumerate(flat)])
    return 0


def _finish_report(rows, cfg, t0: float) -> int:
    out = cfg.out
    fmt = cfg.fmt or "csv"
    if out is None:
        raise ValueError("give --out (or an out= entry in [common])")
    experiments.emit_report(rows, out, fmt=fmt)
    failed = [row for row in rows if not row.passed]
    elapsed = time.perf_counter() - t0
    print(f"{len(rows)} rows, {len(failed)} failing, {elapsed:.1f}s "
          f"-> {out}", file=sys.stderr)
    for row in failed:
        print(f"FAIL {row.experiment} {row.row_id}: "
              f"{row.measured!r} > {row.threshold!r} ({row.threshold_name})",
              file=sys.stderr)
    return 1 if failed else 0


def _cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    cfg = experiments.load_config(args.config, seed=args.seed, out=args.out,
                                  fmt=args.format)
    rows = []
    if cfg.sweep is None and cfg.lacunary is None:
        raise ValueError("config has neither [sweep] nor [lacunary]")
    if cfg.sweep is not None:
        rows += experiments.run_dimension_sweep(cfg)
    if cfg.lacunary is not None:
        rows += experiments.run_lacunary_sweep(cfg)
    if cfg.decay is not None:
        rows += experiments.run_decay_certification(cfg)
    return _finish_report(rows, cfg, t0)


def _cmd_transfer(args) -> int:
    t0 = time.perf_counter()
    cfg = experiments.load_config(args.config, seed=args.seed, out=args.out,
                                  fmt=args.format)
    rows = experiments.run_transference_demo(cfg)
    return _finish_report(rows, cfg, t0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dimvar",
        description="variation seminorms and body-average experiments")
    parser.add_argument("--list-thresholds", action="store_true",
                        help="print the pass/fail threshold registry and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("variation", help="r-variation of a sampled path")
    p.add_argument("path", help="CSV file with header t,re[,im]")
    p.add_argument("--order", type=float, default=2.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_variation)

    p = sub.add_parser("decompose", help="dyadic cover of an interval")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("body-invariants",
                       help="volume and isotropic invariants of a body file")
    p.add_argument("bodyfile")
    p.add_argument("--samples", type=int, default=1 << 18)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_body_invariants)

    p = sub.add_parser("certify-multiplier",
                       help="scale-invariant multiplier ratio table")
    p.add_argument("--body", required=True, choices=["b1", "b2", "binf"])
    p.add_argument("--dims", required=True,
                   help="range A..B or a space/comma list")
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_certify_multiplier)

    p = sub.add_parser("operator-run",
                       help="apply one spectral operator to a stored field")
    p.add_argument("field", help="binary field file")
    p.add_argument("--op", required=True,
                   choices=["average", "poisson", "band", "g", "sphere"])
    p.add_argument("--body", choices=["b2", "binf"], default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.add_argument("--dump-csv", default=None)
    p.set_defaults(func=_cmd_operator_run)

    for name, func, blurb in (
            ("sweep", _cmd_sweep,
             "dimension/lacunary sweeps and decay certification"),
            ("transfer", _cmd_transfer,
             "windowed-average identity demo on the torus")):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=["csv", "jsonl"], default=None)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.list_thresholds:
        for name, entry in experiments.THRESHOLDS.items():
            print(f"{name},{entry.value!r},{entry.note}")
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: missing subcommand", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
