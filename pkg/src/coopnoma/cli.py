"""Command-line front end.

Exit codes: 0 success, 1 failed validation check, 2 configuration error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys

from . import __version__
from .channel import db_to_linear
from .experiment import ConfigError, dump_experiment, load_experiment, template
from .montecarlo import BracketError, run_capacity_search, run_outage_sweep
from .pairing import pairing_study
from .protocol import Scheme
from .validation import run_checks

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

OUTAGE_COLUMNS = ["scheme", "snr_db", "user_index", "outage", "ci_halfwidth", "trials", "seed"]
OVERALL_COLUMNS = ["scheme", "snr_db", "overall_outage", "ci_halfwidth", "product_form",
                   "trials", "seed"]
CAPACITY_COLUMNS = ["scheme", "snr_db", "capacity_bpcu", "target_outage", "tolerance"]
PAIRING_COLUMNS = ["partner_index", "mean_gap_exact", "mean_gap_predicted", "trials", "rho_db"]


def _db(x) -> str:
    return f"{x:.2f}"


def _prob(x) -> str:
    return f"{x:.6e}"


def _bits(x) -> str:
    return f"{x:.6f}"


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def outage_rows(est):
    rows = []
    for s, scheme in enumerate(est.schemes):
        for p, db in enumerate(est.snr_db):
            for u in range(est.failures.shape[2]):
                rows.append((scheme.value, float(db), u + 1, est.outage[s, p, u], est.halfwidth[s, p, u]))
    rows.sort(key=lambda r: r[:3])
    return [(name, _db(db), u, _prob(o), _prob(h), est.trials, est.seed)
            for name, db, u, o, h in rows]


def overall_rows(est):
    rows = []
    for s, scheme in enumerate(est.schemes):
        for p, db in enumerate(est.snr_db):
            rows.append((scheme.value, float(db), est.overall[s, p], est.overall_halfwidth[s, p],
                         est.overall_product[s, p]))
    rows.sort(key=lambda r: r[:2])
    return [(name, _db(db), _prob(o), _prob(h), _prob(q), est.trials, est.seed)
            for name, db, o, h, q in rows]


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load(args):
    exp = load_experiment(args.config) if args.config else None
    if exp is None:
        if getattr(args, "seed", None) is None:
            raise ConfigError("missing required key 'seed' (no --config given; pass --seed)")
        exp = template()
    schemes = tuple(args.scheme) if getattr(args, "scheme", None) else None
    return exp.with_overrides(seed=getattr(args, "seed", None), trials=getattr(args, "trials", None),
                              threads=getattr(args, "threads", None), schemes=schemes)


def cmd_outage_sweep(args) -> int:
    exp = _load(args)
    est = run_outage_sweep(exp.sweep_spec(), exp.threads)
    _write(args.out, render_csv(OUTAGE_COLUMNS, outage_rows(est)))
    if args.overall:
        _write(args.overall, render_csv(OVERALL_COLUMNS, overall_rows(est)))
    return EXIT_OK


def cmd_capacity_sweep(args) -> int:
    exp = _load(args)
    target = exp.capacity_target_outage if args.target_outage is None else args.target_outage
    rows = []
    for scheme in sorted(exp.schemes):
        for db in exp.snr_grid():
            try:
                est = run_capacity_search(
                    exp.system, Scheme(scheme), db, target, exp.capacity_trials, exp.seed,
                    (exp.capacity_rate_min, exp.capacity_rate_max), exp.capacity_tolerance,
                    exp.threads)
                cap = _bits(est.capacity)
            except BracketError as exc:
                logging.getLogger(__name__).warning("%s at %g dB: %s", scheme, db, exc)
                cap = "nan"
            rows.append((scheme, _db(db), cap, f"{target:g}", f"{exp.capacity_tolerance:g}"))
    _write(args.out, render_csv(CAPACITY_COLUMNS, rows))
    return EXIT_OK


def cmd_pairing_study(args) -> int:
    exp = _load(args)
    trials = exp.pairing_trials if args.trials is None else args.trials
    report = pairing_study(exp.pairing_num_users, float(db_to_linear(exp.pairing_rho_db)),
                           exp.pairing_p_m_sq, trials, exp.seed, exp.threads)
    rows = [(int(m), _bits(g), _bits(q), report.trials, _db(exp.pairing_rho_db))
            for m, g, q in zip(report.candidates, report.mean_gap, report.mean_gap_predicted)]
    _write(args.out, render_csv(PAIRING_COLUMNS, rows))
    return EXIT_OK


def cmd_validate(args) -> int:
    exp = _load(args)
    checks = run_checks(exp, exp.threads)
    lines = [c.line() for c in checks]
    failed = [c.name for c in checks if c.status == "FAIL"]
    lines.append(f"FAILED: {', '.join(failed)}" if failed else "all checks passed")
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_print_config(args) -> int:
    exp = load_experiment(args.config) if args.config else template()
    _write(args.out, dump_experiment(exp))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopnoma", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, run=True):
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="PATH", default="-")
        if run:
            p.add_argument("--seed", type=int)
            p.add_argument("--trials", type=int)
            p.add_argument("--threads", type=int, help="0 = one per CPU")
            p.add_argument("--scheme", action="append", choices=[s.value for s in Scheme])
        return p

    p = common(sub.add_parser("outage-sweep", help="outage probability versus SNR"))
    p.add_argument("--overall", metavar="PATH", help="also write overall (any-user) outage")
    p.set_defaults(func=cmd_outage_sweep)
    p = common(sub.add_parser("capacity-sweep", help="outage capacity versus SNR"))
    p.add_argument("--target-outage", type=float)
    p.set_defaults(func=cmd_capacity_sweep)
    common(sub.add_parser("pairing-study", help="NOMA-over-TDMA gain per partner")).set_defaults(
        func=cmd_pairing_study)
    common(sub.add_parser("validate", help="analytic-oracle checks")).set_defaults(func=cmd_validate)
    common(sub.add_parser("print-config", help="print a complete experiment file"),
           run=False).set_defaults(func=cmd_print_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
