"""Command-line interface: ``softgrand <command> [options]``.

Exit status is 0 on success, 2 for bad configuration or usage and 3 when a
numerical routine fails to converge.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys

from .errors import CodeFormatError, ConfigurationError, DesignError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _snr_args(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--esn0-db", type=_floats, help="Es/N0 in dB (comma list)")
    g.add_argument("--ebn0-db", type=_floats, help="Eb/N0 in dB (comma list); needs the code rate")


def _code_args(p):
    p.add_argument("--code", default=None, help="builtin code name")
    p.add_argument("--code-file", default=None, help="parity-check matrix file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="softgrand", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design-quantizer", help="design a reliability quantizer and report it")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--flavor", choices=("heuristic", "uniform", "nonuniform"), default="nonuniform")
    _snr_args(p)
    _code_args(p)
    p.add_argument("--out", help="write the quantizer file here")

    p = sub.add_parser("simulate", help="Monte Carlo BLER sweep")
    _code_args(p)
    p.add_argument("--decoder", default="orbgrand")
    p.add_argument("--q", type=int)
    p.add_argument("--flavor", choices=("heuristic", "uniform", "nonuniform"), default="nonuniform")
    _snr_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-errors", type=int, default=300)
    p.add_argument("--max-trials", type=int, default=10_000_000)
    p.add_argument("--smax", type=float)
    p.add_argument("--smax-tail", type=float)
    p.add_argument("--budget", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--all-zero", action="store_true", help="transmit the all-zero codeword")
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("rates", help="capacity, quantized MI, LM-rate or ORBGRAND loss")
    p.add_argument("--metric", choices=("capacity", "mi", "lm", "loss"), default="capacity")
    _snr_args(p)
    _code_args(p)
    p.add_argument("--q", type=int)
    p.add_argument("--flavor", choices=("heuristic", "uniform", "nonuniform"), default="nonuniform")
    p.add_argument("--n", type=int, default=128, help="block length for the loss curve")
    p.add_argument("--out")

    p = sub.add_parser("order-stats", help="moments of ordered reliabilities")
    p.add_argument("--n", type=int, required=True)
    _snr_args(p)
    _code_args(p)
    p.add_argument("--out")

    p = sub.add_parser("smax", help="score distribution of the noise effect and s_max")
    _code_args(p)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, help="code dimension for --ebn0-db when no code is given")
    p.add_argument("--q", type=int, help="quantizer bits (omit for real-valued reliabilities)")
    p.add_argument("--flavor", choices=("heuristic", "uniform", "nonuniform"), default="heuristic")
    _snr_args(p)
    p.add_argument("--smax-tail", type=float, default=1e-5)
    p.add_argument("--out")

    p = sub.add_parser("code", help="build, inspect or save a code")
    _code_args(p)
    p.add_argument("--list", action="store_true", help="list builtin codes")
    p.add_argument("--out", help="save H (and G) to this file")
    return parser


def _resolve_code(args, required=True):
    from .codebook import builtin_code, load_code

    if args.code_file:
        return load_code(args.code_file)
    if args.code:
        return builtin_code(args.code)
    if required:
        raise ConfigurationError("give --code or --code-file")
    return None


def _esn0_points(args, code=None) -> list[float]:
    if args.esn0_db is not None:
        return list(args.esn0_db)
    if code is None:
        raise ConfigurationError("--ebn0-db needs --code or --code-file to fix the rate")
    return [eb + 10.0 * math.log10(2.0 * code.k / code.n) for eb in args.ebn0_db]


def _emit(rows: list[list], header: list[str], out) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    w.writerows(rows)
    sys.stdout.write(buf.getvalue())


def _sigma(es_db: float) -> float:
    return 10.0 ** (-es_db / 20.0)


def cmd_design(args) -> int:
    from .quantizer import design_quantizer
    from .rates import QuantizedMetric, bpsk_capacity, lm_rate

    code = _resolve_code(args, required=False)
    points = _esn0_points(args, code)
    for es in points:
        sigma = _sigma(es)
        quant = design_quantizer(sigma, args.q, args.flavor)
        v1 = quant.values[0]
        print(f"# {args.flavor} q={args.q} Es/N0={es:.4g} dB sigma={sigma:.6g}")
        print(f"capacity        {bpsk_capacity(sigma):.4f}")
        print("boundaries      " + " ".join(f"{b:.4f}" for b in quant.boundaries))
        print("outputs/v1      " + " ".join(f"{v / v1:.4f}" for v in quant.values))
        print("weights         " + " ".join(str(w) for w in quant.weights))
        print(f"R_LM real       {lm_rate(sigma, QuantizedMetric(quant.boundaries, quant.values)):.4f}")
        print(f"R_LM integer    {lm_rate(sigma, quant):.4f}")
        if args.out:
            path = args.out if len(points) == 1 else f"{args.out}.{es:g}"
            with open(path, "w") as fh:
                fh.write(quant.export())
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .harness import CSV_COLUMNS, SimConfig, run_sweep

    if args.code is None and args.code_file is None:
        args.code = "bch-31-16"
    code = _resolve_code(args)
    if args.ebn0_db is not None:
        ebs = list(args.ebn0_db)
    else:
        ebs = [es - 10.0 * math.log10(2.0 * code.k / code.n) for es in args.esn0_db]
    config = SimConfig(
        code=args.code or "", code_file=args.code_file, decoder=args.decoder, q=args.q,
        flavor=args.flavor, ebn0_db=tuple(ebs), seed=args.seed, min_errors=args.min_errors,
        max_trials=args.max_trials, smax=args.smax, smax_tail=args.smax_tail, budget=args.budget,
        workers=args.workers, all_zero=args.all_zero,
    )
    records = run_sweep(config, args.out)
    if not args.out:
        w = csv.DictWriter(sys.stdout, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for rec in records:
            w.writerow(rec.row())
    return EXIT_OK


def cmd_rates(args) -> int:
    from .quantizer import design_quantizer
    from .rates import bpsk_capacity, lm_rate, orbgrand_loss, quantized_mi

    code = _resolve_code(args, required=False)
    rows = []
    for es in _esn0_points(args, code):
        sigma = _sigma(es)
        if args.metric == "capacity":
            value = bpsk_capacity(sigma)
        elif args.metric == "loss":
            value = orbgrand_loss(sigma, args.n)
        else:
            if args.q is None:
                if args.metric == "mi":
                    raise ConfigurationError("--metric mi needs --q")
                value = lm_rate(sigma, "llr")
            else:
                quant = design_quantizer(sigma, args.q, args.flavor)
                value = quantized_mi(sigma, quant) if args.metric == "mi" else lm_rate(sigma, quant)
        rows.append([f"{es:.9g}", f"{value:.9g}"])
    _emit(rows, ["esn0_db", args.metric], args.out)
    return EXIT_OK


def cmd_order_stats(args) -> int:
    from .analysis import order_stat_moments, write_order_stats_csv

    code = _resolve_code(args, required=False)
    points = _esn0_points(args, code)
    for es in points:
        curve = order_stat_moments(_sigma(es), args.n)
        if args.out:
            write_order_stats_csv(curve, args.out if len(points) == 1 else f"{args.out}.{es:g}")
        rows = [[r + 1, f"{curve.e_l[r]:.9g}", f"{curve.var_l[r]:.9g}"] for r in range(curve.n)]
        _emit(rows, ["r", "e_l", "var_l"], None)
    return EXIT_OK


def cmd_smax(args) -> int:
    from .analysis import select_smax, true_score_distribution, write_score_csv
    from .quantizer import design_quantizer

    code = _resolve_code(args, required=False)
    n = args.n if args.n is not None else (code.n if code is not None else None)
    if n is None:
        raise ConfigurationError("give --n or a code")
    if code is None and args.k is not None:
        from types import SimpleNamespace

        code = SimpleNamespace(n=n, k=args.k)
    for es in _esn0_points(args, code):
        sigma = _sigma(es)
        quant = design_quantizer(sigma, args.q, args.flavor) if args.q else None
        dist = true_score_distribution(sigma, n, quant)
        s = select_smax(dist, args.smax_tail)
        if args.out:
            write_score_csv(dist, args.out)
        print(f"esn0_db={es:.6g} n={n} target_tail={args.smax_tail:g} smax={s}")
    return EXIT_OK


def cmd_code(args) -> int:
    from .codebook import builtin_names, save_code

    if args.list:
        for name in builtin_names():
            print(name)
        return EXIT_OK
    code = _resolve_code(args)
    print(f"name={code.name} n={code.n} k={code.k} redundancy={code.redundancy} "
          f"generator={'yes' if code.G is not None else 'no'}")
    if args.out:
        save_code(code, args.out)
    return EXIT_OK


COMMANDS = {
    "design-quantizer": cmd_design,
    "simulate": cmd_simulate,
    "rates": cmd_rates,
    "order-stats": cmd_order_stats,
    "smax": cmd_smax,
    "code": cmd_code,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"softgrand: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigurationError, DesignError, CodeFormatError, ValueError, OSError) as exc:
        print(f"softgrand: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
