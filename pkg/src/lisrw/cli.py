"""Command-line entry point: ``lisrw <subcommand> [flags]``.

Exit codes: 0 success, 1 internal error, 2 a checked assertion failed,
3 bad input.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
import traceback
from pathlib import Path

import numpy as np

from . import dyadic_lb, greedy_chain, lis_core, mc_harness, multiscale
from .walkgen import StepLaw, generate_walk

EXIT_OK, EXIT_INTERNAL, EXIT_ASSERT, EXIT_INPUT = 0, 1, 2, 3


class InputError(Exception):
    """Bad flags or a malformed input file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# -- flag parsing helpers --------------------------------------------------

def parse_sizes(text: str) -> list[int]:
    """``2^10..2^20`` expands to the powers of two in between; otherwise a comma list."""
    m = re.fullmatch(r"\s*2\^(\d+)\s*\.\.\s*2\^(\d+)\s*", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo > hi:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return [2**e for e in range(lo, hi + 1)]
    out = []
    for part in text.split(","):
        part = part.strip()
        p = re.fullmatch(r"2\^(\d+)", part)
        try:
            out.append(2 ** int(p.group(1)) if p else int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad size {part!r}") from None
    return out


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _law_text(text: str) -> str:
    try:
        StepLaw.parse(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None
    return text


def read_sequence(path, d: int = 1) -> np.ndarray:
    """Whitespace-separated decimals; with d > 1, one point of d values per line."""
    try:
        text = sys.stdin.read() if str(path) == "-" else Path(path).read_text()
    except OSError as err:
        raise InputError(f"cannot read {path}: {err.strerror}") from None
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        tokens = line.split()
        if not tokens:
            continue
        vals = []
        for tok in tokens:
            try:
                v = int(tok)
            except ValueError:
                try:
                    v = float(tok)
                except ValueError:
                    raise InputError(f"{path}: line {lineno}: not a number: {tok!r}") from None
                if not math.isfinite(v):
                    raise InputError(f"{path}: line {lineno}: non-finite value {tok!r}")
            vals.append(v)
        if d > 1 and len(vals) != d:
            raise InputError(f"{path}: line {lineno}: expected {d} values, got {len(vals)}")
        rows.append(vals)
    if d == 1:
        flat = [v for r in rows for v in r]
        return np.array(flat, dtype=np.int64 if all(isinstance(v, int) for v in flat) else float)
    return np.array(rows, dtype=float).reshape(len(rows), d)


# -- output ----------------------------------------------------------------

def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as err:
        raise InputError(f"cannot write {out}: {err.strerror}") from None


def _config(args) -> dict:
    skip = {"func", "input"}
    cfg = {k: v for k, v in vars(args).items() if k not in skip}
    if getattr(args, "input", None) is not None:
        cfg["input"] = str(args.input)
    return cfg


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _csv(args, header: list[str], rows: list[list]) -> str:
    lines = [f"# {k}={v}" for k, v in sorted(_config(args).items())]
    lines.append(",".join(header))
    lines += [",".join(str(x) for x in r) for r in rows]
    return "\n".join(lines) + "\n"


def _need_seed(args):
    if args.seed is None:
        raise InputError(f"{args.command} needs an explicit --seed")


def _law(args) -> StepLaw:
    try:
        return StepLaw.parse(args.law, args.d)
    except ValueError as err:
        raise InputError(str(err)) from None


# -- subcommands -------------------------------------------------------------

def _strict_ranks(values: np.ndarray) -> np.ndarray:
    """Distinct ranks whose non-decreasing chains are the strictly increasing chains of ``values``."""
    order = np.lexsort((-np.arange(len(values)), values))
    ranks = np.empty(len(values), dtype=np.int64)
    ranks[order] = np.arange(len(values))
    return ranks


def cmd_lis(args) -> int:
    if args.input is not None:
        data = read_sequence(args.input, args.d)
    else:
        if args.n is None:
            raise InputError("lis needs an input file or --n for a generated walk")
        _need_seed(args)
        w = generate_walk(_law(args), args.n, args.seed)
        data = w.values if args.d == 1 else w.positions
    if args.strict and args.d > 1:
        raise InputError("--strict is only defined for one-dimensional input")
    result = {"config": _config(args), "n_points": int(len(data))}
    if args.d == 1:
        seq = _strict_ranks(data) if args.strict else data
        result["lis"] = lis_core.lnds_length_1d(seq)
        if args.witness:
            result["witness"] = lis_core.lnds_chain_1d(seq).indices.tolist()
    else:
        result["lis"] = lis_core.lnds_length_dd(data)
        if args.witness:
            raise InputError("--witness is only available for one-dimensional input")
    status = EXIT_OK
    if args.oracle:
        if len(data) > lis_core.BRUTE_FORCE_MAX:
            raise InputError(f"--oracle needs at most {lis_core.BRUTE_FORCE_MAX} points")
        pts = _strict_ranks(data) if args.strict else data
        result["oracle"] = lis_core.lis_bruteforce(pts, args.d)
        if result["oracle"] != result["lis"]:
            status = EXIT_ASSERT
    if args.format == "csv":
        header = ["lis"] + (["oracle"] if args.oracle else [])
        text = _csv(args, header, [[result[h] for h in header]])
        if args.witness:
            text += "index\n" + "".join(f"{i}\n" for i in result["witness"])
    else:
        text = _dump(result)
    _emit(text, args.out)
    return status


def cmd_certify(args) -> int:
    _need_seed(args)
    law = _law(args)
    if law.d != 1 or not law.integer_valued:
        raise InputError("certify needs a one-dimensional integer-valued law")
    steps = 4 ** (args.m * args.k)
    if args.n is not None and args.n < steps:
        raise InputError(f"--n must be at least 4^(m*k) = {steps}")
    w = generate_walk(law, steps if args.n is None else args.n, args.seed)
    try:
        rep = multiscale.certified_upper_bound(w, args.m, args.k, args.gamma)
    except ValueError as err:
        raise InputError(str(err)) from None
    failed = [name for name, ok in (("local_time", rep.assumption_local_time), ("max", rep.assumption_max))
              if not ok]
    out = {"config": _config(args), "report": rep.to_dict(), "failed_assumptions": failed,
           "applicable": rep.applicable, "sound": rep.sound}
    _emit(_dump(out), args.out)
    if not rep.applicable or not rep.sound:
        return EXIT_ASSERT
    return EXIT_OK


def cmd_dyadic(args) -> int:
    _need_seed(args)
    if args.n is None:
        raise InputError("dyadic needs --n (target level 2^n)")
    if not 1 <= args.n <= 12:
        raise InputError("--n must lie in [1, 12]")
    sample = dyadic_lb.sample_constructions(args.n, args.trials, args.seed, cap=args.cap)
    agg = mc_harness.Aggregate.of(sample.sizes, n=args.n, trial_ids=sample.trial_ids.tolist())
    out = {
        "config": _config(args),
        "completed": agg.count,
        "censored": sample.censored,
        "mean": agg.mean if agg.count else None,
        "variance": agg.variance,
        "stderr": agg.stderr if agg.count else None,
        "expected_mean": dyadic_lb.expected_size(args.n),
        "expected_variance": dyadic_lb.size_variance(args.n),
    }
    if args.format == "csv":
        keys = ["completed", "censored", "mean", "variance", "stderr", "expected_mean"]
        _emit(_csv(args, keys, [[out[k] for k in keys]]), args.out)
    else:
        _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_chain(args) -> int:
    _need_seed(args)
    law = _law(args)
    out = {"config": _config(args)}
    if args.n is None:
        s = greedy_chain.orthant_exit_samples(law, args.trials, args.cap, args.seed, args.threads)
        out["censored"] = int(s.censored.sum())
        out["p_tau_1"] = float(np.mean(s.tau == 1))
        out["p_tau_1_exact"] = greedy_chain.one_step_entry_probability(law)
        window = (100, args.cap // 10)
        try:
            out["fit"] = s.fit(window).to_dict()
        except ValueError as err:
            raise InputError(f"cannot fit the survival curve: {err}") from None
    else:
        lengths = greedy_chain.chain_lengths(law, args.n, args.trials, args.seed, args.threads)
        agg = mc_harness.Aggregate.of(lengths, n=args.n)
        out.update(mean=agg.mean, variance=agg.variance, stderr=agg.stderr)
        if args.epsilon:
            tab = greedy_chain.chain_length_tail(law, args.n, args.epsilon, args.trials, args.seed,
                                                 threads=args.threads)
            out["tail"] = {"epsilons": list(tab.epsilons), "estimates": list(tab.estimates),
                           "c_hat": tab.c_hat}
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_scaling(args) -> int:
    _need_seed(args)
    if args.sizes is None:
        raise InputError("scaling needs --sizes")
    try:
        spec = mc_harness.ExperimentSpec(_law(args), tuple(args.sizes), args.trials, args.stat,
                                         args.seed, args.cap)
    except ValueError as err:
        raise InputError(str(err)) from None
    res = mc_harness.run_scaling(spec, threads=args.threads)
    report = mc_harness.report_dict(res)
    report["config"] = _config(args)
    status = EXIT_OK
    if args.slope_range is not None:
        lo, hi = args.slope_range
        fits = report["experiments"][0]["fits"]
        ok = bool(fits) and lo <= fits[0]["slope"] <= hi
        report["assertions"] = {"slope_range": [lo, hi], "passed": ok}
        status = EXIT_OK if ok else EXIT_ASSERT
    if args.format == "csv":
        text = "".join(f"# {k}={v}\n" for k, v in sorted(report["config"].items()))
        text += mc_harness.rows_csv(report)
    elif args.format == "svg":
        svg = mc_harness.render_plots(report)
        text = svg.replace("<svg ", f"<!-- {json.dumps(report['config'], sort_keys=True)} -->\n<svg ", 1)
    else:
        text = mc_harness.dumps(report)
    _emit(text, args.out)
    return status


def cmd_probe(args) -> int:
    _need_seed(args)
    law = _law(args)
    if law.d != 1:
        raise InputError("probes need a one-dimensional law")
    n = 10**4 if args.n is None else args.n
    out = {"config": {**_config(args), "n": n}}
    status = EXIT_OK
    if args.kind == "max":
        pr = mc_harness.max_concentration_probe(law, n, args.lam, args.trials, args.seed, args.threads)
        out["rows"] = [{"lam": r.lam, "tail": r.tail, "stderr": r.stderr, "inv_lam2": r.chebyshev}
                       for r in pr.rows]
        out["exp_fit"] = {"slope": pr.exp_slope, "r2": pr.exp_r2}
        ok = all(r.tail <= r.chebyshev + 3 * r.stderr for r in pr.rows if r.lam >= 1)
        out["maximal_inequality_holds"] = ok
        status = EXIT_OK if ok else EXIT_ASSERT
    elif args.kind == "petrov":
        out["rows"] = []
        for lam in args.lam:
            pr = mc_harness.petrov_probe(law, n, lam, args.trials, args.seed, threads=args.threads)
            out["rows"].append({"lam": lam, "sup": pr.sup, "argsup": pr.argsup, "c_hat": pr.c_hat})
    else:
        if args.m is None or args.N is None:
            raise InputError("the submult probe needs --m (walk length 4^m) and --N")
        try:
            pr = multiscale.submultiplicativity_probe(law, args.m, args.N, args.ell, args.trials,
                                                      args.seed, args.threads)
        except ValueError as err:
            raise InputError(str(err)) from None
        out.update(p_ell_n=pr.p_ell_n, p_n=pr.p_n, stderr=pr.stderr, holds=pr.holds)
        status = EXIT_OK if pr.holds else EXIT_ASSERT
    _emit(_dump(out), args.out)
    return status


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="lisrw", formatter_class=fmt,
                     description="Longest increasing subsequences of random walks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, law=True, seed=True, threads=True, out_formats=("json",)):
        if law:
            p.add_argument("--law", type=_law_text, default="simple", help="simple, lazy, uniform:a or normal")
            p.add_argument("--d", type=_positive, default=1, help="dimension")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="master seed, mandatory for generated walks")
        if threads:
            p.add_argument("--threads", type=_positive, default=1, help="worker threads")
        p.add_argument("--out", default=None, help="output file (stdout if omitted)")
        p.add_argument("--format", choices=out_formats, default=out_formats[0], help="output format")

    p = sub.add_parser("lis", formatter_class=fmt, help="exact LIS of a file or generated walk")
    p.add_argument("input", nargs="?", default=None, help="sequence file, '-' for stdin")
    p.add_argument("--n", type=_positive, default=None, help="steps of a generated walk")
    p.add_argument("--witness", action="store_true", help="also print one optimal chain")
    p.add_argument("--strict", action="store_true", help="strictly increasing variant")
    p.add_argument("--oracle", action="store_true", help="cross-check with brute force")
    common(p, threads=False, out_formats=("json", "csv"))
    p.set_defaults(func=cmd_lis)

    p = sub.add_parser("certify", formatter_class=fmt, help="certified product bound on one walk")
    p.add_argument("--m", type=_positive, required=True, help="number of scales")
    p.add_argument("--k", type=_positive, required=True, help="scale step")
    p.add_argument("--gamma", type=float, required=True, help="local time constant (>= 2)")
    p.add_argument("--n", type=_positive, default=None, help="walk steps (default 4^(m*k))")
    common(p, threads=False)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("dyadic", formatter_class=fmt, help="dyadic construction on stopped walks")
    p.add_argument("--n", type=int, default=None, help="walks stop at level 2^n")
    p.add_argument("--trials", type=_positive, default=1000, help="number of walks")
    p.add_argument("--cap", type=_positive, default=10**6, help="step cap per walk")
    common(p, law=False, threads=False, out_formats=("json", "csv"))
    p.set_defaults(func=cmd_dyadic)

    p = sub.add_parser("chain", formatter_class=fmt, help="greedy chains and orthant entrance times")
    p.add_argument("--n", type=_positive, default=None, help="chain length horizon (exit-time fit if omitted)")
    p.add_argument("--trials", type=_positive, default=10**5, help="number of walks")
    p.add_argument("--cap", type=_positive, default=10**5, help="entrance-time cap")
    p.add_argument("--epsilon", type=float, nargs="+", default=None, help="tail grid, needs --n")
    common(p)
    p.set_defaults(func=cmd_chain, d=2)

    p = sub.add_parser("scaling", formatter_class=fmt, help="scaling study of a statistic")
    p.add_argument("--stat", choices=mc_harness.STATISTICS, default="exact-lis", help="statistic")
    p.add_argument("--sizes", type=parse_sizes, default=None, help="e.g. 2^10..2^20 or 100,200,400")
    p.add_argument("--trials", type=_positive, default=200, help="trials per size")
    p.add_argument("--cap", type=_positive, default=10**6, help="step cap for stopped walks")
    p.add_argument("--slope-range", type=float, nargs=2, metavar=("LO", "HI"), default=None,
                   help="exit 2 unless the fitted slope lies in [LO, HI]")
    common(p, out_formats=("json", "csv", "svg"))
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("probe", formatter_class=fmt, help="concentration and submultiplicativity probes")
    p.add_argument("kind", choices=("max", "petrov", "submult"), help="which probe")
    p.add_argument("--n", type=_positive, default=None, help="walk steps (default 10000)")
    p.add_argument("--trials", type=_positive, default=10**5, help="number of walks")
    p.add_argument("--lam", type=float, nargs="+", default=[1.5, 2.0, 2.5, 3.0], help="lambda grid")
    p.add_argument("--m", type=_positive, default=None, help="submult: walk length 4^m")
    p.add_argument("--N", type=_positive, default=None, help="submult: threshold N")
    p.add_argument("--ell", type=_positive, default=2, help="submult: multiple of N")
    common(p)
    p.set_defaults(func=cmd_probe)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as err:
        print(f"lisrw {args.command}: error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
