"""Command-line driver: sweeps, Fig. 2 datasets, the three-pair table,
Monte Carlo runs and the invariant suite.  Data goes to files, summaries to
stdout."""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import analysis as an
from . import threepair as tp
from .experiment import ClickMode, DetectorModel
from .protocol import AverageMode, coded_error_rate, direct_error_rate

SWEEP_HEADER = ("eta", "e0_bloch", "e0_fourstate", "ec_bloch", "ec_fourstate", "accept_prob")
THREE_PAIR_HEADER = ("state", "alpha_re", "alpha_im", "beta_re", "beta_im", "flip_config",
                     "paper_coeff", "oracle_coeff_paperbound", "oracle_coeff_exact")
MC_HEADER = ("n1", "n4", "rejected", "trials", "threefold", "error_rate", "error_stderr")


# -- argument types ---------------------------------------------------------------
def rational(s: str) -> Fraction:
    try:
        return Fraction(s.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number or ratio: {s!r}") from None


def eta_arg(s: str) -> Fraction:
    x = rational(s)
    if not 0 <= x < Fraction(1, 2):
        raise argparse.ArgumentTypeError(f"flip rate must lie in [0, 1/2), got {s}")
    return x


def epsilon_arg(s: str) -> Fraction:
    x = rational(s)
    if not 0 <= x < 1:
        raise argparse.ArgumentTypeError(f"leak must lie in [0, 1) so that eta < 1/2, got {s}")
    return x


def p_arg(s: str) -> float:
    x = rational(s)
    if not 0 < x < 1:
        raise argparse.ArgumentTypeError(f"pair probability must lie in (0, 1), got {s}")
    return float(x)


def xi_arg(s: str) -> float:
    x = rational(s)
    if not 0 < x <= 1:
        raise argparse.ArgumentTypeError(f"efficiency must lie in (0, 1], got {s}")
    return float(x)


def positive_int(s: str) -> int:
    try:
        n = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {s}")
    return n


def seed_arg(s: str) -> int:
    try:
        n = int(s, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if not 0 <= n < 2 ** 64:
        raise argparse.ArgumentTypeError(f"must be a 64-bit unsigned integer, got {s}")
    return n


def _add_noise(p: argparse.ArgumentParser, required: bool = False):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--eta", type=eta_arg, help="channel flip rate, e.g. 0.1 or 1/10")
    g.add_argument("--epsilon", type=epsilon_arg, help="flip-box leak, e.g. 1/9")


def _eta(args) -> Fraction | None:
    if args.epsilon is not None:
        return an.eta_from_epsilon(args.epsilon)
    return args.eta


def _detector(args) -> DetectorModel:
    return DetectorModel(args.xi, ClickMode(args.detector_mode))


def _out(args, default: str) -> Path:
    path = Path(args.out or default)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# -- commands ------------------------------------------------------------------
def cmd_protocol_sweep(args) -> int:
    eta = _eta(args)
    grid = [float(eta)] if eta is not None else [float(x) for x in an.default_grid()]
    rows = []
    for e in grid:
        rows.append((e, direct_error_rate(e, "bloch"), direct_error_rate(e, "four-state"),
                     coded_error_rate(e, "bloch"), coded_error_rate(e, "four-state"),
                     (1 - e) ** 2 + e ** 2))
    path = _out(args, "protocol_sweep.csv")
    an.write_rows(SWEEP_HEADER, rows, path)
    mode = AverageMode.parse(args.average)
    col = 1 if mode is AverageMode.BLOCH else 2
    last = rows[-1]
    print(f"protocol-sweep: {len(rows)} rows -> {path}; average={mode.value}; "
          f"eta={an.fmt(last[0])} E0={an.fmt(last[col])} Ec={an.fmt(last[col + 2])}")
    return 0


def cmd_fig2(args) -> int:
    ps = [args.p] if args.p is not None else list(an.FIG2_P_VALUES)
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    for p in ps:
        path = outdir / f"fig2_p{p!r}.csv"
        an.curve_csv(an.fig2_dataset(p), path)
        iv = an.advantage_interval(p)
        where = "nowhere" if iv is None else f"eta in ({iv[0]:.4f}, {iv[1]:.4f})"
        print(f"fig2 p={p!r} -> {path}; E_c' < E0/3 {where}")
    return 0


def _cell(x: float) -> str:
    return an.fmt(x)


def three_pair_rows(xi: float = 1.0) -> list[tuple]:
    det = DetectorModel(xi)
    rows = []
    for sid in tp.STATE_IDS:
        for i, inp in enumerate(tp.four_state_inputs(sid)):
            r = tp.three_pair_c4_probability(inp, det)
            paper = tp.PAPER_PER_INPUT.get((sid, i))
            rows.append((sid, _cell(inp.alpha.real), _cell(inp.alpha.imag), _cell(inp.beta.real),
                         _cell(inp.beta.imag), inp.flips.value, "" if paper is None else str(paper),
                         _cell(r.coeff_paper_bound), _cell(r.coeff_exact)))
    for sid in tp.STATE_IDS:
        r = tp.four_state_average(sid, det)
        flips = tp.four_state_inputs(sid)[0].flips.value
        rows.append((sid, "", "", "", "", flips, str(tp.PAPER_AVERAGES[sid]),
                     _cell(r.coeff_paper_bound), _cell(r.coeff_exact)))
    return rows


def cmd_three_pair_table(args) -> int:
    path = _out(args, "three_pair_table.csv")
    an.write_rows(THREE_PAIR_HEADER, three_pair_rows(args.xi), path)
    report = an.comparison_report()
    print(an.format_report(report))
    bad = sum(not r.match for r in report)
    print(f"three-pair-table -> {path}; {bad} of {len(report)} report rows disagree with the oracle")
    return 0


def cmd_monte_carlo(args) -> int:
    from .montecarlo import run_monte_carlo

    eta = _eta(args)
    eps = float(eta / (1 - eta))
    t = run_monte_carlo(eps, _detector(args), args.trials, args.seed, p=args.p,
                        average=args.average, shards=args.shards)
    path = _out(args, "monte_carlo.csv")
    an.write_rows(MC_HEADER, [(t.n1, t.n4, t.rejected, t.trials, t.threefold,
                               float(t.error_rate), float(t.error_stderr))], path)
    print(f"monte-carlo: N1={t.n1} N4={t.n4} rejected={t.rejected} trials={t.trials} "
          f"error={t.error_rate:.6g} +- {t.error_stderr:.2g} -> {path}")
    return 0


def cmd_verify(args) -> int:
    from .verify import run_verify

    results = run_verify(args.seed)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"verify: {len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qerc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, noise_required=False):
        _add_noise(p, noise_required)
        p.add_argument("--p", type=p_arg, default=None, help="pair-emission probability")
        p.add_argument("--xi", type=xi_arg, default=1.0, help="detector efficiency")
        p.add_argument("--trials", type=positive_int, default=10 ** 6)
        p.add_argument("--seed", type=seed_arg, default=0)
        p.add_argument("--shards", type=positive_int, default=1)
        p.add_argument("--average", choices=[m.value for m in AverageMode], default="bloch")
        p.add_argument("--detector-mode", choices=[m.value for m in ClickMode], default="exact")
        p.add_argument("--out", default=None, help="output file (directory for fig2)")
        return p

    common(sub.add_parser("protocol-sweep", help="E0 and E_c by exact enumeration")).set_defaults(
        fn=cmd_protocol_sweep)
    common(sub.add_parser("fig2", help="E0, E_c and E_c' curves, one file per p")).set_defaults(
        fn=cmd_fig2)
    common(sub.add_parser("three-pair-table", help="three-pair C4 oracle vs published values")
           ).set_defaults(fn=cmd_three_pair_table)
    common(sub.add_parser("monte-carlo", help="sampled C1/C4 counts; omit --p for two-pair only"),
           noise_required=True).set_defaults(fn=cmd_monte_carlo)
    common(sub.add_parser("verify", help="run the invariant suite")).set_defaults(fn=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
