"""Closed-form error rates, three-pair bounds, Fig. 2 datasets and the
published-vs-oracle comparison report."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .protocol import AverageMode, check_eta

FIG2_P_VALUES = (0.01, 0.005, 0.002, 0.001)
FIG2_HEADER = ("eta", "e0_bloch", "e0_fourstate", "ec_bloch", "ec_fourstate", "ec_prime")
PAPER_BRACKETS = (Fraction(19, 48), Fraction(7, 24), Fraction(17, 48))
LAMBDA2_CONSTANT = Fraction(1, 16)


def eta_from_epsilon(eps):
    """Flip rate of a dashed-box channel with leak ``eps``; keeps Fractions exact."""
    if eps < 0:
        raise ValueError("epsilon must be non-negative")
    return eps / (1 + eps)


def e0(eta: float, mode: AverageMode | str = AverageMode.BLOCH) -> float:
    """Direct-transmission error rate."""
    check_eta(eta)
    mode = AverageMode.parse(mode)
    return 2 * eta / 3 if mode is AverageMode.BLOCH else eta / 2


def ec(eta: float, mode: AverageMode | str = AverageMode.BLOCH) -> float:
    """Error rate of accepted qubits with the rejection code."""
    check_eta(eta)
    mode = AverageMode.parse(mode)
    frac = eta ** 2 / ((1 - eta) ** 2 + eta ** 2)
    return (2 / 3 if mode is AverageMode.BLOCH else 0.5) * frac


def ec_from_epsilon(eps: float) -> float:
    """Bloch-averaged coded error rate written in terms of the box leak."""
    return (2 / 3) * eps ** 2 / (1 + eps ** 2)


def e0_from_epsilon(eps: float) -> float:
    return 2 * eps / (3 * (1 + eps))


@dataclass(frozen=True)
class BoundParams:
    p: float
    xi: float
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must lie in [0, 1), got {self.p}")
        if not 0.0 < self.xi <= 1.0:
            raise ValueError(f"xi must lie in (0, 1], got {self.xi}")
        check_eta(self.eta)


def lambda2(params: BoundParams) -> float:
    """Two-pair C4 probability, xi^4 eta^2 p^2 / 16."""
    return float(LAMBDA2_CONSTANT) * params.xi ** 4 * params.eta ** 2 * params.p ** 2


def lambda3_bracket(eta: float, brackets: Sequence = PAPER_BRACKETS) -> float:
    b0, b1, b2 = (float(b) for b in brackets)
    return (1 - eta) ** 2 * b0 + (1 - eta) * eta * b1 + eta ** 2 * b2


def lambda3(params: BoundParams, brackets: Sequence = PAPER_BRACKETS) -> float:
    """Upper bound on the three-pair C4 probability."""
    return params.xi ** 4 * lambda3_bracket(params.eta, brackets) * 3 * params.p ** 3 / 4


def lambda_ratio(p: float, eta: float, brackets: Sequence = PAPER_BRACKETS) -> float:
    """lambda3 / lambda2; xi cancels."""
    if eta <= 0:
        raise ValueError("lambda3/lambda2 is undefined at eta = 0")
    return 12 * p * lambda3_bracket(eta, brackets) / eta ** 2


def ec_prime(
    params: BoundParams,
    mode: AverageMode | str = AverageMode.FOUR_STATE,
    brackets: Sequence = PAPER_BRACKETS,
) -> float:
    """Observed-error bound (1 + lambda3/lambda2) E_c."""
    if params.eta <= 0:
        raise ValueError("E_c' is undefined at eta = 0 (lambda2 vanishes)")
    return (1 + lambda3(params, brackets) / lambda2(params)) * ec(params.eta, mode)


@dataclass(frozen=True)
class CurvePoint:
    eta: float
    e0_bloch: float
    e0_fourstate: float
    ec_bloch: float
    ec_fourstate: float
    ec_prime: float


def default_grid(n: int = 100) -> np.ndarray:
    return np.linspace(0.005, 0.495, n)


def curve_point(eta: float, p: float, mode: AverageMode | str = AverageMode.FOUR_STATE) -> CurvePoint:
    if p == 0 or eta == 0:
        prime = ec(eta, mode)
    else:
        prime = ec_prime(BoundParams(p, 1.0, eta), mode)
    return CurvePoint(eta, e0(eta, "bloch"), e0(eta, "four-state"),
                      ec(eta, "bloch"), ec(eta, "four-state"), prime)


def fig2_dataset(p: float, grid: Iterable[float] | None = None) -> list[CurvePoint]:
    """E0, E_c (both averages) and the four-state E_c' bound on an eta grid."""
    if not 0 <= p < 1:
        raise ValueError(f"p must lie in [0, 1), got {p}")
    grid = default_grid() if grid is None else grid
    return [curve_point(float(eta), p) for eta in grid]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_rows(header: Sequence[str], rows: Iterable[Sequence], path: Path | None = None) -> str:
    """Write CSV text (``\\n`` line endings, floats via :func:`fmt`)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def curve_csv(points: Sequence[CurvePoint], path: Path | None = None) -> str:
    assert tuple(f.name for f in fields(CurvePoint)) == FIG2_HEADER
    return write_rows(FIG2_HEADER, (astuple(pt) for pt in points), path)


def advantage_interval(
    p: float, factor: float = 1 / 3, mode: AverageMode | str = AverageMode.FOUR_STATE
) -> tuple[float, float] | None:
    """Eta interval where E_c'(eta) < factor * E0(eta), endpoints by root finding.

    Returns None if the inequality holds nowhere on (0, 1/2).
    """
    def g(eta):
        return ec_prime(BoundParams(p, 1.0, eta), mode) - factor * e0(eta, mode)

    grid = np.linspace(1e-4, 0.5 - 1e-9, 4001)
    vals = np.array([g(x) for x in grid])
    neg = np.flatnonzero(vals < 0)
    if neg.size == 0:
        return None
    i, j = neg[0], neg[-1]
    if np.any(vals[i:j + 1] >= 0):
        raise ValueError("advantage region is not a single interval")
    lo = grid[i] if i == 0 else brentq(g, grid[i - 1], grid[i], xtol=1e-14)
    hi = grid[j] if j == len(grid) - 1 else brentq(g, grid[j], grid[j + 1], xtol=1e-14)
    return float(lo), float(hi)


# -- comparison report -------------------------------------------------------------
@dataclass(frozen=True)
class ReportRow:
    item: str
    paper: str
    oracle: str
    match: bool
    note: str = ""


def _frac_str(x) -> str:
    from .threepair import as_fraction

    if isinstance(x, Fraction):
        return str(x)
    f = as_fraction(float(x))
    return str(f) if f is not None else fmt(x)


def _row(item, paper, oracle, note="", tol=1e-12) -> ReportRow:
    return ReportRow(item, _frac_str(paper), _frac_str(oracle),
                     abs(float(paper) - float(oracle)) <= tol, note)


def diff_tables(paper: dict, oracle: dict, tol: float = 1e-12) -> list[ReportRow]:
    """Rows where two keyed tables disagree; identical inputs give []."""
    rows = []
    for k in sorted(set(paper) | set(oracle), key=str):
        a, b = paper.get(k), oracle.get(k)
        if a is None or b is None or abs(float(a) - float(b)) > tol:
            rows.append(ReportRow(str(k), "" if a is None else _frac_str(a),
                                  "" if b is None else _frac_str(b), False))
    return rows


def comparison_report() -> list[ReportRow]:
    """Published numbers next to oracle numbers; mismatches are kept, never replaced."""
    from . import threepair as tp
    from .experiment import EmissionKind, build_circuit, run_exact
    from .protocol import FOUR_STATES, coded_error_rate, direct_error_rate

    rows: list[ReportRow] = []
    q_plus = FOUR_STATES[2]

    # first table: r0 at alpha = beta = 1/sqrt2
    terms = tp.termwise_coefficient("r0", q_plus)
    for k, (pv, ov) in enumerate(zip(tp.PAPER_R0_TERMS, terms), 1):
        note = "printed as xi^2/48" if k == 1 else ""
        rows.append(_row(f"r0(1,1) term {k} [termwise]", pv, ov, note))
    paper_sum = sum(tp.PAPER_R0_TERMS)
    rows.append(_row("r0(1,1) sum [paper arithmetic]", Fraction(7, 48), paper_sum))
    rows.append(_row("r0(1,1) sum [termwise]", Fraction(7, 48), sum(terms)))
    rows.append(_row("r0(1,1) [coherent oracle]", Fraction(7, 48),
                     tp.three_pair_c4_probability(tp.ThreePairInput.from_state_id(
                         "r0", *q_plus.alpha_beta)).coeff_paper_bound,
                     "interference between terms with equal per-beam photon numbers"))

    # per-input values stated for r0
    for (sid, i), pv in tp.PAPER_PER_INPUT.items():
        a, b = FOUR_STATES[i].alpha_beta
        ov = tp.three_pair_c4_probability(tp.ThreePairInput.from_state_id(sid, a, b))
        rows.append(_row(f"{sid} input {i} [oracle]", pv, ov.coeff_paper_bound))
    mean = sum(tp.PAPER_PER_INPUT.values()) / 4
    rows.append(_row("r0 average vs mean of its stated inputs", tp.PAPER_AVERAGES["r0"], mean,
                     "published average is not the mean of the published inputs"))

    # second table
    for sid in tp.STATE_IDS:
        ov = tp.four_state_average(sid).coeff_paper_bound
        rows.append(_row(f"{sid} four-state average [oracle]", tp.PAPER_AVERAGES[sid], ov))
        tw = sum(sum(tp.termwise_coefficient(sid, q)) for q in FOUR_STATES) / 4
        rows.append(_row(f"{sid} four-state average [termwise on written state]",
                         tp.PAPER_AVERAGES[sid], tw))
        for q_i, q in enumerate(FOUR_STATES):
            bad = tp.transcription_mismatches(sid, q)
            if bad:
                rows.append(ReportRow(f"{sid} input {q_i} written state", "as printed",
                                      "circuit", False, "; ".join(bad)))

    # lambda3 brackets
    avg = tp.PAPER_AVERAGES
    table_sums = (avg["r0"] + avg["l0"], avg["r1"] + avg["r3"] + avg["l1"] + avg["l3"],
                  avg["rb"] + avg["lb"])
    oracle = tp.oracle_brackets()
    for name, pb, ts, ob in zip(("no-flip", "one-flip", "both-flip"), PAPER_BRACKETS,
                                table_sums, oracle):
        rows.append(_row(f"lambda3 {name} bracket [published table sum]", pb, ts))
        rows.append(_row(f"lambda3 {name} bracket [oracle]", pb, ob))

    # lambda2: the constant 1/16 is the both-flip acceptance, not the C4 probability
    both_acc = c4 = 0.0
    for q in FOUR_STATES:
        t = run_exact(EmissionKind.TWO_PAIR, build_circuit(q.gamma, q.phi, flips=(True, True)))
        both_acc += t.accepted / 4
        c4 += t.n4 / 4
    rows.append(_row("lambda2 constant vs both-flip accepted probability", LAMBDA2_CONSTANT,
                     both_acc))
    rows.append(_row("lambda2 constant vs both-flip C4 probability (four-state)",
                     LAMBDA2_CONSTANT, c4, "differs by the mean decoded error of a double flip"))

    # E0 / E_c conventions
    for eta in (0.1, 0.3):
        rows.append(_row(f"E0 bloch eta={eta}", 2 * eta / 3, direct_error_rate(eta, "bloch")))
        rows.append(_row(f"E0 four-state eta={eta}", eta / 2, direct_error_rate(eta, "four-state")))
        rows.append(_row(f"E_c bloch eta={eta}", ec(eta, "bloch"), coded_error_rate(eta, "bloch")))
        rows.append(_row(f"E_c four-state eta={eta}", ec(eta, "four-state"),
                         coded_error_rate(eta, "four-state")))
    return rows


def format_report(rows: Sequence[ReportRow]) -> str:
    w = max(len(r.item) for r in rows)
    out = []
    for r in rows:
        flag = "ok      " if r.match else "MISMATCH"
        line = f"{flag} {r.item:<{w}}  paper={r.paper:<10} oracle={r.oracle:<10}"
        out.append(line + (f"  ({r.note})" if r.note else ""))
    return "\n".join(out)
