"""C4 coincidences caused by three-pair SPDC emission.

The oracle pushes |l> or |r> through the full circuit with deterministic
whole-beam bit flips on 1'' and/or 3, then sums detector-count probabilities
over every output occupation vector.  Terms that share per-beam photon
numbers interfere, so this is not the same as adding term-by-term
probabilities.

For comparison, the module also carries the published per-state values and
hand-written states.  :func:`termwise_coefficient` evaluates those written
states one Fock term at a time, which is how the published tables were built.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .experiment import (
    REGISTRY,
    ClickMode,
    DetectorModel,
    EmissionKind,
    MultifoldPolicy,
    build_circuit,
    detector_count_distribution,
    source_state,
    tally_from_counts,
)
from .fock import FockState, ModeLabel
from .protocol import FOUR_STATES, PureQubit

MEASUREMENT_STAGE = ("HWP2", "HWP3", "Pv-", "RPBS")


class FlipConfig(enum.Enum):
    NONE = "none"
    BEAM1 = "beam1''"
    BEAM3 = "beam3"
    BOTH = "both"

    @property
    def flags(self) -> tuple[bool, bool]:
        return {
            FlipConfig.NONE: (False, False),
            FlipConfig.BEAM1: (True, False),
            FlipConfig.BEAM3: (False, True),
            FlipConfig.BOTH: (True, True),
        }[self]

    def weight(self, eta: float) -> float:
        return {
            FlipConfig.NONE: (1 - eta) ** 2,
            FlipConfig.BEAM1: eta * (1 - eta),
            FlipConfig.BEAM3: eta * (1 - eta),
            FlipConfig.BOTH: eta ** 2,
        }[self]


# state ids follow the published table order
STATE_IDS = ("r0", "r1", "r3", "rb", "l0", "l1", "l3", "lb")
_STATE_PARTS = {
    "r0": (EmissionKind.THREE_PAIR_R, FlipConfig.NONE),
    "r1": (EmissionKind.THREE_PAIR_R, FlipConfig.BEAM1),
    "r3": (EmissionKind.THREE_PAIR_R, FlipConfig.BEAM3),
    "rb": (EmissionKind.THREE_PAIR_R, FlipConfig.BOTH),
    "l0": (EmissionKind.THREE_PAIR_L, FlipConfig.NONE),
    "l1": (EmissionKind.THREE_PAIR_L, FlipConfig.BEAM1),
    "l3": (EmissionKind.THREE_PAIR_L, FlipConfig.BEAM3),
    "lb": (EmissionKind.THREE_PAIR_L, FlipConfig.BOTH),
}

# published four-state averages, in units of xi^4
PAPER_AVERAGES = {
    "r0": Fraction(3, 16), "r1": Fraction(1, 16), "r3": Fraction(1, 16),
    "rb": Fraction(17, 96), "l0": Fraction(5, 24), "l1": Fraction(1, 12),
    "l3": Fraction(1, 12), "lb": Fraction(5, 24),
}
# published per-input values (only given for r0)
PAPER_PER_INPUT = {
    ("r0", 0): Fraction(1, 24), ("r0", 1): Fraction(1, 24),
    ("r0", 2): Fraction(7, 48), ("r0", 3): Fraction(7, 48),
}
# r0 at alpha = beta = 1/sqrt2, term by term; term 1 is printed as xi^2/48
PAPER_R0_TERMS = (Fraction(1, 48), Fraction(1, 48), Fraction(1, 24), Fraction(1, 24),
                  Fraction(1, 96), Fraction(1, 96), Fraction(0), Fraction(0))
PAPER_R0_TERM1_EXPONENT = 2
PAPER_BRACKETS = (Fraction(19, 48), Fraction(7, 24), Fraction(17, 48))


@dataclass(frozen=True)
class ThreePairInput:
    kind: EmissionKind
    alpha: complex
    beta: complex
    flips: FlipConfig = FlipConfig.NONE

    def __post_init__(self):
        if self.kind is EmissionKind.TWO_PAIR:
            raise ValueError("three-pair input needs a three-pair emission")
        if not math.isclose(abs(self.alpha) ** 2 + abs(self.beta) ** 2, 1.0, abs_tol=1e-12):
            raise ValueError("|alpha|^2 + |beta|^2 must be 1")

    @classmethod
    def from_state_id(cls, state_id: str, alpha: complex, beta: complex) -> "ThreePairInput":
        kind, flips = _STATE_PARTS[state_id]
        return cls(kind, alpha, beta, flips)

    @property
    def qubit(self) -> PureQubit:
        return PureQubit.from_amplitudes(self.alpha, self.beta)


@dataclass(frozen=True)
class C4Result:
    coeff_paper_bound: float  # coefficient of xi^4 with clicks linearised to n*xi
    value_paper_bound: float
    value_exact: float
    xi: float

    @property
    def coeff_exact(self) -> float:
        return self.value_exact / self.xi ** 4


@lru_cache(maxsize=256)
def _output_counts(kind: EmissionKind, gamma: float, phi: float, flags: tuple[bool, bool]):
    circ = build_circuit(gamma, phi, flips=flags)
    return detector_count_distribution(circ.evolve(source_state(kind)))


def _c4_leading(counts) -> float:
    return math.fsum(w * k0 * k2 * k3 * k4 for (k0, _, k2, k3, k4), w in counts.items())


def three_pair_c4_probability(inp: ThreePairInput, det: DetectorModel | None = None) -> C4Result:
    """C4 probability of one three-pair input, by full Fock enumeration.

    Conditioned on the emission and on the flip configuration.  The
    linearised coefficient keeps only the xi^4 term, which is the same under
    either multifold policy.
    """
    det = det or DetectorModel()
    q = inp.qubit
    counts = _output_counts(inp.kind, q.gamma, q.phi, inp.flips.flags)
    pb = DetectorModel(det.xi, ClickMode.PAPER_BOUND, det.multifold_policy)
    ex = DetectorModel(det.xi, ClickMode.EXACT, det.multifold_policy)
    return C4Result(
        coeff_paper_bound=_c4_leading(counts),
        value_paper_bound=tally_from_counts(counts, pb).n4,
        value_exact=tally_from_counts(counts, ex).n4,
        xi=det.xi,
    )


def four_state_inputs(state_id: str) -> list[ThreePairInput]:
    return [ThreePairInput.from_state_id(state_id, *q.alpha_beta) for q in FOUR_STATES]


def four_state_average(state_id: str, det: DetectorModel | None = None) -> C4Result:
    rs = [three_pair_c4_probability(i, det) for i in four_state_inputs(state_id)]
    xi = rs[0].xi
    return C4Result(
        sum(r.coeff_paper_bound for r in rs) / 4,
        sum(r.value_paper_bound for r in rs) / 4,
        sum(r.value_exact for r in rs) / 4,
        xi,
    )


def oracle_brackets() -> tuple[float, float, float]:
    """(no-flip, one-flip, both-flip) coefficients from the oracle's averages."""
    a = {s: four_state_average(s).coeff_paper_bound for s in STATE_IDS}
    return (a["r0"] + a["l0"], a["r1"] + a["r3"] + a["l1"] + a["l3"], a["rb"] + a["lb"])


def as_fraction(x: float, max_den: int = 100000, tol: float = 1e-12) -> Fraction | None:
    """Exact rational behind ``x`` if one with a small denominator exists."""
    f = Fraction(x).limit_denominator(max_den)
    return f if abs(float(f) - x) <= tol else None


# -- the published hand-written states on beams (0, I1, 2', 3'') ---------------
# Beam 0 is written in the heralding basis: H reaches D0, V is blocked by Ph.
def _ket(s: str) -> tuple[int, int]:
    return {"0": (0, 0), "H": (1, 0), "V": (0, 1), "2H": (2, 0), "2V": (0, 2),
            "HV": (1, 1)}[s]


def _written_terms(state_id: str, a: complex, b: complex) -> list[tuple[complex, tuple[str, ...]]]:
    r2 = math.sqrt(2)
    table = {
        "r0": [
            (a * a, ("2H", "2H", "H", "H")), (b * b, ("2H", "V", "2V", "V")),
            (r2 * a * b, ("2H", "H", "HV", "H")), (r2 * a * b, ("2H", "HV", "V", "V")),
            (r2 * a * b, ("HV", "2H", "H", "H")), (-r2 * a * b, ("HV", "V", "2V", "V")),
            (b * b - a * a, ("HV", "H", "HV", "H")), (b * b - a * a, ("HV", "HV", "V", "V")),
        ],
        "r1": [(r2 * a * b, ("2H", "HV", "V", "V")), (b * b - a * a, ("HV", "HV", "V", "V"))],
        "r3": [(r2 * a * b, ("2H", "H", "V", "HV")), (b * b - a * a, ("HV", "H", "V", "HV"))],
        "rb": [
            (a * a, ("2H", "V", "H", "2V")), (b * b, ("2H", "H", "2V", "H")),
            (r2 * a * b, ("2H", "V", "HV", "V")), (r2 * a * b, ("2H", "H", "V", "HV")),
            (a * b, ("HV", "V", "H", "2V")), (-a * b, ("HV", "H", "2V", "H")),
            (b * b - a * a, ("HV", "V", "HV", "V")), (b * b - a * a, ("HV", "H", "V", "HV")),
        ],
        "l0": [(a, ("H", "H", "2H", "2H")), (a, ("H", "HV", "H", "HV")),
               (b, ("H", "V", "HV", "HV")), (b, ("H", "2V", "V", "2V"))],
        "l1": [(a, ("H", "HV", "H", "HV")), (b, ("H", "HV", "HV", "H"))],
        "l3": [(a, ("H", "HV", "H", "HV")), (b, ("H", "H", "HV", "HV"))],
        "lb": [(a, ("H", "2V", "2H", "V")), (a, ("H", "HV", "H", "HV")),
               (b, ("H", "HV", "HV", "H")), (b, ("H", "2H", "V", "2H"))],
    }
    return [(c / math.sqrt(6), kets) for c, kets in table[state_id]]


def written_term_states(state_id: str, q: PureQubit) -> list[FockState]:
    """The hand-written state as a list of single-term Fock states."""
    a, b = q.alpha_beta
    out = []
    for amp, kets in _written_terms(state_id, a, b):
        occ = [0] * len(REGISTRY)
        for beam, ket in zip(("0", "I1", "2'", "3''"), kets):
            h, v = _ket(ket)
            occ[REGISTRY.index(ModeLabel(beam, "H"))] = h
            occ[REGISTRY.index(ModeLabel(beam, "V"))] = v
        out.append(FockState(REGISTRY, {tuple(occ): amp}))
    return out


def _measure(state: FockState, q: PureQubit) -> FockState:
    circ = build_circuit(q.gamma, q.phi, flips=(False, False))
    for el in circ.elements:
        if el.name in MEASUREMENT_STAGE:
            state = el.apply(state)
    return state


def termwise_coefficient(state_id: str, q: PureQubit) -> list[float]:
    """Linearised C4 coefficient of each written term, evaluated on its own."""
    return [_c4_leading(detector_count_distribution(_measure(t, q)))
            for t in written_term_states(state_id, q)]


def written_state_coefficient(state_id: str, q: PureQubit) -> float:
    """Linearised C4 coefficient of the written state taken as one coherent state."""
    total = FockState.empty(REGISTRY)
    for t in written_term_states(state_id, q):
        total = total + t
    return _c4_leading(detector_count_distribution(_measure(total, q)))


def circuit_pre_measurement(state_id: str, q: PureQubit) -> FockState:
    """Circuit state just before HWP2/HWP3/Pv-/RPBS, keeping only 4-fold-capable terms."""
    kind, flips = _STATE_PARTS[state_id]
    circ = build_circuit(q.gamma, q.phi, flips=flips.flags)
    s = source_state(kind)
    for el in circ.elements:
        if el.name not in MEASUREMENT_STAGE:
            s = el.apply(s)
    idx = {b: REGISTRY.beam_indices(b) for b in ("I1", "2'", "3''")}
    d0 = REGISTRY.index(ModeLabel("0", "H"))
    return s.filter(lambda occ: occ[d0] > 0 and all(occ[i] + occ[j] > 0 for i, j in idx.values()))


def transcription_mismatches(state_id: str, q: PureQubit, tol: float = 1e-10) -> list[str]:
    """Occupations where the written state and the circuit disagree in magnitude."""
    written = {}
    for t in written_term_states(state_id, q):
        for occ, amp in t.terms.items():
            written[occ] = written.get(occ, 0) + amp
    circuit = dict(circuit_pre_measurement(state_id, q).terms)
    bad = []
    for occ in sorted(set(written) | set(circuit)):
        w, c = abs(written.get(occ, 0)), abs(circuit.get(occ, 0))
        if abs(w - c) > tol:
            label = ",".join(f"{m}:{n}" for m, n in zip(REGISTRY.modes, occ) if n)
            bad.append(f"{label} written={w:.6g} circuit={c:.6g}")
    return bad

