"""Linear-optical SPDC realisation of the two-qubit bit-flip rejection code.

Beam layout (all modes H/V):

    0      heralding arm: Pv+(phi), HWP1, polarizer Ph, detector D0 on 0.H
    1, 2   enter PBS1 -> 1'' (gets 1.H, 2.V) and 2' (gets 2.H, 1.V)
    2'     HWP2 then PBS; D2 watches the transmitted port x0 = 2'.H
    1'', 3 flip boxes (or deterministic X flips) in place
    1'',3  enter PBS2 -> I1 (gets 1''.H, 3.V) and 3'' (gets 3.H, 1''.V)
    3''    HWP3 then PBS; D3 watches y0 = 3''.H
    I1     Pv-(-phi), rotated PBS; D1 on the transmitted port I1.H,
           D4 on the reflected port I1.V

Every element is a mode unitary (absorbed or unwatched photons simply stay
in unobserved modes), and all detection happens at the end in the Fock
basis, so outcome probabilities are incoherent sums over occupation vectors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .fock import (
    FockState,
    ModeLabel,
    ModeRegistry,
    OpticsError,
    apply_bit_flip,
    apply_creators,
    apply_hwp,
    apply_mode_unitary,
    apply_pbs,
    apply_phase_shift_v,
    beam_modes,
)

BEAMS = ("0", "1", "2", "3", "1''", "2'", "I1", "3''")
REGISTRY = ModeRegistry.from_beams(BEAMS)

DETECTORS = {
    "D0": ModeLabel("0", "H"),
    "D1": ModeLabel("I1", "H"),
    "D2": ModeLabel("2'", "H"),
    "D3": ModeLabel("3''", "H"),
    "D4": ModeLabel("I1", "V"),
}
DETECTOR_ORDER = ("D0", "D1", "D2", "D3", "D4")
DETECTOR_MODES = tuple(DETECTORS[d] for d in DETECTOR_ORDER)

# HWP2/HWP3 at -pi/4 send |+> to the transmitted (H) port and map
# |HV> -> (|2H> - |2V>)/sqrt(2).
HADAMARD_ANGLE = -math.pi / 4
SETTINGS = ((-math.pi / 2, -math.pi / 2), (-math.pi / 2, math.pi / 2),
            (math.pi / 2, -math.pi / 2), (math.pi / 2, math.pi / 2))


class ClickMode(enum.Enum):
    EXACT = "exact"
    PAPER_BOUND = "paper-bound"


class MultifoldPolicy(enum.Enum):
    FIVE_FOLD_AS_C4 = "five-fold-as-c4"
    DISCARD_FIVE_FOLD = "discard-five-fold"


class Event(enum.Enum):
    C1 = "C1"
    C4 = "C4"
    REJECT = "reject"


@dataclass(frozen=True)
class DetectorModel:
    xi: float = 1.0
    click_mode: ClickMode = ClickMode.EXACT
    multifold_policy: MultifoldPolicy = MultifoldPolicy.FIVE_FOLD_AS_C4

    def __post_init__(self):
        if not 0.0 < self.xi <= 1.0:
            raise ValueError(f"detector efficiency must lie in (0, 1], got {self.xi}")

    def click_probability(self, n: int) -> float:
        if n <= 0:
            return 0.0
        if self.click_mode is ClickMode.EXACT:
            return 1.0 - (1.0 - self.xi) ** n
        return min(n * self.xi, 1.0)


@dataclass(frozen=True)
class FlipBoxParams:
    """Dashed-box channel element: leak ``epsilon`` and V-phase ``theta``."""

    epsilon: float = 0.0
    theta: float = math.pi / 2
    deterministic: bool = True

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.deterministic and not any(
            math.isclose(self.theta, s * math.pi / 2) for s in (1, -1)
        ):
            raise ValueError(f"theta must be +pi/2 or -pi/2, got {self.theta}")

    @property
    def eta(self) -> float:
        return self.epsilon / (1.0 + self.epsilon)

    @property
    def plate_angle(self) -> float:
        return math.asin(math.sqrt(self.epsilon / (1.0 + self.epsilon)))

    def matrix(self) -> np.ndarray:
        """Closed-form single-photon map; column j is the image of H or V."""
        e = self.epsilon
        r = math.sqrt(e)
        s = 1.0 / math.sqrt(1.0 + e)
        return s * np.array(
            [[1.0, -r * np.exp(-1j * self.theta)],
             [r * np.exp(1j * self.theta), 1.0]],
            dtype=complex,
        )


def apply_flip_box(state: FockState, beam: str, params: FlipBoxParams) -> FockState:
    """Phase -theta on V, E plate at asin(sqrt(eps/(1+eps))), phase +theta on V."""
    state = apply_phase_shift_v(state, beam, -params.theta)
    state = apply_hwp(state, beam, params.plate_angle)
    return apply_phase_shift_v(state, beam, params.theta)


# -- sources -------------------------------------------------------------------
class EmissionKind(enum.Enum):
    TWO_PAIR = "two-pair"
    THREE_PAIR_L = "three-pair-l"
    THREE_PAIR_R = "three-pair-r"


def _pair(a: str, b: str):
    return [(1.0, [ModeLabel(a, "H"), ModeLabel(b, "H")]),
            (1.0, [ModeLabel(a, "V"), ModeLabel(b, "V")])]


@lru_cache(maxsize=None)
def source_state(kind: EmissionKind) -> FockState:
    """Normalised pair state; left pairs on beams (0, 1), right pairs on (2, 3)."""
    n_left, n_right = {
        EmissionKind.TWO_PAIR: (1, 1),
        EmissionKind.THREE_PAIR_L: (1, 2),
        EmissionKind.THREE_PAIR_R: (2, 1),
    }[kind]
    s = FockState.vacuum(REGISTRY)
    for _ in range(n_left):
        s = apply_creators(s, _pair("0", "1"))
    for _ in range(n_right):
        s = apply_creators(s, _pair("2", "3"))
    return s.normalize()


@dataclass(frozen=True)
class SourceEmission:
    kind: EmissionKind
    probability: float

    @property
    def state(self) -> FockState:
        return source_state(self.kind)


def emissions(p: float) -> list[SourceEmission]:
    """Emissions that can give 4-fold coincidences, with their probabilities."""
    return [
        SourceEmission(EmissionKind.TWO_PAIR, p ** 2),
        SourceEmission(EmissionKind.THREE_PAIR_L, 3 * p ** 3 / 4),
        SourceEmission(EmissionKind.THREE_PAIR_R, 3 * p ** 3 / 4),
    ]


# -- circuit -------------------------------------------------------------------
@dataclass(frozen=True)
class Element:
    name: str
    op: str
    beams: tuple[str, ...]
    value: object = None

    def apply(self, state: FockState) -> FockState:
        if self.op == "hwp":
            return apply_hwp(state, self.beams[0], self.value)
        if self.op == "phase_v":
            return apply_phase_shift_v(state, self.beams[0], self.value)
        if self.op == "pbs":
            return apply_pbs(state, *self.beams)
        if self.op == "flip_box":
            return apply_flip_box(state, self.beams[0], self.value)
        if self.op == "bit_flip":
            return apply_bit_flip(state, self.beams[0]) if self.value else state
        if self.op == "rpbs":
            return apply_mode_unitary(state, rpbs_matrix(self.value), beam_modes(self.beams[0]))
        if self.op == "polarizer":
            # the blocked V photons stay in an unwatched mode
            return state
        raise OpticsError(f"unknown element {self.op}")


def rpbs_matrix(gamma: float) -> np.ndarray:
    """Send cos(g/2)H + sin(g/2)V to the H port and sin(g/2)H - cos(g/2)V to V."""
    c, s = math.cos(gamma / 2), math.sin(gamma / 2)
    return np.array([[c, s], [s, -c]], dtype=complex)


@dataclass(frozen=True)
class Circuit:
    gamma: float
    phi: float
    elements: tuple[Element, ...]
    detector: DetectorModel = field(default_factory=DetectorModel)
    registry: ModeRegistry = REGISTRY
    detectors: tuple[tuple[str, ModeLabel], ...] = tuple(DETECTORS.items())
    acceptance: str = "beams I0, x0 and y0 each contain exactly one photon"

    def evolve(self, state: FockState) -> FockState:
        if state.registry != self.registry:
            raise OpticsError("state registry does not match circuit")
        for el in self.elements:
            state = el.apply(state)
        return state

    def with_channel(self, channel: Sequence[Element]) -> "Circuit":
        els = [e for e in self.elements if e.op not in ("flip_box", "bit_flip")]
        at = next(i for i, e in enumerate(els) if e.name == "PBS2")
        return Circuit(self.gamma, self.phi, tuple(els[:at]) + tuple(channel) + tuple(els[at:]),
                       self.detector)


def build_circuit(
    gamma: float,
    phi: float,
    boxes: tuple[FlipBoxParams, FlipBoxParams] | None = None,
    detector: DetectorModel | None = None,
    flips: tuple[bool, bool] | None = None,
) -> Circuit:
    """Assemble the element list for input state (gamma, phi).

    The channel on beams 1'' and 3 is either a pair of flip boxes or, when
    ``flips`` is given, deterministic whole-beam bit flips.
    """
    if boxes is not None and flips is not None:
        raise ValueError("give either flip boxes or deterministic flips, not both")
    if flips is not None:
        channel = [Element("X1", "bit_flip", ("1''",), bool(flips[0])),
                   Element("X3", "bit_flip", ("3",), bool(flips[1]))]
    else:
        boxes = boxes or (FlipBoxParams(), FlipBoxParams())
        channel = [Element("box1", "flip_box", ("1''",), boxes[0]),
                   Element("box3", "flip_box", ("3",), boxes[1])]
    els = [
        # preparation: the H photon reaching D0 heralds cos|H> + e^{i phi} sin|V> on beam 1
        Element("Pv+", "phase_v", ("0",), phi),
        Element("HWP1", "hwp", ("0",), -gamma / 2),
        Element("Ph", "polarizer", ("0",)),
        # encoding
        Element("PBS1", "pbs", ("1", "2", "1''", "2'")),
        Element("HWP2", "hwp", ("2'",), HADAMARD_ANGLE),
        *channel,
        # parity check
        Element("PBS2", "pbs", ("1''", "3", "I1", "3''")),
        Element("HWP3", "hwp", ("3''",), HADAMARD_ANGLE),
        # verification
        Element("Pv-", "phase_v", ("I1",), -phi),
        Element("RPBS", "rpbs", ("I1",), gamma),
    ]
    return Circuit(gamma, phi, tuple(els), detector or DetectorModel())


# -- detection -------------------------------------------------------------------
def classify_event(clicks: dict[str, bool], det: DetectorModel | None = None) -> Event:
    policy = (det or DetectorModel()).multifold_policy
    c = {d: bool(clicks.get(d, False)) for d in DETECTOR_ORDER}
    if not (c["D0"] and c["D2"] and c["D3"]):
        return Event.REJECT
    if c["D1"] and c["D4"]:
        if policy is MultifoldPolicy.FIVE_FOLD_AS_C4:
            return Event.C4
        return Event.REJECT
    if c["D1"]:
        return Event.C1
    if c["D4"]:
        return Event.C4
    return Event.REJECT


@dataclass
class EventTally:
    """C1/C4/reject counts (Monte Carlo) or probabilities (exact runs)."""

    n1: float = 0
    n4: float = 0
    rejected: float = 0
    trials: float = 0
    threefold: float = 0  # rejected D0,D2,D3 coincidences with neither D1 nor D4

    def merge(self, other: "EventTally") -> "EventTally":
        return EventTally(self.n1 + other.n1, self.n4 + other.n4,
                          self.rejected + other.rejected, self.trials + other.trials,
                          self.threefold + other.threefold)

    __add__ = merge

    def scaled(self, w: float) -> "EventTally":
        return EventTally(self.n1 * w, self.n4 * w, self.rejected * w,
                          self.trials * w, self.threefold * w)

    @property
    def accepted(self) -> float:
        return self.n1 + self.n4

    @property
    def error_rate(self) -> float:
        return self.n4 / self.accepted if self.accepted else float("nan")

    @property
    def error_stderr(self) -> float:
        n = self.accepted
        if not n:
            return float("nan")
        e = self.n4 / n
        return math.sqrt(e * (1 - e) / n)


def detector_count_distribution(state: FockState) -> dict[tuple[int, ...], float]:
    """Photon counts at (D0, D1, D2, D3, D4)."""
    return state.count_distribution(DETECTOR_MODES)


def tally_from_counts(counts: dict[tuple[int, ...], float], det: DetectorModel) -> EventTally:
    """Exact event probabilities from a photon-count distribution."""
    n1 = n4 = three = 0.0
    total = 0.0
    five_c4 = det.multifold_policy is MultifoldPolicy.FIVE_FOLD_AS_C4
    for (k0, k1, k2, k3, k4), w in counts.items():
        total += w
        base = w * det.click_probability(k0) * det.click_probability(k2) * det.click_probability(k3)
        if base == 0.0:
            continue
        c1, c4 = det.click_probability(k1), det.click_probability(k4)
        n1 += base * c1 * (1 - c4)
        n4 += base * c4 * (1 - c1) + (base * c1 * c4 if five_c4 else 0.0)
        three += base * (1 - c1) * (1 - c4)
    return EventTally(n1, n4, total - n1 - n4, total, three)


def circuit_output(circuit: Circuit, kind: EmissionKind) -> FockState:
    return circuit.evolve(source_state(kind))


def run_exact(
    emission: SourceEmission | EmissionKind,
    circuit: Circuit,
    settings: tuple[float, float] | str = "average",
) -> EventTally:
    """Exact C1/C4/reject probabilities for one emission, conditioned on that emission.

    ``settings`` is a fixed (theta, theta1) pair for the two flip boxes or
    ``"average"`` for the uniform mean over the four +-pi/2 combinations.
    Circuits built with deterministic flips ignore ``settings``.
    """
    kind = emission.kind if isinstance(emission, SourceEmission) else emission
    boxes = [e for e in circuit.elements if e.op == "flip_box"]
    if not boxes:
        return tally_from_counts(detector_count_distribution(circuit_output(circuit, kind)),
                                 circuit.detector)
    b1, b3 = boxes[0].value, boxes[1].value
    pairs = SETTINGS if settings == "average" else (tuple(settings),)
    total = EventTally()
    for th, th1 in pairs:
        c = circuit.with_channel([
            Element("box1", "flip_box", ("1''",), FlipBoxParams(b1.epsilon, th, b1.deterministic)),
            Element("box3", "flip_box", ("3",), FlipBoxParams(b3.epsilon, th1, b3.deterministic)),
        ])
        t = tally_from_counts(detector_count_distribution(circuit_output(c, kind)), circuit.detector)
        total = total.merge(t.scaled(1.0 / len(pairs)))
    return total


def parity_leak_probability(circuit: Circuit, kind: EmissionKind = EmissionKind.TWO_PAIR) -> float:
    """Probability that beam 3'' holds exactly one photon given a prepared code.

    The code counts as prepared when the herald 0.H and the encoding port
    x0 (2'.H) each hold exactly one photon.  Returned as an exact sum of
    squared amplitudes; no tolerance is applied.
    """
    reg = circuit.registry
    h0, x0 = reg.index(ModeLabel("0", "H")), reg.index(ModeLabel("2'", "H"))
    y = reg.beam_indices("3''")
    out = circuit_output(circuit, kind)
    prepared = out.filter(lambda o: o[h0] == 1 and o[x0] == 1)
    if prepared.norm2 == 0.0:
        return 0.0
    leak = prepared.filter(lambda o: o[y[0]] + o[y[1]] == 1)
    return leak.norm2 / prepared.norm2
