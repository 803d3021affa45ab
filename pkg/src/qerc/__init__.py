"""Simulation of the two-qubit bit-flip quantum error-rejection code and its
linear-optical SPDC realisation."""

from .analysis import comparison_report, e0, ec, ec_prime, eta_from_epsilon, fig2_dataset
from .experiment import (
    ClickMode,
    DetectorModel,
    EmissionKind,
    EventTally,
    FlipBoxParams,
    MultifoldPolicy,
    build_circuit,
    classify_event,
    run_exact,
)
from .montecarlo import run_monte_carlo
from .protocol import AverageMode, PureQubit, coded_error_rate, direct_error_rate
from .threepair import ThreePairInput, three_pair_c4_probability

__version__ = "0.1.0"
