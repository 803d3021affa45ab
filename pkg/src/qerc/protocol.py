"""Qubit-level two-bit bit-flip rejection code.

Everything here is exact enumeration over 2x2 / 4x4 density matrices:
encode, push through the four flip patterns, parity check, decode, and
average the fidelity over a set of input states.  Qubit 1 is the most
significant index of the 4-dim space.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / math.sqrt(2)
P_EVEN = np.diag([1.0, 0.0, 0.0, 1.0]).astype(complex)
P_ODD = np.diag([0.0, 1.0, 1.0, 0.0]).astype(complex)
# CNOT with qubit 1 as control: |00>->|00>, |10>->|11>
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class PureQubit:
    gamma: float
    phi: float = 0.0

    @property
    def vector(self) -> np.ndarray:
        return np.array(
            [math.cos(self.gamma / 2), np.exp(1j * self.phi) * math.sin(self.gamma / 2)]
        )

    @property
    def flipped(self) -> np.ndarray:
        return X @ self.vector

    @property
    def alpha_beta(self) -> tuple[complex, complex]:
        v = self.vector
        return complex(v[0]), complex(v[1])

    @classmethod
    def from_amplitudes(cls, alpha: complex, beta: complex) -> "PureQubit":
        n = math.hypot(abs(alpha), abs(beta))
        if n == 0:
            raise ProtocolError("zero amplitudes")
        gamma = 2 * math.atan2(abs(beta), abs(alpha))
        phi = 0.0
        if abs(alpha) > 0 and abs(beta) > 0:
            phi = (np.angle(beta) - np.angle(alpha)) % (2 * math.pi)
        return cls(gamma, float(phi))


def check_eta(eta: float) -> float:
    if not 0.0 <= eta < 0.5:
        raise ProtocolError(f"flip probability must lie in [0, 1/2), got {eta}")
    return eta


@dataclass(frozen=True)
class BitFlipChannel:
    eta: float

    def __post_init__(self):
        check_eta(self.eta)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (1 - self.eta) * rho + self.eta * X @ rho @ X

    def branches(self) -> list[tuple[float, np.ndarray]]:
        return [(1 - self.eta, I2), (self.eta, X)]


@dataclass(frozen=True)
class FlipPattern:
    flags: tuple[bool, bool]
    weight: float

    def operator(self) -> np.ndarray:
        a = X if self.flags[0] else I2
        b = X if self.flags[1] else I2
        return np.kron(a, b)


def flip_patterns(eta: float) -> list[FlipPattern]:
    check_eta(eta)
    return [
        FlipPattern((False, False), (1 - eta) ** 2),
        FlipPattern((True, False), eta * (1 - eta)),
        FlipPattern((False, True), eta * (1 - eta)),
        FlipPattern((True, True), eta ** 2),
    ]


class AverageMode(enum.Enum):
    BLOCH = "bloch"
    FOUR_STATE = "four-state"

    @classmethod
    def parse(cls, s: "str | AverageMode") -> "AverageMode":
        if isinstance(s, cls):
            return s
        aliases = {"bloch": cls.BLOCH, "haar": cls.BLOCH, "four-state": cls.FOUR_STATE,
                   "fourstate": cls.FOUR_STATE, "four_state": cls.FOUR_STATE}
        try:
            return aliases[s.lower()]
        except KeyError:
            raise ProtocolError(f"unknown averaging mode {s!r}") from None


FOUR_STATES = (
    PureQubit(0.0, 0.0),                  # (1, 0)
    PureQubit(math.pi, 0.0),              # (0, 1)
    PureQubit(math.pi / 2, 0.0),          # (1, 1)/sqrt2
    PureQubit(math.pi / 2, math.pi),      # (1, -1)/sqrt2
)
# octahedron: a spherical 3-design, exact for the quadratic functionals used here
SIX_STATES = FOUR_STATES + (PureQubit(math.pi / 2, math.pi / 2),
                            PureQubit(math.pi / 2, 3 * math.pi / 2))


def bloch_quadrature(n_theta: int = 8, n_phi: int = 8) -> list[tuple[PureQubit, float]]:
    """Gauss-Legendre in cos(gamma) times a uniform phi rule; weights sum to 1."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    nodes = []
    for xi, wi in zip(x, w):
        g = math.acos(xi)
        for k in range(n_phi):
            nodes.append((PureQubit(g, 2 * math.pi * k / n_phi), wi / 2 / n_phi))
    return nodes


def average_nodes(mode: AverageMode | str) -> list[tuple[PureQubit, float]]:
    mode = AverageMode.parse(mode)
    if mode is AverageMode.FOUR_STATE:
        return [(q, 0.25) for q in FOUR_STATES]
    return bloch_quadrature()


def average_over_bloch(
    f: Callable[[float, float], float],
    method: str = "quadrature",
    n: int = 8,
    seed: int = 0,
    replicates: int = 16,
) -> tuple[float, float]:
    """Haar average of ``f(gamma, phi)`` with weight sin(gamma) dgamma dphi / 4pi.

    ``method="quadrature"`` uses an n x n product rule (exact for low-degree
    trigonometric polynomials, standard error 0).  ``method="sobol"`` uses
    ``replicates`` independently scrambled Sobol sequences of ``2**n``
    points and reports the standard error across replicates.
    """
    if method == "quadrature":
        return math.fsum(w * f(q.gamma, q.phi) for q, w in bloch_quadrature(n, n)), 0.0
    if method != "sobol":
        raise ProtocolError(f"unknown method {method!r}")
    means = []
    for r in range(replicates):
        u = qmc.Sobol(d=2, scramble=True, seed=np.random.default_rng([seed, r])).random_base2(n)
        gam = np.arccos(1 - 2 * u[:, 0])
        ph = 2 * math.pi * u[:, 1]
        means.append(np.mean([f(g, p) for g, p in zip(gam, ph)]))
    means = np.asarray(means)
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(replicates))


# -- code operations ---------------------------------------------------------
def encode(q: PureQubit) -> np.ndarray:
    return CNOT @ np.kron(q.vector, np.array([1.0, 0.0]))


def apply_flip_pattern(code: np.ndarray, pat: FlipPattern) -> np.ndarray:
    return pat.operator() @ code


def _as_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return np.outer(state, state.conj()) if state.ndim == 1 else state


def parity_check(code: np.ndarray) -> dict[bool, tuple[float, np.ndarray]]:
    """Two-outcome instrument {P_even, P_odd}.

    Returns ``{True: (p_accept, rho_even), False: (p_reject, rho_odd)}`` with
    unnormalised post-measurement operators.  The even branch keeps its
    |00>,|11> coherence.
    """
    rho = _as_density(code)
    out = {}
    for accepted, proj in ((True, P_EVEN), (False, P_ODD)):
        r = proj @ rho @ proj
        out[accepted] = (float(np.real(np.trace(r))), r)
    return out


def decode_branches(rho_even: np.ndarray, tol: float = 1e-12) -> list[tuple[str, float, np.ndarray]]:
    """Measure qubit 1 in |+-> and correct with Z on ``-``.

    Returns (outcome, probability, normalised qubit-2 state) per outcome.
    """
    rho = _as_density(rho_even)
    tr = float(np.real(np.trace(rho)))
    if tr <= 0:
        raise ProtocolError("cannot decode a zero-weight state")
    odd = float(np.real(np.trace(P_ODD @ rho)))
    if odd > tol * max(tr, 1.0):
        raise ProtocolError("decode needs an even-parity input")
    out = []
    for label, bra, fix in (("+", PLUS, I2), ("-", MINUS, Z)):
        k = fix @ np.kron(bra.conj()[None, :], I2)
        r = k @ rho @ k.conj().T
        p = float(np.real(np.trace(r))) / tr
        out.append((label, p, r / (p * tr) if p > 0 else r))
    return out


def decode(rho_even: np.ndarray) -> np.ndarray:
    """Stored single-qubit state (mixture over the two decoding outcomes)."""
    return sum(p * r for _, p, r in decode_branches(rho_even))


def fidelity(rho: np.ndarray, q: PureQubit) -> float:
    v = q.vector
    return float(np.real(v.conj() @ rho @ v))


def orthogonal(v: np.ndarray) -> np.ndarray:
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def coded_output(q: PureQubit, eta: float) -> tuple[float, np.ndarray]:
    """Acceptance probability and decoded state after the noisy channel."""
    code = encode(q)
    rho = sum(p.weight * _as_density(apply_flip_pattern(code, p)) for p in flip_patterns(eta))
    p_acc, rho_even = parity_check(rho)[True]
    return p_acc, decode(rho_even)


def _node_arrays(mode):
    nodes = average_nodes(mode)
    vecs = np.array([q.vector for q, _ in nodes])
    weights = np.array([w for _, w in nodes])
    return vecs, weights


def _decode_ops() -> np.ndarray:
    return np.array([fix @ np.kron(bra.conj()[None, :], I2)
                     for bra, fix in ((PLUS, I2), (MINUS, Z))])


def coded_error_rate(eta: float, mode: AverageMode | str = AverageMode.BLOCH) -> float:
    """Average infidelity of accepted, decoded qubits, by exact enumeration.

    Same pipeline as :func:`coded_output`, batched over the averaging nodes.
    Each (flip pattern, decode outcome) branch stays a pure vector, so errors
    are sums of squared overlaps and never come out negative.
    """
    check_eta(eta)
    vecs, w = _node_arrays(mode)
    perp = np.stack([-vecs[:, 1].conj(), vecs[:, 0].conj()], axis=1)
    codes = np.einsum("ij,nj->ni", CNOT, np.kron(vecs, np.array([1.0, 0.0])))
    k = _decode_ops() @ P_EVEN
    acc = err = np.zeros(len(vecs))
    for pat in flip_patterns(eta):
        branch = np.einsum("kai,ni->nka", k, codes @ pat.operator().T)
        acc = acc + pat.weight * np.sum(np.abs(branch) ** 2, axis=(1, 2))
        err = err + pat.weight * np.sum(np.abs(np.einsum("na,nka->nk", perp.conj(), branch)) ** 2, axis=1)
    return float(np.sum(w * err) / np.sum(w * acc))


def direct_error_rate(eta: float, mode: AverageMode | str = AverageMode.BLOCH) -> float:
    """Average infidelity of one qubit sent straight through the channel."""
    ch = BitFlipChannel(check_eta(eta))
    return math.fsum(
        w * p * abs(orthogonal(q.vector).conj() @ op @ q.vector) ** 2
        for q, w in average_nodes(mode)
        for p, op in ch.branches()
    )
