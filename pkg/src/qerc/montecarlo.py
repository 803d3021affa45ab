"""Seeded, shardable Monte Carlo over the SPDC circuit.

Each trial samples an emission, an input state, the two flip-box settings,
a photon-count vector at the five detectors (from the exact Fock output) and
threshold-detector clicks.  Trials are grouped into fixed-size blocks; block
``b`` draws from ``Philox(key=seed).jumped(b)``, so the merged tally does not
depend on how blocks are spread over shards.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .experiment import (
    SETTINGS,
    ClickMode,
    DetectorModel,
    EmissionKind,
    EventTally,
    FlipBoxParams,
    MultifoldPolicy,
    build_circuit,
    circuit_output,
    detector_count_distribution,
)
from .protocol import FOUR_STATES, SIX_STATES, AverageMode

BLOCK_SIZE = 1 << 16
KINDS = (EmissionKind.TWO_PAIR, EmissionKind.THREE_PAIR_L, EmissionKind.THREE_PAIR_R)


@dataclass(frozen=True)
class CountTable:
    """Photon-count vectors (D0..D4) and their cumulative probabilities."""

    counts: np.ndarray  # (k, 5) int
    cdf: np.ndarray  # (k,)

    def sample(self, u: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.cdf, u * self.cdf[-1], side="right")
        return self.counts[np.minimum(idx, len(self.cdf) - 1)]


def input_states(average: AverageMode | str):
    # the octahedron is a 3-design, so it reproduces the Haar average here
    return FOUR_STATES if AverageMode.parse(average) is AverageMode.FOUR_STATE else SIX_STATES


@lru_cache(maxsize=None)
def count_tables(epsilon: float, average: str, kind: EmissionKind) -> tuple[CountTable, ...]:
    """One table per (input state, setting) pair, state-major."""
    out = []
    for q in input_states(average):
        for th, th1 in SETTINGS:
            c = build_circuit(q.gamma, q.phi, (FlipBoxParams(epsilon, th), FlipBoxParams(epsilon, th1)))
            dist = detector_count_distribution(circuit_output(c, kind))
            keys = sorted(dist)
            probs = np.array([dist[k] for k in keys])
            out.append(CountTable(np.array(keys, dtype=np.int64), np.cumsum(probs)))
    return tuple(out)


def emission_cdf(p: float | None) -> np.ndarray:
    """Cumulative probabilities of (TwoPair, ThreePairL, ThreePairR); the rest emits nothing useful."""
    if p is None:
        return np.array([1.0, 1.0, 1.0])
    if not 0.0 <= p < 1.0:
        raise ValueError(f"pair probability must lie in [0, 1), got {p}")
    w = np.array([p ** 2, 0.75 * p ** 3, 0.75 * p ** 3])
    return np.cumsum(w)


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed).jumped(block))


def _clicks(rng: np.random.Generator, n: np.ndarray, det: DetectorModel) -> np.ndarray:
    if det.click_mode is ClickMode.EXACT:
        return rng.binomial(n, det.xi) > 0
    return rng.random(n.shape) < np.minimum(n * det.xi, 1.0)


@dataclass(frozen=True)
class MonteCarloConfig:
    epsilon: float
    detector: DetectorModel = DetectorModel()
    p: float | None = None  # None forces TwoPair emission on every trial
    average: str = "bloch"
    block_size: int = BLOCK_SIZE


def run_block(cfg: MonteCarloConfig, seed: int, block: int, size: int) -> EventTally:
    rng = block_rng(seed, block)
    n_states = len(input_states(cfg.average))
    u_emit = rng.random(size)
    group = rng.integers(0, n_states * len(SETTINGS), size)
    u_count = rng.random(size)

    counts = np.zeros((size, 5), dtype=np.int64)
    kind_idx = np.searchsorted(emission_cdf(cfg.p), u_emit, side="right")
    for k, kind in enumerate(KINDS):
        sel_k = kind_idx == k
        if not sel_k.any():
            continue
        tables = count_tables(cfg.epsilon, cfg.average, kind)
        for g, table in enumerate(tables):
            sel = sel_k & (group == g)
            if sel.any():
                counts[sel] = table.sample(u_count[sel])

    clicks = _clicks(rng, counts, cfg.detector)
    d0, d1, d2, d3, d4 = clicks.T
    base = d0 & d2 & d3
    c1 = base & d1 & ~d4
    c4 = base & d4 & ~d1
    if cfg.detector.multifold_policy is MultifoldPolicy.FIVE_FOLD_AS_C4:
        c4 |= base & d1 & d4
    n1, n4 = int(c1.sum()), int(c4.sum())
    return EventTally(n1, n4, size - n1 - n4, size, int((base & ~d1 & ~d4).sum()))


def _blocks(trials: int, block_size: int) -> list[tuple[int, int]]:
    n = math.ceil(trials / block_size)
    return [(b, min(block_size, trials - b * block_size)) for b in range(n)]


def _run_shard(cfg: MonteCarloConfig, seed: int, blocks: list[tuple[int, int]]) -> EventTally:
    total = EventTally()
    for b, size in blocks:
        total = total.merge(run_block(cfg, seed, b, size))
    return total


def run_monte_carlo(
    epsilon: float,
    detector: DetectorModel | None = None,
    trials: int = 10 ** 6,
    seed: int = 0,
    p: float | None = None,
    average: AverageMode | str = AverageMode.BLOCH,
    shards: int = 1,
    block_size: int = BLOCK_SIZE,
) -> EventTally:
    """Sampled C1/C4/reject counts over ``trials`` trials.

    Flip-box settings are drawn uniformly from the four (theta, theta1)
    combinations and inputs uniformly from the chosen state set.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if shards < 1:
        raise ValueError(f"shards must be at least 1, got {shards}")
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    cfg = MonteCarloConfig(float(epsilon), detector or DetectorModel(), p,
                           AverageMode.parse(average).value, block_size)
    blocks = _blocks(trials, block_size)
    if shards == 1 or len(blocks) == 1:
        return _run_shard(cfg, seed, blocks)
    parts = [blocks[i::shards] for i in range(shards)]
    parts = [b for b in parts if b]
    with ProcessPoolExecutor(max_workers=len(parts)) as ex:
        results = list(ex.map(_run_shard, [cfg] * len(parts), [seed] * len(parts), parts))
    total = EventTally()
    for r in results:
        total = total.merge(r)
    return total
