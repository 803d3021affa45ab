"""Invariant suite behind the ``verify`` command.

Each check returns a :class:`CheckResult`; nothing here raises on failure,
so the CLI can print every line and set the exit status at the end.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import experiment as ex
from . import protocol as pr
from .fock import (
    FockState,
    ModeLabel,
    ModeRegistry,
    apply_creators,
    apply_mode_unitary,
    apply_pbs,
    beam_modes,
    hwp_matrix,
    measure_basis,
    project_photon_count,
)
from .montecarlo import MonteCarloConfig, _blocks, _run_shard, run_monte_carlo

TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<28} {self.detail} ({self.seconds:.2f}s)"


def _random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _random_state(rng: np.random.Generator, reg: ModeRegistry, photons: int, terms: int,
                  beams: tuple[str, ...] | None = None) -> FockState:
    modes = [m for m in reg if beams is None or m.beam in beams]
    s = FockState.empty(reg)
    for _ in range(terms):
        picks = [modes[i] for i in rng.integers(0, len(modes), photons)]
        c = complex(rng.normal(), rng.normal())
        s = s + apply_creators(FockState.vacuum(reg), [(c, picks)])
    return s.normalize()


def _max_dev(u: np.ndarray) -> float:
    return float(np.abs(u.conj().T @ u - np.eye(len(u))).max())


def check_unitarity(rng: np.random.Generator) -> tuple[bool, str]:
    mats = [hwp_matrix(d) for d in rng.uniform(-math.pi, math.pi, 5)]
    mats += [ex.rpbs_matrix(g) for g in rng.uniform(0, math.pi, 5)]
    mats += [ex.FlipBoxParams(e, s * math.pi / 2).matrix()
             for e in rng.uniform(0, 1, 5) for s in (1, -1)]
    worst = max(_max_dev(m) for m in mats)

    # norm preservation of the Fock-level action, including the flip-box element chain
    reg = ModeRegistry.from_beams(["a", "b"])
    norm_dev = 0.0
    for _ in range(10):
        s = _random_state(rng, reg, int(rng.integers(1, 4)), 4)
        out = apply_mode_unitary(s, _random_unitary(rng, 4), list(reg))
        norm_dev = max(norm_dev, abs(out.norm2 - 1.0))
    p = ex.FlipBoxParams(float(rng.uniform(0, 1)), math.pi / 2)
    s = _random_state(rng, reg, 2, 3)
    chain = ex.apply_flip_box(s, "a", p)
    direct = apply_mode_unitary(s, p.matrix(), beam_modes("a"))
    ok = worst < TOL and norm_dev < TOL and chain.allclose(direct, TOL)
    return ok, f"max |U^dag U - 1| = {worst:.1e}, norm drift {norm_dev:.1e}"


def check_photon_conservation(rng: np.random.Generator) -> tuple[bool, str]:
    worst = 0.0
    for kind in ex.EmissionKind:
        n_in = 4 if kind is ex.EmissionKind.TWO_PAIR else 6
        g, ph = rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)
        c = ex.build_circuit(g, ph, (ex.FlipBoxParams(0.3, math.pi / 2), ex.FlipBoxParams(0.2, -math.pi / 2)))
        out = c.evolve(ex.source_state(kind))
        dist = out.photon_numbers()
        worst = max(worst, abs(dist.get(n_in, 0.0) - 1.0), abs(out.norm2 - 1.0))
    reg = ModeRegistry.from_beams(["a", "b", "c", "d"])
    s = _random_state(rng, reg, 3, 6, beams=("a", "b"))
    out = apply_pbs(s, "a", "b", "c", "d")
    worst = max(worst, abs(out.photon_numbers().get(3, 0.0) - 1.0))
    return worst < TOL, f"max photon-number leakage {worst:.1e}"


def check_projector_completeness(rng: np.random.Generator) -> tuple[bool, str]:
    devs = [float(np.abs(pr.P_EVEN + pr.P_ODD - np.eye(4)).max())]
    k = pr._decode_ops()
    devs.append(float(np.abs(sum(m.conj().T @ m for m in k) - np.eye(4)).max()))

    reg = ModeRegistry.from_beams(["a", "b"])
    s = _random_state(rng, reg, 2, 5)
    devs.append(abs(sum(project_photon_count(s, "a", n)[1] for n in range(3)) - 1.0))
    one = s.filter(lambda occ: occ[0] + occ[1] == 1).norm2
    u = _random_unitary(rng, 2)
    devs.append(abs(sum(p for _, _, p in measure_basis(s, "a", u.T)) - one))
    counts = s.count_distribution([ModeLabel("a", "H"), ModeLabel("b", "V")])
    devs.append(abs(sum(counts.values()) - 1.0))

    rho = pr._as_density(pr.encode(pr.PureQubit(*rng.uniform(0, math.pi, 2))))
    branches = pr.parity_check(rho)
    devs.append(abs(branches[True][0] + branches[False][0] - 1.0))
    worst = max(devs)
    return worst < TOL, f"max completeness deviation {worst:.1e}"


def check_merge_associativity(rng: np.random.Generator) -> tuple[bool, str]:
    def tally():
        n1, n4, rej, three = (int(x) for x in rng.integers(0, 1000, 4))
        return ex.EventTally(n1, n4, rej, n1 + n4 + rej, min(three, rej))

    ok = True
    for _ in range(50):
        a, b, c = tally(), tally(), tally()
        ok &= a.merge(b).merge(c) == a.merge(b.merge(c))
        ok &= a.merge(b) == b.merge(a)
    # sharded Monte Carlo must reproduce the single-shard tally
    det = ex.DetectorModel(0.7)
    one = run_monte_carlo(0.2, det, 5000, seed=11, block_size=1000)
    cfg = MonteCarloConfig(0.2, det, None, "bloch", 1000)
    blocks = _blocks(5000, 1000)
    merged = ex.EventTally()
    for part in (blocks[0::3], blocks[1::3], blocks[2::3]):
        merged = merged.merge(_run_shard(cfg, 11, part))
    ok &= merged == one
    return bool(ok), "merge is associative and commutative; shard split reproduces the tally"


def check_decode_equivalence(rng: np.random.Generator) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(10):
        q = pr.PureQubit(float(rng.uniform(0, math.pi)), float(rng.uniform(0, 2 * math.pi)))
        rho = pr.parity_check(pr.encode(q))[True][1]
        for _, p, r in pr.decode_branches(rho):
            # every outcome of the corrected decoder returns the input
            worst = max(worst, abs(pr.fidelity(r, q) - 1.0) if p > 1e-14 else 0.0)
    for eta in rng.uniform(0, 0.49, 5):
        for mode in pr.AverageMode:
            nodes = pr.average_nodes(mode)
            num = den = 0.0
            for q, w in nodes:
                p, out = pr.coded_output(q, eta)
                num += w * p * (1 - pr.fidelity(out, q))
                den += w * p
            worst = max(worst, abs(num / den - pr.coded_error_rate(eta, mode)))
    return worst < 1e-12, f"max branch/batched discrepancy {worst:.1e}"


CHECKS: dict[str, Callable[[np.random.Generator], tuple[bool, str]]] = {
    "unitarity": check_unitarity,
    "photon-number conservation": check_photon_conservation,
    "projector completeness": check_projector_completeness,
    "tally-merge associativity": check_merge_associativity,
    "decode-branch equivalence": check_decode_equivalence,
}


def run_verify(seed: int = 0) -> list[CheckResult]:
    results = []
    for i, (name, fn) in enumerate(CHECKS.items()):
        t0 = time.perf_counter()
        try:
            ok, detail = fn(np.random.default_rng([seed, i]))
        except Exception as exc:  # report, don't abort the suite
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name, ok, detail, time.perf_counter() - t0))
    return results
