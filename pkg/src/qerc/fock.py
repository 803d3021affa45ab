"""Sparse bosonic Fock states over polarization-resolved beams.

A state is a map from occupation vectors (one count per registered mode) to
complex amplitudes.  Linear-optical elements act on creation operators,
``a_j^dag -> sum_k u[k, j] a_k^dag``, and the output amplitudes follow from
the multinomial expansion with the usual ``sqrt(n!)`` normalisation.

States are immutable; every operation returns a new state.  Nothing is
renormalised unless :meth:`FockState.normalize` is called, so the squared
norm of a state produced by filtering is the weight of that branch.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

POLARIZATIONS = ("H", "V")
DEFAULT_PRUNE = 1e-14
UNITARY_TOL = 1e-10


class OpticsError(ValueError):
    """Rejected input to an optical operation."""


@dataclass(frozen=True, order=True)
class ModeLabel:
    beam: str
    pol: str

    def __post_init__(self):
        if self.pol not in POLARIZATIONS:
            raise OpticsError(f"polarization must be H or V, got {self.pol!r}")

    def __str__(self):
        return f"{self.beam}.{self.pol}"


class ModeRegistry:
    """Ordered, duplicate-free list of modes; the order fixes vector layout."""

    def __init__(self, modes: Iterable[ModeLabel]):
        self.modes = tuple(modes)
        self._index = {}
        for i, m in enumerate(self.modes):
            if m in self._index:
                raise OpticsError(f"duplicate mode {m}")
            self._index[m] = i

    @classmethod
    def from_beams(cls, beams: Iterable[str]) -> "ModeRegistry":
        return cls(ModeLabel(b, p) for b in beams for p in POLARIZATIONS)

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __contains__(self, mode):
        return mode in self._index

    def __eq__(self, other):
        return isinstance(other, ModeRegistry) and self.modes == other.modes

    def __hash__(self):
        return hash(self.modes)

    def index(self, mode: ModeLabel) -> int:
        try:
            return self._index[mode]
        except KeyError:
            raise OpticsError(f"unknown mode {mode}") from None

    def beam_indices(self, beam: str) -> tuple[int, int]:
        """Indices of the (H, V) modes of ``beam``."""
        return self.index(ModeLabel(beam, "H")), self.index(ModeLabel(beam, "V"))

    @property
    def beams(self) -> tuple[str, ...]:
        seen = dict.fromkeys(m.beam for m in self.modes)
        return tuple(seen)


class FockState:
    """Immutable sparse superposition of occupation vectors."""

    __slots__ = ("registry", "terms", "prune", "_norm2")

    def __init__(
        self,
        registry: ModeRegistry,
        terms: Mapping[tuple[int, ...], complex] | None = None,
        prune: float = DEFAULT_PRUNE,
    ):
        kept = {}
        n = len(registry)
        for occ, amp in (terms or {}).items():
            occ = tuple(int(c) for c in occ)
            if len(occ) != n or min(occ, default=0) < 0:
                raise OpticsError(f"bad occupation vector {occ}")
            if abs(amp) >= prune:
                kept[occ] = complex(amp)
        self.registry = registry
        self.terms = MappingProxyType(kept)
        self.prune = prune
        self._norm2 = math.fsum(abs(a) ** 2 for a in kept.values())

    # -- construction ------------------------------------------------------
    @classmethod
    def vacuum(cls, registry: ModeRegistry, prune: float = DEFAULT_PRUNE) -> "FockState":
        return cls(registry, {(0,) * len(registry): 1.0}, prune)

    @classmethod
    def empty(cls, registry: ModeRegistry, prune: float = DEFAULT_PRUNE) -> "FockState":
        return cls(registry, {}, prune)

    @classmethod
    def basis(cls, registry: ModeRegistry, counts: Mapping[ModeLabel, int]) -> "FockState":
        occ = [0] * len(registry)
        for mode, c in counts.items():
            occ[registry.index(mode)] = c
        return cls(registry, {tuple(occ): 1.0})

    def _new(self, terms) -> "FockState":
        return FockState(self.registry, terms, self.prune)

    # -- basic algebra -----------------------------------------------------
    @property
    def norm2(self) -> float:
        return self._norm2

    def normalize(self) -> "FockState":
        if self._norm2 == 0.0:
            raise OpticsError("cannot normalize the zero state")
        s = 1.0 / math.sqrt(self._norm2)
        return self._new({k: v * s for k, v in self.terms.items()})

    def scale(self, c: complex) -> "FockState":
        return self._new({k: v * c for k, v in self.terms.items()})

    def __add__(self, other: "FockState") -> "FockState":
        self._check_registry(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0.0) + v
        return self._new(out)

    def __sub__(self, other: "FockState") -> "FockState":
        return self + other.scale(-1.0)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        parts = []
        for occ, amp in sorted(self.terms.items()):
            label = ",".join(
                f"{m}:{c}" for m, c in zip(self.registry.modes, occ) if c
            ) or "vac"
            parts.append(f"({amp:.6g})|{label}>")
        return " + ".join(parts) or "0"

    def inner(self, other: "FockState") -> complex:
        """<self|other>."""
        self._check_registry(other)
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        acc = 0j
        for k, v in small.terms.items():
            w = big.terms.get(k)
            if w is not None:
                acc += v.conjugate() * w if small is self else w.conjugate() * v
        return acc

    def allclose(self, other: "FockState", atol: float = 1e-10) -> bool:
        self._check_registry(other)
        keys = set(self.terms) | set(other.terms)
        return all(
            abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) <= atol for k in keys
        )

    def _check_registry(self, other):
        if self.registry != other.registry:
            raise OpticsError("states live on different mode registries")

    # -- queries -----------------------------------------------------------
    def photon_numbers(self) -> dict[int, float]:
        """Weight of each total photon number."""
        out = defaultdict(float)
        for occ, amp in self.terms.items():
            out[sum(occ)] += abs(amp) ** 2
        return dict(out)

    def count_distribution(self, modes: Sequence[ModeLabel]) -> dict[tuple[int, ...], float]:
        """Joint photon-count distribution on ``modes``, all other modes traced out.

        Counts in the Fock basis of distinct output modes are orthogonal, so
        the marginal is an incoherent sum of squared amplitudes.
        """
        idx = [self.registry.index(m) for m in modes]
        out = defaultdict(float)
        for occ, amp in self.terms.items():
            out[tuple(occ[i] for i in idx)] += abs(amp) ** 2
        return dict(out)

    def filter(self, keep: Callable[[tuple[int, ...]], bool]) -> "FockState":
        """Keep the terms whose occupation vector satisfies ``keep`` (no renormalisation)."""
        return self._new({k: v for k, v in self.terms.items() if keep(k)})


# -- creation operators ----------------------------------------------------
def apply_creators(
    state: FockState, polynomial: Iterable[tuple[complex, Sequence[ModeLabel]]]
) -> FockState:
    """Apply ``sum_t c_t prod_{m in t} a_m^dag`` to ``state``.

    Each monomial is a coefficient and a list of modes (repeats allowed).
    """
    reg = state.registry
    polynomial = [(c, [reg.index(m) for m in mono]) for c, mono in polynomial]
    out = defaultdict(complex)
    for occ, amp in state.terms.items():
        for coeff, idx in polynomial:
            cur = list(occ)
            a = amp * coeff
            for i in idx:
                cur[i] += 1
                a *= math.sqrt(cur[i])
            out[tuple(cur)] += a
    return FockState(reg, out, state.prune)


# -- linear optics -----------------------------------------------------------
def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise OpticsError(f"mode unitary must be square, got shape {u.shape}")
    dev = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
    if dev > tol:
        raise OpticsError(f"matrix is not unitary (max |U^dag U - I| = {dev:.3g})")
    return u


def _expand_creation_powers(u: np.ndarray, counts: tuple[int, ...]) -> dict[tuple[int, ...], complex]:
    """Expand ``prod_j (sum_k u[k, j] a_k^dag)^counts[j] |0>`` into Fock amplitudes.

    The input occupation is ``prod_j (a_j^dag)^n_j / sqrt(n_j!) |0>``.
    """
    k_dim = u.shape[0]
    poly = {(0,) * k_dim: 1.0 + 0j}
    for j, n in enumerate(counts):
        col = u[:, j]
        nz = [k for k in range(k_dim) if col[k] != 0]
        for _ in range(n):
            nxt = defaultdict(complex)
            for mono, c in poly.items():
                for k in nz:
                    m = list(mono)
                    m[k] += 1
                    nxt[tuple(m)] += c * col[k]
            poly = nxt
    in_norm = math.sqrt(math.prod(math.factorial(n) for n in counts))
    return {
        mono: c * math.sqrt(math.prod(math.factorial(x) for x in mono)) / in_norm
        for mono, c in poly.items()
    }


def apply_mode_unitary(
    state: FockState, u: np.ndarray, modes: Sequence[ModeLabel]
) -> FockState:
    """Act with the single-particle unitary ``u`` on the listed modes.

    ``u[k, j]`` is the amplitude for a photon entering ``modes[j]`` to leave
    in ``modes[k]``.
    """
    u = check_unitary(u)
    if u.shape[0] != len(modes):
        raise OpticsError(f"unitary is {u.shape[0]}x{u.shape[0]} but {len(modes)} modes given")
    idx = [state.registry.index(m) for m in modes]
    if len(set(idx)) != len(idx):
        raise OpticsError("repeated mode in unitary target list")
    cache: dict[tuple[int, ...], dict] = {}
    out = defaultdict(complex)
    for occ, amp in state.terms.items():
        sub = tuple(occ[i] for i in idx)
        if sub not in cache:
            cache[sub] = _expand_creation_powers(u, sub)
        base = list(occ)
        for mono, c in cache[sub].items():
            for i, x in zip(idx, mono):
                base[i] = x
            out[tuple(base)] += amp * c
    return FockState(state.registry, out, state.prune)


def permute_modes(state: FockState, mapping: Mapping[ModeLabel, ModeLabel]) -> FockState:
    """Relabel modes; ``mapping`` must be a bijection on its key set."""
    reg = state.registry
    src = [reg.index(m) for m in mapping]
    dst = [reg.index(m) for m in mapping.values()]
    if sorted(src) != sorted(dst) or len(set(src)) != len(src):
        raise OpticsError("mode mapping is not a permutation")
    out = {}
    for occ, amp in state.terms.items():
        new = list(occ)
        for s, d in zip(src, dst):
            new[d] = occ[s]
        out[tuple(new)] = amp
    return FockState(reg, out, state.prune)


def hwp_matrix(delta: float) -> np.ndarray:
    """Half-wave plate at angle ``delta`` as a real rotation in the (H, V) basis."""
    c, s = math.cos(delta), math.sin(delta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def beam_modes(beam: str) -> list[ModeLabel]:
    return [ModeLabel(beam, "H"), ModeLabel(beam, "V")]


def apply_hwp(state: FockState, beam: str, delta: float) -> FockState:
    return apply_mode_unitary(state, hwp_matrix(delta), beam_modes(beam))


def apply_pbs(
    state: FockState, in1: str, in2: str, out1: str, out2: str, reflection: complex = 1.0
) -> FockState:
    """Polarizing beam splitter: H transmitted, V reflected.

    ``in1.H -> out1.H``, ``in2.H -> out2.H``, ``in1.V -> out2.V``,
    ``in2.V -> out1.V``.  Output beams may coincide with input beams.
    Output modes that are not also inputs must be empty on entry.
    ``reflection`` is an optional phase on reflected photons.
    """
    reg = state.registry
    H, V = "H", "V"
    moves = {
        ModeLabel(in1, H): ModeLabel(out1, H),
        ModeLabel(in2, H): ModeLabel(out2, H),
        ModeLabel(in1, V): ModeLabel(out2, V),
        ModeLabel(in2, V): ModeLabel(out1, V),
    }
    for m in list(moves) + list(moves.values()):
        reg.index(m)
    if len(set(moves.values())) != 4:
        raise OpticsError("PBS output beams must be distinct")
    # complete the partial relabelling to a permutation of the touched modes
    free_dst = [m for m in moves if m not in moves.values()]
    spare_src = [m for m in moves.values() if m not in moves]
    for m in spare_src:
        if any(occ[reg.index(m)] for occ in state.terms):
            raise OpticsError(f"PBS output mode {m} is already occupied")
    mapping = dict(moves)
    mapping.update(zip(spare_src, free_dst))
    if reflection != 1.0:
        state = apply_phase_shift_v(state, in1, float(np.angle(reflection)))
        state = apply_phase_shift_v(state, in2, float(np.angle(reflection)))
    return permute_modes(state, mapping)


def apply_phase_shift_v(state: FockState, beam: str, theta: float) -> FockState:
    """Multiply each term by ``exp(i theta n_V)`` for the V mode of ``beam``."""
    iv = state.registry.index(ModeLabel(beam, "V"))
    if theta == 0.0:
        return state
    ph = complex(math.cos(theta), math.sin(theta))
    return FockState(
        state.registry,
        {occ: amp * ph ** occ[iv] for occ, amp in state.terms.items()},
        state.prune,
    )


def apply_bit_flip(state: FockState, beam: str) -> FockState:
    """Swap H and V for every photon in ``beam``."""
    h, v = beam_modes(beam)
    return permute_modes(state, {h: v, v: h})


# -- measurement ---------------------------------------------------------------
def beam_photon_count(state: FockState, beam: str):
    ih, iv = state.registry.beam_indices(beam)
    return lambda occ: occ[ih] + occ[iv]


def project_photon_count(state: FockState, beam: str, n: int) -> tuple[FockState, float]:
    """Project onto exactly ``n`` photons in ``beam``.

    Returns the renormalised post-measurement state and the branch
    probability relative to the input weight.  A zero-probability branch
    yields an empty state.
    """
    if n < 0:
        raise OpticsError("photon number must be non-negative")
    total = state.norm2
    if total == 0.0:
        return FockState.empty(state.registry, state.prune), 0.0
    count = beam_photon_count(state, beam)
    kept = state.filter(lambda occ: count(occ) == n)
    prob = kept.norm2 / total
    if prob == 0.0:
        return kept, 0.0
    return kept.normalize(), prob


def check_basis(basis: Sequence[Sequence[complex]], tol: float = UNITARY_TOL) -> np.ndarray:
    b = np.asarray(basis, dtype=complex)
    if b.shape != (2, 2):
        raise OpticsError("a single-photon polarization basis needs two 2-vectors")
    gram = b.conj() @ b.T
    dev = np.abs(gram - np.eye(2)).max()
    if dev > tol:
        raise OpticsError(f"basis is not orthonormal (Gram deviation {dev:.3g})")
    return b


def measure_basis(
    state: FockState, beam: str, basis: Sequence[Sequence[complex]]
) -> list[tuple[int, FockState, float]]:
    """Measure the single-photon part of ``beam`` in a polarization basis.

    ``basis`` holds two orthonormal (H, V) vectors.  Terms where the beam
    holds other than one photon are discarded, so the outcome probabilities
    sum to the beam's single-photon weight.  The photon is absorbed: each
    post-measurement state has the beam empty and is renormalised.
    """
    b = check_basis(basis)
    ih, iv = state.registry.beam_indices(beam)
    total = state.norm2
    results = []
    for k in range(2):
        proj = b[k].conj()
        out = defaultdict(complex)
        for occ, amp in state.terms.items():
            nh, nv = occ[ih], occ[iv]
            if nh + nv != 1:
                continue
            rest = list(occ)
            rest[ih] = rest[iv] = 0
            out[tuple(rest)] += amp * (proj[0] if nh else proj[1])
        branch = FockState(state.registry, out, state.prune)
        prob = branch.norm2 / total if total else 0.0
        results.append((k, branch.normalize() if prob > 0 else branch, prob))
    return results
