import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qerc.fock import (
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
    hwp_matrix,
    measure_basis,
    project_photon_count,
)

REG = ModeRegistry.from_beams(["a", "b"])
AH, AV, BH, BV = (ModeLabel(b, p) for b in "ab" for p in "HV")


def ket(**counts):
    names = {"ah": AH, "av": AV, "bh": BH, "bv": BV}
    return FockState.basis(REG, {names[k]: v for k, v in counts.items()})


def test_registry_rejects_duplicates_and_bad_pol():
    with pytest.raises(OpticsError):
        ModeRegistry([AH, AH])
    with pytest.raises(OpticsError):
        ModeLabel("a", "D")


def test_creators_normalisation():
    s = apply_creators(FockState.vacuum(REG), [(1.0, [AH, AH])])
    assert s.terms[(2, 0, 0, 0)] == pytest.approx(math.sqrt(2))


def test_hong_ou_mandel():
    # 50:50 beam splitter on the H modes of a and b
    u = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    out = apply_mode_unitary(ket(ah=1, bh=1), u, [AH, BH])
    assert out.terms.get((1, 0, 1, 0), 0.0) == pytest.approx(0.0, abs=1e-15)
    assert abs(out.terms[(2, 0, 0, 0)]) ** 2 == pytest.approx(0.5)
    assert abs(out.terms[(0, 0, 2, 0)]) ** 2 == pytest.approx(0.5)


def test_hwp_two_photons_hadamard():
    out = apply_hwp(ket(ah=1, av=1), "a", -math.pi / 4)
    assert out.allclose((ket(ah=2) - ket(av=2)).scale(1 / math.sqrt(2)))


def test_hwp_rotation_convention():
    # column j of the matrix is the image of H (j=0) or V (j=1)
    out = apply_hwp(ket(ah=1), "a", 0.3)
    assert out.terms[(1, 0, 0, 0)] == pytest.approx(math.cos(0.3))
    assert out.terms[(0, 1, 0, 0)] == pytest.approx(math.sin(0.3))


def test_nonunitary_rejected():
    with pytest.raises(OpticsError):
        apply_mode_unitary(ket(ah=1), np.array([[1, 0], [0, 2]]), beam_modes("a"))


def test_phase_and_bit_flip():
    s = (ket(ah=1) + ket(av=1)).normalize()
    out = apply_phase_shift_v(s, "a", math.pi / 2)
    assert out.terms[(0, 1, 0, 0)] == pytest.approx(1j / math.sqrt(2))
    assert apply_bit_flip(ket(ah=2, bv=1), "a").allclose(ket(av=2, bv=1))


def test_pbs_routes_polarisations():
    reg = ModeRegistry.from_beams(["1", "2", "o1", "o2"])
    s = FockState.basis(reg, {ModeLabel("1", "H"): 1, ModeLabel("1", "V"): 1,
                              ModeLabel("2", "H"): 1})
    out = apply_pbs(s, "1", "2", "o1", "o2")
    want = FockState.basis(reg, {ModeLabel("o1", "H"): 1, ModeLabel("o2", "V"): 1,
                                 ModeLabel("o2", "H"): 1})
    assert out.allclose(want)


def test_pbs_refuses_occupied_output():
    reg = ModeRegistry.from_beams(["1", "2", "o1", "o2"])
    s = FockState.basis(reg, {ModeLabel("o1", "H"): 1})
    with pytest.raises(OpticsError):
        apply_pbs(s, "1", "2", "o1", "o2")


def test_project_photon_count():
    s = (ket(ah=1) + ket(ah=1, bh=1) + ket(bv=2)).normalize()
    post, p = project_photon_count(s, "b", 1)
    assert p == pytest.approx(1 / 3)
    assert post.allclose(ket(ah=1, bh=1))
    empty, p0 = project_photon_count(ket(ah=1), "b", 3)
    assert p0 == 0.0 and empty.norm2 == 0.0


def test_measure_basis_single_photon_only():
    s = (ket(ah=1, bh=1) + ket(av=1, bh=1) + ket(ah=2)).normalize()
    plus = np.array([1, 1]) / math.sqrt(2)
    minus = np.array([1, -1]) / math.sqrt(2)
    res = measure_basis(s, "a", [plus, minus])
    probs = [p for _, _, p in res]
    assert probs == pytest.approx([2 / 3, 0.0])
    assert res[0][1].allclose(ket(bh=1))


def test_measure_basis_rejects_non_orthonormal():
    with pytest.raises(OpticsError):
        measure_basis(ket(ah=1), "a", [[1, 0], [1, 0]])


def test_count_distribution_marginal():
    s = (ket(ah=1, bh=1) + ket(av=1, bh=1)).normalize()
    assert s.count_distribution([BH]) == pytest.approx({(1,): 1.0})
    assert s.count_distribution([AH]) == pytest.approx({(1,): 0.5, (0,): 0.5})


def test_states_are_immutable():
    s = ket(ah=1)
    with pytest.raises(TypeError):
        s.terms[(0, 0, 0, 0)] = 1.0


@st.composite
def fock_states(draw):
    n_terms = draw(st.integers(1, 4))
    s = FockState.empty(REG)
    for _ in range(n_terms):
        occ = {m: draw(st.integers(0, 2)) for m in REG}
        re, im = draw(st.floats(-1, 1)), draw(st.floats(-1, 1))
        if not any(occ.values()):
            continue
        s = s + FockState.basis(REG, occ).scale(complex(re, im))
    return s


@settings(max_examples=40, deadline=None)
@given(fock_states(), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_unitary_preserves_norm_and_photon_numbers(s, a, b):
    if s.norm2 < 1e-6:
        return
    s = s.normalize()
    u = np.kron(hwp_matrix(a), np.diag([1, np.exp(1j * b)]))
    out = apply_mode_unitary(s, u, list(REG))
    assert out.norm2 == pytest.approx(1.0, abs=1e-12)
    before, after = s.photon_numbers(), out.photon_numbers()
    for n in set(before) | set(after):
        assert after.get(n, 0.0) == pytest.approx(before.get(n, 0.0), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(fock_states(), st.floats(-math.pi, math.pi))
def test_hwp_inverse(s, d):
    back = apply_hwp(apply_hwp(s, "a", d), "a", -d)
    assert back.allclose(s, 1e-12)
