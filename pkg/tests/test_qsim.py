import itertools
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poq import lattice, qsim
from poq.errors import ConfigurationError, InputError, PreconditionViolation
from poq.hashfn import HARDWARE_HASH
from poq.qsim import (
    CCZ,
    CX,
    CZ,
    H,
    Gate,
    apply_gate,
    apply_gates,
    apply_pauli_noise,
    apply_permutation_oracle,
    apply_phase_oracle,
    basis_state,
    init_state,
    measure,
)

from conftest import naive_hash


def uniform(n):
    st_ = init_state(n)
    return apply_gates(st_, [H(q) for q in range(n)])


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return qsim.StateVector(n, v / np.linalg.norm(v))


def test_init_state():
    assert np.array_equal(init_state(2).amps, [1, 0, 0, 0])
    one = apply_gate(init_state(1), H(0))
    assert np.allclose(one.amps, [1 / sqrt(2), 1 / sqrt(2)])


@pytest.mark.parametrize("n", [0, 25, -1])
def test_init_state_guard(n):
    with pytest.raises(ConfigurationError):
        init_state(n)


def test_h_twice_is_identity():
    s = random_state(3, 0)
    orig = s.amps.copy()
    apply_gates(s, [H(1), H(1)])
    assert np.allclose(s.amps, orig, atol=1e-12)


def test_cz_and_ccz_on_basis():
    s = apply_gate(basis_state(2, "11"), CZ(0, 1))
    assert s.amps[3] == pytest.approx(-1)
    for bits in ("".join(p) for p in itertools.product("01", repeat=3)):
        s = apply_gate(basis_state(3, bits), CCZ(0, 1, 2))
        assert s.amps[int(bits, 2)] == pytest.approx(-1 if bits == "111" else 1)


def test_cx_flips_target_when_control_set():
    s = apply_gate(basis_state(3, "100"), CX(0, 2))
    assert s.amps[0b101] == pytest.approx(1)
    s = apply_gate(basis_state(3, "001"), CX(0, 2))
    assert s.amps[0b001] == pytest.approx(1)


def test_out_of_range_qubit_is_input_error():
    with pytest.raises(InputError):
        apply_gate(init_state(2), H(2))


@pytest.mark.parametrize("g", [Gate(k, tuple(range(qsim.ARITY[k])),
                                    0.37 if k in qsim.ROTATIONS else None)
                               for k in sorted(qsim.ARITY)])
def test_gate_matrices_unitary(g):
    u = qsim.gate_matrix(g)
    assert np.allclose(u @ u.conj().T, np.eye(len(u)), atol=1e-12)


gate_kinds = sorted(qsim.ARITY)


@st.composite
def gate_seq(draw, n=4):
    out = []
    for _ in range(draw(st.integers(0, 15))):
        kind = draw(st.sampled_from(gate_kinds))
        qs = draw(st.permutations(range(n)))[: qsim.ARITY[kind]]
        angle = draw(st.floats(-6, 6)) if kind in qsim.ROTATIONS else None
        out.append(Gate(kind, tuple(qs), angle))
    return out


@settings(max_examples=60, deadline=None)
@given(gate_seq(), st.integers(0, 2**16))
def test_norm_preserved(gates, seed):
    s = random_state(4, seed)
    apply_gates(s, gates)
    assert abs(s.norm() - 1) < 1e-9


# -- oracles -----------------------------------------------------------------

def test_phase_oracle_zero_and_involution():
    s = random_state(3, 1)
    orig = s.amps.copy()
    apply_phase_oracle(s, lambda i: 0)
    assert np.allclose(s.amps, orig)
    pred = lambda i: bin(i).count("1") & 1
    apply_phase_oracle(apply_phase_oracle(s, pred), pred)
    assert np.allclose(s.amps, orig)


def test_phase_oracle_hash_signs():
    s = uniform(5)
    apply_phase_oracle(s, lambda i: HARDWARE_HASH((i >> 4) & 1, format(i & 15, "04b")))
    for i in range(32):
        bits = format(i, "05b")
        assert s.amps[i] * sqrt(32) == pytest.approx((-1) ** naive_hash(int(bits[0]), bits[1:]))


def test_permutation_identity_matches_cx():
    a = random_state(2, 3)
    a.amps[[1, 3]] = 0
    a.amps /= np.linalg.norm(a.amps)
    b = a.copy()
    apply_permutation_oracle(a, [0], [1], lambda v: v)
    apply_gate(b, CX(0, 1))
    assert np.allclose(a.amps, b.amps)


def test_permutation_constant_zero_is_identity():
    s = uniform(3)
    s = apply_permutation_oracle(s, [0, 1, 2], [], lambda v: "")
    assert np.allclose(s.amps, uniform(3).amps)
    t = init_state(4)
    apply_gates(t, [H(0), H(1)])
    orig = t.amps.copy()
    apply_permutation_oracle(t, [0, 1], [2, 3], lambda v: "00")
    assert np.allclose(t.amps, orig)


def test_permutation_precondition():
    s = uniform(2)
    with pytest.raises(PreconditionViolation):
        apply_permutation_oracle(s, [0], [1], lambda v: v)


def _tcf_state(inst):
    """|b, x> uniform on 5 qubits with f(b, x) written into qubits 5..8."""
    ch = inst.challenge()
    s = init_state(9)
    apply_gates(s, [H(q) for q in range(5)])

    def fmap(bits):
        return lattice.tcf_eval(ch, int(bits[0]), lattice.bits_to_x(bits[1:], 4))

    return apply_permutation_oracle(s, range(5), range(5, 9), fmap)


def test_tcf_image_distribution_uniform_over_16():
    inst = lattice.builtin(0)
    probs = _tcf_state(inst).probabilities()
    marg = np.bincount(qsim.register_values(9, range(5, 9)), weights=probs, minlength=16)
    images = set(lattice.attained_images(inst))
    assert len(images) == 16
    for w in range(16):
        expected = 1 / 16 if format(w, "04b") in images else 0
        assert marg[w] == pytest.approx(expected)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_permutation_reproduces_classical_image_distribution(seed):
    rng = np.random.default_rng(seed)
    table = rng.integers(0, 8, size=8)
    s = uniform(3)
    s = qsim.StateVector(6, np.kron(s.amps, [1] + [0] * 7).astype(complex))
    apply_permutation_oracle(s, [0, 1, 2], [3, 4, 5], lambda v: format(table[int(v, 2)], "03b"))
    marg = np.bincount(qsim.register_values(6, [3, 4, 5]), weights=s.probabilities(), minlength=8)
    assert np.allclose(marg, np.bincount(table, minlength=8) / 8)


# -- measurement -------------------------------------------------------------

def test_measure_basis_state():
    bits, _ = measure(basis_state(3, "101"), [0, 1, 2], np.random.default_rng(0))
    assert bits == "101"


def test_measured_image_collapses_onto_claw():
    inst = lattice.builtin(0)
    rng = np.random.default_rng(4)
    for _ in range(20):
        w, post = measure(_tcf_state(inst), range(5, 9), rng)
        claw = lattice.invert_trapdoor(inst, w)
        support = {post.basis_label(i)[:5] for i in np.flatnonzero(post.probabilities() > 1e-12)}
        expected = {"0" + lattice.x_to_bits(claw.x0, 4), "1" + lattice.x_to_bits(claw.x1, 4)}
        assert support == expected
        assert abs(post.norm() - 1) < 1e-9


def test_measure_uniform_frequency():
    rng = np.random.default_rng(123)
    ones = sum(measure(uniform(1), [0], rng)[0] == "1" for _ in range(10_000))
    assert abs(ones / 10_000 - 0.5) <= 0.015


def test_measure_reproducible():
    a = [measure(uniform(3), [0, 1, 2], np.random.default_rng(7))[0] for _ in range(3)]
    assert len(set(a)) == 1


# -- noise -------------------------------------------------------------------

def test_noise_p0_identity():
    s = random_state(3, 2)
    orig = s.amps.copy()
    apply_pauli_noise(s, 0.0, [0, 1, 2], np.random.default_rng(0))
    assert np.array_equal(s.amps, orig)


@pytest.mark.parametrize("p", [-0.1, 1.5])
def test_noise_range(p):
    with pytest.raises(InputError):
        apply_pauli_noise(init_state(1), p, [0], np.random.default_rng(0))


def test_full_noise_gives_uniform_outcomes():
    rng = np.random.default_rng(99)
    shots = 8000
    counts = np.zeros(8)
    for _ in range(shots):
        s = basis_state(3, "000")
        apply_pauli_noise(s, 1.0, [0, 1, 2], rng)
        bits, _ = measure(s, [0, 1, 2], rng)
        counts[int(bits, 2)] += 1
    expected = shots / 8
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # chi-square, 7 degrees of freedom: 99.9th percentile is 24.3
    assert chi2 < 24.3


def test_noise_trajectory_reproducible():
    def run(seed):
        s = uniform(3)
        apply_pauli_noise(s, 0.5, [0, 1, 2], np.random.default_rng(seed))
        return s.amps
    assert np.array_equal(run(11), run(11))
