import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poq import circuits, lattice, protocol, qsim
from poq.circuits import (
    Circuit,
    build_prover_circuit,
    circuit_unitary,
    dump_circuit,
    equivalent,
    global_phase_distance,
    load_circuit,
    optimize,
    optimize_report,
    random_circuit,
)
from poq.errors import ConfigurationError, DomainTooLarge, FormatError
from poq.hashfn import HARDWARE_HASH, empty_poly
from poq.qsim import CX, H, Gate


def test_empty_circuit_unitary_is_identity():
    assert np.allclose(circuit_unitary(Circuit(3, ())), np.eye(8))


def test_single_h_unitary():
    assert np.allclose(circuit_unitary(Circuit(1, (H(0),))), np.array([[1, 1], [1, -1]]) / np.sqrt(2))


def test_unitary_refuses_large_circuit():
    with pytest.raises(DomainTooLarge):
        circuit_unitary(Circuit(11, ()))


def test_unitary_gate_order():
    # X then H differs from H then X; the matrix must follow list order
    u = circuit_unitary(Circuit(1, (Gate("X", (0,)), H(0))))
    assert np.allclose(u, qsim.gate_matrix(H(0)) @ qsim.gate_matrix(Gate("X", (0,))))


@pytest.mark.parametrize("gates", [[H(0), H(0)], [CX(0, 1), CX(0, 1)],
                                   [Gate("Z", (1,)), Gate("Z", (1,))],
                                   [Gate("X", (0,)), Gate("X", (0,))]])
def test_adjacent_inverses_cancel(gates):
    assert optimize(Circuit(2, tuple(gates))).gates == ()


def test_phases_merge():
    c = Circuit(1, (Gate("T", (0,)), Gate("T", (0,))))
    out = optimize(c)
    assert len(out) == 1 and equivalent(c, out)


def test_cancellation_through_commuting_gate():
    c = Circuit(3, (CX(0, 1), Gate("Z", (0,)), CX(0, 1)))
    out = optimize(c)
    assert out.gates == (Gate("Z", (0,)),)


def test_non_commuting_pair_kept():
    c = Circuit(2, (CX(0, 1), H(1), CX(0, 1)))
    assert optimize(c).gates == c.gates


@pytest.mark.parametrize("seed", range(100))
def test_optimize_random_five_qubit(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(5, int(rng.integers(5, 60)), rng)
    out = optimize(c)
    assert len(out) <= len(c)
    assert global_phase_distance(circuit_unitary(c), circuit_unitary(out)) < 1e-9
    assert optimize(out).gates == out.gates


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 40))
def test_optimize_never_grows_and_is_idempotent(seed, ngates):
    c = random_circuit(4, ngates, np.random.default_rng(seed))
    once = optimize(c)
    assert len(once) <= len(c)
    assert optimize(once).gates == once.gates


def test_dump_load_round_trip(builtin_instance):
    c = build_prover_circuit(builtin_instance.challenge(), HARDWARE_HASH)
    text = dump_circuit(c)
    back = load_circuit(text)
    assert back == c and back.registers == c.registers
    assert dump_circuit(back) == text


def test_dump_format_lines():
    c = Circuit(2, (H(0), CX(0, 1), Gate("RZ", (1,), 0.5)), {"b": (0,), "w": (1,)})
    lines = dump_circuit(c).splitlines()
    assert lines[0] == "qubits 2"
    assert "H 0" in lines and "CX 0 1" in lines
    assert load_circuit(dump_circuit(c)) == c


@pytest.mark.parametrize("text", ["", "qubits x", "qubits 2\nFOO 0", "qubits 2\nCX 0 0", "qubits 2\nH 5"])
def test_load_garbage(text):
    with pytest.raises(FormatError):
        load_circuit(text)


# -- prover circuits ----------------------------------------------------------

def test_prover_circuit_layout(builtin_instance):
    c = build_prover_circuit(builtin_instance.challenge(), HARDWARE_HASH)
    assert c.registers["b"] == (0,)
    assert c.registers["x"] == (1, 2, 3, 4)
    assert c.registers["w"] == (5, 6, 7, 8)
    assert c.nqubits == 10 and len(c.ancillas) == 1


def test_empty_hash_only_drops_phase_gates():
    ch = lattice.builtin(0).challenge()
    full = build_prover_circuit(ch, HARDWARE_HASH)
    bare = build_prover_circuit(ch, empty_poly(4))
    phase = set(qsim_phase := [g for g in full.gates if g.kind in ("Z", "CZ", "CCZ")])
    assert len(qsim_phase) == 5
    assert [g for g in full.gates if g not in phase] == list(bare.gates)


def test_unsupported_modulus():
    inst = lattice.gen_instance(1, 6, 8, 1, seed=1)
    with pytest.raises(ConfigurationError):
        build_prover_circuit(inst.challenge(), empty_poly(3))


def test_q2_lowering_matches_oracle():
    inst = lattice.gen_instance(3, 5, 2, 0, seed=4)
    assert circuits.compiled_tcf_matches_oracle(inst.challenge())


def test_compiled_tcf_equals_permutation_oracle(builtin_instance):
    ch = builtin_instance.challenge()
    tcf = circuits.tcf_circuit(ch)
    u = circuit_unitary(tcf)
    n = tcf.nqubits
    for v in range(32):
        bits = format(v, "05b")
        col = u[:, int(bits + "0" * (n - 5), 2)]
        w = lattice.tcf_eval(ch, int(bits[0]), lattice.bits_to_x(bits[1:], 4))
        expected = int(bits + w + "0" * (n - 9), 2)
        assert abs(col[expected]) == pytest.approx(1)


def test_circuit_route_measurements_verify():
    inst = lattice.builtin(0)
    prover = protocol.QuantumProver(inst.challenge(), HARDWARE_HASH, route="circuit")
    for shot in range(2000):
        t = prover.prove(protocol.shot_rng(5, shot))
        assert protocol.verify(inst, HARDWARE_HASH, t).accept


def test_optimized_prover_circuit_equivalent(builtin_instance):
    c = build_prover_circuit(builtin_instance.challenge(), HARDWARE_HASH)
    opt, rep = optimize_report(c)
    assert rep.after <= rep.before and rep.reduction > 0
    assert global_phase_distance(circuit_unitary(c), circuit_unitary(opt)) < 1e-9


def test_clean_ancilla_mode_matches_on_clean_inputs(builtin_instance):
    c = build_prover_circuit(builtin_instance.challenge(), HARDWARE_HASH)
    opt = optimize(c, assume_clean_ancillas=True)
    assert len(opt) <= len(optimize(c))
    assert equivalent(c, opt, clean_ancillas=True)
