import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poq import hashfn, qsim
from poq.errors import BudgetExhausted, InputError, ParseError, UnsupportedGate
from poq.hashfn import (
    HARDWARE_HASH,
    HARDWARE_HASH_TEXT,
    CountingOracle,
    HashPoly,
    empty_poly,
    hash_eval,
    parse_poly,
    phase_gate_list,
)

from conftest import naive_hash

ALL_X4 = ["".join(p) for p in itertools.product("01", repeat=4)]


@pytest.mark.parametrize("b,x,expected", [(0, "0000", 0), (1, "0000", 1), (1, "1100", 1), (0, "0110", 0)])
def test_hardware_hash_examples(b, x, expected):
    assert hash_eval(HARDWARE_HASH, b, x) == expected


def test_hardware_hash_matches_truth_table():
    for b in (0, 1):
        for x in ALL_X4:
            assert HARDWARE_HASH(b, x) == naive_hash(b, x)


def test_duplicate_term_kept_verbatim():
    assert len(HARDWARE_HASH.terms) == 7
    assert HARDWARE_HASH.terms.count((2, 3)) == 2
    assert str(HARDWARE_HASH) == HARDWARE_HASH_TEXT


def test_hash_eval_length_mismatch():
    with pytest.raises(InputError):
        hash_eval(HARDWARE_HASH, 0, "000")


def test_single_b_poly():
    h = parse_poly("b")
    assert h.k == 0 and h.terms == ((0,),)
    assert [h(b, "") for b in (0, 1)] == [0, 1]


@pytest.mark.parametrize("text,k", [("x9", 4), ("b + ", None), ("b + + x1", None),
                                    ("b * ", None), ("y1", None), ("x0", None), ("", None)])
def test_parse_errors(text, k):
    with pytest.raises(ParseError):
        parse_poly(text, k=k)


def test_resolve_hash_ids():
    assert hashfn.resolve_hash("paper-eq2", 4) is HARDWARE_HASH
    assert hashfn.resolve_hash("zero", 4).terms == ()
    assert hashfn.resolve_hash("poly:b*x2", 4)(1, "0100") == 1
    with pytest.raises(InputError):
        hashfn.resolve_hash("sha256", 4)
    with pytest.raises(InputError):
        hashfn.resolve_hash("paper-eq2", 6)


# -- phase synthesis ----------------------------------------------------------

def _phases_from_gates(gates, nq):
    """Diagonal of the gate product, read off by acting on every basis state at once."""
    u = np.eye(2**nq, dtype=complex)
    for g in gates:
        qsim.apply_gate_array(u, nq, g)
    assert np.allclose(u, np.diag(np.diag(u)))
    return np.diag(u)


def test_hardware_phase_gates_after_cancellation():
    gates = phase_gate_list(HARDWARE_HASH)
    assert [(g.kind, g.qubits) for g in gates] == [
        ("Z", (0,)), ("Z", (1,)), ("CZ", (0, 1)), ("CZ", (1, 4)), ("CCZ", (0, 3, 4))]


def test_hardware_phase_gates_reproduce_hash_signs():
    diag = _phases_from_gates(phase_gate_list(HARDWARE_HASH), 5)
    for idx in range(32):
        bits = format(idx, "05b")
        assert diag[idx] == pytest.approx((-1) ** naive_hash(int(bits[0]), bits[1:]))


def test_b_only_and_empty():
    assert [(g.kind, g.qubits) for g in phase_gate_list(parse_poly("b"))] == [("Z", (0,))]
    assert phase_gate_list(empty_poly(4)) == []


def test_degree_four_is_unsupported():
    with pytest.raises(UnsupportedGate):
        phase_gate_list(parse_poly("b*x1*x2*x3"))


monomials = st.lists(st.integers(0, 5), min_size=1, max_size=3, unique=True).map(tuple)
polys = st.lists(monomials, max_size=8).map(lambda ts: HashPoly(k=5, terms=tuple(ts)))


@settings(max_examples=60, deadline=None)
@given(polys)
def test_phase_list_equals_hash_on_every_input(h):
    diag = _phases_from_gates(phase_gate_list(h), h.k + 1)
    table = h.truth_table()
    assert np.allclose(diag, [(-1) ** v for v in table])


@settings(max_examples=60, deadline=None)
@given(polys)
def test_print_parse_preserves_values(h):
    if not h.terms:
        return
    again = parse_poly(str(h), k=h.k)
    assert again.truth_table() == h.truth_table()
    assert again.terms == h.terms


# -- counting oracle ---------------------------------------------------------

def test_oracle_deterministic_and_counts():
    o = CountingOracle(seed=5)
    a = o.query("10110")
    assert o.query("10110") == a
    assert o.count == 2 and len(o.distinct()) == 1


def test_oracle_seed_agreement_near_half():
    # exhaustive over the 32 five-bit inputs, averaged over many seed pairs
    inputs = [format(i, "05b") for i in range(32)]
    agree = []
    for s in range(200):
        a, b = CountingOracle(seed=2 * s), CountingOracle(seed=2 * s + 1)
        agree.append(sum(a.query(x) == b.query(x) for x in inputs))
    mean = np.mean(agree) / 32
    # 6400 comparisons: 3 sigma is about 0.019
    assert abs(mean - 0.5) < 0.02
    # a single pair sits within the 3-sigma binomial window of 16 +- 8.5
    assert all(7 <= a <= 25 for a in agree[:10])


def test_oracle_budget():
    o = CountingOracle(seed=1, budget=32)
    for i in range(32):
        o.query(format(i, "05b"))
    o.query("00000")  # repeats are free
    with pytest.raises(BudgetExhausted):
        o.query("100000")


def test_peek_does_not_log():
    o = CountingOracle(seed=3)
    v = o.peek(1, "0101")
    assert o.count == 0
    assert o(1, "0101") == v and o.count == 1


@settings(max_examples=40)
@given(st.lists(st.text("01", min_size=1, max_size=6), min_size=1, max_size=20), st.randoms())
def test_oracle_values_independent_of_query_order(inputs, rnd):
    a = CountingOracle(seed=9)
    first = {x: a.query(x) for x in inputs}
    shuffled = list(inputs)
    rnd.shuffle(shuffled)
    b = CountingOracle(seed=9)
    assert {x: b.query(x) for x in shuffled} == first
    assert a.count == b.count == len(inputs)


def test_oracle_rejects_non_bits():
    with pytest.raises(InputError):
        CountingOracle(seed=0).query("012")


def test_resolve_hash_fn_oracle():
    o = hashfn.resolve_hash_fn("oracle:17", 4, budget=3)
    assert isinstance(o, CountingOracle) and o.seed == 17 and o.budget == 3
    with pytest.raises(InputError):
        hashfn.resolve_hash_fn("oracle:abc", 4)
