"""Dense state-vector simulator.

Qubit 0 is the most significant bit of a basis index, so the bit-string of
basis index ``i`` read left to right lists qubits 0, 1, ... in order.

Every kernel works on an array of shape ``(2**n, B)``: a single state is the
``B == 1`` case and ``circuit_unitary`` pushes the identity through as ``B``
columns at once. Kernels mutate in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import cos, pi, sin, sqrt
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, InputError, PreconditionViolation

MAX_QUBITS = 24

_INV_SQRT2 = 1 / sqrt(2)

FIXED_1Q = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * pi / 4)]], dtype=complex),
}


def _rotation(kind: str, t: float) -> np.ndarray:
    if kind == "RX":
        return np.array([[cos(t / 2), -1j * sin(t / 2)], [-1j * sin(t / 2), cos(t / 2)]])
    if kind == "RY":
        return np.array([[cos(t / 2), -sin(t / 2)], [sin(t / 2), cos(t / 2)]], dtype=complex)
    if kind == "RZ":
        return np.diag([np.exp(-1j * t / 2), np.exp(1j * t / 2)])
    if kind == "P":
        return np.diag([1, np.exp(1j * t)]).astype(complex)
    raise InputError(f"unknown rotation {kind}")


ROTATIONS = frozenset({"RX", "RY", "RZ", "P"})
ONE_QUBIT = frozenset(FIXED_1Q) | ROTATIONS
# Controlled kinds list their controls first and the target last.
ARITY = {**{k: 1 for k in ONE_QUBIT}, "CX": 2, "CZ": 2, "CCX": 3, "CCZ": 3}
DIAGONAL = frozenset({"Z", "S", "T", "P", "RZ", "CZ", "CCZ"})
X_TYPE = frozenset({"X", "CX", "CCX"})
SELF_INVERSE = frozenset({"H", "X", "Y", "Z", "CX", "CZ", "CCX", "CCZ"})


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in ARITY:
            raise InputError(f"unknown gate kind {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        if len(qubits) != ARITY[self.kind]:
            raise InputError(f"{self.kind} acts on {ARITY[self.kind]} qubits, got {qubits}")
        if len(set(qubits)) != len(qubits) or min(qubits) < 0:
            raise InputError(f"qubit indices must be distinct and non-negative: {qubits}")
        if (self.kind in ROTATIONS) != (self.angle is not None):
            raise InputError(f"{self.kind} {'needs' if self.kind in ROTATIONS else 'takes no'} angle")
        object.__setattr__(self, "qubits", qubits)

    @property
    def target(self) -> int:
        return self.qubits[-1]

    @property
    def controls(self) -> tuple[int, ...]:
        return self.qubits[:-1] if self.kind in ("CX", "CCX") else ()

    def __str__(self) -> str:
        args = " ".join(str(q) for q in self.qubits)
        if self.angle is not None:
            return f"{self.kind}({self.angle!r}) {args}"
        return f"{self.kind} {args}"


# Convenience constructors.
def H(q): return Gate("H", (q,))
def X(q): return Gate("X", (q,))
def Z(q): return Gate("Z", (q,))
def CX(c, t): return Gate("CX", (c, t))
def CZ(a, b): return Gate("CZ", (a, b))
def CCX(c0, c1, t): return Gate("CCX", (c0, c1, t))
def CCZ(a, b, c): return Gate("CCZ", (a, b, c))


def matrix_1q(g: Gate) -> np.ndarray:
    if g.kind in FIXED_1Q:
        return FIXED_1Q[g.kind]
    return _rotation(g.kind, g.angle)


# -- kernels -----------------------------------------------------------------

def _kernel_1q(amps: np.ndarray, n: int, q: int, u: np.ndarray) -> None:
    view = amps.reshape(2**q, 2, -1)
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    view[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1


def _index(n: int, fixed: dict[int, int]) -> tuple:
    idx = [slice(None)] * (n + 1)
    for q, v in fixed.items():
        idx[q] = v
    return tuple(idx)


def apply_gate_array(amps: np.ndarray, n: int, g: Gate) -> None:
    """Apply ``g`` in place to ``amps`` of shape ``(2**n, B)``."""
    if max(g.qubits) >= n:
        raise InputError(f"{g} addresses a qubit outside 0..{n - 1}")
    if g.kind in ONE_QUBIT:
        _kernel_1q(amps, n, g.qubits[0], matrix_1q(g))
        return
    t = amps.reshape((2,) * n + (-1,))
    if g.kind in ("CZ", "CCZ"):
        t[_index(n, {q: 1 for q in g.qubits})] *= -1
        return
    # CX / CCX: swap target 0 and 1 slices within the all-controls-set block
    ctrl = {q: 1 for q in g.qubits[:-1]}
    lo = _index(n, {**ctrl, g.target: 0})
    hi = _index(n, {**ctrl, g.target: 1})
    tmp = t[lo].copy()
    t[lo] = t[hi]
    t[hi] = tmp


def gate_matrix(g: Gate) -> np.ndarray:
    """Matrix of ``g`` on its own qubits, listed in ``g.qubits`` order (first = MSB)."""
    k = len(g.qubits)
    local = Gate(g.kind, tuple(range(k)), g.angle)
    u = np.eye(2**k, dtype=complex)
    apply_gate_array(u, k, local)
    return u


# -- state vectors -----------------------------------------------------------

@dataclass
class StateVector:
    nqubits: int
    amps: np.ndarray = field(repr=False)

    def copy(self) -> "StateVector":
        return StateVector(self.nqubits, self.amps.copy())

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def basis_label(self, index: int) -> str:
        return format(index, f"0{self.nqubits}b")


def init_state(nqubits: int) -> StateVector:
    if not isinstance(nqubits, (int, np.integer)) or not 1 <= nqubits <= MAX_QUBITS:
        raise ConfigurationError(f"nqubits must be in 1..{MAX_QUBITS}, got {nqubits!r}")
    amps = np.zeros(2**nqubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(int(nqubits), amps)


def apply_gate(st: StateVector, g: Gate) -> StateVector:
    apply_gate_array(st.amps.reshape(-1, 1), st.nqubits, g)
    return st


def apply_gates(st: StateVector, gates: Sequence[Gate]) -> StateVector:
    col = st.amps.reshape(-1, 1)
    for g in gates:
        apply_gate_array(col, st.nqubits, g)
    return st


def apply_phase_oracle(st: StateVector, predicate: Callable[[int], int] | np.ndarray) -> StateVector:
    """``amp[i] *= (-1) ** predicate(i)``; ``predicate`` may be a precomputed 0/1 array."""
    if callable(predicate):
        bits = np.fromiter((predicate(i) & 1 for i in range(st.amps.size)), dtype=np.int8,
                           count=st.amps.size)
    else:
        bits = np.asarray(predicate, dtype=np.int8)
        if bits.shape != st.amps.shape:
            raise InputError("phase table must have one entry per basis state")
    st.amps[bits.astype(bool)] *= -1
    return st


def register_values(n: int, qubits: Sequence[int]) -> np.ndarray:
    """For each basis index, the integer read from ``qubits`` (first listed = MSB)."""
    return _register_values_cached(n, tuple(qubits))


@lru_cache(maxsize=256)
def _register_values_cached(n: int, qubits: tuple[int, ...]) -> np.ndarray:
    idx = np.arange(2**n)
    val = np.zeros_like(idx)
    for q in qubits:
        val = (val << 1) | ((idx >> (n - 1 - q)) & 1)
    val.setflags(write=False)
    return val


def _register_mask(n: int, qubits: Sequence[int]) -> int:
    return sum(1 << (n - 1 - q) for q in qubits)


def _spread(n: int, qubits: Sequence[int], value: int) -> int:
    """Basis-index bits contributed by writing ``value`` into ``qubits``."""
    out = 0
    k = len(qubits)
    for j, q in enumerate(qubits):
        if (value >> (k - 1 - j)) & 1:
            out |= 1 << (n - 1 - q)
    return out


def _check_registers(n: int, *regs: Sequence[int]) -> None:
    flat = [q for r in regs for q in r]
    if len(set(flat)) != len(flat):
        raise InputError("registers overlap")
    if flat and (min(flat) < 0 or max(flat) >= n):
        raise InputError(f"register qubit outside 0..{n - 1}")


def permutation_table(n: int, inreg: Sequence[int], outreg: Sequence[int],
                      fmap: Callable[[str], str]) -> tuple[np.ndarray, np.ndarray]:
    """Source and destination indices of ``|v>|0> -> |v>|fmap(v)>``."""
    _check_registers(n, inreg, outreg)
    k_in, k_out = len(inreg), len(outreg)
    images = np.empty(2**k_in, dtype=np.int64)
    for v in range(2**k_in):
        w = fmap(format(v, f"0{k_in}b"))
        if len(w) != k_out:
            raise InputError(f"fmap returned {w!r}, expected {k_out} bits")
        images[v] = _spread(n, outreg, int(w, 2)) if w else 0
    src = np.flatnonzero((np.arange(2**n) & _register_mask(n, outreg)) == 0)
    dst = src | images[register_values(n, inreg)[src]]
    return src, dst


def apply_permutation_oracle(st: StateVector, inreg: Sequence[int], outreg: Sequence[int],
                             fmap: Callable[[str], str] | None = None, *,
                             table: tuple[np.ndarray, np.ndarray] | None = None,
                             atol: float = 1e-12) -> StateVector:
    """Write ``fmap(in)`` into an all-zero ``outreg``. Pass ``table`` to reuse a precomputed map."""
    n = st.nqubits
    if table is None:
        table = permutation_table(n, inreg, outreg, fmap)
    src, dst = table
    mask = _register_mask(n, outreg)
    dirty = (np.arange(2**n) & mask) != 0
    if np.any(np.abs(st.amps[dirty]) > atol):
        raise PreconditionViolation("output register must start in |0...0>")
    new = np.zeros_like(st.amps)
    new[dst] = st.amps[src]
    st.amps = new
    return st


def measure(st: StateVector, qubits: Sequence[int], rng: np.random.Generator) -> tuple[str, StateVector]:
    """Born-rule sample of ``qubits``; collapses and renormalizes ``st`` in place."""
    n = st.nqubits
    qubits = list(qubits)
    _check_registers(n, qubits)
    if not qubits:
        return "", st
    probs = np.abs(st.amps) ** 2
    values = register_values(n, qubits)
    marginal = np.bincount(values, weights=probs, minlength=2**len(qubits))
    marginal /= marginal.sum()
    outcome = int(np.searchsorted(np.cumsum(marginal), rng.random(), side="right"))
    outcome = min(outcome, marginal.size - 1)
    while marginal[outcome] == 0:  # guards the cumsum edge on zero-probability tails
        outcome -= 1
    keep = values == outcome
    st.amps[~keep] = 0
    st.amps /= sqrt(marginal[outcome] * probs.sum())
    return format(outcome, f"0{len(qubits)}b"), st


PAULIS = ("I", "X", "Y", "Z")


def apply_pauli_noise(st: StateVector, p: float, qubits: Sequence[int],
                      rng: np.random.Generator) -> StateVector:
    """Trajectory depolarizing channel: with probability ``p`` per qubit, a uniformly random Pauli.

    The Pauli is drawn from ``{I, X, Y, Z}``, so ``p = 1`` leaves each qubit
    maximally mixed.
    """
    if not 0 <= p <= 1:
        raise InputError(f"noise probability {p} outside [0, 1]")
    if p == 0:
        return st
    for q in qubits:
        if rng.random() < p:
            kind = PAULIS[rng.integers(4)]
            if kind != "I":
                apply_gate(st, Gate(kind, (q,)))
    return st


def basis_state(nqubits: int, bits: str) -> StateVector:
    st = init_state(nqubits)
    if len(bits) != nqubits:
        raise InputError("basis label length must equal nqubits")
    st.amps[0] = 0
    st.amps[int(bits, 2)] = 1
    return st
