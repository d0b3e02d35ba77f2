"""Gate-level prover circuit, peephole optimizer and unitary checks.

Register layout of a prover circuit: ``b`` on qubit 0, the ``k`` x-bits on
qubits ``1..k``, the ``m`` output bits on ``k+1..k+m`` and, for ``q = 4``, one
ancilla after them.

The TCF is lowered row by row. Row ``i`` computes ``v = sum_j c_j z_j mod q``
where ``z = (b, x_1..x_k)`` and ``c_j`` is ``y_i`` for ``b`` or the column of
``A`` scaled by the bit's place value. The output qubit ``w_i`` doubles as the
high bit of a 2-bit accumulator whose low bit lives on the ancilla; each
``c_j`` is added with a controlled adder (``CCX`` for the carry, ``CX`` into the
low bit, ``CX`` into the high bit for ``c_j & 2``). The low bit is then
uncomputed so the ancilla is reused by the next row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isclose, pi, tau
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainTooLarge, FormatError, InputError
from .hashfn import HashPoly, phase_gate_list
from .lattice import Challenge, LweInstance, bits_per_component, tcf_eval, bits_to_x
from .qsim import (
    ARITY,
    DIAGONAL,
    ROTATIONS,
    SELF_INVERSE,
    X_TYPE,
    Gate,
    apply_gate_array,
    apply_permutation_oracle,
    basis_state,
)

UNITARY_LIMIT = 10


@dataclass(frozen=True)
class Circuit:
    nqubits: int
    gates: tuple[Gate, ...]
    registers: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        gates = tuple(self.gates)
        for g in gates:
            if max(g.qubits) >= self.nqubits:
                raise InputError(f"{g} addresses a qubit outside 0..{self.nqubits - 1}")
        regs = {name: tuple(qs) for name, qs in self.registers.items()}
        flat = [q for qs in regs.values() for q in qs]
        if len(flat) != len(set(flat)) or any(not 0 <= q < self.nqubits for q in flat):
            raise InputError("registers must be disjoint ranges inside the circuit")
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "registers", regs)

    def __len__(self) -> int:
        return len(self.gates)

    def with_gates(self, gates: Iterable[Gate]) -> "Circuit":
        return Circuit(self.nqubits, tuple(gates), self.registers)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for g in self.gates:
            out[g.kind] = out.get(g.kind, 0) + 1
        return dict(sorted(out.items()))

    @property
    def ancillas(self) -> tuple[int, ...]:
        return self.registers.get("ancilla", ())


# -- text dump -------------------------------------------------------------

def dump_circuit(c: Circuit) -> str:
    lines = [f"qubits {c.nqubits}"]
    for name, qs in c.registers.items():
        lines.append(f"register {name} {' '.join(map(str, qs))}".rstrip())
    for g in c.gates:
        kind = g.kind if g.angle is None else f"{g.kind}({g.angle!r})"
        lines.append(" ".join([kind, *map(str, g.qubits)]))
    return "\n".join(lines) + "\n"


def load_circuit(text: str) -> Circuit:
    nqubits, regs, gates = None, {}, []
    try:
        for raw in text.splitlines():
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            head = parts[0]
            if head == "qubits":
                nqubits = int(parts[1])
            elif head == "register":
                regs[parts[1]] = tuple(int(v) for v in parts[2:])
            else:
                angle = None
                if "(" in head:
                    head, arg = head[:-1].split("(", 1)
                    angle = float(arg)
                gates.append(Gate(head, tuple(int(v) for v in parts[1:]), angle))
    except (ValueError, IndexError, InputError) as exc:
        raise FormatError(f"bad circuit text: {exc}") from exc
    if nqubits is None:
        raise FormatError("missing 'qubits' header")
    try:
        return Circuit(nqubits, tuple(gates), regs)
    except InputError as exc:
        raise FormatError(f"bad circuit text: {exc}") from exc


# -- prover circuit ---------------------------------------------------------

SUPPORTED_MODULI = (2, 4)


def _layout(ch: Challenge) -> dict[str, tuple[int, ...]]:
    k, m = ch.k, ch.m
    regs = {"b": (0,), "x": tuple(range(1, k + 1)), "w": tuple(range(k + 1, k + m + 1))}
    regs["ancilla"] = (k + m + 1,) if ch.q == 4 else ()
    return regs


def row_coefficients(ch: Challenge, row: int, little_endian: bool = False) -> list[int]:
    """``c_j`` for variables ``(b, x_1..x_k)``: ``v_row = sum c_j z_j mod q``."""
    width = bits_per_component(ch.q)
    coeffs = [ch.y[row] % ch.q]
    for j in range(ch.k):
        comp, pos = divmod(j, width)
        place = 1 << (pos if little_endian else width - 1 - pos)
        coeffs.append(ch.A[row][comp] * place % ch.q)
    return coeffs


def tcf_gates(ch: Challenge, little_endian: bool = False) -> list[Gate]:
    if ch.q not in SUPPORTED_MODULI:
        raise ConfigurationError(f"gate lowering supports q in {SUPPORTED_MODULI}, got {ch.q}")
    regs = _layout(ch)
    inputs = regs["b"] + regs["x"]
    gates: list[Gate] = []
    for i, w in enumerate(regs["w"]):
        coeffs = row_coefficients(ch, i, little_endian)
        if ch.q == 2:
            gates += [Gate("CX", (z, w)) for z, c in zip(inputs, coeffs) if c & 1]
            continue
        anc = regs["ancilla"][0]
        odd = [z for z, c in zip(inputs, coeffs) if c & 1]
        gates += [Gate("CX", (z, w)) for z, c in zip(inputs, coeffs) if c & 2]
        for z in odd:
            gates.append(Gate("CCX", (z, anc, w)))
            gates.append(Gate("CX", (z, anc)))
        gates += [Gate("CX", (z, anc)) for z in reversed(odd)]
    return gates


def tcf_circuit(ch: Challenge, little_endian: bool = False) -> Circuit:
    regs = _layout(ch)
    n = 1 + ch.k + ch.m + len(regs["ancilla"])
    return Circuit(n, tuple(tcf_gates(ch, little_endian)), regs)


def build_prover_circuit(ch: Challenge | LweInstance, h: HashPoly,
                         little_endian: bool = False) -> Circuit:
    """Hadamards, hash phase, TCF into ``w``, terminal Hadamards on ``(b, x)``.

    Measuring every qubit of ``b``, ``x`` and ``w`` afterwards yields ``m``,
    ``d`` and ``w``.
    """
    if isinstance(ch, LweInstance):
        ch = ch.challenge()
    if h.k != ch.k:
        raise InputError(f"hash takes {h.k} x-bits, challenge encodes {ch.k}")
    tcf = tcf_circuit(ch, little_endian)
    inputs = tcf.registers["b"] + tcf.registers["x"]
    gates = [Gate("H", (q,)) for q in inputs]
    gates += phase_gate_list(h, inputs)
    gates += tcf.gates
    gates += [Gate("H", (q,)) for q in inputs]
    return tcf.with_gates(gates)


# -- unitaries --------------------------------------------------------------

def circuit_unitary(c: Circuit) -> np.ndarray:
    if c.nqubits > UNITARY_LIMIT:
        raise DomainTooLarge(f"dense unitary refused above {UNITARY_LIMIT} qubits")
    u = np.eye(2**c.nqubits, dtype=complex)
    for g in c.gates:
        apply_gate_array(u, c.nqubits, g)
    return u


def global_phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """``min_phi max|u - e^{i phi} v|`` with ``phi`` fixed by the largest entry of ``v``."""
    if u.shape != v.shape:
        return float("inf")
    idx = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    if abs(v[idx]) < 1e-12:
        return float(np.max(np.abs(u)))
    phase = u[idx] / v[idx]
    phase /= abs(phase) if abs(phase) > 0 else 1
    return float(np.max(np.abs(u - phase * v)))


def clean_columns(c: Circuit) -> np.ndarray:
    """Basis indices whose ancilla qubits are all 0."""
    idx = np.arange(2**c.nqubits)
    mask = sum(1 << (c.nqubits - 1 - q) for q in c.ancillas)
    return np.flatnonzero((idx & mask) == 0)


def equivalent(a: Circuit, b: Circuit, atol: float = 1e-9, clean_ancillas: bool = False) -> bool:
    """Same unitary up to global phase, optionally only on ancilla-zero inputs."""
    ua, ub = circuit_unitary(a), circuit_unitary(b)
    if clean_ancillas:
        cols = clean_columns(a)
        ua, ub = ua[:, cols], ub[:, cols]
    return global_phase_distance(ua, ub) <= atol


def compiled_tcf_matches_oracle(ch: Challenge, little_endian: bool = False) -> bool:
    """Compare the lowered TCF with the permutation-oracle semantics on every ``(b, x)``."""
    c = tcf_circuit(ch, little_endian)
    inputs = c.registers["b"] + c.registers["x"]
    k_in = len(inputs)
    n = c.nqubits

    def fmap(bits: str) -> str:
        return tcf_eval(ch, int(bits[0]), bits_to_x(bits[1:], ch.q, little_endian))

    for v in range(2**k_in):
        label = format(v, f"0{k_in}b") + "0" * (n - k_in)
        compiled = basis_state(n, label)
        col = compiled.amps.reshape(-1, 1)
        for g in c.gates:
            apply_gate_array(col, n, g)
        oracle = apply_permutation_oracle(basis_state(n, label), inputs, c.registers["w"], fmap)
        if np.max(np.abs(compiled.amps - oracle.amps)) > 1e-12:
            return False
    return True


# -- optimizer --------------------------------------------------------------

_PHASE_ANGLE = {"Z": pi, "S": pi / 2, "T": pi / 4}
_ONE_QUBIT_DIAG = frozenset({"Z", "S", "T", "P", "RZ"})


def _targets(g: Gate) -> tuple[int, ...]:
    """Qubits whose computational value ``g`` can change."""
    if g.kind in DIAGONAL:
        return ()
    if g.kind in X_TYPE:
        return (g.target,)
    return g.qubits


def commutes(a: Gate, b: Gate) -> bool:
    """Sufficient (not necessary) commutation test."""
    if not set(a.qubits) & set(b.qubits):
        return True
    if a.kind in DIAGONAL and b.kind in DIAGONAL:
        return True
    if a.kind in DIAGONAL and b.kind in X_TYPE:
        return b.target not in a.qubits
    if b.kind in DIAGONAL and a.kind in X_TYPE:
        return a.target not in b.qubits
    if a.kind in X_TYPE and b.kind in X_TYPE:
        return a.target not in b.controls and b.target not in a.controls
    return False


def _signature(g: Gate):
    if g.kind in ("CZ", "CCZ"):
        return g.kind, frozenset(g.qubits)
    if g.kind in ("CX", "CCX"):
        return g.kind, frozenset(g.controls), g.target
    return g.kind, g.qubits


def _phase_gate(q: int, angle: float) -> Gate | None:
    angle %= tau
    if isclose(angle, 0, abs_tol=1e-12) or isclose(angle, tau, abs_tol=1e-12):
        return None
    for kind, a in _PHASE_ANGLE.items():
        if isclose(angle, a, abs_tol=1e-12):
            return Gate(kind, (q,))
    return Gate("P", (q,), angle)


def _combine(a: Gate, b: Gate):
    """Product of adjacent ``a`` then ``b``: ``()`` for identity, ``(g,)`` merged, else None."""
    if a.kind in SELF_INVERSE and _signature(a) == _signature(b):
        return ()
    if a.qubits != b.qubits or len(a.qubits) != 1:
        return None
    q = a.qubits[0]
    if a.kind in _ONE_QUBIT_DIAG and b.kind in _ONE_QUBIT_DIAG:
        angle = sum(_PHASE_ANGLE.get(g.kind, g.angle) for g in (a, b))
        g = _phase_gate(q, angle)
        return () if g is None else (g,)
    if a.kind == b.kind and a.kind in ("RX", "RY"):
        angle = (a.angle + b.angle) % (2 * tau)
        # RX(2*pi) = -I, a global phase
        if min(angle % tau, tau - angle % tau) < 1e-12:
            return ()
        return (Gate(a.kind, (q,), angle),)
    return None


def cancel_and_merge(gates: Sequence[Gate]) -> list[Gate]:
    """One sweep of inverse cancellation and phase/rotation merging through commuting gates."""
    out: list[Gate | None] = []
    for g in gates:
        i = len(out) - 1
        placed = False
        while i >= 0:
            h = out[i]
            if h is None:
                i -= 1
                continue
            merged = _combine(h, g)
            if merged is not None:
                out[i] = merged[0] if merged else None
                placed = True
                break
            if not commutes(h, g):
                break
            i -= 1
        if not placed:
            out.append(g)
    return [g for g in out if g is not None]


def drop_clean_ancilla_gates(gates: Sequence[Gate], ancillas: Sequence[int]) -> list[Gate]:
    """Remove gates that read an ancilla statically known to hold 0.

    Each ancilla's value is tracked as the parity of a set of other qubits;
    the empty set means 0. Only valid when ancillas start in ``|0>``.
    """
    ancillas = set(ancillas)
    forms: dict[int, frozenset | None] = {a: frozenset() for a in ancillas}
    out = []
    for g in gates:
        zero = [q for q in g.qubits if q in ancillas and forms[q] == frozenset()]
        reads_zero = (
            (g.kind in ("CX", "CCX") and any(q in g.controls for q in zero))
            or (g.kind in ("Z", "S", "T", "P", "CZ", "CCZ") and zero)
        )
        if reads_zero:
            continue
        out.append(g)
        changed = _targets(g)
        for a in ancillas:
            form = forms[a]
            if form is not None and form & set(changed):
                forms[a] = None
        for t in changed:
            if t not in ancillas:
                continue
            if g.kind == "CX" and g.controls[0] not in ancillas and forms[t] is not None:
                forms[t] = forms[t] ^ {g.controls[0]}
            else:
                forms[t] = None
    return out


@dataclass(frozen=True)
class OptimizeReport:
    before: int
    after: int
    before_counts: dict
    after_counts: dict
    nqubits: int
    ancillas: int

    @property
    def reduction(self) -> float:
        return 0.0 if self.before == 0 else 1 - self.after / self.before


def optimize(c: Circuit, assume_clean_ancillas: bool = False, max_rounds: int = 100) -> Circuit:
    """Run peephole passes to a fixpoint; never adds gates.

    With ``assume_clean_ancillas`` the result only matches ``c`` on inputs
    whose ancillas are 0 (see ``drop_clean_ancilla_gates``).
    """
    gates = list(c.gates)
    for _ in range(max_rounds):
        new = cancel_and_merge(gates)
        if assume_clean_ancillas:
            new = drop_clean_ancilla_gates(new, c.ancillas)
        if new == gates:
            break
        gates = new
    return c.with_gates(gates)


def optimize_report(c: Circuit, assume_clean_ancillas: bool = False) -> tuple[Circuit, OptimizeReport]:
    opt = optimize(c, assume_clean_ancillas)
    return opt, OptimizeReport(len(c), len(opt), c.counts(), opt.counts(),
                               c.nqubits, len(c.ancillas))


def random_circuit(nqubits: int, ngates: int, rng: np.random.Generator) -> Circuit:
    """Random circuit over the full gate set, biased towards cancellable neighbours."""
    kinds = sorted(ARITY)
    gates: list[Gate] = []
    for _ in range(ngates):
        if gates and rng.random() < 0.3:
            prev = gates[-1]
            gates.append(prev if prev.kind not in ROTATIONS
                         else Gate(prev.kind, prev.qubits, float(rng.uniform(-pi, pi))))
            continue
        kind = kinds[rng.integers(len(kinds))]
        qs = tuple(int(q) for q in rng.choice(nqubits, size=ARITY[kind], replace=False))
        angle = float(rng.uniform(-pi, pi)) if kind in ROTATIONS else None
        gates.append(Gate(kind, qs, angle))
    return Circuit(nqubits, tuple(gates))
