"""Verifier, honest quantum prover, classical adversaries and session driver.

A transcript ``(w, m, d)`` is accepted when, for the claw ``(x0, x1)`` behind
``w``::

    <d, bits(x0) xor bits(x1)> = m xor H(0, x0) xor H(1, x1)   (mod 2)
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .circuits import build_prover_circuit, optimize
from .errors import InputError, MalformedInstance, NotInImage
from .hashfn import CountingOracle, HashLike, HashPoly, resolve_hash_fn
from .lattice import (
    Challenge,
    LweInstance,
    all_inputs,
    bits_to_x,
    brute_force_preimages,
    check_bits,
    invert_trapdoor,
    tcf_eval,
    x_to_bits,
)
from .qsim import (
    Gate,
    StateVector,
    apply_gates,
    apply_pauli_noise,
    apply_permutation_oracle,
    apply_phase_oracle,
    init_state,
    measure,
    register_values,
)

PROVER_KINDS = ("quantum", "limited-classical", "bruteforce")


@dataclass(frozen=True)
class Transcript:
    w: str
    m: int
    d: str

    def to_line(self) -> str:
        return f"w={self.w} m={self.m} d={self.d}"


_LINE = re.compile(r"^\s*w=([01]+)\s+m=([01])\s+d=([01]+)\s*$")


def parse_transcript(line: str) -> Transcript:
    match = _LINE.match(line)
    if not match:
        raise InputError(f"not a transcript line: {line!r}")
    return Transcript(match.group(1), int(match.group(2)), match.group(3))


@dataclass(frozen=True)
class Verdict:
    accept: bool
    reason: str  # ok | equation-failed | not-in-image | malformed


def make_challenge(inst: LweInstance, hash_id: str = "paper-eq2") -> Challenge:
    return inst.challenge(hash_id)


def dot2(a: str, b: str) -> int:
    return sum(1 for u, v in zip(a, b) if u == "1" and v == "1") & 1


def verify(inst: LweInstance, h: HashLike, t: Transcript, little_endian: bool = False) -> Verdict:
    try:
        check_bits(t.w, inst.m, "w")
        check_bits(t.d, inst.k, "d")
        if t.m not in (0, 1):
            raise InputError("m must be a bit")
    except InputError:
        return Verdict(False, "malformed")
    try:
        claw = invert_trapdoor(inst, t.w)
    except (NotInImage, MalformedInstance):
        return Verdict(False, "not-in-image")
    b0 = x_to_bits(claw.x0, inst.q, little_endian)
    b1 = x_to_bits(claw.x1, inst.q, little_endian)
    diff = "".join("1" if u != v else "0" for u, v in zip(b0, b1))
    ok = dot2(t.d, diff) == (t.m ^ h(0, b0) ^ h(1, b1))
    return Verdict(ok, "ok" if ok else "equation-failed")


# -- honest quantum prover -------------------------------------------------

def _hash_table(h: HashLike, k: int, nqubits: int) -> np.ndarray:
    """Phase bit of every basis index, reading ``(b, x)`` from qubits ``0..k``."""
    bx = register_values(nqubits, range(k + 1))
    per_input = np.array([h(v >> k, format(v & ((1 << k) - 1), f"0{k}b")) for v in range(2**(k + 1))],
                         dtype=np.int8)
    return per_input[bx]


class QuantumProver:
    """Simulated prover; the pre-measurement state is prepared once and reused per shot.

    ``route="oracle"`` builds the state with phase and permutation oracles;
    ``route="circuit"`` runs the gate-level prover circuit instead (optionally
    optimized). Noise is a depolarizing layer on every measured qubit, applied
    just before measurement.
    """

    def __init__(self, ch: Challenge, h: HashLike, route: str = "oracle",
                 little_endian: bool = False, optimized: bool = False):
        self.ch = ch
        self.k, self.m = ch.k, ch.m
        self.inputs = tuple(range(self.k + 1))
        self.wreg = tuple(range(self.k + 1, self.k + 1 + self.m))
        self.route = route
        if route == "oracle":
            self.state = _oracle_state(ch, h, little_endian)
        elif route == "circuit":
            if not isinstance(h, HashPoly):
                raise InputError("the circuit route needs a polynomial hash")
            circ = build_prover_circuit(ch, h, little_endian)
            if optimized:
                circ = optimize(circ)
            self.state = apply_gates(init_state(circ.nqubits), circ.gates)
        else:
            raise InputError(f"unknown route {route!r}")

    def prove(self, rng: np.random.Generator, p: float = 0.0) -> Transcript:
        st = self.state.copy()
        apply_pauli_noise(st, p, self.inputs + self.wreg, rng)
        w, st = measure(st, self.wreg, rng)
        if self.route == "oracle":
            apply_gates(st, [Gate("H", (q,)) for q in self.inputs])
        md, _ = measure(st, self.inputs, rng)
        return Transcript(w=w, m=int(md[0]), d=md[1:])


@lru_cache(maxsize=32)
def _oracle_state_cached(ch: Challenge, h: HashLike, little_endian: bool) -> StateVector:
    k, m = ch.k, ch.m
    n = 1 + k + m
    st = init_state(n)
    apply_gates(st, [Gate("H", (q,)) for q in range(k + 1)])
    apply_phase_oracle(st, _hash_table(h, k, n))

    def fmap(bits: str) -> str:
        return tcf_eval(ch, int(bits[0]), bits_to_x(bits[1:], ch.q, little_endian))

    apply_permutation_oracle(st, range(k + 1), range(k + 1, n), fmap)
    st.amps.setflags(write=False)
    return st


def _oracle_state(ch: Challenge, h: HashLike, little_endian: bool) -> StateVector:
    try:
        return _oracle_state_cached(ch, h, little_endian)
    except TypeError:  # unhashable hash object
        return _oracle_state_cached.__wrapped__(ch, h, little_endian)


def quantum_prove(ch: Challenge, h: HashLike, p: float = 0.0,
                  rng: np.random.Generator | None = None, route: str = "oracle",
                  little_endian: bool = False) -> Transcript:
    rng = np.random.default_rng() if rng is None else rng
    return QuantumProver(ch, h, route, little_endian).prove(rng, p)


# -- classical provers -----------------------------------------------------

def _random_input(ch: Challenge, rng: np.random.Generator) -> tuple[int, tuple[int, ...]]:
    b = int(rng.integers(2))
    x = tuple(int(v) for v in rng.integers(0, ch.q, size=ch.n))
    return b, x


def classical_prove_limited(ch: Challenge, o: CountingOracle, rng: np.random.Generator,
                            little_endian: bool = False) -> Transcript:
    """Best strategy without a claw: one oracle query on the prover's own preimage.

    With ``d = 0`` the check reduces to ``m = H(0, x0) xor H(1, x1)``; the
    queried branch is known, the other is guessed.
    """
    b, x = _random_input(ch, rng)
    w = tcf_eval(ch, b, x)
    xbits = x_to_bits(x, ch.q, little_endian)
    if o.budget == 0:
        d = "".join(str(v) for v in rng.integers(0, 2, size=ch.k))
        return Transcript(w=w, m=int(rng.integers(2)), d=d)
    known = o(b, xbits)
    guess = int(rng.integers(2))
    return Transcript(w=w, m=known ^ guess, d="0" * ch.k)


def classical_prove_bruteforce(ch: Challenge, h: HashLike, rng: np.random.Generator | None = None,
                               little_endian: bool = False) -> Transcript:
    """Find a claw by exhaustive search (no trapdoor) and answer exactly."""
    rng = np.random.default_rng(0) if rng is None else rng
    X = all_inputs(ch.q, ch.n)
    x0 = tuple(int(v) for v in X[rng.integers(len(X))])
    w = tcf_eval(ch, 0, x0)
    zero, one = brute_force_preimages(ch, w)
    assert x0 in zero and one, "a valid instance has a partner on branch 1"
    x1 = min(one)
    b0, b1 = x_to_bits(x0, ch.q, little_endian), x_to_bits(x1, ch.q, little_endian)
    d = "".join(str(v) for v in rng.integers(0, 2, size=ch.k))
    diff = "".join("1" if u != v else "0" for u, v in zip(b0, b1))
    m = dot2(d, diff) ^ h(0, b0) ^ h(1, b1)
    return Transcript(w=w, m=m, d=d)


# -- sessions --------------------------------------------------------------

def shot_rng(seed: int, shot: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(shot)])


@dataclass
class Prover:
    """A configured prover of one kind for one challenge; ``respond`` runs one shot."""

    kind: str
    ch: Challenge
    hash_id: str
    p: float = 0.0
    route: str = "oracle"
    budget: int = 1
    little_endian: bool = False
    _quantum: QuantumProver | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in PROVER_KINDS:
            raise InputError(f"prover kind must be one of {PROVER_KINDS}, got {self.kind!r}")

    def warm(self) -> None:
        """Prepare the quantum state up front (before shots run in parallel)."""
        if self.kind == "quantum" and self._quantum is None and not self.hash_id.startswith("oracle"):
            h = resolve_hash_fn(self.hash_id, self.ch.k)
            self._quantum = QuantumProver(self.ch, h, self.route, self.little_endian)

    def respond(self, rng: np.random.Generator, hash_id: str | None = None) -> Transcript:
        hash_id = hash_id or self.hash_id
        if self.kind == "limited-classical":
            oracle = resolve_hash_fn(hash_id, self.ch.k, budget=self.budget)
            if not isinstance(oracle, CountingOracle):
                oracle = _PolyAsOracle(oracle, self.budget)
            return classical_prove_limited(self.ch, oracle, rng, self.little_endian)
        h = resolve_hash_fn(hash_id, self.ch.k)
        if self.kind == "bruteforce":
            return classical_prove_bruteforce(self.ch, h, rng, self.little_endian)
        if hash_id != self.hash_id:
            return QuantumProver(self.ch, h, self.route, self.little_endian).prove(rng, self.p)
        self.warm()
        return self._quantum.prove(rng, self.p)


class _PolyAsOracle(CountingOracle):
    """Query-counting wrapper so a limited prover can be run against a fixed polynomial."""

    def __init__(self, h: HashLike, budget: int | None):
        super().__init__(seed=0, budget=budget)
        self._h = h

    def _prf(self, bits: str) -> int:
        return self._h(int(bits[0]), bits[1:])


@dataclass
class SessionResult:
    instance: str
    prover: str
    shots: int
    accepts: int
    p: float
    seed: int
    hash_id: str = "paper-eq2"
    repetition: int | None = None
    verdicts: list[str] | None = field(default=None, repr=False)
    transcripts: list[str] | None = field(default=None, repr=False)

    @property
    def rate(self) -> float:
        return self.accepts / self.shots

    def to_json(self) -> str:
        d = {k: v for k, v in asdict(self).items()
             if k not in ("verdicts", "transcripts") and v is not None}
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SessionResult":
        d = json.loads(text)
        known = {k: d[k] for k in ("instance", "prover", "shots", "accepts", "p", "seed",
                                   "hash_id", "repetition") if k in d}
        return cls(**known)


def oracle_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**62))


def run_shot(inst: LweInstance, prover: Prover, rng: np.random.Generator) -> tuple[Transcript, Verdict]:
    """One prove+verify round. Random-oracle hashes get a fresh seed per shot."""
    hash_id = prover.hash_id
    if hash_id == "oracle":
        hash_id = f"oracle:{oracle_seed(rng)}"
    t = prover.respond(rng, hash_id)
    h = resolve_hash_fn(hash_id, inst.k)
    check = h.peek if isinstance(h, CountingOracle) else h
    return t, verify(inst, check, t, prover.little_endian)


def run_session(inst: LweInstance, prover: str, shots: int, p: float = 0.0, seed: int = 0,
                hash_id: str | None = None, instance_id: str = "custom", route: str = "oracle",
                budget: int = 1, keep_transcripts: bool = False, threads: int = 1,
                repetition: int | None = None, little_endian: bool = False,
                shot_offset: int = 0) -> SessionResult:
    """``shots`` independent rounds; shot ``i`` draws from ``rng(seed, shot_offset + i)``.

    The limited classical prover defaults to a fresh random oracle per shot
    (``hash_id="oracle"``); the others default to the fixed polynomial hash.
    """
    if shots < 1:
        raise InputError("shots must be >= 1")
    if hash_id is None:
        hash_id = "oracle" if prover == "limited-classical" else "paper-eq2"
    pr = Prover(prover, make_challenge(inst, hash_id), hash_id, p=p, route=route,
                budget=budget, little_endian=little_endian)

    def chunk(indices: Sequence[int]) -> list[tuple[Transcript, Verdict]]:
        return [run_shot(inst, pr, shot_rng(seed, shot_offset + i)) for i in indices]

    indices = list(range(shots))
    if threads > 1:
        pr.warm()
        parts = [indices[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(threads) as pool:
            done = list(pool.map(chunk, parts))
        results: list = [None] * shots
        for part, res in zip(parts, done):
            for i, r in zip(part, res):
                results[i] = r
    else:
        results = chunk(indices)
    accepts = sum(v.accept for _, v in results)
    return SessionResult(
        instance=instance_id, prover=prover, shots=shots, accepts=accepts, p=p, seed=seed,
        hash_id=hash_id, repetition=repetition,
        verdicts=[v.reason for _, v in results],
        transcripts=[t.to_line() for t, _ in results] if keep_transcripts else None,
    )
