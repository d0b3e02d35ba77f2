"""Hash functions over ``(b, x)``: GF(2) polynomials and a query-counting random oracle.

Variables are numbered 0 for ``b`` and ``i`` for ``x_i`` (1-based, ``x_1`` is
the leftmost bit of the x bit-string).
"""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import BudgetExhausted, InputError, ParseError, UnsupportedGate
from .qsim import Gate

HARDWARE_HASH_ID = "paper-eq2"
HARDWARE_HASH_TEXT = "b + x1 + b*x1 + x2*x3 + x1*x4 + x2*x3 + b*x3*x4"
MAX_PHASE_DEGREE = 3

Monomial = tuple[int, ...]


@dataclass(frozen=True)
class HashPoly:
    """XOR of AND-monomials, kept exactly as written (repeats are not merged)."""

    k: int
    terms: tuple[Monomial, ...]

    def __post_init__(self):
        terms = tuple(tuple(int(v) for v in t) for t in self.terms)
        for t in terms:
            if not t:
                raise ParseError("empty monomial")
            if max(t) > self.k or min(t) < 0:
                raise ParseError(f"monomial {t} uses a variable outside b, x1..x{self.k}")
        object.__setattr__(self, "terms", terms)

    def __call__(self, b: int, xbits: str) -> int:
        return hash_eval(self, b, xbits)

    def reduced_terms(self) -> list[Monomial]:
        """Monomials surviving GF(2) cancellation, in first-appearance order."""
        keys = [tuple(sorted(set(t))) for t in self.terms]
        counts = Counter(keys)
        seen, out = set(), []
        for t in keys:
            if t not in seen and counts[t] % 2:
                out.append(t)
            seen.add(t)
        return out

    def truth_table(self) -> list[int]:
        """Values on every ``(b, x)`` with ``b`` as the top bit of the index."""
        width = self.k + 1
        out = []
        for idx in range(2**width):
            bits = format(idx, f"0{width}b")
            out.append(hash_eval(self, int(bits[0]), bits[1:]))
        return out

    def __str__(self) -> str:
        return format_poly(self)


def hash_eval(h: HashPoly, b: int, xbits: str) -> int:
    if len(xbits) != h.k:
        raise InputError(f"expected {h.k} x-bits, got {xbits!r}")
    vals = (int(b) & 1,) + tuple(1 if c == "1" else 0 for c in xbits)
    acc = 0
    for t in h.terms:
        prod = 1
        for v in t:
            prod &= vals[v]
        acc ^= prod
    return acc


_TOKEN = re.compile(r"^(b|x([1-9][0-9]*))$")


def _var_name(v: int) -> str:
    return "b" if v == 0 else f"x{v}"


def format_poly(h: HashPoly) -> str:
    return " + ".join("*".join(_var_name(v) for v in t) for t in h.terms)


def parse_poly(text: str, k: int | None = None) -> HashPoly:
    """Parse ``"b + x1 + b*x1 + ..."``; ``k`` defaults to the largest index used."""
    if not text or not text.strip():
        raise ParseError("empty polynomial text")
    terms = []
    for raw in text.split("+"):
        factors = [f.strip() for f in raw.split("*")]
        if not raw.strip() or any(not f for f in factors):
            raise ParseError(f"empty monomial in {text!r}")
        mono = []
        for f in factors:
            match = _TOKEN.match(f)
            if not match:
                raise ParseError(f"unknown token {f!r}")
            mono.append(0 if f == "b" else int(match.group(2)))
        terms.append(tuple(mono))
    top = max(v for t in terms for v in t)
    if k is None:
        k = top
    elif top > k:
        raise ParseError(f"variable x{top} out of range for k={k}")
    return HashPoly(k=k, terms=tuple(terms))


def empty_poly(k: int) -> HashPoly:
    return HashPoly(k=k, terms=())


HARDWARE_HASH = parse_poly(HARDWARE_HASH_TEXT, k=4)


def resolve_hash(hash_id: str, k: int | None = None) -> HashPoly:
    """Look up a hash by identifier: ``paper-eq2``, ``poly:<text>`` or ``zero``."""
    if hash_id == HARDWARE_HASH_ID:
        h = HARDWARE_HASH
    elif hash_id.startswith("poly:"):
        h = parse_poly(hash_id[5:], k=k)
    elif hash_id == "zero" and k is not None:
        h = empty_poly(k)
    else:
        raise InputError(f"unknown hash_id {hash_id!r}")
    if k is not None and h.k != k:
        raise InputError(f"hash {hash_id!r} takes {h.k} x-bits, instance encodes {k}")
    return h


def phase_gate_list(h: HashPoly, qubits: Sequence[int] | None = None) -> list[Gate]:
    """Diagonal gates whose product multiplies ``|b, x>`` by ``(-1)**H(b, x)``.

    ``qubits[v]`` is the qubit carrying variable ``v`` (default: ``v`` itself).
    """
    if qubits is None:
        qubits = range(h.k + 1)
    qubits = list(qubits)
    gates = []
    for t in h.reduced_terms():
        qs = tuple(qubits[v] for v in t)
        if len(t) > MAX_PHASE_DEGREE:
            raise UnsupportedGate(f"monomial of degree {len(t)} needs a multi-controlled Z")
        gates.append(Gate(("Z", "CZ", "CCZ")[len(t) - 1], qs))
    return gates


# -- random oracle -----------------------------------------------------------

@dataclass
class CountingOracle:
    """Seeded pseudorandom function ``{0,1}* -> {0,1}`` that logs every query.

    ``budget`` caps the number of *distinct* inputs a prover may ask about.
    ``peek`` evaluates without logging and is reserved for the verifier.
    """

    seed: int
    budget: int | None = None
    query_log: list[str] = field(default_factory=list)
    _seen: set[str] = field(default_factory=set, repr=False)

    def _prf(self, bits: str) -> int:
        key = int(self.seed).to_bytes(16, "big", signed=True)
        digest = hashlib.blake2b(bits.encode(), key=key, digest_size=1).digest()
        return digest[0] & 1

    def query(self, bits: str) -> int:
        if set(bits) - {"0", "1"}:
            raise InputError(f"oracle input must be a bit-string, got {bits!r}")
        if self.budget is not None and bits not in self._seen and len(self._seen) >= self.budget:
            raise BudgetExhausted(f"budget of {self.budget} distinct queries used up")
        self._seen.add(bits)
        self.query_log.append(bits)
        return self._prf(bits)

    def distinct(self) -> set[str]:
        return set(self._seen)

    @property
    def count(self) -> int:
        return len(self.query_log)

    def peek(self, b: int, xbits: str) -> int:
        return self._prf(f"{int(b)}{xbits}")

    def __call__(self, b: int, xbits: str) -> int:
        """Prover-side query of ``(b, x)``; logged and counted."""
        return self.query(f"{int(b)}{xbits}")


HashLike = Callable[[int, str], int]


def resolve_hash_fn(hash_id: str, k: int | None = None, budget: int | None = None) -> HashLike:
    """Like ``resolve_hash`` but also accepts ``oracle:<seed>`` for a random oracle."""
    if hash_id.startswith("oracle:"):
        try:
            seed = int(hash_id[7:])
        except ValueError as exc:
            raise InputError(f"bad oracle seed in {hash_id!r}") from exc
        return CountingOracle(seed=seed, budget=budget)
    return resolve_hash(hash_id, k)
