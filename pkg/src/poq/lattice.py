"""Toy LWE instances and the rounding trapdoor claw-free function built on them.

The function is ``f(b, x) = msb(A x + b y mod q)`` applied per row, with
``y = A s + e``. For a valid instance ``f(0, x0) == f(1, x0 - s)`` for every
``x0``, and knowing ``s`` lets the verifier recover both preimages of any image.

Bit-string conventions: component / qubit 1 is the leftmost character; an
integer vector ``x`` in ``Z_q^n`` is written as ``n`` big-endian blocks of
``log2(q)`` bits (``little_endian=True`` flips the order inside each block).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DomainTooLarge,
    FormatError,
    GenerationError,
    InputError,
    IntegrityError,
    MalformedInstance,
    NotInImage,
)

ENUMERATION_LIMIT = 2**24
DEFAULT_ATTEMPTS = 10**5

Matrix = tuple[tuple[int, ...], ...]
Vector = tuple[int, ...]


def is_power_of_two(q: int) -> bool:
    return isinstance(q, (int, np.integer)) and q >= 2 and (q & (q - 1)) == 0


def _check_modulus(q: int) -> None:
    if not is_power_of_two(q):
        raise ConfigurationError(f"modulus q={q!r} must be a power of 2 (>= 2)")


def bits_per_component(q: int) -> int:
    _check_modulus(q)
    return int(q).bit_length() - 1


def round_msb(v: int, q: int) -> int:
    """Most significant bit of ``v`` in ``Z_q``: 1 iff ``v >= q/2``."""
    _check_modulus(q)
    if not 0 <= v < q:
        raise InputError(f"value {v} outside [0, {q})")
    return int(2 * v >= q)


# -- bit encodings -----------------------------------------------------------

def x_to_bits(x: Sequence[int], q: int, little_endian: bool = False) -> str:
    width = bits_per_component(q)
    blocks = []
    for xi in x:
        if not 0 <= xi < q:
            raise InputError(f"component {xi} outside [0, {q})")
        block = format(int(xi), f"0{width}b")
        blocks.append(block[::-1] if little_endian else block)
    return "".join(blocks)


def bits_to_x(bits: str, q: int, little_endian: bool = False) -> Vector:
    width = bits_per_component(q)
    if len(bits) % width or set(bits) - {"0", "1"}:
        raise InputError(f"{bits!r} is not a bit-string of {width}-bit blocks")
    out = []
    for i in range(0, len(bits), width):
        block = bits[i:i + width]
        out.append(int(block[::-1] if little_endian else block, 2))
    return tuple(out)


def check_bits(bits: str, length: int, what: str = "bit-string") -> str:
    if not isinstance(bits, str) or len(bits) != length or set(bits) - {"0", "1"}:
        raise InputError(f"{what} must be {length} characters of 0/1, got {bits!r}")
    return bits


# -- instance types ----------------------------------------------------------

@dataclass(frozen=True)
class Challenge:
    """Public part of an instance: everything a prover is allowed to see."""

    q: int
    A: Matrix
    y: Vector
    hash_id: str = "paper-eq2"

    @property
    def m(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return len(self.A[0])

    @property
    def k(self) -> int:
        """Number of bits encoding ``x``."""
        return self.n * bits_per_component(self.q)

    def to_dict(self) -> dict:
        return {"q": self.q, "m": self.m, "n": self.n,
                "A": [list(r) for r in self.A], "y": list(self.y),
                "hash_id": self.hash_id}


@dataclass(frozen=True)
class LweInstance:
    """Secret-bearing instance ``(A, s, e, q)``; ``y`` is derived on construction."""

    q: int
    A: Matrix
    s: Vector
    e: Vector
    y: Vector = field(default=())

    def __post_init__(self):
        _check_modulus(self.q)
        A = tuple(tuple(int(v) for v in row) for row in self.A)
        if not A or not A[0] or len({len(r) for r in A}) != 1:
            raise InputError("A must be a non-empty rectangular matrix")
        s = tuple(int(v) for v in self.s)
        e = tuple(int(v) for v in self.e)
        if len(s) != len(A[0]) or len(e) != len(A):
            raise InputError(f"dimension mismatch: A is {len(A)}x{len(A[0])}, "
                             f"|s|={len(s)}, |e|={len(e)}")
        for name, vals in (("A", [v for r in A for v in r]), ("s", s), ("e", e)):
            if any(not 0 <= v < self.q for v in vals):
                raise InputError(f"entries of {name} must lie in [0, {self.q})")
        y = tuple((sum(a * si for a, si in zip(row, s)) + ei) % self.q
                  for row, ei in zip(A, e))
        if self.y and tuple(int(v) for v in self.y) != y:
            raise IntegrityError(f"y={list(self.y)} does not equal A s + e = {list(y)}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return len(self.A[0])

    @property
    def k(self) -> int:
        return self.n * bits_per_component(self.q)

    def challenge(self, hash_id: str = "paper-eq2") -> Challenge:
        return Challenge(q=self.q, A=self.A, y=self.y, hash_id=hash_id)

    def to_dict(self) -> dict:
        return {"q": self.q, "A": [list(r) for r in self.A], "s": list(self.s),
                "e": list(self.e), "y": list(self.y)}


# The four hardware instances, A stored column-wise as published. q = 4 and s
# selects the first column: the only ordering under which A s + e reproduces
# the published y for all four.
_BUILTIN_COLUMNS = (
    ((0, 2, 0, 1), (2, 0, 1, 2), (0, 1, 0, 0), (0, 3, 0, 1)),
    ((0, 2, 3, 2), (2, 3, 0, 0), (0, 0, 0, 1), (0, 2, 3, 3)),
    ((2, 0, 0, 1), (0, 3, 2, 1), (1, 0, 1, 0), (3, 0, 1, 1)),
    ((0, 1, 3, 0), (3, 0, 0, 2), (0, 0, 0, 1), (0, 1, 3, 1)),
)
BUILTIN_IDS = tuple(range(len(_BUILTIN_COLUMNS)))
BUILTIN_SECRET = (1, 0)


def builtin(instance_id: int) -> LweInstance:
    if instance_id not in BUILTIN_IDS:
        raise InputError(f"builtin instance id must be one of {BUILTIN_IDS}")
    col0, col1, e, y = _BUILTIN_COLUMNS[instance_id]
    A = tuple(zip(col0, col1))
    return LweInstance(q=4, A=A, s=BUILTIN_SECRET, e=e, y=y)


def dump_instance(inst: LweInstance) -> str:
    return json.dumps(inst.to_dict())


def load_instance(text: str) -> LweInstance:
    """Parse the JSON instance format; ``y`` is recomputed and checked when present."""
    try:
        obj = json.loads(text)
        q, A, s, e = obj["q"], obj["A"], obj["s"], obj["e"]
        y = obj.get("y") or ()
    except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
        raise FormatError(f"not an instance file: {exc}") from exc
    if not (isinstance(q, int) and isinstance(A, list) and all(isinstance(r, list) for r in A)):
        raise FormatError("q must be an int and A a list of rows")
    try:
        return LweInstance(q=q, A=A, s=s, e=e, y=y)
    except (InputError, TypeError) as exc:
        raise FormatError(str(exc)) from exc


# -- function evaluation -----------------------------------------------------

def _as_public(obj) -> tuple[Matrix, Vector, int]:
    return obj.A, obj.y, obj.q


def tcf_eval(ch: Challenge | LweInstance, b: int, x: Sequence[int]) -> str:
    """``f(b, x)`` as a bit-string whose character ``i`` is row ``i``'s MSB."""
    A, y, q = _as_public(ch)
    if b not in (0, 1):
        raise InputError(f"b must be a bit, got {b!r}")
    if len(x) != len(A[0]):
        raise InputError(f"x has {len(x)} components, instance expects {len(A[0])}")
    if any(not 0 <= xi < q for xi in x):
        raise InputError(f"entries of x must lie in [0, {q})")
    out = []
    for row, yi in zip(A, y):
        v = (sum(a * xi for a, xi in zip(row, x)) + b * yi) % q
        out.append("1" if 2 * v >= q else "0")
    return "".join(out)


def domain_size(q: int, n: int) -> int:
    return q**n


def _guard(q: int, n: int) -> None:
    if domain_size(q, n) > ENUMERATION_LIMIT:
        raise DomainTooLarge(f"q^n = {q}^{n} exceeds the enumeration limit 2^24")


def all_inputs(q: int, n: int) -> np.ndarray:
    """Every ``x`` in ``Z_q^n`` as rows, in lexicographic (big-endian) order."""
    _guard(q, n)
    grids = np.indices((q,) * n).reshape(n, -1).T
    return grids.astype(np.int64)


def _msb_codes(values: np.ndarray, q: int) -> np.ndarray:
    """Pack per-row MSBs into an int per input, row 1 as the top bit."""
    bits = (2 * values >= q).astype(np.int64)
    m = bits.shape[1]
    weights = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
    return bits @ weights


@lru_cache(maxsize=64)
def _image_codes(A: Matrix, y: Vector, q: int, b: int) -> np.ndarray:
    X = all_inputs(q, len(A[0]))
    vals = (X @ np.asarray(A, dtype=np.int64).T + b * np.asarray(y, dtype=np.int64)) % q
    codes = _msb_codes(vals, q)
    codes.setflags(write=False)
    return codes


def _code_of(w: str) -> int:
    return int(w, 2)


def brute_force_preimages(ch: Challenge | LweInstance, w: str) -> tuple[set[Vector], set[Vector]]:
    """Exhaustive preimage sets ``({x: f(0,x)=w}, {x: f(1,x)=w})`` using public data only."""
    A, y, q = _as_public(ch)
    check_bits(w, len(A), "w")
    X = all_inputs(q, len(A[0]))
    code = _code_of(w)
    out = []
    for b in (0, 1):
        hits = np.flatnonzero(_image_codes(A, y, q, b) == code)
        out.append({tuple(int(v) for v in X[i]) for i in hits})
    return out[0], out[1]


def attained_images(ch: Challenge | LweInstance) -> list[str]:
    A, y, q = _as_public(ch)
    codes = np.unique(_image_codes(A, y, q, 0))
    return [format(int(c), f"0{len(A)}b") for c in codes]


@dataclass(frozen=True)
class Claw:
    x0: Vector
    x1: Vector
    w: str


def invert_trapdoor(inst: LweInstance, w: str) -> Claw:
    """Recover the claw behind ``w`` using the secret ``s``."""
    check_bits(w, inst.m, "w")
    codes = _image_codes(inst.A, inst.y, inst.q, 0)
    hits = np.flatnonzero(codes == _code_of(w))
    if hits.size == 0:
        raise NotInImage(f"w={w} has no preimage")
    if hits.size > 1:
        raise MalformedInstance(f"w={w} has {hits.size} preimages on branch 0")
    X = all_inputs(inst.q, inst.n)
    x0 = tuple(int(v) for v in X[hits[0]])
    x1 = tuple((a - si) % inst.q for a, si in zip(x0, inst.s))
    if tcf_eval(inst, 1, x1) != w:
        raise MalformedInstance(f"x0 - s does not collide with x0 for w={w}")
    if np.count_nonzero(_image_codes(inst.A, inst.y, inst.q, 1) == _code_of(w)) != 1:
        raise MalformedInstance(f"w={w} has several preimages on branch 1")
    return Claw(x0=x0, x1=x1, w=w)


# -- validity ----------------------------------------------------------------

@dataclass(frozen=True)
class Validity:
    ok: bool
    witness: Vector | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_two_to_one(inst: LweInstance) -> Validity:
    """Check ``msb(A x) == msb(A x + e)`` for every ``x``; return a witness on failure."""
    X = all_inputs(inst.q, inst.n)
    Ax = X @ np.asarray(inst.A, dtype=np.int64).T
    clean = 2 * (Ax % inst.q) >= inst.q
    noisy = 2 * ((Ax + np.asarray(inst.e, dtype=np.int64)) % inst.q) >= inst.q
    bad = np.flatnonzero((clean != noisy).any(axis=1))
    if bad.size:
        return Validity(False, tuple(int(v) for v in X[bad[0]]))
    return Validity(True)


def branch_injective(inst: LweInstance) -> bool:
    """True when ``x -> msb(A x)`` is one-to-one, i.e. every image has a single claw."""
    codes = _image_codes(inst.A, inst.y, inst.q, 0)
    return np.unique(codes).size == codes.size


def gen_instance(n: int, m: int, q: int, error_bound: int = 1, seed: int = 0,
                 max_attempts: int = DEFAULT_ATTEMPTS) -> LweInstance:
    """Rejection-sample a perfectly 2-to-1 instance (valid claws, injective branches)."""
    _check_modulus(q)
    if n < 1 or m < 1:
        raise ConfigurationError("n and m must be positive")
    if not 0 <= error_bound or 2 * error_bound >= q:
        raise ConfigurationError(f"error_bound={error_bound} must be in [0, q/2)")
    _guard(q, n)
    if 2**m < q**n:
        raise GenerationError(f"m={m} output bits cannot separate {q**n} inputs injectively")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        A = rng.integers(0, q, size=(m, n))
        s = np.zeros(n, dtype=np.int64)
        while not s.any():
            s = rng.integers(0, 2, size=n)
        e = rng.integers(0, error_bound + 1, size=m)
        inst = LweInstance(q=q, A=A.tolist(), s=s.tolist(), e=e.tolist())
        if validate_two_to_one(inst) and branch_injective(inst):
            return inst
    raise GenerationError(
        f"no valid instance for n={n}, m={m}, q={q}, error_bound={error_bound} "
        f"after {max_attempts} attempts (seed={seed})")


def claw_pairs(inst: LweInstance) -> Iterable[Claw]:
    for w in attained_images(inst):
        yield invert_trapdoor(inst, w)
