"""Desk-scale non-interactive test of quantumness built on a toy LWE claw-free function."""

from .errors import PoqError
from .hashfn import HARDWARE_HASH, CountingOracle, HashPoly, hash_eval, parse_poly, phase_gate_list
from .lattice import (
    Challenge,
    Claw,
    LweInstance,
    brute_force_preimages,
    builtin,
    gen_instance,
    invert_trapdoor,
    load_instance,
    round_msb,
    tcf_eval,
    validate_two_to_one,
)
from .protocol import (
    SessionResult,
    Transcript,
    Verdict,
    classical_prove_bruteforce,
    classical_prove_limited,
    make_challenge,
    quantum_prove,
    run_session,
    verify,
)
from .stats import report, sigma, significance

__version__ = "0.1.0"
