"""Command-line driver: ``poq <subcommand> ...``.

Instance sources accepted by ``--instance``:

* ``builtin:N`` for the four hardware instances (N = 0..3)
* ``file:PATH`` or a bare path to a JSON instance file
* ``gen:n=2,m=4,q=4,bound=1,seed=7`` to rejection-sample a fresh one

Outputs go to ``--out-dir``, defaulting to ``$POQ_OUTPUT_DIR`` or ``./runs``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import circuits, hashfn, lattice, protocol, stats, wire
from .errors import PoqError

log = logging.getLogger("poq")

OUTPUT_ENV = "POQ_OUTPUT_DIR"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    instance: str
    prover: str = "quantum"
    shots: int = 2000
    repetitions: int = 9
    noise: float = 0.0
    seed: int = 0
    hash_id: str | None = None
    out_dir: Path | None = None
    threads: int = 1
    route: str = "oracle"
    budget: int = 1

    def __post_init__(self):
        if self.shots < 1 or self.repetitions < 1:
            raise UsageError("--shots and --reps must be >= 1")
        if not 0 <= self.noise <= 1:
            raise UsageError("--noise must lie in [0, 1]")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")


def load_source(source: str) -> lattice.LweInstance:
    if source.startswith("builtin:"):
        try:
            return lattice.builtin(int(source.split(":", 1)[1]))
        except ValueError as exc:
            raise UsageError(f"bad builtin id in {source!r}") from exc
    if source.startswith("gen:"):
        params = {}
        for item in filter(None, source[4:].split(",")):
            key, _, val = item.partition("=")
            try:
                params[key.strip()] = int(val)
            except ValueError as exc:
                raise UsageError(f"bad value in {source!r}: {item!r}") from exc
        unknown = set(params) - {"n", "m", "q", "bound", "seed"}
        if unknown or not {"n", "m", "q"} <= set(params):
            raise UsageError("gen: needs n, m, q and optionally bound, seed")
        return lattice.gen_instance(params["n"], params["m"], params["q"],
                                    params.get("bound", 1), params.get("seed", 0))
    path = Path(source[5:] if source.startswith("file:") else source)
    if not path.exists():
        raise UsageError(f"no such instance file: {path}")
    return lattice.load_instance(path.read_text(encoding="utf-8"))


def _out_dir(arg: str | None) -> Path:
    path = Path(arg or os.environ.get(OUTPUT_ENV) or "runs")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in text)


# -- subcommands -------------------------------------------------------------

def cmd_gen_instance(args) -> int:
    inst = lattice.gen_instance(args.n, args.m, args.q, args.error_bound, args.seed,
                                max_attempts=args.attempts)
    text = lattice.dump_instance(inst)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_validate(args) -> int:
    inst = load_source(args.instance)
    res = lattice.validate_two_to_one(inst)
    print(f"y = As + e: ok {list(inst.y)}")
    if res:
        print("2-to-1: pass")
    else:
        print(f"2-to-1: fail witness x={list(res.witness)}")
    injective = lattice.branch_injective(inst)
    print(f"unique claws: {'pass' if injective else 'fail'}")
    return 0 if res and injective else 1


def cmd_run(args) -> int:
    cfg = RunConfig(args.instance, args.prover, args.shots, args.reps, args.noise, args.seed,
                    args.hash_id, None, args.threads, args.route, args.budget)
    inst = load_source(cfg.instance)
    out = _out_dir(args.out_dir)
    sessions = []
    for rep in range(cfg.repetitions):
        res = protocol.run_session(
            inst, cfg.prover, cfg.shots, p=cfg.noise, seed=cfg.seed, hash_id=cfg.hash_id,
            instance_id=cfg.instance, route=cfg.route, budget=cfg.budget, threads=cfg.threads,
            repetition=rep, shot_offset=rep * cfg.shots, keep_transcripts=args.transcripts)
        sessions.append(res)
        print(f"{cfg.instance} rep {rep}: rate {res.rate:.3f} ({res.accepts}/{res.shots})")
    rep_ = stats.report(sessions)
    stem = f"run_{_slug(cfg.instance)}_{cfg.prover}_s{cfg.seed}"
    (out / f"{stem}.jsonl").write_text("".join(s.to_json() + "\n" for s in sessions),
                                       encoding="utf-8")
    (out / f"{stem}.csv").write_text(rep_.to_csv(), encoding="utf-8")
    if args.transcripts:
        lines = [t for s in sessions for t in s.transcripts]
        (out / f"{stem}_transcripts.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    pooled = rep_.pooled[cfg.instance]
    print(f"{cfg.instance} pooled: rate {pooled.rate:.3f} N={pooled.shots} "
          f"significance {pooled.significance:.1f}σ")
    print(f"wrote {out / stem}.jsonl and .csv")
    return 0


def cmd_attack(args) -> int:
    inst = load_source(args.instance)
    kind = {"limited": "limited-classical", "bruteforce": "bruteforce"}[args.kind]
    res = protocol.run_session(inst, kind, args.trials, seed=args.seed, hash_id=args.hash_id,
                               instance_id=args.instance, budget=args.budget,
                               threads=args.threads)
    sig = stats.sigma(res.shots)
    print(f"{args.instance} {kind}: rate {res.rate:.4f} over {res.shots} trials "
          f"(classical bound 0.5, sigma {sig:.4f})")
    return 0


def cmd_verify_transcript(args) -> int:
    inst = load_source(args.instance)
    h = hashfn.resolve_hash_fn(args.hash_id, inst.k)
    check = h.peek if isinstance(h, hashfn.CountingOracle) else h
    lines = list(args.transcript or [])
    if args.file:
        lines += [ln for ln in Path(args.file).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise UsageError("give --transcript or --file")
    accepts = 0
    for line in lines:
        v = protocol.verify(inst, check, protocol.parse_transcript(line))
        accepts += v.accept
        print(f"{line.strip()} -> {'accept' if v.accept else 'reject'} ({v.reason})")
    if len(lines) > 1:
        print(f"accepted {accepts}/{len(lines)}")
    return 0


def cmd_bench_circuit(args) -> int:
    inst = load_source(args.instance)
    h = hashfn.resolve_hash(args.hash_id, inst.k)
    c = circuits.build_prover_circuit(inst.challenge(args.hash_id), h)
    opt, rep = circuits.optimize_report(c, assume_clean_ancillas=args.clean_ancillas)
    print(f"qubits {rep.nqubits} (ancillas {rep.ancillas})")
    print(f"before: {rep.before} gates {rep.before_counts}")
    print(f"after:  {rep.after} gates {rep.after_counts}")
    print(f"reduction: {100 * rep.reduction:.1f}%")
    if c.nqubits <= circuits.UNITARY_LIMIT:
        ok = circuits.equivalent(c, opt, clean_ancillas=args.clean_ancillas)
        scope = "on clean-ancilla inputs" if args.clean_ancillas else "up to global phase"
        print(f"equivalent {scope}: {'yes' if ok else 'NO'}")
    if args.dump:
        Path(args.dump).write_text(circuits.dump_circuit(opt), encoding="utf-8")
    return 0


def cmd_serve(args) -> int:
    inst = load_source(args.instance)
    svc = wire.serve_verifier(inst, args.hash_id, (args.host, args.port), timeout=args.timeout,
                              log_path=args.log, seed=args.seed)
    host, port = svc.address
    print(f"verifier listening on {host}:{port}", flush=True)
    try:
        svc._thread.join()
    except KeyboardInterrupt:
        pass
    finally:
        svc.close()
    return 0


def cmd_client(args) -> int:
    verdicts = wire.run_remote((args.host, args.port), args.prover, args.sessions,
                               p=args.noise, seed=args.seed, budget=args.budget)
    accepts = sum(v.accept for v in verdicts)
    for i, v in enumerate(verdicts[: args.show]):
        print(f"session {i}: {'accept' if v.accept else 'reject'} ({v.reason})")
    print(f"accepted {accepts}/{len(verdicts)} rate {accepts / len(verdicts):.3f}")
    return 0


def cmd_report(args) -> int:
    sessions = []
    for path in args.files:
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                sessions.append(protocol.SessionResult.from_json(line))
    rep = stats.report(sessions)
    print(rep.to_table(), end="")
    csv_text = rep.to_csv()
    if args.csv:
        Path(args.csv).write_text(csv_text, encoding="utf-8")
    else:
        print(csv_text, end="")
    return 0


# -- parser ------------------------------------------------------------------

def _add_instance(p, required=True):
    p.add_argument("--instance", required=required, default="builtin:0",
                   help="builtin:N | file:PATH | gen:n=..,m=..,q=..[,bound=..,seed=..]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poq", description="Non-interactive test of quantumness "
                                     "at desk scale: LWE claw-free function, phase hash, "
                                     "simulated prover, verifier.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-instance", help="sample a perfectly 2-to-1 LWE instance",
                       description="Rejection-sample A, s, e with y = As + e such that "
                       "msb(Ax) = msb(Ax + e) for all x (generalizes the hardware instance table).")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--error-bound", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attempts", type=int, default=lattice.DEFAULT_ATTEMPTS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_instance)

    p = sub.add_parser("validate", help="exhaustively check the claw structure",
                       description="Check y = As + e, the claw relation f(0,x0) = f(1,x0-s) "
                       "for every x0, and that each image has exactly one claw.")
    _add_instance(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="repeat prove+verify sessions and report rates",
                       description="Repetitions x shots of prove+verify, mirroring the hardware "
                       "experiment shape (9 x 2000, honest prover ideal rate 1.0, sigma = "
                       "1/(2 sqrt N)).")
    _add_instance(p, required=False)
    p.add_argument("--prover", choices=protocol.PROVER_KINDS, default="quantum")
    p.add_argument("--shots", type=int, default=2000)
    p.add_argument("--reps", type=int, default=9)
    p.add_argument("--noise", type=float, default=0.0, help="depolarizing probability per qubit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hash-id", default=None,
                   help="paper-eq2 | poly:<text> | oracle (default depends on prover)")
    p.add_argument("--route", choices=("oracle", "circuit"), default="oracle")
    p.add_argument("--budget", type=int, default=1, help="oracle queries for limited-classical")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--transcripts", action="store_true", help="also write every transcript")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("attack", help="run a classical adversary",
                       description="Query-limited prover against fresh random oracles (classical "
                       "bound 1/2) or brute-force claw search (succeeds at toy scale).")
    _add_instance(p, required=False)
    p.add_argument("--kind", choices=("limited", "bruteforce"), default="limited")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=1)
    p.add_argument("--hash-id", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("verify-transcript", help="check w=.. m=.. d=.. lines",
                       description="Invert w with the trapdoor and test the claw equation "
                       "<d, x0 xor x1> = m xor H(0,x0) xor H(1,x1).")
    _add_instance(p)
    p.add_argument("--transcript", action="append")
    p.add_argument("--file")
    p.add_argument("--hash-id", default=hashfn.HARDWARE_HASH_ID)
    p.set_defaults(func=cmd_verify_transcript)

    p = sub.add_parser("bench-circuit", help="gate counts before/after optimization",
                       description="Build the prover circuit (Hadamards, hash phase gates, "
                       "lowered TCF, terminal Hadamards), optimize it and check equivalence.")
    _add_instance(p, required=False)
    p.add_argument("--hash-id", default=hashfn.HARDWARE_HASH_ID)
    p.add_argument("--clean-ancillas", action="store_true",
                   help="also drop gates that read ancillas known to be |0>")
    p.add_argument("--dump", help="write the optimized circuit text here")
    p.set_defaults(func=cmd_bench_circuit)

    p = sub.add_parser("serve", help="run a verifier over TCP",
                       description="One-round verifier service: challenge, one response, verdict.")
    _add_instance(p, required=False)
    p.add_argument("--hash-id", default=hashfn.HARDWARE_HASH_ID)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7878)
    p.add_argument("--timeout", type=float, default=wire.DEFAULT_TIMEOUT)
    p.add_argument("--seed", type=int, default=0, help="seeds per-session oracles")
    p.add_argument("--log", help="append-only JSONL session log")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("client", help="run prover sessions against a verifier",
                       description="Fetch a challenge, answer with the chosen prover, read the "
                       "verdict; repeat --sessions times.")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7878)
    p.add_argument("--prover", choices=protocol.PROVER_KINDS, default="quantum")
    p.add_argument("--sessions", type=int, default=1)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=1)
    p.add_argument("--show", type=int, default=10, help="print the first N verdicts")
    p.set_defaults(func=cmd_client)

    p = sub.add_parser("report", help="aggregate session files into the significance table",
                       description="Pool SessionResult JSONL files per instance: success "
                       "probability and significance (p - 0.5) / (1/(2 sqrt N)).")
    p.add_argument("files", nargs="+")
    p.add_argument("--csv", help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"poq: error: {exc}", file=sys.stderr)
        return 2
    except (PoqError, OSError) as exc:
        print(f"poq: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
