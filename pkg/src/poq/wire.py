"""One-round challenge/response over TCP, newline-delimited JSON.

Each connection carries exactly one session::

    server -> client   {"kind":"challenge","body":{q,m,n,A,y,hash_id,session_id}}
    client -> server   {"kind":"response","body":{session_id,w,m,d}}
    server -> client   {"kind":"verdict","body":{session_id,accept,reason}}

Messages are UTF-8, one per LF-terminated line. Unknown fields are ignored on
decode; ``encode`` emits the fixed field order below, so decoding and
re-encoding a well-formed message reproduces it byte for byte.
"""

from __future__ import annotations

import json
import logging
import socket
import socketserver
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import ClientError, FormatError, ProtocolViolation
from .hashfn import CountingOracle, resolve_hash_fn
from .lattice import Challenge, LweInstance
from .protocol import Prover, Transcript, Verdict, oracle_seed, shot_rng, verify

log = logging.getLogger(__name__)

FIELDS = {
    "challenge": ("q", "m", "n", "A", "y", "hash_id", "session_id"),
    "response": ("session_id", "w", "m", "d"),
    "verdict": ("session_id", "accept", "reason"),
}
DEFAULT_TIMEOUT = 30.0
MAX_LINE = 1 << 16


@dataclass(frozen=True)
class WireMessage:
    kind: str
    body: dict

    def __post_init__(self):
        if self.kind not in FIELDS:
            raise FormatError(f"unknown message kind {self.kind!r}")
        missing = [f for f in FIELDS[self.kind] if f not in self.body]
        if missing:
            raise FormatError(f"{self.kind} message lacks {missing}")


def encode(msg: WireMessage) -> bytes:
    body = {f: msg.body[f] for f in FIELDS[msg.kind]}
    text = json.dumps({"kind": msg.kind, "body": body}, separators=(",", ":"), ensure_ascii=False)
    return text.encode("utf-8") + b"\n"


def decode(line: bytes) -> WireMessage:
    try:
        obj = json.loads(line.decode("utf-8"))
        kind, body = obj["kind"], obj["body"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"undecodable message: {exc}") from exc
    if not isinstance(body, dict):
        raise FormatError("message body must be an object")
    return WireMessage(kind, {f: body[f] for f in FIELDS.get(kind, ()) if f in body})


def challenge_message(ch: Challenge, session_id: str) -> WireMessage:
    body = ch.to_dict()
    body["session_id"] = session_id
    return WireMessage("challenge", body)


def challenge_from_message(msg: WireMessage) -> Challenge:
    b = msg.body
    try:
        ch = Challenge(q=int(b["q"]), A=tuple(tuple(int(v) for v in r) for r in b["A"]),
                       y=tuple(int(v) for v in b["y"]), hash_id=str(b["hash_id"]))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad challenge body: {exc}") from exc
    if ch.m != b["m"] or ch.n != b["n"]:
        raise FormatError("challenge dimensions disagree with A")
    return ch


def response_message(session_id: str, t: Transcript) -> WireMessage:
    return WireMessage("response", {"session_id": session_id, "w": t.w, "m": t.m, "d": t.d})


def _read_line(f) -> bytes:
    line = f.readline(MAX_LINE + 1)
    if not line:
        raise ConnectionError("peer closed the connection")
    if not line.endswith(b"\n"):
        raise FormatError("line too long or not LF-terminated")
    return line


# -- server ----------------------------------------------------------------

class SessionLog:
    """Append-only record of finished or abandoned sessions; thread-safe."""

    def __init__(self, path: str | Path | None = None):
        self._lock = threading.Lock()
        self.records: list[dict] = []
        self.path = Path(path) if path else None

    def append(self, record: dict) -> None:
        with self._lock:
            self.records.append(record)
            if self.path:
                with self.path.open("a", encoding="utf-8") as f:
                    f.write(json.dumps(record, sort_keys=True) + "\n")


class VerifierService:
    """Threaded TCP verifier for one instance. Use as a context manager or call ``close``."""

    def __init__(self, inst: LweInstance, hash_id: str = "paper-eq2",
                 endpoint: tuple[str, int] = ("127.0.0.1", 0), timeout: float = DEFAULT_TIMEOUT,
                 log_path: str | Path | None = None, seed: int = 0):
        self.inst = inst
        self.hash_id = hash_id
        self.timeout = timeout
        self.log = SessionLog(log_path)
        self._counter = 0
        self._counter_lock = threading.Lock()
        self.seed = seed
        service = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                service._handle(self.connection, self.rfile, self.wfile)

        socketserver.ThreadingTCPServer.allow_reuse_address = True
        self.server = socketserver.ThreadingTCPServer(endpoint, Handler)
        self.server.daemon_threads = True
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def address(self) -> tuple[str, int]:
        return self.server.server_address[:2]

    def _next_session(self) -> tuple[str, str]:
        with self._counter_lock:
            index = self._counter
            self._counter += 1
        hash_id = self.hash_id
        if hash_id == "oracle":
            hash_id = f"oracle:{oracle_seed(shot_rng(self.seed, index))}"
        return uuid.uuid4().hex, hash_id

    def judge(self, session_id: str, hash_id: str, line: bytes) -> Verdict:
        try:
            msg = decode(line)
            if msg.kind != "response":
                return Verdict(False, "malformed")
            body = msg.body
            if body["session_id"] != session_id:
                return Verdict(False, "unknown-session")
            if not isinstance(body["m"], int) or isinstance(body["m"], bool):
                return Verdict(False, "malformed")
            t = Transcript(w=str(body["w"]), m=body["m"], d=str(body["d"]))
        except (FormatError, KeyError):
            return Verdict(False, "malformed")
        h = resolve_hash_fn(hash_id, self.inst.k)
        check = h.peek if isinstance(h, CountingOracle) else h
        return verify(self.inst, check, t)

    def _handle(self, conn: socket.socket, rfile, wfile) -> None:
        session_id, hash_id = self._next_session()
        conn.settimeout(self.timeout)
        record: dict[str, Any] = {"session_id": session_id, "hash_id": hash_id}
        try:
            wfile.write(encode(challenge_message(self.inst.challenge(hash_id), session_id)))
            wfile.flush()
            line = _read_line(rfile)
        except (socket.timeout, TimeoutError):
            record.update(status="abandoned", reason="timeout")
            self.log.append(record)
            return
        except FormatError:
            line = b""
        except OSError as exc:
            record.update(status="abandoned", reason=str(exc))
            self.log.append(record)
            return
        verdict = self.judge(session_id, hash_id, line)
        record.update(status="done", accept=verdict.accept, reason=verdict.reason)
        self.log.append(record)
        try:
            wfile.write(encode(WireMessage("verdict", {"session_id": session_id,
                                                       "accept": verdict.accept,
                                                       "reason": verdict.reason})))
            wfile.flush()
        except OSError as exc:
            log.warning("could not deliver verdict for %s: %s", session_id, exc)

    def close(self) -> None:
        self.server.shutdown()
        self.server.server_close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def serve_verifier(inst: LweInstance, hash_id: str = "paper-eq2",
                   endpoint: tuple[str, int] = ("127.0.0.1", 0), **kw) -> VerifierService:
    return VerifierService(inst, hash_id, endpoint, **kw)


# -- client ----------------------------------------------------------------

def prover_client(endpoint: tuple[str, int], kind: str = "quantum", *, p: float = 0.0,
                  seed: int = 0, shot: int = 0, budget: int = 1, route: str = "oracle",
                  timeout: float = DEFAULT_TIMEOUT, prover: Prover | None = None) -> Verdict:
    """Run one session: fetch the challenge, answer it, return the server's verdict.

    The prover draws from ``rng(seed, shot)``, the same stream ``run_session``
    uses for shot ``shot``. Pass a ready ``prover`` to reuse its prepared state.
    """
    try:
        with socket.create_connection(endpoint, timeout=timeout) as sock:
            f = sock.makefile("rwb")
            msg = decode(_read_line(f))
            if msg.kind != "challenge":
                raise ProtocolViolation(f"protocol violation: expected challenge, got {msg.kind}")
            ch = challenge_from_message(msg)
            sid = msg.body["session_id"]
            if prover is None or prover.ch.A != ch.A or prover.ch.y != ch.y or prover.kind != kind:
                prover = Prover(kind, ch, ch.hash_id, p=p, route=route, budget=budget)
            t = prover.respond(shot_rng(seed, shot), ch.hash_id)
            f.write(encode(response_message(sid, t)))
            f.flush()
            reply = decode(_read_line(f))
    except (OSError, ConnectionError, FormatError) as exc:
        raise ClientError(f"session failed against {endpoint}: {exc}") from exc
    if reply.kind != "verdict":
        raise ProtocolViolation(f"protocol violation: expected verdict, got {reply.kind}")
    if reply.body["session_id"] != sid:
        raise ProtocolViolation("protocol violation: verdict for another session")
    return Verdict(bool(reply.body["accept"]), str(reply.body["reason"]))


def run_remote(endpoint: tuple[str, int], kind: str, sessions: int, *, p: float = 0.0,
               seed: int = 0, budget: int = 1, route: str = "oracle") -> list[Verdict]:
    """``sessions`` sequential client sessions using shot streams ``0..sessions-1``."""
    return [prover_client(endpoint, kind, p=p, seed=seed, shot=i, budget=budget, route=route)
            for i in range(sessions)]
