"""Success rates and significance above the classical 1/2 bound.

The standard error is the worst-case binomial one, ``sigma = 1 / (2 sqrt(N))``,
independent of the observed rate. ``sqrt(p (1 - p) / N)`` would give tighter
bars away from 1/2 but is not what the reported significances use.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from math import sqrt
from typing import Iterable, Sequence

from .errors import InputError, ReportError

CLASSICAL_BOUND = 0.5
CSV_COLUMNS = ("instance", "repetition", "shots", "accepts", "rate", "sigma", "significance")


def sigma(n: int) -> float:
    if n < 1:
        raise InputError(f"shot count must be >= 1, got {n}")
    return 1 / (2 * sqrt(n))


def significance(rate: float, n: int) -> float:
    """Distance of ``rate`` above 1/2 in units of ``sigma(n)``; negative means below."""
    if not 0 <= rate <= 1:
        raise InputError(f"rate {rate} outside [0, 1]")
    return (rate - CLASSICAL_BOUND) / sigma(n)


@dataclass(frozen=True)
class Row:
    instance: str
    repetition: str  # a repetition index, or "pooled"
    shots: int
    accepts: int

    @property
    def rate(self) -> float:
        return self.accepts / self.shots

    @property
    def sigma(self) -> float:
        return sigma(self.shots)

    @property
    def significance(self) -> float:
        return significance(self.rate, self.shots)


@dataclass(frozen=True)
class SignificanceReport:
    rows: tuple[Row, ...]

    @property
    def pooled(self) -> dict[str, Row]:
        return {r.instance: r for r in self.rows if r.repetition == "pooled"}

    def per_repetition(self, instance: str) -> list[Row]:
        return [r for r in self.rows if r.instance == instance and r.repetition != "pooled"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([r.instance, r.repetition, r.shots, r.accepts,
                             f"{r.rate:.6f}", f"{r.sigma:.6f}", f"{r.significance:.3f}"])
        return buf.getvalue()

    def to_table(self) -> str:
        """Pooled results with one column per instance."""
        pooled = list(self.pooled.values())
        head = ["", *(r.instance for r in pooled)]
        rate = ["Success Prob.", *(f"{r.rate:.3f}" for r in pooled)]
        sig = ["Stat. Sign.", *(f"{r.significance:.1f}σ" for r in pooled)]
        shots = ["Shots N", *(str(r.shots) for r in pooled)]
        widths = [max(len(row[i]) for row in (head, rate, sig, shots)) for i in range(len(head))]
        lines = []
        for row in (head, rate, sig, shots):
            lines.append(" | ".join(cell.rjust(w) for cell, w in zip(row, widths)))
        lines.insert(1, "-+-".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def report(sessions: Iterable) -> SignificanceReport:
    """Group sessions by instance into per-repetition rows plus one pooled row each.

    ``sessions`` are ``SessionResult``-like objects with ``instance``,
    ``shots``, ``accepts``, ``hash_id`` and optional ``repetition``.
    """
    sessions = list(sessions)
    if not sessions:
        raise ReportError("no sessions to report")
    groups: dict[str, list] = {}
    for s in sessions:
        groups.setdefault(s.instance, []).append(s)
    rows = []
    for inst, group in groups.items():
        hashes = {getattr(s, "hash_id", None) for s in group}
        if len(hashes) > 1:
            raise ReportError(f"instance {inst} mixes hash ids {sorted(map(str, hashes))}")
        for idx, s in enumerate(group):
            if s.shots < 1 or not 0 <= s.accepts <= s.shots:
                raise ReportError(f"inconsistent session counts: {s.accepts}/{s.shots}")
            rep = s.repetition if getattr(s, "repetition", None) is not None else idx
            rows.append(Row(inst, str(rep), s.shots, s.accepts))
        rows.append(Row(inst, "pooled", sum(s.shots for s in group),
                        sum(s.accepts for s in group)))
    return SignificanceReport(tuple(rows))


def pooled_rate(counts: Sequence[tuple[int, int]]) -> float:
    """``sum(accepts) / sum(shots)`` over ``(accepts, shots)`` pairs."""
    return sum(a for a, _ in counts) / sum(n for _, n in counts)
