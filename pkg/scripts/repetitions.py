"""Nine repetitions of 2000 shots on each builtin instance, per-repetition and pooled.

    python3 scripts/repetitions.py --noise 0.0 --out runs/repetitions

Writes ``sessions.jsonl`` and ``report.csv`` and prints the pooled table.
Noise is a free knob: the hardware's sub-unit success rates are not a model
input, so ``--noise`` only shows how the table degrades.
"""

import argparse
from dataclasses import dataclass
from pathlib import Path

from poq import lattice, protocol, stats


@dataclass
class Config:
    shots: int = 2000
    reps: int = 9
    noise: float = 0.0
    seed: int = 0
    threads: int = 1
    out: Path = Path("runs/repetitions")


def run(cfg: Config) -> stats.SignificanceReport:
    sessions = []
    for i in lattice.BUILTIN_IDS:
        inst = lattice.builtin(i)
        for r in range(cfg.reps):
            sessions.append(protocol.run_session(
                inst, "quantum", cfg.shots, p=cfg.noise, seed=cfg.seed, instance_id=str(i),
                repetition=r, shot_offset=r * cfg.shots, threads=cfg.threads))
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "sessions.jsonl").write_text("".join(s.to_json() + "\n" for s in sessions))
    rep = stats.report(sessions)
    (cfg.out / "report.csv").write_text(rep.to_csv())
    return rep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, default=2000)
    ap.add_argument("--reps", type=int, default=9)
    ap.add_argument("--noise", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("runs/repetitions"))
    cfg = Config(**vars(ap.parse_args()))
    rep = run(cfg)
    for i in lattice.BUILTIN_IDS:
        per = " ".join(f"{r.rate:.3f}" for r in rep.per_repetition(str(i)))
        print(f"instance {i}: {per}  (sigma {stats.sigma(cfg.shots):.4f} per repetition)")
    print()
    print(rep.to_table(), end="")


if __name__ == "__main__":
    main()
