"""Outcome counts of reduced-solution correction over many seeds, with and without x -> a(x+b).

    python scripts/seed_sweep.py --seeds 20 --adam 10000 --lbfgs 10000 --out out/sweep
"""

import argparse
import time
from pathlib import Path

from cdpinn import trainer
from cdpinn.cli import write_csv
from cdpinn.problems import Problem1D
from cdpinn.transform import AffineTransform


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=1e-4)
    ap.add_argument("--width", type=int, default=20)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--adam", type=int, default=10000)
    ap.add_argument("--lbfgs", type=int, default=10000)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--b", type=float, default=-1.0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("out/sweep"))
    args = ap.parse_args()

    problem = Problem1D(args.eps)
    sched = trainer.Schedule(args.adam, args.lbfgs)
    args.out.mkdir(parents=True, exist_ok=True)
    cases = {"identity": AffineTransform.identity(), "transformed": AffineTransform((args.a,), (args.b,))}
    for name, t in cases.items():
        t0 = time.perf_counter()
        rows = trainer.seed_sweep(problem, (1, args.width, 1), t, sched, range(args.seeds), args.workers)
        write_csv(
            args.out / f"outcomes_{name}.csv",
            ["seed", "label", "d_exact", "d_opposite", "d_linear", "final_loss"],
            [
                (r.seed, r.outcome.label, r.outcome.d_exact, r.outcome.d_opposite, r.outcome.d_linear, r.final_loss)
                if r.outcome
                else (r.seed, "failed", "", "", "", "")
                for r in rows
            ],
        )
        print(f"{name:12s} {trainer.sweep_counts(rows)}  ({time.perf_counter() - t0:.0f}s)")


if __name__ == "__main__":
    main()
