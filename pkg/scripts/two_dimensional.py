"""2D problem: L2 error with (x, y) -> (x, 10(y - 1)) against the identity map.

    python scripts/two_dimensional.py --seeds 0 1 2
"""

import argparse
import time

from cdpinn import trainer
from cdpinn.problems import Problem2D
from cdpinn.transform import AffineTransform


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=1e-4)
    ap.add_argument("--width", type=int, default=5)
    ap.add_argument("--adam", type=int, default=2000)
    ap.add_argument("--lbfgs", type=int, default=1000)
    ap.add_argument("--n", type=int, default=129)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    args = ap.parse_args()

    problem = Problem2D(args.eps)
    sched = trainer.Schedule(args.adam, args.lbfgs)
    cases = (("transformed", AffineTransform((1.0, 10.0), (0.0, -1.0))), ("identity", AffineTransform.identity(2)))
    for seed in args.seeds:
        for name, t in cases:
            t0 = time.perf_counter()
            _, res = trainer.train_2d(problem, (2, args.width, 1), t, sched, seed, args.n)
            err = trainer.evaluate_2d(problem, res.params, t, args.n)[4]
            print(f"seed {seed} {name:12s} L2 error {err:.4f}  final loss {res.final_loss:.3g}  ({time.perf_counter() - t0:.0f}s)")


if __name__ == "__main__":
    main()
