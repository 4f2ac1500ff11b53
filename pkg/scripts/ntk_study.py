"""Tangent-kernel diagnostics at initialization: rate vs scale, layer location, trace ratio, width.

    python scripts/ntk_study.py --seeds 5
"""

import argparse

import numpy as np

from cdpinn import net, ntk, trainer
from cdpinn.problems import Problem1D
from cdpinn.transform import AffineTransform


def kernel(width, a, b, seed, samples):
    return ntk.assemble_kernel(net.init_xavier((1, width, 1), seed), AffineTransform((a,), (b,)), samples)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=1e-4)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    s = trainer.build_samples_reduced(Problem1D(args.eps))

    print("convergence rate c = Tr(K)/N, width 20, b = -1")
    for seed in range(args.seeds):
        c = [ntk.convergence_rate(kernel(20, a, -1.0, seed, s)) for a in (1.0, 10.0, 100.0)]
        print(f"  seed {seed}: a=1 {c[0]:9.3f}  a=10 {c[1]:9.3f}  a=100 {c[2]:10.3f}")

    print("steepest-gradient location of the top 3 residual eigenvectors, a = 10")
    for b in (-1.0, 0.0):
        for seed in range(args.seeds):
            k = kernel(20, 10.0, b, seed, s)
            xr, vr = ntk.top_eigenvectors(ntk.eig_sym(k), k, 3).residual_part()
            locs = [ntk.steepest_gradient_location(xr[:, 0], vr[:, i]) for i in range(3)]
            print(f"  b={b:+.0f} seed {seed}: " + "  ".join(f"{v:.3f}" for v in locs))

    print("Tr(K_rr)/Tr(K_uu), untransformed")
    for w in (20, 100):
        r = [kernel(w, 1.0, 0.0, seed, s) for seed in range(args.seeds)]
        print(f"  width {w}: " + "  ".join(f"{k.trace_rr / k.trace_uu:.1f}" for k in r))

    print("eigenvalues above 1e-9 lambda_max, untransformed")
    for w in (5, 20, 100):
        sp = ntk.eig_sym(kernel(w, 1.0, 0.0, 0, s))
        n = int(np.sum(sp.raw_values > 1e-9 * sp.lambda_max))
        print(f"  width {w}: {n}   top: " + " ".join(f"{v:.3g}" for v in sp.values[:6]))


if __name__ == "__main__":
    main()
