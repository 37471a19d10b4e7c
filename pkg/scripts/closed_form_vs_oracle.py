"""Cross-validate the two-parameter closed-form bound against the minimizer.

For each beta on a grid, draws a few positive definite weights, evaluates
the closed form, runs the brute-force oracle on the same problem, and
prints the gap plus the stationarity-certificate residual. Exits nonzero
if any gap exceeds the tolerance.
"""

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from qcrb import analysis, oracle
from qcrb.model import FisherData


@dataclass
class SweepConfig:
    betas: tuple = (0.0, 0.25, 0.5, 0.75, 0.9, 1.0)
    weights_per_beta: int = 4
    restarts: int = 6
    seed: int = 2026
    tol: float = 1e-4


def synthetic_fd(beta):
    jt = beta * np.array([[0.0, 1.0], [-1.0, 0.0]])
    return FisherData(JS=np.eye(2), Jt=jt, gram=np.eye(2) + 1j * jt)


def random_weights(seed, count):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        b = rng.normal(size=(2, 2))
        out.append(b @ b.T + 0.1 * np.eye(2))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--restarts", type=int, default=SweepConfig.restarts)
    ap.add_argument("--weights", type=int, default=SweepConfig.weights_per_beta)
    ap.add_argument("--seed", type=int, default=SweepConfig.seed)
    args = ap.parse_args()
    cfg = SweepConfig(weights_per_beta=args.weights,
                      restarts=args.restarts, seed=args.seed)

    worst = 0.0
    print(f"{'beta':>5}  {'closed':>14}  {'oracle':>14}  {'|gap|':>9}  {'cert':>9}")
    for k, beta in enumerate(cfg.betas):
        fd = synthetic_fd(beta)
        for g in random_weights(cfg.seed + 97 * k, cfg.weights_per_beta):
            closed = analysis.cr_bound_2param(fd, g).value
            prob = oracle.OracleProblem(gram=fd.gram, G=g,
                                        restarts=cfg.restarts, seed=cfg.seed)
            res = oracle.minimize(prob)
            cert = oracle.stationarity_certificate(res)
            gap = abs(res.value - closed)
            worst = max(worst, gap)
            print(f"{beta:5.2f}  {closed:14.10f}  {res.value:14.10f}  "
                  f"{gap:9.2e}  {cert.residual:9.2e}")

    print(f"worst gap {worst:.3e} (tolerance {cfg.tol:g})")
    return 0 if worst <= cfg.tol else 1


if __name__ == "__main__":
    sys.exit(main())
