"""K2 and D2 estimates for the built-in systems.

    python scripts/invariants.py --n 20000 --rate 0.05
"""

from dataclasses import dataclass

import numpy as np
from _config import parse_config

from recurrence_recon import SystemSpec, calibrate_epsilon, generate
from recurrence_recon.rqa import correlation_sum, d2_slope, k2_fit


@dataclass
class InvariantConfig:
    systems: tuple = ("bernoulli", "logistic", "henon")
    n: int = 20000
    rate: float = 0.05
    lmin: int = 2
    lmax: int = 12
    d2_n: int = 5000
    seed: int = 0


def main(cfg: InvariantConfig):
    print("system,epsilon,k2,k2_residual,d2,d2_residual")
    for system in cfg.systems:
        tr = generate(SystemSpec(system, n=cfg.n, seed=cfg.seed))
        eps = calibrate_epsilon(tr, cfg.rate, seed=cfg.seed).epsilon
        fit = k2_fit(tr, eps, lrange=(cfg.lmin, cfg.lmax))
        short = generate(SystemSpec(system, n=cfg.d2_n, seed=cfg.seed))
        d2, resid = d2_slope(correlation_sum(short, np.geomspace(eps / 10, eps, 10)))
        print(f"{system},{eps:.5g},{fit.k2:.4f},{fit.residual:.4f},{d2:.4f},{resid:.4f}")


if __name__ == "__main__":
    main(parse_config(InvariantConfig, __doc__))
