"""Reconstruction quality versus recurrence rate.

    python scripts/epsilon_sweep.py --system bernoulli --n 2000 --m 1
"""

import time
from dataclasses import dataclass

from _config import parse_config

from recurrence_recon import SystemSpec, build_matrix, calibrate_epsilon, generate, reconstruct


@dataclass
class SweepConfig:
    system: str = "bernoulli"
    n: int = 2000
    m: int = 1
    proxy: str = "completed"
    rates: tuple = (0.05, 0.1, 0.25, 0.5)
    seed: int = 0


def main(cfg: SweepConfig):
    tr = generate(SystemSpec(cfg.system, n=cfg.n, seed=cfg.seed))
    print("rate,epsilon,n_effective,stress,bit_agreement,rank_corr,seconds")
    for rate in cfg.rates:
        t0 = time.perf_counter()
        R = build_matrix(tr, calibrate_epsilon(tr, rate).epsilon)
        res = reconstruct(R, m=cfg.m, seed=cfg.seed, proxy=cfg.proxy)
        print(f"{rate},{R.epsilon:.6g},{res.n_effective},{res.stress:.4f},"
              f"{res.bit_agreement:.4f},{res.distance_rank_correlation:.4f},"
              f"{time.perf_counter() - t0:.1f}")


if __name__ == "__main__":
    main(parse_config(SweepConfig, __doc__))
