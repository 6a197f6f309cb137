"""Return-time statistics over seeded runs of a long logistic orbit.

    python scripts/return_times.py --runs 10 --measure 0.01
"""

from dataclasses import dataclass

import numpy as np
from _config import parse_config

from recurrence_recon import SystemSpec, generate
from recurrence_recon import stats as rs


@dataclass
class ReturnTimeConfig:
    system: str = "logistic"
    n: int = 50000
    measure: float = 0.01
    window: int = 500
    runs: int = 10
    shuffles: int = 1000


def main(cfg: ReturnTimeConfig):
    print("seed,index,n_times,mean_time,exp_p,lag1,indep_p,dispersion,poisson_p")
    for seed in range(cfg.runs):
        tr = generate(SystemSpec(cfg.system, n=cfg.n, seed=seed))
        i = int(np.random.default_rng(seed).integers(cfg.n // 10))
        row, _ = rs.ball_row(tr, i, cfg.measure)
        sample = rs.return_times(row, i)
        ex = rs.test_exponential(sample, seed=seed)
        ind = rs.test_independence(sample, n_shuffles=cfg.shuffles, seed=seed)
        po = rs.test_poisson_counts(row, i, cfg.window)
        print(f"{seed},{i},{len(sample)},{ex.extra['mean']:.2f},{ex.p_value:.3f},"
              f"{ind.statistic:.3f},{ind.p_value:.3f},{po.statistic:.3f},{po.p_value:.3f}")


if __name__ == "__main__":
    main(parse_config(ReturnTimeConfig, __doc__))
