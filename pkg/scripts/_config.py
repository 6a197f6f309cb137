"""Tiny helper: expose a dataclass config as command-line flags."""

import argparse
from dataclasses import asdict, fields


def parse_config(cls, description=None):
    p = argparse.ArgumentParser(description=description)
    for f in fields(cls):
        default = f.default
        if isinstance(default, tuple):
            p.add_argument(f"--{f.name.replace('_', '-')}", type=type(default[0]), nargs="+",
                           default=list(default))
        else:
            p.add_argument(f"--{f.name.replace('_', '-')}", type=type(default), default=default)
    args = vars(p.parse_args())
    cfg = cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in args.items()})
    print("# " + " ".join(f"{k}={v}" for k, v in asdict(cfg).items()))
    return cfg
