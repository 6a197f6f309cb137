"""Trajectory sources: classic maps and flows, CSV ingestion, delay embedding."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import FormatError, GenerationError, InputError, Trajectory

MAPS = ("bernoulli", "logistic", "henon")
FLOWS = ("lorenz", "roessler")

DEFAULT_PARAMS = {
    "bernoulli": {},
    "logistic": {"r": 4.0},
    "henon": {"a": 1.4, "b": 0.3},
    "lorenz": {"sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0},
    "roessler": {"a": 0.15, "b": 0.2, "c": 10.0},
}

STATE_DIM = {"bernoulli": 1, "logistic": 1, "henon": 2, "lorenz": 3, "roessler": 3}


@dataclass
class SystemSpec:
    """What to simulate.

    ``noise`` only affects the Bernoulli map: each iterate receives a seeded
    uniform kick in ``[-noise, noise]`` so that the doubling map does not
    collapse onto 0 after ~53 steps in binary floating point.
    """

    kind: str
    n: int
    params: dict = field(default_factory=dict)
    x0: Sequence[float] | None = None
    dt: float = 0.01
    transient: int = 0
    seed: int = 0
    noise: float = 1e-12

    def __post_init__(self):
        if self.kind not in STATE_DIM:
            raise GenerationError(f"unknown system {self.kind!r}; choose from {sorted(STATE_DIM)}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.kind])
        if unknown:
            raise GenerationError(f"invalid parameter(s) for {self.kind}: {sorted(unknown)}")
        if self.n < 1:
            raise GenerationError("n must be >= 1")
        if self.transient < 0:
            raise GenerationError("transient must be >= 0")
        if self.kind in FLOWS and not self.dt > 0:
            raise GenerationError("dt must be positive for flows")
        if self.x0 is not None and len(np.atleast_1d(self.x0)) != STATE_DIM[self.kind]:
            raise GenerationError(
                f"x0 for {self.kind} must have {STATE_DIM[self.kind]} component(s)"
            )

    @property
    def resolved_params(self) -> dict:
        return {**DEFAULT_PARAMS[self.kind], **{k: float(v) for k, v in self.params.items()}}


def _default_x0(kind: str, rng: np.random.Generator) -> np.ndarray:
    if kind in ("bernoulli", "logistic"):
        return rng.uniform(0.05, 0.95, size=1)
    if kind == "henon":
        return rng.uniform(-0.1, 0.1, size=2)
    if kind == "lorenz":
        return np.array([1.0, 1.0, 1.0]) + rng.uniform(-0.5, 0.5, size=3)
    return np.array([1.0, 1.0, 0.0]) + rng.uniform(-0.5, 0.5, size=3)


def lorenz_rhs(sigma: float, rho: float, beta: float) -> Callable:
    def f(s):
        x, y, z = s
        return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])

    return f


def roessler_rhs(a: float, b: float, c: float) -> Callable:
    def f(s):
        x, y, z = s
        return np.array([-y - z, x + a * y, b + z * (x - c)])

    return f


def rk4_step(f: Callable, s: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(s)
    k2 = f(s + 0.5 * dt * k1)
    k3 = f(s + 0.5 * dt * k2)
    k4 = f(s + dt * k3)
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def generate(spec: SystemSpec) -> Trajectory:
    """Simulate ``spec.transient + spec.n`` samples and keep the last ``n``.

    Maps are iterated exactly; flows use fixed-step RK4 with step ``dt``.
    """
    rng = np.random.default_rng(spec.seed)
    p = spec.resolved_params
    x0 = _default_x0(spec.kind, rng) if spec.x0 is None else np.asarray(spec.x0, dtype=float)
    total = spec.transient + spec.n
    out = np.empty((total, STATE_DIM[spec.kind]))
    out[0] = x0

    if spec.kind == "bernoulli":
        kicks = rng.uniform(-spec.noise, spec.noise, size=total) if spec.noise > 0 else np.zeros(total)
        x = float(x0[0])
        for k in range(1, total):
            x = (2.0 * x + kicks[k]) % 1.0
            if x >= 1.0:  # (-tiny) % 1.0 rounds to 1.0
                x = 0.0
            out[k, 0] = x
    elif spec.kind == "logistic":
        r = p["r"]
        x = float(x0[0])
        for k in range(1, total):
            x = r * x * (1.0 - x)
            out[k, 0] = x
    elif spec.kind == "henon":
        a, b = p["a"], p["b"]
        x, y = float(x0[0]), float(x0[1])
        for k in range(1, total):
            x, y = 1.0 - a * x * x + y, b * x
            out[k] = x, y
    else:
        f = lorenz_rhs(**p) if spec.kind == "lorenz" else roessler_rhs(**p)
        s = x0.copy()
        for k in range(1, total):
            s = rk4_step(f, s, spec.dt)
            out[k] = s
            if not np.all(np.isfinite(s)):
                break

    bad = np.flatnonzero(~np.all(np.isfinite(out), axis=1))
    if bad.size:
        raise GenerationError(f"{spec.kind}: non-finite state at step {int(bad[0])}")
    dt = spec.dt if spec.kind in FLOWS else 1.0
    return Trajectory(out[spec.transient:], dt=dt)


def delay_embed(series, m: int, lag: int = 1, dt: float = 1.0) -> Trajectory:
    """Delay vectors ``(s_k, s_{k+lag}, ..., s_{k+(m-1)lag})``."""
    s = np.asarray(series, dtype=np.float64).ravel()
    if m < 1 or lag < 1:
        raise InputError("m and lag must be positive integers")
    need = (m - 1) * lag + 1
    if s.size < need:
        raise InputError(f"series too short: need at least {need} samples for m={m}, lag={lag}")
    n = s.size - (m - 1) * lag
    pts = np.stack([s[j * lag: j * lag + n] for j in range(m)], axis=1)
    return Trajectory(pts, dt=dt)


def save_csv(traj: Trajectory, path, comment: str | None = None) -> None:
    header = f"# dim={traj.dim} dt={traj.dt!r}"
    if comment:
        header += " " + comment
    lines = [header]
    lines.extend(",".join(repr(float(v)) for v in row) for row in traj.points)
    Path(path).write_text("\n".join(lines) + "\n")


def load_csv(path) -> Trajectory:
    """Read a trajectory; ``dt`` is taken from a ``dt=`` header token if present."""
    text = Path(path).read_text()
    rows = []
    dt = 1.0
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            for token in stripped[1:].split():
                key, _, val = token.partition("=")
                if key == "dt" and val:
                    try:
                        dt = float(val)
                    except ValueError:
                        raise FormatError(f"{path}:{lineno}: bad dt value {val!r}") from None
            continue
        cells = stripped.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise FormatError(f"{path}:{lineno}: expected {width} columns, found {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric cell in {stripped!r}") from None
    if not rows:
        raise FormatError(f"{path}: no data rows")
    try:
        return Trajectory(np.array(rows), dt=dt)
    except InputError as exc:
        raise FormatError(f"{path}: {exc}") from None
