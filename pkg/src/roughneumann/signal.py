"""Driving signals: piecewise-linear paths in C0([0,T], R^m).

Brownian sample paths come from the Levy midpoint (bridge) construction on a
dyadic grid, driven by numpy's Philox counter-based generator.  Draws are
consumed level by level, so halving dt appends one refinement level and
reuses every coarser draw: the refined path converges uniformly to the
coarse one as dt -> 0, which is the property the splitting solver leans on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DrivingPath:
    """Piecewise-linear path: values[k] at times[k], linear in between."""

    times: np.ndarray  # (N+1,), strictly increasing, times[0] = 0
    values: np.ndarray  # (N+1, m)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing with >= 2 entries")
        if v.shape[0] != t.shape[0]:
            raise ValueError("times/values length mismatch")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def eval(self, t) -> np.ndarray:
        """Linear interpolation; shape (m,) for scalar t, else (len(t), m)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.stack(
            [np.interp(t_arr, self.times, self.values[:, i]) for i in range(self.m)],
            axis=-1,
        )
        return out[0] if np.isscalar(t) or np.ndim(t) == 0 else out

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def running_extrema(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(min, max) of each component over [0, t]; exact for the linear
        interpolant (extrema sit at breakpoints or at t)."""
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ValueError("t outside the path's time range")
        mask = self.times <= t + 1e-15
        cand = np.vstack([self.values[mask], np.atleast_2d(self.eval(float(t)))])
        return cand.min(axis=0), cand.max(axis=0)

    def refine(self, factor: int = 2) -> "DrivingPath":
        """Insert factor-1 equispaced breakpoints per segment (same function)."""
        if factor < 2:
            return self
        ts = [self.times[0]]
        vs = [self.values[0]]
        for k in range(len(self.times) - 1):
            t0, t1 = self.times[k], self.times[k + 1]
            for j in range(1, factor + 1):
                lam = j / factor
                ts.append(t0 + lam * (t1 - t0))
                vs.append((1 - lam) * self.values[k] + lam * self.values[k + 1])
        return DrivingPath(np.asarray(ts), np.asarray(vs))

    def to_csv(self, path: str) -> None:
        data = np.column_stack([self.times, self.values])
        header = "t," + ",".join(f"zeta{i+1}" for i in range(self.m))
        np.savetxt(path, data, delimiter=",", header=header, comments="")

    @staticmethod
    def from_csv(path: str) -> "DrivingPath":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return DrivingPath(data[:, 0], data[:, 1:])


def oscillation(p: DrivingPath, s: float, t: float) -> np.ndarray:
    """max - min of each component of the interpolant on [s, t]."""
    if t < s:
        raise ValueError("reversed interval")
    if s < p.times[0] - 1e-12 or t > p.times[-1] + 1e-12:
        raise ValueError("interval outside the path's time range")
    if t == s:
        return np.zeros(p.m)
    inside = (p.times > s) & (p.times < t)
    cand = np.vstack(
        [np.atleast_2d(p.eval(float(s))), p.values[inside], np.atleast_2d(p.eval(float(t)))]
    )
    return cand.max(axis=0) - cand.min(axis=0)


def running_extrema(p: DrivingPath, t: float) -> tuple[np.ndarray, np.ndarray]:
    return p.running_extrema(t)


def constant_path(T: float, m: int = 1, n_seg: int = 1) -> DrivingPath:
    times = np.linspace(0.0, T, n_seg + 1)
    return DrivingPath(times, np.zeros((n_seg + 1, m)))


def linear_path(T: float, slope, n_seg: int = 1) -> DrivingPath:
    slope = np.atleast_1d(np.asarray(slope, dtype=float))
    times = np.linspace(0.0, T, n_seg + 1)
    return DrivingPath(times, times[:, None] * slope[None, :])


def brownian_sample(seed: int, T: float, dt: float, m: int = 1,
                    scale: float = 1.0) -> DrivingPath:
    """Seeded Brownian path on a dyadic grid with step <= dt.

    RNG: numpy Philox keyed by `seed` (counter-based, bit-reproducible across
    platforms).  Construction: level 0 draws zeta(T); level L fills the 2^(L-1)
    dyadic midpoints by Brownian bridging.  All increments are exactly
    N(0, dt_eff) jointly; zeta(0) = 0.
    """
    if dt <= 0 or T < dt:
        raise ValueError("need dt > 0 and T >= dt")
    depth = max(0, int(np.ceil(np.log2(T / dt))))
    n = 2**depth
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    vals = np.zeros((n + 1, m))
    vals[n] = np.sqrt(T) * gen.standard_normal(m)
    step = n
    while step > 1:
        half = step // 2
        idx = np.arange(half, n, step)  # midpoints of the current level
        dt_level = (step * T / n) / 2.0
        noise = gen.standard_normal((len(idx), m))
        vals[idx] = 0.5 * (vals[idx - half] + vals[idx + half]) + np.sqrt(
            dt_level / 2.0
        ) * noise
        step = half
    times = np.linspace(0.0, T, n + 1)
    return DrivingPath(times, scale * vals)
