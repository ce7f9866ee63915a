"""Predator-prey-scavenger simulation and filter-based signal recovery."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import NamedTuple

import numpy as np

from ..solvers import SolveConfig, rgdbek
from ..sparse import SparseMatrix, spmv


@dataclass(frozen=True)
class PpsParams:
    """Model coefficients; defaults are the reference parameter set."""

    r: float = 0.5
    k: float = 100.0   # carrying capacity (unrelated to the recovery delay)
    a: float = 0.5
    a0: float = 0.25
    b: float = 0.5
    b0: float = 0.25
    d: float = 0.5
    e: float = 1.0
    f: float = 0.1
    g: float = 0.5
    h: float = 0.1
    i: float = 0.1
    i0: float = 0.25
    j: float = 1.0

    def __post_init__(self):
        bad = [fl.name for fl in fields(self) if not getattr(self, fl.name) > 0]
        if bad:
            raise ValueError(f"parameters must be strictly positive: {bad}")


def pps_rhs(p, state) -> np.ndarray:
    x, y, z = state
    x2, z2 = x * x, z * z
    dx = p.r * x * (1 - x / p.k) - p.a * x2 * y / (1 + p.a0 * x2) - p.b * x2 * z / (1 + p.b0 * x2)
    dy = p.d * x2 * y / (1 + p.a0 * x2) + p.f * z2 * y / (1 + p.i0 * z2) - p.e * y
    dz = p.g * x2 * z / (1 + p.b0 * x2) + p.h * y * z - p.i * y * z2 / (1 + p.i0 * z2) - p.j * z
    return np.array([dx, dy, dz])


def rk4(rhs, y0, t_end: float, dt: float):
    """Classical fourth-order Runge-Kutta on a uniform grid; returns ``(t, Y)``."""
    steps = int(round(t_end / dt))
    if steps < 0 or not np.isclose(steps * dt, t_end, rtol=0, atol=1e-9 * max(1.0, t_end)):
        raise ValueError(f"t_end={t_end} is not a non-negative multiple of dt={dt}")
    Y = np.empty((steps + 1, len(y0)))
    Y[0] = y0
    s = np.asarray(y0, dtype=np.float64)
    for n in range(steps):
        k1 = rhs(s)
        k2 = rhs(s + 0.5 * dt * k1)
        k3 = rhs(s + 0.5 * dt * k2)
        k4 = rhs(s + dt * k3)
        s = s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        Y[n + 1] = s
    return np.arange(steps + 1) * dt, Y


def simulate_pps(params: PpsParams = PpsParams(), x0=4.0, y0=3.0, z0=2.0, t_end=200.0, dt=0.1):
    """Integrate the three-species model; returns ``(t, X)`` with ``X[:, 0..2] = x, y, z``."""
    if min(x0, y0, z0) <= 0:
        raise ValueError("initial populations must be strictly positive")
    return rk4(lambda s: pps_rhs(params, s), np.array([x0, y0, z0], dtype=np.float64), t_end, dt)


def noisy_delayed(v, delay: int, sigma: float, rng) -> np.ndarray:
    """``m(t) = v(t - delay) + noise``; entries before ``delay`` are NaN (no history)."""
    v = np.asarray(v, dtype=np.float64)
    if delay < 0:
        raise ValueError("delay must be >= 0")
    m = np.full(v.shape, np.nan)
    m[delay:] = v[:v.size - delay] if delay else v
    m[delay:] += sigma * rng.standard_normal(v.size - delay)
    return m


def build_convolution_system(noisy, truth, n: int, t: int):
    """Toeplitz system ``M c = v`` with ``M[i, l] = m(t + i - l)`` and ``v[i] = truth(t + i)``.

    ``i, l = 0..n``. Returns ``(M, v)``.
    """
    noisy = np.asarray(noisy, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if n < 0:
        raise ValueError("filter length n must be >= 0")
    if t - n < 0 or t + n >= noisy.size:
        raise ValueError(f"window [{t - n}, {t + n}] leaves the series of length {noisy.size}")
    idx = t + np.arange(n + 1)[:, None] - np.arange(n + 1)[None, :]
    M = noisy[idx]
    if np.isnan(M).any():
        raise ValueError("window reaches samples that have no delayed history")
    return SparseMatrix.from_dense(M), truth[t:t + n + 1].copy()


class Recovery(NamedTuple):
    filters: list          # c_x, c_y, c_z
    predicted: np.ndarray  # (n+1, 3) over the fitted window
    truth: np.ndarray
    frobenius_error: float
    traces: list
    holdout_error: float   # nan unless a held-out window was requested


def recover_and_predict(series, n: int, delay: int = 1, sigma: float = 3.0, seed: int = 0,
                        cfg: SolveConfig = SolveConfig(eta=0.5, tolerance=1e-10, max_iters=10_000),
                        t: int = None, holdout: int = 0) -> Recovery:
    """Fit one filter per species with RGDBEK and predict from the noisy inputs.

    ``series`` is the ``(T, 3)`` true trajectory. The fitted window starts at
    ``t`` (default ``n + delay``, the earliest legal start); the reported
    Frobenius error is over that window. With ``holdout > 0`` the filters
    are also applied to the next ``holdout`` samples after the window.
    """
    series = np.asarray(series, dtype=np.float64)
    if t is None:
        t = n + delay
    filters, preds, truths, traces, held = [], [], [], [], []
    for v in range(series.shape[1]):
        rng = np.random.default_rng([seed, v])
        m = noisy_delayed(series[:, v], delay, sigma, rng)
        M, target = build_convolution_system(m, series[:, v], n, t)
        res = rgdbek(M, target, cfg)
        filters.append(res.x)
        preds.append(spmv(M, res.x))
        truths.append(target)
        traces.append(res.trace)
        if holdout:
            start = t + n + 1
            if start + holdout > series.shape[0]:
                raise ValueError("held-out window runs past the end of the series")
            rows = start + np.arange(holdout)[:, None] - np.arange(n + 1)[None, :]
            held.append(m[rows] @ res.x - series[start:start + holdout, v])
    pred = np.column_stack(preds)
    truth = np.column_stack(truths)
    err = float(np.linalg.norm(truth - pred))
    hold = float(np.linalg.norm(np.column_stack(held))) if holdout else float("nan")
    return Recovery(filters, pred, truth, err, traces, hold)


def params_dict(p: PpsParams) -> dict:
    return asdict(p)
