"""Fixed-step RK4 integration of the delayed ring and rotating-wave fitting.

Delayed values are read from a cubic Hermite interpolant of the computed
trajectory (values and derivatives at the grid points), or from the initial
history for times before 0.  The step must not exceed ``T/20``; ``T/dt`` need
not be an integer.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import LaserParams, network_rhs, unpack

__all__ = [
    "Trajectory",
    "WaveFitResult",
    "integrate",
    "constant_history",
    "rotating_wave_history",
    "fit_rotating_wave",
    "trajectory_csv",
    "power_traces_csv",
]


@dataclass
class Trajectory:
    times: np.ndarray  # (N+1,)
    states: np.ndarray  # (N+1, n, 4)
    derivatives: np.ndarray  # (N+1, n, 4)
    history: Callable[[float], np.ndarray]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def __call__(self, t: float) -> np.ndarray:
        """Dense output: Hermite interpolant inside the run, initial history before it."""
        return _hermite(self, t)

    def history_dense(self, theta: float) -> np.ndarray:
        """State at ``t_end + theta`` for ``theta`` in ``[-T, 0]``."""
        return _hermite(self, self.times[-1] + theta)


def _hermite(tr: Trajectory, t: float) -> np.ndarray:
    t0, h = tr.times[0], tr.dt
    if t < t0:
        return tr.history(t - t0)
    s = (t - t0) / h
    k = min(int(np.floor(s)), len(tr.times) - 2)
    u = s - k
    y0, y1 = tr.states[k], tr.states[k + 1]
    f0, f1 = tr.derivatives[k], tr.derivatives[k + 1]
    h00 = (1 + 2 * u) * (1 - u) ** 2
    h10 = u * (1 - u) ** 2
    h01 = u * u * (3 - 2 * u)
    h11 = u * u * (u - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def constant_history(x: np.ndarray) -> Callable[[float], np.ndarray]:
    x = np.array(x, dtype=float)
    return lambda theta: x


def rotating_wave_history(state: np.ndarray, w: float) -> Callable[[float], np.ndarray]:
    """History of the rotating wave ``exp(w J theta) x`` (the field rotates, ``g, q`` stay)."""
    state = np.array(state, dtype=float)

    def hist(theta):
        c, s = np.cos(w * theta), np.sin(w * theta)
        out = state.copy()
        out[:, 2] = c * state[:, 2] - s * state[:, 3]
        out[:, 3] = s * state[:, 2] + c * state[:, 3]
        return out
    return hist


def integrate(p: LaserParams, alpha: float, initial_history, t_end: float, dt: float) -> Trajectory:
    """RK4 with step ``dt`` on ``[0, t_end]`` from a history on ``[-T, 0]``.

    ``initial_history`` is a callable ``theta -> (n, 4)`` or a constant state.
    """
    if dt > p.T / 20 * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds T/20={p.T / 20}")
    hist = initial_history if callable(initial_history) else constant_history(initial_history)
    nsteps = int(round(t_end / dt))
    x0 = np.array(hist(0.0), dtype=float)
    times = np.arange(nsteps + 1) * dt
    states = np.empty((nsteps + 1,) + x0.shape)
    derivs = np.empty_like(states)
    states[0] = x0
    tr = Trajectory(times, states, derivs, hist)

    def delayed(t):
        td = t - p.T
        if td <= 0.0:
            return hist(td)
        return _hermite(tr, td)

    def f(t, x):
        return network_rhs(p, alpha, x, delayed(t))

    derivs[0] = f(0.0, x0)
    x = x0
    for k in range(nsteps):
        t = times[k]
        k1 = derivs[k]
        k2 = f(t + dt / 2, x + dt / 2 * k1)
        k3 = f(t + dt / 2, x + dt / 2 * k2)
        k4 = f(t + dt, x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(f"non-finite state at t={t + dt:.6g}")
        states[k + 1] = x
        derivs[k + 1] = f(t + dt, x)
    return tr


@dataclass
class WaveFitResult:
    fitted_w: float
    residual: float
    twist_estimate: int | None
    x_bar: np.ndarray | None = None


def fit_rotating_wave(traj: Trajectory, transient: float, window: float | None = None,
                      amp_floor: float = 1e-9) -> WaveFitResult:
    """Fit ``x(t) ~ exp(w J t) x_bar`` on the part of the run after ``transient``.

    ``w`` comes from a linear fit of the unwrapped phase of the strongest field,
    ``x_bar`` from averaging in the frame rotating with ``w``.  The residual is the
    sup-norm misfit over the fitted window.
    """
    t = traj.times
    sel = t >= transient - 1e-12
    if window is not None:
        sel &= t <= transient + window + 1e-12
    if sel.sum() < 8:
        raise ValueError("trajectory too short for the requested transient")
    ts, xs = t[sel], traj.states[sel]
    g, q, a = unpack(xs)
    amp = np.abs(a)
    if amp.max() < amp_floor:
        gbar, qbar = g.mean(axis=0), q.mean(axis=0)
        res = max(np.abs(g - gbar).max(), np.abs(q - qbar).max(), amp.max())
        return WaveFitResult(0.0, float(res), None, None)
    k0 = int(np.argmax(amp.mean(axis=0)))
    phase = np.unwrap(np.angle(a[:, k0]))
    w, _ = np.polyfit(ts - ts[0], phase, 1)
    span = ts[-1] - ts[0]
    if abs(w) > 0 and span < 3 * 2 * np.pi / abs(w):
        raise ValueError("fit window shorter than three periods")
    rot = np.exp(-1j * w * (ts - ts[0]))[:, None]
    abar = (a * rot).mean(axis=0)
    gbar, qbar = g.mean(axis=0), q.mean(axis=0)
    model_a = abar[None, :] / rot
    res = max(np.abs(g - gbar).max(), np.abs(q - qbar).max(), np.abs(a - model_a).max())
    twist = None
    if np.all(np.abs(abar) > amp_floor):
        n = len(abar)
        steps = np.angle(np.roll(abar, -1) / abar) / (2 * np.pi / n)
        r = np.round(steps)
        if np.all(np.abs(steps - r) < 0.25) and np.all(r % n == r[0] % n):
            twist = int(r[0] % n)
    # a_k(t) = abar_k exp(i w t): x_bar is the state at the start of the window
    x_bar = np.stack([gbar, qbar, abar.real, abar.imag], axis=-1)
    return WaveFitResult(float(w), float(res), twist, x_bar)


def trajectory_csv(traj: Trajectory) -> str:
    n = traj.states.shape[1]
    cols = ["t"] + [f"{c}{k}" for k in range(n) for c in ("g", "q", "re_a", "im_a")]
    lines = [",".join(cols)]
    for t, x in zip(traj.times, traj.states):
        lines.append(",".join([f"{t:.12g}"] + [f"{v:.12g}" for v in x.ravel()]))
    return "\n".join(lines) + "\n"


def power_traces_csv(traj: Trajectory) -> str:
    n = traj.states.shape[1]
    lines = [",".join(["t"] + [f"power{k}" for k in range(n)])]
    pw = traj.states[..., 2] ** 2 + traj.states[..., 3] ** 2
    for t, row in zip(traj.times, pw):
        lines.append(",".join([f"{t:.12g}"] + [f"{v:.12g}" for v in row]))
    return "\n".join(lines) + "\n"
