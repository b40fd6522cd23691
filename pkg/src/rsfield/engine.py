"""Time integration, trajectory recording, monitors, and FD oracles.

Complex phase vectors are integrated as real vectors of doubled dimension.
Monitors are read-only callables sampled at every recorded step; drift
statistics are deviations from the initial sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IntegrationError, StiffnessError


def complex_to_real(z: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(z.view(np.float64))


def real_to_complex(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x).view(np.complex128)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (steps, dim) complex
    monitors: dict[str, np.ndarray] = field(default_factory=dict)

    def drift(self) -> dict[str, float]:
        """Max deviation of each monitor from its initial sample."""
        out = {}
        for name, vals in self.monitors.items():
            out[name] = float(np.abs(np.asarray(vals) - vals[0]).max())
        return out


def _wrap_flow(flow):
    def real_flow(t, x):
        return complex_to_real(np.asarray(flow(t, real_to_complex(x)), dtype=complex))

    return real_flow


def _sample_monitors(monitors, t, z):
    return {name: fn(t, z) for name, fn in (monitors or {}).items()}


def integrate_rk4(flow, state0, dt, T, monitors=None, record_every=1) -> Trajectory:
    """Classic fixed-step RK4; records every record_every-th step."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    if T < 0:
        raise DomainError("T must be nonnegative")
    z0 = np.asarray(state0, dtype=complex).reshape(-1)
    f = _wrap_flow(flow)
    x = complex_to_real(z0.copy())
    nsteps = int(round(T / dt)) if T > 0 else 0
    times = [0.0]
    states = [z0.copy()]
    samples = [_sample_monitors(monitors, 0.0, z0)]
    t = 0.0
    for step in range(nsteps):
        try:
            k1 = f(t, x)
            k2 = f(t + dt / 2, x + dt / 2 * k1)
            k3 = f(t + dt / 2, x + dt / 2 * k2)
            k4 = f(t + dt, x + dt * k3)
        except Exception as exc:
            raise IntegrationError(f"flow failed at t = {t}: {exc}", t=t) from exc
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (step + 1) * dt
        if (step + 1) % record_every == 0 or step == nsteps - 1:
            z = real_to_complex(x).copy()
            times.append(t)
            states.append(z)
            samples.append(_sample_monitors(monitors, t, z))
    mon = {}
    if monitors:
        for name in monitors:
            mon[name] = np.array([s[name] for s in samples])
    return Trajectory(np.array(times), np.array(states), mon)


# Dormand-Prince 4(5) tableau
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (
    5179 / 57600,
    0.0,
    7571 / 16695,
    393 / 640,
    -92097 / 339200,
    187 / 2100,
    1 / 40,
)
MIN_STEP = 1e-12


def integrate_adaptive(flow, state0, tol, T, monitors=None, max_steps=2_000_000) -> Trajectory:
    """Embedded Dormand-Prince 4(5) with proportional step control."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    z0 = np.asarray(state0, dtype=complex).reshape(-1)
    f = _wrap_flow(flow)
    x = complex_to_real(z0.copy())
    t = 0.0
    times = [0.0]
    states = [z0.copy()]
    samples = [_sample_monitors(monitors, 0.0, z0)]
    h = min(T, 1e-2) if T > 0 else 0.0
    steps = 0
    while t < T and steps < max_steps:
        steps += 1
        h = min(h, T - t)
        ks = []
        try:
            for i in range(7):
                xi = x.copy()
                for j, a in enumerate(_DP_A[i]):
                    xi += h * a * ks[j]
                ks.append(f(t + _DP_C[i] * h, xi))
        except Exception as exc:
            raise IntegrationError(f"flow failed at t = {t}: {exc}", t=t) from exc
        x5 = x + h * sum(b * k for b, k in zip(_DP_B5, ks))
        x4 = x + h * sum(b * k for b, k in zip(_DP_B4, ks))
        err = float(np.max(np.abs(x5 - x4)))
        if err <= tol or h <= MIN_STEP:
            if h <= MIN_STEP and err > tol:
                raise StiffnessError(f"step size underflow at t = {t} (err {err:.3e})")
            t += h
            x = x5
            z = real_to_complex(x).copy()
            times.append(t)
            states.append(z)
            samples.append(_sample_monitors(monitors, t, z))
        factor = 0.9 * (tol / err) ** 0.2 if err > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))
    if t < T:
        raise IntegrationError(f"step budget exhausted at t = {t}", t=t)
    mon = {}
    if monitors:
        for name in monitors:
            mon[name] = np.array([s[name] for s in samples])
    return Trajectory(np.array(times), np.array(states), mon)


def expm_oracle(A: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring (test oracle)."""
    from scipy.linalg import expm

    return expm(A)


def fd_gradient_check(scalar_fn, state, step, analytic_grad) -> float:
    """Max |analytic - central-difference| over components of the gradient.

    The scalar function must be holomorphic in each component; the central
    difference uses a real step.
    """
    if not (1e-8 <= step <= 1e-4):
        raise DomainError("step must lie in [1e-8, 1e-4]")
    z = np.asarray(state, dtype=complex).reshape(-1)
    grad = np.asarray(analytic_grad, dtype=complex).reshape(-1)
    worst = 0.0
    for k in range(z.size):
        zp, zm = z.copy(), z.copy()
        zp[k] += step
        zm[k] -= step
        num = (scalar_fn(zp) - scalar_fn(zm)) / (2 * step)
        worst = max(worst, abs(num - grad[k]))
    return worst


class BranchTracker:
    """Continuously continued complex logarithms along a trajectory.

    Branches are fixed at the first sample and continued by nearest-branch
    selection; a jump above pi within one update raises BranchError.
    """

    def __init__(self):
        self._prev = None

    def logs(self, values: np.ndarray) -> np.ndarray:
        from .errors import BranchError

        raw = np.log(np.asarray(values, dtype=complex))
        if self._prev is None:
            self._prev = raw
            return raw
        k = np.round((self._prev.imag - raw.imag) / (2 * np.pi))
        cont = raw + 2j * np.pi * k
        if np.abs(cont - self._prev).max() > np.pi:
            raise BranchError("log branch moved by more than pi in one step")
        self._prev = cont
        return cont
