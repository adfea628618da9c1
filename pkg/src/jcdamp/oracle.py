"""Brute-force numerical ground truth: fixed-step RK4 integration of the
full joint equation of motion and of the decoupled component equations
on the truncated Fock space.

Fixed-step RK4 is used (rather than an adaptive solver) so runs are
deterministic and reproducible as regression baselines.  The step bound
is derived from the spectral-radius estimate gamma * n_trunc of the
damping term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fock import ModelParams, annihilation
from .model import (
    SIGMA_X,
    hamiltonian_full,
    joint_annihilation,
    joint_tail_weight,
)
from .fock import tail_weight as field_tail_weight

STEP_SAFETY = 0.1
TAIL_LIMIT = 1e-6


class StepTooLarge(RuntimeError):
    """The RK4 step violates the stability bound."""


class TailOverflow(RuntimeError):
    """Truncation-boundary population exceeded the allowed budget."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid with n_steps integrator steps."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    def times(self) -> np.ndarray:
        return self.t_start + self.step * np.arange(self.n_steps + 1)


@dataclass
class Trajectory:
    """Stored integration output: states at a subset of grid times."""

    times: np.ndarray
    states: list = field(default_factory=list)
    tail_weights: np.ndarray = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def state_at(self, t: float) -> np.ndarray:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-9:
            raise KeyError(f"time {t} not on the stored grid")
        return self.states[idx]


def require_step(params: ModelParams, h: float) -> None:
    """Enforce h * max(|omega|, |coupling|, gamma, gamma*N) <= 0.1."""
    scale = max(abs(params.omega), abs(params.coupling), params.gamma,
                params.gamma * params.n_trunc)
    if h * scale > STEP_SAFETY * (1.0 + 1e-12):
        raise StepTooLarge(
            f"step {h:.3e} violates h * {scale:.3e} <= {STEP_SAFETY}"
        )


def _rk4(rhs: Callable, y0: np.ndarray, grid: TimeGrid,
         tail_of: Callable[[np.ndarray], float],
         store_every: int = 1) -> Trajectory:
    h = grid.step
    y = y0.astype(complex).copy()
    stored_t = [grid.t_start]
    states = [y.copy()]
    tails = [tail_of(y)]
    if tails[0] > TAIL_LIMIT:
        raise TailOverflow(f"initial tail weight {tails[0]:.3e} > {TAIL_LIMIT}")
    t = grid.t_start
    for k in range(1, grid.n_steps + 1):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1)
        k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = grid.t_start + k * h
        w = tail_of(y)
        if w > TAIL_LIMIT:
            raise TailOverflow(f"tail weight {w:.3e} > {TAIL_LIMIT} at t={t:.6g}")
        if k % store_every == 0 or k == grid.n_steps:
            stored_t.append(t)
            states.append(y.copy())
            tails.append(w)
    return Trajectory(times=np.array(stored_t), states=states,
                      tail_weights=np.array(tails))


def _damping_closure(gamma: float, a: np.ndarray):
    ad = a.conj().T
    n_op = ad @ a

    def damp(y: np.ndarray) -> np.ndarray:
        return 0.5 * gamma * (2.0 * a @ y @ ad - n_op @ y - y @ n_op)

    return damp


def integrate_joint(rho0: np.ndarray, params: ModelParams, grid: TimeGrid,
                    picture: str = "schrodinger", store_every: int = 1) -> Trajectory:
    """RK4 integration of the joint 2N x 2N equation of motion.

    picture "schrodinger" uses the lab-frame generator; "rotational"
    uses the rotating-frame generator with its explicit time dependence.
    """
    n = params.n_trunc
    if rho0.shape != (2 * n, 2 * n):
        raise ValueError(f"initial state has shape {rho0.shape}, expected {(2 * n, 2 * n)}")
    require_step(params, grid.step)
    a_joint = joint_annihilation(n)
    damp = _damping_closure(params.gamma, a_joint)
    if picture == "schrodinger":
        h = hamiltonian_full(params)

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            return -1j * (h @ y - y @ h) + damp(y)

    elif picture == "rotational":
        a = annihilation(n)
        raise_half = params.coupling * np.kron(SIGMA_X, a.conj().T)
        lower_half = params.coupling * np.kron(SIGMA_X, a)

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            h_t = raise_half * np.exp(1j * params.omega * t) \
                + lower_half * np.exp(-1j * params.omega * t)
            return -1j * (h_t @ y - y @ h_t) + damp(y)

    else:
        raise ValueError(f"unknown picture {picture!r}")
    return _rk4(rhs, rho0, grid, joint_tail_weight, store_every)


def integrate_component(kind: str, op0: np.ndarray, params: ModelParams,
                        grid: TimeGrid, store_every: int = 1) -> Trajectory:
    """RK4 integration of one decoupled component (rotating frame).

    kind is "plus", "minus" or "cross".
    """
    n = params.n_trunc
    if op0.shape != (n, n):
        raise ValueError(f"initial operator has shape {op0.shape}, expected {(n, n)}")
    if kind not in ("plus", "minus", "cross"):
        raise ValueError(f"unknown component kind {kind!r}")
    require_step(params, grid.step)
    a = annihilation(n)
    ad = a.conj().T
    damp = _damping_closure(params.gamma, a)
    front = {"plus": -1j, "minus": 1j, "cross": -1j}[kind] * params.coupling
    comm_sign = -1.0 if kind != "cross" else 1.0

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        x = ad * np.exp(1j * params.omega * t) + a * np.exp(-1j * params.omega * t)
        return front * (x @ y + comm_sign * y @ x) + damp(y)

    def tail_of(mat: np.ndarray) -> float:
        return abs(field_tail_weight(mat))

    return _rk4(rhs, op0, grid, tail_of, store_every)
