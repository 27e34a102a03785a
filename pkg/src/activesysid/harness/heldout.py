"""Held-out transitions and trajectories for generalization checks.

Held-out data is generated from the true system with random bounded controls
from random feasible starts, on an rng stream derived from the seed alone,
so every condition of a seed is scored against the identical data (paired
comparison: differences in error are attributable to learning only).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteOutput
from ..estimation import GaussianBelief
from ..linalg import psd_factor
from ..rng import RngStream
from ..systems import SystemModel
from .config import HeldoutSpec

__all__ = ["HeldoutData", "gen_heldout", "evaluate_heldout"]


@dataclass
class HeldoutData:
    trans_x: np.ndarray  # (N, n_x)
    trans_u: np.ndarray  # (N, n_u)
    trans_x_next: np.ndarray  # (N, n_x)
    traj_states: np.ndarray  # (M, L+1, n_x), noisy true trajectories
    traj_controls: np.ndarray  # (M, L, n_u)


def _noise_batch(sys: SystemModel, rng: RngStream, count: int) -> np.ndarray:
    if not sys.state_noise.any():
        return np.zeros((count, sys.n_x))
    factor = psd_factor(sys.state_noise)
    return rng.normal(size=(count, sys.n_x)) @ factor.T


def gen_heldout(
    sys: SystemModel, theta_true: np.ndarray, spec: HeldoutSpec, rng: RngStream
) -> HeldoutData:
    n_tr, n_traj, length = spec.n_transitions, spec.n_trajectories, spec.traj_length

    trans_rng = rng.substream("transitions")
    xs = np.array([sys.sample_state(trans_rng) for _ in range(n_tr)]).reshape(n_tr, sys.n_x)
    us = np.array([sys.sample_control(trans_rng) for _ in range(n_tr)]).reshape(n_tr, sys.n_u)
    if n_tr:
        x_next = sys.step_batch(xs, us, theta_true) + _noise_batch(sys, trans_rng, n_tr)
    else:
        x_next = np.zeros((0, sys.n_x))

    traj_rng = rng.substream("trajectories")
    starts = np.array([sys.sample_state(traj_rng) for _ in range(n_traj)]).reshape(
        n_traj, sys.n_x
    )
    controls = np.zeros((n_traj, length, sys.n_u))
    states = np.zeros((n_traj, length + 1, sys.n_x))
    if n_traj:
        states[:, 0] = starts
        for k in range(length):
            controls[:, k] = np.array(
                [sys.sample_control(traj_rng) for _ in range(n_traj)]
            ).reshape(n_traj, sys.n_u)
            states[:, k + 1] = sys.step_batch(
                states[:, k], controls[:, k], theta_true
            ) + _noise_batch(sys, traj_rng, n_traj)
    return HeldoutData(xs, us, x_next, states, controls)


def evaluate_heldout(
    belief: GaussianBelief, sys: SystemModel, heldout: HeldoutData
) -> dict[str, float]:
    """Prediction errors of the belief mean on the held-out data.

    single_step_err: mean ||x' - f(x, u, theta_bar)|| over transitions.
    autoregressive_err: mean over trajectories of the summed state error of
    a noise-free rollout under theta_bar from the true start with the
    recorded controls. A diverging rollout scores +inf and is flagged.
    """
    theta_bar = belief.mean
    out: dict[str, float] = {}
    diverged = False

    if heldout.trans_x.shape[0]:
        try:
            with np.errstate(all="ignore"):
                pred = sys.step_batch(heldout.trans_x, heldout.trans_u, theta_bar)
            err = np.linalg.norm(heldout.trans_x_next - pred, axis=1)
        except NonFiniteOutput:
            err = np.array([np.inf])
        if np.all(np.isfinite(err)):
            out["single_step_err"] = float(np.mean(err))
        else:
            out["single_step_err"] = float("inf")
            diverged = True
    else:
        out["single_step_err"] = float("nan")

    n_traj = heldout.traj_states.shape[0]
    if n_traj:
        length = heldout.traj_controls.shape[1]
        pred = heldout.traj_states[:, 0].copy()
        totals = np.zeros(n_traj)
        try:
            with np.errstate(all="ignore"):
                for k in range(length):
                    pred = sys.step_batch(pred, heldout.traj_controls[:, k], theta_bar)
                    totals += np.linalg.norm(heldout.traj_states[:, k + 1] - pred, axis=1)
        except NonFiniteOutput:
            totals = np.array([np.inf])
        if np.all(np.isfinite(totals)):
            out["autoregressive_err"] = float(np.mean(totals))
        else:
            out["autoregressive_err"] = float("inf")
            diverged = True
    else:
        out["autoregressive_err"] = float("nan")

    out["diverged"] = diverged
    return out
