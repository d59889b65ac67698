"""The reflected random walk engine.

The reflected process satisfies W_n = max(W_{n-1} + X_n, g(n)) and, dually,
W_n = S_n + max_{0<=k<=n} (g(k) - S_k).  The running record
D_n = max_{0<=k<=n} (g(k) - S_k) is what estimator modules need at stopping
times, so trajectories store all derived sequences.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from reflectedwalk import barrier as barrier_mod
from reflectedwalk import model as model_mod
from reflectedwalk.errors import CapExceeded

DEFAULT_CAP = 10**8
_CHUNK = 4096


@dataclass(frozen=True)
class Trajectory:
    increments: np.ndarray  # X_1..X_n
    partial_sums: np.ndarray  # S_0..S_n
    reflected: np.ndarray  # W_0..W_n
    running_d: np.ndarray  # D_0..D_n
    log_likelihood_ratio: np.ndarray | None  # theta_star * S_k, when theta_star given


@dataclass(frozen=True)
class PassageRecord:
    tau: int
    s_at_tau: float
    w_at_tau: float
    d_at_tau: float
    overshoot: float


def reflect_step(w_prev: float, x: float, g_n: float) -> float:
    """One reflection step; a -inf barrier leaves the walk free."""
    return max(w_prev + x, g_n)


def barrier_values(b, n: int) -> np.ndarray:
    return np.array([barrier_mod.evaluate(b, k) for k in range(n + 1)])


def simulate_trajectory(model, b, horizon: int, rng, theta_star: float | None = None) -> Trajectory:
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    x = model_mod.sample(model, rng, horizon)
    s = np.concatenate(([0.0], np.cumsum(x)))
    g = barrier_values(b, horizon)
    w = np.empty(horizon + 1)
    w[0] = 0.0
    for n in range(1, horizon + 1):
        w[n] = max(w[n - 1] + x[n - 1], g[n])
    d = np.maximum.accumulate(g - s)
    llr = theta_star * s if theta_star is not None else None
    return Trajectory(x, s, w, d, llr)


def reflect_from_sums(partial_sums, b) -> np.ndarray:
    """Reflected path from the dual representation, without the recursion."""
    s = np.asarray(partial_sums, dtype=float)
    if s[0] != 0.0:
        raise ValueError("partial sums must start at 0")
    g = barrier_values(b, len(s) - 1)
    return s + np.maximum.accumulate(g - s)


def first_passage(model, b, u: float, rng, cap: int = DEFAULT_CAP) -> PassageRecord:
    """Run the reflection until W > u; intended for use under the tilted law.

    W is tracked through the dual form W_n = S_n + D_n, which keeps the
    running record available at the stopping time without a second pass.
    """
    if u < 0:
        raise ValueError("u must be >= 0")
    s = 0.0
    d = 0.0  # g(0) - S_0 = 0
    n = 0
    while n < cap:
        todo = min(_CHUNK, cap - n)
        xs = model_mod.sample(model, rng, todo)
        for x in xs:
            n += 1
            s += x
            gn = barrier_mod.evaluate(b, n)
            if gn - s > d:
                d = gn - s
            w = s + d
            if w > u:
                return PassageRecord(tau=n, s_at_tau=s, w_at_tau=w, d_at_tau=d, overshoot=w - u)
    raise CapExceeded(
        f"no passage above u={u} within cap={cap} steps; "
        "is the model tilted to positive drift?"
    )


def trajectory_rows(traj: Trajectory):
    """Rows (n, x, s, w, d) with x empty at n = 0."""
    yield (0, "", traj.partial_sums[0], traj.reflected[0], traj.running_d[0])
    for n in range(1, len(traj.partial_sums)):
        yield (
            n,
            traj.increments[n - 1],
            traj.partial_sums[n],
            traj.reflected[n],
            traj.running_d[n],
        )


def dump_trajectory_csv(traj: Trajectory, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(["n", "x", "s", "w", "d"])
    for row in trajectory_rows(traj):
        writer.writerow(row)
