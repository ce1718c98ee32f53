"""Transmission-problem controllers: value-iteration DP and the learning loop.

The buffer-emptying task is solved as an undiscounted maximization of step
rewards (-1 per step while data remains, -o on entering an enlarged
obstacle, 0 once empty).  ``dp_full`` runs synchronous backups over the
whole grid for a known rate function; the learning controller interleaves
rate sampling, LLR updates, and a few local backup sweeps around the
current state, acting greedily on the interpolated value function.

Grid convention: axes are (x, y, buffer); the buffer axis is last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .episode import EpisodeLog
from .gridfn import Subgrid, ValueGrid, interpolate, select_subgrid
from .llr import LlrConfig, SampleStore, estimate
from .world import (
    Action,
    Obstacle,
    RobotState,
    Scenario,
    buffer_step,
    in_obstacle,
    motion_step,
    sample_rate,
)


class ModelError(ValueError):
    """Raised when a rate function feeds non-finite values into the backups."""


@dataclass
class DpConfig:
    """Tuning for the DP backups and the learning sweeps.

    ``rate_max`` (if known) enables the optimistic initialization; ``rate_min``
    (if known) sets the model-based iteration cap 10 * ceil(b_max/(Ts*R_min)).
    ``literal_init`` switches the optimistic values to the uncorrected
    -b/rate_max form for comparison runs (the default divides by Ts*rate_max,
    the actual per-step drain, which is the tightest optimistic bound).
    """

    r_dp: int = 4
    l_dp: int = 10
    epsilon: float = 1e-6
    rate_max: float | None = None
    rate_min: float | None = None
    max_iter: int | None = None
    literal_init: bool = False
    sensed_obstacles: bool = False

    def iteration_cap(self, scenario: Scenario) -> int:
        if self.max_iter is not None:
            return self.max_iter
        if self.rate_min is not None and self.rate_min > 0:
            return 10 * math.ceil(scenario.buffer_max / (scenario.sampling_period * self.rate_min))
        return 2000


def make_grid(scenario: Scenario, shape: tuple[int, int, int] = (31, 31, 31)) -> ValueGrid:
    """Uniform (x, y, buffer) value grid spanning the scenario's state box."""
    return ValueGrid.zeros(
        (
            np.linspace(scenario.domain[0, 0], scenario.domain[0, 1], shape[0]),
            np.linspace(scenario.domain[1, 0], scenario.domain[1, 1], shape[1]),
            np.linspace(0.0, scenario.buffer_max, shape[2]),
        )
    )


def reward(state: RobotState, next_state: RobotState, scenario: Scenario,
           obstacles: tuple[Obstacle, ...] | None = None) -> float:
    """Stage reward of the transition: obstacle penalty, else -1 until empty."""
    obs = scenario.obstacles if obstacles is None else obstacles
    if any(o.contains(next_state.position) for o in obs):
        return -scenario.obstacle_penalty
    return -1.0 if state.buffer > 0 else 0.0


def optimistic_init(grid: ValueGrid, scenario: Scenario, config: DpConfig) -> np.ndarray:
    """Initial parameters at or above the optimal values.

    With a known maximal rate, each grid point starts at minus the number of
    steps needed to drain its buffer coordinate at that rate; otherwise zero
    (also optimistic, since all rewards are nonpositive).
    """
    if config.rate_max is None:
        return np.zeros(grid.shape)
    divisor = config.rate_max if config.literal_init else scenario.sampling_period * config.rate_max
    b_axis = grid.axes[-1]
    theta = np.zeros(grid.shape)
    theta[...] = -b_axis / divisor
    return theta


def true_rate_fn(scenario: Scenario):
    """Deterministic rate field of the scenario (fading factor 1)."""

    def fn(points: np.ndarray) -> np.ndarray:
        return np.asarray(scenario.rate_model.rate(points), dtype=float)

    return fn


def llr_rate_fn(store: SampleStore, config: LlrConfig):
    """Rate estimate from the sample memory, evaluated pointwise."""

    def fn(points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.array([estimate(store, p, config) for p in pts])

    return fn


def _obstacle_mask(obstacles, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Boolean (len(xs), len(ys)) mask of positions inside any enlarged obstacle."""
    mask = np.zeros((xs.size, ys.size), dtype=bool)
    for o in obstacles:
        hx, hy = o.half_extents(enlarged=True)
        in_x = np.abs(xs - o.center[0]) <= hx
        in_y = np.abs(ys - o.center[1]) <= hy
        mask |= np.outer(in_x, in_y)
    return mask


def _locate(axis: np.ndarray, q: np.ndarray):
    if axis.size == 1:
        z = np.zeros(q.shape, dtype=int)
        return z, np.zeros(q.shape)
    qc = np.clip(q, axis[0], axis[-1])
    idx = np.clip(np.searchsorted(axis, qc, side="right") - 1, 0, axis.size - 2)
    frac = (qc - axis[idx]) / (axis[idx + 1] - axis[idx])
    return idx, frac


def _backup_block(
    grid: ValueGrid,
    theta: np.ndarray,
    subgrid: Subgrid,
    scenario: Scenario,
    rate_block: np.ndarray,
    obstacles,
    pinned_block: np.ndarray,
) -> np.ndarray:
    """One synchronous backup over the subgrid block; returns the new theta.

    Every grid point in the block takes the max over actions of the stage
    reward plus the interpolated value at the successor state.  Points whose
    position lies inside an obstacle are pinned (their parameters keep the
    values they had) because their backups have no fixed point under the
    recurring obstacle penalty.
    """
    xs_axis, ys_axis, bs_axis = grid.axes
    sx, sy, sb = subgrid.slices()
    xs, ys, bs = xs_axis[sx], ys_axis[sy], bs_axis[sb]
    ts = scenario.sampling_period
    lo, hi = scenario.domain[:, 0], scenario.domain[:, 1]

    bp = np.maximum(0.0, bs[None, None, :] - ts * rate_block[:, :, None])
    ib, wb = _locate(bs_axis, bp)
    rho_free = np.where(bs > 0.0, -1.0, 0.0)[None, None, :]

    best = np.full((xs.size, ys.size, bs.size), -np.inf)
    for a in scenario.actions:
        dx = ts * a.velocity * math.cos(a.heading)
        dy = ts * a.velocity * math.sin(a.heading)
        xp = np.clip(xs + dx, lo[0], hi[0])
        yp = np.clip(ys + dy, lo[1], hi[1])
        ix, wx = _locate(xs_axis, xp)
        iy, wy = _locate(ys_axis, yp)

        value = np.zeros((xs.size, ys.size, bs.size))
        for cx in (0, 1):
            fx = (wx if cx else 1.0 - wx)[:, None, None]
            gx = ix + cx
            for cy in (0, 1):
                fxy = fx * (wy if cy else 1.0 - wy)[None, :, None]
                gy = iy + cy
                for cb in (0, 1):
                    w = fxy * (wb if cb else 1.0 - wb)
                    value += w * theta[gx[:, None, None], gy[None, :, None], ib + cb]

        hit = _obstacle_mask(obstacles, xp, yp)[:, :, None]
        cand = np.where(hit, -scenario.obstacle_penalty, rho_free) + value
        np.maximum(best, cand, out=best)

    new_theta = theta.copy()
    block = np.where(pinned_block, theta[sx, sy, sb], best)
    new_theta[sx, sy, sb] = block
    return new_theta


def _full_subgrid(grid: ValueGrid) -> Subgrid:
    return Subgrid(lo=(0, 0, 0), hi=tuple(n - 1 for n in grid.shape))


def _rates_at(grid: ValueGrid, subgrid: Subgrid, rate_fn) -> np.ndarray:
    sx, sy, _ = subgrid.slices()
    xs, ys = grid.axes[0][sx], grid.axes[1][sy]
    pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    rates = np.asarray(rate_fn(pts), dtype=float).reshape(xs.size, ys.size)
    if not np.all(np.isfinite(rates)):
        raise ModelError("rate function produced non-finite values on the grid")
    if np.any(rates < 0):
        raise ModelError("rate function produced negative values on the grid")
    return rates


def _pinned_block(grid: ValueGrid, subgrid: Subgrid, obstacles) -> np.ndarray:
    sx, sy, sb = subgrid.slices()
    xs, ys = grid.axes[0][sx], grid.axes[1][sy]
    nb = grid.axes[2][sb].size
    return np.repeat(_obstacle_mask(obstacles, xs, ys)[:, :, None], nb, axis=2)


def dp_full(grid: ValueGrid, scenario: Scenario, rate_fn, config: DpConfig,
            theta0: np.ndarray | None = None) -> np.ndarray:
    """Value iteration over the whole grid until the sup-norm change is small.

    Convergence is measured over non-pinned points (see ``_backup_block``);
    stops after ``config.iteration_cap`` sweeps regardless.
    """
    sub = _full_subgrid(grid)
    rates = _rates_at(grid, sub, rate_fn)
    pinned = _pinned_block(grid, sub, scenario.obstacles)
    theta = (optimistic_init(grid, scenario, config) if theta0 is None else theta0).copy()
    for _ in range(config.iteration_cap(scenario)):
        new = _backup_block(grid, theta, sub, scenario, rates, scenario.obstacles, pinned)
        delta = np.max(np.abs(new - theta)[~pinned]) if np.any(~pinned) else 0.0
        theta = new
        if delta <= config.epsilon:
            break
    return theta


def dp_sweep_local(
    grid: ValueGrid,
    subgrid: Subgrid,
    scenario: Scenario,
    rate_fn,
    l_dp: int,
    theta: np.ndarray,
    obstacles=None,
) -> np.ndarray:
    """Apply ``l_dp`` synchronous backups restricted to the subgrid points.

    Parameters outside the subgrid are returned untouched.  With the
    full-grid subgrid and matching iteration counts this reproduces
    ``dp_full`` exactly.
    """
    obstacles = scenario.obstacles if obstacles is None else obstacles
    if l_dp <= 0:
        return theta.copy()
    rates = _rates_at(grid, subgrid, rate_fn)
    pinned = _pinned_block(grid, subgrid, obstacles)
    out = theta.copy()
    for _ in range(l_dp):
        out = _backup_block(grid, out, subgrid, scenario, rates, obstacles, pinned)
    return out


def greedy_action(
    grid: ValueGrid,
    theta: np.ndarray,
    state: RobotState,
    rate_for_decision: float,
    scenario: Scenario,
    obstacles=None,
) -> Action:
    """One-step lookahead policy; ties keep the first action in the set order."""
    obs = scenario.obstacles if obstacles is None else obstacles
    vgrid = ValueGrid(axes=grid.axes, theta=theta)
    b_next = buffer_step(state.buffer, rate_for_decision, scenario.sampling_period)
    best_action, best_value = None, -np.inf
    for a in scenario.actions:
        nxt = motion_step(state, a, scenario, check_action=False)
        if any(o.contains(nxt.position) for o in obs):
            rho = -scenario.obstacle_penalty
        else:
            rho = -1.0 if state.buffer > 0 else 0.0
        v = rho + interpolate(vgrid, [nxt.position[0], nxt.position[1], b_next])
        if v > best_value:
            best_action, best_value = a, v
    return best_action


def _sensed_obstacles(grid: ValueGrid, subgrid: Subgrid, scenario: Scenario):
    """Obstacles intersecting the subgrid's one-step reachable box."""
    sx, sy, _ = subgrid.slices()
    xs, ys = grid.axes[0][sx], grid.axes[1][sy]
    reach = scenario.sampling_period * scenario.max_speed
    x0, x1 = xs[0] - reach, xs[-1] + reach
    y0, y1 = ys[0] - reach, ys[-1] + reach
    sensed = []
    for o in scenario.obstacles:
        hx, hy = o.half_extents(enlarged=True)
        if o.center[0] + hx >= x0 and o.center[0] - hx <= x1 and \
           o.center[1] + hy >= y0 and o.center[1] - hy <= y1:
            sensed.append(o)
    return tuple(sensed)


def run_pt_episode(
    scenario: Scenario,
    grid: ValueGrid,
    config: DpConfig,
    llr_config: LlrConfig | None = None,
    seed: int = 0,
) -> EpisodeLog:
    """Run one buffer-emptying episode.

    With ``llr_config`` set, this is the learning loop: sample the rate at
    the current position, memorize it, run ``l_dp`` local backups around the
    current state using the LLR estimate, then act greedily using the
    measured rate.  Without it, the model-based variant: one converged
    ``dp_full`` with the true rates, then the greedy rollout.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    log = EpisodeLog(seed=seed)
    learning = llr_config is not None
    if learning:
        store = SampleStore(dedupe_tol=llr_config.dedupe_tol)
        rate_fn = llr_rate_fn(store, llr_config)
        theta = optimistic_init(grid, scenario, config)
    else:
        theta = dp_full(grid, scenario, true_rate_fn(scenario), config)

    state = scenario.initial_state
    while log.steps < scenario.max_steps:
        if state.buffer <= 0.0:
            log.emptied = True
            break
        z = scenario.fading.draw(rng)
        r_k = sample_rate(scenario, state.position, z)
        obstacles = scenario.obstacles
        if learning:
            store.add(state.position, r_k)
            sub = select_subgrid(grid, [state.position[0], state.position[1], state.buffer],
                                 config.r_dp)
            if config.sensed_obstacles:
                obstacles = _sensed_obstacles(grid, sub, scenario)
            theta = dp_sweep_local(grid, sub, scenario, rate_fn, config.l_dp, theta, obstacles)
        action = greedy_action(grid, theta, state, r_k, scenario, obstacles)
        nxt = motion_step(state, action, scenario)
        rho = reward(state, nxt, scenario)
        if in_obstacle(nxt.position, scenario):
            log.collided = True
        log.append(
            position=state.position.copy(),
            buffer=state.buffer,
            rate=r_k,
            velocity=action.velocity,
            heading=action.heading,
            reward=rho,
            estimator_digest=len(store) if learning else 0,
        )
        state = RobotState(
            position=nxt.position,
            buffer=buffer_step(state.buffer, r_k, scenario.sampling_period),
            extra=state.extra,
        )
    else:
        log.capped = state.buffer > 0.0
        log.emptied = not log.capped
    log.final_position = state.position.copy()
    log.final_buffer = state.buffer
    return log


def evaluate_return(log: EpisodeLog) -> float:
    """Undiscounted sum of the episode's step rewards."""
    return log.total_reward()
