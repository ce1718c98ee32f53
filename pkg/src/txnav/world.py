"""Scenario definitions: robot motion, buffer dynamics, radio channel, obstacles.

A :class:`Scenario` bundles everything a controller may consume: the
rectangular position domain, the sampling period, a finite action set, a
rate model (parametric path-loss antennas or a tabulated SNR map), an
optional Rician fading model, rectangular obstacles, and the initial state.
Scenario objects are immutable after construction and safe to share between
episodes; all episode randomness lives in per-episode RNG streams.

Units: positions in meters, time in seconds, buffer in Mbit, rates in Mbit/s.

Scenario files are JSON documents; see :func:`scenario_from_dict` for the
schema and ``txnav/scenarios/*.json`` for the shipped examples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy import integrate, special


class InvalidActionError(ValueError):
    """Raised when a motion step is asked for an action outside the action set."""


class ConfigError(ValueError):
    """Raised for malformed scenario or experiment descriptions."""


@dataclass(frozen=True)
class Action:
    """One element of the discrete action set: speed (m/s) and heading (rad)."""

    velocity: float
    heading: float


@dataclass(frozen=True)
class RobotState:
    position: np.ndarray  # shape (2,)
    buffer: float
    extra: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "extra", np.asarray(self.extra, dtype=float))


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned rectangle with an enlarged safety version.

    ``orientation`` is "horizontal" (length along x) or "vertical" (length
    along y).  Membership tests use the enlarged rectangle as a closed set;
    the enlargement absorbs mid-step corner cutting.
    """

    center: np.ndarray
    length: float
    width: float
    orientation: str
    enlarged_length: float
    enlarged_width: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.orientation not in ("horizontal", "vertical"):
            raise ConfigError(f"unknown obstacle orientation: {self.orientation!r}")
        if self.enlarged_length < self.length or self.enlarged_width < self.width:
            raise ConfigError("enlarged obstacle dimensions must cover the nominal ones")

    def half_extents(self, enlarged: bool = True) -> tuple[float, float]:
        length = self.enlarged_length if enlarged else self.length
        width = self.enlarged_width if enlarged else self.width
        if self.orientation == "horizontal":
            return length / 2.0, width / 2.0
        return width / 2.0, length / 2.0

    def contains(self, position: np.ndarray, enlarged: bool = True) -> bool:
        hx, hy = self.half_extents(enlarged)
        dx = abs(position[0] - self.center[0])
        dy = abs(position[1] - self.center[1])
        return dx <= hx and dy <= hy


@dataclass(frozen=True)
class Antenna:
    """One path-loss transmitter: rate contribution R0*log2(1 + z*K/(d+h)^gamma)."""

    position: np.ndarray
    K: float
    h: float
    gamma: float
    R0: float

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if min(self.K, self.h, self.gamma, self.R0) <= 0:
            raise ConfigError("antenna parameters K, h, gamma, R0 must be positive")

    def snr(self, positions: np.ndarray) -> np.ndarray:
        p = np.asarray(positions, dtype=float)
        d = np.linalg.norm(p - self.position, axis=-1)
        return self.K / (d + self.h) ** self.gamma

    def rate(self, positions: np.ndarray, z: float = 1.0) -> np.ndarray:
        return self.R0 * np.log2(1.0 + z * self.snr(positions))


@dataclass(frozen=True)
class ParametricRateModel:
    """Sum of per-antenna path-loss rates (variant used in every simulation scenario)."""

    antennas: tuple[Antenna, ...]

    def rate(self, positions, z: float = 1.0):
        return sum(a.rate(positions, z) for a in self.antennas)

    def snr(self, positions):
        """Total SNR; with a single antenna this is the quantity a receiver reports."""
        return sum(a.snr(positions) for a in self.antennas)


@dataclass(frozen=True)
class TabulatedRateModel:
    """SNR measured on a rectangular grid, interpolated bilinearly.

    Queries outside the grid clamp to the nearest edge cell.  The rate law is
    the same log form as the parametric model, applied to the interpolated SNR.
    """

    x_axis: np.ndarray
    y_axis: np.ndarray
    snr_values: np.ndarray  # shape (len(x_axis), len(y_axis))
    R0: float

    def __post_init__(self):
        object.__setattr__(self, "x_axis", np.asarray(self.x_axis, dtype=float))
        object.__setattr__(self, "y_axis", np.asarray(self.y_axis, dtype=float))
        object.__setattr__(self, "snr_values", np.asarray(self.snr_values, dtype=float))
        if self.snr_values.shape != (self.x_axis.size, self.y_axis.size):
            raise ConfigError("SNR table shape must match the grid axes")

    def _interp_1d(self, axis: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        q = np.clip(q, axis[0], axis[-1])
        idx = np.clip(np.searchsorted(axis, q, side="right") - 1, 0, axis.size - 2)
        frac = (q - axis[idx]) / (axis[idx + 1] - axis[idx])
        return idx, frac

    def snr(self, positions):
        p = np.asarray(positions, dtype=float)
        scalar = p.ndim == 1
        p = np.atleast_2d(p)
        ix, fx = self._interp_1d(self.x_axis, p[:, 0])
        iy, fy = self._interp_1d(self.y_axis, p[:, 1])
        v = (
            self.snr_values[ix, iy] * (1 - fx) * (1 - fy)
            + self.snr_values[ix + 1, iy] * fx * (1 - fy)
            + self.snr_values[ix, iy + 1] * (1 - fx) * fy
            + self.snr_values[ix + 1, iy + 1] * fx * fy
        )
        return v[0] if scalar else v

    def rate(self, positions, z: float = 1.0):
        return self.R0 * np.log2(1.0 + z * self.snr(positions))


RateModel = Union[ParametricRateModel, TabulatedRateModel]


def compute_Ez(v: float) -> float:
    """Mean of the Rice distribution with noncentrality ``v`` and unit scale.

    Evaluated by quadrature of x * f(x) with the density written in the
    overflow-safe form f(x) = x * exp(-(x - v)^2 / 2) * i0e(x * v), so the
    result is accurate for any v >= 0 (relative error well below 1e-8).
    """
    if v < 0:
        raise ValueError("Rice noncentrality v must be nonnegative")

    def integrand(x):
        return x * x * np.exp(-0.5 * (x - v) ** 2) * special.i0e(x * v)

    lo = max(0.0, v - 40.0)
    hi = v + 40.0
    val, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)
    return float(val)


@dataclass(frozen=True)
class FadingModel:
    """Multiplicative Rician channel fluctuation with unit mean.

    A draw is norm([g1 + v, g2]) / E_z with g1, g2 standard normal; E_z is
    the Rice mean, so E[z] = 1 by construction.  ``enabled=False`` means
    z is identically 1.
    """

    enabled: bool = False
    v: float = 15.0
    Ez: float = 1.0

    @staticmethod
    def create(enabled: bool, v: float = 15.0) -> "FadingModel":
        return FadingModel(enabled=enabled, v=v, Ez=compute_Ez(v) if enabled else 1.0)

    def draw(self, rng: np.random.Generator) -> float:
        if not self.enabled:
            return 1.0
        g = rng.standard_normal(2)
        return float(math.hypot(g[0] + self.v, g[1]) / self.Ez)


@dataclass(frozen=True)
class Scenario:
    name: str
    domain: np.ndarray  # shape (2, 2): [[x_lo, x_hi], [y_lo, y_hi]]
    sampling_period: float
    dynamics: str  # "unicycle" or "integrator"
    actions: tuple[Action, ...]
    rate_model: RateModel
    fading: FadingModel
    obstacles: tuple[Obstacle, ...]
    obstacle_penalty: float
    buffer_max: float
    initial_state: RobotState
    goal: np.ndarray | None = None
    max_steps: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "domain", np.asarray(self.domain, dtype=float))
        if self.goal is not None:
            object.__setattr__(self, "goal", np.asarray(self.goal, dtype=float))
        if self.sampling_period <= 0:
            raise ConfigError("sampling period must be positive")
        if self.obstacle_penalty <= 0:
            raise ConfigError("obstacle penalty must be positive")
        if self.dynamics not in ("unicycle", "integrator"):
            raise ConfigError(f"unknown dynamics kind: {self.dynamics!r}")
        if self.initial_state.buffer > self.buffer_max:
            raise ConfigError("initial buffer exceeds the buffer cap")

    @property
    def max_speed(self) -> float:
        return max(a.velocity for a in self.actions)

    def clamp(self, position: np.ndarray) -> np.ndarray:
        return np.clip(position, self.domain[:, 0], self.domain[:, 1])

    def with_initial(self, position=None, buffer=None) -> "Scenario":
        s = self.initial_state
        new = RobotState(
            position=s.position if position is None else np.asarray(position, float),
            buffer=s.buffer if buffer is None else float(buffer),
            extra=s.extra,
        )
        return replace(self, initial_state=new)

    def with_fading(self, enabled: bool, v: float | None = None) -> "Scenario":
        v_eff = self.fading.v if v is None else float(v)
        return replace(self, fading=FadingModel.create(enabled, v_eff))


def _action_matches(a: Action, b: Action, tol: float = 1e-9) -> bool:
    return abs(a.velocity - b.velocity) <= tol and abs(a.heading - b.heading) <= tol


def motion_step(
    state: RobotState, action: Action, scenario: Scenario, check_action: bool = True
) -> RobotState:
    """Advance position one sampling period; buffer is untouched here.

    Both dynamics kinds are first order in position, p' = p + Ts*v*(cos h, sin h),
    saturated componentwise to the domain.  ``check_action=False`` skips the
    action-set membership test (used by controllers that steer continuously).
    """
    if check_action and not any(_action_matches(action, u) for u in scenario.actions):
        raise InvalidActionError(f"action {action} is not in the scenario action set")
    ts = scenario.sampling_period
    delta = ts * action.velocity * np.array([math.cos(action.heading), math.sin(action.heading)])
    new_pos = scenario.clamp(state.position + delta)
    return RobotState(position=new_pos, buffer=state.buffer, extra=state.extra)


def sample_rate(scenario: Scenario, position: np.ndarray, fading_draw: float = 1.0) -> float:
    """Instantaneous rate at ``position`` for the given fading realization."""
    if fading_draw <= 0:
        raise ValueError("fading draw must be positive")
    return float(scenario.rate_model.rate(np.asarray(position, dtype=float), z=fading_draw))


def measure_snr(scenario: Scenario, position: np.ndarray, fading_draw: float = 1.0) -> float:
    """Faded SNR reading z * S(p), as reported by the receiver hardware."""
    return float(fading_draw * scenario.rate_model.snr(np.asarray(position, dtype=float)))


def buffer_step(buffer: float, rate: float, sampling_period: float) -> float:
    """Drain the buffer for one period, floored at zero."""
    return max(0.0, buffer - sampling_period * rate)


def in_obstacle(position: np.ndarray, scenario: Scenario) -> bool:
    """True iff the position is inside any enlarged obstacle (closed rectangles)."""
    p = np.asarray(position, dtype=float)
    return any(o.contains(p, enlarged=True) for o in scenario.obstacles)


# ---------------------------------------------------------------------------
# Scenario (de)serialization
# ---------------------------------------------------------------------------

def _actions_from_dict(spec: dict) -> tuple[Action, ...]:
    if "explicit" in spec:
        return tuple(Action(velocity=float(v), heading=float(h)) for v, h in spec["explicit"])
    n = int(spec["headings"])
    speed = float(spec["speed"])
    offset = float(spec.get("heading_offset", 0.0))
    acts = [Action(velocity=speed, heading=(offset + 2.0 * math.pi * i / n) % (2.0 * math.pi)) for i in range(n)]
    if spec.get("stop", True):
        acts.append(Action(velocity=0.0, heading=0.0))
    return tuple(acts)


def scenario_from_dict(doc: dict) -> Scenario:
    """Build a scenario from its JSON document.

    Expected keys: name, domain [[x_lo,x_hi],[y_lo,y_hi]], sampling_period,
    dynamics ("unicycle"|"integrator"), actions ({"speed","headings","stop"}
    or {"explicit": [[v,h],...]}), rate_model (variant "parametric" with an
    antenna list, or "tabulated" with x_axis/y_axis/snr/R0), fading
    ({"enabled","v"}), obstacles (list; may be empty), obstacle_penalty,
    buffer_max, initial_state ({"position","buffer"}), goal (or null),
    max_steps.
    """
    try:
        rm = doc["rate_model"]
        if rm["variant"] == "parametric":
            model: RateModel = ParametricRateModel(
                antennas=tuple(
                    Antenna(
                        position=np.asarray(a["position"], float),
                        K=float(a["K"]),
                        h=float(a["h"]),
                        gamma=float(a["gamma"]),
                        R0=float(a["R0"]),
                    )
                    for a in rm["antennas"]
                )
            )
        elif rm["variant"] == "tabulated":
            model = TabulatedRateModel(
                x_axis=np.asarray(rm["x_axis"], float),
                y_axis=np.asarray(rm["y_axis"], float),
                snr_values=np.asarray(rm["snr"], float),
                R0=float(rm["R0"]),
            )
        else:
            raise ConfigError(f"unknown rate model variant: {rm['variant']!r}")
        fad = doc.get("fading", {})
        obstacles = tuple(
            Obstacle(
                center=np.asarray(o["center"], float),
                length=float(o["length"]),
                width=float(o["width"]),
                orientation=o["orientation"],
                enlarged_length=float(o["enlarged_length"]),
                enlarged_width=float(o["enlarged_width"]),
            )
            for o in doc.get("obstacles", [])
        )
        init = doc["initial_state"]
        return Scenario(
            name=doc["name"],
            domain=np.asarray(doc["domain"], float),
            sampling_period=float(doc["sampling_period"]),
            dynamics=doc["dynamics"],
            actions=_actions_from_dict(doc["actions"]),
            rate_model=model,
            fading=FadingModel.create(bool(fad.get("enabled", False)), float(fad.get("v", 15.0))),
            obstacles=obstacles,
            obstacle_penalty=float(doc["obstacle_penalty"]),
            buffer_max=float(doc["buffer_max"]),
            initial_state=RobotState(
                position=np.asarray(init["position"], float), buffer=float(init["buffer"])
            ),
            goal=None if doc.get("goal") is None else np.asarray(doc["goal"], float),
            max_steps=int(doc.get("max_steps", 1000)),
        )
    except KeyError as exc:
        raise ConfigError(f"scenario document is missing field {exc}") from exc


def builtin_scenario_names() -> list[str]:
    files = resources.files("txnav").joinpath("scenarios")
    return sorted(p.name[: -len(".json")] for p in files.iterdir() if p.name.endswith(".json"))


def load_scenario(name_or_path: str | Path) -> Scenario:
    """Load a scenario by built-in name (e.g. "pt-two-antenna") or file path."""
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        doc = json.loads(path.read_text(encoding="utf-8"))
    else:
        res = resources.files("txnav").joinpath(f"scenarios/{name_or_path}.json")
        try:
            doc = json.loads(res.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(
                f"unknown scenario {name_or_path!r}; built-ins: {builtin_scenario_names()}"
            ) from None
    return scenario_from_dict(doc)
