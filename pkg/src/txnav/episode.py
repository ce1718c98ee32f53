"""Episode logging shared by every controller, plus its CSV serialization.

One row per executed step: the state at step k, the rate sample observed
there, the applied action, and the resulting reward.  CSV files carry a
fixed 8-column schema (k, p1, p2, b, r, u_v, u_h, reward), 9 significant
digits, UTF-8, LF line endings, so identical runs serialize byte-identically.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_COLUMNS = ("k", "p1", "p2", "b", "r", "u_v", "u_h", "reward")


@dataclass
class StepRecord:
    k: int
    position: np.ndarray
    buffer: float
    rate: float
    velocity: float
    heading: float
    reward: float
    estimator_digest: int = 0  # e.g. sample-store size at decision time


@dataclass
class EpisodeLog:
    seed: int = 0
    rows: list[StepRecord] = field(default_factory=list)
    emptied: bool = False
    reached_goal: bool = False
    collided: bool = False
    capped: bool = False
    final_position: np.ndarray | None = None
    final_buffer: float = 0.0

    @property
    def steps(self) -> int:
        return len(self.rows)

    @property
    def completed(self) -> bool:
        """Episode ended by its own objective rather than by the step cap."""
        return not self.capped

    def append(self, **kwargs) -> None:
        self.rows.append(StepRecord(k=len(self.rows), **kwargs))

    def total_reward(self) -> float:
        return float(sum(r.reward for r in self.rows))


def write_csv(log: EpisodeLog, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for r in log.rows:
        buf.write(
            f"{r.k},{r.position[0]:.9g},{r.position[1]:.9g},{r.buffer:.9g},"
            f"{r.rate:.9g},{r.velocity:.9g},{r.heading:.9g},{r.reward:.9g}\n"
        )
    path.write_bytes(buf.getvalue().encode("utf-8"))


def read_csv(path: str | Path) -> EpisodeLog:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ValueError(f"{path}: not an episode CSV")
    log = EpisodeLog()
    for line in lines[1:]:
        k, p1, p2, b, r, uv, uh, rew = line.split(",")
        log.rows.append(
            StepRecord(
                k=int(k),
                position=np.array([float(p1), float(p2)]),
                buffer=float(b),
                rate=float(r),
                velocity=float(uv),
                heading=float(uh),
                reward=float(rew),
            )
        )
    return log
