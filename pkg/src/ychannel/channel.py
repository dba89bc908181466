"""Random channel realizations, relay antenna deactivation, symbol extension."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from .io import matrix_from_json, matrix_to_json, read_matrices, write_matrices
from .region import USERS, AntennaConfig

__all__ = [
    "ChannelError",
    "ChannelRealization",
    "DeactivatedChannel",
    "sample",
    "deactivate",
    "complex_gaussian",
    "slot_rows",
]


class ChannelError(ValueError):
    pass


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) entries."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass(frozen=True)
class ChannelRealization:
    """Per-slot channels.

    ``uplink[i-1]`` has shape ``(t, N, M_i)`` (user i to relay) and
    ``downlink[i-1]`` has shape ``(t, M_i, N)`` (relay to user i).
    """

    config: AntennaConfig
    t: int
    seed: int
    uplink: tuple[np.ndarray, np.ndarray, np.ndarray]
    downlink: tuple[np.ndarray, np.ndarray, np.ndarray]

    def H_up(self, user: int, slot: int = 0) -> np.ndarray:
        return self.uplink[user - 1][slot]

    def H_down(self, user: int, slot: int = 0) -> np.ndarray:
        return self.downlink[user - 1][slot]

    def matrices(self) -> dict[str, np.ndarray]:
        out = {}
        for s in range(self.t):
            for i in USERS:
                out[f"H_{i}r[{s}]"] = self.uplink[i - 1][s]
                out[f"H_r{i}[{s}]"] = self.downlink[i - 1][s]
        return out

    def _meta(self) -> dict:
        return {"kind": "channel", "config": list(self.config.as_tuple()), "t": self.t, "seed": self.seed}

    def save(self, path: str | Path) -> None:
        write_matrices(path, self.matrices(), self._meta())

    @classmethod
    def load(cls, path: str | Path) -> "ChannelRealization":
        meta, mats = read_matrices(path)
        return cls._from_parts(meta, mats)

    def to_json(self) -> dict:
        return {**self._meta(), "matrices": {k: matrix_to_json(v) for k, v in self.matrices().items()}}

    @classmethod
    def from_json(cls, obj: dict) -> "ChannelRealization":
        return cls._from_parts(obj, {k: matrix_from_json(v) for k, v in obj["matrices"].items()})

    @classmethod
    def _from_parts(cls, meta: dict, mats: dict) -> "ChannelRealization":
        config = AntennaConfig(*meta["config"])
        t = meta["t"]
        up = tuple(np.stack([mats[f"H_{i}r[{s}]"] for s in range(t)]) for i in USERS)
        down = tuple(np.stack([mats[f"H_r{i}[{s}]"] for s in range(t)]) for i in USERS)
        return cls(config, t, meta["seed"], up, down)


def sample(config: AntennaConfig, t: int, seed: int) -> ChannelRealization:
    """Independent CN(0,1) channels for every user, direction and slot."""
    if t < 1:
        raise ChannelError(f"extension factor must be >= 1, got {t}")
    rng = np.random.default_rng(seed)
    N = config.N
    up, down = [], []
    for i in USERS:
        Mi = config.antennas(i)
        up.append(complex_gaussian(rng, (t, N, Mi)))
        down.append(complex_gaussian(rng, (t, Mi, N)))
    return ChannelRealization(config, t, seed, tuple(up), tuple(down))


def slot_rows(J_total: int, t: int) -> tuple[int, ...]:
    """Relay antennas kept in each slot: J_total spread as evenly as possible."""
    q, r = divmod(J_total, t)
    return tuple(q + (1 if s < r else 0) for s in range(t))


@dataclass(frozen=True)
class DeactivatedChannel:
    """Block-diagonal extended channels restricted to the kept relay antennas.

    ``up[i-1]`` is ``(J_total, M_i t)``, ``down[i-1]`` is ``(M_i t, J_total)``.
    Users are in whatever labeling the object was built (or relabeled) in.
    """

    config: AntennaConfig
    t: int
    rows_per_slot: tuple[int, ...]
    up: tuple[np.ndarray, np.ndarray, np.ndarray]
    down: tuple[np.ndarray, np.ndarray, np.ndarray]

    @property
    def J_total(self) -> int:
        return sum(self.rows_per_slot)

    def relabeled(self, perm: Sequence[int]) -> "DeactivatedChannel":
        """New user ``a`` is current user ``perm[a-1]``."""
        return DeactivatedChannel(
            self.config.relabeled(perm),
            self.t,
            self.rows_per_slot,
            tuple(self.up[p - 1] for p in perm),
            tuple(self.down[p - 1] for p in perm),
        )


def deactivate(ch: ChannelRealization, J) -> DeactivatedChannel:
    """Keep the first relay antennas and stack the slots block-diagonally.

    ``J`` is the number of relay dimensions per channel use.  It may be a
    fraction as long as ``J * t`` is an integer; the ``J * t`` kept antennas
    are then spread over the slots as evenly as possible, earlier slots
    first.
    """
    J = Fraction(J)
    if J < 0:
        raise ChannelError(f"relay dimension must be nonnegative, got {J}")
    if J > ch.config.N:
        raise ChannelError(f"relay dimension exceeds antennas: J={J} > N={ch.config.N}")
    total = J * ch.t
    if total.denominator != 1:
        raise ChannelError(f"J*t must be an integer, got J={J}, t={ch.t}")
    rows = slot_rows(int(total), ch.t)
    up, down = [], []
    for i in USERS:
        up.append(scipy.linalg.block_diag(*(ch.uplink[i - 1][s][:rows[s], :] for s in range(ch.t))))
        down.append(scipy.linalg.block_diag(*(ch.downlink[i - 1][s][:, :rows[s]] for s in range(ch.t))))
    return DeactivatedChannel(ch.config, ch.t, rows, tuple(up), tuple(down))
