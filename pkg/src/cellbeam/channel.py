"""Scenario configuration and the symmetric two-cell Rayleigh channel model.

The network has two base stations with ``N`` antennas each and ``K``
single-antenna users per cell.  The row vector ``h[k, c, b]`` is the channel
from BS ``b`` to user ``k`` of cell ``c``; own-cell entries are CN(0, 1),
cross-cell entries CN(0, epsilon).

Users are indexed globally as ``u = c * K + k`` (cell-0 users first).  Every
per-user vector in this package (dual powers, downlink powers, SINRs) uses
that layout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = ["SystemConfig", "ChannelSet", "sample_channels", "stacked_channel"]


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters shared by every solver.

    Attributes
    ----------
    n_antennas : int
        Antennas per base station (N >= 1).
    n_users : int
        Users per cell (K >= 1, equal in both cells).
    epsilon : float
        Cross-cell channel gain (epsilon >= 0).
    sigma2 : float
        Receiver noise power (> 0).
    power : float
        Per-BS average transmit power budget (> 0).
    seed : int
        64-bit base seed; combined with a stream id per Monte Carlo draw.
    """

    n_antennas: int
    n_users: int
    epsilon: float
    sigma2: float
    power: float
    seed: int = 0

    def __post_init__(self):
        if int(self.n_antennas) < 1 or self.n_antennas != int(self.n_antennas):
            raise ValueError("n_antennas must be a positive integer")
        if int(self.n_users) < 1 or self.n_users != int(self.n_users):
            raise ValueError("n_users must be a positive integer")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if self.power <= 0:
            raise ValueError("power must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    @property
    def beta(self) -> float:
        """Cell loading K/N."""
        return self.n_users / self.n_antennas

    @property
    def snr(self) -> float:
        """Per-BS transmit SNR, power / sigma2."""
        return self.power / self.sigma2

    def to_dict(self) -> dict:
        return {
            "n_antennas": self.n_antennas,
            "n_users": self.n_users,
            "epsilon": self.epsilon,
            "sigma2": self.sigma2,
            "power": self.power,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SystemConfig":
        known = {"n_antennas", "n_users", "epsilon", "sigma2", "power", "seed"}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        missing = known - {"seed"} - set(data)
        if missing:
            raise ValueError(f"missing config keys: {sorted(missing)}")
        return cls(
            n_antennas=int(data["n_antennas"]),
            n_users=int(data["n_users"]),
            epsilon=float(data["epsilon"]),
            sigma2=float(data["sigma2"]),
            power=float(data["power"]),
            seed=int(data.get("seed", 0)),
        )

    @classmethod
    def from_file(cls, path: str) -> "SystemConfig":
        """Load from a JSON document or plain ``key=value`` lines."""
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        stripped = text.lstrip()
        if stripped.startswith("{"):
            return cls.from_dict(json.loads(text))
        data = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, value = line.split("=", 1)
            data[key.strip()] = value.strip()
        return cls.from_dict(data)


@dataclass(frozen=True)
class ChannelSet:
    """One random draw of the four K x N channel blocks.

    ``blocks[c, b]`` holds the K x N matrix of channels from BS ``b`` to the
    users of cell ``c``; row ``k`` is one user's channel vector.
    """

    blocks: np.ndarray  # complex, shape (2, 2, K, N)

    def __post_init__(self):
        b = np.asarray(self.blocks)
        if b.shape[:2] != (2, 2) or b.ndim != 4:
            raise ValueError("blocks must have shape (2, 2, K, N)")
        b = np.ascontiguousarray(b, dtype=np.complex128)
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @property
    def n_users(self) -> int:
        return self.blocks.shape[2]

    @property
    def n_antennas(self) -> int:
        return self.blocks.shape[3]

    def block(self, cell: int, bs: int) -> np.ndarray:
        """Channels from BS ``bs`` to the users of ``cell`` (K x N)."""
        return self.blocks[cell, bs]

    def bs_view(self, bs: int) -> np.ndarray:
        """Channels from BS ``bs`` to all 2K users, in global user order."""
        return np.concatenate([self.blocks[0, bs], self.blocks[1, bs]], axis=0)

    def stacked(self) -> np.ndarray:
        """All 2K stacked channels [h(BS 1), h(BS 2)], shape (2K, 2N)."""
        rows = [np.concatenate([self.blocks[c, 0], self.blocks[c, 1]], axis=1)
                for c in (0, 1)]
        return np.concatenate(rows, axis=0)

    def to_json(self) -> str:
        """Serialize to JSON (real/imag parts) for regression fixtures."""
        return json.dumps({
            "shape": list(self.blocks.shape),
            "real": self.blocks.real.tolist(),
            "imag": self.blocks.imag.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "ChannelSet":
        data = json.loads(text)
        arr = np.asarray(data["real"], dtype=float) + 1j * np.asarray(data["imag"], dtype=float)
        return cls(blocks=arr.reshape(data["shape"]))


def sample_channels(config: SystemConfig, stream_id: int = 0) -> ChannelSet:
    """Draw one ChannelSet for the given scenario.

    Uses the counter-based Philox generator keyed by (seed, stream_id), so
    equal keys reproduce bit-identical channels and distinct stream ids give
    independent draws that may be sampled concurrently.
    """
    if stream_id < 0:
        raise ValueError("stream_id must be nonnegative")
    rng = np.random.Generator(np.random.Philox(key=[int(config.seed), int(stream_id)]))
    k, n = config.n_users, config.n_antennas
    blocks = np.empty((2, 2, k, n), dtype=np.complex128)
    for cell in (0, 1):
        for bs in (0, 1):
            draw = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
            scale = 1.0 if cell == bs else np.sqrt(config.epsilon)
            blocks[cell, bs] = draw * (scale / np.sqrt(2.0))
    return ChannelSet(blocks=blocks)


def stacked_channel(channels: ChannelSet, user: int, cell: int) -> np.ndarray:
    """Stacked channel of one user: [h(BS 1), h(BS 2)], length 2N."""
    if not 0 <= cell < 2:
        raise IndexError("cell index out of range")
    if not 0 <= user < channels.n_users:
        raise IndexError("user index out of range")
    return np.concatenate([channels.blocks[cell, 0, user], channels.blocks[cell, 1, user]])
