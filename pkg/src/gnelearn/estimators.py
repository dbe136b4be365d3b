"""Gaussian query sampling and one-/two-point pseudo-gradient estimates.

Each player perturbs her shrunk iterate with an isotropic Gaussian, plays the
box projection of the perturbed point, and rescales observed payoffs by the
sampling score (xi - mu_hat)/sigma^2 to estimate her own-block gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import GameSpec


@dataclass(frozen=True, eq=False)
class PlayerStreams:
    """One independent random substream per player, derived from one seed.

    Streams are single-owner: never share an instance across concurrent runs.
    Philox is counter-based, so identical seeds reproduce identical draws.
    """

    seed: int
    generators: tuple[np.random.Generator, ...]

    @classmethod
    def from_seed(cls, seed: int, num_players: int) -> "PlayerStreams":
        children = np.random.SeedSequence(seed).spawn(num_players)
        gens = tuple(np.random.Generator(np.random.Philox(s)) for s in children)
        return cls(seed=int(seed), generators=gens)

    def __getitem__(self, player: int) -> np.random.Generator:
        return self.generators[player]

    def __len__(self) -> int:
        return len(self.generators)


@dataclass(frozen=True, eq=False)
class QuerySample:
    """A raw Gaussian query xi, the played (projected) action, and the offsets."""

    xi: np.ndarray
    action: np.ndarray
    offsets: tuple[np.ndarray, ...]  # per player: xi^i - mu_hat^i


def sample_query(game: GameSpec, mu_hat, sigma: float, streams: PlayerStreams) -> QuerySample:
    """Draw xi^i ~ Normal(mu_hat^i, sigma^2 I) per player and project onto the boxes."""
    if sigma <= 0:
        raise ValueError(f"sampling width sigma must be positive, got {sigma}")
    mu_hat = np.asarray(mu_hat, dtype=float)
    if mu_hat.shape != (game.total_dim,):
        raise ValueError("mu_hat must be a joint (D,) vector")
    xi = np.empty(game.total_dim)
    action = np.empty(game.total_dim)
    offsets = []
    for i in range(game.num_players):
        blk = game.block(i)
        draw = mu_hat[blk] + sigma * streams[i].standard_normal(game.dims[i])
        xi[blk] = draw
        box = game.local_sets[i]
        action[blk] = np.clip(draw, box.lower, box.upper)
        offsets.append(draw - mu_hat[blk])
    return QuerySample(xi=xi, action=action, offsets=tuple(offsets))


def one_point_estimate(u_val: float, xi_i, mu_hat_i, sigma: float) -> np.ndarray:
    """Single-query estimate: U * (xi^i - mu_hat^i) / sigma^2."""
    if sigma <= 0:
        raise ValueError(f"sampling width sigma must be positive, got {sigma}")
    off = np.asarray(xi_i, dtype=float) - np.asarray(mu_hat_i, dtype=float)
    return u_val * off / sigma**2


def two_point_estimate(u_val: float, u0_val: float, xi_i, mu_hat_i, sigma: float) -> np.ndarray:
    """Two-query estimate: (U - U0) * (xi^i - mu_hat^i) / sigma^2.

    U0 is the payoff at the mean point; the difference keeps the variance
    bounded as sigma shrinks.
    """
    if sigma <= 0:
        raise ValueError(f"sampling width sigma must be positive, got {sigma}")
    off = np.asarray(xi_i, dtype=float) - np.asarray(mu_hat_i, dtype=float)
    return (u_val - u0_val) * off / sigma**2
