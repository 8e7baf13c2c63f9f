"""
Coin Game on a wrapped ``g x g`` grid.

Two agents (red = agent 1, blue = agent 2) move simultaneously. Landing on
the coin picks it up: the picker earns ``pickup_reward``; if the coin has
the other agent's colour, that agent additionally earns ``penalty_reward``.
When both land on the coin together, both collect and the owner is also
penalized. After any pickup a new coin spawns uniformly on a cell neither
agent occupies, with the opposite colour of the coin just taken.

Randomness enters only through uniforms in [0, 1):
``reset`` consumes four per episode (agent 1 cell, agent 2 cell, coin cell,
colour) and ``step`` consumes one (respawn cell).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from apps.envs.models import (
    MOVE_DELTAS,
    CoinColor,
    CoinState,
    HorizonExceededError,
    InvalidGridSizeError,
)

N_MOVES = len(MOVE_DELTAS)
N_PLANES = 4

PICKUP_REWARD = 1.0
PENALTY_REWARD = -2.0


def _check_grid(grid_size: int) -> None:
    if grid_size < 2:
        raise InvalidGridSizeError(grid_size)


def _cells(pos: np.ndarray, grid_size: int) -> np.ndarray:
    return pos[..., 0] * grid_size + pos[..., 1]


def _positions(cells: np.ndarray, grid_size: int) -> np.ndarray:
    return np.stack([cells // grid_size, cells % grid_size], axis=-1)


def _kth_free_cell(occupied: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Pick a free cell per row uniformly, driven by one uniform per row.

    ``occupied`` is a (B, g*g) boolean mask.
    """
    free = ~occupied
    n_free = free.sum(axis=1)
    k = np.minimum((u * n_free).astype(np.int64), n_free - 1)
    rank = np.cumsum(free, axis=1) - 1
    hit = free & (rank == k[:, None])
    return np.argmax(hit, axis=1)


def coin_reset_from_uniforms(grid_size: int, uniforms: np.ndarray) -> CoinState:
    """Place both agents and the coin on three distinct cells."""
    _check_grid(grid_size)
    batch = len(uniforms)
    n_cells = grid_size * grid_size
    if n_cells < 3:
        raise InvalidGridSizeError(grid_size)
    occupied = np.zeros((batch, n_cells), dtype=bool)
    rows = np.arange(batch)

    cell1 = _kth_free_cell(occupied, uniforms[:, 0])
    occupied[rows, cell1] = True
    cell2 = _kth_free_cell(occupied, uniforms[:, 1])
    occupied[rows, cell2] = True
    coin = _kth_free_cell(occupied, uniforms[:, 2])
    color = np.where(uniforms[:, 3] < 0.5, CoinColor.RED, CoinColor.BLUE).astype(np.int64)

    return CoinState(
        grid_size=grid_size,
        pos1=_positions(cell1, grid_size),
        pos2=_positions(cell2, grid_size),
        coin_pos=_positions(coin, grid_size),
        coin_color=color,
        prev_actions=np.full((batch, 2), -1, dtype=np.int64),
        t=0,
    )


def coin_reset(grid_size: int, rng: np.random.Generator, batch_size: int = 1) -> CoinState:
    """Reset ``batch_size`` episodes drawing uniforms from ``rng``."""
    _check_grid(grid_size)
    return coin_reset_from_uniforms(grid_size, rng.random((batch_size, 4)))


def coin_step(
    state: CoinState,
    a: np.ndarray | int,
    b: np.ndarray | int,
    spawn_uniforms: np.ndarray | None = None,
    *,
    pickup_reward: float = PICKUP_REWARD,
    penalty_reward: float = PENALTY_REWARD,
) -> tuple[CoinState, np.ndarray, np.ndarray]:
    """Move both agents, resolve pickups and respawn the coin.

    ``spawn_uniforms`` (shape (B,)) drives the respawn cell; when omitted a
    fixed mid-range value is used, which keeps single-step checks
    deterministic.
    """
    g = state.grid_size
    batch = state.batch_size
    a_arr = np.broadcast_to(np.asarray(a, dtype=np.int64), (batch,))
    b_arr = np.broadcast_to(np.asarray(b, dtype=np.int64), (batch,))
    pos1 = (state.pos1 + MOVE_DELTAS[a_arr]) % g
    pos2 = (state.pos2 + MOVE_DELTAS[b_arr]) % g

    hit1 = np.all(pos1 == state.coin_pos, axis=1)
    hit2 = np.all(pos2 == state.coin_pos, axis=1)
    red = state.coin_color == CoinColor.RED
    blue = ~red

    r1 = pickup_reward * hit1 + penalty_reward * (hit2 & red)
    r2 = pickup_reward * hit2 + penalty_reward * (hit1 & blue)

    picked = hit1 | hit2
    coin_pos = state.coin_pos
    coin_color = state.coin_color
    if picked.any():
        if spawn_uniforms is None:
            spawn_uniforms = np.full(batch, 0.5)
        occupied = np.zeros((batch, g * g), dtype=bool)
        rows = np.arange(batch)
        occupied[rows, _cells(pos1, g)] = True
        occupied[rows, _cells(pos2, g)] = True
        fresh = _positions(_kth_free_cell(occupied, spawn_uniforms), g)
        coin_pos = np.where(picked[:, None], fresh, coin_pos)
        coin_color = np.where(picked, 1 - coin_color, coin_color)

    next_state = CoinState(
        grid_size=g,
        pos1=pos1,
        pos2=pos2,
        coin_pos=coin_pos,
        coin_color=coin_color,
        prev_actions=np.stack([a_arr, b_arr], axis=1),
        t=state.t + 1,
    )
    return next_state, r1.astype(np.float64), r2.astype(np.float64)


def coin_obs_dim(grid_size: int) -> int:
    return N_PLANES * grid_size * grid_size + 2 * N_MOVES


def coin_encode(state: CoinState, agent: int) -> np.ndarray:
    """Egocentric encoding.

    Four one-hot ``g x g`` planes (self, other, own-colour coin, other-colour
    coin), flattened, then one-hot previous actions (own, other), all zero
    before the first step.
    """
    g = state.grid_size
    batch = state.batch_size
    rows = np.arange(batch)
    own, other = (state.pos1, state.pos2) if agent == 0 else (state.pos2, state.pos1)
    own_color = CoinColor.RED if agent == 0 else CoinColor.BLUE

    planes = np.zeros((batch, N_PLANES, g * g))
    planes[rows, 0, _cells(own, g)] = 1.0
    planes[rows, 1, _cells(other, g)] = 1.0
    coin_plane = np.where(state.coin_color == own_color, 2, 3)
    planes[rows, coin_plane, _cells(state.coin_pos, g)] = 1.0

    prev = state.prev_actions if agent == 0 else state.prev_actions[:, ::-1]
    actions = np.zeros((batch, 2, N_MOVES))
    for seat in range(2):
        taken = prev[:, seat] >= 0
        actions[rows[taken], seat, prev[taken, seat]] = 1.0

    return np.concatenate([planes.reshape(batch, -1), actions.reshape(batch, -1)], axis=1)


@dataclass(frozen=True)
class CoinGame:
    """Batched Coin Game following the ``Environment`` protocol."""

    grid_size: int = 3
    game_length: int = 50
    pickup_reward: float = PICKUP_REWARD
    penalty_reward: float = PENALTY_REWARD

    def __post_init__(self) -> None:
        _check_grid(self.grid_size)

    @property
    def name(self) -> str:
        return "coin"

    @property
    def n_actions(self) -> int:
        return N_MOVES

    @property
    def obs_dim(self) -> int:
        return coin_obs_dim(self.grid_size)

    def reset(self, uniforms: np.ndarray) -> CoinState:
        return coin_reset_from_uniforms(self.grid_size, uniforms)

    def step(
        self,
        state: CoinState,  # type: ignore[override]
        a: np.ndarray,
        b: np.ndarray,
        uniforms: np.ndarray,
    ) -> tuple[CoinState, np.ndarray, np.ndarray]:
        if state.t >= self.game_length:
            raise HorizonExceededError(state.t, self.game_length)
        return coin_step(
            state,
            a,
            b,
            uniforms[:, 0],
            pickup_reward=self.pickup_reward,
            penalty_reward=self.penalty_reward,
        )

    def encode(self, state: CoinState, agent: int) -> np.ndarray:  # type: ignore[override]
        return coin_encode(state, agent)
