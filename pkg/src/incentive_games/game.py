"""Finite n-player normal-form games and points of the product simplex.

Players and strategies are 0-based throughout.  A game stores one dense
payoff tensor per player; the tensor for player ``i`` has one axis per
player, axis ``j`` of length ``s_j``.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import GameError

SUM_TOL = 1e-9
CLIP_TOL = 1e-12


def _readonly(arr):
    arr.setflags(write=False)
    return arr


class Profile:
    """A mixed strategy profile: one probability vector per player.

    Coordinates in ``[-1e-12, 0)`` are clipped to zero and each vector is
    rescaled to sum to one, provided its sum is within ``1e-9`` of one.
    Anything further off the simplex raises :class:`GameError`.
    """

    __slots__ = ("parts",)

    def __init__(self, parts: Sequence[Sequence[float]], tol: float = SUM_TOL):
        if len(parts) == 0:
            raise GameError("a profile needs at least one player")
        checked = []
        for i, part in enumerate(parts):
            v = np.array(part, dtype=float)
            if v.ndim != 1 or v.size == 0:
                raise GameError(f"player {i}: strategy vector must be 1-D and non-empty")
            if not np.all(np.isfinite(v)):
                raise GameError(f"player {i}: non-finite coordinate")
            if v.min() < -CLIP_TOL:
                raise GameError(f"player {i}: negative coordinate {v.min():.3g}")
            v[v < 0] = 0.0
            total = v.sum()
            if abs(total - 1.0) > tol:
                raise GameError(f"player {i}: coordinates sum to {float(total)!r}, not 1")
            checked.append(_readonly(v / total))
        self.parts = tuple(checked)

    @classmethod
    def vertex(cls, counts: Sequence[int], pure: Sequence[int]) -> "Profile":
        parts = []
        for s, a in zip(counts, pure):
            if not 0 <= a < s:
                raise IndexError(f"strategy {a} out of range for {s} strategies")
            e = np.zeros(s)
            e[a] = 1.0
            parts.append(e)
        return cls(parts)

    @classmethod
    def barycenter(cls, counts: Sequence[int]) -> "Profile":
        return cls([np.full(s, 1.0 / s) for s in counts])

    @classmethod
    def from_flat(cls, flat, counts: Sequence[int]) -> "Profile":
        flat = np.asarray(flat, dtype=float)
        if flat.size != sum(counts):
            raise GameError(f"flat profile has {flat.size} entries, expected {sum(counts)}")
        return cls(np.split(flat, np.cumsum(counts)[:-1]))

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(p.size for p in self.parts)

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate(self.parts)

    def is_pure(self, tol: float = 1e-9) -> bool:
        return all(np.all((np.abs(p) <= tol) | (np.abs(p - 1) <= tol)) for p in self.parts)

    def is_interior(self, tol: float = 1e-9) -> bool:
        return all(np.all(p > tol) for p in self.parts)

    def replace(self, i: int, part) -> "Profile":
        parts = list(self.parts)
        parts[i] = part
        return Profile(parts)

    def __len__(self):
        return len(self.parts)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.parts)

    def __getitem__(self, i) -> np.ndarray:
        return self.parts[i]

    def __repr__(self):
        inner = "; ".join(",".join(f"{v:.6g}" for v in p) for p in self.parts)
        return f"Profile({inner})"


def as_profile(x, counts: Sequence[int] | None = None) -> Profile:
    """Coerce a Profile, a list of vectors, or a flat vector into a Profile."""
    if isinstance(x, Profile):
        prof = x
    elif isinstance(x, np.ndarray) and x.ndim == 1:
        prof = Profile([x]) if counts is None else Profile.from_flat(x, counts)
    else:
        prof = Profile(x)
    if counts is not None and prof.counts != tuple(counts):
        raise GameError(f"profile shape {prof.counts} does not match game {tuple(counts)}")
    return prof


@dataclass(frozen=True)
class OpponentIndexCodec:
    """Flattens opponent multi-indices for one player.

    Opponents are ordered by increasing player index with the last opponent
    varying fastest (row-major).
    """

    player: int
    opponent_counts: tuple[int, ...]
    ordering: str = "row-major"

    @classmethod
    def for_player(cls, counts: Sequence[int], player: int) -> "OpponentIndexCodec":
        if not 0 <= player < len(counts):
            raise IndexError(f"player {player} out of range")
        return cls(player, tuple(s for j, s in enumerate(counts) if j != player))

    @property
    def size(self) -> int:
        return int(np.prod(self.opponent_counts, dtype=np.int64))

    def encode(self, k: Sequence[int]) -> int:
        k = tuple(int(v) for v in k)
        if len(k) != len(self.opponent_counts):
            raise IndexError(f"expected {len(self.opponent_counts)} opponent indices, got {len(k)}")
        for v, s in zip(k, self.opponent_counts):
            if not 0 <= v < s:
                raise IndexError(f"opponent strategy {v} out of range for {s} strategies")
        if not k:
            return 0
        return int(np.ravel_multi_index(k, self.opponent_counts))

    def decode(self, flat: int) -> tuple[int, ...]:
        if not 0 <= flat < self.size:
            raise IndexError(f"flat index {flat} out of range 0..{self.size - 1}")
        if not self.opponent_counts:
            return ()
        return tuple(int(v) for v in np.unravel_index(flat, self.opponent_counts))


class Game:
    """An n-player normal-form game with dense payoff tensors.

    ``payoffs`` may be an array of shape ``(n, s_1, ..., s_n)`` or a list of
    ``n`` arrays each of shape ``(s_1, ..., s_n)``.
    """

    def __init__(self, payoffs, labels: Sequence[Sequence[str]] | None = None, name: str | None = None):
        if isinstance(payoffs, np.ndarray):
            tensors = [payoffs[i] for i in range(payoffs.shape[0])] if payoffs.ndim > 1 else [payoffs]
        else:
            tensors = list(payoffs)
        if not tensors:
            raise GameError("a game needs at least one player")
        n = len(tensors)
        first = np.asarray(tensors[0], dtype=float)
        counts = first.shape
        if len(counts) != n:
            raise GameError(f"player 0 tensor has {len(counts)} axes, expected {n}")
        if any(s < 1 for s in counts):
            raise GameError("every player needs at least one strategy")
        stacked = np.empty((n,) + counts)
        for i, t in enumerate(tensors):
            t = np.asarray(t, dtype=float)
            if t.shape != counts:
                raise GameError(f"player {i} tensor has shape {t.shape}, expected {counts}")
            if not np.all(np.isfinite(t)):
                bad = tuple(int(v) for v in np.argwhere(~np.isfinite(t))[0])
                raise GameError(f"player {i} has a non-finite payoff at {bad}")
            stacked[i] = t
        self.payoffs = _readonly(stacked)
        self.strategy_counts = tuple(int(s) for s in counts)
        if labels is not None:
            labels = tuple(tuple(str(v) for v in row) for row in labels)
            if tuple(len(row) for row in labels) != self.strategy_counts:
                raise GameError("label lists do not match strategy counts")
        self.labels = labels
        self.name = name

    @property
    def n_players(self) -> int:
        return len(self.strategy_counts)

    @property
    def n_profiles(self) -> int:
        return int(np.prod(self.strategy_counts, dtype=np.int64))

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"<Game{tag} {'x'.join(map(str, self.strategy_counts))}>"

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return self.strategy_counts == other.strategy_counts and np.array_equal(self.payoffs, other.payoffs)

    __hash__ = object.__hash__

    def profile(self, x) -> Profile:
        return as_profile(x, self.strategy_counts)

    def pure_profiles(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(s) for s in self.strategy_counts))

    def codec(self, player: int) -> OpponentIndexCodec:
        return OpponentIndexCodec.for_player(self.strategy_counts, player)

    def opponent_matrix(self, player: int) -> np.ndarray:
        """Player's payoffs as an ``s_i x s_{-i}`` matrix in codec order."""
        return np.moveaxis(self.payoffs[player], player, 0).reshape(self.strategy_counts[player], -1)

    @functools.cached_property
    def _ranges(self):
        flat = self.payoffs.reshape(self.n_players, -1)
        return flat.min(axis=1), flat.max(axis=1)

    def payoff_range(self, player: int) -> tuple[float, float]:
        lo, hi = self._ranges
        return float(lo[player]), float(hi[player])

    @property
    def spread(self) -> float:
        lo, hi = self._ranges
        return float(hi.max() - lo.min())

    @functools.cached_property
    def _own_views(self):
        # player i's tensor with axis i moved to the front
        return [np.moveaxis(self.payoffs[i], i, 0) for i in range(self.n_players)]

    @functools.cached_property
    def _all_views(self):
        # all tensors with player i's axis moved just after the player axis
        return [np.moveaxis(self.payoffs, i + 1, 1) for i in range(self.n_players)]

    def _contract(self, tensor, parts, keep):
        # axis `keep` was moved forward; the remaining player axes trail in
        # increasing order and are contracted last-first
        for j in range(self.n_players - 1, -1, -1):
            if j != keep:
                tensor = tensor @ parts[j]
        return tensor

    def conditional_payoffs(self, x) -> list[np.ndarray]:
        """``c[i][a] = u_i(e_ia, x_-i)`` for every player and strategy."""
        parts = x.parts if isinstance(x, Profile) else x
        views = self._own_views
        return [self._contract(views[i], parts, i) for i in range(self.n_players)]

    def deviation_payoffs(self, x) -> list[np.ndarray]:
        """``d[i][j, a] = u_j(e_ia, x_-i)``: everyone's payoff when ``i`` plays ``a``."""
        parts = x.parts if isinstance(x, Profile) else x
        views = self._all_views
        return [self._contract(views[i], parts, i) for i in range(self.n_players)]

    def utilities(self, x, cond: Sequence[np.ndarray] | None = None) -> np.ndarray:
        parts = x.parts if isinstance(x, Profile) else x
        if cond is None:
            cond = self.conditional_payoffs(parts)
        return np.array([float(parts[i] @ cond[i]) for i in range(self.n_players)])

    def is_symmetric_pair(self, tol: float = 0.0) -> bool:
        """True for a two-player game with ``A_2 = A_1^T``."""
        if self.n_players != 2 or self.strategy_counts[0] != self.strategy_counts[1]:
            return False
        return bool(np.allclose(self.payoffs[1], self.payoffs[0].T, rtol=0, atol=tol))


def _check_player(g: Game, i: int):
    if not 0 <= i < g.n_players:
        raise IndexError(f"player {i} out of range for {g.n_players} players")


def encode_opponent_index(g: Game | Sequence[int], i: int, k: Sequence[int]) -> int:
    counts = g.strategy_counts if isinstance(g, Game) else tuple(g)
    return OpponentIndexCodec.for_player(counts, i).encode(k)


def decode_opponent_index(g: Game | Sequence[int], i: int, flat: int) -> tuple[int, ...]:
    counts = g.strategy_counts if isinstance(g, Game) else tuple(g)
    return OpponentIndexCodec.for_player(counts, i).decode(flat)


def utility(g: Game, i: int, x) -> float:
    """Multilinear extension ``u_i(x)``."""
    _check_player(g, i)
    x = g.profile(x)
    return float(x[i] @ g.conditional_payoffs(x)[i])


def utility_replace(g: Game, i: int, alpha: int, x) -> float:
    """``u_i(e_i,alpha, x_-i)``."""
    _check_player(g, i)
    if not 0 <= alpha < g.strategy_counts[i]:
        raise IndexError(f"strategy {alpha} out of range for player {i}")
    x = g.profile(x)
    return float(g.conditional_payoffs(x)[i][alpha])


def payoff_range(g: Game, i: int) -> tuple[float, float]:
    _check_player(g, i)
    return g.payoff_range(i)
