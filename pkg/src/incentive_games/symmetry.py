"""Symmetric regions ``U = {x : x[0][perm_i[a]] == x[i][a]}`` of the product simplex."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .game import Game


class SymmetricRegion:
    """Coordinates of a symmetric region, grouped into tied classes.

    Every coordinate ``(i, a)`` is tied to ``(0, perms[i][a])``; the classes
    are the connected components of those ties.  Averaging within classes
    maps the product simplex onto the region.
    """

    def __init__(self, counts: Sequence[int], perms: Sequence[Sequence[int]] | None = None):
        counts = tuple(int(s) for s in counts)
        if len(set(counts)) != 1:
            raise ConfigurationError(f"symmetric regions need equal strategy counts, got {counts}")
        s = counts[0]
        n = len(counts)
        if perms is None:
            perms = [range(s)] * n
        perms = [np.array(list(p), dtype=int) for p in perms]
        if len(perms) != n:
            raise ConfigurationError(f"need one permutation per player ({n}), got {len(perms)}")
        for i, p in enumerate(perms):
            if sorted(p.tolist()) != list(range(s)):
                raise ConfigurationError(f"player {i}: {p.tolist()} is not a permutation of 0..{s - 1}")
        self.counts = counts
        self.perms = perms

        parent = list(range(n * s))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, p in enumerate(perms):
            for a in range(s):
                ra, rb = find(i * s + a), find(p[a])
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
        roots = np.array([find(k) for k in range(n * s)])
        _, self.labels = np.unique(roots, return_inverse=True)
        self.n_classes = int(self.labels.max()) + 1
        self._sizes = np.bincount(self.labels, minlength=self.n_classes).astype(float)

    @classmethod
    def for_game(cls, g: Game, perms=None) -> "SymmetricRegion":
        return cls(g.strategy_counts, perms)

    def _split(self, flat):
        return np.split(flat, np.cumsum(self.counts)[:-1])

    def class_values(self, parts) -> np.ndarray:
        flat = np.concatenate(parts)
        return np.bincount(self.labels, weights=flat, minlength=self.n_classes) / self._sizes

    def expand(self, values) -> list[np.ndarray]:
        return self._split(np.asarray(values, dtype=float)[self.labels])

    def project(self, parts) -> list[np.ndarray]:
        return self.expand(self.class_values(parts))

    def defect(self, parts) -> float:
        """Largest violation of ``x[i][a] == x[0][perm_i[a]]``."""
        first = np.asarray(parts[0])
        return max(float(np.abs(np.asarray(x) - first[p]).max()) for x, p in zip(parts, self.perms))

    def sample(self, rng: np.random.Generator) -> list[np.ndarray]:
        first = rng.dirichlet(np.ones(self.counts[0]))
        return self.project([first[p] for p in self.perms])
