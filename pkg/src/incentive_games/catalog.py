"""Built-in games.

The payoff values are fixed constants of this package, chosen to keep each
game's defining ordinal structure (e.g. T > R > P > S and 2R > T + S for
the Prisoner's Dilemma).
"""
from __future__ import annotations

import itertools

import numpy as np

from .game import Game

ALIASES = {
    "pd": "prisoners_dilemma",
    "mp": "matching_pennies",
    "rps": "rock_paper_scissors",
    "coord": "coordination_2x2",
    "td": "travelers_dilemma_small",
    "majority": "three_player_majority",
}


def prisoners_dilemma(temptation=5.0, reward=3.0, punishment=1.0, sucker=0.0) -> Game:
    a = np.array([[reward, sucker], [temptation, punishment]])
    return Game([a, a.T], labels=[("Cooperate", "Defect")] * 2, name="prisoners_dilemma")


def matching_pennies() -> Game:
    a = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return Game([a, -a], labels=[("Heads", "Tails")] * 2, name="matching_pennies")


def rock_paper_scissors(win=1.0, lose=-1.0, tie=0.0) -> Game:
    a = np.array([[tie, lose, win], [win, tie, lose], [lose, win, tie]])
    return Game([a, a.T], labels=[("Rock", "Paper", "Scissors")] * 2, name="rock_paper_scissors")


def coordination_2x2() -> Game:
    """Both players are paid when they match; matching on the first strategy pays 2."""
    a = np.array([[2.0, 0.0], [0.0, 1.0]])
    return Game([a, a.copy()], labels=[("A", "B")] * 2, name="coordination_2x2")


def travelers_dilemma(low=2, high=5, bonus=2.0) -> Game:
    claims = np.arange(low, high + 1, dtype=float)
    mine, theirs = np.meshgrid(claims, claims, indexing="ij")
    a = np.where(mine == theirs, mine, np.where(mine < theirs, mine + bonus, theirs - bonus))
    labels = [tuple(str(int(c)) for c in claims)] * 2
    return Game([a, a.T], labels=labels, name="travelers_dilemma_small")


def three_player_majority() -> Game:
    """Each of three players earns 1 when siding with the majority, else 0."""
    pay = np.zeros((3, 2, 2, 2))
    for pure in itertools.product(range(2), repeat=3):
        for i in range(3):
            pay[(i,) + pure] = float(sum(v == pure[i] for v in pure) >= 2)
    return Game(pay, labels=[("A", "B")] * 3, name="three_player_majority")


_BUILDERS = {
    "prisoners_dilemma": prisoners_dilemma,
    "matching_pennies": matching_pennies,
    "rock_paper_scissors": rock_paper_scissors,
    "coordination_2x2": coordination_2x2,
    "travelers_dilemma_small": travelers_dilemma,
    "three_player_majority": three_player_majority,
}


def builtin_catalog() -> dict[str, Game]:
    return {name: build() for name, build in _BUILDERS.items()}


def builtin_game(name: str) -> Game:
    key = ALIASES.get(name, name)
    if key not in _BUILDERS:
        raise KeyError(name)
    return _BUILDERS[key]()
