"""Incentive functions.

Every rule has the signature ``rule(game, x) -> list[np.ndarray]`` and
returns one vector per player holding ``phi[i][a]``, the incentive of
player ``i`` to move toward pure strategy ``a`` at profile ``x``.
:class:`Incentive` wraps a rule together with its parameters and the
metadata the dynamics and solvers need.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError
from .game import Game, Profile

MAX_COALITION_PLAYERS = 12
ROW_SUM_TOL = 1e-10
# strict improvement threshold for "would benefit" comparisons
_BENEFIT_TOL = 1e-12

Rule = Callable[[Game, Profile], "list[np.ndarray]"]


def _parts(x):
    return x.parts if isinstance(x, Profile) else tuple(np.asarray(p, dtype=float) for p in x)


def _pos(v):
    return np.maximum(v, 0.0)


@dataclass(frozen=True)
class Incentive:
    """A named incentive rule plus the flags that describe it.

    ``relaxed_only`` marks incentives that are only meant for the continuous
    dynamics: they may take negative values, so the discrete map can leave
    the simplex.  ``map_guard`` is an optional per-game check that raises
    :class:`ConfigurationError` when the discrete map cannot be driven.
    """

    name: str
    rule: Rule
    params: Mapping = field(default_factory=dict)
    is_continuous: bool = True
    zero_total: bool = False
    relaxed_only: bool = False
    map_guard: Callable[[Game], None] | None = None
    spec: str | None = None

    def __call__(self, game: Game, x) -> list[np.ndarray]:
        return self.rule(game, x)

    def check_map(self, game: Game):
        """Raise unless this incentive can drive the discrete map on ``game``."""
        if self.relaxed_only:
            raise ConfigurationError(
                f"incentive {self.label} takes negative values and is only valid for the continuous dynamics")
        if self.map_guard is not None:
            self.map_guard(game)

    def drives_map(self, game: Game) -> bool:
        try:
            self.check_map(game)
        except ConfigurationError:
            return False
        return True

    @property
    def label(self) -> str:
        return self.spec or self.name


# ---------------------------------------------------------------- canonical


def nash_incentive(g: Game, x) -> list[np.ndarray]:
    """Positive part of the gain from switching to each pure strategy."""
    parts = _parts(x)
    cond = g.conditional_payoffs(parts)
    return [_pos(c - p @ c) for p, c in zip(parts, cond)]


def _translation_values(g: Game, parts, cond, translation):
    if translation == "neg_u":
        return [-(p @ c) for p, c in zip(parts, cond)]
    if callable(translation):
        vals = np.asarray(translation(g, Profile(parts) if not isinstance(parts, Profile) else parts), dtype=float)
        return list(np.broadcast_to(vals, (g.n_players,)))
    return [float(translation)] * g.n_players


def replicator_incentive(g: Game, x, translation="neg_u") -> list[np.ndarray]:
    """``x_ia (u_i(e_ia, x_-i) + g_i(x))``.

    ``translation`` is ``"neg_u"`` (``g_i = -u_i``, the zero-total form), a
    constant, or a callable ``(game, profile) -> per-player values``.
    """
    parts = _parts(x)
    cond = g.conditional_payoffs(parts)
    shift = _translation_values(g, parts, cond, translation)
    return [p * (c + s) for p, c, s in zip(parts, cond, shift)]


def projection_set(payoffs, support) -> np.ndarray:
    """Boolean mask of the strategy set used by the projection dynamic.

    Starts from the support and keeps adding the best unused strategy while
    it lies strictly above the running average of the selected set.
    """
    payoffs = np.asarray(payoffs, dtype=float)
    chosen = np.asarray(support, dtype=bool).copy()
    if not chosen.any():
        chosen[int(np.argmax(payoffs))] = True
    rest = [a for a in np.argsort(-payoffs, kind="stable") if not chosen[a]]
    total, size = payoffs[chosen].sum(), chosen.sum()
    for a in rest:
        if payoffs[a] <= total / size:
            break
        chosen[a] = True
        total += payoffs[a]
        size += 1
    return chosen


def projection_incentive(g: Game, x) -> list[np.ndarray]:
    """Projection dynamic vector field, applied to each player's payoffs."""
    parts = _parts(x)
    out = []
    for p, c in zip(parts, g.conditional_payoffs(parts)):
        chosen = projection_set(c, p > 0)
        f = np.zeros_like(c)
        f[chosen] = c[chosen] - c[chosen].mean()
        out.append(f)
    return out


def best_reply_incentive(g: Game, x) -> list[np.ndarray]:
    """Indicator of one pure best reply; ties go to the lowest index."""
    out = []
    for c in g.conditional_payoffs(_parts(x)):
        e = np.zeros_like(c)
        e[int(np.argmax(c))] = 1.0
        out.append(e)
    return out


def logit_incentive(g: Game, x, eta: float) -> list[np.ndarray]:
    if not eta > 0:
        raise ConfigurationError(f"logit noise eta must be positive, got {eta}")
    out = []
    for c in g.conditional_payoffs(_parts(x)):
        z = (c - c.max()) / eta
        w = np.exp(z)
        out.append(w / w.sum())
    return out


def smith_incentive(g: Game, x) -> list[np.ndarray]:
    """Mass-weighted pairwise gains: ``sum_c x_ic (u_i(e_ia) - u_i(e_ic))_+``.

    Strategy ``a`` collects the share of players on each worse strategy
    ``c`` times the payoff advantage of ``a`` over ``c``.
    """
    parts = _parts(x)
    out = []
    for p, c in zip(parts, g.conditional_payoffs(parts)):
        gains = _pos(c[:, None] - c[None, :])  # gains[a, c] = (u_a - u_c)_+
        out.append(gains @ p)
    return out


# -------------------------------------------------------------------- other


def zero_incentive(g: Game, x) -> list[np.ndarray]:
    return [np.zeros(s) for s in g.strategy_counts]


def default_epsilon(g: Game) -> float:
    return 0.1 * g.spread


def epsilon_nash_incentive(g: Game, x, eps: float | None = None) -> list[np.ndarray]:
    if eps is None:
        eps = default_epsilon(g)
    if eps < 0:
        raise ConfigurationError(f"epsilon must be non-negative, got {eps}")
    parts = _parts(x)
    cond = g.conditional_payoffs(parts)
    return [_pos(c - p @ c - eps) for p, c in zip(parts, cond)]


def su_incentive(g: Game, x) -> list[np.ndarray]:
    """Summed excess of every pure outcome in row ``a`` over the current payoff."""
    parts = _parts(x)
    u = g.utilities(parts)
    return [_pos(g.opponent_matrix(i) - u[i]).sum(axis=1) for i in range(g.n_players)]


def benefit_mixed(g: Game, x, i: int) -> np.ndarray:
    """``delta[a, k] = 1`` iff some other player gains when ``i`` switches to ``a``.

    Evaluated at the mixed profile, so the result does not depend on ``k``.
    """
    parts = _parts(x)
    u = g.utilities(parts)
    dev = g.deviation_payoffs(parts)[i]  # dev[j, a] = u_j(e_ia, x_-i)
    others = [j for j in range(g.n_players) if j != i]
    if not others:
        row = np.zeros(g.strategy_counts[i], dtype=bool)
    else:
        row = np.any(dev[others] > u[others, None] + _BENEFIT_TOL, axis=0)
    return np.repeat(row[:, None], g.opponent_matrix(i).shape[1], axis=1)


def benefit_pure(g: Game, x, i: int) -> np.ndarray:
    """``delta[a, k] = 1`` iff some other player is better off at the pure outcome ``(a, k)``."""
    parts = _parts(x)
    u = g.utilities(parts)
    others = [j for j in range(g.n_players) if j != i]
    s_i = g.strategy_counts[i]
    if not others:
        return np.zeros(g.opponent_matrix(i).shape, dtype=bool)
    gains = [np.moveaxis(g.payoffs[j], i, 0).reshape(s_i, -1) > u[j] + _BENEFIT_TOL for j in others]
    return np.logical_or.reduce(gains)


_SSU_RULES = {"mixed": benefit_mixed, "pure": benefit_pure}


def ssu_incentive(g: Game, x, rule="mixed") -> list[np.ndarray]:
    """SU restricted to moves that benefit at least one other player.

    ``rule`` is ``"mixed"``, ``"pure"`` (the outcome-dependent reading) or a
    callable ``(game, x, i) -> s_i x s_-i`` 0/1 mask in codec order.
    """
    fn = _SSU_RULES[rule] if isinstance(rule, str) else rule
    parts = _parts(x)
    u = g.utilities(parts)
    out = []
    for i in range(g.n_players):
        delta = np.asarray(fn(g, parts, i), dtype=float)
        out.append((delta * _pos(g.opponent_matrix(i) - u[i])).sum(axis=1))
    return out


def _require_opponents(g: Game, what: str):
    if g.n_players < 2:
        raise ConfigurationError(f"{what} incentive needs at least two players")


def altruism_incentive(g: Game, x) -> list[np.ndarray]:
    """Smallest gain among the other players when ``i`` switches to ``a``."""
    _require_opponents(g, "altruism")
    parts = _parts(x)
    u = g.utilities(parts)
    out = []
    for i, dev in enumerate(g.deviation_payoffs(parts)):
        others = [j for j in range(g.n_players) if j != i]
        out.append(_pos((dev[others] - u[others, None]).min(axis=0)))
    return out


def _excess_tensors(g: Game, parts):
    u = g.utilities(parts)
    return _pos(g.payoffs - u.reshape((-1,) + (1,) * g.n_players))


def _sum_except(tensor, keep):
    axes = tuple(a for a in range(tensor.ndim) if a != keep)
    return tensor.sum(axis=axes) if axes else tensor


def pareto_incentive(g: Game, x) -> list[np.ndarray]:
    """Sum over outcomes with ``pi_i = a`` of the product of everyone's excess."""
    prod = np.prod(_excess_tensors(g, _parts(x)), axis=0)
    return [_sum_except(prod, i) for i in range(g.n_players)]


def coalition_incentive(g: Game, x) -> list[np.ndarray]:
    """Excess products summed over every coalition that contains ``i``.

    Summing ``prod_{j in Omega} e_j`` over all ``Omega`` containing ``i``
    factors as ``e_i * prod_{j != i} (1 + e_j)``.
    """
    if g.n_players > MAX_COALITION_PLAYERS:
        raise ConfigurationError(
            f"coalition incentive enumerates coalitions and is limited to {MAX_COALITION_PLAYERS} players")
    exc = _excess_tensors(g, _parts(x))
    out = []
    for i in range(g.n_players):
        term = exc[i].copy()
        for j in range(g.n_players):
            if j != i:
                term *= 1.0 + exc[j]
        out.append(_sum_except(term, i))
    return out


def margin_incentive(g: Game, x) -> list[np.ndarray]:
    """Lead over the best-scoring opponent after switching to ``a``."""
    _require_opponents(g, "margin-of-victory")
    out = []
    for i, dev in enumerate(g.deviation_payoffs(_parts(x))):
        others = [j for j in range(g.n_players) if j != i]
        out.append(_pos(dev[i] - dev[others].max(axis=0)))
    return out


def default_rivals(n: int) -> tuple[int, ...]:
    return tuple((i + 1) % n for i in range(n))


def check_rivals(perm: Sequence[int], n: int) -> tuple[int, ...]:
    perm = tuple(int(v) for v in perm)
    if sorted(perm) != list(range(n)):
        raise ConfigurationError(f"rival map {perm} is not a permutation of {n} players")
    fixed = [i for i in range(n) if perm[i] == i]
    if fixed:
        raise ConfigurationError(f"rival map fixes player(s) {fixed}; nobody can be their own rival")
    return perm


def rival_incentive(g: Game, x, perm: Sequence[int] | None = None, variant: str = "hurt") -> list[np.ndarray]:
    """``hurt``: damage done to the rival; ``margin``: lead over the rival."""
    _require_opponents(g, "rival")
    perm = check_rivals(default_rivals(g.n_players) if perm is None else perm, g.n_players)
    if variant not in ("hurt", "margin"):
        raise ConfigurationError(f"unknown rival variant {variant!r}")
    parts = _parts(x)
    u = g.utilities(parts)
    out = []
    for i, dev in enumerate(g.deviation_payoffs(parts)):
        r = perm[i]
        if variant == "hurt":
            out.append(_pos(u[r] - dev[r]))
        else:
            out.append(_pos(dev[i] - dev[r]))
    return out


# ------------------------------------------------------------ mean dynamics


@dataclass(frozen=True)
class SwitchRateTable:
    """Conditional switch rates ``rho(payoffs, state) -> s x s`` with constant row sum.

    ``rates[a, b]`` is the rate of switching from ``a`` to ``b``.
    """

    n_strategies: int
    rates: Callable[[np.ndarray, np.ndarray], np.ndarray]
    row_sum: float
    description: str = "custom"

    def evaluate(self, payoffs, state) -> np.ndarray:
        rho = np.asarray(self.rates(np.asarray(payoffs), np.asarray(state)), dtype=float)
        s = self.n_strategies
        if rho.shape != (s, s):
            raise ConfigurationError(f"switch-rate table has shape {rho.shape}, expected {(s, s)}")
        if rho.min() < -ROW_SUM_TOL:
            raise ConfigurationError("switch rates must be non-negative")
        dev = np.abs(rho.sum(axis=1) - self.row_sum).max()
        if dev > ROW_SUM_TOL:
            raise ConfigurationError(f"switch-rate rows must all sum to {self.row_sum}; off by {dev:.3g}")
        return rho

    @classmethod
    def constant(cls, matrix) -> "SwitchRateTable":
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigurationError("constant switch-rate table must be square")
        sums = m.sum(axis=1)
        if np.abs(sums - sums[0]).max() > ROW_SUM_TOL:
            raise ConfigurationError("constant switch-rate table rows must share one sum")
        m.setflags(write=False)
        return cls(m.shape[0], lambda u, x: m, float(sums[0]), "constant")

    @classmethod
    def pairwise(cls, n_strategies: int, row_sum: float) -> "SwitchRateTable":
        """Switch to better strategies at the payoff difference; the diagonal absorbs the remainder."""

        def rates(u, x):
            rho = _pos(u[None, :] - u[:, None])
            np.fill_diagonal(rho, 0.0)
            np.fill_diagonal(rho, row_sum - rho.sum(axis=1))
            return rho

        return cls(n_strategies, rates, float(row_sum), "pairwise")


def mean_dynamics_incentive(g: Game, x, table: SwitchRateTable) -> list[np.ndarray]:
    """Inflow ``sum_b x_b rho[b, a]`` for each strategy ``a``.

    Each player is treated as its own population; a one-player game or a
    symmetric profile gives the single-population case.
    """
    parts = _parts(x)
    out = []
    for p, c in zip(parts, g.conditional_payoffs(parts)):
        if c.size != table.n_strategies:
            raise ConfigurationError(
                f"switch-rate table covers {table.n_strategies} strategies, player has {c.size}")
        out.append(p @ table.evaluate(c, p))
    return out


# --------------------------------------------------------------- factories


def _replicator_guard(translation, lower):
    def guard(g: Game):
        for i in range(g.n_players):
            lo, hi = g.payoff_range(i)
            if translation == "neg_u":
                bound = lo - hi
            elif callable(translation):
                if lower is None:
                    raise ConfigurationError(
                        "replicator translation is a function without a declared lower bound; "
                        "cannot certify it keeps translated payoffs above -1")
                bound = lo + lower
            else:
                bound = lo + float(translation)
            if not bound > -1.0:
                raise ConfigurationError(
                    f"replicator translation leaves player {i}'s translated payoffs down to {bound:.6g}; "
                    "the discrete map needs them above -1")

    return guard


def replicator(translation="neg_u", lower: float | None = None) -> Incentive:
    """Replicator incentive; ``lower`` bounds a callable translation from below."""
    if translation == "neg_u":
        spec = "replicator"
    elif callable(translation):
        spec = None
    else:
        translation = float(translation)
        spec = f"replicator:g=const:{translation!r}"
    return Incentive(
        "replicator",
        lambda g, x: replicator_incentive(g, x, translation),
        params={"translation": translation if not callable(translation) else "custom"},
        zero_total=translation == "neg_u",
        map_guard=_replicator_guard(translation, lower),
        spec=spec,
    )


def logit(eta: float) -> Incentive:
    if not eta > 0:
        raise ConfigurationError(f"logit noise eta must be positive, got {eta}")
    eta = float(eta)
    return Incentive("logit", lambda g, x: logit_incentive(g, x, eta), {"eta": eta}, spec=f"logit:eta={eta!r}")


def epsilon_nash(eps: float | None = None) -> Incentive:
    if eps is not None and not eps > 0:
        raise ConfigurationError(f"epsilon must be positive, got {eps}")
    spec = "eps-nash" if eps is None else f"eps-nash:eps={float(eps)!r}"
    return Incentive("eps-nash", lambda g, x: epsilon_nash_incentive(g, x, eps), {"eps": eps}, spec=spec)


def ssu(rule="mixed") -> Incentive:
    if isinstance(rule, str) and rule not in _SSU_RULES:
        raise ConfigurationError(f"unknown SSU benefit rule {rule!r}")
    spec = {"mixed": "ssu", "pure": "ssu:gamma-dependent"}.get(rule) if isinstance(rule, str) else None
    return Incentive("ssu", lambda g, x: ssu_incentive(g, x, rule), {"rule": rule if isinstance(rule, str) else "custom"},
                     is_continuous=False, spec=spec)


def rival(perm: Sequence[int] | None = None, variant: str = "hurt") -> Incentive:
    if variant not in ("hurt", "margin"):
        raise ConfigurationError(f"unknown rival variant {variant!r}")
    perm = None if perm is None else tuple(int(v) for v in perm)

    def guard(g: Game):
        _require_opponents(g, "rival")
        check_rivals(default_rivals(g.n_players) if perm is None else perm, g.n_players)

    spec = "rival" if perm is None else "rival:perm=" + "-".join(str(v) for v in perm)
    if variant != "hurt":
        spec += f":variant={variant}"
    return Incentive("rival", lambda g, x: rival_incentive(g, x, perm, variant),
                     {"perm": perm, "variant": variant}, map_guard=guard, spec=spec)


def mean_dynamics(table: SwitchRateTable, spec: str | None = None) -> Incentive:
    return Incentive("mean", lambda g, x: mean_dynamics_incentive(g, x, table),
                     {"table": table.description, "row_sum": table.row_sum}, spec=spec)


def from_field(field_fn: Rule, name: str = "field", zero_total: bool = False, is_continuous: bool = True) -> Incentive:
    """Wrap an arbitrary vector field as a relaxed incentive."""
    return Incentive(name, field_fn, zero_total=zero_total, is_continuous=is_continuous, relaxed_only=True)


def dyn_equivalent(phi: Incentive) -> Incentive:
    """Zero-total incentive inducing the same continuous dynamics as ``phi``."""
    if phi.zero_total:
        return phi

    def rule(g, x):
        parts = _parts(x)
        return [f - p * f.sum() for p, f in zip(parts, phi(g, parts))]

    return Incentive(f"equiv({phi.name})", rule, dict(phi.params), is_continuous=phi.is_continuous,
                     zero_total=True, relaxed_only=True,
                     spec=None if phi.spec is None else f"equiv({phi.spec})")


def _guarded(name, rule, guard_what=None, **kw):
    guard = None
    if guard_what is not None:
        def guard(g):
            _require_opponents(g, guard_what)
    return Incentive(name, rule, map_guard=guard, spec=name, **kw)


NASH = _guarded("nash", nash_incentive)
PROJECTION = Incentive("projection", projection_incentive, is_continuous=False, zero_total=True,
                       relaxed_only=True, spec="projection")
BEST_REPLY = _guarded("best-reply", best_reply_incentive, is_continuous=False)
SMITH = _guarded("smith", smith_incentive)
ZERO = Incentive("zero", zero_incentive, zero_total=True, spec="zero")
SU = _guarded("su", su_incentive)
ALTRUISM = _guarded("altruism", altruism_incentive, "altruism")
PARETO = _guarded("pareto", pareto_incentive)
COALITION = _guarded("coalition", coalition_incentive)
MARGIN = _guarded("margin", margin_incentive, "margin-of-victory")


def catalog(eta: float = 1.0, eps: float | None = None) -> dict[str, Incentive]:
    """One instance of every parameter-free or default-parameter incentive."""
    return {
        "nash": NASH,
        "replicator": replicator(),
        "projection": PROJECTION,
        "best-reply": BEST_REPLY,
        "logit": logit(eta),
        "smith": SMITH,
        "zero": ZERO,
        "eps-nash": epsilon_nash(eps),
        "su": SU,
        "ssu": ssu(),
        "ssu-pure": ssu("pure"),
        "altruism": ALTRUISM,
        "pareto": PARETO,
        "coalition": COALITION,
        "margin": MARGIN,
        "rival": rival(),
        "rival-margin": rival(variant="margin"),
    }

