"""The discrete revision map and the continuous incentive dynamics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, EvaluationError
from .game import CLIP_TOL, Game, Profile
from .incentives import Incentive
from .symmetry import SymmetricRegion

log = logging.getLogger(__name__)

DENOM_TOL = 1e-12
MAP_SUM_TOL = 1e-10

METHODS = ("discrete-map", "euler", "rk4")
DRIFT_POLICIES = ("renormalize", "reject")


def _parts(x):
    return x.parts if isinstance(x, Profile) else tuple(np.asarray(p, dtype=float) for p in x)


def t_map_values(g: Game, phi: Incentive, x) -> list[np.ndarray]:
    """Unchecked image ``(x_i + phi_i) / (1 + sum phi_i)`` of the revision map."""
    parts = _parts(x)
    out = []
    for i, (p, f) in enumerate(zip(parts, phi(g, parts))):
        den = 1.0 + f.sum()
        if abs(den) <= DENOM_TOL:
            raise EvaluationError(
                f"player {i}: total incentive is -1, so the revision map is undefined "
                f"(incentive {phi.label} violates the strict definition here)")
        out.append((p + f) / den)
    return out


def t_map(g: Game, phi: Incentive, x) -> Profile:
    """Apply the revision map once.

    Raises :class:`ConfigurationError` for incentives that cannot drive the
    map on this game and :class:`EvaluationError` when the image is undefined
    or leaves the simplex.
    """
    phi.check_map(g)
    y = t_map_values(g, phi, x)
    _check_image(y)
    return Profile(y)


def _check_image(y):
    for i, v in enumerate(y):
        if v.min() < -CLIP_TOL or abs(v.sum() - 1.0) > MAP_SUM_TOL:
            raise EvaluationError(f"player {i}: revision map left the simplex (min {v.min():.3g}, sum {v.sum()!r})")


def map_residual(g: Game, phi: Incentive, x) -> float:
    """``max |T(x) - x|`` over all coordinates."""
    parts = _parts(x)
    y = t_map_values(g, phi, parts)
    return max(float(np.abs(a - b).max()) for a, b in zip(y, parts))


def dynamics_rhs(g: Game, phi: Incentive, x) -> list[np.ndarray]:
    """Incentive dynamics ``phi_ia - x_ia * sum_b phi_ib``."""
    parts = _parts(x)
    return [f - p * f.sum() for p, f in zip(parts, phi(g, parts))]


def derivative_limit_check(g: Game, phi: Incentive, x, t: float) -> float:
    """Distance between the time-``t`` difference quotient of the map and the dynamics."""
    if not t > 0:
        raise ConfigurationError(f"step t must be positive, got {t}")
    parts = _parts(x)
    dist = 0.0
    for p, f, r in zip(parts, phi(g, parts), dynamics_rhs(g, phi, parts)):
        den = 1.0 + t * f.sum()
        if abs(den) <= DENOM_TOL:
            raise EvaluationError("scaled revision map has a zero denominator")
        quotient = ((p + t * f) / den - p) / t
        dist = max(dist, float(np.abs(quotient - r).max()))
    return dist


@dataclass
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 0.01
    max_steps: int = 100_000
    tol: float = 1e-9
    drift_tol: float = 1e-9
    drift_policy: str = "renormalize"
    t_max: float | None = None
    record_every: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.drift_policy not in DRIFT_POLICIES:
            raise ConfigurationError(f"unknown drift policy {self.drift_policy!r}")
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if not (self.tol > 0 and self.drift_tol > 0):
            raise ConfigurationError("tolerances must be positive")
        if self.max_steps < 0 or self.record_every < 1:
            raise ConfigurationError("max_steps must be >= 0 and record_every >= 1")

    def n_steps(self) -> int:
        if self.t_max is None:
            return self.max_steps
        return min(self.max_steps, int(math.ceil(self.t_max / self.dt - 1e-9)))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class Trajectory:
    times: list[float]
    states: list[tuple[np.ndarray, ...]]
    method: str
    dt: float
    incentive: str
    status: str = "max-steps"
    residual: float = math.nan
    steps: int = 0
    message: str = ""

    @property
    def final(self) -> Profile:
        return Profile(self.states[-1])

    def __len__(self):
        return len(self.times)

    def rows(self):
        """``(t, player, strategy, value)`` tuples in time order."""
        for t, parts in zip(self.times, self.states):
            for i, p in enumerate(parts):
                for a, v in enumerate(p):
                    yield t, i, a, float(v)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "dt": self.dt,
            "incentive": self.incentive,
            "status": self.status,
            "residual": self.residual,
            "steps": self.steps,
            "message": self.message,
            "times": list(self.times),
            "profiles": [[p.tolist() for p in parts] for parts in self.states],
        }


def _correct(y, cfg: IntegratorConfig):
    """Apply the drift policy; returns corrected parts or ``None`` on rejection."""
    out = []
    for v in y:
        drift = max(abs(v.sum() - 1.0), max(0.0, -v.min()))
        if drift > cfg.drift_tol:
            if cfg.drift_policy == "reject":
                return None
            log.debug("renormalizing drift of %.3g", drift)
        v = np.maximum(v, 0.0)
        out.append(v / v.sum())
    return tuple(out)


def iterate_map(g: Game, phi: Incentive, x0, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Orbit ``x, T(x), T(T(x)), ...`` until ``max |T(x) - x| <= tol``."""
    cfg = cfg or IntegratorConfig(method="discrete-map")
    phi.check_map(g)
    x = tuple(g.profile(x0).parts)
    traj = Trajectory([0.0], [x], "discrete-map", 1.0, phi.label)
    for step in range(cfg.n_steps()):
        try:
            y = t_map_values(g, phi, x)
        except EvaluationError as exc:
            traj.status, traj.message = "denominator-violation", str(exc)
            break
        res = max(float(np.abs(a - b).max()) for a, b in zip(y, x))
        traj.residual, traj.steps = res, step
        if res <= cfg.tol:
            traj.status = "converged"
            break
        y = _correct(y, cfg)
        if y is None:
            traj.status = "simplex-violation"
            break
        x = y
        if (step + 1) % cfg.record_every == 0:
            traj.times.append(float(step + 1))
            traj.states.append(x)
    else:
        traj.steps = cfg.n_steps()
        traj.status = "max-steps"
        if traj.times[-1] != traj.steps:
            traj.times.append(float(traj.steps))
            traj.states.append(x)
    return traj


def _add(x, k, h):
    return [a + h * b for a, b in zip(x, k)]


def _step(g, phi, x, dt, method):
    k1 = dynamics_rhs(g, phi, x)
    if method == "euler":
        return _add(x, k1, dt)
    k2 = dynamics_rhs(g, phi, _add(x, k1, dt / 2))
    k3 = dynamics_rhs(g, phi, _add(x, k2, dt / 2))
    k4 = dynamics_rhs(g, phi, _add(x, k3, dt))
    return [a + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(x, k1, k2, k3, k4)]


def integrate(g: Game, phi: Incentive, x0, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Fixed-step Euler or RK4 integration of the incentive dynamics.

    Stops when ``max |dx/dt| <= tol``.  Discontinuous incentives are
    integrated with the same explicit schemes, which only approximates their
    solutions.
    """
    cfg = cfg or IntegratorConfig()
    if cfg.method == "discrete-map":
        return iterate_map(g, phi, x0, cfg)
    x = tuple(g.profile(x0).parts)
    traj = Trajectory([0.0], [x], cfg.method, cfg.dt, phi.label)
    n = cfg.n_steps()
    for step in range(n):
        res = max(float(np.abs(r).max()) for r in dynamics_rhs(g, phi, x))
        traj.residual, traj.steps = res, step
        if res <= cfg.tol:
            traj.status = "converged"
            break
        y = _correct(_step(g, phi, x, cfg.dt, cfg.method), cfg)
        if y is None:
            traj.status = "simplex-violation"
            traj.message = f"drift beyond {cfg.drift_tol:g} at step {step + 1}"
            break
        x = y
        if (step + 1) % cfg.record_every == 0 or step + 1 == n:
            traj.times.append((step + 1) * cfg.dt)
            traj.states.append(x)
    else:
        traj.steps = n
        traj.residual = max(float(np.abs(r).max()) for r in dynamics_rhs(g, phi, x))
        traj.status = "converged" if traj.residual <= cfg.tol else "max-steps"
    return traj


@dataclass
class InvarianceReport:
    max_defect: float
    samples: int
    seed: int
    worst_profile: list = field(default_factory=list)


def check_invariant_region(g: Game, phi: Incentive, perms=None, samples: int = 256, seed: int = 0,
                           region: SymmetricRegion | None = None) -> InvarianceReport:
    """Largest symmetry defect of ``T(x)`` over sampled profiles ``x`` in the region."""
    region = region or SymmetricRegion.for_game(g, perms)
    rng = np.random.default_rng(seed)
    worst, where = 0.0, []
    for _ in range(samples):
        x = region.sample(rng)
        d = region.defect(t_map_values(g, phi, x))
        if d > worst:
            worst, where = d, [p.tolist() for p in x]
    return InvarianceReport(worst, samples, seed, where)
