"""Finding and certifying incentive equilibria.

A profile is certified by its parallel residual
``max |phi_ia(x) - x_ia * sum_b phi_ib(x)|``, which vanishes exactly at
fixed points of the revision map and is defined on the whole boundary.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .dynamics import t_map_values
from .errors import ConfigurationError, EvaluationError, SymmetryError
from .game import Game, Profile
from .incentives import Incentive
from .symmetry import SymmetricRegion

MAX_PURE_PROFILES = 10**6
WIN_WIN_TOL = 1e-12
SNAP_THRESHOLDS = (1e-3, 1e-6)
SNAP_EVERY = 25
EDGE_SPLIT = 1e-2


def _parts(x):
    return x.parts if isinstance(x, Profile) else tuple(np.asarray(p, dtype=float) for p in x)


def _parallel(parts, f):
    return max(float(np.abs(v - p * v.sum()).max()) for p, v in zip(parts, f))


def equilibrium_residual(g: Game, phi: Incentive, x) -> float:
    """Parallel residual; zero iff ``x`` is an incentive equilibrium."""
    parts = _parts(x)
    return _parallel(parts, phi(g, parts))


def nash_residual(g: Game, x) -> float:
    """Largest gain any player could get from a pure deviation."""
    parts = _parts(x)
    cond = g.conditional_payoffs(parts)
    return max(float(c.max() - p @ c) for p, c in zip(parts, cond))


@dataclass
class EquilibriumReport:
    profile: Profile
    residual: float
    map_residual: float | None
    nash_residual: float
    is_interior: bool
    is_pure: bool
    win_win: bool | None
    converged: bool
    start: int | None = None
    iterations: int = 0
    route: str = ""
    symmetry_defect: float | None = None

    def to_dict(self) -> dict:
        return {
            "profile": [p.tolist() for p in self.profile],
            "residual": self.residual,
            "map_residual": self.map_residual,
            "nash_residual": self.nash_residual,
            "is_interior": self.is_interior,
            "is_pure": self.is_pure,
            "win_win": self.win_win,
            "converged": self.converged,
            "start": self.start,
            "iterations": self.iterations,
            "route": self.route,
            "symmetry_defect": self.symmetry_defect,
        }


@dataclass
class SearchConfig:
    n_random: int = 8
    include_vertices: bool = True
    vertex_limit: int = 64
    seed: int = 0
    max_iter: int = 200
    tol: float = 1e-9
    dedup: float = 1e-6
    damping: float = 0.5
    polish: bool = True
    face_roots: bool = True
    edge_pairs: int = 3
    edge_bisections: int = 24
    keep_unconverged: bool = True
    hypothesis_samples: int = 256
    hypothesis_tol: float = 1e-10

    def __post_init__(self):
        if min(self.n_random, self.max_iter, self.edge_pairs, self.edge_bisections) < 0 or self.hypothesis_samples < 1:
            raise ConfigurationError("start and iteration counts must be non-negative")
        if not (self.tol > 0 and self.dedup > 0 and self.damping > 0):
            raise ConfigurationError("tolerances and damping must be positive")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def is_win_win(g: Game, pure) -> bool:
    """Every player receives their largest payoff anywhere in the game."""
    pure = tuple(pure)
    return all(g.payoffs[i][pure] >= g.payoff_range(i)[1] - WIN_WIN_TOL for i in range(g.n_players))


def make_report(g: Game, phi: Incentive, x, tol: float, **extra) -> EquilibriumReport:
    prof = x if isinstance(x, Profile) else Profile(x)
    parts = prof.parts
    res = equilibrium_residual(g, phi, parts)
    map_res = None
    if phi.drives_map(g):
        try:
            y = t_map_values(g, phi, parts)
            map_res = max(float(np.abs(a - b).max()) for a, b in zip(y, parts))
        except EvaluationError:
            pass
    pure = prof.is_pure()
    win = is_win_win(g, [int(np.argmax(p)) for p in parts]) if pure else None
    return EquilibriumReport(prof, res, map_res, nash_residual(g, parts), prof.is_interior(), pure, win,
                             res <= tol, **extra)


def _normalize(parts):
    out = []
    for v in parts:
        v = np.maximum(v, 0.0)
        s = v.sum()
        out.append(v / s if s > 0 else np.full(v.size, 1.0 / v.size))
    return tuple(out)


def _damped_step(parts, f, damping):
    """Move along ``phi - x sum(phi)`` without leaving the simplex."""
    r = [v - p * v.sum() for p, v in zip(parts, f)]
    lam = damping / max(1.0, max(float(np.abs(v).max()) for v in f))
    for p, v in zip(parts, r):
        neg = v < 0
        if neg.any():
            lam = min(lam, float((p[neg] / -v[neg]).min()))
    return _normalize([p + lam * v for p, v in zip(parts, r)])


def _advance(parts, f, use_map, damping):
    """One update step; falls back to the damped step (for good) if the map leaves the simplex."""
    if use_map:
        nxt = [(p + v) / (1.0 + v.sum()) for p, v in zip(parts, f)]
        if all(v.min() >= -1e-12 for v in nxt):
            return _normalize(nxt), True
    return _damped_step(parts, f, damping), False


def _iterate(g, phi, parts, cfg, use_map, project=None):
    """Run the update from ``parts``; returns (parts, residual, iterations).

    Every ``SNAP_EVERY`` steps the iterate is also tried with its small
    coordinates snapped to zero, which catches slow approaches to faces.
    """
    res = np.inf
    for it in range(cfg.max_iter + 1):
        f = phi(g, parts)
        res = _parallel(parts, f)
        if res <= cfg.tol or it == cfg.max_iter:
            return parts, res, it
        if it and it % SNAP_EVERY == 0:
            cand = _snap(parts, SNAP_THRESHOLDS[0])
            if project is not None:
                cand = tuple(project(cand))
            cres = equilibrium_residual(g, phi, cand)
            if cres <= cfg.tol:
                return cand, cres, it
        nxt, use_map = _advance(parts, f, use_map, cfg.damping)
        parts = tuple(project(nxt)) if project is not None else nxt
    return parts, res, cfg.max_iter


def _snap(parts, threshold):
    return _normalize([np.where(p < threshold, 0.0, p) for p in parts])


def polish(g: Game, phi: Incentive, parts, tol: float, region: SymmetricRegion | None = None):
    """Try to turn a near-equilibrium into one that meets ``tol``.

    Small coordinates are first snapped to zero.  Failing that, the
    residual is root-searched inside the faces the iterate approaches, or
    minimized by bounded least squares over ``region`` when one is given.  Returns ``(parts, residual)`` of the best candidate seen.
    """
    best = (tuple(parts), equilibrium_residual(g, phi, parts))
    for thr in SNAP_THRESHOLDS:
        cand = _snap(parts, thr)
        if region is not None:
            cand = tuple(region.project(cand))
        res = equilibrium_residual(g, phi, cand)
        if res < best[1]:
            best = (cand, res)
        if res <= tol:
            return best

    if region is None:
        # root search on the faces the iterate is approaching, smallest first
        for thr in SNAP_THRESHOLDS:
            cand, res = face_root(g, phi, _snap(parts, thr), tol)
            if res < best[1]:
                best = (cand, res)
            if res <= tol:
                break
        return best

    expand = region.expand
    z0 = region.class_values(best[0])

    def fun(z):
        raw = expand(z)
        sums = np.array([v.sum() for v in raw])
        parts = _normalize(raw)
        f = phi(g, parts)
        return np.concatenate([v - p * v.sum() for p, v in zip(parts, f)] + [sums - 1.0])

    try:
        sol = least_squares(fun, np.clip(z0, 0.0, 1.0), bounds=(0.0, 1.0), method="trf",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=100 * (z0.size + 1))
    except (ValueError, EvaluationError, FloatingPointError):
        return best
    cands = [_normalize(expand(sol.x))]
    cands += [_snap(cands[0], thr) for thr in SNAP_THRESHOLDS]
    # bounded least squares stalls next to faces; finish with a root search there
    cands += [face_root(g, phi, _snap(cands[0], thr), tol, attempts=1)[0] for thr in SNAP_THRESHOLDS]
    for cand in cands:
        if region is not None:
            cand = tuple(region.project(cand))
        res = equilibrium_residual(g, phi, cand)
        if res < best[1]:
            best = (tuple(cand), res)
    return best


def face_root(g: Game, phi: Incentive, parts, tol: float, known=(), attempts: int = 4):
    """Root-find the parallel residual on the face spanned by the support of ``parts``.

    The last support coordinate of each player is eliminated and the rest
    are solved for without bounds.  When the solver lands on a root already
    in ``known`` (flat profiles), that root is deflated and the solve is
    repeated, up to ``attempts`` times.  This reaches equilibria the
    dynamics flow away from.  Returns ``(parts, residual)``.
    """
    parts = tuple(np.asarray(p, dtype=float) for p in parts)
    fallback = (parts, equilibrium_residual(g, phi, parts))
    supports = [np.flatnonzero(p > 0) for p in parts]
    sizes = [len(sup) - 1 for sup in supports]
    if sum(sizes) == 0:
        return fallback
    offsets = np.cumsum([0] + sizes)
    free = np.concatenate([sup[:-1] + off for sup, off in zip(supports, np.cumsum((0,) + g.strategy_counts[:-1]))])
    known = [np.asarray(k, dtype=float) for k in known]
    deflated = []

    def expand(z):
        out = []
        for p, sup, a, b in zip(parts, supports, offsets[:-1], offsets[1:]):
            v = np.zeros(p.size)
            v[sup[:-1]] = z[a:b]
            v[sup[-1]] = 1.0 - z[a:b].sum()
            out.append(v)
        return tuple(out)

    def fun(z):
        raw = expand(z)
        # evaluate on the face and charge for leaving it, so that regions
        # outside the simplex where the incentive happens to vanish are not roots
        x = _normalize(raw)
        r = np.concatenate([v - p * v.sum() for p, v in zip(x, phi(g, x))]
                           + [a - b for a, b in zip(raw, x)])
        for k in deflated:
            r = r * (1.0 + 1.0 / max(float((z - k) @ (z - k)) ** 2, 1e-300))
        return r

    z0 = np.concatenate([p[sup[:-1]] for p, sup in zip(parts, supports)])
    found = fallback
    for _ in range(attempts):
        try:
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                sol = least_squares(fun, z0, method="lm", xtol=1e-13, ftol=1e-13, gtol=1e-13,
                                    max_nfev=30 * (z0.size + 1))
        except (ValueError, ArithmeticError):
            return found
        x = expand(sol.x)
        if not np.all(np.isfinite(sol.x)) or min(v.min() for v in x) < -1e-9:
            return found
        x = _normalize(x)
        found = (x, equilibrium_residual(g, phi, x))
        flat = np.concatenate(x)
        if found[1] > tol or not any(np.abs(flat - k).max() <= 1e-6 for k in known):
            return found
        deflated.append(sol.x)
    return found


def _basin_edge(g, phi, cfg, use_map, lo, hi, label):
    """Bisect between starts that reach different equilibria.

    Two trajectories from either side of the boundary between the basins
    travel together until they pass the saddle that separates them.  The
    lowest-residual point before they split is returned as ``(residual, parts)``.
    """
    a = label(_iterate(g, phi, lo, cfg, use_map)[0])
    for _ in range(cfg.edge_bisections):
        mid = tuple((p + q) / 2.0 for p, q in zip(lo, hi))
        if label(_iterate(g, phi, mid, cfg, use_map)[0]) == a:
            lo = mid
        else:
            hi = mid
    best = (np.inf, lo)
    map_lo = map_hi = use_map
    for _ in range(cfg.max_iter):
        f = phi(g, lo)
        res = _parallel(lo, f)
        if res < best[0]:
            best = (res, lo)
        lo, map_lo = _advance(lo, f, map_lo, cfg.damping)
        hi, map_hi = _advance(hi, phi(g, hi), map_hi, cfg.damping)
        if max(float(np.abs(p - q).max()) for p, q in zip(lo, hi)) > EDGE_SPLIT:
            break
    return best


def _distinct(reports, radius):
    return [r.profile.flat for r in _dedup([r for r in reports if r.converged], radius)]


def _edge_search(g, phi, cfg, use_map, starts, done, first_interior):
    """Look for saddles between the basins reached by the starts."""
    known = _distinct(done, cfg.dedup)
    if len(known) < 2:
        return []

    def label(parts):
        return int(np.argmin(np.abs(np.concatenate(parts) - np.array(known)).max(axis=1)))

    reps = {}
    centre = Profile.barycenter(g.strategy_counts).parts
    for k, (start, rep) in enumerate(zip(starts, done)):
        if not rep.converged:
            continue
        lab = label(rep.profile.parts)
        if k >= first_interior:
            reps.setdefault(lab, (k, start))
        elif lab not in reps:
            # a vertex only stands for a basin if a nudge inwards comes back to it
            nudged = tuple(0.999 * p + 0.001 * c for p, c in zip(start, centre))
            if label(_iterate(g, phi, nudged, cfg, use_map)[0]) == lab:
                reps[lab] = (k, nudged)
    out = []
    for (k, lo), (_, hi) in list(itertools.combinations(reps.values(), 2))[:cfg.edge_pairs]:
        res, parts = _basin_edge(g, phi, cfg, use_map, lo, hi, label)
        if res > cfg.tol:
            parts, res = face_root(g, phi, parts, cfg.tol, attempts=1)
        if res <= cfg.tol:
            parts, res = _refine(g, phi, parts, res, cfg.tol)
        out.append(make_report(g, phi, _normalize(parts), cfg.tol, start=k, route="basin-edge"))
    return out


def _refine(g, phi, parts, res, tol):
    """Sharpen a converged point by root searches on its face and on snapped faces.

    Near a face the residual can vanish faster than the distance, so a
    point well within tolerance may still sit visibly off the face.
    """
    parts = _normalize(parts)
    best = (parts, res)
    seen = set()
    for cand in [parts] + [_snap(parts, thr) for thr in SNAP_THRESHOLDS]:
        support = tuple(tuple(np.flatnonzero(p)) for p in cand)
        if support in seen:
            continue
        seen.add(support)
        cres = equilibrium_residual(g, phi, cand)
        if cres <= best[1]:
            best = (cand, cres)
        if any(len(sup) > 1 for sup in support):
            cand, cres = face_root(g, phi, cand, tol, attempts=1)
            if cres < best[1]:
                best = (cand, cres)
    return best


def _starts(g: Game, cfg: SearchConfig):
    counts = g.strategy_counts
    starts = []
    if cfg.include_vertices and g.n_profiles <= cfg.vertex_limit:
        for pure in g.pure_profiles():
            starts.append(tuple(Profile.vertex(counts, pure).parts))
    starts.append(tuple(Profile.barycenter(counts).parts))
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.n_random):
        starts.append(tuple(rng.dirichlet(np.ones(s)) for s in counts))
    return starts


def _dedup(reports, radius):
    kept = []
    for r in reports:
        flat = r.profile.flat
        if not any(np.abs(flat - k.profile.flat).max() <= radius for k in kept):
            kept.append(r)
    return kept


def find_equilibria(g: Game, phi: Incentive, cfg: SearchConfig | None = None) -> list[EquilibriumReport]:
    """Multistart search for incentive equilibria.

    Starts are the vertices (for small games), the barycenter and
    Dirichlet(1) draws.  Incentives that can drive the revision map are
    iterated with it; the rest use a damped step along the dynamics.
    Unconverged starts are polished.  Each random start additionally seeds
    a root search inside the open simplex, which reaches equilibria that
    the dynamics flow away from.  Converged reports come first, sorted
    by residual, then (optionally) unconverged ones.
    """
    cfg = cfg or SearchConfig()
    use_map = phi.drives_map(g)
    route = "map" if use_map else "damped"
    done = []
    starts = _starts(g, cfg)
    n_fixed = len(starts) - cfg.n_random
    for k, start in enumerate(starts):
        parts, res, its = _iterate(g, phi, start, cfg, use_map)
        tag = route
        if res > cfg.tol and cfg.polish:
            parts, res = polish(g, phi, parts, cfg.tol)
            tag = route + "+polish"
        if res <= cfg.tol:
            parts, res = _refine(g, phi, parts, res, cfg.tol)
        done.append(make_report(g, phi, _normalize(parts), cfg.tol, start=k, iterations=its, route=tag))
    if cfg.edge_pairs:
        done += _edge_search(g, phi, cfg, use_map, starts, done, n_fixed - 1)
    if cfg.face_roots:
        known = _distinct(done, cfg.dedup)
        for k in range(n_fixed, len(starts)):
            parts, res = face_root(g, phi, starts[k], cfg.tol, known)
            if res <= cfg.tol:
                parts, res = _refine(g, phi, parts, res, cfg.tol)
            rep = make_report(g, phi, parts, cfg.tol, start=k, iterations=0, route="face-root")
            done.append(rep)
            if rep.converged and not any(np.abs(rep.profile.flat - f).max() <= cfg.dedup for f in known):
                known.append(rep.profile.flat)
    good = sorted((r for r in done if r.converged), key=lambda r: (r.residual, r.start))
    out = _dedup(good, cfg.dedup)
    if cfg.keep_unconverged:
        bad = sorted((r for r in done if not r.converged), key=lambda r: (r.residual, r.start))
        out += [r for r in _dedup(bad, cfg.dedup)
                if not any(np.abs(r.profile.flat - k.profile.flat).max() <= cfg.dedup for k in out)]
    return out


def enumerate_pure(g: Game, phi: Incentive, tol: float = 1e-9, limit: int = MAX_PURE_PROFILES) -> list[EquilibriumReport]:
    """One report per pure profile, in row-major order."""
    if g.n_profiles > limit:
        raise ConfigurationError(f"game has {g.n_profiles} pure profiles; enumeration is limited to {limit}")
    out = []
    for pure in g.pure_profiles():
        x = Profile.vertex(g.strategy_counts, pure)
        out.append(make_report(g, phi, x, tol, route="vertex"))
    return out


def symmetry_hypothesis_defect(g: Game, phi: Incentive, region: SymmetricRegion, samples: int, seed: int) -> float:
    """Largest sampled ``|phi_{0, perm_i(a)} - phi_{i, a}|`` over profiles in the region."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = region.sample(rng)
        worst = max(worst, region.defect(phi(g, x)))
    return worst


def find_symmetric_equilibrium(g: Game, phi: Incentive, perms=None, cfg: SearchConfig | None = None) -> EquilibriumReport:
    """Search for an equilibrium inside the symmetric region of ``perms``.

    Refuses with :class:`SymmetryError` when the incentive is not symmetric
    on sampled profiles of the region.
    """
    cfg = cfg or SearchConfig()
    region = SymmetricRegion.for_game(g, perms)
    defect = symmetry_hypothesis_defect(g, phi, region, cfg.hypothesis_samples, cfg.seed)
    if defect > cfg.hypothesis_tol:
        raise SymmetryError(
            f"incentive {phi.label} is not symmetric on the region: sampled defect {defect:.3g} "
            f"exceeds {cfg.hypothesis_tol:g}", defect)
    use_map = phi.drives_map(g)
    route = "symmetric-" + ("map" if use_map else "damped")
    rng = np.random.default_rng(cfg.seed + 1)
    starts = [tuple(region.project(Profile.barycenter(g.strategy_counts).parts))]
    starts += [tuple(region.sample(rng)) for _ in range(cfg.n_random)]
    best = None
    for k, start in enumerate(starts):
        parts, res, its = _iterate(g, phi, start, cfg, use_map, project=region.project)
        tag = route
        if res > cfg.tol and cfg.polish:
            parts, res = polish(g, phi, parts, cfg.tol, region=region)
            tag = route + "+polish"
        parts = tuple(region.project(_normalize(parts)))
        rep = make_report(g, phi, parts, cfg.tol, start=k, iterations=its, route=tag,
                          symmetry_defect=region.defect(parts))
        if best is None or rep.residual < best.residual:
            best = rep
        if rep.converged:
            break
    return best
