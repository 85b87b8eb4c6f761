"""Reading and writing games, profiles, incentive specs, trajectories and reports.

All JSON output is written with sorted keys and ``repr``-exact floats, so
identical inputs give byte-identical documents.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .catalog import ALIASES, builtin_game, _BUILDERS
from .errors import ConfigurationError, GameError
from .game import Game, Profile
from . import incentives as inc

FORMAT_VERSION = 1
CATALOG_ENV = "INCENTIVE_GAMES_CATALOG"
REPORT_COLUMNS = ("start", "converged", "residual", "nash_residual", "interior", "pure", "win_win")
SCHEMAS = ("game", "manifest", "trajectory", "reports")

INCENTIVE_SPECS = (
    "nash", "replicator[:g=neg_u|const:<v>]", "projection", "best-reply", "logit:eta=<v>", "smith", "zero",
    "eps-nash[:eps=<v>]", "su", "ssu[:gamma-dependent]", "altruism", "pareto", "coalition", "margin",
    "rival[:perm=<p0>-<p1>-...][:variant=hurt|margin]", "mean:rho=<file>",
)


def load_schema(name: str) -> dict:
    """One of the published JSON schemas: ``game``, ``manifest``, ``trajectory`` or ``reports``."""
    if name not in SCHEMAS:
        raise KeyError(name)
    text = resources.files(__package__).joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def dumps(doc: Any) -> str:
    """Canonical JSON text: sorted keys, NaN written as null, trailing newline."""
    return json.dumps(_clean(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


# ------------------------------------------------------------------ games


def game_to_dict(g: Game) -> dict:
    strategies = [list(row) for row in g.labels] if g.labels else list(g.strategy_counts)
    return {
        "version": FORMAT_VERSION,
        "name": g.name,
        "players": g.n_players,
        "strategies": strategies,
        "payoffs": g.payoffs.tolist(),
    }


def save_game(g: Game, path: str | os.PathLike | None = None) -> str:
    """Serialize ``g``; writes to ``path`` when given and returns the text."""
    text = dumps(game_to_dict(g))
    if path is not None:
        Path(path).write_text(text)
    return text


def _nested(value, shape, where):
    """Validate a nested list against ``shape``; returns a float array."""
    if not shape:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise GameError(f"{where}: expected a number, got {type(value).__name__}")
        if not math.isfinite(value):
            raise GameError(f"{where}: non-finite payoff {value!r}")
        return float(value)
    if not isinstance(value, list):
        raise GameError(f"{where}: expected a list of {shape[0]} entries")
    if len(value) != shape[0]:
        raise GameError(f"{where}: has {len(value)} entries, expected {shape[0]}")
    return [_nested(v, shape[1:], f"{where}[{k}]") for k, v in enumerate(value)]


def game_from_dict(doc: dict) -> Game:
    if not isinstance(doc, dict):
        raise GameError("game document must be a JSON object")
    unknown = set(doc) - {"version", "name", "players", "strategies", "payoffs"}
    if unknown:
        raise GameError(f"unknown game fields: {', '.join(sorted(unknown))}")
    for key in ("version", "players", "strategies", "payoffs"):
        if key not in doc:
            raise GameError(f"game document is missing {key!r}")
    if doc["version"] != FORMAT_VERSION:
        raise GameError(f"unsupported game format version {doc['version']!r}")
    n = doc["players"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise GameError("'players' must be a positive integer")
    strategies = doc["strategies"]
    if not isinstance(strategies, list) or len(strategies) != n:
        raise GameError(f"'strategies' must list {n} entries")
    counts, labels = [], []
    for i, s in enumerate(strategies):
        if isinstance(s, list):
            if not s or not all(isinstance(v, str) for v in s):
                raise GameError(f"player {i}: strategy labels must be a non-empty list of strings")
            counts.append(len(s))
            labels.append(s)
        elif isinstance(s, int) and not isinstance(s, bool) and s >= 1:
            counts.append(s)
            labels.append(None)
        else:
            raise GameError(f"player {i}: strategy entry must be a positive count or a label list")
    payoffs = doc["payoffs"]
    if not isinstance(payoffs, list) or len(payoffs) != n:
        raise GameError(f"'payoffs' must hold one tensor per player ({n})")
    tensors = [_nested(t, counts, f"player {i} payoffs") for i, t in enumerate(payoffs)]
    if any(v is None for v in labels):
        labels = None if all(v is None for v in labels) else [v or [str(a) for a in range(c)]
                                                             for v, c in zip(labels, counts)]
    return Game(np.array(tensors, dtype=float), labels=labels, name=doc.get("name"))


def load_game(source) -> Game:
    """Read a game from a path, a JSON string, a file object or a parsed dict."""
    if isinstance(source, dict):
        return game_from_dict(source)
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        text = source
    else:
        text = Path(source).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameError(f"game file is not valid JSON: {exc}") from None
    return game_from_dict(doc)


def resolve_game(name: str, stdin=None) -> Game:
    """A builtin name or alias, ``-`` for standard input, a file path, or a catalog-directory entry."""
    if name == "-":
        import sys
        return load_game(stdin if stdin is not None else sys.stdin)
    if name in _BUILDERS or name in ALIASES:
        return builtin_game(name)
    path = Path(name)
    if path.is_file():
        return load_game(path)
    directory = os.environ.get(CATALOG_ENV)
    if directory:
        for cand in (Path(directory) / name, Path(directory) / f"{name}.json"):
            if cand.is_file():
                return load_game(cand)
    known = ", ".join(sorted(_BUILDERS))
    raise GameError(f"unknown game {name!r}: not a builtin ({known}) or a readable file")


# --------------------------------------------------------------- profiles


def parse_profile(text: str, counts: Sequence[int] | None = None) -> Profile:
    """Parse ``"0.5,0.5;1,0"``: players split by ``;``, coordinates by ``,``."""
    parts = []
    for i, chunk in enumerate(text.strip().split(";")):
        try:
            parts.append([float(v) for v in chunk.split(",")])
        except ValueError:
            raise GameError(f"player {i}: cannot parse coordinates {chunk.strip()!r}") from None
    if counts is not None:
        counts = tuple(counts)
        if len(parts) != len(counts):
            raise GameError(f"profile has {len(parts)} players, game has {len(counts)}")
        for i, (p, s) in enumerate(zip(parts, counts)):
            if len(p) != s:
                raise GameError(f"player {i}: {len(p)} coordinates, expected {s}")
    return Profile(parts)


def format_profile(x) -> str:
    return ";".join(",".join(repr(float(v)) for v in p) for p in x)


# -------------------------------------------------------------- incentives


def _number(key, value):
    try:
        return float(value)
    except ValueError:
        raise ConfigurationError(f"{key} must be a number, got {value!r}") from None


def load_switch_rates(path: str | os.PathLike) -> inc.SwitchRateTable:
    """Switch-rate tables from JSON.

    ``{"kind": "constant", "matrix": [[...], ...]}`` or
    ``{"kind": "pairwise", "strategies": s, "row_sum": R}``.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read switch-rate table {str(path)!r}: {exc}") from None
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "constant":
        return inc.SwitchRateTable.constant(doc["matrix"])
    if kind == "pairwise":
        return inc.SwitchRateTable.pairwise(int(doc["strategies"]), float(doc["row_sum"]))
    raise ConfigurationError("switch-rate table needs kind 'constant' or 'pairwise'")


def parse_incentive(spec: str) -> inc.Incentive:
    """Build an incentive from its spec string; see ``INCENTIVE_SPECS``."""
    name, _, rest = spec.strip().partition(":")
    simple = {
        "nash": inc.NASH, "projection": inc.PROJECTION, "best-reply": inc.BEST_REPLY, "smith": inc.SMITH,
        "zero": inc.ZERO, "su": inc.SU, "altruism": inc.ALTRUISM, "pareto": inc.PARETO,
        "coalition": inc.COALITION, "margin": inc.MARGIN,
    }
    if name in simple:
        if rest:
            raise ConfigurationError(f"incentive {name!r} takes no parameters")
        return simple[name]
    if name == "replicator":
        if not rest or rest == "g=neg_u":
            return inc.replicator()
        if rest.startswith("g=const:"):
            return inc.replicator(_number("g", rest[len("g=const:"):]))
        raise ConfigurationError(f"bad replicator translation {rest!r}; use g=neg_u or g=const:<v>")
    if name == "ssu":
        if not rest:
            return inc.ssu()
        if rest == "gamma-dependent":
            return inc.ssu("pure")
        raise ConfigurationError(f"bad ssu option {rest!r}")
    opts = _options(name, rest)
    if name == "logit":
        if set(opts) != {"eta"}:
            raise ConfigurationError("logit needs eta=<v>")
        return inc.logit(_number("eta", opts["eta"]))
    if name == "eps-nash":
        if set(opts) - {"eps"}:
            raise ConfigurationError("eps-nash takes only eps=<v>")
        return inc.epsilon_nash(_number("eps", opts["eps"]) if "eps" in opts else None)
    if name == "rival":
        if set(opts) - {"perm", "variant"}:
            raise ConfigurationError("rival takes perm=<p0>-<p1>-... and variant=hurt|margin")
        perm = None
        if "perm" in opts:
            try:
                perm = [int(v) for v in opts["perm"].replace(",", "-").split("-")]
            except ValueError:
                raise ConfigurationError(f"bad rival permutation {opts['perm']!r}") from None
        return inc.rival(perm, opts.get("variant", "hurt"))
    if name == "mean":
        if set(opts) != {"rho"}:
            raise ConfigurationError("mean needs rho=<file>")
        return inc.mean_dynamics(load_switch_rates(opts["rho"]), spec=spec.strip())
    raise ConfigurationError(f"unknown incentive {spec!r}; valid specs: {', '.join(INCENTIVE_SPECS)}")


def _options(name, rest):
    opts = {}
    for item in filter(None, rest.split(":")):
        key, eq, value = item.partition("=")
        if not eq or not value:
            raise ConfigurationError(f"{name}: option {item!r} is not key=value")
        opts[key] = value
    return opts


# ---------------------------------------------------------------- outputs


@dataclass
class RunManifest:
    """Everything needed to reproduce an output document."""

    game: str
    incentive: str
    command: str
    config: dict = field(default_factory=dict)
    seed: int = 0
    version: str = __version__

    def to_dict(self) -> dict:
        return {"game": self.game, "incentive": self.incentive, "command": self.command,
                "config": _clean(self.config), "seed": self.seed, "version": self.version}

    @classmethod
    def from_dict(cls, doc: dict) -> "RunManifest":
        return cls(doc["game"], doc["incentive"], doc["command"], dict(doc["config"]), int(doc["seed"]),
                   doc["version"])


def trajectory_csv(traj) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t", "player", "strategy", "value"))
    for t, i, a, v in traj.rows():
        w.writerow((repr(float(t)), i, a, repr(v)))
    return buf.getvalue()


def trajectory_json(traj, manifest: RunManifest) -> str:
    return dumps({"manifest": manifest.to_dict(), "trajectory": traj.to_dict()})


def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        win = "" if r.win_win is None else str(r.win_win).lower()
        w.writerow(("" if r.start is None else r.start, str(r.converged).lower(), repr(float(r.residual)),
                    repr(float(r.nash_residual)), str(r.is_interior).lower(), str(r.is_pure).lower(), win))
    return buf.getvalue()


def reports_json(reports, manifest: RunManifest) -> str:
    return dumps({"manifest": manifest.to_dict(), "reports": [r.to_dict() for r in reports]})
