"""Finite two-player XOR games and behaviour tables.

An XOR game asks two non-communicating players questions ``(u, v)`` drawn
from a distribution ``mu`` and is won when the XOR of their output bits
equals a binary predicate ``f(u, v)``.  A behaviour is the conditional
probability table ``P(a, b | u, v)`` describing the players' device; it may
be local, quantum, or merely nonsignalling.  Everything in this module is a
pure function of immutable values.

Index conventions: behaviour tables are stored as ``table[u][v][a][b]`` and
question matrices row-major as ``m[u][v]``.  Probability checks use absolute
tolerance 1e-12; file loaders renormalize only deviations below 1e-9.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError

PROB_ATOL = 1e-12
RENORM_ATOL = 1e-9


def _read_only(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class XorGame:
    """An XOR game: question counts, question distribution and predicate.

    ``mu`` is an ``nu x nv`` matrix of question probabilities summing to 1;
    ``f`` is an ``nu x nv`` matrix of predicate bits.
    """

    name: str
    nu: int
    nv: int
    mu: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        if self.nu < 1 or self.nv < 1:
            raise ValidationError("game: need nu >= 1 and nv >= 1")
        mu = np.array(self.mu, dtype=float)
        f = np.array(self.f)
        if mu.shape != (self.nu, self.nv):
            raise ValidationError(
                f"game field 'mu': shape {mu.shape} != ({self.nu}, {self.nv})")
        if f.shape != (self.nu, self.nv):
            raise ValidationError(
                f"game field 'f': shape {f.shape} != ({self.nu}, {self.nv})")
        if (mu < 0).any():
            u, v = np.argwhere(mu < 0)[0]
            raise ValidationError(f"game field 'mu': negative entry at [{u}][{v}]")
        total = float(mu.sum())
        if abs(total - 1.0) > PROB_ATOL:
            raise ValidationError(
                f"game field 'mu': entries sum to {total!r}, expected 1")
        if not np.isin(f, (0, 1)).all():
            u, v = np.argwhere(~np.isin(f, (0, 1)))[0]
            raise ValidationError(f"game field 'f': entry at [{u}][{v}] not a bit")
        object.__setattr__(self, "mu", _read_only(mu))
        object.__setattr__(self, "f", _read_only(f.astype(np.int64)))


@dataclass(frozen=True, eq=False)
class Behaviour:
    """Conditional probability table P(a,b|u,v), stored as table[u][v][a][b]."""

    nu: int
    nv: int
    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.shape != (self.nu, self.nv, 2, 2):
            raise ValidationError(
                f"behaviour field 'table': shape {t.shape} != "
                f"({self.nu}, {self.nv}, 2, 2)")
        if (t < 0).any():
            u, v, a, b = np.argwhere(t < 0)[0]
            raise ValidationError(
                f"behaviour field 'table': negative entry at [{u}][{v}][{a}][{b}]")
        sums = t.sum(axis=(2, 3))
        bad = np.abs(sums - 1.0) > PROB_ATOL
        if bad.any():
            u, v = np.argwhere(bad)[0]
            raise ValidationError(
                f"behaviour field 'table': slice [{u}][{v}] sums to "
                f"{sums[u, v]!r}, expected 1")
        object.__setattr__(self, "table", _read_only(t))

    @classmethod
    def from_table(cls, table) -> "Behaviour":
        t = np.asarray(table, dtype=float)
        if t.ndim != 4:
            raise ValidationError("behaviour field 'table': need a 4-deep array")
        return cls(nu=t.shape[0], nv=t.shape[1], table=t)


@dataclass(frozen=True, eq=False)
class CorrelatorMatrix:
    """Matrix of correlators E_uv = E[(-1)^(a xor b) | u, v], each in [-1, 1]."""

    e: np.ndarray

    def __post_init__(self):
        e = np.array(self.e, dtype=float)
        if (np.abs(e) > 1.0 + PROB_ATOL).any():
            u, v = np.argwhere(np.abs(e) > 1.0 + PROB_ATOL)[0]
            raise ValidationError(
                f"correlator entry [{u}][{v}] = {e[u, v]!r} outside [-1, 1]")
        object.__setattr__(self, "e", _read_only(e))


# ---------------------------------------------------------------------------
# standard instances


def make_chsh() -> XorGame:
    """The CHSH game: two questions each, uniform mu, predicate f(u,v) = u*v."""
    mu = np.full((2, 2), 0.25)
    f = np.array([[0, 0], [0, 1]])
    return XorGame(name="chsh", nu=2, nv=2, mu=mu, f=f)


def make_chained(n: int) -> XorGame:
    """The N-th chained game.

    Questions run over {0..N-1} on both sides; the referee samples uniformly
    from the 2N pairs (j, j) and (j+1 mod N, j).  All constrained pairs
    demand equal outputs except the wrap-around pair (0, N-1), which demands
    unequal ones.
    """
    if not isinstance(n, int) or n < 2:
        raise ValidationError(f"chained game: need integer N >= 2, got {n!r}")
    mu = np.zeros((n, n))
    f = np.zeros((n, n), dtype=int)
    w = 1.0 / (2 * n)
    for j in range(n):
        mu[j, j] = w
        mu[(j + 1) % n, j] = w
    f[0, n - 1] = 1
    return XorGame(name=f"chained:{n}", nu=n, nv=n, mu=mu, f=f)


# ---------------------------------------------------------------------------
# behaviour constructors


def uniform_behaviour(game: XorGame) -> Behaviour:
    """The maximally mixed behaviour: every output pair has probability 1/4."""
    return Behaviour(game.nu, game.nv, np.full((game.nu, game.nv, 2, 2), 0.25))


def deterministic_behaviour(game: XorGame, amap, bmap) -> Behaviour:
    """Deterministic strategy: player outputs are fixed functions of questions.

    ``amap`` and ``bmap`` list the output bit for each question of Alice and
    Bob respectively.
    """
    amap = list(amap)
    bmap = list(bmap)
    if len(amap) != game.nu:
        raise ValidationError(
            f"amap has length {len(amap)}, game has {game.nu} Alice questions")
    if len(bmap) != game.nv:
        raise ValidationError(
            f"bmap has length {len(bmap)}, game has {game.nv} Bob questions")
    if any(x not in (0, 1) for x in amap) or any(x not in (0, 1) for x in bmap):
        raise ValidationError("strategy maps must contain bits only")
    t = np.zeros((game.nu, game.nv, 2, 2))
    for u in range(game.nu):
        for v in range(game.nv):
            t[u, v, amap[u], bmap[v]] = 1.0
    return Behaviour(game.nu, game.nv, t)


def pr_box(game: XorGame) -> Behaviour:
    """The predicate box: output pairs satisfy a xor b = f(u,v) with certainty.

    For CHSH this is the Popescu-Rohrlich box.  Marginals are uniform on
    every question pair, so the box is nonsignalling, and it wins the game
    with probability 1.
    """
    t = np.zeros((game.nu, game.nv, 2, 2))
    for u in range(game.nu):
        for v in range(game.nv):
            fb = int(game.f[u, v])
            t[u, v, 0, fb] = 0.5
            t[u, v, 1, 1 - fb] = 0.5
    return Behaviour(game.nu, game.nv, t)


def correlator_behaviour(e) -> Behaviour:
    """Behaviour with uniform marginals realizing the given correlator matrix."""
    e = CorrelatorMatrix(e=e).e
    nu, nv = e.shape
    t = np.empty((nu, nv, 2, 2))
    t[:, :, 0, 0] = t[:, :, 1, 1] = (1.0 + e) / 4.0
    t[:, :, 0, 1] = t[:, :, 1, 0] = (1.0 - e) / 4.0
    return Behaviour(nu, nv, t)


def quantum_optimal_chsh() -> Behaviour:
    """The Tsirelson-optimal CHSH behaviour.

    Given as an explicit correlator table with E = +1/sqrt(2) on the three
    aligned question pairs and -1/sqrt(2) on (1, 1), with uniform marginals.
    Its CHSH value is S = 2*sqrt(2), i.e. winning probability cos^2(pi/8).
    """
    c = 1.0 / math.sqrt(2.0)
    return correlator_behaviour([[c, c], [c, -c]])


def mix_with_uniform(b: Behaviour, visibility: float) -> Behaviour:
    """Convex mixture v*b + (1-v)*uniform; the bias scales linearly with v."""
    if not 0.0 <= visibility <= 1.0:
        raise ValidationError(f"visibility {visibility!r} outside [0, 1]")
    t = visibility * b.table + (1.0 - visibility) * 0.25
    return Behaviour(b.nu, b.nv, t)


# ---------------------------------------------------------------------------
# evaluation


def _check_dims(game: XorGame, b: Behaviour):
    if (game.nu, game.nv) != (b.nu, b.nv):
        raise ValidationError(
            f"dimension mismatch: game is {game.nu}x{game.nv}, "
            f"behaviour is {b.nu}x{b.nv}")


def correlators(b: Behaviour) -> CorrelatorMatrix:
    t = b.table
    e = t[:, :, 0, 0] + t[:, :, 1, 1] - t[:, :, 0, 1] - t[:, :, 1, 0]
    return CorrelatorMatrix(e=np.clip(e, -1.0, 1.0))


def win_probabilities(game: XorGame, b: Behaviour) -> np.ndarray:
    """P[a xor b = f(u,v) | u, v] for every question pair, as an nu x nv array."""
    _check_dims(game, b)
    t = b.table
    even = t[:, :, 0, 0] + t[:, :, 1, 1]
    odd = t[:, :, 0, 1] + t[:, :, 1, 0]
    return np.where(game.f == 0, even, odd)


def game_value(game: XorGame, b: Behaviour) -> float:
    """Winning probability of the behaviour.

    Computed as 1 minus the exactly-summed lost mass, which keeps perfect
    and near-perfect values exact in floating point (mu itself only sums
    to 1 within tolerance).
    """
    loss = game.mu * (1.0 - win_probabilities(game, b))
    value = 1.0 - math.fsum(loss.ravel())
    return min(1.0, max(0.0, value))


def bias(game: XorGame, b: Behaviour) -> float:
    """Signed correlator sum beta; satisfies omega = (1 + beta) / 2."""
    _check_dims(game, b)
    sign = np.where(game.f == 0, 1.0, -1.0)
    return float(np.sum(game.mu * sign * correlators(b).e))


def chsh_S(b: Behaviour) -> float:
    """The CHSH expression S = E00 + E01 + E10 - E11 of a 2x2-question behaviour."""
    if (b.nu, b.nv) != (2, 2):
        raise ValidationError(
            f"CHSH expression needs a 2x2-question behaviour, got {b.nu}x{b.nv}")
    e = correlators(b).e
    return float(e[0, 0] + e[0, 1] + e[1, 0] - e[1, 1])


# ---------------------------------------------------------------------------
# JSON files
#
# Game file:      {"name": str, "nu": int, "nv": int, "mu": [[..]], "f": [[..]]}
# Behaviour file: {"nu": int, "nv": int, "table": [[[[..]]]]}
# mu is row-major nu x nv; table is nested in [u][v][a][b] order.


def _json_load(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return data


def _require(data: dict, field: str, path: str):
    if field not in data:
        raise ParseError(f"{path}: missing field '{field}'")
    return data[field]


def _as_grid(raw, shape, field: str, path: str) -> np.ndarray:
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: field '{field}' is not numeric") from exc
    if arr.shape != shape:
        raise ParseError(
            f"{path}: field '{field}' has shape {arr.shape}, expected {shape}")
    return arr


def load_game(path: str) -> XorGame:
    """Load and validate a game file; renormalizes mu only if off by < 1e-9."""
    data = _json_load(path)
    name = _require(data, "name", path)
    nu = _require(data, "nu", path)
    nv = _require(data, "nv", path)
    if not isinstance(nu, int) or not isinstance(nv, int):
        raise ParseError(f"{path}: fields 'nu' and 'nv' must be integers")
    mu = _as_grid(_require(data, "mu", path), (nu, nv), "mu", path)
    f = _as_grid(_require(data, "f", path), (nu, nv), "f", path)
    total = float(mu.sum())
    if abs(total - 1.0) > PROB_ATOL:
        if abs(total - 1.0) < RENORM_ATOL and total > 0:
            mu = mu / total
        else:
            raise ValidationError(
                f"{path}: field 'mu' sums to {total!r}; deviation too large "
                "to renormalize")
    try:
        return XorGame(name=str(name), nu=nu, nv=nv, mu=mu, f=f)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def save_game(game: XorGame, path: str):
    data = {
        "name": game.name,
        "nu": game.nu,
        "nv": game.nv,
        "mu": game.mu.tolist(),
        "f": game.f.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


def load_behaviour(path: str) -> Behaviour:
    """Load and validate a behaviour file, renormalizing slices off by < 1e-9."""
    data = _json_load(path)
    nu = _require(data, "nu", path)
    nv = _require(data, "nv", path)
    if not isinstance(nu, int) or not isinstance(nv, int):
        raise ParseError(f"{path}: fields 'nu' and 'nv' must be integers")
    t = _as_grid(_require(data, "table", path), (nu, nv, 2, 2), "table", path)
    sums = t.sum(axis=(2, 3))
    dev = np.abs(sums - 1.0)
    if (dev > PROB_ATOL).any():
        worst = float(dev.max())
        if worst < RENORM_ATOL and (sums > 0).all():
            t = t / sums[:, :, None, None]
        else:
            u, v = np.argwhere(dev == dev.max())[0]
            raise ValidationError(
                f"{path}: field 'table' slice [{u}][{v}] sums to "
                f"{sums[u, v]!r}; deviation too large to renormalize")
    try:
        return Behaviour(nu=nu, nv=nv, table=t)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def save_behaviour(b: Behaviour, path: str):
    data = {"nu": b.nu, "nv": b.nv, "table": b.table.tolist()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")
