"""Referee encoding and the induced binary symmetric side-information channel.

A uniform thermal bit x is tied to an XOR game by the referee bit
r = x xor f(u,v).  The controller receives only the compressed bit
g = a xor b xor r, which equals x exactly when the game round is won.
Because the error bit e = a xor b xor f(u,v) is independent of x, the map
x -> g is a binary symmetric channel whose success probability is the game
value of the behaviour.  The channel is represented by that single scalar;
asymmetric channels are out of scope and rejected at construction.

Information quantities here stay in bits; work conversions multiply by ln 2
only at the engine boundary.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .errors import ValidationError
from .games import Behaviour, XorGame, game_value

PROB_ATOL = 1e-12


def _check_prob(p: float, name: str) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"{name} = {p!r} outside [0, 1]")
    return p


def _check_bit(x, name: str) -> int:
    if x not in (0, 1):
        raise ValidationError(f"{name} = {x!r} is not a bit")
    return int(x)


@dataclass(frozen=True)
class BinaryChannel:
    """Binary symmetric channel x -> g with success probability p.

    ``flipped`` records whether orientation negated the controller bit.
    """

    p: float
    flipped: bool = False

    def __post_init__(self):
        _check_prob(self.p, "channel success probability")


def binary_entropy(p: float) -> float:
    """h2(p) in bits, with the 0 log 0 := 0 convention."""
    p = _check_prob(p, "binary entropy argument")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def mutual_information(c: BinaryChannel) -> float:
    """I(x : g) = 1 - h2(p) bits; the source and output bits are uniform."""
    return 1.0 - binary_entropy(c.p)


def referee_encode(x: int, u: int, v: int, game: XorGame) -> int:
    """The referee bit r = x xor f(u,v); inverting gives x = r xor f(u,v)."""
    x = _check_bit(x, "x")
    if not 0 <= u < game.nu or not 0 <= v < game.nv:
        raise ValidationError(
            f"question pair ({u}, {v}) out of range for a "
            f"{game.nu}x{game.nv} game")
    return x ^ int(game.f[u, v])


def compress(a: int, b: int, r: int) -> int:
    """The controller bit g = a xor b xor r."""
    return _check_bit(a, "a") ^ _check_bit(b, "b") ^ _check_bit(r, "r")


def induced_channel(game: XorGame, b: Behaviour) -> BinaryChannel:
    """The side-information channel induced by playing the game with b."""
    return BinaryChannel(p=game_value(game, b))


def apply_noise(p: float, delta: float) -> float:
    """Success probability after flipping the controller bit with probability delta.

    p_eff = p (1 - 2 delta) + delta, a contraction of the bias toward 1/2.
    """
    p = _check_prob(p, "p")
    delta = float(delta)
    if not 0.0 <= delta <= 0.5:
        raise ValidationError(f"noise delta = {delta!r} outside [0, 1/2]")
    return p * (1.0 - 2.0 * delta) + delta


def orient(p: float) -> BinaryChannel:
    """Flip the controller bit if that raises the success probability.

    Returns a channel with p' = max(p, 1-p); a tie at 1/2 keeps the
    identity orientation.  Mutual information is invariant under this.
    """
    p = _check_prob(p, "p")
    if p < 0.5:
        return BinaryChannel(p=1.0 - p, flipped=True)
    return BinaryChannel(p=p, flipped=False)


def predicate_channel(success: float) -> BinaryChannel:
    """Channel for any binary prediction task with the given success probability.

    Any task that produces a binary guess for a binary target can feed the
    engine through the same one-time-pad encoding; XOR games are the special
    case where the guess is a xor b and the target is f(u,v).
    """
    return BinaryChannel(p=_check_prob(success, "success"))


# ---------------------------------------------------------------------------
# round transcripts


@dataclass(frozen=True)
class RoundRecord:
    """One sampled round: microstate, questions, outputs, and derived bits."""

    x: int
    u: int
    v: int
    a: int
    b: int
    r: int
    g: int
    e: int
    won: bool

    def __post_init__(self):
        for name in ("x", "a", "b", "r", "g", "e"):
            _check_bit(getattr(self, name), name)
        if self.g != self.a ^ self.b ^ self.r:
            raise ValidationError("round record: g != a xor b xor r")
        if self.e != self.g ^ self.x:
            raise ValidationError("round record: e != g xor x")
        if self.won != (self.e == 0):
            raise ValidationError("round record: won flag inconsistent with e")


def make_round(x: int, u: int, v: int, a: int, b: int, game: XorGame) -> RoundRecord:
    """Assemble a full round record from sampled (x, u, v, a, b)."""
    r = referee_encode(x, u, v, game)
    g = compress(a, b, r)
    e = g ^ x
    return RoundRecord(x=x, u=u, v=v, a=a, b=b, r=r, g=g, e=e, won=e == 0)


def enumerate_rounds(game: XorGame, b: Behaviour):
    """All rounds with their joint probabilities.

    Yields (probability, RoundRecord) over every (x, u, v, a, b) assignment;
    x is uniform and independent of everything else, (u, v) follows mu, and
    (a, b) follows the behaviour.  Zero-probability assignments are kept so
    callers can separate support questions from impossible outputs.
    """
    out = []
    for x in (0, 1):
        for u in range(game.nu):
            for v in range(game.nv):
                for a in (0, 1):
                    for bb in (0, 1):
                        prob = 0.5 * float(game.mu[u, v]) * float(b.table[u, v, a, bb])
                        out.append((prob, make_round(x, u, v, a, bb, game)))
    return out


CSV_HEADER = ["x", "u", "v", "a", "b", "r", "g", "e", "won"]


def rounds_to_csv(records, path: str):
    """Write a round batch as CSV with header x,u,v,a,b,r,g,e,won."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow([rec.x, rec.u, rec.v, rec.a, rec.b, rec.r,
                             rec.g, rec.e, int(rec.won)])
