"""Reversible Szilard feedback work, cycle bookkeeping, and Monte Carlo runs.

Work values are dimensionless: information quantities in bits, trajectory
and branch work in units of kT (natural log), with explicit ln 2 factors at
the conversions.  A physical scale factor is applied only by the CLI.

The controller record g selects a branch whose posterior over the
microstate is (p, 1-p).  The branch protocol assigns a posterior-matched
two-level Hamiltonian (gap ln(p/(1-p)) kT) and returns it quasistatically
to the degenerate one; its net work is kT ln 2 [1 - h2(p)] per branch, and
averaging over g gives kT ln 2 times the channel mutual information.
Closing the cycle costs at least the Landauer bound kT ln 2 H(g) to blindly
reset the controller memory, so the net work is never positive.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .channel import BinaryChannel, RoundRecord, apply_noise, binary_entropy, \
    enumerate_rounds, mutual_information
from .errors import SimulationError, ValidationError
from .games import Behaviour, XorGame, game_value
from .optimize import ClassValueReport

LN2 = math.log(2.0)

PROB_ATOL = 1e-12


# ---------------------------------------------------------------------------
# branch protocol (quasistatic)


@dataclass(frozen=True)
class PosteriorBranch:
    """Feedback branch for controller value g.

    ``q0``/``q1`` are the posterior probabilities of microstate 0 and 1;
    ``gap_kt`` is the posterior-matched energy gap (infinite when the
    posterior is deterministic); ``branch_work_bits`` is the net reversible
    branch work in units of kT ln 2.
    """

    g: int
    q0: float
    q1: float
    gap_kt: float
    branch_work_bits: float


def posterior(g: int, c: BinaryChannel) -> PosteriorBranch:
    """Posterior branch of an oriented channel (p >= 1/2) for controller bit g."""
    if g not in (0, 1):
        raise ValidationError(f"controller bit g = {g!r} is not a bit")
    if c.p < 0.5:
        raise ValidationError(
            f"channel p = {c.p!r} < 1/2: orient the channel before feedback")
    p = c.p
    q0, q1 = (p, 1.0 - p) if g == 0 else (1.0 - p, p)
    gap = math.inf if p == 1.0 else math.log(p / (1.0 - p))
    return PosteriorBranch(g=int(g), q0=q0, q1=q1, gap_kt=gap,
                           branch_work_bits=branch_work(q0, q1))


def branch_work(q0: float, q1: float) -> float:
    """Net reversible branch work 1 - H2(q) in units of kT ln 2 (bits)."""
    if q0 < 0.0 or q1 < 0.0 or abs(q0 + q1 - 1.0) > PROB_ATOL:
        raise ValidationError(f"invalid posterior ({q0!r}, {q1!r})")
    return 1.0 - binary_entropy(q0)


def branch_decomposition(q0: float, q1: float,
                         offset_kt: float = 0.0) -> tuple[float, float]:
    """Assignment and return strokes of the branch, in kT.

    The sudden posterior-matched assignment extracts -H_nat(q) - offset and
    the quasistatic return extracts ln 2 + offset, where ``offset_kt`` is an
    arbitrary additive constant of the branch Hamiltonian.  The offset
    cancels in the sum, which equals ln 2 times ``branch_work``.
    """
    if q0 < 0.0 or q1 < 0.0 or abs(q0 + q1 - 1.0) > PROB_ATOL:
        raise ValidationError(f"invalid posterior ({q0!r}, {q1!r})")
    h_nat = 0.0
    for q in (q0, q1):
        if q > 0.0:
            h_nat -= q * math.log(q)
    return -h_nat - offset_kt, LN2 + offset_kt


def trajectory_work(x: int, branch: PosteriorBranch) -> float:
    """Reversible work ln(2 q_g(x)) in kT for the actual microstate x.

    Negative for an unlikely microstate (that branch compresses instead of
    expanding); -inf flags the probability-zero wrong branch of a
    deterministic posterior.
    """
    if x not in (0, 1):
        raise ValidationError(f"microstate x = {x!r} is not a bit")
    q = branch.q0 if x == 0 else branch.q1
    if q == 0.0:
        return -math.inf
    return math.log(2.0 * q)


def feedback_value(c: BinaryChannel) -> float:
    """Average reversible feedback work in bits: the channel mutual information."""
    return mutual_information(c)


def class_ceilings(report: ClassValueReport) -> tuple[float, float, float]:
    """Local/quantum/nonsignalling feedback-work ceilings in bits."""
    return (
        feedback_value(BinaryChannel(report.omega_local)),
        feedback_value(BinaryChannel(report.omega_quantum)),
        feedback_value(BinaryChannel(report.omega_ns)),
    )


# ---------------------------------------------------------------------------
# full-cycle ledger


@dataclass(frozen=True)
class CycleLedger:
    """Feedback work against the Landauer reset bound, in bits.

    The reset cost is reported at the bound (minimal blind reset of the
    uniform controller bit), so the net work is the upper bound
    -h2(p) <= 0, with equality only for a perfect or perfectly wrong
    channel.
    """

    p: float
    i_bits: float
    h_g_bits: float
    h_g_given_x_bits: float
    w_fb_bits: float
    w_reset_bits: float
    w_net_bits: float

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "i_bits": self.i_bits,
            "h_g_bits": self.h_g_bits,
            "h_g_given_x_bits": self.h_g_given_x_bits,
            "w_fb_bits": self.w_fb_bits,
            "w_reset_bits": self.w_reset_bits,
            "w_net_bits": self.w_net_bits,
        }


def cycle_ledger(c: BinaryChannel) -> CycleLedger:
    h_cond = binary_entropy(c.p)
    i = 1.0 - h_cond
    return CycleLedger(p=c.p, i_bits=i, h_g_bits=1.0,
                       h_g_given_x_bits=h_cond, w_fb_bits=i,
                       w_reset_bits=1.0, w_net_bits=-h_cond)


# ---------------------------------------------------------------------------
# memory scope

EPS_STAT = 1e-9
# G is a deterministic function of the transcript, so the plug-in entropies
# satisfy H(M) >= H(G) exactly; EPS_STAT only absorbs float rounding.


def _plugin_entropy(weights) -> float:
    total = math.fsum(weights)
    h = 0.0
    for w in weights:
        if w > 0.0:
            q = w / total
            h -= q * math.log2(q)
    return h


def memory_ledger(records) -> tuple[float, float, bool]:
    """Empirical entropies of the controller bit and the full transcript.

    Returns (h_g, h_m, ok) in bits, where the transcript is
    m = (g, u, v, r, a, b) and ok checks h_m >= h_g - EPS_STAT.  Storing the
    auxiliary round variables can only increase the Landauer reset burden.
    """
    records = list(records)
    if not records:
        raise ValidationError("memory ledger needs a nonempty batch")
    g_counts = Counter(rec.g for rec in records)
    m_counts = Counter((rec.g, rec.u, rec.v, rec.r, rec.a, rec.b)
                       for rec in records)
    h_g = _plugin_entropy(g_counts.values())
    h_m = _plugin_entropy(m_counts.values())
    return h_g, h_m, h_m >= h_g - EPS_STAT


def exact_memory_ledger(game: XorGame, b: Behaviour) -> tuple[float, float, bool]:
    """Memory ledger from the exactly enumerated round distribution."""
    g_w = Counter()
    m_w = Counter()
    for prob, rec in enumerate_rounds(game, b):
        if prob > 0.0:
            g_w[rec.g] += prob
            m_w[(rec.g, rec.u, rec.v, rec.r, rec.a, rec.b)] += prob
    h_g = _plugin_entropy(g_w.values())
    h_m = _plugin_entropy(m_w.values())
    return h_g, h_m, h_m >= h_g - EPS_STAT


# ---------------------------------------------------------------------------
# Monte Carlo simulation


@dataclass(frozen=True)
class SimulationStats:
    """Summary of a simulated batch of feedback rounds."""

    rounds: int
    empirical_p: float
    mean_work_kt: float
    stderr_kt: float
    analytic_work_kt: float
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "empirical_p": self.empirical_p,
            "mean_work_kt": self.mean_work_kt,
            "stderr_kt": self.stderr_kt,
            "analytic_work_kt": self.analytic_work_kt,
            "seed": self.seed,
        }


class _WorkTally:
    """Associative accumulator: counts, sums, and sums of squares."""

    __slots__ = ("n", "hits", "w_sum", "w_sqsum")

    def __init__(self, n=0, hits=0, w_sum=0.0, w_sqsum=0.0):
        self.n = n
        self.hits = hits
        self.w_sum = w_sum
        self.w_sqsum = w_sqsum

    def add(self, correct: np.ndarray, works: np.ndarray):
        self.n += int(correct.size)
        self.hits += int(correct.sum())
        self.w_sum += float(works.sum())
        self.w_sqsum += float((works * works).sum())

    def merge(self, other: "_WorkTally") -> "_WorkTally":
        return _WorkTally(self.n + other.n, self.hits + other.hits,
                          self.w_sum + other.w_sum,
                          self.w_sqsum + other.w_sqsum)

    def stats(self, analytic: float, seed: int) -> SimulationStats:
        mean = self.w_sum / self.n
        if self.n > 1:
            var = max(0.0, (self.w_sqsum - self.n * mean * mean) / (self.n - 1))
            stderr = math.sqrt(var / self.n)
        else:
            stderr = 0.0
        return SimulationStats(rounds=self.n, empirical_p=self.hits / self.n,
                               mean_work_kt=mean, stderr_kt=stderr,
                               analytic_work_kt=analytic, seed=seed)


def _tally_from_stats(s: SimulationStats) -> _WorkTally:
    w_sum = s.mean_work_kt * s.rounds
    var = s.stderr_kt * s.stderr_kt * s.rounds
    w_sqsum = var * (s.rounds - 1) + s.rounds * s.mean_work_kt ** 2
    return _WorkTally(s.rounds, round(s.empirical_p * s.rounds), w_sum, w_sqsum)


def merge_stats(a: SimulationStats, b: SimulationStats) -> SimulationStats:
    """Merge partial round batches; associative up to float rounding."""
    if a.analytic_work_kt != b.analytic_work_kt:
        raise ValidationError("cannot merge stats with different analytic targets")
    return _tally_from_stats(a).merge(_tally_from_stats(b)).stats(
        a.analytic_work_kt, a.seed)


def _sample_categorical(rng, cum: np.ndarray, m: int) -> np.ndarray:
    return np.searchsorted(cum, rng.random(m), side="right")


def _simulate_stream(game, behaviour, m, rng, q_model, noise_delta,
                     keep_records, tally, records):
    cum_uv = np.cumsum(game.mu.reshape(-1))
    cum_uv[-1] = 1.0
    table2 = behaviour.table.reshape(game.nu * game.nv, 4)
    f_flat = np.asarray(game.f).reshape(-1)

    x = rng.integers(0, 2, size=m)
    uv = _sample_categorical(rng, cum_uv, m)
    cum_ab = np.cumsum(table2[uv], axis=1)
    cum_ab[:, -1] = 1.0
    ab = (rng.random((m, 1)) > cum_ab).sum(axis=1)
    a = ab >> 1
    b = ab & 1
    fv = f_flat[uv]
    r = x ^ fv
    g = a ^ b ^ r
    if noise_delta > 0.0:
        g_ctrl = g ^ (rng.random(m) < noise_delta)
    else:
        g_ctrl = g
    correct = g_ctrl == x

    if q_model == 1.0:
        if not correct.all():
            raise SimulationError(
                "controller model p=1 saw a wrong guess; the behaviour does "
                "not win with certainty")
        works = np.full(m, LN2)
    else:
        works = np.where(correct, math.log(2.0 * q_model),
                         math.log(2.0 * (1.0 - q_model)))
    tally.add(correct, works)
    if keep_records:
        u_idx = uv // game.nv
        v_idx = uv % game.nv
        e = g ^ x
        for i in range(m):
            records.append(RoundRecord(
                x=int(x[i]), u=int(u_idx[i]), v=int(v_idx[i]),
                a=int(a[i]), b=int(b[i]), r=int(r[i]),
                g=int(g[i]), e=int(e[i]), won=bool(e[i] == 0)))


def simulate_rounds(game: XorGame, behaviour: Behaviour, n: int, seed: int,
                    p_model: float | None = None, noise_delta: float = 0.0,
                    n_streams: int = 1, keep_records: bool = False):
    """Sample n feedback rounds and tally the extracted trajectory work.

    Each round draws x uniformly, (u, v) from mu, and (a, b) from the
    behaviour with no access to x; the controller sees the compressed bit
    (flipped with probability ``noise_delta`` if nonzero) and runs the
    branch matched to ``p_model`` (default: the exact channel success
    probability).  A mismatched ``p_model`` models a controller with an
    imperfect channel estimate.

    ``n_streams`` partitions the rounds across independently sub-seeded
    streams ((seed, k) for stream k) whose tallies merge associatively.
    Returns SimulationStats, or (SimulationStats, records) when
    ``keep_records`` is set.  Records store the noiseless transcript.
    """
    if n < 1:
        raise ValidationError(f"need n >= 1 rounds, got {n}")
    if n_streams < 1 or n_streams > n:
        raise ValidationError(f"need 1 <= n_streams <= n, got {n_streams}")
    if not 0.0 <= noise_delta <= 0.5:
        raise ValidationError(f"noise delta = {noise_delta!r} outside [0, 1/2]")
    p_true = apply_noise(game_value(game, behaviour), noise_delta)
    q = p_true if p_model is None else float(p_model)
    if not 0.5 <= q <= 1.0:
        raise ValidationError(
            f"controller model p = {q!r} outside [1/2, 1]; orient the "
            "channel before feedback")
    if q == 1.0:
        analytic = LN2 if p_true == 1.0 else -math.inf
    else:
        analytic = p_true * math.log(2.0 * q) \
            + (1.0 - p_true) * math.log(2.0 * (1.0 - q))

    tally = _WorkTally()
    records: list[RoundRecord] = []
    base, extra = divmod(n, n_streams)
    for k in range(n_streams):
        m = base + (1 if k < extra else 0)
        if m == 0:
            continue
        rng = np.random.default_rng([seed, k])
        _simulate_stream(game, behaviour, m, rng, q, noise_delta,
                         keep_records, tally, records)
    stats = tally.stats(analytic, seed)
    if keep_records:
        return stats, records
    return stats


# ---------------------------------------------------------------------------
# expansions, thresholds, sweeps


def small_bias_work(value: float, mode: str = "chsh", order: int = 2) -> float:
    """Leading-order feedback work near random guessing, in kT.

    ``mode="chsh"`` takes the CHSH expression S and returns S^2/32
    (+ S^4/3072 at order 4); ``mode="bias"`` takes the game bias beta and
    returns beta^2/2 (+ beta^4/12).  Useful for |p - 1/2| <= 0.2/8, i.e.
    S <= 0.2 or beta <= 0.05; beyond that use the exact formula.
    """
    if order not in (2, 4):
        raise ValidationError(f"expansion order must be 2 or 4, got {order!r}")
    if mode == "chsh":
        w = value * value / 32.0
        if order == 4:
            w += value ** 4 / 3072.0
    elif mode == "bias":
        w = value * value / 2.0
        if order == 4:
            w += value ** 4 / 12.0
    else:
        raise ValidationError(f"unknown expansion mode {mode!r}")
    return w


def noise_threshold(p_resource: float, omega_q: float,
                    method: str = "closed", tol: float = 1e-9) -> float:
    """Largest controller-noise delta keeping the channel above omega_q.

    Closed form: delta* = (p - omega_q) / (2p - 1).  ``method="bisect"``
    instead bisects apply_noise(p, delta) - omega_q to ``tol`` as an
    independent cross-check.
    """
    p = float(p_resource)
    w = float(omega_q)
    if not 0.5 <= w < p <= 1.0:
        raise ValidationError(
            f"no noise margin: need 1/2 <= omega_q < p_resource, got "
            f"omega_q = {w!r}, p_resource = {p!r}")
    if method == "closed":
        return (p - w) / (2.0 * p - 1.0)
    if method == "bisect":
        lo, hi = 0.0, 0.5  # p_eff(lo) = p > w, p_eff(hi) = 1/2 < w
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if apply_noise(p, mid) > w:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
    raise ValidationError(f"unknown method {method!r}")


def sweep_s_curve(s_values) -> list[tuple[float, float, float]]:
    """Rows (S, work_bits, work_kt) of the CHSH feedback-value curve.

    work_bits = 1 - h2(1/2 + S/8); the kT column multiplies by ln 2.
    """
    rows = []
    for s in s_values:
        s = float(s)
        if not 0.0 <= s <= 4.0:
            raise ValidationError(f"CHSH expression S = {s!r} outside [0, 4]")
        bits = 1.0 - binary_entropy(0.5 + s / 8.0)
        rows.append((s, bits, bits * LN2))
    return rows
