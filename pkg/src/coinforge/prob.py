"""Probability machinery: product distributions, exact and simulated
acceptance probabilities, the read-once recurrence, Janson bounds,
error reduction, total variation and the Kleitman chain.

Biases follow the coin convention: ``mu_0 = D_{(1-delta)/2}`` and
``mu_1 = D_{(1+delta)/2}``.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from coinforge import design as dsg
from coinforge import formula as fml
from coinforge.errors import FeasibilityError, KindError, ParameterError, PreconditionError

ENUM_LIMIT = 24
MC_BLOCK = 1024
CI_CONFIDENCE = 0.99
# spawn-key prefixes keep independent uses of one master seed apart
MC_STREAM = 0x4D43
SUB_STREAM = 0x5342
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)
# masks of bit positions 0..63 whose index has bit v set (v < 6)
_LOW_VAR = [np.uint64(int("".join("1" if (i >> v) & 1 else "0" for i in range(63, -1, -1)), 2))
            for v in range(6)]
# masks of bit positions 0..63 whose index has popcount u
_LOW_WEIGHT = [np.uint64(sum(1 << i for i in range(64) if bin(i).count("1") == u))
               for u in range(7)]


# -- distributions and seeding ------------------------------------------------

def rng_for(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream ``keys`` under master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(keys))))


def coin_biases(delta: float) -> tuple[float, float]:
    """Bit biases of mu_0 and mu_1."""
    return (1 - delta) / 2, (1 + delta) / 2


@dataclass(frozen=True)
class CoinDist:
    """Product distribution D_alpha^N."""

    alpha: float
    N: int

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.N < 0:
            raise ParameterError("N must be non-negative")

    @classmethod
    def mu(cls, b: int, delta: float, N: int) -> "CoinDist":
        return cls(coin_biases(delta)[b], N)

    def sample(self, seed: int, stream: int = 0) -> np.ndarray:
        return sample_product(self.alpha, self.N, seed, stream)

    def prob_of_weight(self, w: int) -> float:
        """Probability of one fixed string of Hamming weight ``w``."""
        return self.alpha ** w * (1 - self.alpha) ** (self.N - w)


def sample_product(alpha: float, N: int, seed: int, stream: int = 0) -> np.ndarray:
    """N i.i.d. Bernoulli(alpha) bits as a uint8 vector."""
    if not 0 <= alpha <= 1:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    rng = rng_for(seed, stream)
    return (rng.random(N) < alpha).astype(np.uint8)


def weight_sum(counts, n: int, alpha: float) -> float:
    """sum_w counts[w] * alpha^w (1-alpha)^(n-w) with compensated summation."""
    return math.fsum(float(c) * alpha ** w * (1 - alpha) ** (n - w)
                     for w, c in enumerate(counts) if c)


# -- the read-once recurrence -------------------------------------------------

def _log_neg_log1m_exp(L: float) -> float:
    """log(-log(1 - e^L)) for L <= 0, stable when e^L underflows."""
    if L < -20:
        # -log(1-x) = x (1 + x/2 + ...), so its log is L + x/2 + O(x^2)
        return L + math.exp(L) / 2
    # 1 - e^L = -expm1(L) keeps precision as L -> 0
    return math.log(-math.log(-math.expm1(L)))


def _next_log(L_prev: float, f: int) -> float:
    # log p_i with p_i = (1 - p_{i-1})^f
    if L_prev == 0.0:
        return -math.inf
    if L_prev == -math.inf:
        return 0.0
    try:
        return -math.exp(math.log(f) + _log_neg_log1m_exp(L_prev))
    except OverflowError:
        return -math.inf


def readonce_levels(fanins, alpha: float) -> list[float]:
    """log p_i for i = 1..d, where p_i = Pr[F_i = i mod 2] under D_alpha."""
    if not 0 <= alpha <= 1:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    fanins = [int(f) for f in fanins]
    L = fanins[0] * math.log(alpha) if alpha > 0 else -math.inf
    out = [L]
    for f in fanins[1:]:
        L = _next_log(L, f)
        out.append(L)
    return out


def _accept_from_log(L: float, d: int) -> float:
    # Pr[F_d = 1]: p_d itself when d is odd, else 1 - p_d
    if d % 2:
        return math.exp(L)
    return -math.expm1(L)


@dataclass(frozen=True)
class ReadOnceProb:
    alpha: float
    log_p: tuple[float, ...]

    @property
    def p(self) -> tuple[float, ...]:
        return tuple(math.exp(L) for L in self.log_p)

    @property
    def accept(self) -> float:
        return _accept_from_log(self.log_p[-1], len(self.log_p))

    @property
    def reject(self) -> float:
        d = len(self.log_p)
        L = self.log_p[-1]
        return -math.expm1(L) if d % 2 else math.exp(L)


def readonce_prob(spec, alpha: float) -> ReadOnceProb:
    """Exact level probabilities and acceptance of a read-once formula under D_alpha."""
    if not spec.read_once:
        raise KindError(f"readonce_prob needs a read-once spec, got {spec.kind}")
    if spec.relabel is not None:
        raise KindError("random substitution destroys the read-once property")
    return ReadOnceProb(alpha, tuple(readonce_levels(spec.fanins, alpha)))


def _fmt_log(L: float) -> str:
    """Decimal rendering of e^L that survives float underflow."""
    if L == -math.inf:
        return "0"
    if L > -700:
        return repr(math.exp(L))
    t = L / math.log(10)
    e = math.floor(t)
    return f"{10 ** (t - e):.15g}e{e}"


@dataclass
class RecurrenceRow:
    i: int
    beta: int
    log_p: tuple[float, float]
    # per side b: (log lower, log upper) or None when no bound applies
    bounds: tuple = (None, None)
    passed: bool | None = None

    @property
    def p(self) -> tuple[float, float]:
        return math.exp(self.log_p[0]), math.exp(self.log_p[1])

    def side_pass(self, b: int) -> bool | None:
        bd = self.bounds[b]
        if bd is None:
            return None
        lo, hi = bd
        L = self.log_p[b]
        return lo - 1e-12 <= L <= hi + 1e-12

    def to_dict(self) -> dict:
        return {
            "i": self.i,
            "beta": self.beta,
            "p_i_0": _fmt_log(self.log_p[0]),
            "p_i_1": _fmt_log(self.log_p[1]),
            "log_p_i_0": self.log_p[0],
            "log_p_i_1": self.log_p[1],
            "bounds": [None if bd is None else [_fmt_log(bd[0]), _fmt_log(bd[1])]
                       for bd in self.bounds],
            "pass_0": self.side_pass(0),
            "pass_1": self.side_pass(1),
            "pass": self.passed,
        }


@dataclass
class RecurrenceTable:
    kind: str
    d: int
    m: int
    delta: float | None
    fanins: tuple[int, ...]
    rows: list[RecurrenceRow]
    accept: tuple[float, float]
    notes: dict = field(default_factory=dict)

    @property
    def error(self) -> float:
        """max(Pr[F=1 | mu_0], Pr[F=0 | mu_1])."""
        return max(self.accept[0], 1 - self.accept[1])

    @property
    def violations(self) -> list[int]:
        return [r.i for r in self.rows if r.passed is False]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "d": self.d,
            "m": self.m,
            "delta": self.delta,
            "fanins": [str(f) if f > 2 ** 53 else f for f in self.fanins],
            "rows": [r.to_dict() for r in self.rows],
            "accept_mu0": self.accept[0],
            "accept_mu1": self.accept[1],
            "error": self.error,
            "violations": self.violations,
            "notes": self.notes,
        }

    def to_csv(self) -> str:
        lines = ["i,p_i_0,p_i_1,lower_bound,upper_bound,pass"]
        for r in self.rows:
            bd = r.bounds[r.beta]
            lo, hi = ("", "") if bd is None else (_fmt_log(bd[0]), _fmt_log(bd[1]))
            flag = "" if r.passed is None else str(r.passed).lower()
            lines.append(f"{r.i},{_fmt_log(r.log_p[0])},{_fmt_log(r.log_p[1])},{lo},{hi},{flag}")
        return "\n".join(lines) + "\n"


def _log1p_signed(x: float) -> float:
    return math.log1p(x) if x > -1 else -math.inf


def amano_brackets(m: int, d: int, i: int, delta_i: float | None, beta: int):
    """Bracket (log lo, log hi) for both sides of level i, or None."""
    base = -m * math.log(2)
    if i <= d - 2:
        up = (base + _log1p_signed(delta_i * math.exp(-3 * delta_i)),
              base + _log1p_signed(delta_i * math.exp(3 * delta_i)))
        down = (base + _log1p_signed(-delta_i * math.exp(3 * delta_i)),
                base + _log1p_signed(-delta_i * math.exp(-3 * delta_i)))
    elif i == d - 1:
        up = (-fml.C1 * m + fml.C2, 0.0)
        down = (-math.inf, -fml.C1 * m - fml.C2)
    else:
        return _final_brackets(beta, 0.05)
    # indexed by side b; side beta gets the upper bracket
    return (down, up) if beta == 1 else (up, down)


def _final_brackets(beta: int, err: float):
    # error <= err: Pr[F=1 | mu_0] <= err and Pr[F=1 | mu_1] >= 1 - err
    small = (-math.inf, math.log(err))
    large = (math.log1p(-err), 0.0)
    # p_d^(b) = Pr[F_d = beta]; with beta = 1 that is the acceptance itself
    return (small, large) if beta == 1 else (large, small)


def recurrence_from_fanins(fanins, delta: float, kind: str = "AMANO",
                           C0: float | None = None) -> RecurrenceTable:
    """Recurrence table under mu_0 and mu_1 for a read-once formula."""
    fanins = tuple(int(f) for f in fanins)
    d, m = len(fanins), fanins[0]
    a0, a1 = coin_biases(delta)
    L0, L1 = readonce_levels(fanins, a0), readonce_levels(fanins, a1)
    dp = fml.DeltaParams.compute(delta, m, d) if kind == "AMANO" else None
    rows = []
    for i in range(1, d + 1):
        beta = i % 2
        if kind == "AMANO":
            di = dp.deltas[i - 1] if i <= d - 2 else None
            bounds = amano_brackets(m, d, i, di, beta)
        elif i == d:
            bounds = _final_brackets(beta, 0.05)
        else:
            bounds = (None, None)
        row = RecurrenceRow(i, beta, (L0[i - 1], L1[i - 1]), bounds)
        sides = [row.side_pass(b) for b in (0, 1)]
        row.passed = None if None in sides else all(sides)
        rows.append(row)
    acc = (_accept_from_log(L0[-1], d), _accept_from_log(L1[-1], d))
    notes = {}
    if kind == "OW2":
        notes["union_bound_mu0"] = fanins[1] * math.exp(L0[0]) if d == 2 else None
        notes["error_threshold_analytic"] = 0.05
        if C0 is not None:
            notes["error_threshold_union_bound"] = math.exp(-C0)
    if kind == "AMANO":
        notes["deltas"] = list(dp.deltas)
        notes["small_delta_proviso"] = bool(dp.deltas and dp.deltas[0] <= 0.1)
    return RecurrenceTable(kind, d, m, delta, fanins, rows, acc, notes)


def recurrence_table(spec) -> RecurrenceTable:
    """Recurrence rows for a read-once spec with a coin bias."""
    if not spec.read_once:
        raise KindError(f"recurrence needs a read-once spec, got {spec.kind}")
    if spec.delta is None:
        raise ParameterError("recurrence brackets need delta")
    return recurrence_from_fanins(spec.fanins, spec.delta, spec.kind, spec.C0)


def delta_for_m(m: int, d: int) -> float:
    """A bias for which Amano's rule yields exactly this m."""
    return ((m - 0.5) * math.log(2)) ** (-(d - 1))


@dataclass
class SweepEntry:
    m: int
    delta: float
    delta_1: float
    violations: list[int]
    table: RecurrenceTable

    @property
    def excused(self) -> bool:
        # the brackets are only claimed for small enough delta
        return not self.violations or self.delta_1 > 0.1

    def to_dict(self) -> dict:
        return {"m": self.m, "delta": self.delta, "delta_1": self.delta_1,
                "violations": self.violations, "excused": self.excused}


def amano_bracket_sweep(d: int, ms) -> list[SweepEntry]:
    """Check the level brackets i <= d-2 analytically for each m."""
    out = []
    for m in ms:
        delta = delta_for_m(m, d)
        if fml.amano_m(delta, d) != m:
            raise AssertionError(f"delta_for_m({m}) does not reproduce m")
        table = recurrence_from_fanins(fml.amano_fanins(m, d), delta, "AMANO")
        bad = [r.i for r in table.rows if r.i <= d - 2 and r.passed is False]
        out.append(SweepEntry(m, delta, m * delta, bad, table))
    return out


# -- packed truth tables ------------------------------------------------------

def _words(n: int) -> int:
    return max(1, (1 << n) >> 6)


def _valid_mask(n: int) -> np.uint64:
    return _ALL if n >= 6 else np.uint64((1 << (1 << n)) - 1)


def var_table(v: int, n: int) -> np.ndarray:
    """Packed truth table of x_v over n variables (bit x of the table is x's value)."""
    W = _words(n)
    if v < 6:
        return np.full(W, _LOW_VAR[v] & _valid_mask(n), dtype=np.uint64)
    idx = np.arange(W, dtype=np.uint64)
    return np.where((idx >> np.uint64(v - 6)) & np.uint64(1), _ALL, np.uint64(0)).astype(np.uint64)


def packed_weight_counts(T: np.ndarray, n: int) -> list[int]:
    """a_w = number of x with T(x) = 1 and |x| = w."""
    T = np.asarray(T, dtype=np.uint64)
    if n < 6:
        T = T & _valid_mask(n)
    high = np.bitwise_count(np.arange(T.size, dtype=np.uint64)).astype(np.int64)
    counts = np.zeros(n + 1, dtype=np.int64)
    for u in range(min(n, 6) + 1):
        c = np.bitwise_count(T & _LOW_WEIGHT[u]).astype(np.int64)
        if not c.any():
            continue
        per = np.bincount(high, weights=c, minlength=n - min(n, 6) + 1)
        counts[u:u + per.size] += np.rint(per).astype(np.int64)
    return [int(c) for c in counts]


def unpack(T: np.ndarray, n: int) -> np.ndarray:
    """Packed table -> bool vector of length 2^n."""
    bits = np.unpackbits(np.asarray(T, dtype="<u8").view(np.uint8), bitorder="little")
    return bits[:1 << n].astype(bool)


def pack(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=bool)
    n = bits.size.bit_length() - 1
    padded = np.zeros(_words(n) * 64, dtype=bool)
    padded[:bits.size] = bits
    return np.packbits(padded, bitorder="little").view("<u8").astype(np.uint64)


class _PackedEvaluator:
    def __init__(self, n: int):
        if n > ENUM_LIMIT:
            raise FeasibilityError(f"exact enumeration limited to {ENUM_LIMIT} variables, got {n}")
        self.n = n
        self._vars: dict[int, np.ndarray] = {}

    def var(self, v: int) -> np.ndarray:
        t = self._vars.get(v)
        if t is None:
            t = self._vars[v] = var_table(v, self.n)
        return t

    def node(self, level: int, sub: np.ndarray) -> np.ndarray:
        """Table of the depth-``level`` subformula whose leaf labels are ``sub``."""
        is_and = level % 2 == 1
        acc = np.full(_words(self.n), _ALL if is_and else 0, dtype=np.uint64)
        for child in sub:
            t = self.var(int(child)) if level == 1 else self.node(level - 1, child)
            if is_and:
                acc &= t
            else:
                acc |= t
        return acc


def truth_table_of(spec) -> np.ndarray:
    """Packed truth table of an evaluable spec with at most 24 variables."""
    spec.require_evaluable()
    ev = _PackedEvaluator(spec.variable_count)
    return ev.node(spec.d, spec.leaf_table)


def enumerate_prob(spec, alpha: float) -> float:
    """Exact Pr[F(x) = 1] under D_alpha by full enumeration (n <= 24)."""
    if not 0 <= alpha <= 1:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    n = spec.variable_count
    if n > ENUM_LIMIT:
        raise FeasibilityError(f"exact enumeration limited to {ENUM_LIMIT} variables, got {n}")
    return weight_sum(packed_weight_counts(truth_table_of(spec), n), n, alpha)


# -- Monte Carlo --------------------------------------------------------------

def hoeffding_halfwidth(trials: int, confidence: float = CI_CONFIDENCE) -> float:
    return math.sqrt(math.log(2 / (1 - confidence)) / (2 * trials))


def resolve_threads(threads=None) -> int:
    """Worker count: explicit value, then COINFORGE_THREADS, then the CPU count."""
    if threads in (None, "auto"):
        threads = os.environ.get("COINFORGE_THREADS", "auto")
    if threads == "auto":
        return os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ParameterError("threads must be >= 1")
    return threads


def _mc_block(spec, alpha: float, size: int, seed: int, index: int) -> int:
    rng = rng_for(seed, MC_STREAM, index)
    if spec.read_once and spec.relabel is None:
        vals = fml.lazy_readonce_sample(spec.fanins, spec.d, size, alpha, rng)
    else:
        X = rng.random((size, spec.variable_count)) < alpha
        vals = fml.evaluate_batch(spec, X)
    return int(np.count_nonzero(vals))


def mc_estimate(spec, alpha: float, trials: int, seed: int, threads=None) -> tuple[float, float]:
    """(p_hat, 99% Hoeffding half-width); independent of the worker count."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if not 0 <= alpha <= 1:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    spec.require_evaluable()
    sizes = [min(MC_BLOCK, trials - s) for s in range(0, trials, MC_BLOCK)]
    workers = min(resolve_threads(threads), len(sizes))
    if workers == 1:
        hits = sum(_mc_block(spec, alpha, z, seed, b) for b, z in enumerate(sizes))
    else:
        with ThreadPoolExecutor(workers) as pool:
            hits = sum(pool.map(lambda bz: _mc_block(spec, alpha, bz[1], seed, bz[0]),
                                enumerate(sizes)))
    return hits / trials, hoeffding_halfwidth(trials)


# -- Janson -------------------------------------------------------------------

@dataclass(frozen=True)
class JansonBound:
    product_lower: float
    delta_term: float
    upper: float
    hypothesis: bool
    warning: str | None = None

    def contains(self, p: float, tol: float = 1e-12) -> bool:
        return self.product_lower - tol <= p <= self.upper + tol

    def to_dict(self) -> dict:
        return {"product_lower": self.product_lower, "delta_term": self.delta_term,
                "upper": self.upper, "hypothesis": self.hypothesis, "warning": self.warning}


def janson_bounds(child_zero_probs, Delta: float) -> JansonBound:
    """Sandwich prod q_i <= Pr[all children 0] <= prod q_i * exp(2 Delta)."""
    qs = [float(q) for q in child_zero_probs]
    if any(not 0 <= q <= 1 for q in qs):
        raise ParameterError("child probabilities must lie in [0, 1]")
    if Delta < 0:
        raise ParameterError("Delta must be non-negative")
    hyp = all(q >= 0.5 for q in qs)
    warn = None
    if not hyp:
        warn = "hypothesis max Pr[C_i = 1] <= 1/2 fails; the upper bound is not guaranteed"
        warnings.warn(warn, stacklevel=2)
    if any(q == 0 for q in qs):
        lower = 0.0
    else:
        lower = math.exp(math.fsum(math.log(q) for q in qs))
    return JansonBound(lower, Delta, lower * math.exp(2 * Delta), hyp, warn)


def _children(spec, level: int) -> np.ndarray:
    # leaf tables of the children of the first depth-`level` subformula
    if not 2 <= level <= spec.d:
        raise ParameterError(f"level must lie in [2, {spec.d}]")
    table = spec.leaf_table
    return table[(0,) * (spec.d - level)]


def _local_prob(sub: np.ndarray, level: int, alpha: float, target: int,
                other: np.ndarray | None = None) -> float:
    # Pr[child = target (and other = target)] over the union of their variables
    vs = np.unique(sub if other is None else np.concatenate([sub.ravel(), other.ravel()]))
    if vs.size > ENUM_LIMIT:
        raise FeasibilityError(f"pair reads {vs.size} > {ENUM_LIMIT} variables")
    ev = _PackedEvaluator(int(vs.size))
    local = np.searchsorted(vs, sub)
    T = ev.node(level, local)
    if target == 0:
        T = ~T
    if other is not None:
        U = ev.node(level, np.searchsorted(vs, other))
        T = T & (U if target == 1 else ~U)
    return weight_sum(packed_weight_counts(T, vs.size), int(vs.size), alpha)


@dataclass(frozen=True)
class DeltaResult:
    value: float
    mode: str
    analytic_bound: float | None = None
    census: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        return {"value": self.value, "mode": self.mode, "analytic_bound": self.analytic_bound,
                "census": None if self.census is None else list(self.census)}


def delta_compute(spec, level: int, alpha: float, mode: str = "closed_form") -> DeltaResult:
    """Correlation term over variable-sharing sibling pairs of a depth-``level`` gate."""
    if spec.kind != "DERAND":
        # read-once siblings never share variables
        return DeltaResult(0.0, mode)
    if mode == "closed_form":
        if level != 2:
            raise FeasibilityError("closed form needs level 2 (children are ANDs)")
        if not spec.designs:
            raise FeasibilityError("designs for this formula were not built")
        m, f2 = spec.fanins[0], spec.fanins[1]
        census = dsg.intersection_census(spec.designs[0], f2)
        # two ANDs of size m sharing r variables both fire w.p. alpha^(2m - r)
        val = math.fsum(c * alpha ** (2 * m - r) for r, c in enumerate(census) if r and c)
        bound = None
        if spec.eta is not None:
            bound = 4 * spec.eta * alpha ** (2 * m) * f2 ** 2
        return DeltaResult(val, mode, bound, tuple(census))
    if mode == "enumerate":
        kids = _children(spec, level)
        target = 1 - level % 2
        sets = [set(np.unique(k).tolist()) for k in kids]
        terms = []
        for j in range(len(kids)):
            for k in range(j + 1, len(kids)):
                if sets[j] & sets[k]:
                    terms.append(_local_prob(kids[j], level - 1, alpha, target, kids[k]))
        return DeltaResult(math.fsum(terms), mode)
    raise ParameterError(f"unknown mode {mode!r}")


@dataclass
class JansonCheck:
    alpha: float
    exact: float
    bound: JansonBound
    delta_closed: float
    delta_enum: float

    @property
    def inside(self) -> bool:
        return self.bound.contains(self.exact)

    @property
    def delta_agree(self) -> bool:
        return abs(self.delta_closed - self.delta_enum) <= 1e-12

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "exact_all_zero": self.exact, "bound": self.bound.to_dict(),
                "delta_closed_form": self.delta_closed, "delta_enumerate": self.delta_enum,
                "inside": self.inside, "delta_agree": self.delta_agree}


def janson_check(spec, alpha: float) -> JansonCheck:
    """Exact Pr[Gamma_2 = 0] against the sandwich from exact children and Delta."""
    if spec.d != 2:
        raise KindError("janson_check handles depth-2 formulas")
    kids = _children(spec, 2)
    zero = [1 - _local_prob(k, 1, alpha, 1) for k in kids]
    closed = delta_compute(spec, 2, alpha, "closed_form").value if spec.kind == "DERAND" else 0.0
    enum = delta_compute(spec, 2, alpha, "enumerate").value if spec.kind == "DERAND" else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bound = janson_bounds(zero, enum)
    exact = 1 - enumerate_prob(spec, alpha)
    return JansonCheck(alpha, exact, bound, closed, enum)


# -- error reduction, TV, Kleitman ---------------------------------------------

def error_reduction_t(epsilon: float, eta_adv: float) -> int:
    """Smallest odd t with exp(-2 t eta^2) <= epsilon."""
    if not 0 < epsilon < 0.5:
        raise ParameterError("epsilon must lie in (0, 1/2)")
    if not 0 < eta_adv <= 0.5:
        raise ParameterError("eta_adv must lie in (0, 1/2]")
    t = math.ceil(math.log(1 / epsilon) / (2 * eta_adv ** 2) - 1e-12)
    t = max(t, 1)
    return t if t % 2 else t + 1


def majority_failure_rate(p_success: float, t: int, trials: int, seed: int) -> float:
    """Frequency with which Maj_t of independent blocks (each right w.p. p) is wrong."""
    if t < 1 or t % 2 == 0:
        raise ParameterError("t must be a positive odd integer")
    rng = rng_for(seed, MC_STREAM)
    right = rng.binomial(t, p_success, size=trials)
    return float(np.count_nonzero(right <= t // 2)) / trials


def majority_failure_exact(p_success: float, t: int) -> float:
    return float(binom.cdf(t // 2, t, p_success))


@dataclass(frozen=True)
class TVResult:
    delta_prime: float
    N: int
    tv: float
    scale: float

    @property
    def ratio(self) -> float | None:
        return self.tv / self.scale if self.scale > 0 else None

    def to_dict(self) -> dict:
        return {"delta_prime": self.delta_prime, "N": self.N, "tv": self.tv,
                "sqrt_N_delta": self.scale, "ratio": self.ratio}


def tv_distance(delta_prime: float, N_prime: int) -> TVResult:
    """Exact TV between D_{(1-d')/2}^N and D_{(1+d')/2}^N via the weight marginal."""
    if not 0 <= delta_prime <= 1:
        raise ParameterError("delta_prime must lie in [0, 1]")
    if not 1 <= N_prime <= 10 ** 6:
        raise ParameterError("N_prime must lie in [1, 10^6]")
    w = np.arange(N_prime + 1)
    p1, p2 = coin_biases(delta_prime)
    with np.errstate(divide="ignore"):
        l1 = binom.logpmf(w, N_prime, p1)
        l2 = binom.logpmf(w, N_prime, p2)
    diff = np.abs(np.exp(l1) - np.exp(l2))
    tv = min(1.0, 0.5 * math.fsum(diff.tolist()))
    return TVResult(delta_prime, N_prime, tv, math.sqrt(N_prime) * delta_prime)


def _bits(T) -> np.ndarray:
    bits = np.asarray(getattr(T, "bits", T), dtype=bool)
    if bits.ndim != 1 or bits.size == 0 or bits.size & (bits.size - 1):
        raise ParameterError("truth table length must be a power of two")
    return bits


def is_monotone(T) -> bool:
    bits = _bits(T)
    n = bits.size.bit_length() - 1
    for i in range(n):
        v = bits.reshape(-1, 2, 1 << i)
        if np.any(v[:, 0, :] & ~v[:, 1, :]):
            return False
    return True


def point_weights(n: int, alpha: float) -> np.ndarray:
    """Pr[x] under D_alpha for every x in {0,1}^n, in table order."""
    w = np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)
    return alpha ** w * (1 - alpha) ** (n - w)


@dataclass
class KleitmanReport:
    alpha: float
    p_f: float
    p_g1: float
    p_f_given_g0: float | None
    p_f_given_g1: float | None

    @property
    def holds(self) -> bool:
        ok = True
        if self.p_f_given_g0 is not None:
            ok &= self.p_f_given_g0 <= self.p_f + 1e-12
        if self.p_f_given_g1 is not None:
            ok &= self.p_f <= self.p_f_given_g1 + 1e-12
        return ok

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "p_f": self.p_f, "p_g": self.p_g1,
                "p_f_given_g0": self.p_f_given_g0, "p_f_given_g1": self.p_f_given_g1,
                "vacuous_g0": self.p_f_given_g0 is None,
                "vacuous_g1": self.p_f_given_g1 is None, "holds": self.holds}


def kleitman_check(F, G, alpha: float) -> KleitmanReport:
    """Pr[F | G=0] <= Pr[F] <= Pr[F | G=1] for monotone increasing F, G."""
    f, g = _bits(F), _bits(G)
    if f.size != g.size:
        raise ParameterError("F and G must have the same arity")
    n = f.size.bit_length() - 1
    if n > 20:
        raise FeasibilityError("kleitman_check handles n <= 20")
    for name, t in (("F", f), ("G", g)):
        if not is_monotone(t):
            raise PreconditionError(f"{name} monotone", "truth table is not monotone increasing")
    w = point_weights(n, alpha)
    pf = math.fsum(w[f].tolist())
    pg = math.fsum(w[g].tolist())
    pfg = math.fsum(w[f & g].tolist())
    given1 = pfg / pg if pg > 0 else None
    given0 = (pf - pfg) / (1 - pg) if pg < 1 else None
    return KleitmanReport(alpha, pf, pg, given0, given1)


def monotone_functions(n: int) -> list[np.ndarray]:
    """All monotone increasing truth tables on n <= 4 bits."""
    if n > 4:
        raise FeasibilityError("monotone enumeration limited to n <= 4")
    size = 1 << n
    idx = np.arange(1 << size, dtype=np.int64)
    tables = ((idx[:, None] >> np.arange(size)) & 1).astype(bool)
    keep = np.ones(len(tables), dtype=bool)
    for i in range(n):
        v = tables.reshape(len(tables), -1, 2, 1 << i)
        keep &= ~np.any(v[:, :, 0, :] & ~v[:, :, 1, :], axis=(1, 2))
    return [t for t in tables[keep]]


def weight_slice_prob(spec, w: int) -> float:
    """Exact Pr[F(x) = 1] for x uniform among strings of weight w (n <= 24)."""
    n = spec.variable_count
    if not 0 <= w <= n:
        raise ParameterError(f"weight must lie in [0, {n}]")
    counts = packed_weight_counts(truth_table_of(spec), n)
    return counts[w] / math.comb(n, w)


def mc_weight_slice(spec, w: int, trials: int, seed: int) -> tuple[float, float]:
    """Simulated Pr[F(x) = 1] for x uniform of weight w, with the 99% half-width."""
    n = spec.variable_count
    if not 0 <= w <= n:
        raise ParameterError(f"weight must lie in [0, {n}]")
    hits = 0
    for b, s in enumerate(range(0, trials, MC_BLOCK)):
        size = min(MC_BLOCK, trials - s)
        rng = rng_for(seed, MC_STREAM, b)
        # ranks of uniform keys give a uniform weight-w subset per row
        X = np.argsort(rng.random((size, n)), axis=1) < w
        hits += int(np.count_nonzero(fml.evaluate_batch(spec, X)))
    return hits / trials, hoeffding_halfwidth(trials)
