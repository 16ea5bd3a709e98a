"""F2 polynomials of Boolean functions, profiles and degree oracles.

Truth tables are bool vectors of length 2^n; entry x holds f(x) where bit i
of x is the variable x_{i+1}. The ANF coefficient at index S is the
coefficient of the monomial prod_{i in S} x_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import binom

from coinforge import prob
from coinforge.errors import FeasibilityError, ParameterError, PreconditionError

MAX_N = 24
EXACT_COUNTING_N = 1000


def _popcounts(n: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class TruthTable:
    n: int
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if not 0 <= self.n <= MAX_N:
            raise ParameterError(f"arity must lie in [0, {MAX_N}]")
        if bits.shape != (1 << self.n,):
            raise ParameterError(f"truth table must have length 2^{self.n}")
        object.__setattr__(self, "bits", bits)

    def __eq__(self, other):
        return isinstance(other, TruthTable) and self.n == other.n and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.n, self.bits.tobytes()))

    def __and__(self, other: "TruthTable") -> "TruthTable":
        return TruthTable(self.n, self.bits & other.bits)

    def __xor__(self, other: "TruthTable") -> "TruthTable":
        return TruthTable(self.n, self.bits ^ other.bits)

    def __call__(self, x) -> int:
        idx = sum(int(b) << i for i, b in enumerate(x))
        return int(self.bits[idx])

    @classmethod
    def from_function(cls, n: int, f) -> "TruthTable":
        xs = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1)
        return cls(n, np.array([bool(f(tuple(x))) for x in xs]))

    @classmethod
    def from_int(cls, n: int, code: int) -> "TruthTable":
        """Table whose entry x is bit x of ``code``."""
        return cls(n, np.array([(code >> x) & 1 for x in range(1 << n)], dtype=bool))

    @classmethod
    def of_weight(cls, n: int, accept) -> "TruthTable":
        """Symmetric function accepting exactly the weights in ``accept``."""
        return cls(n, np.isin(_popcounts(n), list(accept)))

    @classmethod
    def const(cls, n: int, value: int) -> "TruthTable":
        return cls(n, np.full(1 << n, bool(value)))

    @classmethod
    def dictator(cls, n: int, i: int = 0) -> "TruthTable":
        return cls(n, (np.arange(1 << n) >> i) & 1)

    @classmethod
    def threshold(cls, n: int, k: int) -> "TruthTable":
        """1 iff |x| >= k."""
        return cls(n, _popcounts(n) >= k)

    @classmethod
    def maj(cls, n: int) -> "TruthTable":
        """1 iff |x| > n/2."""
        return cls(n, 2 * _popcounts(n) > n)

    @classmethod
    def parity(cls, n: int) -> "TruthTable":
        return cls(n, _popcounts(n) % 2 == 1)

    @property
    def monotone(self) -> bool:
        return prob.is_monotone(self.bits)


@dataclass(frozen=True, eq=False)
class ANF:
    n: int
    coeffs: np.ndarray

    @property
    def degree(self) -> int:
        """Largest monomial size; the zero polynomial gets 0 like other constants."""
        nz = np.flatnonzero(self.coeffs)
        if nz.size == 0:
            return 0
        return int(_popcounts(self.n)[nz].max())

    @property
    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def monomials(self) -> list[tuple[int, ...]]:
        return [tuple(i for i in range(self.n) if (s >> i) & 1) for s in np.flatnonzero(self.coeffs)]

    def truth_table(self) -> TruthTable:
        return TruthTable(self.n, moebius(self.coeffs))


def moebius(bits) -> np.ndarray:
    """Moebius transform over F2 along the last axis (an involution)."""
    a = np.array(bits, dtype=bool)
    size = a.shape[-1]
    n = size.bit_length() - 1
    lead = a.shape[:-1]
    for i in range(n):
        v = a.reshape(lead + (-1, 2, 1 << i))
        v[..., 1, :] ^= v[..., 0, :]
    return a


def anf_transform(T: TruthTable) -> ANF:
    return ANF(T.n, moebius(T.bits))


def degree(T: TruthTable) -> int:
    return anf_transform(T).degree


def degrees(tables: np.ndarray) -> np.ndarray:
    """F2 degree of each row of a (k, 2^n) bool array."""
    coeffs = moebius(tables)
    n = tables.shape[-1].bit_length() - 1
    return (coeffs * _popcounts(n)).max(axis=-1)


def weight_counts(T: TruthTable) -> list[int]:
    """a_w = #{x : T(x) = 1, |x| = w}."""
    return np.bincount(_popcounts(T.n)[T.bits], minlength=T.n + 1).tolist()


def profile(T: TruthTable, alpha: float) -> float:
    if not 0 <= alpha <= 1:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    return prob.weight_sum(weight_counts(T), T.n, alpha)


def _solves(p0: float, p1: float, epsilon: float) -> bool:
    # inclusive comparisons; the slack absorbs rounding in (1 +- delta)/2
    return p0 <= epsilon + 1e-12 and p1 >= 1 - epsilon - 1e-12


def solves_coin(T: TruthTable, delta: float, epsilon: float) -> bool:
    if not 0 < delta < 1:
        raise ParameterError("delta must lie in (0, 1)")
    if not 0 < epsilon < 0.5:
        raise ParameterError("epsilon must lie in (0, 1/2)")
    a0, a1 = prob.coin_biases(delta)
    return _solves(profile(T, a0), profile(T, a1), epsilon)


# -- minimum-degree oracles ---------------------------------------------------

EXHAUSTIVE_N = 4
SYMMETRIC_N = 20
_CHUNK = 1 << 16


def _all_tables(n: int) -> np.ndarray:
    size = 1 << n
    codes = np.arange(1 << size, dtype=np.int64)
    return ((codes[:, None] >> np.arange(size)) & 1).astype(bool)


@dataclass(frozen=True)
class DegreeSearch:
    n: int
    delta: float
    epsilon: float
    mode: str
    min_degree: int | None
    qualifying: int
    searched: int

    def to_dict(self) -> dict:
        return {"n": self.n, "delta": self.delta, "epsilon": self.epsilon, "mode": self.mode,
                "min_degree": "none" if self.min_degree is None else self.min_degree,
                "qualifying": self.qualifying, "searched": self.searched}


def _lucas(n: int) -> np.ndarray:
    # L[k, j] = C(k, j) mod 2 = [j & k == j]
    k = np.arange(n + 1)
    return ((k[None, :] & k[:, None]) == k[None, :]).astype(np.int64)


def degree_search(n: int, delta: float, epsilon: float, mode: str = "exhaustive") -> DegreeSearch:
    """Minimum F2 degree over n-bit functions solving the (delta, epsilon) coin problem."""
    if not 0 < delta < 1 or not 0 < epsilon < 0.5:
        raise ParameterError("need delta in (0, 1) and epsilon in (0, 1/2)")
    a0, a1 = prob.coin_biases(delta)
    if mode == "exhaustive":
        if not 0 <= n <= EXHAUSTIVE_N:
            raise FeasibilityError(f"exhaustive mode handles n <= {EXHAUSTIVE_N}")
        tables = _all_tables(n)
        p0 = tables @ prob.point_weights(n, a0)
        p1 = tables @ prob.point_weights(n, a1)
        ok = (p0 <= epsilon + 1e-12) & (p1 >= 1 - epsilon - 1e-12)
        best = int(degrees(tables[ok]).min()) if ok.any() else None
        return DegreeSearch(n, delta, epsilon, mode, best, int(ok.sum()), len(tables))
    if mode == "symmetric":
        if not 0 <= n <= SYMMETRIC_N:
            raise FeasibilityError(f"symmetric mode handles n <= {SYMMETRIC_N}")
        w = np.arange(n + 1)
        P0 = binom.pmf(w, n, a0)
        P1 = binom.pmf(w, n, a1)
        L = _lucas(n)
        total = 1 << (n + 1)
        best, count = None, 0
        for start in range(0, total, _CHUNK):
            codes = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
            V = (codes[:, None] >> w) & 1
            ok = (V @ P0 <= epsilon + 1e-12) & (V @ P1 >= 1 - epsilon - 1e-12)
            if not ok.any():
                continue
            count += int(ok.sum())
            C = (V[ok] @ L.T) % 2
            deg = (C * w).max(axis=1).min()
            best = int(deg) if best is None else min(best, int(deg))
        return DegreeSearch(n, delta, epsilon, mode, best, count, total)
    raise ParameterError(f"unknown mode {mode!r}")


def min_degree_search(n: int, delta: float, epsilon: float, mode: str = "exhaustive") -> int | None:
    """Minimal qualifying degree, or None when no function qualifies."""
    return degree_search(n, delta, epsilon, mode).min_degree


# -- convex splits and profile algebra ------------------------------------------

@dataclass(frozen=True)
class ConvexSplit:
    gamma_mix: float
    eta_bias: float

    def apply(self, p: float) -> float:
        return self.gamma_mix * p + (1 - self.gamma_mix) * self.eta_bias


def convex_split(alpha1: float, alpha2: float, beta1: float, beta2: float,
                 force: bool = False) -> ConvexSplit:
    """(gamma, eta) with alpha_i = gamma beta_i + (1 - gamma) eta."""
    tol = 1e-12
    if not force:
        dp, dpp = alpha2 - alpha1, beta2 - beta1
        checks = [
            ("1/4 <= alpha1 <= 1/2", 0.25 - tol <= alpha1 <= 0.5 + tol),
            ("alpha2 >= alpha1", dp >= -tol),
            ("beta1 + beta2 = 1", abs(beta1 + beta2 - 1) <= tol),
            ("delta'' > 0", dpp > 0),
            ("delta'' >= 4 delta'", dpp >= 4 * dp - tol),
        ]
        for name, ok in checks:
            if not ok:
                raise PreconditionError(name, f"alpha=({alpha1}, {alpha2}), beta=({beta1}, {beta2})")
    if beta2 == beta1:
        raise PreconditionError("beta2 != beta1", "reference biases coincide")
    gamma = (alpha2 - alpha1) / (beta2 - beta1)
    # gamma = 1 leaves eta free; 0 keeps the split well defined
    eta = 0.0 if abs(1 - gamma) <= tol else (alpha1 - beta1 * gamma) / (1 - gamma)
    split = ConvexSplit(gamma, eta)
    for name, v in (("0 <= gamma <= 1", gamma), ("0 <= eta <= 1", eta)):
        if not -tol <= v <= 1 + tol:
            raise PreconditionError(name, f"got {v}")
    for a, b in ((alpha1, beta1), (alpha2, beta2)):
        if abs(split.apply(b) - a) > 1e-12:
            raise PreconditionError("alpha_i = gamma beta_i + (1-gamma) eta",
                                    f"residual {split.apply(b) - a}")
    return split


def binom_tail(t: int, k: int, p: float, exact: bool = False) -> float:
    """Pr[Binomial(t, p) >= k]; ``exact`` sums rationals (p is a dyadic float)."""
    if k <= 0:
        return 1.0
    if k > t:
        return 0.0
    if exact:
        P = Fraction(p)
        Q = 1 - P
        return float(sum(math.comb(t, j) * P ** j * Q ** (t - j) for j in range(k, t + 1)))
    return float(binom.sf(k - 1, t, p))


def amplify_threshold(width: int, kind: str) -> int:
    if width < 1:
        raise ParameterError("width must be >= 1")
    if kind == "THR":
        return -(-width // 4)
    if kind == "MAJ":
        if width % 2 == 0:
            raise ParameterError("MAJ width must be odd")
        return (width + 2) // 2
    raise ParameterError(f"unknown amplification kind {kind!r}")


@dataclass(frozen=True)
class ProfileTable:
    """Exact profile: weight counts, tabulated points, a constant, or a composition step."""

    kind: str
    params: tuple = ()
    child: "ProfileTable | None" = None
    degree_bound: int = 0
    samples: int = 0
    points: dict = field(default_factory=dict)

    @classmethod
    def exact(cls, T: TruthTable) -> "ProfileTable":
        return cls("exact", (T.n, tuple(weight_counts(T))), None, degree(T), T.n)

    @classmethod
    def tabulated(cls, values: dict, degree_bound: int = 0, samples: int = 0) -> "ProfileTable":
        return cls("points", (), None, degree_bound, samples, dict(values))

    @classmethod
    def constant(cls, value: float) -> "ProfileTable":
        return cls("const", (float(value),), None, 0, 0)

    def __call__(self, alpha: float) -> float:
        if self.kind == "exact":
            n, counts = self.params
            return prob.weight_sum(counts, n, alpha)
        if self.kind == "const":
            return self.params[0]
        if self.kind == "points":
            for a, v in self.points.items():
                if abs(a - alpha) <= 1e-15:
                    return v
            raise ParameterError(f"profile is tabulated only at {sorted(self.points)}")
        if self.kind == "restrict":
            gamma, eta = self.params
            return self.child(gamma * alpha + (1 - gamma) * eta)
        if self.kind == "amplify":
            width, threshold, _ = self.params
            return binom_tail(width, threshold, self.child(alpha))
        raise ParameterError(f"unknown profile kind {self.kind!r}")


def profile_restrict(p: ProfileTable, split: ConvexSplit) -> ProfileTable:
    """pi_h(a) = pi_g(gamma a + (1 - gamma) eta); degree and samples unchanged."""
    return ProfileTable("restrict", (split.gamma_mix, split.eta_bias), p, p.degree_bound, p.samples)


def profile_amplify(p: ProfileTable, width: int, threshold: int, kind: str = "THR") -> ProfileTable:
    """Threshold of ``width`` independent copies; degree and samples scale by width."""
    expected = amplify_threshold(width, kind)
    if threshold != expected:
        raise ParameterError(f"{kind} of width {width} needs threshold {expected}, got {threshold}")
    return ProfileTable("amplify", (width, threshold, kind), p,
                        p.degree_bound * width, p.samples * width)


@dataclass(frozen=True)
class WidthSearch:
    width: int
    threshold: int
    out_lo: float
    out_hi: float
    exact_lo: float
    exact_hi: float

    @property
    def verified(self) -> bool:
        return self.exact_lo <= 0.1 and self.exact_hi >= 0.9

    def to_dict(self) -> dict:
        return {"width": self.width, "threshold": self.threshold, "out_lo": self.out_lo,
                "out_hi": self.out_hi, "exact_lo": self.exact_lo, "exact_hi": self.exact_hi,
                "verified": self.verified}


def smallest_thr_width(p_lo: float, p_hi: float, target_lo: float = 0.1,
                       target_hi: float = 0.9, max_width: int = 100000) -> WidthSearch:
    """Smallest t with Pr[Bin(t, p_lo) >= t/4] <= target_lo and Pr[Bin(t, p_hi) >= t/4] >= target_hi."""
    for t in range(1, max_width + 1):
        k = amplify_threshold(t, "THR")
        lo, hi = binom_tail(t, k, p_lo), binom_tail(t, k, p_hi)
        if lo <= target_lo and hi >= target_hi:
            return WidthSearch(t, k, lo, hi, binom_tail(t, k, p_lo, exact=True),
                               binom_tail(t, k, p_hi, exact=True))
    raise FeasibilityError(f"no width up to {max_width} meets the targets")


def amplify_mc(p_in: float, width: int, threshold: int, trials: int, seed: int) -> tuple[float, float]:
    """Simulated Pr[at least ``threshold`` of ``width`` Bernoulli(p_in) copies fire]."""
    rng = prob.rng_for(seed, prob.MC_STREAM)
    fired = (rng.random((trials, width)) < p_in).sum(axis=1)
    return float(np.count_nonzero(fired >= threshold)) / trials, prob.hoeffding_halfwidth(trials)


# -- Smolensky extension, Hamming balls, counting --------------------------------

def _ball_size(n: int, radius: int) -> int:
    return sum(math.comb(n, j) for j in range(0, radius + 1))


def _check_rd(n: int, R: int, D: int):
    if not 0 <= D < R:
        raise PreconditionError("0 <= D < R", f"R={R}, D={D}")
    if not 2 * R < n:
        raise PreconditionError("R < n/2", f"R={R}, n={n}")


@dataclass(frozen=True)
class SmolenskyReport:
    n: int
    R: int
    D: int
    error_set_size: int
    threshold: int
    degree: int

    @property
    def hypothesis(self) -> bool:
        return self.error_set_size < self.threshold

    @property
    def conclusion_holds(self) -> bool:
        return self.degree > self.D

    @property
    def counterexample(self) -> bool:
        return self.hypothesis and not self.conclusion_holds

    def to_dict(self) -> dict:
        return {"n": self.n, "R": self.R, "D": self.D, "error_set_size": self.error_set_size,
                "threshold": self.threshold, "hypothesis": self.hypothesis,
                "degree": self.degree, "degree_exceeds_D": self.conclusion_holds,
                "counterexample": self.counterexample}


def _tail_mask(n: int, R: int) -> np.ndarray:
    w = _popcounts(n)
    return (w <= R) | (w >= n - R)


def smolensky_check(h: TruthTable, R: int, D: int) -> SmolenskyReport:
    """|E_h^R| against C(n, <= R-D), and the degree it forces."""
    if h.n > 20:
        raise FeasibilityError("smolensky_check handles n <= 20")
    _check_rd(h.n, R, D)
    err = (h.bits != TruthTable.maj(h.n).bits) & _tail_mask(h.n, R)
    return SmolenskyReport(h.n, R, D, int(err.sum()), _ball_size(h.n, R - D), degree(h))


@dataclass(frozen=True)
class SmolenskySweep:
    n: int
    pairs: tuple
    functions: int
    hypothesis_hits: int
    counterexamples: int

    def to_dict(self) -> dict:
        return {"n": self.n, "pairs": [list(p) for p in self.pairs], "functions": self.functions,
                "hypothesis_hits": self.hypothesis_hits, "counterexamples": self.counterexamples}


def smolensky_sweep(n: int) -> SmolenskySweep:
    """Every function on n <= 4 bits against every valid (R, D)."""
    if n > EXHAUSTIVE_N:
        raise FeasibilityError(f"exhaustive sweep handles n <= {EXHAUSTIVE_N}")
    tables = _all_tables(n)
    degs = degrees(tables)
    maj = TruthTable.maj(n).bits
    pairs = tuple((R, D) for R in range(1, (n + 1) // 2) if 2 * R < n for D in range(R))
    hits = bad = 0
    for R, D in pairs:
        size = ((tables != maj) & _tail_mask(n, R)).sum(axis=1)
        hyp = size < _ball_size(n, R - D)
        hits += int(hyp.sum())
        bad += int((hyp & (degs <= D)).sum())
    return SmolenskySweep(n, pairs, len(tables), hits, bad)


def ball_vanish_check(P: ANF, radius: int) -> bool:
    """True iff P evaluates to 0 on every x with |x| <= radius."""
    if P.n > 20:
        raise FeasibilityError("ball_vanish_check handles n <= 20")
    values = moebius(P.coeffs)
    return not values[_popcounts(P.n) <= radius].any()


def log_binom_cdf(n: int, k: int) -> float:
    """log sum_{j <= k} C(n, j)."""
    if k < 0:
        return -math.inf
    k = min(k, n)
    j = np.arange(k + 1)
    terms = gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1)
    return float(logsumexp(terms))


def _rat(x) -> Fraction:
    # decimal-looking floats such as 0.1 are read as the intended rational
    return Fraction(x).limit_denominator(10 ** 12)


@dataclass(frozen=True)
class CountingReport:
    n: int
    r: float
    delta_k: float
    log_zeta: float
    R: int
    R_prime: int
    D: int
    log_lhs: float | None
    log_rhs: float | None
    exact_checked: bool = False
    exact_log_diff: float | None = None

    @property
    def applicable(self) -> bool:
        return self.D > 0 and self.R - self.D > 0

    @property
    def margin(self) -> float | None:
        """log(rhs) - log(lhs) in nats."""
        if not self.applicable:
            return None
        return self.log_rhs - self.log_lhs

    @property
    def verdict(self) -> str:
        if not self.applicable:
            return "not-applicable"
        return "holds" if self.margin > 0 else "fails"

    def to_dict(self) -> dict:
        return {"n": self.n, "r": self.r, "delta_k": self.delta_k, "log_zeta": self.log_zeta,
                "R": self.R, "R_prime": self.R_prime, "D": self.D, "log_lhs": self.log_lhs,
                "log_rhs": self.log_rhs, "margin_nats": self.margin, "verdict": self.verdict,
                "exact_checked": self.exact_checked, "exact_log_diff": self.exact_log_diff}


def counting_check(n: int, r: float, zeta: float | None = None, delta_k: float = 0.1,
                   log_zeta: float | None = None) -> CountingReport:
    """2 zeta C(n,<=R) + 2 C(n,<=R') <= C(n,<=R-D), evaluated in log domain."""
    if n < 1 or n > 10 ** 6:
        raise ParameterError("n must lie in [1, 10^6]")
    if r <= 0 or not 0 < delta_k < 0.5:
        raise ParameterError("need r > 0 and delta_k in (0, 1/2)")
    if log_zeta is None:
        log_zeta = math.log(zeta) if zeta is not None else -10 * r * r
    rr, dk = _rat(r), _rat(delta_k)
    R = math.floor((Fraction(1, 2) - dk + dk / rr) * n)
    Rp = math.floor((Fraction(1, 2) - dk) * n)
    D = math.floor(dk * n / (2 * rr))
    if D <= 0 or R - D <= 0:
        return CountingReport(n, r, delta_k, log_zeta, R, Rp, D, None, None)
    log2 = math.log(2)
    lhs = float(np.logaddexp(log2 + log_zeta + log_binom_cdf(n, R), log2 + log_binom_cdf(n, Rp)))
    rhs = log_binom_cdf(n, R - D)
    checked, diff = False, None
    if n <= EXACT_COUNTING_N:
        # integer cumulative binomials cross-check the log-gamma path
        exact = [math.log(_ball_size(n, k)) for k in (R, Rp, R - D)]
        approx = [log_binom_cdf(n, k) for k in (R, Rp, R - D)]
        diff = max(abs(a - b) / max(1.0, abs(a)) for a, b in zip(exact, approx))
        checked = True
    return CountingReport(n, r, delta_k, log_zeta, R, Rp, D, lhs, rhs, checked, diff)
