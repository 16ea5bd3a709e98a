"""Combinatorial designs from graphs of low-degree polynomials over GF(Q).

Set ``i`` of the family is the graph of the polynomial of degree < ell whose
values on the first ell abscissae are the base-Q1 digits of ``i`` (little
endian, digits index into ``B``). Universe element ``(j, k)`` (position j in
[N2], field value k in [Q]) has flat index ``k * N2 + j``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from coinforge import gf2k
from coinforge.errors import FeasibilityError, ParameterError, PreconditionError

EXHAUSTIVE_LIMIT = 1 << 14


@dataclass(frozen=True)
class DesignParams:
    N1: int
    M: int
    N2: int
    ell: int
    gamma_cov: float
    eta_int: float
    Q: int
    Q1: int
    forced: bool = False

    def to_dict(self) -> dict:
        return {
            "N1": self.N1, "M": self.M, "N2": self.N2, "ell": self.ell,
            "gamma_cov": self.gamma_cov, "eta_int": self.eta_int,
            "Q": self.Q, "Q1": self.Q1, "forced": self.forced,
        }


def iroot_ceil(M: int, ell: int) -> int:
    """Exact ceil(M ** (1/ell)) for integers."""
    if ell == 1:
        return M
    r = max(1, int(round(M ** (1.0 / ell))))
    while r ** ell < M:
        r += 1
    while r > 1 and (r - 1) ** ell >= M:
        r -= 1
    return r


def _rat(x) -> Fraction:
    # decimal inputs such as 0.1 are meant as the rational they spell
    return Fraction(x).limit_denominator(10 ** 15)


def _root_at_least(M: int, ell: int, bound: Fraction) -> bool:
    """Exact test of M^(1/ell) >= bound."""
    return M * bound.denominator ** ell >= bound.numerator ** ell


def _next_pow2(x: int) -> int:
    return 1 << max(0, (x - 1).bit_length())


def derive_params(N2: int, M: int, eta_int: float, gamma_cov: float,
                  force: bool = False, ell: int | None = None) -> DesignParams:
    """Pick (ell, Q1, Q, N1) for an (N1, M, N2, ell, gamma, eta) design.

    Without ``force`` the construction's hypotheses are enforced. With
    ``force`` they are skipped; ``ell`` may then be given explicitly, and if
    it is not and no ell >= 1 meets the defining inequality, the largest ell
    with ceil(M^(1/ell)) >= N2 is used. Forced parameters may also enlarge Q
    beyond Q1 so that the field holds N2 distinct abscissae.
    """
    if N2 < 1 or M < 1:
        raise ParameterError("N2 and M must be positive")
    if ell is not None and not force:
        raise ParameterError("an explicit ell requires force")
    eta_r, gamma_r = _rat(eta_int), _rat(gamma_cov)
    if not force:
        if not (0 < eta_r < 1):
            raise PreconditionError("0 < eta < 1", f"eta={eta_int}")
        if not (0 < gamma_r <= 1):
            raise PreconditionError("0 < gamma <= 1", f"gamma={gamma_cov}")
        if not N2 >= math.log2(M) / 10:
            raise PreconditionError("N2 >= log2(M)/10", f"N2={N2}, log2(M)/10={math.log2(M) / 10:.6g}")
        if not M >= 10 * N2 / eta_r:
            raise PreconditionError("M >= 10*N2/eta", f"M={M}, 10*N2/eta={float(10 * N2 / eta_r):.6g}")
        if not gamma_r >= eta_r / N2:
            raise PreconditionError("gamma >= eta/N2", f"gamma={gamma_cov}, eta/N2={float(eta_r / N2):.6g}")

    if ell is None:
        ell = 0
        if eta_r > 0:
            bound = 10 * N2 / eta_r
            cand = 1
            while cand <= M.bit_length() and _root_at_least(M, cand, bound):
                ell = cand
                cand += 1
        if ell == 0:
            # forced parameters: keep the field large enough for N2 abscissae
            ell = 1
            cand = 2
            while cand <= N2 and iroot_ceil(M, cand) >= N2:
                ell = cand
                cand += 1
    if ell < 1:
        raise ParameterError("ell must be >= 1")
    Q1 = iroot_ceil(M, ell)
    Q = max(2, _next_pow2(Q1))
    if force and N2 > Q:
        # forced toy parameters: grow the field until it holds N2 abscissae
        Q = _next_pow2(N2)
    if N2 > Q:
        raise PreconditionError("N2 <= Q", f"N2={N2}, Q={Q}: not enough distinct abscissae")
    if ell > N2:
        raise PreconditionError("ell <= N2", f"ell={ell}, N2={N2}")
    return DesignParams(N1=Q * N2, M=M, N2=N2, ell=ell, gamma_cov=gamma_cov,
                        eta_int=eta_int, Q=Q, Q1=Q1, forced=force)


@dataclass(frozen=True)
class Design:
    params: DesignParams
    field: gf2k.FieldSpec
    A: Sequence[int]
    B: Sequence[int]
    _basis: tuple = field(default=None, init=False, repr=False, compare=False)

    @property
    def size(self) -> int:
        """Number of sets in the full family, Q1**ell."""
        return self.params.Q1 ** self.params.ell

    def decode(self, i: int) -> tuple[int, ...]:
        """Set index -> values b_1..b_ell on the first ell abscissae."""
        if not 0 <= i < self.size:
            raise ParameterError(f"set index {i} out of range [0, {self.size})")
        Q1 = self.params.Q1
        digits = []
        for _ in range(self.params.ell):
            i, r = divmod(i, Q1)
            digits.append(self.B[r])
        return tuple(digits)

    def polynomial(self, i: int) -> gf2k.FieldPoly:
        ell = self.params.ell
        return gf2k.interpolate(self.field, zip(self.A[:ell], self.decode(i)))

    def member(self, i: int, j: int) -> int:
        """Field value k (as element index) of set ``i`` at position ``j``."""
        if not 0 <= j < self.params.N2:
            raise ParameterError(f"position {j} out of range [0, {self.params.N2})")
        return self.polynomial(i)(self.A[j])

    def set_of(self, i: int) -> list[int]:
        """Flat universe indices of set ``i``, ordered by position."""
        poly = self.polynomial(i)
        N2 = self.params.N2
        return [poly(a) * N2 + j for j, a in enumerate(self.A)]

    def _basis_values(self):
        if self._basis is None:
            ell = self.params.ell
            L = gf2k.lagrange_basis_values(self.field, self.A[:ell], self.A)
            object.__setattr__(self, "_basis", np.asarray(L, dtype=np.int64))
        return self._basis

    def member_table(self, count: int) -> np.ndarray:
        """``T[i, j] = member(i, j)`` for the first ``count`` sets, vectorized."""
        if not 0 <= count <= self.size:
            raise ParameterError(f"count {count} exceeds family size {self.size}")
        ell, Q1 = self.params.ell, self.params.Q1
        idx = np.arange(count, dtype=np.int64)
        B = np.asarray(self.B, dtype=np.int64)
        L = self._basis_values()
        out = np.zeros((count, self.params.N2), dtype=np.int64)
        if self.field.q <= gf2k.TABLE_Q:
            for t in range(ell):
                b_t = B[(idx // Q1 ** t) % Q1]
                out ^= self.field.mul_array(b_t[:, None], L[t][None, :])
        else:
            for i in range(count):
                out[i] = [self.member(i, j) for j in range(self.params.N2)]
        return out

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "field": {"q": self.field.q, "modulus": self.field.modulus},
            "A": _seq_to_json(self.A),
            "B": _seq_to_json(self.B),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Design":
        params = DesignParams(**doc["params"])
        fld = gf2k.FieldSpec(doc["field"]["q"], doc["field"]["modulus"])
        return cls(params, fld, _seq_from_json(doc["A"]), _seq_from_json(doc["B"]))


def _seq_to_json(seq):
    # canonical prefixes of the field are stored compactly
    if isinstance(seq, range) and seq.start == 0 and seq.step == 1:
        return {"first": len(seq)}
    return [int(x) for x in seq]


def _seq_from_json(doc):
    if isinstance(doc, dict):
        return range(doc["first"])
    return tuple(doc)


def build_design(params: DesignParams) -> Design:
    """Canonical construction: A and B are the first N2 / Q1 field elements."""
    q = params.Q.bit_length() - 1
    fld = gf2k.find_irreducible(q)
    if params.N2 > params.Q or params.Q1 > params.Q:
        raise ParameterError("A and B must fit inside the field")
    return Design(params, fld, range(params.N2), range(params.Q1))


def lines_design(q: int, N2: int | None = None, ell: int = 2) -> Design:
    """Full polynomial-graph design over GF(2^q) with A = B = the whole field
    (ell = 2 gives the classical lines design)."""
    Q = 1 << q
    N2 = Q if N2 is None else N2
    if not ell <= N2 <= Q:
        # sets are stored through their values on the first ell abscissae
        raise ParameterError(f"need ell <= N2 <= Q, got N2={N2}, ell={ell}, Q={Q}")
    params = DesignParams(N1=Q * N2, M=Q ** ell, N2=N2, ell=ell,
                          gamma_cov=1.0 / Q, eta_int=min(1.0, N2 / Q),
                          Q=Q, Q1=Q, forced=True)
    return build_design(params)


def member(design: Design, i: int, j: int) -> int:
    return design.member(i, j)


def _check_exhaustive(design: Design, M_used: int):
    if not 1 <= M_used <= design.size:
        raise ParameterError(f"M_used={M_used} must be in [1, {design.size}]")
    if M_used > EXHAUSTIVE_LIMIT:
        raise FeasibilityError(f"exhaustive verification limited to {EXHAUSTIVE_LIMIT} sets, got {M_used}")


def intersection_census(design: Design, M_used: int) -> list[int]:
    """``c[r]`` = unordered pairs among the first ``M_used`` sets meeting in r points."""
    _check_exhaustive(design, M_used)
    T = design.member_table(M_used)
    N2 = design.params.N2
    counts = np.zeros(N2 + 1, dtype=np.int64)
    # sets have one element per position, so |S_a ∩ S_b| = #positions with equal k
    block = max(1, (1 << 22) // max(1, M_used * N2))
    for start in range(0, M_used, block):
        stop = min(M_used, start + block)
        eq = (T[start:stop, None, :] == T[None, :, :]).sum(axis=2)
        rows = np.arange(start, stop)[:, None]
        cols = np.arange(M_used)[None, :]
        counts += np.bincount(eq[cols > rows], minlength=N2 + 1)
    return [int(c) for c in counts]


@dataclass
class PropertyReport:
    M_used: int
    family_size: int
    set_size_ok: bool
    max_intersection: int
    max_coverage: int
    coverage_bound: float
    census: list[int]
    census_bounds: list[float]
    implied_gamma: float
    implied_eta: float
    passed: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {
            "M_used": self.M_used,
            "family_size": self.family_size,
            "set_size_ok": self.set_size_ok,
            "max_intersection": self.max_intersection,
            "max_coverage": self.max_coverage,
            "coverage_bound": self.coverage_bound,
            "census": self.census,
            "census_bounds": self.census_bounds,
            "implied_gamma": self.implied_gamma,
            "implied_eta": self.implied_eta,
            "passed": self.passed,
            "all_passed": self.all_passed,
        }


def implied_bounds(design: Design) -> tuple[float, float]:
    """(gamma, eta) that the counting argument certifies for the full family.

    A point lies on at most Q1^(ell-1) = M/Q1 sets, and at most
    M^2 (N2/Q1)^r ordered pairs meet in r points, with M = Q1^ell.
    """
    Q1, N2 = design.params.Q1, design.params.N2
    return 1.0 / Q1, N2 / Q1


def verify_properties(design: Design, M_used: int) -> PropertyReport:
    """Exhaustively check the five design properties on the first M_used sets.

    Coverage and pair-count bounds use M = M_used together with the
    design's own gamma and eta.
    """
    _check_exhaustive(design, M_used)
    p = design.params
    T = design.member_table(M_used)
    N2 = p.N2
    flat = T * N2 + np.arange(N2)[None, :]
    set_size_ok = all(len(np.unique(row)) == N2 for row in flat) and bool((T < p.Q).all())
    coverage = np.bincount(flat.ravel(), minlength=p.N1)
    max_cov = int(coverage.max())
    census = intersection_census(design, M_used)
    max_int = max((r for r, c in enumerate(census) if c), default=0)
    cov_bound = p.gamma_cov * M_used
    census_bounds = [p.eta_int ** r * M_used ** 2 for r in range(len(census))]
    prop5 = all(census[r] <= census_bounds[r] for r in range(1, p.ell + 1) if r < len(census))
    # pairs meeting in more than ell points already fail property 3
    g, e = implied_bounds(design)
    return PropertyReport(
        M_used=M_used,
        family_size=design.size,
        set_size_ok=set_size_ok,
        max_intersection=max_int,
        max_coverage=max_cov,
        coverage_bound=cov_bound,
        census=census,
        census_bounds=census_bounds,
        implied_gamma=g,
        implied_eta=e,
        passed={
            "1_family_size": design.size >= M_used,
            "2_set_size": set_size_ok,
            "3_intersection": max_int <= p.ell,
            "4_coverage": max_cov <= cov_bound,
            "5_intersection_counts": prop5,
        },
    )
