"""Arithmetic in GF(2^q) and polynomial interpolation over it.

Elements are plain ints in ``[0, 2**q)`` read as F2 polynomials of degree
< q (bit i is the coefficient of x^i). The field modulus is the
lexicographically smallest irreducible monic polynomial of degree q, so a
given q always yields the same representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from coinforge.errors import ParameterError

MAX_Q = 32
# fields up to this degree get log/antilog tables for vectorized products
TABLE_Q = 16


def _deg(p: int) -> int:
    return p.bit_length() - 1


def poly_mod(a: int, b: int) -> int:
    """Remainder of carry-less division of ``a`` by ``b`` (both over F2)."""
    if b == 0:
        raise ZeroDivisionError("polynomial division by zero")
    db = _deg(b)
    while a and _deg(a) >= db:
        a ^= b << (_deg(a) - db)
    return a


def clmul(a: int, b: int) -> int:
    """Carry-less product of two F2 polynomials."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


@lru_cache(maxsize=None)
def _irreducibles_up_to(k: int) -> tuple[int, ...]:
    # sieve: a polynomial is irreducible iff no smaller irreducible of degree
    # <= half its degree divides it
    found: list[int] = []
    for p in range(2, 1 << (k + 1)):
        dp = _deg(p)
        ok = True
        for f in found:
            if 2 * _deg(f) > dp:
                break
            if poly_mod(p, f) == 0:
                ok = False
                break
        if ok:
            found.append(p)
    return tuple(found)


def is_irreducible(p: int) -> bool:
    """Trial division by every irreducible of degree <= deg(p)/2."""
    d = _deg(p)
    if d < 1:
        return False
    if d == 1:
        return True
    for f in _irreducibles_up_to(d // 2):
        if poly_mod(p, f) == 0:
            return False
    return True


@lru_cache(maxsize=None)
def find_irreducible(q: int) -> "FieldSpec":
    """Smallest (by bitmask) irreducible monic polynomial of degree ``q``."""
    if not isinstance(q, (int, np.integer)) or not 1 <= q <= MAX_Q:
        raise ParameterError(f"extension degree q must be in [1, {MAX_Q}], got {q!r}")
    q = int(q)
    for p in range(1 << q, 1 << (q + 1)):
        if is_irreducible(p):
            return FieldSpec(q, p)
    raise AssertionError("unreachable: irreducible polynomials exist for every degree")


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^q) given by an irreducible modulus bitmask."""

    q: int
    modulus: int
    _tables: tuple | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.q < 1 or _deg(self.modulus) != self.q:
            raise ParameterError(f"modulus {self.modulus:#b} does not have degree {self.q}")
        if not is_irreducible(self.modulus):
            raise ParameterError(f"modulus {self.modulus:#b} is reducible over F2")

    @property
    def size(self) -> int:
        return 1 << self.q

    def check(self, a: int) -> int:
        if not 0 <= a < self.size:
            raise ParameterError(f"{a!r} is not an element of GF(2^{self.q})")
        return a

    def add(self, a: int, b: int) -> int:
        return self.check(a) ^ self.check(b)

    sub = add

    def mul(self, a: int, b: int) -> int:
        a, b = self.check(a), self.check(b)
        r = 0
        top = 1 << self.q
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if a & top:
                a ^= self.modulus
        return r

    def pow(self, a: int, e: int) -> int:
        self.check(a)
        if e < 0:
            return self.pow(self.inv(a), -e)
        r, base = 1, a
        while e:
            if e & 1:
                r = self.mul(r, base)
            base = self.mul(base, base)
            e >>= 1
        return r

    def inv(self, a: int) -> int:
        if self.check(a) == 0:
            raise ZeroDivisionError("inverse of 0 in GF(2^q)")
        # a^(Q-2) = a^-1 by Fermat
        return self.pow(a, self.size - 2)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def elements(self) -> range:
        return range(self.size)

    # -- vectorized products (small fields only) --------------------------

    def _log_tables(self):
        if self._tables is None:
            if self.q > TABLE_Q:
                raise ParameterError(f"vectorized arithmetic needs q <= {TABLE_Q}")
            n = self.size - 1
            # find a generator of the multiplicative group
            factors = _prime_factors(n)
            g = 1
            if n > 1:
                g = next(c for c in range(2, self.size)
                         if all(self.pow(c, n // f) != 1 for f in factors))
            exp = np.zeros(2 * n + 1, dtype=np.int64)
            log = np.zeros(self.size, dtype=np.int64)
            x = 1
            for i in range(n):
                exp[i] = x
                log[x] = i
                x = self.mul(x, g)
            exp[n:2 * n] = exp[:n]
            object.__setattr__(self, "_tables", (exp, log))
        return self._tables

    def mul_array(self, a, b):
        """Elementwise product of integer arrays (broadcasting)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        exp, log = self._log_tables()
        out = exp[log[a] + log[b]]
        return np.where((a == 0) | (b == 0), 0, out)


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def field_ops(spec: FieldSpec, op: str, a: int, b: int) -> int:
    """Dispatch ``add``/``mul``/``inv``/``pow`` by name (``b`` unused for inv)."""
    if op == "add":
        return spec.add(a, b)
    if op == "mul":
        return spec.mul(a, b)
    if op == "inv":
        return spec.inv(a)
    if op == "pow":
        return spec.pow(a, b)
    raise ParameterError(f"unknown field op {op!r}")


@dataclass(frozen=True)
class FieldPoly:
    """Polynomial over GF(2^q), coefficients low degree first."""

    field: FieldSpec
    coeffs: tuple[int, ...]

    @property
    def degree(self) -> int:
        for i in range(len(self.coeffs) - 1, -1, -1):
            if self.coeffs[i]:
                return i
        return -1

    def __call__(self, y: int) -> int:
        r = 0
        for c in reversed(self.coeffs):
            r = self.field.mul(r, y) ^ c
        return r


def evaluate(poly: FieldPoly, y: int) -> int:
    return poly(y)


def _poly_mul_linear(spec: FieldSpec, p: list[int], root: int) -> list[int]:
    # p(y) * (y - root); subtraction is xor
    out = [0] * (len(p) + 1)
    for i, c in enumerate(p):
        out[i + 1] ^= c
        out[i] ^= spec.mul(c, root)
    return out


def interpolate(spec: FieldSpec, points) -> FieldPoly:
    """Lagrange interpolation through ``[(x, y), ...]`` with distinct x."""
    points = [(spec.check(int(x)), spec.check(int(y))) for x, y in points]
    if not points:
        raise ParameterError("interpolation needs at least one point")
    xs = [x for x, _ in points]
    if len(set(xs)) != len(xs):
        raise ParameterError("duplicated abscissa in interpolation points")
    k = len(points)
    coeffs = [0] * k
    for i, (xi, yi) in enumerate(points):
        if yi == 0:
            continue
        basis = [1]
        denom = 1
        for j, xj in enumerate(xs):
            if j == i:
                continue
            basis = _poly_mul_linear(spec, basis, xj)
            denom = spec.mul(denom, xi ^ xj)
        scale = spec.mul(yi, spec.inv(denom))
        for t, c in enumerate(basis):
            coeffs[t] ^= spec.mul(c, scale)
    return FieldPoly(spec, tuple(coeffs))


def lagrange_basis_values(spec: FieldSpec, nodes, targets) -> list[list[int]]:
    """``L[t][j]`` = value at ``targets[j]`` of the basis poly that is 1 at ``nodes[t]``."""
    nodes = list(nodes)
    if len(set(nodes)) != len(nodes):
        raise ParameterError("duplicated abscissa in interpolation nodes")
    out = []
    for t, xt in enumerate(nodes):
        denom = 1
        for s, xs in enumerate(nodes):
            if s != t:
                denom = spec.mul(denom, xt ^ xs)
        dinv = spec.inv(denom)
        row = []
        for y in targets:
            num = 1
            for s, xs in enumerate(nodes):
                if s != t:
                    num = spec.mul(num, y ^ xs)
            row.append(spec.mul(num, dinv))
        out.append(row)
    return out
