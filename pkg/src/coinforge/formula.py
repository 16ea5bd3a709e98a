"""Alternating AND/OR formulas for the coin problem.

Three families share one representation: level 1 gates are ANDs, gates
alternate upward, and the gate at level i has fan-in ``fanins[i-1]``.

* ``AMANO`` and ``OW2`` are read-once: leaf ``(j_d, ..., j_1)`` reads the
  variable with mixed-radix index ``sum_t j_t * prod_{s<t} f_s``.
* ``DERAND`` reads far fewer variables: level-i children are placed on the
  sets of a polynomial-graph design over the level-(i-1) variable block.

Leaf paths are 0-based throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import mpmath
import numpy as np

from coinforge import design as dsg
from coinforge.errors import FeasibilityError, KindError, ParameterError, PreconditionError

C1 = 50
C2 = C1 / 10
DEFAULT_GATE_CAP = 1 << 32
TREE_DUMP_LIMIT = 10 ** 5
# elements materialized at once by the batch evaluator
_BATCH_CELLS = 1 << 24


def _snap_ceil(x: float) -> int:
    # ceil that does not round k + 1e-15 up to k + 1
    r = round(x)
    if abs(x - r) < 1e-9:
        return int(r)
    return math.ceil(x)


@dataclass(frozen=True)
class DeltaParams:
    delta: float
    m: int
    deltas: tuple[float, ...]
    C2: float = C2

    @classmethod
    def compute(cls, delta: float, m: int, d: int) -> "DeltaParams":
        out = []
        cur = m * delta
        for _ in range(max(0, d - 2)):
            out.append(cur)
            cur *= m * math.log(2)
        return cls(delta, m, tuple(out))


@dataclass(frozen=True)
class FormulaSpec:
    kind: str
    d: int
    m: int
    delta: float | None
    fanins: tuple[int, ...]
    C0: float | None = None
    gamma: float | None = None
    eta: float | None = None
    design_params: tuple = ()
    designs: tuple = ()
    n_levels: tuple[int, ...] = ()
    relabel: tuple[int, ...] | None = None
    relabel_n: int | None = None
    gate_cap: int = DEFAULT_GATE_CAP
    forced: bool = False

    C1: int = field(default=C1, init=False)

    # -- sizes -------------------------------------------------------------

    @property
    def read_once(self) -> bool:
        return self.kind in ("AMANO", "OW2")

    @property
    def leaf_count(self) -> int:
        return math.prod(self.fanins)

    @property
    def gate_count(self) -> int:
        """Internal gates plus input gates (leaves)."""
        total = 0
        above = 1
        for f in reversed(self.fanins):
            total += above
            above *= f
        return total + above

    @property
    def base_variable_count(self) -> int:
        if self.read_once:
            return self.leaf_count
        return self.n_levels[-1]

    @property
    def variable_count(self) -> int:
        """Sample complexity N (after any random substitution)."""
        if self.relabel_n is not None:
            return self.relabel_n
        return self.base_variable_count

    @property
    def evaluable(self) -> bool:
        if self.gate_count > self.gate_cap:
            return False
        if self.kind == "DERAND" and len(self.designs) != self.d - 1:
            return False
        return True

    @property
    def delta_params(self) -> DeltaParams | None:
        if self.delta is None:
            return None
        return DeltaParams.compute(self.delta, self.m, self.d)

    def require_evaluable(self):
        if not self.evaluable:
            raise FeasibilityError(
                f"{self.kind} formula with {self.gate_count} gates is not evaluable "
                f"(cap {self.gate_cap})")

    # -- leaf labelling ----------------------------------------------------

    @cached_property
    def leaf_table(self) -> np.ndarray:
        """Variable index of every leaf, shape ``(f_d, ..., f_1)``."""
        self.require_evaluable()
        if self.read_once:
            table = np.arange(self.leaf_count, dtype=np.int64).reshape(self.fanins[::-1])
        else:
            table = np.arange(self.fanins[0], dtype=np.int64)
            for i in range(2, self.d + 1):
                design = self.designs[i - 2]
                n_prev = self.n_levels[i - 2]
                member = design.member_table(self.fanins[i - 1])
                table = member[:, table] * n_prev + table[None, ...]
        if self.relabel is not None:
            table = np.asarray(self.relabel, dtype=np.int64)[table]
        return table

    def to_dict(self, include_tree: bool = False) -> dict:
        doc = {
            "kind": self.kind,
            "d": self.d,
            "m": self.m,
            "delta": self.delta,
            "fanins": [int(f) for f in self.fanins],
            "C0": self.C0,
            "C1": self.C1,
            "gamma": self.gamma,
            "eta": self.eta,
            "forced": self.forced,
            "designs": [dz.to_dict() for dz in self.designs],
            "design_params": [p.to_dict() for p in self.design_params],
            "n_levels": list(self.n_levels),
            "variable_count": int(self.variable_count),
            "gate_count": int(self.gate_count),
            "evaluable": self.evaluable,
        }
        if self.relabel is not None:
            doc["relabel"] = list(self.relabel)
            doc["relabel_n"] = self.relabel_n
        if include_tree and self.evaluable and self.gate_count <= TREE_DUMP_LIMIT:
            doc["tree"] = gate_tree(self)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "FormulaSpec":
        return cls(
            kind=doc["kind"],
            d=doc["d"],
            m=doc["m"],
            delta=doc.get("delta"),
            fanins=tuple(doc["fanins"]),
            C0=doc.get("C0"),
            gamma=doc.get("gamma"),
            eta=doc.get("eta"),
            design_params=tuple(dsg.DesignParams(**p) for p in doc.get("design_params", [])),
            designs=tuple(dsg.Design.from_dict(z) for z in doc.get("designs", [])),
            n_levels=tuple(doc.get("n_levels", [])),
            relabel=tuple(doc["relabel"]) if doc.get("relabel") is not None else None,
            relabel_n=doc.get("relabel_n"),
            forced=doc.get("forced", False),
        )


def dump(spec: FormulaSpec, path, include_tree: bool = True):
    with open(path, "w") as fh:
        json.dump(spec.to_dict(include_tree=include_tree), fh, indent=2, sort_keys=True)


def load(path) -> FormulaSpec:
    with open(path) as fh:
        return FormulaSpec.from_dict(json.load(fh))


# -- constructors -------------------------------------------------------------

def amano_m(delta: float, d: int) -> int:
    return _snap_ceil((1 / delta) ** (1 / (d - 1)) / math.log(2))


def amano_fanins(m: int, d: int) -> tuple[int, ...]:
    mid = math.ceil(m * 2 ** m * math.log(2))
    with mpmath.workdps(int(C1 * m / 2.3) + 30):
        top = int(mpmath.ceil(mpmath.exp(C1 * m)))
    return (m,) + (mid,) * (d - 3) + (C1 * m * 2 ** m, top)


def amano_spec(delta: float, d: int) -> FormulaSpec:
    """Amano's depth-d read-once formula F_d."""
    if d < 3:
        raise ParameterError("Amano's construction needs d >= 3")
    if not 0 < delta < 1:
        raise ParameterError("delta must lie in (0, 1)")
    m = amano_m(delta, d)
    if m < 2:
        raise PreconditionError("m >= 2", f"delta={delta} too large for d={d}")
    return FormulaSpec(kind="AMANO", d=d, m=m, delta=delta, fanins=amano_fanins(m, d))


def ow2_spec(delta: float, C0: float = 10) -> FormulaSpec:
    """O'Donnell-Wimmer depth-2 read-once formula: OR of 2^m ANDs of m bits."""
    if C0 < 10:
        raise PreconditionError("C0 >= 10", f"C0={C0}")
    if not 0 < delta <= 1:
        raise ParameterError("delta must lie in (0, 1]")
    m = _snap_ceil(C0 / delta)
    return FormulaSpec(kind="OW2", d=2, m=m, delta=delta, fanins=(m, 2 ** m), C0=C0)


def readonce_spec(fanins, delta: float | None = None, kind: str = "OW2") -> FormulaSpec:
    """Read-once alternating formula with arbitrary fan-ins (toy builds)."""
    fanins = tuple(int(f) for f in fanins)
    if not fanins or min(fanins) < 1:
        raise ParameterError("fan-ins must be positive")
    if kind not in ("OW2", "AMANO"):
        raise KindError("read-once kinds are OW2 and AMANO")
    return FormulaSpec(kind=kind, d=len(fanins), m=fanins[0], delta=delta,
                       fanins=fanins, forced=True)


def gamma_eta(delta: float | None, d: int, m: int, f2: int | None = None) -> tuple[float, float]:
    """Design parameters: the depth-2 setting for d = 2, otherwise (1/m^3, 1/m^(10d))."""
    if delta is None:
        return 1.0, 1.0 / 16
    if d == 2:
        if f2 is None or f2 == 2 ** m:
            return 1.0, 1.0 / (16 * (1 + delta) ** m)
        return 1.0, 1.0 / (16 * ((1 + delta) / 2) ** m * f2)
    return 1.0 / m ** 3, 1.0 / m ** (10 * d)


def gamma_spec(delta: float | None, d: int, *, C0: float = 10, force: bool = False,
               m: int | None = None, fanins=None, gamma: float | None = None,
               eta: float | None = None, ell: int | None = None) -> FormulaSpec:
    """Derandomized formula Gamma_d over per-level designs.

    ``force`` allows toy parameters: ``m``, ``fanins`` (f_1..f_d or
    f_2..f_d), ``gamma``, ``eta`` and the design ``ell`` may be supplied and
    the design hypotheses are not enforced.
    """
    if d < 2:
        raise ParameterError("d must be >= 2")
    if delta is None and not force:
        raise ParameterError("delta is required unless force is set")
    if delta is not None and not 0 < delta < 1:
        raise ParameterError("delta must lie in (0, 1)")
    if not force and (m is not None or fanins is not None or ell is not None
                      or gamma is not None or eta is not None):
        raise ParameterError("custom m/fan-ins/gamma/eta/ell require force")
    if fanins is not None:
        fanins = tuple(int(f) for f in fanins)
        if len(fanins) == d - 1:
            if m is None:
                raise ParameterError("give m or the full fan-in list")
            fanins = (m,) + fanins
        if len(fanins) != d:
            raise ParameterError(f"need {d} fan-ins, got {len(fanins)}")
        m = fanins[0]
    else:
        if m is None:
            m = _snap_ceil(C0 / delta) if d == 2 else amano_m(delta, d)
        fanins = (m, 2 ** m) if d == 2 else amano_fanins(m, d)
    g0, e0 = gamma_eta(delta, d, m, fanins[1] if d == 2 else None)
    gamma = g0 if gamma is None else gamma
    eta = e0 if eta is None else eta

    params, designs, n_levels = [], [], [m]
    for i in range(2, d + 1):
        p = dsg.derive_params(n_levels[-1], fanins[i - 1], eta, gamma, force=force, ell=ell)
        params.append(p)
        n_levels.append(p.Q * n_levels[-1])
    gate_count = FormulaSpec(kind="DERAND", d=d, m=m, delta=delta, fanins=fanins).gate_count
    if gate_count <= DEFAULT_GATE_CAP and all(p.Q <= 2 ** 32 for p in params):
        designs = [dsg.build_design(p) for p in params]
    return FormulaSpec(kind="DERAND", d=d, m=m, delta=delta, fanins=fanins,
                       C0=C0 if d == 2 else None, gamma=gamma, eta=eta,
                       design_params=tuple(params), designs=tuple(designs),
                       n_levels=tuple(n_levels), forced=force)


# -- leaf labels --------------------------------------------------------------

def leaf_var(spec: FormulaSpec, leaf) -> int:
    """Variable read by leaf ``(j_d, ..., j_1)``."""
    leaf = tuple(int(j) for j in leaf)
    if len(leaf) != spec.d:
        raise ParameterError(f"leaf path must have length {spec.d}")
    path = leaf[::-1]  # (j_1, ..., j_d)
    for t, (j, f) in enumerate(zip(path, spec.fanins)):
        if not 0 <= j < f:
            raise ParameterError(f"path component j_{t + 1}={j} outside [0, {f})")
    if spec.read_once:
        var, radix = 0, 1
        for j, f in zip(path, spec.fanins):
            var += j * radix
            radix *= f
    else:
        if len(spec.designs) != spec.d - 1:
            raise FeasibilityError("designs for this formula were not built")
        var = path[0]
        for i in range(2, spec.d + 1):
            k = spec.designs[i - 2].member(path[i - 1], var)
            var = k * spec.n_levels[i - 2] + var
    if spec.relabel is not None:
        var = spec.relabel[var]
    return var


def subformula_vars(spec: FormulaSpec, prefix) -> set[int]:
    """Variables read by the subformula at path prefix ``(j_d, ..., j_{i+1})``."""
    table = spec.leaf_table
    return set(np.unique(table[tuple(prefix)]).tolist())


# -- evaluation ---------------------------------------------------------------

def _reduce_levels(values: np.ndarray, d: int, lead: int) -> np.ndarray:
    # values has ``lead`` batch axes followed by (f_d, ..., f_1)
    for level in range(1, d + 1):
        if level % 2:
            values = values.all(axis=-1)
        else:
            values = values.any(axis=-1)
    return values


def evaluate(spec: FormulaSpec, assignment) -> int:
    """Value of the formula on one assignment.

    ``assignment`` is a bit vector of length ``variable_count`` or a callable
    oracle ``var -> bit``; the oracle is queried lazily with short-circuiting.
    """
    spec.require_evaluable()
    if callable(assignment):
        return int(_eval_oracle(spec, assignment))
    x = np.asarray(assignment).astype(bool, copy=False)
    if x.shape != (spec.variable_count,):
        raise ParameterError(f"assignment must have length {spec.variable_count}")
    if spec.read_once and spec.relabel is None:
        vals = x.reshape(spec.fanins[::-1])
    else:
        vals = x[spec.leaf_table]
    return int(_reduce_levels(vals, spec.d, 0))


def _eval_oracle(spec: FormulaSpec, oracle) -> bool:
    table = spec.leaf_table

    def gate(level, sub):
        if level == 0:
            return bool(oracle(int(sub)))
        is_and = level % 2 == 1
        for child in sub:
            v = gate(level - 1, child)
            if is_and and not v:
                return False
            if not is_and and v:
                return True
        return is_and

    return gate(spec.d, table)


def evaluate_batch(spec: FormulaSpec, assignments: np.ndarray) -> np.ndarray:
    """Evaluate many assignments (rows) at once; returns a bool vector."""
    spec.require_evaluable()
    X = np.asarray(assignments).astype(bool, copy=False)
    if X.ndim != 2 or X.shape[1] != spec.variable_count:
        raise ParameterError("assignments must have shape (k, variable_count)")
    if spec.read_once and spec.relabel is None:
        return _reduce_levels(X.reshape((X.shape[0],) + spec.fanins[::-1]), spec.d, 1)
    table = spec.leaf_table
    rows = max(1, _BATCH_CELLS // max(1, table.size))
    out = np.empty(X.shape[0], dtype=bool)
    for s in range(0, X.shape[0], rows):
        out[s:s + rows] = _reduce_levels(X[s:s + rows][:, table], spec.d, 1)
    return out


def lazy_readonce_sample(fanins, level: int, count: int, alpha: float, rng,
                         chunk_cells: int = 1 << 16) -> np.ndarray:
    """Values of ``count`` independent depth-``level`` read-once subformulas on
    fresh Bernoulli(alpha) leaves, revealing leaves only as gates need them.

    Children are visited in chunks; leaves of children after the deciding one
    in a chunk are drawn but unused, which does not change the distribution.
    """
    if level == 1:
        out = np.ones(count, dtype=bool)
        live = np.arange(count)
        for _ in range(fanins[0]):
            if live.size == 0:
                break
            bits = rng.random(live.size) < alpha
            out[live[~bits]] = False
            live = live[bits]
        return out
    is_and = level % 2 == 1
    stop = not is_and  # AND stops on a 0 child, OR on a 1 child
    f = fanins[level - 1]
    out = np.full(count, is_and)
    live = np.arange(count)
    done = 0
    while live.size and done < f:
        step = int(min(f - done, max(1, chunk_cells // live.size)))
        child = lazy_readonce_sample(fanins, level - 1, live.size * step, alpha, rng,
                                     chunk_cells).reshape(live.size, step)
        hit = (child == stop).any(axis=1)
        out[live[hit]] = stop
        live = live[~hit]
        done += step
    return out


def gate_tree(spec: FormulaSpec) -> dict:
    """Explicit nested gate tree (small formulas only)."""
    if spec.gate_count > TREE_DUMP_LIMIT:
        raise FeasibilityError(f"gate tree dump limited to {TREE_DUMP_LIMIT} gates")
    table = spec.leaf_table

    def node(level, sub):
        if level == 0:
            return {"var": int(sub)}
        return {"op": "AND" if level % 2 else "OR",
                "children": [node(level - 1, c) for c in sub]}

    return node(spec.d, table)


def random_substitute(spec: FormulaSpec, n: int, seed: int) -> FormulaSpec:
    """Relabel every input of ``spec`` by an independent uniform index in [n]."""
    from coinforge.prob import SUB_STREAM, rng_for

    if n < 1:
        raise ParameterError("n must be >= 1")
    spec.require_evaluable()
    rng = rng_for(seed, SUB_STREAM)
    sub = rng.integers(0, n, size=spec.variable_count)
    if spec.relabel is not None:
        relabel = sub[np.asarray(spec.relabel)]
    else:
        relabel = sub
    new = replace(spec, relabel=tuple(int(v) for v in relabel), relabel_n=n)
    return new
