"""Weight-set abstract domains over matrices: interval hulls, octagon hulls, finite sets.

Each element supports ``alpha`` over a finite set of matrices and ``gamma``
membership with a slack ``eps``.  Octagon elements additionally cache their
per-entry interval hull so downstream analyses can relax them without an LP.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import EmptySet, ShapeMismatch, ValidationError
from .model import as_matrix

DEFAULT_EPS = 1e-9

INTERVAL = "interval"
OCTAGON = "octagon"
POWERSET = "powerset"
DOMAIN_NAMES = (INTERVAL, OCTAGON, POWERSET)


def _stack(ms) -> np.ndarray:
    ms = [as_matrix(m) for m in ms]
    if not ms:
        raise EmptySet("alpha of an empty set of matrices")
    shape = ms[0].shape
    for m in ms[1:]:
        if m.shape != shape:
            raise ShapeMismatch(f"mixed shapes {shape} and {m.shape}")
    return np.stack(ms)


def _check_shape(expected, m):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.shape != tuple(expected):
        raise ShapeMismatch(f"matrix of shape {m.shape} vs element of shape {tuple(expected)}")
    return m


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class WeightElement:
    domain = ""
    is_convex = True

    shape: Tuple[int, int]

    def contains(self, m, eps: float = DEFAULT_EPS) -> bool:
        raise NotImplementedError

    def interval_hull(self) -> "IntervalMatrix":
        raise NotImplementedError

    def size(self) -> int:
        """Number of stored scalars/constraints/members, for reporting."""
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IntervalMatrix(WeightElement):
    lo: np.ndarray
    hi: np.ndarray
    domain = INTERVAL
    is_convex = True

    def __post_init__(self):
        lo, hi = as_matrix(self.lo), as_matrix(self.hi)
        if lo.shape != hi.shape:
            raise ShapeMismatch("interval bounds have different shapes")
        if np.any(lo > hi):
            raise ValidationError("interval matrix requires lo <= hi entrywise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def shape(self):
        return self.lo.shape

    def contains(self, m, eps=DEFAULT_EPS):
        return interval_gamma_contains(self, m, eps)

    def interval_hull(self):
        return self

    def size(self):
        return int(self.lo.size)

    def __eq__(self, other):
        return (
            isinstance(other, IntervalMatrix)
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
        )

    def __repr__(self):
        return f"IntervalMatrix(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


def interval_alpha(ms: Sequence) -> IntervalMatrix:
    s = _stack(ms)
    return IntervalMatrix(s.min(axis=0), s.max(axis=0))


def interval_gamma_contains(e: IntervalMatrix, m, eps: float = DEFAULT_EPS) -> bool:
    m = _check_shape(e.shape, m)
    return bool(np.all(m >= e.lo - eps) and np.all(m <= e.hi + eps))


# ---------------------------------------------------------------------------
# Octagons
# ---------------------------------------------------------------------------

# Pair constraint families, keyed by the signs of (x_p, x_q) for p < q.
PAIR_SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True, eq=False)
class OctagonMatrix(WeightElement):
    """Octagon over the row-major flattened entries ``x_1..x_d`` of a matrix.

    ``upper[p]`` bounds ``x_p``; ``neg_lower[p]`` bounds ``-x_p``.  ``pairs``
    maps each sign pair ``(a, b)`` to a ``d x d`` array whose ``[p, q]``
    (``p < q``) entry bounds ``a*x_p + b*x_q``.  Missing constraints are ``+inf``.
    ``hull_lo``/``hull_hi`` are the tightest per-coordinate bounds.
    """

    shape: Tuple[int, int]
    upper: np.ndarray
    neg_lower: np.ndarray
    pairs: Dict[Tuple[int, int], np.ndarray]
    hull_lo: np.ndarray
    hull_hi: np.ndarray
    domain = OCTAGON
    is_convex = True

    @property
    def dim(self):
        return self.shape[0] * self.shape[1]

    def constraints(self) -> List[Tuple[Tuple[Tuple[int, int], ...], float]]:
        """Finite constraints as ``(((coord, sign), ...), bound)``, 0-indexed coordinates."""
        out = []
        for p in range(self.dim):
            if np.isfinite(self.upper[p]):
                out.append((((p, 1),), float(self.upper[p])))
            if np.isfinite(self.neg_lower[p]):
                out.append((((p, -1),), float(self.neg_lower[p])))
        for p, q in itertools.combinations(range(self.dim), 2):
            for a, b in PAIR_SIGNS:
                c = self.pairs[(a, b)][p, q]
                if np.isfinite(c):
                    out.append((((p, a), (q, b)), float(c)))
        return out

    def contains(self, m, eps=DEFAULT_EPS):
        return octagon_gamma_contains(self, m, eps)

    def interval_hull(self):
        return IntervalMatrix(self.hull_lo.reshape(self.shape), self.hull_hi.reshape(self.shape))

    def size(self):
        return len(self.constraints())

    def __eq__(self, other):
        if not isinstance(other, OctagonMatrix) or tuple(self.shape) != tuple(other.shape):
            return False
        same = lambda a, b: np.array_equal(a, b)  # noqa: E731
        return (
            same(self.upper, other.upper)
            and same(self.neg_lower, other.neg_lower)
            and all(same(self.pairs[k], other.pairs[k]) for k in PAIR_SIGNS)
            and same(self.hull_lo, other.hull_lo)
            and same(self.hull_hi, other.hull_hi)
        )

    @classmethod
    def from_constraints(cls, shape, constraints) -> "OctagonMatrix":
        """Build an octagon from explicit constraints ``(((p, sign), ...), bound)``.

        Repeated constraints keep the tightest bound.  The interval hull is
        computed by linear programming and the constraint set must be
        satisfiable with a bounded hull.
        """
        from scipy.optimize import linprog

        rows, cols = int(shape[0]), int(shape[1])
        d = rows * cols
        upper = np.full(d, np.inf)
        neg_lower = np.full(d, np.inf)
        pairs = {k: np.full((d, d), np.inf) for k in PAIR_SIGNS}
        a_ub, b_ub = [], []
        for terms, bound in constraints:
            bound = float(bound)
            if np.isnan(bound):
                raise ValidationError("octagon bound is NaN")
            terms = tuple((int(p), int(s)) for p, s in terms)
            if any(s not in (1, -1) or not 0 <= p < d for p, s in terms):
                raise ValidationError(f"bad octagon constraint terms {terms}")
            if len(terms) == 1:
                (p, s), = terms
                target = upper if s == 1 else neg_lower
                target[p] = min(target[p], bound)
            elif len(terms) == 2 and terms[0][0] != terms[1][0]:
                (p, a), (q, b) = sorted(terms)
                pairs[(a, b)][p, q] = min(pairs[(a, b)][p, q], bound)
            else:
                raise ValidationError(f"octagon constraints have one or two distinct terms: {terms}")
            if np.isfinite(bound):
                row = np.zeros(d)
                for p, s in terms:
                    row[p] = s
                a_ub.append(row)
                b_ub.append(bound)
        hull_lo = np.empty(d)
        hull_hi = np.empty(d)
        a_ub = np.array(a_ub).reshape(-1, d) if a_ub else None
        b_ub = np.array(b_ub) if b_ub else None
        for p in range(d):
            for sign in (1.0, -1.0):
                obj = np.zeros(d)
                obj[p] = sign
                res = linprog(obj, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * d, method="highs")
                if res.status == 2:
                    raise ValidationError("octagon constraints are unsatisfiable")
                if res.status != 0:
                    raise ValidationError(f"octagon coordinate {p} is unbounded")
                if sign > 0:
                    hull_lo[p] = res.fun
                else:
                    hull_hi[p] = -res.fun
        return cls(
            (rows, cols),
            _readonly(upper),
            _readonly(neg_lower),
            {k: _readonly(v) for k, v in pairs.items()},
            _readonly(hull_lo),
            _readonly(hull_hi),
        )


def octagon_alpha(ms: Sequence) -> OctagonMatrix:
    s = _stack(ms)
    shape = s.shape[1:]
    x = s.reshape(s.shape[0], -1)
    upper = x.max(axis=0)
    lower = x.min(axis=0)
    d = x.shape[1]
    chunk = max(1, (1 << 22) // (d * d))
    pairs = {}
    for a, b in PAIR_SIGNS:
        # bound[p, q] = max over the set of a*x_p + b*x_q; only p < q is meaningful
        bound = np.full((d, d), -np.inf)
        for start in range(0, x.shape[0], chunk):
            part = x[start:start + chunk]
            vals = (a * part)[:, :, None] + (b * part)[:, None, :]
            np.maximum(bound, vals.max(axis=0), out=bound)
        bound[np.tril_indices(d)] = np.inf
        pairs[(a, b)] = _readonly(bound)
    return OctagonMatrix(
        tuple(shape), _readonly(upper), _readonly(-lower), pairs, _readonly(lower), _readonly(upper)
    )


def octagon_gamma_contains(e: OctagonMatrix, m, eps: float = DEFAULT_EPS) -> bool:
    x = _check_shape(e.shape, m).reshape(-1)
    if np.any(x > e.upper + eps) or np.any(-x > e.neg_lower + eps):
        return False
    iu = np.triu_indices(x.shape[0], k=1)
    for (a, b), bound in e.pairs.items():
        lhs = a * x[iu[0]] + b * x[iu[1]]
        if np.any(lhs > bound[iu] + eps):
            return False
    return True


# ---------------------------------------------------------------------------
# Finite sets (powerset domain; not convex)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteMatrixSet(WeightElement):
    members: Tuple[np.ndarray, ...]
    domain = POWERSET
    is_convex = False

    def __post_init__(self):
        s = _stack(self.members)
        object.__setattr__(self, "members", tuple(_readonly(m) for m in s))

    @property
    def shape(self):
        return self.members[0].shape

    def contains(self, m, eps=DEFAULT_EPS):
        return finite_gamma_contains(self, m, eps)

    def interval_hull(self):
        return interval_alpha(self.members)

    def size(self):
        return len(self.members)

    def __eq__(self, other):
        return (
            isinstance(other, FiniteMatrixSet)
            and len(self.members) == len(other.members)
            and all(np.array_equal(a, b) for a, b in zip(self.members, other.members))
        )


def finite_alpha(ms: Sequence) -> FiniteMatrixSet:
    """Identity abstraction; exact duplicates are dropped, first occurrence kept."""
    s = _stack(ms)
    unique = []
    for m in s:
        if not any(np.array_equal(m, u) for u in unique):
            unique.append(m)
    return FiniteMatrixSet(tuple(unique))


def finite_gamma_contains(e: FiniteMatrixSet, m, eps: float = DEFAULT_EPS) -> bool:
    m = _check_shape(e.shape, m)
    return any(bool(np.all(np.abs(m - u) <= eps)) for u in e.members)


ALPHA = {INTERVAL: interval_alpha, OCTAGON: octagon_alpha, POWERSET: finite_alpha}
CONVEX = {INTERVAL: True, OCTAGON: True, POWERSET: False}


def alpha(domain: str, ms: Sequence) -> WeightElement:
    try:
        fn = ALPHA[domain]
    except KeyError:
        raise ValidationError(f"unknown domain {domain!r}; expected one of {DOMAIN_NAMES}") from None
    return fn(ms)


def is_convex_domain(domain: str) -> bool:
    if domain not in CONVEX:
        raise ValidationError(f"unknown domain {domain!r}; expected one of {DOMAIN_NAMES}")
    return CONVEX[domain]
