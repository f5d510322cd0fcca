"""Magnus embedding of the free group into truncated non-commuting power series.

x_i maps to 1 + X_i.  A series is stored as a list indexed by degree; the
degree-n part is an integer numpy vector of length d**n indexed by words read
as base-d numbers, so word concatenation is ``np.outer(a, b).ravel()``.

This gives a route to the Hall normal form of any group element modulo
gamma_(r+1) that is independent of the collection process: peel off basic
commutators weight by weight by solving against their Lie polynomials.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .errors import PreconditionError
from .fplie import ensure_basis


class Series:
    __slots__ = ("d", "r", "parts")

    def __init__(self, d, r, parts=None):
        self.d = d
        self.r = r
        if parts is None:
            parts = [np.zeros(d**n, dtype=object) for n in range(r + 1)]
            parts[0][0] = 1
        self.parts = parts

    @classmethod
    def one(cls, d, r):
        return cls(d, r)

    @classmethod
    def generator(cls, d, r, i):
        s = cls(d, r)
        if r >= 1:
            s.parts[1][i - 1] = 1
        return s

    def copy(self):
        return Series(self.d, self.r, [a.copy() for a in self.parts])

    def low_degree(self):
        """Smallest positive degree with a nonzero coefficient (r + 1 if none)."""
        for n in range(1, self.r + 1):
            if np.any(self.parts[n] != 0):
                return n
        return self.r + 1

    def __mul__(self, other):
        d, r = self.d, self.r
        a, b = self.parts, other.parts
        lo_a = [n for n in range(r + 1) if np.any(a[n] != 0)]
        lo_b = [n for n in range(r + 1) if np.any(b[n] != 0)]
        out = [np.zeros(d**n, dtype=object) for n in range(r + 1)]
        for i in lo_a:
            for j in lo_b:
                if i + j > r:
                    continue
                out[i + j] += np.outer(a[i], b[j]).ravel()
        return Series(d, r, out)

    def __eq__(self, other):
        return all(np.array_equal(x, y) for x, y in zip(self.parts, other.parts))

    def nilpart(self):
        s = self.copy()
        s.parts[0] = np.zeros(1, dtype=object)
        return s

    def power(self, m):
        """(1 + N)^m for any integer m via the binomial series; N nilpotent mod degree r + 1."""
        if self.parts[0][0] != 1:
            raise PreconditionError("only unipotent series can be raised to integer powers")
        N = self.nilpart()
        low = N.low_degree()
        out = Series.one(self.d, self.r)
        term = Series.one(self.d, self.r)
        k = 1
        while k * low <= self.r:
            term = term * N
            c = comb(m, k) if m >= 0 else (-1) ** k * comb(-m + k - 1, k)
            for n in range(self.r + 1):
                out.parts[n] = out.parts[n] + c * term.parts[n]
            k += 1
        return out

    def inverse(self):
        return self.power(-1)


def commutator(u, v):
    """u^-1 v^-1 u v."""
    return u.inverse() * v.inverse() * u * v


def tree_series(tree, d, r):
    """Series of a group commutator tree (ints are generator indices)."""
    if isinstance(tree, int):
        return Series.generator(d, r, tree)
    return commutator(tree_series(tree[0], d, r), tree_series(tree[1], d, r))


def _basic_tree(c):
    if c.gen is not None:
        return c.gen
    return (_basic_tree(c.left), _basic_tree(c.right))


@lru_cache(maxsize=None)
def _basic_series(d, rank, r):
    c = ensure_basis(d, r)[rank]
    return tree_series(_basic_tree(c), d, r)


def basic_series(c, r):
    return _basic_series(c.d, c.rank, r)


def lie_polynomial(tree, d):
    """Associative expansion of a Lie bracket tree with [a, b] = ab - ba."""
    if isinstance(tree, int):
        v = np.zeros(d, dtype=object)
        v[tree - 1] = 1
        return v
    a = lie_polynomial(tree[0], d)
    b = lie_polynomial(tree[1], d)
    return np.outer(a, b).ravel() - np.outer(b, a).ravel()


@lru_cache(maxsize=None)
def _solver(d, n):
    """Pivot columns and inverse matrix turning a degree-n Lie polynomial into Hall coordinates."""
    basis = ensure_basis(d, n)
    level = basis.by_weight[n]
    rows = [[Fraction(int(x)) for x in lie_polynomial(_basic_tree(c), d)] for c in level]
    k = len(rows)
    # choose k independent columns greedily
    pivots = []
    work = []
    for col in range(d**n):
        vec = [rows[i][col] for i in range(k)]
        for pv, wv in work:
            if vec[pv]:
                f = vec[pv] / wv[pv]
                vec = [a - f * b for a, b in zip(vec, wv)]
        nz = next((i for i, a in enumerate(vec) if a), None)
        if nz is not None:
            pivots.append(col)
            work.append((nz, vec))
            if len(pivots) == k:
                break
    # square system S with S[i][j] = rows[i][pivots[j]]; we need m with m S = target
    S = [[rows[i][c] for c in pivots] for i in range(k)]
    inv = _invert(S)
    full = np.array([[int(x) for x in r] for r in rows], dtype=object).reshape(k, d**n)
    return level, pivots, inv, full


def _invert(S):
    k = len(S)
    A = [list(row) + [Fraction(int(i == j)) for j in range(k)] for i, row in enumerate(S)]
    for col in range(k):
        piv = next(r for r in range(col, k) if A[r][col])
        A[col], A[piv] = A[piv], A[col]
        f = A[col][col]
        A[col] = [x / f for x in A[col]]
        for r in range(k):
            if r != col and A[r][col]:
                g = A[r][col]
                A[r] = [x - g * y for x, y in zip(A[r], A[col])]
    return [row[k:] for row in A]


def solve_hall_coordinates(vec, d, n):
    """Integers m_b with sum m_b * lie(b) == vec over the weight-n Hall elements."""
    level, pivots, inv, full = _solver(d, n)
    k = len(level)
    target = [Fraction(int(vec[c])) for c in pivots]
    m = [sum(target[i] * inv[i][j] for i in range(k)) for j in range(k)]
    if any(x.denominator != 1 for x in m):
        raise ArithmeticError("degree component is not an integral Lie polynomial")
    mi = np.array([int(x) for x in m], dtype=object)
    if k and not np.array_equal(mi.dot(full), vec):
        raise ArithmeticError("degree component is not a Lie polynomial")
    return [(c, int(x)) for c, x in zip(level, mi) if x]


def hall_normal_form(series):
    """Ordered Hall normal form [(basic commutator, exponent)] of a group element mod gamma_(r+1).

    The exponents are integers and may be negative; every basic commutator of
    weight <= r appears at most once, in ascending rank order.
    """
    d, r = series.d, series.r
    ensure_basis(d, r)
    rest = series
    entries = []
    for n in range(1, r + 1):
        low = rest.low_degree()
        if low < n:
            raise ArithmeticError("peeling left a lower-degree remainder")
        if low > n:
            continue
        coords = solve_hall_coordinates(rest.parts[n], d, n)
        prod = Series.one(d, r)
        for c, m in coords:
            prod = prod * basic_series(c, r).power(m)
        rest = prod.inverse() * rest
        entries.extend(coords)
    return entries


def word_series(factors, d, r):
    """Series of a product of (tree, exponent) pairs."""
    out = Series.one(d, r)
    for tree, m in factors:
        out = out * tree_series(tree, d, r).power(m)
    return out
