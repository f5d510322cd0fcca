"""Finite-window Hausdorff dimension estimators and the direct-product formula.

Sequences hold exact integer log-indices; ratios are Fractions.  A window
estimate is never reported as a limit: verdicts carry ``kind = "window"``
unless they come from a closed form (``kind = "exact"``).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction

from .errors import PreconditionError
from .mixedlie import lambda_dim


@dataclass(frozen=True)
class LogIndexSequence:
    entries: tuple  # (i, numerator, denominator)

    def __post_init__(self):
        ents = tuple((int(i), int(a), int(b)) for i, a, b in self.entries)
        object.__setattr__(self, "entries", ents)
        for i, a, b in ents:
            if b <= 0:
                raise PreconditionError(f"denominator at index {i} must be positive")
            if not 0 <= a <= b:
                raise PreconditionError(f"numerator at index {i} must lie in [0, denominator]")

    def __len__(self):
        return len(self.entries)

    def ratios(self):
        return [Fraction(a, b) for _, a, b in self.entries]

    def check_increasing(self):
        dens = [b for _, _, b in self.entries]
        return all(x < y for x, y in zip(dens, dens[1:]))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "numerator", "denominator", "ratio"])
        for i, a, b in self.entries:
            w.writerow([i, a, b, f"{a / b:.12g}"])
        return buf.getvalue()


def liminf_window(seq):
    """(minimum ratio over the window, trend of the last third).

    Trend: ``stable`` if the tail never drops, ``decreasing`` if it never
    rises and drops at least once, ``oscillating`` otherwise.
    """
    if not isinstance(seq, LogIndexSequence):
        seq = LogIndexSequence(tuple(seq))
    if len(seq) == 0:
        raise PreconditionError("empty sequence")
    if len(seq) < 3:
        raise PreconditionError("need at least 3 entries")
    # equal indices may appear in any order; sort to make the result order-free
    ents = sorted(seq.entries, key=lambda e: (e[0], Fraction(e[1], e[2])))
    r = [Fraction(a, b) for _, a, b in ents]
    tail = r[len(r) - max(2, len(r) // 3):]
    steps = [y - x for x, y in zip(tail, tail[1:])]
    if all(s >= 0 for s in steps):
        trend = "stable"
    elif all(s <= 0 for s in steps):
        trend = "decreasing"
    else:
        trend = "oscillating"
    return min(r), trend


def verdict_json(value, kind, trend=None):
    out = {"value": str(value), "float": float(value), "kind": kind}
    if trend is not None:
        out["trend"] = trend
    return json.dumps(out, sort_keys=True)


@dataclass(frozen=True)
class ProductSubgroupSpec:
    t: int
    k: int
    inner_dim: Fraction
    ranks: tuple

    def __post_init__(self):
        object.__setattr__(self, "inner_dim", Fraction(self.inner_dim))
        object.__setattr__(self, "ranks", tuple(int(x) for x in self.ranks))
        r = self.ranks
        if not r:
            raise PreconditionError("need at least one factor")
        if any(a < b for a, b in zip(r, r[1:])):
            raise PreconditionError("factor ranks must be non-increasing")
        if r[0] < 2:
            raise PreconditionError("the largest factor rank must be >= 2")
        if not 1 <= self.t <= len(r) or any(x != r[0] for x in r[: self.t]):
            raise PreconditionError("t must count exactly the factors of maximal rank")
        if self.t < len(r) and r[self.t] == r[0]:
            raise PreconditionError("t must count exactly the factors of maximal rank")
        if not 1 <= self.k <= self.t:
            raise PreconditionError("k must satisfy 1 <= k <= t")
        if not 0 <= self.inner_dim <= 1:
            raise PreconditionError("inner dimension must lie in [0, 1]")


def product_hdim(spec):
    """(inner + (k - 1)) / t, exact."""
    return (spec.inner_dim + spec.k - 1) / spec.t


def cumulative_lambda(d, n):
    """log_p |F : P_(n+1)(F)| for a free pro-p group of rank d: sum of dim Lambda_m, m <= n."""
    return sum(lambda_dim(d, m) for m in range(1, n + 1))


def product_logindex_sequence(spec, inner_numerators, W, start=None):
    """Exact (n, numerator, denominator) for levels start..W.

    ``inner_numerators[n-1]`` is log_p |H_1 P_(n+1) : P_(n+1)| inside the first
    factor (for instance the partial sums of a mixed subalgebra's dimensions).
    The numerator adds the k - 1 full factors; the denominator sums over all
    factors.  The default window is the trailing third (at least 3 levels),
    matching the tail used by ``liminf_window`` for its trend.
    """
    if len(inner_numerators) < W:
        raise PreconditionError(f"inner sequence has {len(inner_numerators)} levels, window needs {W}")
    if start is None:
        start = max(1, W - max(3, W // 3) + 1)
    if not 1 <= start <= W:
        raise PreconditionError("window start must lie in 1..W")
    out = []
    for n in range(start, W + 1):
        D = [cumulative_lambda(d, n) for d in spec.ranks]
        inner = int(inner_numerators[n - 1])
        if not 0 <= inner <= D[0]:
            raise PreconditionError(f"inner numerator at level {n} exceeds the factor's log-index")
        num = inner + sum(D[1 : spec.k])
        out.append((n, num, sum(D)))
    return LogIndexSequence(tuple(out))


def partial_sums(dims):
    out, s = [], 0
    for x in dims:
        s += x
        out.append(s)
    return out


def full_inner(d, W):
    return [cumulative_lambda(d, n) for n in range(1, W + 1)]
