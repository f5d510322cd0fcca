"""Filtration series of L = Z_p x + Z_p y with a prescribed finite Hausdorff spectrum.

For a target X = {0 = xi_1 < ... < xi_n = 1} and a gap sequence e(0) < e(1) < ...
the term of index i = k + j n (1 <= k <= n) is

    L_i = p^e(i-1) Z_p x~ + p^e(i) Z_p y,   x~ = x + (1 - p^(k+t)) / (1 - p^k) y,

with t the largest multiple of k below (e(i) - e(i-1)) (1 - xi_k).  The line
Z_p z_k, z_k = x + y / (1 - p^k), then has dimension xi_k, and every other
line has dimension 1.

For a line H = Z_p w, w = p^m x + b y, the order of w modulo L_i is

    max(e(i-1) - m, e(i) - v_p(b - p^m c), 0),   c = (1 - p^(k+t)) / (1 - p^k),

and v_p(b - p^m c) = v_p(a + p^(m+k+t) / (1 - p^k)) with a = b - p^m / (1 - p^k)
is evaluated without ever forming p^(m+k+t), so tower-sized exponents work.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InconclusiveError, PreconditionError, ResourceLimitError, max_oracle_exponent
from .lattice import PadicLattice, log_index
from .padic import is_prime, vp

DEFAULT_TOLERANCE = Fraction(1, 1000)


@dataclass(frozen=True)
class SpectrumTarget:
    X: tuple
    p: int

    def __post_init__(self):
        X = tuple(Fraction(x) for x in self.X)
        object.__setattr__(self, "X", X)
        if not is_prime(self.p):
            raise PreconditionError(f"p={self.p} is not prime")
        if len(X) < 2:
            raise PreconditionError("X needs at least the two points 0 and 1")
        if X[0] != 0 or X[-1] != 1:
            raise PreconditionError("X must start at 0 and end at 1")
        if any(a >= b for a, b in zip(X, X[1:])):
            raise PreconditionError("X must be strictly ascending")

    @property
    def n(self):
        return len(self.X)

    def xi(self, k):
        return self.X[k - 1]

    @classmethod
    def parse(cls, text, p):
        return cls(tuple(Fraction(s.strip()) for s in text.split(",") if s.strip()), p)


@dataclass(frozen=True)
class GapSequence:
    """e(i) for i >= 0: the default tower 2^(2^i), base^i, or explicit values."""

    mode: str = "paper_tower"
    base: int | None = None
    values: tuple | None = None

    def __post_init__(self):
        if self.mode not in ("paper_tower", "custom"):
            raise PreconditionError(f"unknown gap mode {self.mode!r}")
        if self.mode == "custom":
            if self.values is None and (self.base is None or self.base < 2):
                raise PreconditionError("custom gaps need base >= 2 or an explicit value list")

    def e(self, i):
        if i < 0:
            raise PreconditionError("gap index must be >= 0")
        if self.mode == "paper_tower":
            return 1 << (1 << i)
        if self.values is not None:
            if i >= len(self.values):
                raise PreconditionError(f"gap window ends at index {len(self.values) - 1}")
            return int(self.values[i])
        return self.base**i

    def check_window(self, i_max):
        vals = [self.e(i) for i in range(i_max + 1)]
        if any(a >= b for a, b in zip(vals, vals[1:])):
            raise PreconditionError("gap sequence must be strictly increasing")
        ratios = [Fraction(a, b) for a, b in zip(vals, vals[1:])]
        if any(r2 > r1 for r1, r2 in zip(ratios, ratios[1:])):
            raise PreconditionError("consecutive gap ratios e(i-1)/e(i) must not increase")
        return vals

    def to_dict(self):
        d = {"mode": self.mode}
        if self.base is not None:
            d["base"] = self.base
        if self.values is not None:
            d["values"] = [str(v) for v in self.values]
        return d

    @classmethod
    def from_dict(cls, data):
        mode = data.get("mode", "paper_tower")
        if mode in ("tower", "paper"):
            mode = "paper_tower"
        vals = data.get("values")
        return cls(mode, data.get("base"), tuple(int(v) for v in vals) if vals else None)


@dataclass(frozen=True)
class IndexData:
    i: int
    k: int
    j: int
    t: int
    E0: int
    E1: int

    @property
    def log_index(self):
        return self.E0 + self.E1


def _t_value(E0, E1, xi, k):
    """Largest multiple of k that is <= (E1 - E0)(1 - xi)."""
    bound = (E1 - E0) * (1 - xi)
    return math.floor(bound / k) * k


@dataclass
class Zp2Filtration:
    target: SpectrumTarget
    gaps: GapSequence
    i_max: int
    indices: list = field(default_factory=list)

    @property
    def p(self):
        return self.target.p

    @property
    def n(self):
        return self.target.n

    def data(self, i):
        if not 1 <= i <= self.i_max:
            raise PreconditionError(f"index {i} outside the window 1..{self.i_max}")
        return self.indices[i - 1]

    def residue_class(self, i):
        return (i - 1) % self.n + 1

    def x_tilde_coefficient(self, i):
        """(1 - p^(k+t)) / (1 - p^k) as an exact rational (only for moderate exponents)."""
        d = self.data(i)
        if d.k + d.t > max_oracle_exponent():
            raise ResourceLimitError(f"k + t = {d.k + d.t} exceeds the oracle exponent cap")
        p = self.p
        return Fraction(1 - p ** (d.k + d.t), 1 - p**d.k)

    def lattice(self, i):
        """L_i as an explicit lattice; guarded by the oracle exponent cap."""
        if i == 0:
            return PadicLattice.standard(self.p, 2)
        d = self.data(i)
        if d.E1 > max_oracle_exponent():
            raise ResourceLimitError(f"e({i}) = {d.E1} exceeds the oracle exponent cap {max_oracle_exponent()}")
        c = self.x_tilde_coefficient(i)
        P0 = Fraction(self.p) ** d.E0
        return PadicLattice(self.p, [[P0, P0 * c], [0, Fraction(self.p) ** d.E1]])

    def to_dict(self):
        return {
            "p": self.p,
            "X": [str(x) for x in self.target.X],
            "gaps": self.gaps.to_dict(),
            "i_max": self.i_max,
            "indices": [
                {"i": d.i, "k": d.k, "j": d.j, "t": str(d.t), "e_prev": str(d.E0), "e": str(d.E1),
                 "log_index": str(d.log_index)}
                for d in self.indices
            ],
        }


def build_filtration(target, gaps, i_max):
    """All index data for 1 <= i <= i_max, with the structural invariants checked."""
    if i_max < 1:
        raise PreconditionError("i_max must be >= 1")
    vals = gaps.check_window(i_max)
    F = Zp2Filtration(target, gaps, i_max)
    n = target.n
    for i in range(1, i_max + 1):
        k = (i - 1) % n + 1
        j = (i - 1) // n
        E0, E1 = vals[i - 1], vals[i]
        xi = target.xi(k)
        if xi < 1:
            t = _t_value(E0, E1, xi, k)
            if t < k:
                raise PreconditionError(
                    f"no positive multiple of k={k} fits below (e({i})-e({i - 1}))(1-xi) at index {i}; "
                    "use faster-growing gaps"
                )
        else:
            t = 0
        F.indices.append(IndexData(i, k, j, t, E0, E1))
    _verify(F)
    return F


def _verify(F):
    prev = (0, 0)
    for d in F.indices:
        # p^E1 L <= L_i <= p^E0 L holds because x~ is p-integral and E0 < E1
        if not d.E0 < d.E1:
            raise AssertionError("gap sequence is not increasing")
        if (d.E0, d.E1) < prev:
            raise AssertionError("filtration is not descending")
        prev = (d.E0, d.E1)
    for d in F.indices:
        if d.E1 <= 64:
            Li = F.lattice(d.i)
            L = PadicLattice.standard(F.p, 2)
            if not (Li.contains(L.p_power(d.E1)) and L.p_power(d.E0).contains(Li)):
                raise AssertionError(f"inclusion chain fails at index {d.i}")
            if log_index(L, Li) != d.log_index:
                raise AssertionError(f"log-index mismatch at index {d.i}")
    for a, b in zip(F.indices, F.indices[1:]):
        if b.E1 <= 64 and not F.lattice(a.i).contains(F.lattice(b.i)):
            raise AssertionError(f"L_{b.i} is not inside L_{a.i}")


@dataclass(frozen=True)
class RationalSubgroupSpec:
    """full | zero | line Z_p (p^m x + b y) | yline Z_p (b y)."""

    kind: str
    m: int = 0
    b: Fraction = Fraction(0)
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("full", "zero", "line", "yline"):
            raise PreconditionError(f"unknown subgroup kind {self.kind!r}")
        object.__setattr__(self, "b", Fraction(self.b))

    @classmethod
    def full(cls):
        return cls("full", label="full")

    @classmethod
    def zero(cls):
        return cls("zero", label="0")

    @classmethod
    def z_line(cls, k, p):
        return cls("line", 0, Fraction(1, 1 - p**k), label=f"z_{k}")

    @classmethod
    def from_vector(cls, alpha, beta, p, label=""):
        """Z_p (alpha x + beta y), normalised so the x-coordinate is a power of p."""
        alpha, beta = Fraction(alpha), Fraction(beta)
        if alpha == 0 and beta == 0:
            return cls.zero()
        if alpha == 0:
            return cls("yline", 0, beta, label=label)
        m = vp(alpha, p)
        unit = alpha / Fraction(p) ** m
        if m < 0:
            raise PreconditionError("the line must lie inside L (p-integral generator)")
        return cls("line", m, beta / unit, label=label)

    def to_dict(self):
        return {"kind": self.kind, "m": self.m, "b": str(self.b), "label": self.label}


def _line_rows(H, p):
    if H.kind == "full":
        return [[1, 0], [0, 1]]
    if H.kind == "zero":
        return []
    if H.kind == "yline":
        return [[0, H.b]]
    return [[Fraction(p) ** H.m, H.b]]


def _val_shifted(a, shift, p, k):
    """v_p(a + p^shift / (1 - p^k)) for rational a, without forming p^shift unless needed."""
    if a == 0:
        return shift
    va = vp(a, p)
    if va < shift:
        return va
    if va > shift:
        return shift
    # equal valuations: shift equals v(a), which is small, so compute exactly
    return vp(a + Fraction(p) ** shift / (1 - p**k), p)


def _check_line(H, p):
    if H.kind == "line" and (H.m < 0 or not _p_integral(H.b, p)):
        raise PreconditionError("line generator must lie in L")
    if H.kind == "yline" and not _p_integral(H.b, p):
        raise PreconditionError("line generator must lie in L")


def _p_integral(x, p):
    return x == 0 or vp(x, p) >= 0


def line_logindex_closedform(H, F, i):
    """(log_p |H + L_i : L_i|, log_p |L : L_i|) from the symbolic formula."""
    d = F.data(i)
    p = F.p
    den = d.E0 + d.E1
    _check_line(H, p)
    if H.kind == "full":
        return den, den
    if H.kind == "zero":
        return 0, den
    if H.kind == "yline":
        return max(d.E1 - vp(H.b, p), 0), den
    a = H.b - Fraction(p) ** H.m / (1 - p**d.k)
    v = _val_shifted(a, H.m + d.k + d.t, p, d.k)
    return max(d.E0 - H.m, d.E1 - v, 0), den


def line_logindex_printed(H, F, i):
    """The two branch formulas exactly as printed, with their proviso.

    Branch 1 (H = Z_p z_k along I_k): e(i-1) + (e(i) - e(i-1) - k - t).
    Branch 2: (e(i-1) - m) + (e(i) - e(i-1) + m - l), l = v_p(b - p^m (1 - p^k)^-1),
    valid only when k + t > l.
    """
    d = F.data(i)
    p = F.p
    den = d.E0 + d.E1
    if H.kind != "line":
        raise PreconditionError("the printed branches cover lines not parallel to y only")
    a = H.b - Fraction(p) ** H.m / (1 - p**d.k)
    if a == 0:
        if H.m != 0:
            raise PreconditionError("branch 1 is printed for Z_p z_k itself")
        return d.E0 + (d.E1 - d.E0 - d.k - d.t), den
    l = vp(a, p)
    if not d.k + d.t > l:
        raise PreconditionError("proviso k + t > l unmet; use the oracle")
    return (d.E0 - H.m) + (d.E1 - d.E0 + H.m - l), den


def line_logindex_oracle(H, F, i):
    """Same pair computed from explicit lattices and Hermite forms."""
    _check_line(H, F.p)
    Li = F.lattice(i)
    L = PadicLattice.standard(F.p, 2)
    den = log_index(L, Li)
    rows = _line_rows(H, F.p)
    if not rows:
        return 0, den
    return den - log_index(L, Li + rows), den


def z_line_transversality(k, l, p):
    """v_p((1 - p^k)^-1 - (1 - p^l)^-1), which equals min(k, l) for k != l."""
    return vp(Fraction(1, 1 - p**k) - Fraction(1, 1 - p**l), p)


@dataclass
class SampleVerdict:
    label: str
    classes: dict  # k -> [(i, num, den)]
    estimate: Fraction | None
    value: Fraction | None
    status: str  # conclusive | inconclusive

    def to_dict(self):
        return {
            "label": self.label,
            "classes": {
                str(k): [{"i": i, "numerator": str(a), "denominator": str(b), "ratio": _fmt_ratio(a, b)}
                         for i, a, b in seq]
                for k, seq in self.classes.items()
            },
            "estimate": _fmt(self.estimate),
            "value": None if self.value is None else str(self.value),
            "kind": "window",
            "status": self.status,
        }


def _fmt(x):
    if x is None:
        return None
    return f"{float(x):.12g}"


def _fmt_ratio(a, b):
    return _fmt(Fraction(a, b))


@dataclass
class ScanReport:
    X: tuple
    verdicts: list
    tolerance: Fraction

    @property
    def values(self):
        return sorted({v.value for v in self.verdicts if v.value is not None})

    @property
    def inconclusive(self):
        return sum(v.status != "conclusive" for v in self.verdicts)

    @property
    def matches_target(self):
        return tuple(self.values) == tuple(self.X)

    def to_dict(self):
        return {
            "X": [str(x) for x in self.X],
            "tolerance": str(self.tolerance),
            "values": [str(v) for v in self.values],
            "matches_target": self.matches_target,
            "inconclusive": self.inconclusive,
            "samples": [v.to_dict() for v in self.verdicts],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample", "class", "i", "numerator", "denominator", "ratio"])
        for v in self.verdicts:
            for k, seq in v.classes.items():
                for i, a, b in seq:
                    w.writerow([v.label, k, i, a, b, _fmt_ratio(a, b)])
        return buf.getvalue()


def spectrum_scan(F, samples, window=None, tolerance=DEFAULT_TOLERANCE, logindex=line_logindex_closedform):
    """Classify each sample by the min over residue classes of its tail ratio.

    Per class the last two ratios in the window are used: the estimate is the
    last one, and a verdict is conclusive only if it lies within the tolerance
    of a point of X and is no farther from that point than the previous ratio.
    """
    lo, hi = window if window else (1, F.i_max)
    if hi > F.i_max or lo < 1:
        raise PreconditionError("scan window exceeds the filtration")
    if hi - lo + 1 < 2 * F.n:
        raise PreconditionError("window must cover at least two full residue cycles")
    out = []
    for idx, H in enumerate(samples):
        label = H.label or f"sample_{idx}"
        classes = {}
        for i in range(lo, hi + 1):
            num, den = logindex(H, F, i)
            classes.setdefault(F.residue_class(i), []).append((i, num, den))
        tails = {k: [Fraction(a, b) for _, a, b in seq[-2:]] for k, seq in classes.items()}
        k_min = min(tails, key=lambda k: (tails[k][-1], k))
        est = tails[k_min][-1]
        prev = tails[k_min][0]
        target = min(F.target.X, key=lambda x: (abs(x - est), x))
        conclusive = abs(target - est) <= tolerance and abs(target - est) <= abs(target - prev)
        out.append(SampleVerdict(label, classes, est, target if conclusive else None,
                                 "conclusive" if conclusive else "inconclusive"))
    return ScanReport(F.target.X, out, tolerance)


def random_line(rng, p, max_val=6, label=""):
    """A random line p^m x + b y with m <= max_val and b of valuation <= max_val."""
    m = rng.randint(0, max_val)
    v = rng.randint(0, max_val)
    num = rng.randint(1, 10**6)
    while num % p == 0:
        num = rng.randint(1, 10**6)
    den = rng.randint(1, 10**3)
    while den % p == 0:
        den = rng.randint(1, 10**3)
    sign = rng.choice((-1, 1))
    return RationalSubgroupSpec("line", m, sign * Fraction(num * p**v, den), label=label)


def standard_samples(target, p):
    return [RationalSubgroupSpec.zero(), RationalSubgroupSpec.full()] + [
        RationalSubgroupSpec.z_line(k, p) for k in range(1, target.n)
    ]


def require_conclusive(report):
    if report.inconclusive:
        raise InconclusiveError(f"{report.inconclusive} sample(s) inconclusive")
