"""The free F_p[pi]-Lie algebra Lambda graded by weight, with pi of degree 1.

Lambda_n is spanned by the generalised basic commutators pi^(n-m) c with c a
basic commutator of weight m <= n.  Elements are dicts keyed by
``(pi_power, core_rank)``; brackets multiply pi-powers and delegate cores to
:mod:`hausspec.fplie`.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction

from .errors import PreconditionError
from .fpech import FpEchelon
from .fplie import _BASES, BasicCommutator, _add_into, basis_bracket, ensure_basis, witt_dimension
from .padic import is_prime


def lambda_dim(d, n):
    """dim Lambda_n = sum of Witt dimensions of weights 1..n."""
    if d < 1 or n < 1:
        raise PreconditionError(f"lambda_dim needs d >= 1 and n >= 1, got d={d}, n={n}")
    return sum(witt_dimension(d, m) for m in range(1, n + 1))


def lambda_circ_dim(d, n):
    """dim of the weight-n part of Lambda° = [Lambda, Lambda]."""
    return lambda_dim(d, n) - d if n >= 2 else 0


def l_circ(d, n):
    """l°(n) = sum over 2 <= m <= n of dim Lambda°_m."""
    return sum(lambda_circ_dim(d, m) for m in range(2, n + 1))


def _require_odd(p):
    if not is_prime(p):
        raise PreconditionError(f"p={p} is not prime")
    if p == 2:
        raise PreconditionError("the mixed model needs an odd prime; p = 2 has a different structure")


@dataclass(frozen=True, eq=False)
class GeneralizedBasicCommutator:
    """pi^k c, of weight k + wt(c)."""

    pi_power: int
    core: BasicCommutator

    def __post_init__(self):
        if self.pi_power < 0:
            raise PreconditionError("pi_power must be >= 0")

    @property
    def weight(self):
        return self.pi_power + self.core.weight

    @property
    def key(self):
        return (self.pi_power, self.core.rank)

    def __eq__(self, other):
        if not isinstance(other, GeneralizedBasicCommutator):
            return NotImplemented
        return self.key == other.key and self.core.d == other.core.d

    def __hash__(self):
        return hash((self.key, self.core.d))

    def __lt__(self, other):
        return self.key < other.key

    def __str__(self):
        if self.pi_power == 0:
            return str(self.core)
        if self.pi_power == 1:
            return f"pi*{self.core}"
        return f"pi^{self.pi_power}*{self.core}"

    def to_dict(self):
        return {"pi_power": self.pi_power, "core": str(self.core)}


class MixedElement:
    __slots__ = ("d", "p", "terms")

    def __init__(self, d, p, terms=None):
        self.d = d
        self.p = p
        self.terms = {k: c % p for k, c in (terms or {}).items() if c % p}

    @classmethod
    def from_gbc(cls, g, p, coeff=1):
        return cls(g.core.d, p, {g.key: coeff})

    @classmethod
    def from_lie(cls, elem, k=0):
        return cls(elem.d, elem.p, {(k, r): c for r, c in elem.terms.items()})

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def weights(self):
        basis = _BASES[self.d]
        return sorted({k + basis.elements[r].weight for k, r in self.terms})

    def degree(self):
        ws = self.weights()
        if not ws:
            return None
        if len(ws) > 1:
            raise PreconditionError(f"element {self} is not homogeneous (weights {ws})")
        return ws[0]

    def _check(self, other):
        if self.d != other.d or self.p != other.p:
            raise PreconditionError("elements live in different algebras")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        _add_into(out, other.terms, 1)
        return MixedElement(self.d, self.p, out)

    def __sub__(self, other):
        self._check(other)
        out = dict(self.terms)
        _add_into(out, other.terms, -1)
        return MixedElement(self.d, self.p, out)

    def __neg__(self):
        return MixedElement(self.d, self.p, {k: -c for k, c in self.terms.items()})

    def __rmul__(self, scalar):
        return MixedElement(self.d, self.p, {k: scalar * c for k, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, MixedElement):
            return NotImplemented
        return (self.d, self.p, self.terms) == (other.d, other.p, other.terms)

    def __hash__(self):
        return hash((self.d, self.p, tuple(sorted(self.terms.items()))))

    def __str__(self):
        if not self.terms:
            return "0"
        basis = _BASES[self.d]
        parts = []
        for (k, r), c in sorted(self.terms.items()):
            g = GeneralizedBasicCommutator(k, basis.elements[r])
            parts.append(f"{c}*{g}")
        return " + ".join(parts)

    __repr__ = __str__


def pi_apply(a, k):
    """Multiply by pi^k: every pi_power goes up by k."""
    if k < 0:
        raise PreconditionError("pi_apply needs k >= 0")
    return MixedElement(a.d, a.p, {(kk + k, r): c for (kk, r), c in a.terms.items()})


def mixed_bracket(a, b, W):
    """[a, b] in Lambda, terms of weight > W dropped."""
    a._check(b)
    basis = ensure_basis(a.d, W)
    els = basis.elements
    out = {}
    for (ka, ra), ca in a.terms.items():
        wa = ka + els[ra].weight
        for (kb, rb), cb in b.terms.items():
            if wa + kb + els[rb].weight > W:
                continue
            k = ka + kb
            for r, c in basis_bracket(a.d, ra, rb).items():
                key = (k, r)
                nv = out.get(key, 0) + c * ca * cb
                if nv % a.p:
                    out[key] = nv % a.p
                else:
                    out.pop(key, None)
    return MixedElement(a.d, a.p, out)


def weight_basis(d, n):
    """Generalised basic commutators of weight n, ascending pi_power then core rank."""
    basis = ensure_basis(d, n)
    return [GeneralizedBasicCommutator(n - m, c) for m in range(n, 0, -1) for c in basis.by_weight[m]]


class MixedGradedSubspace:
    def __init__(self, d, p, W):
        self.d = d
        self.p = p
        self.W = W
        self.spaces = {n: FpEchelon(p) for n in range(1, W + 1)}

    def dim(self, n):
        return len(self.spaces[n]) if n in self.spaces else 0

    def dims(self):
        return [self.dim(n) for n in range(1, self.W + 1)]

    def elements(self, n):
        return [MixedElement(self.d, self.p, row) for row in self.spaces[n].rows()]

    def contains(self, elem):
        basis = ensure_basis(self.d, self.W)
        by_deg = {}
        for (k, r), c in elem.terms.items():
            w = k + basis.elements[r].weight
            if w > self.W:
                return False
            by_deg.setdefault(w, {})[(k, r)] = c
        return all(self.spaces[n].contains(v) for n, v in by_deg.items())

    def is_pi_stable(self):
        """pi maps each represented degree n < W into degree n + 1."""
        return all(
            self.spaces[n + 1].contains(pi_apply(e, 1).terms) for n in range(1, self.W) for e in self.elements(n)
        )

    def __eq__(self, other):
        if not isinstance(other, MixedGradedSubspace):
            return NotImplemented
        return (self.d, self.p, self.W) == (other.d, other.p, other.W) and all(
            self.spaces[n] == other.spaces[n] for n in range(1, self.W + 1)
        )

    def matrix(self, n):
        cols = [g.key for g in weight_basis(self.d, n)]
        index = {k: i for i, k in enumerate(cols)}
        rows = []
        for row in self.spaces[n].rows():
            dense = [0] * len(cols)
            for k, c in row.items():
                dense[index[k]] = c
            rows.append(dense)
        return rows

    def to_json(self):
        return json.dumps(
            {"d": self.d, "p": self.p, "W": self.W, "degrees": {str(n): self.matrix(n) for n in range(1, self.W + 1)}},
            sort_keys=True,
        )


def _as_element(g, d, p):
    if isinstance(g, MixedElement):
        return g
    if isinstance(g, GeneralizedBasicCommutator):
        return MixedElement.from_gbc(g, p)
    from .fplie import LieElement

    if isinstance(g, LieElement):
        return MixedElement.from_lie(g)
    raise PreconditionError(f"cannot use {g!r} as a mixed generator")


def mixed_closure(generators, W, d=None, p=None):
    """Smallest graded subspace holding the generators, closed under brackets and pi.

    ``H_n = G_n + pi H_(n-1) + sum_g [g, H_(n - wt g)]``; pi commutes with
    brackets, so pi-multiples of right-normed brackets span the subalgebra.
    """
    generators = list(generators)
    if generators and d is None:
        g0 = generators[0]
        d = g0.core.d if isinstance(g0, GeneralizedBasicCommutator) else g0.d
    if generators and p is None:
        g0 = generators[0]
        if isinstance(g0, GeneralizedBasicCommutator):
            raise PreconditionError("mixed_closure of commutators needs an explicit p")
        p = g0.p
    if d is None or p is None:
        raise PreconditionError("empty generator list needs explicit d and p")
    _require_odd(p)
    ensure_basis(d, W)
    gens = []
    for g in generators:
        e = _as_element(g, d, p)
        if e.is_zero():
            continue
        ws = e.weights()
        if len(ws) != 1:
            raise PreconditionError(f"generator {e} is not homogeneous (weights {ws})")
        if ws[0] > W:
            raise PreconditionError(f"generator {e} has weight {ws[0]} above the cutoff {W}")
        gens.append((ws[0], e))
    H = MixedGradedSubspace(d, p, W)
    for n in range(1, W + 1):
        _fill_degree(H, n, gens, W)
    return H


def _fill_degree(H, n, gens, W, full=None):
    space = H.spaces[n]
    if full is None:
        full = lambda_dim(H.d, n)
    for w, g in gens:
        if w == n:
            space.add(g.terms)
    if n > 1:
        for row in H.spaces[n - 1].rows():
            if len(space) == full:
                return
            space.add({(k + 1, r): c for (k, r), c in row.items()})
    for w, g in gens:
        m = n - w
        if m < 1:
            continue
        for row in H.spaces[m].rows():
            if len(space) == full:
                return
            space.add(mixed_bracket(g, MixedElement(H.d, H.p, row), W).terms)


def mixed_density_sequence(H, W=None):
    """Exact Delta_1..Delta_W against the full Lambda."""
    W = H.W if W is None else W
    if W > H.W:
        raise PreconditionError(f"subspace only known up to weight {H.W}")
    out, num, den = [], 0, 0
    for n in range(1, W + 1):
        num += H.dim(n)
        den += lambda_dim(H.d, n)
        out.append(Fraction(num, den))
    return out


# --- density-prescribed construction ----------------------------------------


@dataclass
class TraceRow:
    n: int
    l_circ: int
    partial_dim: int
    lower_bound: Fraction
    ratio: Fraction
    added: int
    stalled: bool

    @property
    def cond_i(self):
        return self.lower_bound <= self.ratio

    def cond_ii(self, alpha):
        return self.ratio <= alpha


@dataclass
class Construction:
    alpha: Fraction
    d: int
    p: int
    W: int
    generators: list
    trace: list
    subalgebra: MixedGradedSubspace

    def condition_i_holds(self):
        return all(row.cond_i for row in self.trace)

    def condition_ii_stages(self):
        return [row.n for row in self.trace if row.added and row.cond_ii(self.alpha)]

    def generators_json(self):
        return json.dumps([g.to_dict() for g in self.generators])

    def trace_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "l_circ", "partial_dim", "lower_bound", "ratio", "added", "stalled"])
        for r in self.trace:
            w.writerow([r.n, r.l_circ, r.partial_dim, r.lower_bound, r.ratio, r.added, int(r.stalled)])
        return buf.getvalue()


def construct_density_subalgebra(alpha, d, p, W):
    """Build generalised basic commutators generating H <= Lambda° of density about alpha.

    Stage k: if the ratio of H(k-1) at n = k is at most alpha, greedily add
    weight-k generalised basic commutators (core weight >= 2, ascending
    pi_power then core rank) that are new to the span, while the ratio stays
    <= alpha.  Otherwise stall.  Every ratio is an exact rational.
    """
    alpha = Fraction(alpha)
    if not 0 <= alpha <= 1:
        raise PreconditionError(f"alpha={alpha} must lie in [0, 1]")
    if W < 2:
        raise PreconditionError("W must be at least 2 to place any generator")
    _require_odd(p)
    ensure_basis(d, W)
    H = MixedGradedSubspace(d, p, W)
    gens = []
    chosen = []
    trace = []
    partial = 0
    for k in range(2, W + 1):
        full = lambda_circ_dim(d, k)
        _fill_degree(H, k, gens, W, full=full)
        lc = l_circ(d, k)
        space = H.spaces[k]
        stalled = Fraction(partial + len(space), lc) > alpha
        added = 0
        stage = []
        if not stalled:
            snapshot = space.copy()
            for g in weight_basis(d, k):
                if g.core.weight < 2:
                    continue
                if Fraction(partial + len(space) + 1, lc) > alpha:
                    break
                e = MixedElement.from_gbc(g, p)
                if space.add(e.terms):
                    gens.append((k, e))
                    stage.append(g)
                    added += 1
            chosen.extend(_prune(snapshot, stage))
        partial += len(space)
        trace.append(
            TraceRow(
                n=k,
                l_circ=lc,
                partial_dim=partial,
                lower_bound=alpha - Fraction(1, lc),
                ratio=Fraction(partial, lc),
                added=added,
                stalled=stalled,
            )
        )
    return Construction(alpha, d, p, W, chosen, trace, H)


def _prune(snapshot, stage):
    """Drop stage generators lying in H(k-1)_k plus the span of the other new ones.

    Lighter generators reach degree k only through H(k-1)_k, so this is the
    full minimality test for weight-k generators.
    """
    kept = list(stage)
    for g in list(kept):
        sp = snapshot.copy()
        for h in kept:
            if h is not g:
                sp.add({h.key: 1})
        if sp.contains({g.key: 1}):
            kept.remove(g)
    return kept


def parse_gbc(text, d, W):
    """Parse ``pi^k*[x2,x1]`` / ``pi*[x2,x1]`` / ``[x2,x1]``."""
    text = text.strip()
    k = 0
    if text.startswith("pi"):
        head, _, rest = text.partition("*")
        k = 1 if head == "pi" else int(head[3:])
        text = rest
    basis = ensure_basis(d, W)
    return GeneralizedBasicCommutator(k, basis.parse(text))
