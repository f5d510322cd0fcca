"""Free Lie algebras over F_p: Hall basis, Witt dimensions, brackets, closures.

Basic commutators follow Marshall Hall's inductive definition.  Within one
weight they are ordered lexicographically by the ranks ``(rank(u), rank(v))``
of their top bracket ``[u, v]``, so ranks are global and stable when the
weight cutoff grows.  Brackets of basis elements are normalised over the
integers (the Hall basis is a Z-basis of the free Lie ring) and reduced mod p
only when an element is formed.
"""

from __future__ import annotations

import json
import re
import threading
from fractions import Fraction

from .errors import PreconditionError, ResourceLimitError, max_basis_size, max_weight
from .fpech import FpEchelon
from .padic import is_prime


def mobius(n):
    if n < 1:
        raise PreconditionError("mobius needs n >= 1")
    result, m, f = 1, n, 2
    while f * f <= m:
        if m % f == 0:
            m //= f
            if m % f == 0:
                return 0
            result = -result
        f += 1
    if m > 1:
        result = -result
    return result


def witt_dimension(d, n):
    """Dimension of the weight-n part of the free Lie algebra on d generators.

    ``(1/n) * sum_{m | n} mu(m) d^(n/m)``; exact for every d and n.
    """
    if d < 1 or n < 1:
        raise PreconditionError(f"witt_dimension needs d >= 1 and n >= 1, got d={d}, n={n}")
    total = sum(mobius(m) * d ** (n // m) for m in range(1, n + 1) if n % m == 0)
    return total // n


class BasicCommutator:
    """A basic commutator: a generator ``x_i`` or a bracket ``[u, v]``.

    Equality and hashing go through ``(d, rank)``; ranks are global per d.
    """

    __slots__ = ("d", "rank", "weight", "gen", "left", "right")

    def __init__(self, d, rank, weight, gen=None, left=None, right=None):
        self.d = d
        self.rank = rank
        self.weight = weight
        self.gen = gen
        self.left = left
        self.right = right

    @property
    def is_generator(self):
        return self.gen is not None

    def __eq__(self, other):
        if not isinstance(other, BasicCommutator):
            return NotImplemented
        return self.d == other.d and self.rank == other.rank

    def __lt__(self, other):
        return self.rank < other.rank

    def __le__(self, other):
        return self.rank <= other.rank

    def __hash__(self):
        return hash((self.d, self.rank))

    def __str__(self):
        if self.gen is not None:
            return f"x{self.gen}"
        return f"[{self.left},{self.right}]"

    def __repr__(self):
        return f"BasicCommutator({self}, rank={self.rank})"


class HallBasis:
    """All basic commutators of weight <= max_weight in the fixed total order."""

    def __init__(self, d, max_weight_):
        if d < 1 or max_weight_ < 1:
            raise PreconditionError("hall basis needs d >= 1 and max_weight >= 1")
        if max_weight_ > max_weight():
            raise ResourceLimitError(f"weight cutoff {max_weight_} exceeds cap {max_weight()}")
        expected = sum(witt_dimension(d, n) for n in range(1, max_weight_ + 1))
        if expected > max_basis_size():
            raise ResourceLimitError(
                f"Hall basis for d={d}, W={max_weight_} has {expected} elements, cap is {max_basis_size()}"
            )
        self.d = d
        self.max_weight = max_weight_
        self.elements = []
        self.by_weight = {}
        self._pair = {}
        gens = [BasicCommutator(d, i, 1, gen=i + 1) for i in range(d)]
        self.elements.extend(gens)
        self.by_weight[1] = gens
        for n in range(2, max_weight_ + 1):
            cands = []
            for wu in range(n - 1, 0, -1):
                for u in self.by_weight[wu]:
                    for v in self.by_weight[n - wu]:
                        if u.rank <= v.rank:
                            continue
                        if u.gen is None and v.rank < u.right.rank:
                            continue
                        cands.append((u.rank, v.rank, u, v))
            cands.sort(key=lambda c: (c[0], c[1]))
            level = []
            for _, _, u, v in cands:
                c = BasicCommutator(d, len(self.elements), n, left=u, right=v)
                self.elements.append(c)
                self._pair[(u.rank, v.rank)] = c
                level.append(c)
            self.by_weight[n] = level

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, rank):
        return self.elements[rank]

    def weight_of(self, rank):
        return self.elements[rank].weight

    def pair(self, u_rank, v_rank):
        """The basic commutator [u, v] if that pair is basic, else None."""
        return self._pair.get((u_rank, v_rank))

    def count(self, n):
        return len(self.by_weight.get(n, ()))

    def local_index(self, rank):
        """Position of a basis element inside its own weight."""
        c = self.elements[rank]
        return rank - self.by_weight[c.weight][0].rank

    def truncated(self, W):
        """A view holding only the elements of weight <= W (ranks unchanged)."""
        if W >= self.max_weight:
            return self
        view = object.__new__(HallBasis)
        view.d = self.d
        view.max_weight = W
        view.by_weight = {n: self.by_weight[n] for n in range(1, W + 1)}
        view.elements = self.elements[: view.by_weight[W][-1].rank + 1] if view.by_weight[W] else [
            e for e in self.elements if e.weight <= W
        ]
        view._pair = {k: c for k, c in self._pair.items() if c.weight <= W}
        return view

    def generator(self, i):
        return self.elements[i - 1]

    def parse(self, text):
        """Parse a nested bracket string such as ``[[x2,x1],x1]`` into a basic commutator."""
        tree = parse_bracket_tree(text)
        c = self._lookup_tree(tree)
        if c is None:
            raise PreconditionError(f"{text} is not a basic commutator of weight <= {self.max_weight}")
        return c

    def _lookup_tree(self, tree):
        if isinstance(tree, int):
            if not 1 <= tree <= self.d:
                raise PreconditionError(f"generator x{tree} out of range for d={self.d}")
            return self.elements[tree - 1]
        u = self._lookup_tree(tree[0])
        v = self._lookup_tree(tree[1])
        if u is None or v is None:
            return None
        return self._pair.get((u.rank, v.rank))


_BASES = {}
_BASES_LOCK = threading.Lock()


def hall_basis(d, W):
    """The Hall basis of the free Lie algebra on d generators up to weight W."""
    return _basis_at_least(d, W).truncated(W)


def _basis_at_least(d, W):
    with _BASES_LOCK:
        cached = _BASES.get(d)
        if cached is None or cached.max_weight < W:
            cached = HallBasis(d, W)
            _BASES[d] = cached
        return cached


_TOKEN = re.compile(r"\s*(\[|\]|,|x\d+)")


def parse_bracket_tree(text):
    """Parse ``x3`` / ``[a,b]`` nesting into ints (generator index) and pairs."""
    pos = 0
    tokens = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PreconditionError(f"cannot parse bracket expression {text!r} at offset {pos}")
        tokens.append(m.group(1))
        pos = m.end()

    def parse(i):
        tok = tokens[i] if i < len(tokens) else None
        if tok is None:
            raise PreconditionError(f"unexpected end of {text!r}")
        if tok.startswith("x"):
            return int(tok[1:]), i + 1
        if tok != "[":
            raise PreconditionError(f"unexpected {tok!r} in {text!r}")
        a, i = parse(i + 1)
        if i >= len(tokens) or tokens[i] != ",":
            raise PreconditionError(f"expected ',' in {text!r}")
        b, i = parse(i + 1)
        if i >= len(tokens) or tokens[i] != "]":
            raise PreconditionError(f"expected ']' in {text!r}")
        return (a, b), i + 1

    tree, end = parse(0)
    if end != len(tokens):
        raise PreconditionError(f"trailing input in {text!r}")
    return tree


def tree_weight(tree):
    if isinstance(tree, int):
        return 1
    return tree_weight(tree[0]) + tree_weight(tree[1])


# --- integer bracket table ---------------------------------------------------

_BRACKET_MEMO = {}
_MEMO_LOCK = threading.RLock()


def _add_into(out, vec, scale):
    for k, c in vec.items():
        nv = out.get(k, 0) + scale * c
        if nv:
            out[k] = nv
        else:
            out.pop(k, None)


def basis_bracket(d, i, j):
    """[b_i, b_j] over Z as a dict rank -> integer coefficient (no cutoff)."""
    memo = _BRACKET_MEMO.setdefault(d, {})
    key = (i, j)
    hit = memo.get(key)
    if hit is not None:
        return hit
    with _MEMO_LOCK:
        basis = _BASES[d]
        out = _bracket_rec(basis, memo, i, j)
    return out


def _bracket_rec(basis, memo, i, j):
    hit = memo.get((i, j))
    if hit is not None:
        return hit
    if i == j:
        out = {}
    elif i < j:
        out = {k: -c for k, c in _bracket_rec(basis, memo, j, i).items()}
    else:
        u = basis.elements[i]
        v = basis.elements[j]
        if u.weight + v.weight > basis.max_weight:
            raise ResourceLimitError("bracket requested above the cached Hall basis weight")
        if u.gen is not None or v.rank >= u.right.rank:
            out = {basis._pair[(i, j)].rank: 1}
        else:
            # [[y,z],v] = [[y,v],z] + [y,[z,v]]
            y, z = u.left.rank, u.right.rank
            out = {}
            for r, c in _bracket_rec(basis, memo, y, j).items():
                _add_into(out, _bracket_rec(basis, memo, r, z), c)
            for r, c in _bracket_rec(basis, memo, z, j).items():
                _add_into(out, _bracket_rec(basis, memo, y, r), c)
    memo[(i, j)] = out
    return out


def ensure_basis(d, W):
    """Make sure the shared basis for d reaches weight W and return it."""
    return _basis_at_least(d, W)


# --- elements ---------------------------------------------------------------


class LieElement:
    """A finite F_p-combination of basic commutators, keyed by rank."""

    __slots__ = ("d", "p", "terms")

    def __init__(self, d, p, terms=None):
        self.d = d
        self.p = p
        self.terms = {k: c % p for k, c in (terms or {}).items() if c % p}

    @classmethod
    def basis(cls, c, p, coeff=1):
        return cls(c.d, p, {c.rank: coeff})

    @classmethod
    def generator(cls, d, p, i):
        return cls(d, p, {i - 1: 1})

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def weights(self):
        basis = _BASES[self.d]
        return sorted({basis.elements[r].weight for r in self.terms})

    def degree(self):
        """The single weight of a homogeneous element (None for zero)."""
        ws = self.weights()
        if not ws:
            return None
        if len(ws) > 1:
            raise PreconditionError(f"element {self} is not homogeneous (weights {ws})")
        return ws[0]

    def component(self, n):
        basis = _BASES[self.d]
        return LieElement(self.d, self.p, {r: c for r, c in self.terms.items() if basis.elements[r].weight == n})

    def _check(self, other):
        if self.d != other.d or self.p != other.p:
            raise PreconditionError("elements live in different algebras")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        _add_into(out, other.terms, 1)
        return LieElement(self.d, self.p, out)

    def __sub__(self, other):
        self._check(other)
        out = dict(self.terms)
        _add_into(out, other.terms, -1)
        return LieElement(self.d, self.p, out)

    def __neg__(self):
        return LieElement(self.d, self.p, {k: -c for k, c in self.terms.items()})

    def __rmul__(self, scalar):
        return LieElement(self.d, self.p, {k: scalar * c for k, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, LieElement):
            return NotImplemented
        return (self.d, self.p, self.terms) == (other.d, other.p, other.terms)

    def __hash__(self):
        return hash((self.d, self.p, tuple(sorted(self.terms.items()))))

    def __str__(self):
        if not self.terms:
            return "0"
        basis = _BASES[self.d]
        return " + ".join(f"{c}*{basis.elements[r]}" for r, c in sorted(self.terms.items()))

    __repr__ = __str__


def bracket(a, b, W):
    """[a, b] in the Hall basis, dropping terms of weight > W."""
    a._check(b)
    basis = ensure_basis(a.d, W)
    out = {}
    for i, ci in a.terms.items():
        wi = basis.elements[i].weight
        for j, cj in b.terms.items():
            if wi + basis.elements[j].weight > W:
                continue
            _add_into(out, basis_bracket(a.d, i, j), ci * cj)
    return LieElement(a.d, a.p, out)


def lie_from_tree(tree, d, p, W):
    """Evaluate an arbitrary bracket tree (ints are generator indices)."""
    if isinstance(tree, int):
        if not 1 <= tree <= d:
            raise PreconditionError(f"generator x{tree} out of range for d={d}")
        return LieElement.generator(d, p, tree)
    return bracket(lie_from_tree(tree[0], d, p, W), lie_from_tree(tree[1], d, p, W), W)


_TERM = re.compile(r"^\s*(?:(-?\d+)\s*\*\s*)?(.+?)\s*$")


def parse_lie_element(text, d, p, W):
    """Parse ``c1*m1 + c2*m2`` where each m is any bracket expression."""
    ensure_basis(d, W)
    out = LieElement(d, p)
    text = text.strip()
    if text in ("", "0"):
        return out
    for chunk in _split_terms(text):
        m = _TERM.match(chunk)
        coeff = int(m.group(1)) if m.group(1) else 1
        out = out + coeff * lie_from_tree(parse_bracket_tree(m.group(2)), d, p, W)
    return out


def _split_terms(text):
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "+" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [s for s in parts if s.strip()]


# --- graded subspaces ---------------------------------------------------------


class GradedSubspace:
    """Per-degree reduced echelon bases, truncated at weight W.

    Column labels are basis ranks; the echelon form is canonical, so equal
    subspaces compare equal.
    """

    def __init__(self, d, p, W, spaces=None):
        self.d = d
        self.p = p
        self.W = W
        self.spaces = {n: FpEchelon(p) for n in range(1, W + 1)}
        if spaces:
            for n, sp in spaces.items():
                self.spaces[n] = sp

    def dim(self, n):
        return len(self.spaces[n]) if n in self.spaces else 0

    def dims(self):
        return [self.dim(n) for n in range(1, self.W + 1)]

    def elements(self, n):
        return [LieElement(self.d, self.p, row) for row in self.spaces[n].rows()]

    def contains(self, elem):
        basis = ensure_basis(self.d, self.W)
        by_deg = {}
        for r, c in elem.terms.items():
            w = basis.elements[r].weight
            if w > self.W:
                return False
            by_deg.setdefault(w, {})[r] = c
        return all(self.spaces[n].contains(v) for n, v in by_deg.items())

    def __eq__(self, other):
        if not isinstance(other, GradedSubspace):
            return NotImplemented
        return (self.d, self.p, self.W) == (other.d, other.p, other.W) and all(
            self.spaces[n] == other.spaces[n] for n in range(1, self.W + 1)
        )

    def matrix(self, n):
        """Dense rows over the weight-n Hall elements in rank order."""
        basis = ensure_basis(self.d, self.W)
        level = basis.by_weight[n]
        offset = level[0].rank
        rows = []
        for row in self.spaces[n].rows():
            dense = [0] * len(level)
            for r, c in row.items():
                dense[r - offset] = c
            rows.append(dense)
        return rows

    def to_json(self):
        return json.dumps(
            {"d": self.d, "p": self.p, "W": self.W, "degrees": {str(n): self.matrix(n) for n in range(1, self.W + 1)}},
            sort_keys=True,
        )


def _split_by_degree(elem):
    basis = _BASES[elem.d]
    out = {}
    for r, c in elem.terms.items():
        out.setdefault(basis.elements[r].weight, {})[r] = c
    return out


def subalgebra_closure(generators, W, d=None, p=None):
    """Degree-wise span of all iterated brackets of homogeneous generators.

    Uses the fact that a Lie subalgebra is spanned by right-normed brackets
    of its generators: ``M_n = span(G_n) + sum_g [g, M_{n - wt g}]``.
    """
    generators = list(generators)
    if generators:
        d = generators[0].d
        p = generators[0].p
    if d is None or p is None:
        raise PreconditionError("empty generator list needs explicit d and p")
    if not is_prime(p):
        raise PreconditionError(f"p={p} is not prime")
    ensure_basis(d, W)
    gens = []
    for g in generators:
        if g.is_zero():
            continue
        ws = g.weights()
        if len(ws) != 1:
            raise PreconditionError(f"generator {g} is not homogeneous (weights {ws})")
        if ws[0] > W:
            raise PreconditionError(f"generator {g} has weight {ws[0]} above the cutoff {W}")
        gens.append((ws[0], g))
    M = GradedSubspace(d, p, W)
    for n in range(1, W + 1):
        space = M.spaces[n]
        for w, g in gens:
            if w == n:
                space.add(g.terms)
        for w, g in gens:
            m = n - w
            if m < 1:
                continue
            for row in M.spaces[m].rows():
                h = LieElement(d, p, row)
                space.add(bracket(g, h, W).terms)
    return M


def full_algebra(d, p, W):
    return subalgebra_closure([LieElement.generator(d, p, i) for i in range(1, d + 1)], W)


def density_sequence(M, W=None):
    """Exact partial densities delta_1..delta_W of a graded subspace."""
    W = M.W if W is None else W
    if W > M.W:
        raise PreconditionError(f"subspace only known up to weight {M.W}")
    out, num, den = [], 0, 0
    for n in range(1, W + 1):
        num += M.dim(n)
        den += witt_dimension(M.d, n)
        out.append(Fraction(num, den))
    return out
