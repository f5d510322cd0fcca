"""Hall collection in free groups, normal forms and the group-to-Lie map phi.

A word is a product of powers of generalised basic group commutators
``c^(p^k)``.  Collection treats each distinct decorated factor as an opaque
letter, ordered by (core rank, k), and runs Hall's process in the free group
on those letters: move the leftmost occurrence of the smallest uncollected
factor to the left via ``uv = vu[u,v]``.  Commutators whose core weight
exceeds the class cutoff r are dropped, since they lie in gamma_(r+1).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

from .errors import InconclusiveError, PreconditionError
from .fplie import LieElement, bracket, ensure_basis, tree_weight
from .mixedlie import GeneralizedBasicCommutator, MixedElement, mixed_closure
from .padic import is_prime, vp


@dataclass(frozen=True)
class GenBasicGroupCommutator:
    """c^(p^k) for a basic commutator c read as a group commutator."""

    exponent_log: int
    core: object

    def __post_init__(self):
        if self.exponent_log < 0:
            raise PreconditionError("exponent_log must be >= 0")

    @property
    def weight(self):
        return self.exponent_log + self.core.weight

    def __str__(self):
        k = self.exponent_log
        if k == 0:
            return str(self.core)
        return f"{self.core}^p" if k == 1 else f"{self.core}^p^{k}"

    def lie_image(self):
        return GeneralizedBasicCommutator(self.exponent_log, self.core)


class LetterTree:
    """A commutator over letters; a letter is a decorated core (c, k)."""

    __slots__ = ("letter", "left", "right", "count", "key", "core_weight", "A", "_hash")

    def __init__(self, letter=None, left=None, right=None):
        self.letter = letter
        self.left = left
        self.right = right
        if letter is not None:
            self.count = 1
            self.key = (1, letter.core.rank, letter.exponent_log)
            self.core_weight = letter.core.weight
            self.A = letter.exponent_log
        else:
            self.count = left.count + right.count
            self.key = (self.count, left.key, right.key)
            self.core_weight = left.core_weight + right.core_weight
            self.A = left.A + right.A
        self._hash = hash(self.key)

    def __eq__(self, other):
        return isinstance(other, LetterTree) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.key < other.key

    def __le__(self, other):
        return self.key <= other.key

    @property
    def weight(self):
        return self.core_weight + self.A

    def is_basic(self):
        if self.letter is not None:
            return True
        u, v = self.left, self.right
        if not (u.is_basic() and v.is_basic() and v < u):
            return False
        return u.letter is not None or u.right <= v

    def __str__(self):
        if self.letter is not None:
            return str(self.letter)
        return f"[{self.left},{self.right}]"

    def lie_core(self, p, W):
        """Bracket of the letters' cores in the Hall basis over F_p."""
        if self.letter is not None:
            return LieElement(self.letter.core.d, p, {self.letter.core.rank: 1})
        return bracket(self.left.lie_core(p, W), self.right.lie_core(p, W), W)

    def x_basic(self):
        """The basic commutator in x_1..x_d with this shape, when all letters are bare generators."""
        if self.letter is not None:
            if self.letter.exponent_log or self.letter.core.gen is None:
                return None
            return self.letter.core
        u, v = self.left.x_basic(), self.right.x_basic()
        if u is None or v is None:
            return None
        return ensure_basis(u.d, u.weight + v.weight).pair(u.rank, v.rank)


def _core_tree(c):
    if c.gen is not None:
        return c.gen
    return (_core_tree(c.left), _core_tree(c.right))


@dataclass
class GroupWord:
    d: int
    p: int
    factors: list  # (GenBasicGroupCommutator, positive exponent)

    def __post_init__(self):
        if not is_prime(self.p):
            raise PreconditionError(f"p={self.p} is not prime")
        for g, n in self.factors:
            if n < 1:
                raise PreconditionError("only positive exponents are allowed")
            if g.core.d != self.d:
                raise PreconditionError("factor lives over a different generator count")

    def __str__(self):
        return " ".join(str(g) if n == 1 else f"{_paren(str(g))}^{n}" for g, n in self.factors) or "1"

    def is_identity(self):
        return not self.factors


def _paren(s):
    return f"({s})" if "^" in s else s


@dataclass(frozen=True)
class NormalFormEntry:
    tree: LetterTree
    m: int
    p: int

    @property
    def e(self):
        return vp(self.m, self.p)

    @property
    def j(self):
        return self.m // self.p**self.e

    @property
    def A(self):
        return self.tree.A

    @property
    def core_weight(self):
        return self.tree.core_weight

    @property
    def level(self):
        """e(s) + wt(b~_s): the lower p-series level this entry lives in."""
        return self.e + self.tree.weight

    def to_dict(self):
        return {"core": str(self.tree), "e": self.e, "j": self.j, "A": self.A}

    def __str__(self):
        s = str(self.tree)
        return s if self.m == 1 else f"{_paren(s) if self.tree.letter is not None else s}^{self.m}"


@dataclass
class NormalForm:
    r: int
    p: int
    d: int
    entries: list

    def __str__(self):
        return " ".join(str(e) for e in self.entries) or "1"

    def to_json(self):
        return json.dumps([e.to_dict() for e in self.entries])

    def pairs(self):
        return [(e.tree, e.m) for e in self.entries]

    def as_x_basic(self):
        """[(basic commutator, exponent)] if every letter is a bare generator, else None."""
        out = []
        for e in self.entries:
            b = e.tree.x_basic()
            if b is None:
                return None
            out.append((b, e.m))
        return out


def collect(w, r):
    """Collected normal form of a positive word modulo gamma_(r+1)."""
    if r < 1:
        raise PreconditionError("class cutoff r must be >= 1")
    ensure_basis(w.d, r)
    rest = []
    for g, n in w.factors:
        if g.core.weight > r:
            continue
        rest.extend([LetterTree(letter=g)] * n)
    collected = []  # [tree, count]
    while rest:
        mn = min(rest)
        i = rest.index(mn)
        while i > 0:
            a = rest[i - 1]
            # a > mn strictly: everything left of the leftmost minimum is larger
            new = [mn, a]
            if a.core_weight + mn.core_weight <= r:
                c = LetterTree(left=a, right=mn)
                if not c.is_basic():
                    raise AssertionError(f"collection produced non-basic commutator {c}")
                new.append(c)
            rest[i - 1 : i + 1] = new
            i -= 1
        rest.pop(0)
        if collected and collected[-1][0] == mn:
            collected[-1][1] += 1
        else:
            collected.append([mn, 1])
    return NormalForm(r, w.p, w.d, [NormalFormEntry(t, m, w.p) for t, m in collected])


# --- parsing -----------------------------------------------------------------

_TOK = re.compile(r"\s*(\^|\(|\)|\[|\]|,|x\d+|p|\d+)")


def parse_word(text, d, p):
    """Parse ``x2 x1``, ``[x2,x1]^p^2``, ``x1^3``, ``(x2 x1)^2`` into a GroupWord."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise PreconditionError(f"cannot parse word {text!r} at offset {pos}")
        tokens.append(m.group(1))
        pos = m.end()

    def bracket_expr(i):
        tok = tokens[i]
        if tok.startswith("x"):
            g = int(tok[1:])
            if not 1 <= g <= d:
                raise PreconditionError(f"generator {tok} out of range for d={d}")
            return g, i + 1
        if tok != "[":
            raise PreconditionError(f"unexpected {tok!r} in {text!r}")
        a, i = bracket_expr(i + 1)
        if tokens[i] != ",":
            raise PreconditionError(f"expected ',' in {text!r}")
        b, i = bracket_expr(i + 1)
        if tokens[i] != "]":
            raise PreconditionError(f"expected ']' in {text!r}")
        return (a, b), i + 1

    def suffix(i):
        k, n = 0, 1
        while i < len(tokens) and tokens[i] == "^":
            nxt = tokens[i + 1] if i + 1 < len(tokens) else None
            if nxt == "p":
                if i + 3 < len(tokens) and tokens[i + 2] == "^" and tokens[i + 3].isdigit():
                    k += int(tokens[i + 3])
                    i += 4
                else:
                    k += 1
                    i += 2
            elif nxt is not None and nxt.isdigit():
                e = int(nxt)
                if e < 1:
                    raise PreconditionError("exponents must be positive")
                n *= e
                i += 2
            else:
                raise PreconditionError(f"bad exponent in {text!r}")
        return k, n, i

    def sequence(i, closing):
        out = []
        while i < len(tokens) and tokens[i] != closing:
            if tokens[i] == "(":
                inner, i = sequence(i + 1, ")")
                if i >= len(tokens):
                    raise PreconditionError(f"unbalanced '(' in {text!r}")
                k, n, i = suffix(i + 1)
                if k:
                    raise PreconditionError("p-power decorations apply to single commutators only")
                out.extend(inner * n)
                continue
            tree, i = bracket_expr(i)
            core = ensure_basis(d, tree_weight(tree))._lookup_tree(tree)
            if core is None:
                raise PreconditionError(f"{_tree_str(tree)} is not a basic commutator")
            k, n, i = suffix(i)
            out.append((GenBasicGroupCommutator(k, core), n))
        return out, i

    try:
        factors, i = sequence(0, None)
    except IndexError:
        raise PreconditionError(f"unexpected end of {text!r}") from None
    if i != len(tokens):
        raise PreconditionError(f"trailing input in {text!r}")
    return GroupWord(d, p, _merge(factors))


def _merge(factors):
    out = []
    for g, n in factors:
        if out and out[-1][0] == g:
            out[-1] = (g, out[-1][1] + n)
        else:
            out.append((g, n))
    return out


def _tree_str(tree):
    if isinstance(tree, int):
        return f"x{tree}"
    return f"[{_tree_str(tree[0])},{_tree_str(tree[1])}]"


# --- unitriangular oracle -----------------------------------------------------


def _check_unitriangular(M):
    n = M.shape[0]
    for i in range(n):
        if M[i, i] != 1:
            return False
        for j in range(i):
            if M[i, j] != 0:
                return False
    return True


def _ut_power(M, m):
    n = M.shape[0]
    eye = np.identity(n, dtype=object)
    N = M - eye
    out = eye.copy()
    term = eye.copy()
    for k in range(1, n):
        term = term.dot(N)
        c = _binom(m, k)
        out = out + c * term
    return out


def _binom(m, k):
    from math import comb

    return comb(m, k) if m >= 0 else (-1) ** k * comb(-m + k - 1, k)


def _ut_comm(U, V):
    return _ut_power(U, -1).dot(_ut_power(V, -1)).dot(U).dot(V)


def _eval_tree(tree, assignment):
    if isinstance(tree, int):
        return assignment[tree]
    return _ut_comm(_eval_tree(tree[0], assignment), _eval_tree(tree[1], assignment))


def _eval_letter_tree(t, assignment, p):
    if t.letter is not None:
        base = _eval_tree(_core_tree(t.letter.core), assignment)
        return _ut_power(base, p**t.letter.exponent_log)
    return _ut_comm(_eval_letter_tree(t.left, assignment, p), _eval_letter_tree(t.right, assignment, p))


def evaluate_in_unitriangular(w, r, assignment):
    """Multiply out a GroupWord or NormalForm under generator -> unitriangular matrix.

    ``assignment`` maps generator index (1-based) to an (r+1)x(r+1) integer
    upper unitriangular matrix; commutators are u^-1 v^-1 u v.
    """
    mats = {}
    for i, M in dict(assignment).items():
        A = np.array(M, dtype=object)
        if A.shape != (r + 1, r + 1) or not _check_unitriangular(A):
            raise PreconditionError(f"assignment for x{i} is not an upper unitriangular {r + 1}x{r + 1} matrix")
        mats[i] = A
    out = np.identity(r + 1, dtype=object)
    if isinstance(w, NormalForm):
        for e in w.entries:
            out = out.dot(_ut_power(_eval_letter_tree(e.tree, mats, w.p), e.m))
    else:
        for g, n in w.factors:
            base = _ut_power(_eval_tree(_core_tree(g.core), mats), w.p**g.exponent_log)
            out = out.dot(_ut_power(base, n))
    return out


def random_unitriangular(rng, size, lo=-3, hi=3):
    M = np.identity(size, dtype=object)
    for i in range(size):
        for j in range(i + 1, size):
            M[i, j] = rng.randint(lo, hi)
    return M


# --- phi ------------------------------------------------------------------------


@dataclass
class PhiResult:
    element: MixedElement
    degree: int | None
    status: str  # ok | identity

    def to_dict(self):
        return {"phi": str(self.element), "degree": self.degree, "status": self.status}


def phi(w, W):
    """Leading term of w in the graded Lie algebra of the lower p-series.

    Collect at class W, take n = min(e(s) + wt(b~_s)) and return
    sum over entries attaining n of j_s * pi^(e(s)+A_s) * b_s.  Entries of
    weight above W were dropped and lie in P_(W+1), so n <= W is certified.
    """
    _ = ensure_basis(w.d, W)
    if w.is_identity():
        return PhiResult(MixedElement(w.d, w.p), None, "identity")
    nf = collect(w, W)
    if not nf.entries:
        raise InconclusiveError("word is trivial modulo gamma_(W+1); raise the cutoff")
    n = min(e.level for e in nf.entries)
    if n > W:
        raise InconclusiveError(f"leading level {n} exceeds the cutoff {W}")
    out = MixedElement(w.d, w.p)
    for e in nf.entries:
        if e.level != n:
            continue
        core = e.tree.lie_core(w.p, W)
        k = e.e + e.A
        out = out + e.j * MixedElement(w.d, w.p, {(k, r): c for r, c in core.terms.items()})
    if out.is_zero():
        raise InconclusiveError(f"leading terms at level {n} cancel; the true leading term lies deeper")
    return PhiResult(out, n, "ok")


def canonical_normal_form(w, r):
    """Hall normal form over x_1..x_d mod gamma_(r+1) computed through the Magnus embedding."""
    from .magnus import hall_normal_form, word_series

    factors = [(_core_tree(g.core), n * w.p**g.exponent_log) for g, n in w.factors if g.core.weight <= r]
    return hall_normal_form(word_series(factors, w.d, r))


def phi_via_magnus(w, W):
    """phi computed from the canonical x-level normal form; independent of collect."""
    if w.is_identity():
        return PhiResult(MixedElement(w.d, w.p), None, "identity")
    nf = canonical_normal_form(w, W)
    if not nf:
        raise InconclusiveError("word is trivial modulo gamma_(W+1); raise the cutoff")
    levels = [(vp(m, w.p) + c.weight, c, m) for c, m in nf]
    n = min(lv for lv, _, _ in levels)
    out = {}
    for lv, c, m in levels:
        if lv == n:
            e = vp(m, w.p)
            out[(e, c.rank)] = (m // w.p**e) % w.p
    return PhiResult(MixedElement(w.d, w.p, out), n, "ok")


@dataclass
class PhiReport:
    samples: int
    conclusive: int
    inconclusive: int
    contained: int
    not_contained: int
    agree_with_magnus: int
    H_dims: list
    image_dims: list
    failures: list

    @property
    def passed(self):
        return self.not_contained == 0

    def to_dict(self):
        return {
            "samples": self.samples,
            "conclusive": self.conclusive,
            "inconclusive": self.inconclusive,
            "contained": self.contained,
            "not_contained": self.not_contained,
            "agree_with_magnus": self.agree_with_magnus,
            "H_dims": self.H_dims,
            "image_dims": self.image_dims,
            "passed": self.passed,
        }


def random_positive_word(gens, d, p, rng, max_len=5, max_exp=None):
    max_exp = max_exp or p + 1
    n = rng.randint(1, max_len)
    return GroupWord(d, p, _merge([(rng.choice(gens), rng.randint(1, max_exp)) for _ in range(n)]))


def verify_phi_correspondence(gens, W, samples, rng, d=None, p=3, check_magnus=True):
    """Check phi(w) lies in the mixed closure of phi(gens) for random positive words over gens."""
    from .fpech import FpEchelon

    gens = list(gens)
    if d is None:
        d = gens[0].core.d if gens else 2
    cores = [g.core.rank for g in gens]
    if len(set(cores)) != len(cores):
        raise PreconditionError("generators must have pairwise distinct cores")
    if any(g.core.weight < 2 for g in gens):
        raise PreconditionError("generator cores must have weight >= 2")
    ensure_basis(d, W)
    H = mixed_closure([g.lie_image() for g in gens], W, d=d, p=p)
    image = {n: FpEchelon(p) for n in range(1, W + 1)}
    report = PhiReport(0, 0, 0, 0, 0, 0, H.dims(), [], [])
    if not gens:
        report.image_dims = [0] * W
        return report
    for _ in range(samples):
        w = random_positive_word(gens, d, p, rng)
        report.samples += 1
        try:
            res = phi(w, W)
        except InconclusiveError:
            report.inconclusive += 1
            continue
        report.conclusive += 1
        if H.contains(res.element):
            report.contained += 1
        else:
            report.not_contained += 1
            report.failures.append(str(w))
        image[res.degree].add(res.element.terms)
        if check_magnus:
            try:
                alt = phi_via_magnus(w, W)
                if alt.element == res.element and alt.degree == res.degree:
                    report.agree_with_magnus += 1
            except InconclusiveError:
                pass
    report.image_dims = [len(image[n]) for n in range(1, W + 1)]
    return report

