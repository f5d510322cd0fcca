"""Z_p-lattices at exact rational precision, group actions and lower p-series.

A lattice is stored in a canonical Hermite form over the local ring Z_(p):
upper triangular, diagonal entries p^(a_i), and each entry right of a
diagonal reduced to a canonical representative modulo p^(a_j).  Entries are
rationals; equal lattices have equal canonical matrices.  Groups act on the
right on row vectors.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

from .errors import PreconditionError
from .padic import is_p_integral, is_prime, residue, vp


def _frac(x):
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def _canonical_rep(x, p, a):
    """Canonical representative of x modulo p^a Z_(p), a rational in Z[1/p]."""
    if x == 0:
        return Fraction(0)
    v = vp(x, p)
    if v >= a:
        return Fraction(0)
    s = max(0, -v)
    k = a + s
    if k <= 0:
        return Fraction(0)
    y = x * p**s
    return Fraction(residue(y, p, k), p**s)


def hermite_rows(rows, p, d):
    """Canonical Hermite form of the Z_(p)-span of the given rows; returns (diag exponents, rows)."""
    work = [[_frac(x) for x in r] for r in rows]
    for r in work:
        if len(r) != d:
            raise PreconditionError(f"row {r} has length {len(r)}, expected {d}")
    work = [r for r in work if any(r)]
    out = []
    for col in range(d):
        cands = [r for r in work if r[col] != 0]
        if not cands:
            raise PreconditionError("generators do not span a full-rank lattice")
        piv = min(cands, key=lambda r: vp(r[col], p))
        work.remove(piv)
        a = vp(piv[col], p)
        unit = piv[col] / Fraction(p) ** a
        piv = [x / unit for x in piv]
        rest = []
        for r in work:
            if r[col] != 0:
                q = r[col] / piv[col]
                r = [x - q * y for x, y in zip(r, piv)]
            if any(r):
                rest.append(r)
        work = rest
        out.append((a, piv))
    exps = [a for a, _ in out]
    mat = [r for _, r in out]
    for i in range(d):
        for j in range(i + 1, d):
            x = mat[i][j]
            rep = _canonical_rep(x, p, exps[j])
            if x != rep:
                q = (x - rep) / mat[j][j]
                mat[i] = [a - q * b for a, b in zip(mat[i], mat[j])]
    return exps, mat


class PadicLattice:
    """A full-rank Z_p-lattice in Q_p^d spanned by rational rows."""

    def __init__(self, p, rows, d=None):
        if not is_prime(p):
            raise PreconditionError(f"p={p} is not prime")
        rows = [list(r) for r in rows]
        if d is None:
            if not rows:
                raise PreconditionError("empty generator list needs an explicit rank")
            d = len(rows[0])
        self.p = p
        self.d = d
        self.exponents, self.basis = hermite_rows(rows, p, d)

    @classmethod
    def standard(cls, p, d):
        return cls(p, [[int(i == j) for j in range(d)] for i in range(d)])

    @classmethod
    def diagonal(cls, p, exps):
        d = len(exps)
        return cls(p, [[Fraction(p) ** exps[i] if i == j else 0 for j in range(d)] for i in range(d)])

    @property
    def rank(self):
        return self.d

    def __eq__(self, other):
        if not isinstance(other, PadicLattice):
            return NotImplemented
        return self.p == other.p and self.d == other.d and self.basis == other.basis

    def __hash__(self):
        return hash((self.p, tuple(tuple(r) for r in self.basis)))

    def __repr__(self):
        return f"PadicLattice(p={self.p}, basis={[[str(x) for x in r] for r in self.basis]})"

    def coordinates(self, vec):
        """Coordinates of vec in this basis (rationals); p-integral iff vec is in the lattice."""
        vec = [_frac(x) for x in vec]
        coords = []
        for i in range(self.d):
            c = vec[i] / self.basis[i][i]
            coords.append(c)
            if c:
                vec = [x - c * y for x, y in zip(vec, self.basis[i])]
        return coords

    def contains_vector(self, vec):
        return all(is_p_integral(c, self.p) for c in self.coordinates(vec))

    def contains(self, other):
        """other is a sublattice (or a list of vectors) inside self."""
        rows = other.basis if isinstance(other, PadicLattice) else other
        return all(self.contains_vector(r) for r in rows)

    def __add__(self, other):
        rows = other.basis if isinstance(other, PadicLattice) else list(other)
        return PadicLattice(self.p, self.basis + [list(r) for r in rows], self.d)

    def scale(self, c):
        c = _frac(c)
        if c == 0:
            raise PreconditionError("scaling by 0 gives no lattice")
        return PadicLattice(self.p, [[c * x for x in r] for r in self.basis], self.d)

    def p_power(self, k):
        return self.scale(Fraction(self.p) ** k)

    def act(self, g):
        """Image under the right action: rows times g."""
        return PadicLattice(self.p, _matmul(self.basis, g), self.d)

    def to_dict(self):
        return {"p": self.p, "basis": [[str(x) for x in r] for r in self.basis]}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        return cls(int(data["p"]), [[_frac(x) for x in r] for r in data["basis"]])

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _matmul(A, B):
    return [[sum(a * B[k][j] for k, a in enumerate(row)) for j in range(len(B[0]))] for row in A]


def _require_sub(L, M):
    if L.p != M.p or L.d != M.d:
        raise PreconditionError("lattices live in different ambient spaces")
    if not L.contains(M):
        raise PreconditionError("the second lattice is not contained in the first")


def log_index(L, M):
    """log_p |L : M| for M inside L."""
    _require_sub(L, M)
    return sum(M.exponents) - sum(L.exponents)


def elementary_divisor_exponents(L, M):
    """p-valuations of the elementary divisors of M relative to L, ascending."""
    _require_sub(L, M)
    p = L.p
    C = [[Fraction(x) for x in L.coordinates(r)] for r in M.basis]
    n = len(C)
    out = []
    rows = list(range(n))
    cols = list(range(n))
    while rows:
        best = None
        for i in rows:
            for j in cols:
                if C[i][j] != 0:
                    v = vp(C[i][j], p)
                    if best is None or v < best[0]:
                        best = (v, i, j)
        if best is None:
            raise PreconditionError("rank-deficient sublattice")
        v, i, j = best
        out.append(v)
        piv = C[i][j]
        for r in rows:
            if r != i and C[r][j] != 0:
                q = C[r][j] / piv
                C[r] = [a - q * b for a, b in zip(C[r], C[i])]
        for c in cols:
            if c != j and C[i][c] != 0:
                q = C[i][c] / piv
                for r in rows:
                    C[r][c] -= q * C[r][j]
        rows.remove(i)
        cols.remove(j)
    return sorted(out)


def log_index_snf(L, M):
    """log_p |L : M| via elementary divisors (second route)."""
    return sum(elementary_divisor_exponents(L, M))


def ell_u(L, M):
    """(min k with p^k L in M, max k with M in p^k L)."""
    ex = elementary_divisor_exponents(L, M)
    return max(ex), min(ex)


class GroupAction:
    """Finitely many generator matrices acting on the right, pro-p admissible on L."""

    def __init__(self, p, generators, lattice=None):
        self.p = p
        self.generators = [[[_frac(x) for x in row] for row in g] for g in generators]
        if not self.generators:
            raise PreconditionError("an action needs at least one generator")
        d = len(self.generators[0])
        self.d = d
        for g in self.generators:
            if len(g) != d or any(len(r) != d for r in g):
                raise PreconditionError("generator matrices must be square of equal size")
            if not all(is_p_integral(x, p) for r in g for x in r):
                raise PreconditionError("generator matrices must be p-integral")
            if vp(_det(g), p) != 0:
                raise PreconditionError("generator matrices must be invertible over Z_(p)")
        L = lattice or PadicLattice.standard(p, d)
        for g in self.generators:
            if not _unipotent_mod_p(L, g, p):
                raise PreconditionError("generator does not act unipotently modulo p")

    @classmethod
    def trivial(cls, p, d, count=1):
        eye = [[int(i == j) for j in range(d)] for i in range(d)]
        return cls(p, [eye] * count)

    @classmethod
    def from_dict(cls, data):
        return cls(int(data["p"]), data["generators"])


def _det(M):
    M = [list(r) for r in M]
    n = len(M)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            q = M[r][c] / M[c][c]
            M[r] = [a - q * b for a, b in zip(M[r], M[c])]
    return det


def _unipotent_mod_p(L, g, p):
    """(X - I)^d = 0 mod p, with X the matrix of g in the basis of L."""
    d = L.d
    X = [L.coordinates(r) for r in _matmul(L.basis, g)]
    if not all(is_p_integral(x, p) for r in X for x in r):
        return False
    N = [[residue(X[i][j] - (1 if i == j else 0), p, 1) for j in range(d)] for i in range(d)]
    P = [row[:] for row in N]
    for _ in range(d - 1):
        P = [[sum(P[i][k] * N[k][j] for k in range(d)) % p for j in range(d)] for i in range(d)]
    return all(x % p == 0 for r in P for x in r)


def is_invariant(M, A):
    return all(M.act(g) == M for g in A.generators)


def lambda_step(M, A):
    """p M + sum over generators of M (g - 1)."""
    if M.p != A.p or M.d != A.d:
        raise PreconditionError("lattice and action do not match")
    if not is_invariant(M, A):
        raise PreconditionError("lattice is not invariant under the action")
    d = M.d
    rows = [[M.p * x for x in r] for r in M.basis]
    for g in A.generators:
        gm = [[g[i][j] - (1 if i == j else 0) for j in range(d)] for i in range(d)]
        rows.extend(_matmul(M.basis, gm))
    return PadicLattice(M.p, rows, d)


def lambda_series(L, A, n):
    """[lambda_0 = L, lambda_1, ..., lambda_n]."""
    out = [L]
    for _ in range(n):
        out.append(lambda_step(out[-1], A))
    return out


def p_power_series(L, n):
    return [L.p_power(i) for i in range(n + 1)]


def check_c_equivalence(S, S_star, c):
    """Per index: p^c L_i in L*_i and p^c L*_i in L_i."""
    if len(S) != len(S_star):
        raise PreconditionError("series windows must have equal length")
    if S and (S[0].p != S_star[0].p or S[0].d != S_star[0].d):
        raise PreconditionError("series live in different ambient spaces")
    return [B.contains(A.p_power(c)) and A.contains(B.p_power(c)) for A, B in zip(S, S_star)]


def hdim_sublattice(H_rows, S):
    """[(i, numerator, denominator)] with numerator log_p |H + L_i : L_i| and denominator log_p |L_0 : L_i|.

    ``H_rows`` is a (possibly empty or rank-deficient) list of generators of H.
    """
    L0 = S[0]
    H_rows = [list(r) for r in H_rows]
    if not L0.contains(H_rows):
        raise PreconditionError("H is not contained in L_0")
    out = []
    for i, Li in enumerate(S[1:], start=1):
        den = log_index(L0, Li)
        num = den - log_index(L0, Li + H_rows) if H_rows else 0
        out.append((i, num, den))
    return out


def series_csv(S):
    L0 = S[0]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "log_index", "basis"])
    for i, Li in enumerate(S):
        w.writerow([i, log_index(L0, Li), ";".join(",".join(str(x) for x in r) for r in Li.basis)])
    return buf.getvalue()


def unitriangular_example(rank):
    """Jordan block acting on Z_p^rank: e_i -> e_i + e_(i-1)."""
    return [[1 if j == i or j == i - 1 else 0 for j in range(rank)] for i in range(rank)]
