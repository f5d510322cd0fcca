from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hausspec.errors import PreconditionError, ResourceLimitError
from hausspec.fplie import (
    LieElement,
    basis_bracket,
    bracket,
    density_sequence,
    ensure_basis,
    full_algebra,
    hall_basis,
    mobius,
    parse_lie_element,
    subalgebra_closure,
    witt_dimension,
)
from hausspec.magnus import lie_polynomial
from oracles import hall_trees_by_definition, lyndon_count


# --- helpers -------------------------------------------------------


def tree_of(c):
    if c.gen is not None:
        return c.gen
    return (tree_of(c.left), tree_of(c.right))


def expand(terms, basis, d):
    out = None
    for r, coeff in terms.items():
        v = coeff * lie_polynomial(tree_of(basis[r]), d)
        out = v if out is None else out + v
    return out


# --- Witt and Hall -------------------------------------------------------------


def test_mobius_small_values():
    assert [mobius(n) for n in range(1, 13)] == [1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0]


@pytest.mark.parametrize("d,W", [(2, 12), (3, 7), (4, 5)])
def test_witt_matches_lyndon_words(d, W):
    for n in range(1, W + 1):
        assert witt_dimension(d, n) == lyndon_count(d, n)


def test_witt_known_values():
    # frozen from the Lyndon enumeration above
    assert [witt_dimension(2, n) for n in range(1, 11)] == [2, 1, 2, 3, 6, 9, 18, 30, 56, 99]
    assert [witt_dimension(3, n) for n in range(1, 7)] == [3, 3, 8, 18, 48, 116]


def test_witt_rejects_bad_input():
    with pytest.raises(PreconditionError):
        witt_dimension(0, 3)
    with pytest.raises(PreconditionError):
        witt_dimension(2, 0)


@pytest.mark.parametrize("d,W", [(2, 9), (3, 6)])
def test_hall_basis_matches_definition(d, W):
    B = hall_basis(d, W)
    ref = hall_trees_by_definition(d, W)
    for n in range(1, W + 1):
        assert [tree_of(c) for c in B.by_weight[n]] == ref[n]


def test_hall_weight_three_elements():
    B = hall_basis(2, 3)
    assert [str(c) for c in B.by_weight[3]] == ["[[x2,x1],x1]", "[[x2,x1],x2]"]


def test_hall_parse_and_reject():
    B = hall_basis(2, 4)
    assert B.parse("[[x2,x1],x2]").weight == 3
    with pytest.raises(PreconditionError):
        B.parse("[x1,x2]")


def test_resource_cap(monkeypatch):
    monkeypatch.setenv("HAUSSPEC_MAX_BASIS", "10")
    from hausspec.fplie import HallBasis

    with pytest.raises(ResourceLimitError):
        HallBasis(2, 8)


# --- brackets ------------------------------------------------------------------


@pytest.mark.parametrize("d,W", [(2, 9), (3, 6)])
def test_bracket_matches_associative_expansion(d, W):
    B = ensure_basis(d, W)
    elems = [c for c in B if c.weight < W]
    for u in elems:
        for v in elems:
            if u.weight + v.weight > W:
                continue
            lhs = expand(basis_bracket(d, u.rank, v.rank), B, d)
            a, b = lie_polynomial(tree_of(u), d), lie_polynomial(tree_of(v), d)
            rhs = np.outer(a, b).ravel() - np.outer(b, a).ravel()
            if lhs is None:
                assert not rhs.any()
            else:
                assert (lhs == rhs).all()


def lie_elements(d, p, W):
    B = ensure_basis(d, W)
    ranks = [c.rank for c in B if c.weight <= W]
    coeff = st.integers(0, p - 1)
    return st.dictionaries(st.sampled_from(ranks), coeff, max_size=4).map(lambda t: LieElement(d, p, t))


@given(lie_elements(2, 5, 6), lie_elements(2, 5, 6))
def test_bracket_antisymmetric(a, b):
    assert bracket(a, b, 6) == -bracket(b, a, 6)


@given(lie_elements(2, 3, 6), lie_elements(2, 3, 6), lie_elements(2, 3, 6))
def test_jacobi_identity(a, b, c):
    W = 6
    total = bracket(a, bracket(b, c, W), W) + bracket(b, bracket(c, a, W), W) + bracket(c, bracket(a, b, W), W)
    assert total.is_zero()


@given(lie_elements(3, 3, 4), lie_elements(3, 3, 4), lie_elements(3, 3, 4))
def test_bracket_bilinear(a, b, c):
    assert bracket(a + b, c, 4) == bracket(a, c, 4) + bracket(b, c, 4)


def test_parse_lie_element_linear_combination():
    e = parse_lie_element("2*[x2,x1] + [[x2,x1],x1]", 2, 3, 4)
    assert e.component(2) == 2 * parse_lie_element("[x2,x1]", 2, 3, 4)
    assert e.weights() == [2, 3]
    assert parse_lie_element("[x1,x2]", 2, 3, 4) == -parse_lie_element("[x2,x1]", 2, 3, 4)


# --- closure and densities ------------------------------------------------------


def brute_closure_dims(gens, W, d, p):
    """Fixed point of bracketing every spanned element with every other one."""
    from hausspec.fpech import FpEchelon

    B = ensure_basis(d, W)
    spaces = {n: FpEchelon(p) for n in range(1, W + 1)}

    def add(e):
        grew = False
        for n in range(1, W + 1):
            part = {r: c for r, c in e.terms.items() if B[r].weight == n}
            if part and spaces[n].add(part):
                grew = True
        return grew

    for g in gens:
        add(g)
    changed = True
    while changed:
        changed = False
        elems = [LieElement(d, p, row) for n in spaces for row in spaces[n].rows()]
        for a in elems:
            for b in elems:
                if add(bracket(a, b, W)):
                    changed = True
    return [len(spaces[n]) for n in range(1, W + 1)]


@pytest.mark.parametrize(
    "gens,d",
    [
        ("x1; [x2,x1]", 2),
        ("[x2,x1]; [[x2,x1],x2]", 2),
        ("x1 + x2; [[x2,x1],x1]", 2),
        ("x1; [x3,x2]", 3),
    ],
)
def test_closure_matches_brute_force(gens, d):
    W, p = 7, 3
    G = [parse_lie_element(s, d, p, W) for s in gens.split(";")]
    assert subalgebra_closure(G, W, d=d, p=p).dims() == brute_closure_dims(G, W, d, p)


def test_closure_known_dims():
    G = [parse_lie_element(s, 2, 3, 14) for s in ("x1", "[x2,x1]")]
    M = subalgebra_closure(G, 14, d=2, p=3)
    # frozen from the brute-force closure for n <= 7, extended by the graded algorithm
    assert M.dims() == [1, 1, 1, 1, 2, 2, 4, 5, 8, 11, 18, 25, 40, 58]
    seq = density_sequence(M)
    assert seq[5] == Fraction(8, 23)
    assert seq[13] <= Fraction(8, 100)


def test_full_algebra_has_density_one():
    M = full_algebra(2, 3, 8)
    assert M.dims() == [witt_dimension(2, n) for n in range(1, 9)]
    assert set(density_sequence(M)) == {1}


def test_closure_is_canonical():
    a = [parse_lie_element(s, 2, 3, 6) for s in ("x1", "[x2,x1]")]
    b = [parse_lie_element(s, 2, 3, 6) for s in ("2*x1", "2*[x2,x1]", "[[x2,x1],x1]")]
    assert subalgebra_closure(a, 6, d=2, p=3) == subalgebra_closure(b, 6, d=2, p=3)


def test_closure_rejects_inhomogeneous_generator():
    e = parse_lie_element("x1 + [x2,x1]", 2, 3, 5)
    with pytest.raises(PreconditionError):
        subalgebra_closure([e], 5, d=2, p=3)
