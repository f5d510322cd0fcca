from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hausspec.errors import PreconditionError
from hausspec.fpech import FpEchelon
from hausspec.fplie import ensure_basis, parse_lie_element, witt_dimension
from hausspec.mixedlie import (
    GeneralizedBasicCommutator,
    MixedElement,
    construct_density_subalgebra,
    l_circ,
    lambda_circ_dim,
    lambda_dim,
    mixed_bracket,
    mixed_closure,
    mixed_density_sequence,
    parse_gbc,
    pi_apply,
    weight_basis,
)


def brute_mixed_closure_dims(gens, W, d, p):
    """Fixed point under pi and all pairwise brackets of spanned elements."""
    ensure_basis(d, W)
    spaces = {n: FpEchelon(p) for n in range(1, W + 1)}

    def add(e):
        grew = False
        for n in range(1, W + 1):
            part = {key: c for key, c in e.terms.items() if key[0] + _w(d, key[1]) == n}
            if part and spaces[n].add(part):
                grew = True
        return grew

    for g in gens:
        add(g)
    changed = True
    while changed:
        changed = False
        elems = [MixedElement(d, p, row) for n in spaces for row in spaces[n].rows()]
        for a in elems:
            if add(pi_apply(a, 1)):
                changed = True
            for b in elems:
                if add(mixed_bracket(a, b, W)):
                    changed = True
    return [len(spaces[n]) for n in range(1, W + 1)]


def _w(d, rank):
    return ensure_basis(d, 1).elements[rank].weight


def test_lambda_dims_count_weight_basis():
    # Hall-enumerated generalised commutators against the Witt-sum formula
    for d in (2, 3):
        for n in range(1, 10 if d == 2 else 7):
            assert len(weight_basis(d, n)) == lambda_dim(d, n)
            assert lambda_dim(d, n) == sum(witt_dimension(d, m) for m in range(1, n + 1))
            if n >= 2:
                assert lambda_circ_dim(d, n) == len([g for g in weight_basis(d, n) if g.core.weight >= 2])


def test_l_circ_values():
    # frozen: lambda_circ dims for d = 2 are 1, 3, 6, 12, 21
    assert [lambda_circ_dim(2, n) for n in range(2, 7)] == [1, 3, 6, 12, 21]
    assert [l_circ(2, n) for n in range(2, 7)] == [1, 4, 10, 22, 43]


def test_weight_basis_order():
    ws = weight_basis(2, 3)
    assert [str(g) for g in ws][:2] == ["[[x2,x1],x1]", "[[x2,x1],x2]"]
    assert [g.pi_power for g in ws] == sorted(g.pi_power for g in ws)
    assert all(g.weight == 3 for g in ws)


def test_parse_gbc_roundtrip():
    g = parse_gbc("pi^2*[x2,x1]", 2, 6)
    assert g.pi_power == 2 and g.weight == 4
    assert parse_gbc(str(g), 2, 6) == g
    assert parse_gbc("pi*[[x2,x1],x1]", 2, 6).pi_power == 1


def test_odd_prime_required():
    e = MixedElement.from_lie(parse_lie_element("[x2,x1]", 2, 2, 4))
    with pytest.raises(PreconditionError):
        mixed_closure([e], 4, d=2, p=2)
    with pytest.raises(PreconditionError):
        construct_density_subalgebra(Fraction(1, 2), 2, 2, 5)


@pytest.mark.parametrize(
    "gens",
    [
        ["[x2,x1]"],
        ["x1", "[x2,x1]"],
        ["pi*[x2,x1]", "[[x2,x1],x2]"],
        ["[[x2,x1],x1]", "pi^2*x2"],
    ],
)
def test_mixed_closure_matches_brute_force(gens):
    W, d, p = 6, 2, 3
    G = [MixedElement.from_gbc(parse_gbc(s, d, W), p) for s in gens]
    H = mixed_closure(G, W, d=d, p=p)
    assert H.dims() == brute_mixed_closure_dims(G, W, d, p)
    assert H.is_pi_stable()


def test_mixed_closure_of_generators_is_everything():
    d, p, W = 2, 3, 8
    G = [MixedElement.from_gbc(GeneralizedBasicCommutator(0, ensure_basis(d, W).generator(i)), p) for i in (1, 2)]
    H = mixed_closure(G, W, d=d, p=p)
    assert H.dims() == [lambda_dim(d, n) for n in range(1, W + 1)]
    assert set(mixed_density_sequence(H)) == {1}


def mixed_elements(d, p, W):
    keys = [g.key for n in range(1, W + 1) for g in weight_basis(d, n)]
    return st.dictionaries(st.sampled_from(keys), st.integers(0, p - 1), max_size=4).map(
        lambda t: MixedElement(d, p, t)
    )


@given(mixed_elements(2, 3, 6), mixed_elements(2, 3, 6), st.integers(0, 2))
def test_pi_commutes_with_bracket(a, b, k):
    W = 6
    lhs = pi_apply(mixed_bracket(a, b, W), k)
    rhs = mixed_bracket(pi_apply(a, k), b, W + k)
    # compare only terms that survive the weight cutoff on both sides
    keep = lambda e: {key: c for key, c in e.terms.items() if key[0] + _w(2, key[1]) <= W}
    assert keep(lhs) == keep(rhs)


@given(mixed_elements(2, 3, 5), mixed_elements(2, 3, 5), mixed_elements(2, 3, 5))
def test_mixed_jacobi(a, b, c):
    W = 5
    total = mixed_bracket(a, mixed_bracket(b, c, W), W) + mixed_bracket(b, mixed_bracket(c, a, W), W)
    total = total + mixed_bracket(c, mixed_bracket(a, b, W), W)
    assert total.is_zero()


def test_lambda_circ_density_increases():
    # Lambda° is closed under pi and brackets but needs generators in every weight
    d, p, W = 2, 3, 9
    gens = [MixedElement.from_gbc(g, p) for n in range(2, W + 1) for g in weight_basis(d, n) if g.core.weight >= 2]
    H = mixed_closure(gens, W, d=d, p=p)
    assert H.dims()[1:] == [lambda_circ_dim(d, n) for n in range(2, W + 1)]
    seq = mixed_density_sequence(H)
    assert all(x < y for x, y in zip(seq[1:], seq[2:]))


# --- construction ---------------------------------------------------------------


@pytest.mark.parametrize("alpha", [Fraction(1, 4), Fraction(1, 2), Fraction(2, 3)])
def test_construction_small_window(alpha):
    C = construct_density_subalgebra(alpha, 2, 3, 9)
    assert C.condition_i_holds()
    assert all(r.ratio <= alpha or r.stalled for r in C.trace)
    # the chosen generators regenerate the same subalgebra
    H = mixed_closure([MixedElement.from_gbc(g, 3) for g in C.generators], 9, d=2, p=3)
    assert H.dims()[1:] == C.subalgebra.dims()[1:]
    assert all(g.core.weight >= 2 for g in C.generators)


def test_construction_generators_minimal():
    d, p, W = 2, 3, 7
    C = construct_density_subalgebra(Fraction(1, 2), d, p, W)
    gens = [MixedElement.from_gbc(g, p) for g in C.generators]
    for i, g in enumerate(gens):
        others = gens[:i] + gens[i + 1 :]
        H = mixed_closure(others, W, d=d, p=p) if others else None
        assert H is None or not H.contains(g)


def test_construction_deterministic_and_serialisable():
    a = construct_density_subalgebra(Fraction(1, 2), 2, 3, 8)
    b = construct_density_subalgebra(Fraction(1, 2), 2, 3, 8)
    assert a.generators_json() == b.generators_json()
    assert a.trace_csv() == b.trace_csv()
    assert a.trace_csv().splitlines()[0].startswith("n,")


def test_construction_alpha_zero_adds_nothing():
    C = construct_density_subalgebra(Fraction(0), 2, 3, 6)
    assert C.generators == []
    assert all(r.partial_dim == 0 for r in C.trace)


def test_construction_rejects_bad_alpha():
    with pytest.raises(PreconditionError):
        construct_density_subalgebra(Fraction(3, 2), 2, 3, 6)
