"""Exact p-adic valuations of integers and rationals."""

from fractions import Fraction
import math


def is_prime(n):
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def vp(x, p):
    """p-adic valuation of an int or Fraction; ``math.inf`` for zero."""
    x = Fraction(x)
    if x == 0:
        return math.inf
    return _vp_int(x.numerator, p) - _vp_int(x.denominator, p)


def _vp_int(n, p):
    n = abs(n)
    if n == 0:
        return math.inf
    # repeated squaring keeps this cheap for tower-sized exponents
    v = 0
    powers = [p]
    while n % powers[-1] == 0:
        n //= powers[-1]
        v += 1 << (len(powers) - 1)
        powers.append(powers[-1] * powers[-1])
    for i in range(len(powers) - 2, -1, -1):
        if n % powers[i] == 0:
            n //= powers[i]
            v += 1 << i
    return v


def unit_part(x, p):
    """x / p^vp(x); raises on zero."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("zero has no unit part")
    v = vp(x, p)
    return x / Fraction(p) ** v


def is_p_integral(x, p):
    return Fraction(x).denominator % p != 0


def residue(x, p, k):
    """The integer in [0, p^k) congruent to the p-integral rational x mod p^k."""
    x = Fraction(x)
    if x.denominator % p == 0:
        raise ValueError(f"{x} is not {p}-integral")
    m = p ** k
    return x.numerator * pow(x.denominator, -1, m) % m
