"""Exact integer and rational support arithmetic.

Python integers are unbounded, so the 128-bit working width is enforced
explicitly with :func:`check_width` wherever a quantity could grow without
limit. Fractions use :class:`fractions.Fraction`, which is always stored in
lowest terms with a positive denominator.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from sympy import factorint

from .errors import NonCoprimeModuli, NotCoprime, Overflow

INT_BITS = 128
INT_LIMIT = 1 << (INT_BITS - 1)

# Wigert: limsup log tau(n) log log n / log n = log 2.
WIGERT_CONSTANT = 1.5379

ReducedFraction = Fraction
PrimeFactorization = list[tuple[int, int]]


def check_width(*values: int) -> None:
    """Raise :class:`Overflow` if any value falls outside signed 128-bit range."""
    for v in values:
        if not -INT_LIMIT <= v < INT_LIMIT:
            raise Overflow(f"{v} exceeds the {INT_BITS}-bit working width")


def mod_inverse(a: int, m: int) -> int:
    if m < 1:
        raise ValueError("modulus must be positive")
    if math.gcd(a, m) != 1:
        raise NotCoprime(f"gcd({a}, {m}) = {math.gcd(a, m)}")
    if m == 1:
        return 0
    return pow(a, -1, m)


def crt_combine(residues: Iterable[tuple[int, int]]) -> tuple[int, int]:
    """Combine ``[(r_i, m_i), ...]`` into ``(r, M)`` with ``0 <= r < M = prod m_i``."""
    r, M = 0, 1
    for ri, mi in residues:
        if mi < 1:
            raise ValueError("moduli must be positive")
        if math.gcd(M, mi) != 1:
            raise NonCoprimeModuli(f"modulus {mi} shares a factor with {M}")
        # r + M*k = ri (mod mi)
        k = ((ri - r) * mod_inverse(M % mi, mi)) % mi
        r += M * k
        M *= mi
        check_width(M)
    return r % M, M


@lru_cache(maxsize=1 << 16)
def _factor_tuple(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(factorint(n).items()))


def factorize(n: int) -> PrimeFactorization:
    """Prime factorization as an increasing list of ``(prime, exponent)``."""
    if n < 1:
        raise ValueError("factorize expects n >= 1")
    if n >= 1 << INT_BITS:
        raise Overflow(f"{n} is wider than {INT_BITS} bits")
    return list(_factor_tuple(n))


def divisor_count(n: int) -> int:
    return math.prod(e + 1 for _, e in factorize(n))


def divisor_count_table(X: int) -> np.ndarray:
    """``tau[n]`` for ``0 <= n <= X`` by sieve (``tau[0] = 0``)."""
    tau = np.zeros(X + 1, dtype=np.int64)
    for d in range(1, X + 1):
        tau[d::d] += 1
    return tau


@lru_cache(maxsize=256)
def max_divisor_count(X: int) -> int:
    """``max_{1 <= q <= X} tau(q)``; 1 when ``X < 1``."""
    if X < 1:
        return 1
    return int(divisor_count_table(int(X))[1:].max())


def divisor_bound_violations(X: int, constant: float = 1.0, start: int = 16) -> np.ndarray:
    """All ``start <= n <= X`` with ``tau(n) > n ** (constant * log 2 / log log n)``.

    ``constant = 1 / log 2`` gives the bare ``n ** (1 / log log n)`` form,
    which fails first at n = 2520; :data:`WIGERT_CONSTANT` gives the sharp
    form, which holds on every n >= 3.
    """
    tau = divisor_count_table(X)
    n = np.arange(start, X + 1, dtype=np.float64)
    exponent = constant * math.log(2) / np.log(np.log(n))
    bad = np.log(tau[start:].astype(np.float64)) > exponent * np.log(n) + 1e-12
    return np.arange(start, X + 1)[bad]


def p_adic_valuation(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    if p < 2:
        raise ValueError("p must be prime")
    n = abs(n)
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def is_perfect_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def squarefree_kernel_of_odd_part(n: int) -> int:
    """Product of the primes dividing ``n`` to an odd power.

    ``n * squarefree_kernel_of_odd_part(n)`` is the least square divisible by ``n``.
    """
    return math.prod(p for p, e in factorize(n) if e % 2)


def reduced(numerator: int, denominator: int) -> Fraction:
    return Fraction(numerator, denominator)


def frac_mod1(x: Fraction) -> Fraction:
    """Representative of ``x`` in ``[0, 1)``."""
    return x - math.floor(x)


def continued_fraction(numerator: int, denominator: int) -> list[int]:
    if denominator <= 0:
        raise ValueError("denominator must be positive")
    terms = []
    while denominator:
        q, r = divmod(numerator, denominator)
        terms.append(q)
        numerator, denominator = denominator, r
    return terms


def convergents(numerator: int, denominator: int) -> list[Fraction]:
    """Continued-fraction convergents of ``numerator/denominator``.

    Every convergent ``a/q`` satisfies ``|x - a/q| < 1/q**2``.
    """
    out = []
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    for a in continued_fraction(numerator, denominator):
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append(Fraction(h1, k1))
    return out


def best_convergent(numerator: int, denominator: int, max_q: int) -> Fraction:
    """Last convergent of ``numerator/denominator`` with denominator ``<= max_q``."""
    best = None
    for c in convergents(numerator, denominator):
        if c.denominator > max_q:
            break
        best = c
    assert best is not None  # the first convergent is an integer
    return best


def coprime_residues(q: int) -> Sequence[int]:
    """``a`` in ``[1, q]`` with ``gcd(a, q) = 1`` (so ``q = 1`` yields ``[1]``)."""
    return [a for a in range(1, q + 1) if math.gcd(a, q) == 1]
