"""Integer quadratics: rational factorization, intersectivity, root systems.

An integer quadratic is intersective (has a root modulo every q) exactly
when it factors as ``a(alpha x + beta)(gamma x + lam)`` with
``(alpha, beta) = (gamma, lam) = (alpha, gamma) = 1``. For such an ``f`` a
coherent family of roots ``r_d`` in ``(-d, 0]`` is built prime by prime:
primes not dividing ``alpha`` use the root ``-beta/alpha``, all others use
``-lam/gamma``. The auxiliary polynomial is ``f_d(x) = f(r_d + d x) / d``,
or ``a x**2`` when ``f = a (x - b)**2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import NotIntersective, NotIrrational, WitnessSearchExhausted
from .modarith import (
    check_width,
    crt_combine,
    factorize,
    is_perfect_square,
    mod_inverse,
    p_adic_valuation,
    squarefree_kernel_of_odd_part,
)

WITNESS_CAP = 10**6


@dataclass(frozen=True)
class QuadraticPoly:
    """``a2 x**2 + a1 x + a0`` with integer coefficients and ``a2 != 0``."""

    a2: int
    a1: int
    a0: int

    def __post_init__(self):
        for c in (self.a2, self.a1, self.a0):
            if not isinstance(c, (int, np.integer)) or isinstance(c, bool):
                raise TypeError(f"coefficients must be integers, got {c!r}")
        object.__setattr__(self, "a2", int(self.a2))
        object.__setattr__(self, "a1", int(self.a1))
        object.__setattr__(self, "a0", int(self.a0))
        if self.a2 == 0:
            raise ValueError("leading coefficient must be nonzero")
        check_width(self.a2, self.a1, self.a0)

    @classmethod
    def parse(cls, text: str) -> "QuadraticPoly":
        """Parse the ``"a2,a1,a0"`` text form."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected 'a2,a1,a0', got {text!r}")
        return cls(*(int(p) for p in parts))

    def __call__(self, x: int) -> int:
        return (self.a2 * x + self.a1) * x + self.a0

    def eval_mod(self, x: np.ndarray, q: int) -> np.ndarray:
        """Values at integer array ``x`` reduced mod ``q`` (no int64 overflow for ``q < 2**31``)."""
        x = np.asarray(x, dtype=np.int64) % q
        a2, a1, a0 = self.a2 % q, self.a1 % q, self.a0 % q
        return ((a2 * x % q) * x % q + a1 * x % q + a0) % q

    @property
    def coefficients(self) -> tuple[int, int, int]:
        return self.a2, self.a1, self.a0

    @property
    def discriminant(self) -> int:
        return self.a1 * self.a1 - 4 * self.a2 * self.a0

    def derivative_at(self, x: int) -> int:
        return 2 * self.a2 * x + self.a1

    def negate(self) -> "QuadraticPoly":
        return QuadraticPoly(-self.a2, -self.a1, -self.a0)

    def text(self) -> str:
        return f"{self.a2},{self.a1},{self.a0}"

    def __str__(self) -> str:
        terms = []
        for c, mono in ((self.a2, "x^2"), (self.a1, "x"), (self.a0, "")):
            if c == 0:
                continue
            mag = abs(c)
            body = mono if (mag == 1 and mono) else f"{mag}{mono}"
            sign = "-" if c < 0 else "+"
            terms.append((sign, body))
        first_sign, first = terms[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out


@dataclass(frozen=True)
class Factored:
    """``a (alpha x + beta)(gamma x + lam)`` with coprime factor coefficients, ``alpha, gamma > 0``."""

    a: int
    alpha: int
    beta: int
    gamma: int
    lam: int

    @property
    def resultant(self) -> int:
        return self.alpha * self.lam - self.beta * self.gamma

    def display(self) -> str:
        def lin(c, d):
            head = "x" if c == 1 else f"{c}x"
            return f"({head}{'+' if d >= 0 else '-'}{abs(d)})"

        prefix = "" if self.a == 1 else ("-" if self.a == -1 else str(self.a))
        return f"{prefix}{lin(self.alpha, self.beta)}{lin(self.gamma, self.lam)}"


@dataclass(frozen=True)
class DoubleRoot:
    """``a (x - root)**2``."""

    a: int
    root: Fraction

    def display(self) -> str:
        return f"{self.a}(x{'-' if self.root >= 0 else '+'}{abs(self.root)})^2"


@dataclass(frozen=True)
class Irrational:
    discriminant: int

    def display(self) -> str:
        return f"irrational (discriminant {self.discriminant})"


RationalRootForm = Union[Factored, DoubleRoot, Irrational]


def _content3(f: QuadraticPoly) -> int:
    return math.gcd(math.gcd(f.a2, f.a1), f.a0)


@lru_cache(maxsize=4096)
def factor_over_rationals(f: QuadraticPoly) -> RationalRootForm:
    disc = f.discriminant
    if disc < 0 or not is_perfect_square(disc):
        return Irrational(disc)
    if disc == 0:
        return DoubleRoot(f.a2, Fraction(-f.a1, 2 * f.a2))
    # divide out the content; by Gauss's lemma the primitive part is +-(v1 x - u1)(v2 x - u2)
    g = _content3(f)
    A, B = f.a2 // g, f.a1 // g
    s = math.isqrt(disc) // g
    roots = [Fraction(-B + s, 2 * A), Fraction(-B - s, 2 * A)]
    # integer roots first; then the root closer to zero
    roots.sort(key=lambda r: (r.denominator, abs(r.numerator), r.numerator))
    (u1, v1), (u2, v2) = ((r.numerator, r.denominator) for r in roots)
    sign = A // (v1 * v2)
    assert abs(sign) == 1
    return Factored(a=g * sign, alpha=v1, beta=-u1, gamma=v2, lam=-u2)


def roots_mod(f: QuadraticPoly, q: int) -> np.ndarray:
    """All residues ``x`` in ``[0, q)`` with ``f(x) = 0 (mod q)`` (brute force)."""
    x = np.arange(q, dtype=np.int64)
    return x[f.eval_mod(x, q) == 0]


def has_root_mod(f: QuadraticPoly, q: int) -> bool:
    return roots_mod(f, q).size > 0


def witness_prime(f: QuadraticPoly) -> int:
    """A prime ``p`` at which the discriminant is not a ``p``-adic square."""
    disc = f.discriminant
    if disc >= 0 and is_perfect_square(disc):
        raise NotIrrational(f"{f} has rational roots")
    if disc < 0 and is_perfect_square(-disc):
        return 3
    for p, e in factorize(abs(disc)):
        if e % 2:
            return p
    raise AssertionError("non-square discriminant must have a prime of odd valuation")


@dataclass(frozen=True)
class IntersectivityResult:
    intersective: bool
    witness: int | None = None
    exhausted: bool = False

    def __bool__(self) -> bool:
        return self.intersective


def _legendre(a: int, p: int) -> int:
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def _small_primes(limit: int) -> list[int]:
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(limit) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return np.nonzero(sieve)[0].tolist()


_PRIMES = _small_primes(10_000)


def _witness_candidates(f: QuadraticPoly, form: RationalRootForm) -> list[int]:
    cands: set[int] = set(range(2, 201))
    match form:
        case Factored(a=a, alpha=alpha, gamma=gamma):
            for p, _ in factorize(math.gcd(alpha, gamma)):
                cands.add(p ** (p_adic_valuation(a, p) + 1))
        case DoubleRoot(root=root):
            a = f.a2 // root.denominator**2
            for p, _ in factorize(root.denominator):
                cands.add(p ** (p_adic_valuation(a, p) + 1))
        case Irrational(discriminant=disc):
            primes = {witness_prime(f)}
            primes.update(p for p, e in factorize(abs(disc)) if e % 2)
            for p in primes:
                pk = p
                while pk <= WITNESS_CAP:
                    cands.add(pk)
                    pk *= p
            two_a = 2 * f.a2
            cands.update(p for p in _PRIMES[1:] if two_a % p and _legendre(disc, p) == -1)
    return sorted(c for c in cands if c <= WITNESS_CAP)


@lru_cache(maxsize=4096)
def is_intersective(f: QuadraticPoly) -> IntersectivityResult:
    """Decide intersectivity exactly; on ``False`` also search for a modulus without roots."""
    form = factor_over_rationals(f)
    match form:
        case Factored(alpha=alpha, gamma=gamma) if math.gcd(alpha, gamma) == 1:
            return IntersectivityResult(True)
        case DoubleRoot(root=root) if root.denominator == 1:
            return IntersectivityResult(True)
    for q in _witness_candidates(f, form):
        if not has_root_mod(f, q):
            return IntersectivityResult(False, witness=q)
    warnings.warn(WitnessSearchExhausted(f"no witness modulus <= {WITNESS_CAP} for {f}"))
    return IntersectivityResult(False, witness=None, exhausted=True)


def content(g: QuadraticPoly) -> int:
    """``gcd(a1, a2)``, the content of the non-constant part."""
    return math.gcd(abs(g.a1), abs(g.a2))


class AuxiliaryFamily:
    """Coherent roots ``r_d`` and auxiliary polynomials ``f_d`` of an intersective quadratic."""

    def __init__(self, f: QuadraticPoly):
        if not is_intersective(f):
            raise NotIntersective(f"{f} is not intersective")
        self.f = f
        self.form = factor_over_rationals(f)
        self._roots: dict[int, int] = {1: 0}
        self._polys: dict[int, QuadraticPoly] = {}

    @property
    def double_root(self) -> bool:
        return isinstance(self.form, DoubleRoot)

    def branch(self, p: int) -> int:
        """1 if prime ``p`` is routed to ``-beta/alpha``, else 2."""
        if isinstance(self.form, Factored):
            return 1 if self.form.alpha % p else 2
        return 1

    def _local_root(self, p: int, e: int) -> int:
        pe = p**e
        form = self.form
        if isinstance(form, DoubleRoot):
            return int(form.root) % pe
        if self.branch(p) == 1:
            return (-form.beta * mod_inverse(form.alpha, pe)) % pe
        return (-form.lam * mod_inverse(form.gamma, pe)) % pe

    def root(self, d: int) -> int:
        """``r_d`` in ``(-d, 0]`` with ``f(r_d) = 0 (mod d)``."""
        if d < 1:
            raise ValueError("d must be positive")
        check_width(d)
        r = self._roots.get(d)
        if r is None:
            res, _ = crt_combine((self._local_root(p, e), p**e) for p, e in factorize(d))
            r = res - d if res else 0
            self._roots[d] = r
        return r

    def poly(self, d: int) -> QuadraticPoly:
        """The auxiliary polynomial ``f_d``."""
        g = self._polys.get(d)
        if g is None:
            if isinstance(self.form, DoubleRoot):
                g = QuadraticPoly(self.f.a2, 0, 0)
            else:
                r, f = self.root(d), self.f
                value = f(r)
                assert value % d == 0
                g = QuadraticPoly(d * f.a2, f.derivative_at(r), value // d)
            self._polys[d] = g
        return g

    def content_bound(self) -> int:
        """Upper bound on ``content(f_d)`` valid for every ``d``."""
        if isinstance(self.form, DoubleRoot):
            return abs(self.form.a)
        return abs(self.form.a * self.form.resultant)

    def projection_step(self, q: int) -> int:
        """Progression step carrying ``(B-B)`` missing ``I(f_d)`` to ``I(f_{qd})``.

        ``q`` itself unless ``f`` has a double root; then ``f_d = a x**2`` for
        every ``d`` and the step must be a square, so the least square multiple of ``q``.
        """
        if self.double_root:
            return q * squarefree_kernel_of_odd_part(q)
        return q


@lru_cache(maxsize=256)
def family(f: QuadraticPoly) -> AuxiliaryFamily:
    return AuxiliaryFamily(f)


def root_system(f: QuadraticPoly, d: int) -> int:
    return family(f).root(d)


def auxiliary_poly(f: QuadraticPoly, d: int) -> QuadraticPoly:
    return family(f).poly(d)
