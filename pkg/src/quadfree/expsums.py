"""Weighted Weyl sums, Gauss sums and the numerics behind their estimates.

For a quadratic ``h`` with positive leading coefficient and a modulus ``L``,
the weighted Weyl sum is

    S(t) = (1/M**2) * sum_{x=j}^{M} x * e(h(x) t / L),

where ``j`` is one past the last positive integer with ``h <= 0`` and ``M``
is one before the first with ``h >= L/3``. Phases are formed from the exact
residue ``h(x) t mod L`` and looked up in a table of ``L``-th roots of unity,
so no large product ever passes through floating point.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, TextIO

import numpy as np
from scipy import integrate

from .errors import BudgetExceeded, DegenerateRange, HypothesisViolated, QuadratureNonConvergence
from .fourier import Arc, ArcDecomposition, MajorArc
from .modarith import best_convergent
from .polycore import QuadraticPoly

SCHEMA = "quadfree.weyl/1"
TRIPLE_BUDGET = 30_000_000
TUPLE_BUDGET = 5_000_000
TABLE_LIMIT = 1 << 22


def _roots_of_unity(L: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(L) / L)


@dataclass(frozen=True, eq=False)
class WeylSumContext:
    h: QuadraticPoly
    L: int
    j: int
    M: int

    @property
    def alpha(self) -> int:
        return self.h.a2

    @property
    def beta(self) -> int:
        return self.h.a1

    @property
    def gamma(self) -> int:
        return self.h.a0

    @cached_property
    def xs(self) -> np.ndarray:
        return np.arange(self.j, self.M + 1, dtype=np.int64)

    @cached_property
    def h_mod(self) -> np.ndarray:
        """``h(x) mod L`` for ``j <= x <= M``, computed with Python integers."""
        return np.array([self.h(x) % self.L for x in range(self.j, self.M + 1)], dtype=np.int64)

    @cached_property
    def phase_table(self) -> np.ndarray:
        return _roots_of_unity(self.L)

    def phases(self, idx: np.ndarray) -> np.ndarray:
        """``e(idx / L)`` for exact residues ``idx``; tabulated only while ``L`` is small."""
        if self.L <= TABLE_LIMIT:
            return self.phase_table[idx]
        return np.exp(2j * np.pi * (idx.astype(np.float64) / self.L))

    def s0_exact(self) -> Fraction:
        j, M = self.j, self.M
        return Fraction(M * (M + 1) // 2 - j * (j - 1) // 2, M * M)


def _last_nonpositive(h: QuadraticPoly) -> int:
    """``max{n >= 1 : h(n) <= 0}``, or 0 when ``h > 0`` on all positive integers."""
    disc = h.discriminant
    if disc < 0:
        return 0
    # larger real root, seeded by isqrt and then corrected exactly
    n = max(0, (-h.a1 + math.isqrt(disc)) // (2 * h.a2) + 2)
    while n >= 1 and h(n) > 0:
        n -= 1
    while h(n + 1) <= 0:
        n += 1
    return n


def _first_at_least(h: QuadraticPoly, L: int) -> int:
    """``min{n >= 1 : 3 h(n) >= L}``."""
    if 3 * h(1) >= L:
        return 1
    # 3h(n) >= L beyond the vertex; seed with the larger root of 3h(x) = L
    disc = h.a1 * h.a1 - 4 * h.a2 * (h.a0 - Fraction(L, 3))
    n = max(1, math.floor((-h.a1 + math.sqrt(float(disc))) / (2 * h.a2)) - 2)
    vertex = max(1, -h.a1 // (2 * h.a2))
    n = max(n, vertex)
    while n > vertex and 3 * h(n - 1) >= L:
        n -= 1
    while 3 * h(n) < L:
        n += 1
    return n


def make_context(h: QuadraticPoly, L: int) -> WeylSumContext:
    if h.a2 <= 0:
        raise ValueError("h needs a positive leading coefficient")
    j = _last_nonpositive(h) + 1
    M = _first_at_least(h, L) - 1
    if M < j:
        raise DegenerateRange(f"M = {M} < j = {j} for h = {h}, L = {L}")
    return WeylSumContext(h, L, j, M)


def weyl_sum(ctx: WeylSumContext, t: int) -> complex:
    t = int(t) % ctx.L
    if ctx.L >= 1 << 31:
        idx = np.array([(int(v) * t) % ctx.L for v in ctx.h_mod], dtype=np.int64)
    else:
        idx = (ctx.h_mod * t) % ctx.L
    return complex(np.sum(ctx.xs * ctx.phases(idx))) / (ctx.M * ctx.M)


def weyl_spectrum(ctx: WeylSumContext, ts: Iterable[int] | None = None) -> np.ndarray:
    """``S(t)`` for every ``t`` in ``ts`` (default all of ``Z_L``) by direct summation."""
    L = ctx.L
    ts = np.arange(L, dtype=np.int64) if ts is None else np.asarray(list(ts), dtype=np.int64) % L
    out = np.empty(ts.size, dtype=np.complex128)
    chunk = max(1, (1 << 22) // max(1, ctx.xs.size))
    if L >= 1 << 31:
        hm = ctx.h_mod.astype(object)
    else:
        hm = ctx.h_mod
    w = ctx.xs.astype(np.float64)
    for start in range(0, ts.size, chunk):
        tt = ts[start : start + chunk]
        idx = (tt[:, None] * hm[None, :]) % L
        out[start : start + chunk] = (ctx.phases(idx.astype(np.int64)) * w).sum(axis=1)
    return out / (ctx.M * ctx.M)


def gauss_sum(h: QuadraticPoly, a: int, q: int) -> complex:
    if q < 1:
        raise ValueError("q must be positive")
    r = np.arange(q, dtype=np.int64)
    idx = (h.eval_mod(r, q) * (a % q)) % q
    return complex(np.sum(_roots_of_unity(q)[idx]))


def phase_integral_closed_form(alpha: int, lam: float, M: float) -> complex:
    """``int_1^M x e(alpha x**2 lam) dx`` in closed form."""
    if lam == 0:
        return complex((M * M - 1) / 2)
    num = np.exp(2j * np.pi * alpha * M * M * lam) - np.exp(2j * np.pi * alpha * lam)
    return complex(num / (2j * np.pi * lam) / (2 * alpha))


def phase_integral(alpha: int, beta: int, lam: float, M: float, rtol: float = 1e-10) -> complex:
    """``int_1^M x e((alpha x**2 + beta x) lam) dx`` by adaptive quadrature."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    if lam == 0:
        return complex((M * M - 1) / 2)
    oscillations = abs(lam) * (alpha * M * M + abs(beta) * M)
    limit = int(min(20000, 200 + 50 * oscillations))

    def f(x):
        return x * np.exp(2j * np.pi * (alpha * x * x + beta * x) * lam)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, 1.0, float(M), limit=limit, epsabs=1e-13 * M * M, epsrel=rtol, complex_func=True)
        except integrate.IntegrationWarning as exc:
            raise QuadratureNonConvergence(str(exc)) from exc
    scale = max(1.0, abs(val))
    if abs(err) > 1e-6 * scale:
        raise QuadratureNonConvergence(f"error estimate {err:g} too large")
    return complex(val)


def major_arc_approx(ctx: WeylSumContext, a: int, q: int, lam: float) -> complex:
    """Main term ``G(a, q) / (q M**2) * int_1^M x e(h(x) lam) dx``.

    Issues :class:`HypothesisViolated` outside ``q <= M**0.1``, ``(a, q) = 1``,
    ``|lam| < M**-1.9``; the value is still returned.
    """
    M = ctx.M
    problems = []
    if q > M**0.1:
        problems.append(f"q = {q} > M^0.1 = {M ** 0.1:.3f}")
    if math.gcd(a, q) != 1:
        problems.append(f"gcd({a}, {q}) != 1")
    if abs(lam) >= M**-1.9:
        problems.append(f"|lambda| = {abs(lam):.3g} >= M^-1.9")
    if problems:
        warnings.warn(HypothesisViolated("; ".join(problems)), stacklevel=2)
    G = gauss_sum(ctx.h, a, q)
    integral = phase_integral(ctx.alpha, ctx.beta, lam, M) * np.exp(2j * np.pi * ctx.gamma * lam)
    return complex(G * integral / (q * M * M))


def minor_arc_bound(ctx: WeylSumContext, q: int) -> float:
    """``log M * (alpha/q + alpha/M + q/M**2) ** 0.5`` (implied constant 1)."""
    M, alpha = ctx.M, ctx.alpha
    return math.log(M) * math.sqrt(alpha / q + alpha / M + q / (M * M))


def dirichlet_approximation(t: int, L: int, max_q: int) -> Fraction:
    """Convergent ``a/q`` of ``t/L`` with ``q <= max_q``; satisfies ``|t/L - a/q| < 1/q**2``."""
    return best_convergent(int(t) % L, L, max_q)


def sixth_moment(ctx: WeylSumContext, S: np.ndarray | None = None) -> float:
    if S is None:
        S = weyl_spectrum(ctx)
    return float(np.sum(np.abs(S) ** 6))


def _triples(M: int, lo: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = M - lo + 1
    if n**3 > TRIPLE_BUDGET:
        raise BudgetExceeded(f"{n}^3 triples exceed the budget {TRIPLE_BUDGET}")
    x = np.arange(lo, M + 1, dtype=np.int64)
    a, b, c = np.meshgrid(x, x, x, indexing="ij")
    return a.ravel(), b.ravel(), c.ravel()


def sixth_moment_exact(ctx: WeylSumContext) -> Fraction:
    """``sum_t |S(t)|**6`` exactly: ``L / M**12`` times the weighted count of equal h-sums.

    On ``[j, M]`` each ``h(x)`` lies in ``(0, L/3)``, so congruent triple sums are equal.
    """
    x1, x2, x3 = _triples(ctx.M, ctx.j)
    hv = {x: ctx.h(x) for x in range(ctx.j, ctx.M + 1)}
    hx = np.array([hv[x] for x in range(ctx.j, ctx.M + 1)], dtype=np.int64)
    off = ctx.j
    key = hx[x1 - off] + hx[x2 - off] + hx[x3 - off]
    weight = x1 * x2 * x3
    order = np.argsort(key, kind="stable")
    key, weight = key[order], weight[order]
    starts = np.concatenate(([0], np.nonzero(np.diff(key))[0] + 1))
    # per-key sums stay below M**6 < 2**63 for every M the triple budget admits
    sums = np.add.reduceat(weight, starts)
    total = sum(s * s for s in sums.tolist())
    return Fraction(ctx.L * total, ctx.M**12)


def count_J(alpha: int, beta: int, M: int) -> int:
    """Solutions in ``[1, M]**6`` of ``alpha (sum x_i^2 - sum x_j^2) = beta (sum x_i - sum x_j)``.

    Meet in the middle: the equation says ``alpha Q - beta S`` agrees on both
    triples, so J is the sum of squared multiplicities of that key.
    """
    if M < 1:
        return 0
    x1, x2, x3 = _triples(M)
    key = alpha * (x1 * x1 + x2 * x2 + x3 * x3) - beta * (x1 + x2 + x3)
    _, counts = np.unique(key, return_counts=True)
    return int(np.sum(counts.astype(np.int64) ** 2))


def _six_tuples(M: int) -> list[np.ndarray]:
    if M**6 > TUPLE_BUDGET:
        raise BudgetExceeded(f"{M}^6 tuples exceed the budget {TUPLE_BUDGET}")
    x = np.arange(1, M + 1, dtype=np.int64)
    shape = [1] * 6
    out = []
    for i in range(6):
        s = list(shape)
        s[i] = M
        out.append(x.reshape(s))
    return out


def count_J_enumerate(alpha: int, beta: int, M: int) -> int:
    """Full 6-fold enumeration of the equation counted by :func:`count_J`."""
    x1, x2, x3, x4, x5, x6 = _six_tuples(M)
    lin = x1 + x2 + x3 - x4 - x5 - x6
    quad = x1 * x1 + x2 * x2 + x3 * x3 - x4 * x4 - x5 * x5 - x6 * x6
    return int(np.count_nonzero(alpha * quad == beta * lin))


def tarry_count(s: int, t_val: int, M: int) -> int:
    """Tuples in ``[1, M]**6`` with linear difference ``s`` and quadratic difference ``t_val``."""
    if abs(s) >= 3 * M:
        return 0
    x1, x2, x3 = _triples(M)
    lin = x1 + x2 + x3
    quad = x1 * x1 + x2 * x2 + x3 * x3
    qmax = 3 * M * M + 1
    key = lin * (2 * qmax + 1) + quad
    keys, counts = np.unique(key, return_counts=True)
    table = dict(zip(keys.tolist(), counts.tolist()))
    shift = s * (2 * qmax + 1) + t_val
    return int(sum(c * table.get(k - shift, 0) for k, c in table.items()))


def tarry_count_enumerate(s: int, t_val: int, M: int) -> int:
    x1, x2, x3, x4, x5, x6 = _six_tuples(M)
    lin = x1 + x2 + x3 - x4 - x5 - x6
    quad = x1 * x1 + x2 * x2 + x3 * x3 - x4 * x4 - x5 * x5 - x6 * x6
    return int(np.count_nonzero((lin == s) & (quad == t_val)))


def sixth_moment_bound(ctx: WeylSumContext) -> Fraction:
    """``(L / M**6) J(alpha, -beta, M)``, the upper bound for :func:`sixth_moment`.

    Equal h-sums mean ``alpha dQ + beta dS = 0``, i.e. ``alpha dQ = (-beta) dS``.
    """
    return Fraction(ctx.L * count_J(ctx.alpha, -ctx.beta, ctx.M), ctx.M**6)


@dataclass(frozen=True)
class WeylRow:
    t: int
    abs_s: float
    label: str
    bound: float
    main_term_error: float | None


def weyl_rows(ctx: WeylSumContext, arcs: ArcDecomposition, S: np.ndarray | None = None) -> list[WeylRow]:
    """Per-frequency diagnostics: ``|S(t)|``, arc class, Weyl bound, major-arc error."""
    if S is None:
        S = weyl_spectrum(ctx)
    L, M = ctx.L, ctx.M
    rows = []
    max_q = max(1, int(M**1.9))
    for t in range(L):
        lab = arcs.label(t)
        approx = dirichlet_approximation(t, L, max_q)
        bound = minor_arc_bound(ctx, approx.denominator)
        err = None
        if isinstance(lab, MajorArc) or lab is Arc.ZERO:
            a, q = (lab.a, lab.q) if isinstance(lab, MajorArc) else (1, 1)
            lam = t / L - a / q
            lam -= round(lam)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", HypothesisViolated)
                try:
                    err = abs(S[t] - major_arc_approx(ctx, a, q, lam))
                except QuadratureNonConvergence:
                    err = None
        label = lab.value if isinstance(lab, Arc) else f"{lab.a}/{lab.q}"
        rows.append(WeylRow(t, float(abs(S[t])), label, bound, err))
    return rows


def write_weyl_csv(rows: list[WeylRow], out: TextIO | None = None) -> str:
    buf = out or io.StringIO()
    buf.write(f"# schema: {SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "abs_S", "class", "bound", "main_term_error"])
    for r in rows:
        err = "" if r.main_term_error is None else f"{r.main_term_error:.12g}"
        w.writerow([r.t, f"{r.abs_s:.12g}", r.label, f"{r.bound:.12g}", err])
    return buf.getvalue() if out is None else ""
