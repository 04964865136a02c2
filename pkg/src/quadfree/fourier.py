"""Normalized DFT over Z_N and exact major/minor arc classification.

The transform is ``F^(t) = (1/N) sum_x F(x) e^{-2 pi i x t / N}``; a set
``A`` of ``[1, N]`` is identified with its indicator on ``Z_N`` (so ``N``
sits at residue 0).

A frequency ``t`` lies in the arc ``M_{a,q}(K)`` when the circle distance
from ``t/N`` to ``a/q`` is below ``K/N``. Multiplying through by ``N q``
this is the integer test ``min(|tq - aN|, Nq - |tq - aN|) < K q``, which we
evaluate exactly (``K`` is held as a Fraction).
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence, TextIO, Union

import numpy as np

from .errors import ElementOutOfRange

DIRECT_LIMIT = 4096
SCHEMA = "quadfree.spectrum/1"


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def indicator(A: Iterable[int], N: int) -> np.ndarray:
    A = np.fromiter((int(a) for a in A), dtype=np.int64)
    if A.size and (A.min() < 1 or A.max() > N):
        raise ElementOutOfRange(f"elements must lie in [1, {N}]")
    ind = np.zeros(N, dtype=np.float64)
    ind[A % N] = 1.0
    return ind


def _dft_direct(elements: np.ndarray, N: int) -> np.ndarray:
    """Exact-phase summation: each phase index ``x t mod N`` is an integer."""
    roots = np.exp(-2j * np.pi * np.arange(N) / N)
    t = np.arange(N, dtype=np.int64)
    out = np.zeros(N, dtype=np.complex128)
    chunk = max(1, (1 << 22) // max(N, 1))
    for start in range(0, elements.size, chunk):
        x = elements[start : start + chunk] % N
        out += roots[(x[:, None] * t[None, :]) % N].sum(axis=0)
    return out / N


@dataclass(frozen=True, eq=False)
class Spectrum:
    N: int
    coefficients: np.ndarray
    size: int

    @property
    def density(self) -> float:
        return self.size / self.N

    def __getitem__(self, t):
        return self.coefficients[np.asarray(t) % self.N]

    @cached_property
    def power(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2

    def total_power(self) -> float:
        # numpy reduces contiguous float arrays by pairwise summation
        return float(np.sum(self.power))


def dft(A: Iterable[int], N: int, method: str = "auto") -> Spectrum:
    """Normalized DFT of the indicator of ``A`` in ``[1, N]``.

    ``method`` is ``"direct"`` (exact-phase O(N |A|) summation), ``"fft"``,
    or ``"auto"`` (fft for powers of two or N beyond ``DIRECT_LIMIT``).
    """
    ind = indicator(A, N)
    elements = np.nonzero(ind)[0]
    if method == "auto":
        method = "fft" if (_is_power_of_two(N) or N > DIRECT_LIMIT) else "direct"
    if method == "fft":
        coeffs = np.fft.fft(ind) / N
    elif method == "direct":
        coeffs = _dft_direct(elements, N)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Spectrum(N, coeffs, int(elements.size))


class Arc(enum.Enum):
    ZERO = "zero"
    MINOR = "minor"


@dataclass(frozen=True, order=True)
class MajorArc:
    a: int
    q: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.a % self.q, self.q)


ArcLabel = Union[MajorArc, Arc]


def as_fraction(K) -> Fraction:
    """Exact width; floats are snapped to the nearest fraction with denominator <= 10**6."""
    if isinstance(K, Fraction):
        return K
    if isinstance(K, float):
        return Fraction(K).limit_denominator(10**6)
    return Fraction(K)


def in_arc(t: int, a: int, q: int, N: int, K) -> bool:
    """``t`` in ``M_{a,q}(K)`` (the zero frequency included)."""
    K = as_fraction(K)
    dist = abs((t % N) * q - (a % q) * N)
    dist = min(dist, N * q - dist)
    return dist * K.denominator < K.numerator * q


def arc_members(a: int, q: int, N: int, K) -> np.ndarray:
    """Sorted ``t`` in ``Z_N`` with ``t in M_{a,q}(K)`` (zero included if it qualifies)."""
    K = as_fraction(K)
    if 2 * K >= N:
        cand = np.arange(N)
    else:
        centre = Fraction((a % q) * N, q)
        lo, hi = math.floor(centre - K), math.ceil(centre + K)
        cand = np.unique(np.arange(lo, hi + 1) % N)
    return np.array([t for t in cand.tolist() if in_arc(t, a, q, N, K)], dtype=np.int64)


def arc_labels(t: int, N: int, K, max_q: int) -> list[MajorArc]:
    """Every reduced ``a/q`` with ``q <= max_q`` whose arc contains ``t``."""
    K = as_fraction(K)
    t %= N
    out = []
    for q in range(1, max_q + 1):
        lo = math.floor((t * q - K * q) / N) - 1
        hi = math.ceil((t * q + K * q) / N) + 1
        seen = set()
        for a in range(lo, hi + 1):
            ar = a % q or q
            if ar in seen:
                continue
            seen.add(ar)
            if math.gcd(ar, q) == 1 and in_arc(t, ar, q, N, K):
                out.append(MajorArc(ar, q))
    return out


def classify_arc(t: int, N: int, K, Q_max: int | None = None) -> ArcLabel:
    """Zero, the first major arc (smallest ``q``, then nearest ``a``), or minor.

    ``Q_max`` defaults to ``floor(K**2)``.
    """
    K = as_fraction(K)
    if Q_max is None:
        Q_max = math.floor(K * K)
    t %= N
    if t == 0:
        return Arc.ZERO
    for q in range(1, min(Q_max, N) + 1):
        a = (2 * t * q + N) // (2 * N)  # nearest integer to tq/N
        dist = abs(t * q - a * N)
        ar = a % q or q
        if math.gcd(ar, q) == 1 and dist * K.denominator < K.numerator * q:
            return MajorArc(ar, q)
    return Arc.MINOR


class ArcDecomposition:
    """Classification table of ``Z_N`` into zero, major arcs (``q <= Q_max``), minor arcs.

    Built with the same rule as :func:`classify_arc`, vectorized over ``t``.
    ``q_of[t]`` is 0 for ``t = 0``, -1 for minor arcs, else the denominator.
    Denominators above ``N`` are never needed: every ``t/N`` is itself a
    fraction with denominator at most ``N``.
    """

    def __init__(self, N: int, K, Q_max: int | None = None):
        self.N = N
        self.K = as_fraction(K)
        self.Q_max = math.floor(self.K * self.K) if Q_max is None else int(Q_max)
        t = np.arange(N, dtype=np.int64)
        q_of = np.full(N, -1, dtype=np.int64)
        a_of = np.zeros(N, dtype=np.int64)
        q_of[0] = 0
        kn, kd = self.K.numerator, self.K.denominator
        q_top = max(1, min(self.Q_max, N))
        if max(kd, 1) * N * q_top >= 1 << 62 or kn * q_top >= 1 << 62:
            t = t.astype(object)  # exact but slow path for extreme widths
        open_ = q_of == -1
        for q in range(1, min(self.Q_max, N) + 1):
            if not open_.any():
                break
            a = (2 * t * q + N) // (2 * N)
            dist = np.abs(t * q - a * N)
            ar = (a % q).astype(np.int64)
            ar[ar == 0] = q
            hit = open_ & (np.gcd(ar, q) == 1) & np.asarray(dist * kd < kn * q, dtype=bool)
            q_of[hit] = q
            a_of[hit] = ar[hit]
            open_ &= ~hit
        self.q_of = q_of
        self.a_of = a_of

    def label(self, t: int) -> ArcLabel:
        t %= self.N
        q = int(self.q_of[t])
        if q == 0:
            return Arc.ZERO
        if q < 0:
            return Arc.MINOR
        return MajorArc(int(self.a_of[t]), q)

    @property
    def major_mask(self) -> np.ndarray:
        return self.q_of > 0

    @property
    def minor_mask(self) -> np.ndarray:
        return self.q_of < 0

    def arcs(self) -> dict[MajorArc, np.ndarray]:
        """Labelled frequencies grouped by arc, ordered by ``(q, a)``."""
        idx = np.nonzero(self.q_of > 0)[0]
        keys = self.q_of[idx] * (self.N + 1) + self.a_of[idx]
        order = np.lexsort((idx, keys))
        idx, keys = idx[order], keys[order]
        out: dict[MajorArc, np.ndarray] = {}
        if idx.size == 0:
            return out
        breaks = np.nonzero(np.diff(keys))[0] + 1
        for group in np.split(idx, breaks):
            t0 = int(group[0])
            out[MajorArc(int(self.a_of[t0]), int(self.q_of[t0]))] = group
        return out


def mass_on_Mq(spectrum: Spectrum, q: int, K) -> float:
    """``sum |A^(t)|**2`` over nonzero ``t`` in ``M_q(K)``, straight from the definition."""
    N = spectrum.N
    members: set[int] = set()
    for a in range(1, q + 1):
        if math.gcd(a, q) == 1:
            members.update(arc_members(a, q, N, K).tolist())
    members.discard(0)
    if not members:
        return 0.0
    idx = np.array(sorted(members), dtype=np.int64)
    return float(np.sum(spectrum.power[idx]))


def max_mass_denominator(spectrum: Spectrum, Q: int, K) -> tuple[int, float]:
    """``argmax_{q <= Q}`` of :func:`mass_on_Mq`, ties to the smallest ``q``."""
    best_q, best = 1, -1.0
    for q in range(1, int(Q) + 1):
        m = mass_on_Mq(spectrum, q, K)
        if m > best:
            best_q, best = q, m
    return best_q, best


def mass_by_denominator(spectrum: Spectrum, arcs: ArcDecomposition) -> dict[int, float]:
    """Mass per denominator read off a classification table."""
    out: dict[int, float] = {}
    qs = arcs.q_of
    for q in np.unique(qs[qs > 0]).tolist():
        out[q] = float(np.sum(spectrum.power[qs == q]))
    return out


def minor_mass(spectrum: Spectrum, arcs: ArcDecomposition) -> float:
    return float(np.sum(spectrum.power[arcs.minor_mask]))


def write_spectrum_csv(spectrum: Spectrum, arcs: ArcDecomposition, out: TextIO | None = None) -> str:
    """Rows ``t, re, im, |A^|^2, class, a, q`` after a schema header line."""
    buf = out or io.StringIO()
    buf.write(f"# schema: {SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "re", "im", "abs2", "class", "a", "q"])
    for t in range(spectrum.N):
        c = spectrum.coefficients[t]
        lab = arcs.label(t)
        if isinstance(lab, MajorArc):
            cls, a, q = "major", lab.a, lab.q
        else:
            cls, a, q = lab.value, "", ""
        w.writerow([t, f"{c.real:.17g}", f"{c.imag:.17g}", f"{abs(c) ** 2:.17g}", cls, a, q])
    return buf.getvalue() if out is None else ""


def frequencies_in(arcs: ArcDecomposition, q: int) -> Sequence[int]:
    return np.nonzero(arcs.q_of == q)[0].tolist()
