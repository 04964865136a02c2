"""Executable outer density-increment iteration and inner frequency blow-up.

Outer loop: while a set ``A_k`` of ``[1, N_k]`` has too much Fourier mass
near rationals of small denominator ``q`` it is projected onto a denser
progression of step ``q`` and the polynomial passes to ``f_{q d}``; when
mass is spread out but the lower half is sparse, the upper half is
translated down. Otherwise the loop stops with the data the inner step needs.

Why step ``q`` keeps difference-freeness (``f`` without a double root): with
``c = (r_{qd} - r_d) / d``, an integer in ``(-q, 0]`` because the roots are
coherent, one has ``f_d(q n + c) = q f_{qd}(n)``. If ``m - m' = f_{qd}(n) > 0``
for ``m, m'`` in the projected set then the original elements differ by
``q (m - m') = f_d(q n + c)`` with ``q n + c >= 1``, which is excluded. For
``f = a (x - b)**2`` every ``f_d`` is ``a x**2`` and the step has to be a
square multiple of ``q`` instead.

Inner step: for a frequency ``s`` with ``|B1^(s)| >= sigma/U``, the identity
``sum_t B^(t) conj(B1^(s+t)) S(t) = 0`` forces mass of ``|B^||B1^(s+.)||S|``
onto major arcs of width ``1/eta``; these are sorted into dyadic cells by
denominator and by the sizes of the two transforms, and the heaviest cell
yields a new frequency set ``P_s``. Combining ``P_s`` over ``s`` through sums
of rationals ``a/q + b/r`` gives the next set ``P'``.

At any representable ``N`` the asymptotic thresholds are meaningless, so all
of them are explicit knobs in :class:`IterationParams`.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import DegenerateTriple, EmptyMajorMass, PreconditionFailed, RangeError
from .expsums import WeylSumContext, make_context, weyl_spectrum
from .fourier import ArcDecomposition, MajorArc, Spectrum, arc_labels, arc_members, as_fraction, dft, max_mass_denominator
from .modarith import max_divisor_count
from .polycore import AuxiliaryFamily, QuadraticPoly
from .setlab import IntegerSet, is_difference_free

TRACE_SCHEMA = "quadfree.trace/1"


@dataclass(frozen=True)
class IterationParams:
    """Knobs of both iterations.

    ``mass_fraction`` (``theta``) and ``increment_gain`` default to
    ``(log N)**(-1 + epsilon)`` and ``1 + theta/8`` evaluated at the starting
    ``N``; ``rho`` defaults to ``(1 - 11 epsilon) / log 3``.
    """

    epsilon: float = 0.05
    Q: float = 4.0
    rho: float | None = None
    c0: Fraction = Fraction(1, 20)
    c1: float = 1e-5
    increment_gain: float | None = None
    mass_fraction: float | None = None
    c_increment: float = 1.0
    min_window: int = 8
    min_interval: int = 16
    max_steps: int = 512
    strict_mmass: bool = False

    def __post_init__(self):
        if not 0 < self.epsilon < 1 / 11:
            raise ValueError("epsilon must lie in (0, 1/11)")
        if self.Q < 1:
            raise ValueError("Q must be at least 1")
        object.__setattr__(self, "c0", as_fraction(self.c0))
        if self.c0 <= 0 or self.c1 <= 0:
            raise ValueError("c0 and c1 must be positive")

    @property
    def rho_value(self) -> float:
        return (1 - 11 * self.epsilon) / math.log(3) if self.rho is None else self.rho

    def theta(self, N: int) -> float:
        if self.mass_fraction is not None:
            return self.mass_fraction
        return math.log(max(N, 3)) ** (-1 + self.epsilon)

    def gain(self, N: int) -> float:
        if self.increment_gain is not None:
            return self.increment_gain
        return 1 + self.theta(N) / 8

    def formula_Q(self, N: int) -> float:
        """``(log N)**(epsilon log log log N)``, reported next to the configured ``Q``."""
        lll = math.log(math.log(math.log(N))) if N > math.e**math.e else 0.0
        return math.log(N) ** (self.epsilon * lll)


# ---------------------------------------------------------------- outer loop


def project_to_progression(B: IntegerSet, L: int, u: int, q: int, L_new: int) -> IntegerSet:
    """``{m in [1, L_new] : u + m q in B}``."""
    if q < 1 or L_new < 1 or u < 0 or u + q * L_new > L:
        raise RangeError(f"progression u={u}, q={q}, length {L_new} leaves [1, {L}]")
    return IntegerSet(L_new, tuple(m for m in range(1, L_new + 1) if u + m * q in B))


@dataclass(frozen=True)
class Increment:
    u: int
    length: int
    count: int
    step: int

    @property
    def density(self) -> float:
        return self.count / self.length


def find_density_increment(
    B: IntegerSet, L: int, q: int, params: IterationParams, step: int | None = None, gain: float | None = None
) -> Increment | None:
    """Densest progression ``u + step * [1, L']`` inside ``[1, L]``.

    All offsets ``u`` are scanned (every residue class mod ``step`` and every
    position within it) over the lengths ``L'max, L'max/2, ...`` down to
    ``max(min_window, floor(c_increment sigma L / Q**4))``. Ties go to the
    longer window, then the smaller ``u``. ``None`` when the best density is
    below ``sigma * gain``.
    """
    step = q if step is None else step
    sigma = len(B) / L
    gain = params.gain(L) if gain is None else gain
    min_len = max(params.min_window, math.floor(params.c_increment * sigma * L / params.Q**4), 1)
    max_len = L // step
    if max_len < min_len:
        return None
    ind = np.zeros(L + 1, dtype=np.int64)
    ind[list(B.elements)] = 1
    prefixes = []
    for r in range(step):
        seq = ind[r::step]  # x = r + j step
        prefixes.append(np.concatenate(([0], np.cumsum(seq))))
    best: Increment | None = None
    length = max_len
    while length >= min_len:
        for r, P in enumerate(prefixes):
            # window j = i+1 .. i+length needs i + length <= len(seq) - 1
            n_starts = P.size - 1 - length
            if n_starts <= 0:
                continue
            counts = P[1 + length : 1 + length + n_starts] - P[1:1 + n_starts]
            i = int(np.argmax(counts))
            cand = Increment(r + i * step, length, int(counts[i]), step)
            if best is None or _better(cand, best):
                best = cand
        length //= 2
    if best is None or best.count < sigma * gain * best.length:
        return None
    return best


def _better(a: Increment, b: Increment) -> bool:
    lhs, rhs = a.count * b.length, b.count * a.length
    if lhs != rhs:
        return lhs > rhs
    if a.length != b.length:
        return a.length > b.length
    return a.u < b.u


@dataclass(frozen=True)
class IncrementStep:
    k: int
    N: int
    size: int
    d: int
    poly: QuadraticPoly
    decision: str
    q: int | None = None
    step: int | None = None
    offset: int | None = None
    max_mass: float | None = None

    @property
    def density(self) -> float:
        return self.size / self.N

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "N": self.N,
            "size": self.size,
            "density": self.density,
            "d": self.d,
            "poly": list(self.poly.coefficients),
            "decision": self.decision,
            "q": self.q,
            "step": self.step,
            "offset": self.offset,
            "max_mass": self.max_mass,
        }


@dataclass(frozen=True)
class Case2Data:
    B: IntegerSet
    h: QuadraticPoly
    d: int
    sigma: float
    max_mass: float
    mass_threshold: float

    @property
    def L(self) -> int:
        return self.B.N

    def check(self) -> dict[str, bool]:
        L = self.L
        return {
            "difference_free": is_difference_free(self.B, self.h) is True,
            "half_interval": 3 * self.B.count_upto(L // 2) >= len(self.B),
            "max_mass": self.max_mass <= self.mass_threshold,
        }


@dataclass(frozen=True)
class Terminal:
    kind: str  # DensityExceeded | IntervalExhausted | IncrementNotFound
    detail: str = ""


@dataclass
class OuterTrace:
    f: QuadraticPoly
    params: IterationParams
    steps: list[IncrementStep] = field(default_factory=list)
    terminal: Union[Case2Data, Terminal, None] = None
    final_set: IntegerSet | None = None

    @property
    def terminal_kind(self) -> str:
        return "Case2Data" if isinstance(self.terminal, Case2Data) else self.terminal.kind

    def to_json(self) -> dict:
        N0 = self.steps[0].N if self.steps else 0
        out = {
            "schema": TRACE_SCHEMA,
            "poly": list(self.f.coefficients),
            "params": {
                "epsilon": self.params.epsilon,
                "Q": self.params.Q,
                "Q_formula": self.params.formula_Q(N0) if N0 > 2 else None,
                "rho": self.params.rho_value,
                "theta": self.params.theta(N0),
                "increment_gain": self.params.gain(N0),
                "c_increment": self.params.c_increment,
                "min_window": self.params.min_window,
                "min_interval": self.params.min_interval,
            },
            "steps": [s.to_json() for s in self.steps],
            "terminal": self.terminal_kind,
        }
        if isinstance(self.terminal, Case2Data):
            t = self.terminal
            out["case2"] = {
                "L": t.L,
                "size": len(t.B),
                "sigma": t.sigma,
                "d": t.d,
                "h": list(t.h.coefficients),
                "max_mass": t.max_mass,
                "mass_threshold": t.mass_threshold,
                "checks": t.check(),
            }
        else:
            out["detail"] = self.terminal.detail
        return out


def outer_iteration(A: IntegerSet, f: QuadraticPoly, params: IterationParams) -> OuterTrace:
    """Run the density-increment loop from ``(A, f)`` until a terminal state.

    A negative leading coefficient is flipped first: ``A - A`` is symmetric,
    so missing the nonzero values of ``f`` and of ``-f`` are the same
    condition. Raises :class:`PreconditionFailed` unless ``A`` already misses
    ``I(f_1)``.
    """
    if f.a2 < 0:
        f = f.negate()
    fam = AuxiliaryFamily(f)
    N0 = A.N
    theta = params.theta(N0)
    gain = params.gain(N0)
    d = 1
    h = fam.poly(1)
    viol = is_difference_free(A, h)
    if viol is not True:
        raise PreconditionFailed(f"A is not difference-free for {h}: {viol}")
    trace = OuterTrace(f, params)
    Q = params.Q
    Qi = math.floor(Q)
    k = 0
    while True:
        N, size = A.N, len(A)
        delta = size / N
        if k > params.max_steps:
            trace.terminal = Terminal("IntervalExhausted", "step limit reached")
            break
        if N < params.min_interval:
            trace.steps.append(IncrementStep(k, N, size, d, h, "stop"))
            trace.terminal = Terminal("IntervalExhausted", f"N_k = {N} < {params.min_interval}")
            break
        if size == 0:
            trace.steps.append(IncrementStep(k, N, size, d, h, "stop"))
            trace.terminal = Terminal("IntervalExhausted", "empty set")
            break
        spec = dft(A.elements, N)
        q, mass = max_mass_denominator(spec, max(Qi, 1), Fraction(Q).limit_denominator(10**6))
        threshold = delta * delta * theta
        if mass >= threshold:
            if delta * gain > 1:
                trace.steps.append(IncrementStep(k, N, size, d, h, "stop", q=q, max_mass=mass))
                trace.terminal = Terminal("DensityExceeded", f"delta * gain = {delta * gain:.6g} > 1")
                break
            step = fam.projection_step(q)
            inc = find_density_increment(A, N, q, params, step=step, gain=gain)
            if inc is None:
                trace.steps.append(IncrementStep(k, N, size, d, h, "stop", q=q, step=step, max_mass=mass))
                trace.terminal = Terminal("IncrementNotFound", f"no window at step {step} beats density {delta * gain:.6g}")
                break
            trace.steps.append(
                IncrementStep(k, N, size, d, h, "increment", q=q, step=step, offset=inc.u, max_mass=mass)
            )
            A_next = project_to_progression(A, N, inc.u, step, inc.length)
            d_next = d * q
            h = fam.poly(d_next)
            assert d_next % d == 0
            d = d_next
        elif 3 * A.count_upto(N // 2) < size:
            trace.steps.append(IncrementStep(k, N, size, d, h, "half", max_mass=mass))
            half = N // 2
            A_next = IntegerSet(N - half, tuple(a - half for a in A.elements if a > half))
        else:
            trace.steps.append(IncrementStep(k, N, size, d, h, "case2", q=q, max_mass=mass))
            trace.terminal = Case2Data(A, h, d, delta, mass, threshold)
            break
        new_delta = len(A_next) / A_next.N
        assert new_delta >= delta * gain - 1e-12, "density increment below the configured gain"
        assert is_difference_free(A_next, h) is True, "difference-freeness lost"
        A = A_next
        k += 1
    trace.final_set = A
    return trace


# ---------------------------------------------------------------- inner step


@dataclass(frozen=True, eq=False)
class SpectralInstance:
    """``B`` in ``[1, L]`` with ``h``; transforms of ``B``, ``B1 = B & [1, L/2]`` and the Weyl sum."""

    B: IntegerSet
    h: QuadraticPoly

    @property
    def L(self) -> int:
        return self.B.N

    @property
    def sigma(self) -> Fraction:
        return Fraction(len(self.B), self.L)

    @cached_property
    def B1(self) -> IntegerSet:
        return IntegerSet(self.L, tuple(b for b in self.B.elements if 2 * b <= self.L))

    @cached_property
    def ctx(self) -> WeylSumContext:
        return make_context(self.h, self.L)

    @cached_property
    def Bhat(self) -> Spectrum:
        return dft(self.B.elements, self.L)

    @cached_property
    def B1hat(self) -> Spectrum:
        return dft(self.B1.elements, self.L)

    @cached_property
    def S(self) -> np.ndarray:
        return weyl_spectrum(self.ctx)

    def orthogonality_sum(self, s: int) -> complex:
        """``sum_t B^(t) conj(B1^(s+t)) S(t)``; zero when ``B`` misses ``I(h)``."""
        L = self.L
        shifted = np.roll(self.B1hat.coefficients, -(s % L))
        return complex(np.sum(self.Bhat.coefficients * np.conj(shifted) * self.S))


def spectral_instance(B: IntegerSet, h: QuadraticPoly) -> SpectralInstance:
    return SpectralInstance(B, h)


def _eta_inverse(sigma: Fraction, U: int, c0: Fraction) -> Fraction:
    return 1 / (c0 * sigma / U)


@dataclass(frozen=True)
class InnerResult:
    s: int
    P_s: tuple[int, ...]
    arcs: tuple[MajorArc, ...]
    U_s: int
    V_s: int
    W_s: int
    cell: tuple[int, int, int]
    cell_mass: float
    major_mass: float
    y_mass: float
    eta_inv: Fraction


def _dyadic_level(sigma: float, value: float) -> int:
    """Least ``j >= 0`` with ``sigma / 2**j <= value``."""
    if value <= 0:
        raise ValueError("value must be positive")
    j = max(0, math.ceil(math.log2(sigma / value)))
    while j > 0 and sigma / 2 ** (j - 1) <= value:
        j -= 1
    while sigma / 2**j > value:
        j += 1
    return j


def inner_blowup(inst: SpectralInstance, s: int, U: int, params: IterationParams) -> InnerResult:
    """Dyadic-cell selection for one frequency ``s``.

    Arcs have width ``1/eta`` with ``eta = c0 sigma / U`` and denominators up
    to ``min(floor(eta**-2), L)``. Only nonzero major-arc frequencies count.
    A cell ``(i, j, k)`` holds the arcs ``a/q`` with ``2**(i-1) < q <= 2**i``
    whose maxima of ``|B^(t)|`` and ``|B1^(s+t)|`` over the arc fall in
    ``[sigma/2**j, sigma/2**(j-1))`` and ``[sigma/2**k, sigma/2**(k-1))``.
    The cell carrying the largest part of the Y-mass wins (ties: smaller
    ``i``, then ``j``, then ``k``), and each of its arcs contributes the
    frequency maximizing ``|B1^(s+t)|`` (ties: smaller ``t``).
    """
    L = inst.L
    sigma = inst.sigma
    sig = float(sigma)
    eta_inv = _eta_inverse(sigma, U, params.c0)
    q_max = min(math.floor(eta_inv * eta_inv), L)
    arcs = ArcDecomposition(L, eta_inv, q_max)
    Babs = np.abs(inst.Bhat.coefficients)
    B1s = np.abs(np.roll(inst.B1hat.coefficients, -(s % L)))
    Sabs = np.abs(inst.S)
    weight = Babs * B1s * Sabs
    major = arcs.major_mask
    major_mass = float(np.sum(weight[major]))
    if params.strict_mmass and major_mass < sig * sig / (8 * U):
        raise EmptyMajorMass(f"major-arc mass {major_mass:.3g} < sigma^2/8U")
    y_threshold = params.c1 * sig**3.5 / U**3
    Y = major & (np.minimum(Babs, B1s) > y_threshold)
    y_mass = float(np.sum(weight[Y]))
    if not Y.any():
        raise EmptyMajorMass("no major-arc frequency clears the Y threshold")
    cells: dict[tuple[int, int, int], list[tuple[MajorArc, np.ndarray]]] = {}
    cell_mass: dict[tuple[int, int, int], float] = {}
    for arc, ts in arcs.arcs().items():
        in_y = Y[ts]
        if not in_y.any():
            continue
        i = (arc.q - 1).bit_length()  # least i with q <= 2**i
        j = _dyadic_level(sig, float(Babs[ts].max()))
        k = _dyadic_level(sig, float(B1s[ts].max()))
        key = (i, j, k)
        cells.setdefault(key, []).append((arc, ts))
        cell_mass[key] = cell_mass.get(key, 0.0) + float(np.sum(weight[ts[in_y]]))
    best = min(cell_mass, key=lambda c: (-cell_mass[c], c))
    P_s, chosen = [], []
    for arc, ts in cells[best]:
        t = int(ts[int(np.argmax(B1s[ts]))])
        P_s.append(t)
        chosen.append(arc)
    i, j, k = best
    return InnerResult(
        s % L, tuple(P_s), tuple(chosen), 2**k, 2**i, 2**j, best, cell_mass[best], major_mass, y_mass, eta_inv
    )


@dataclass(frozen=True)
class FrequencySet:
    P: tuple[int, ...]
    U: int
    V: int
    K: int


def seed_frequency_set() -> FrequencySet:
    """``P = {0}``, ``U = 3``, ``V = K = 1``."""
    return FrequencySet((0,), 3, 1, 1)


def arcs_containing(t: int, L: int, K, V: int) -> list[MajorArc]:
    return arc_labels(t, L, K, V)


def check_frequency_set(inst: SpectralInstance, P: FrequencySet) -> dict[str, bool]:
    """Membership (size and arc) and one-per-arc conditions, checked exactly."""
    L = inst.L
    sig = float(inst.sigma)
    B1 = np.abs(inst.B1hat.coefficients)
    size_ok = all(B1[t % L] >= sig / P.U for t in P.P)
    arc_ok = all(t % L == 0 or arcs_containing(t, L, P.K, P.V) for t in P.P)
    seen: dict[MajorArc, int] = {}
    disjoint = True
    for t in P.P:
        for arc in arcs_containing(t, L, P.K, P.V):
            if arc in seen and seen[arc] != t % L:
                disjoint = False
            seen[arc] = t % L
    return {"membership": size_ok and arc_ok, "disjoint": disjoint}


@dataclass(frozen=True)
class CRInstance:
    """Data for the sum-of-rationals count: ``L``, arc widths and the chosen frequencies."""

    L: int
    K: Fraction
    V: int
    eta_inv: Fraction
    V_tilde: int
    P_tilde: tuple[int, ...]
    P_s: Mapping[int, tuple[int, ...]]


@dataclass(frozen=True)
class CRCheck:
    lhs: int
    rhs: float
    D: int
    tau: int
    holds: bool


def rational_sumset(S1: Sequence[Fraction], S2: Union[Iterable[Fraction], Sequence[Iterable[Fraction]]]) -> int:
    """Number of distinct ``a + b (mod 1)``.

    ``S2`` is either one set used for every element of ``S1`` or a list of
    sets, one per element of ``S1``. Everything is moved to a common
    denominator so the sums are plain integers.
    """
    S1 = [Fraction(x) for x in S1]
    S2 = list(S2)
    if S2 and all(isinstance(x, (Fraction, int)) for x in S2):
        per = [[Fraction(x) for x in S2]] * len(S1)
    else:
        per = [[Fraction(x) for x in group] for group in S2]
        if len(per) != len(S1):
            raise ValueError("need one set of summands per element of S1")
    dens = [x.denominator for x in S1] + [y.denominator for g in per for y in g]
    D = reduce(math.lcm, dens, 1)
    sums = set()
    for a, group in zip(S1, per):
        an = a.numerator * (D // a.denominator)
        for b in group:
            sums.add((an + b.numerator * (D // b.denominator)) % D)
    return len(sums)


def rational_sumset_bruteforce(S1: Sequence[Fraction], per: Sequence[Iterable[Fraction]]) -> int:
    out = set()
    for a, group in zip(S1, per):
        for b in group:
            x = Fraction(a) + Fraction(b)
            out.add(x - math.floor(x))
    return len(out)


def _cr_sets(inst: CRInstance) -> tuple[list[Fraction], list[list[Fraction]]]:
    S1, per = [], []
    for s in inst.P_tilde:
        targets = sorted({arc.fraction for t in inst.P_s[s] for arc in arcs_containing(t, inst.L, inst.eta_inv, inst.V_tilde)})
        lab = [MajorArc(1, 1)] if s % inst.L == 0 else arcs_containing(s, inst.L, inst.K, inst.V)
        for arc in lab:
            S1.append(arc.fraction)
            per.append(targets)
    return S1, per


def lemma_cr_check(inst: CRInstance) -> CRCheck:
    """Both sides of the lower bound ``|R| >= |P~| min|P_s|**2 / (V~ D tau**8 (1 + log V))``.

    ``R`` collects ``a/q + b/r`` over every arc ``a/q`` (``q <= V``, width
    ``K``) containing some ``s`` and every arc ``b/r`` (``r <= V~``, width
    ``1/eta``) containing some ``t`` in ``P_s``. ``D`` is the largest number
    of numerators ``b`` for a single ``r <= V~`` whose arcs meet the union of
    the ``P_s``; ``tau = max_{q <= V V~} tau(q)``.
    """
    S1, per = _cr_sets(inst)
    lhs = rational_sumset(S1, per) if S1 else 0
    by_r: dict[int, set[int]] = {}
    for s in inst.P_tilde:
        for t in inst.P_s[s]:
            for arc in arcs_containing(t, inst.L, inst.eta_inv, inst.V_tilde):
                by_r.setdefault(arc.q, set()).add(arc.a % arc.q)
    D = max((len(v) for v in by_r.values()), default=0)
    tau = max_divisor_count(inst.V * inst.V_tilde)
    min_ps = min((len(inst.P_s[s]) for s in inst.P_tilde), default=0)
    if D == 0 or not inst.P_tilde:
        rhs = 0.0
    else:
        rhs = len(inst.P_tilde) * min_ps**2 / (inst.V_tilde * D * tau**8 * (1 + math.log(inst.V)))
    return CRCheck(lhs, rhs, D, tau, lhs >= rhs)


@dataclass(frozen=True)
class BlowUpReport:
    P_new: FrequencySet
    inner: tuple[InnerResult, ...]
    failed: tuple[int, ...]
    triple: tuple[int, int, int]  # (U~, W~, V~)
    P_tilde: tuple[int, ...]
    R_size: int
    cr: CRCheck
    d_mass: float
    d_bound_holds: bool
    gain_ratio: float
    membership: bool
    disjoint: bool

    def to_json(self) -> dict:
        U_t, W_t, V_t = self.triple
        return {
            "P_new": list(self.P_new.P),
            "U_new": self.P_new.U,
            "V_new": self.P_new.V,
            "K_new": self.P_new.K,
            "U_tilde": U_t,
            "W_tilde": W_t,
            "V_tilde": V_t,
            "P_tilde": list(self.P_tilde),
            "failed": list(self.failed),
            "cells": {str(r.s): list(r.cell) for r in self.inner},
            "P_s_sizes": {str(r.s): len(r.P_s) for r in self.inner},
            "R_size": self.R_size,
            "D": self.cr.D,
            "tau": self.cr.tau,
            "cr_lhs": self.cr.lhs,
            "cr_rhs": self.cr.rhs,
            "cr_holds": self.cr.holds,
            "d_bound_holds": self.d_bound_holds,
            "gain_ratio": self.gain_ratio,
            "membership": self.membership,
            "disjoint": self.disjoint,
        }


def blow_up(P: FrequencySet, inst: SpectralInstance, params: IterationParams) -> BlowUpReport:
    """One step from ``(P, U, V, K)`` to ``(P', U', V', K')``.

    Runs :func:`inner_blowup` for every ``s`` in ``P`` (an ``s`` whose major
    arcs carry no usable mass is skipped and listed in ``failed``), keeps the
    ``s`` sharing the most common ``(U_s, W_s, V_s)`` (ties: smaller ``U_s``,
    then ``V_s``, then ``W_s``), and sets ``U' = U~``, ``V' = V~ V``,
    ``K' = K + ceil(1/eta)``. Each frequency ``s + t`` sits within ``K'`` of
    ``a/q + b/r``; one frequency is kept per distinct sum, and a later
    candidate is dropped when it shares an arc of width ``K'`` and
    denominator ``<= V'`` with one already kept.
    """
    L = inst.L
    results, failed = [], []
    for s in P.P:
        try:
            results.append(inner_blowup(inst, s, P.U, params))
        except EmptyMajorMass:
            failed.append(s)
    if not results:
        raise EmptyMajorMass("no frequency of P produced a cell")
    counts = Counter((r.U_s, r.W_s, r.V_s) for r in results)
    triple = min(counts, key=lambda c: (-counts[c], c[0], c[2], c[1]))
    chosen = [r for r in results if (r.U_s, r.W_s, r.V_s) == triple]
    if not chosen:
        raise DegenerateTriple("no frequency carries the modal triple")
    U_t, W_t, V_t = triple
    eta_inv = chosen[0].eta_inv
    U_new, V_new, K_new = U_t, V_t * P.V, P.K + math.ceil(eta_inv)

    candidates: dict[Fraction, int] = {}
    for r in chosen:
        s = r.s
        a_lab = MajorArc(1, 1) if s == 0 else min(arcs_containing(s, L, P.K, P.V), key=lambda m: (m.q, m.a))
        for t, arc in zip(r.P_s, r.arcs):
            x = a_lab.fraction + arc.fraction
            x -= math.floor(x)
            candidates.setdefault(x, (s + t) % L)
    kept: list[int] = []
    used: set[MajorArc] = set()
    for x in sorted(candidates):
        t_new = candidates[x]
        labs = set(arcs_containing(t_new, L, K_new, V_new))
        if labs & used or t_new in kept:
            continue
        kept.append(t_new)
        used |= labs
    P_new = FrequencySet(tuple(kept), U_new, V_new, K_new)

    checks = check_frequency_set(inst, P_new)
    cr_inst = CRInstance(L, Fraction(P.K), P.V, eta_inv, V_t, tuple(r.s for r in chosen), {r.s: r.P_s for r in chosen})
    cr = lemma_cr_check(cr_inst)
    # D sigma^2 / W~^2 against the largest mass on M_r(1/eta), r <= V~
    sig = float(inst.sigma)
    power = inst.Bhat.power
    d_mass = 0.0
    for q in range(1, V_t + 1):
        members = set()
        for a in range(1, q + 1):
            if math.gcd(a, q) == 1:
                members.update(arc_members(a, q, L, eta_inv).tolist())
        members.discard(0)
        d_mass = max(d_mass, float(sum(power[t] for t in members)))
    d_bound_holds = cr.D * sig * sig / (W_t * W_t) <= d_mass + 1e-15
    gain_ratio = (len(kept) / U_new**2) / (len(P.P) / P.U**2)
    return BlowUpReport(
        P_new,
        tuple(results),
        tuple(failed),
        (U_t, W_t, V_t),
        tuple(r.s for r in chosen),
        len(candidates),
        cr,
        d_mass,
        d_bound_holds,
        gain_ratio,
        checks["membership"],
        checks["disjoint"],
    )


def structured_instance() -> SpectralInstance:
    """``h = x**2``, ``L = 3600`` and ``B = 36 * G`` for the greedy square-difference-free ``G`` of ``[1, 50]``.

    ``B`` sits in ``[1, L/2]``; its spectrum lives on multiples of ``L/36`` and
    so on arcs with denominators dividing 36.
    """
    from .setlab import greedy_difference_free

    sq = QuadraticPoly(1, 0, 0)
    G = greedy_difference_free(sq, 50)
    return SpectralInstance(IntegerSet(3600, tuple(36 * g for g in G)), sq)


def structured_params(inst: SpectralInstance) -> IterationParams:
    """``c0 = 3 / (4 sigma)``, so ``1/eta = 4`` at ``U = 3``."""
    return IterationParams(c0=Fraction(3, 4) / inst.sigma)


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
