"""Polynomial images, difference-free sets and the density bounds they are measured against."""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from .polycore import QuadraticPoly


@dataclass(frozen=True)
class IntegerSet:
    """Sorted distinct elements of ``[1, N]``."""

    N: int
    elements: tuple[int, ...]

    def __post_init__(self):
        els = tuple(sorted({int(x) for x in self.elements}))
        if els and (els[0] < 1 or els[-1] > self.N):
            raise ValueError(f"elements must lie in [1, {self.N}]")
        object.__setattr__(self, "elements", els)

    @classmethod
    def of(cls, N: int, elements: Iterable[int]) -> "IntegerSet":
        return cls(N, tuple(elements))

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, x) -> bool:
        i = bisect_right(self.elements, x)
        return i > 0 and self.elements[i - 1] == x

    @property
    def density(self) -> float:
        return len(self.elements) / self.N

    def reflect(self) -> "IntegerSet":
        return IntegerSet(self.N, tuple(self.N + 1 - a for a in self.elements))

    def count_upto(self, x: int) -> int:
        return bisect_right(self.elements, x)


@dataclass(frozen=True)
class PolynomialImage:
    """Positive values of ``f`` on the positive integers, up to ``N``."""

    f: QuadraticPoly
    N: int
    values: tuple[int, ...]
    witnesses: dict[int, int] = field(compare=False, repr=False)

    def __contains__(self, v) -> bool:
        return v in self.witnesses

    def mask(self) -> int:
        """Bitmask with bit ``v`` set for every value ``v``."""
        m = 0
        for v in self.values:
            m |= 1 << v
        return m


def image_up_to(f: QuadraticPoly, N: int) -> PolynomialImage:
    if f.a2 <= 0:
        raise ValueError("f needs a positive leading coefficient")
    witnesses: dict[int, int] = {}
    vertex = -f.a1 / (2 * f.a2)
    n = 1
    while True:
        v = f(n)
        if v > N and n > vertex:
            break
        if 0 < v <= N and v not in witnesses:
            witnesses[v] = n
        n += 1
    return PolynomialImage(f, N, tuple(sorted(witnesses)), witnesses)


@dataclass(frozen=True)
class Violation:
    """``a - a_prime = f(n)`` with ``a, a_prime`` in the set."""

    a: int
    a_prime: int
    n: int


def is_difference_free(A: IntegerSet, f: QuadraticPoly) -> bool | Violation:
    """``True``, or the first violation in order of increasing ``a`` then ``a'``.

    For each ``a`` the differences ``a - a'`` (``a'`` increasing) are merged
    against the descending image by two pointers.
    """
    els = A.elements
    if len(els) < 2:
        return True
    span = els[-1] - els[0]
    img = image_up_to(f, span)
    vals = img.values
    for i, a in enumerate(els):
        k = len(vals) - 1
        for ap in els[:i]:
            d = a - ap
            while k >= 0 and vals[k] > d:
                k -= 1
            if k < 0:
                break
            if vals[k] == d:
                return Violation(a, ap, img.witnesses[d])
    return True


def greedy_difference_free(f: QuadraticPoly, N: int) -> IntegerSet:
    """Scan ``1..N`` and keep ``x`` unless ``x - a`` is a value of ``f`` for some kept ``a``."""
    img_mask = image_up_to(f, N).mask()
    forbidden = 0
    chosen = []
    for x in range(1, N + 1):
        if not (forbidden >> x) & 1:
            chosen.append(x)
            forbidden |= img_mask << x
    return IntegerSet(N, tuple(chosen))


def greedy_in_order(f: QuadraticPoly, N: int, order: Iterable[int]) -> IntegerSet:
    """Greedy construction visiting candidates in ``order`` (used for random instances)."""
    img_mask = image_up_to(f, N).mask()
    forbidden = 0
    chosen = []
    for x in order:
        if not 1 <= x <= N:
            raise ValueError(f"{x} is outside [1, {N}]")
        if (forbidden >> x) & 1:
            continue
        chosen.append(x)
        # block x + v and x - v for every image value v
        forbidden |= (img_mask << x) | (_reverse_shift(img_mask, x))
    return IntegerSet(N, tuple(chosen))


def _reverse_shift(mask: int, x: int) -> int:
    """Bitmask of ``x - v`` for ``v`` in ``mask`` with ``x - v >= 1``."""
    out = 0
    m = mask & ((1 << x) - 1)
    while m:
        low = m & -m
        out |= 1 << (x - (low.bit_length() - 1))
        m ^= low
    return out


def difference_adjacency(f: QuadraticPoly, N: int) -> list[int]:
    """Bitmask adjacency (vertex ``v`` is bit ``v - 1``) of the graph with ``|u - v|`` in ``I(f)``."""
    vals = image_up_to(f, N).values
    adj = [0] * N
    for v in range(1, N + 1):
        m = 0
        for d in vals:
            if v - d >= 1:
                m |= 1 << (v - d - 1)
            if v + d <= N:
                m |= 1 << (v + d - 1)
        adj[v - 1] = m
    return adj


@dataclass(frozen=True)
class ExtremalResult:
    size: int
    witness: IntegerSet
    exact: bool
    nodes: int


def extremal_difference_free(
    f: QuadraticPoly, N: int, budget: int = 2_000_000, exact_cap: int = 64
) -> ExtremalResult:
    """Maximum difference-free subset of ``[1, N]`` by branch and bound.

    Vertices are visited by descending degree, ties by ascending value. The
    bound at each node is a greedy clique cover of the remaining candidates;
    the incumbent starts from the greedy set. When ``budget`` nodes are used
    up the incumbent is returned with ``exact = False``.
    """
    if N < 1:
        return ExtremalResult(0, IntegerSet(max(N, 0), ()), True, 0)
    adj = difference_adjacency(f, N)
    order = sorted(range(N), key=lambda v: (-bin(adj[v]).count("1"), v))
    rank = {v: i for i, v in enumerate(order)}

    greedy = greedy_difference_free(f, N)
    best_size = len(greedy)
    best_mask = sum(1 << (x - 1) for x in greedy)
    nodes = 0
    exhausted = False

    def ordered(mask: int) -> list[int]:
        out = []
        while mask:
            low = mask & -mask
            out.append(low.bit_length() - 1)
            mask ^= low
        out.sort(key=rank.__getitem__)
        return out

    def cover_bound(mask: int) -> int:
        cliques = 0
        while mask:
            verts = ordered(mask)
            v = verts[0]
            clique_common = adj[v] & mask
            mask &= ~(1 << v)
            for u in verts[1:]:
                if (clique_common >> u) & 1:
                    mask &= ~(1 << u)
                    clique_common &= adj[u]
            cliques += 1
        return cliques

    def search(cand: int, chosen: int, size: int) -> None:
        nonlocal best_size, best_mask, nodes, exhausted
        if exhausted:
            return
        nodes += 1
        if nodes > budget:
            exhausted = True
            return
        if cand == 0:
            if size > best_size:
                best_size, best_mask = size, chosen
            return
        if size + cover_bound(cand) <= best_size:
            return
        v = ordered(cand)[0]
        search(cand & ~adj[v] & ~(1 << v), chosen | (1 << v), size + 1)
        search(cand & ~(1 << v), chosen, size)

    search((1 << N) - 1, 0, 0)
    witness = IntegerSet(N, tuple(i + 1 for i in range(N) if (best_mask >> i) & 1))
    return ExtremalResult(best_size, witness, (not exhausted) and N <= exact_cap, nodes)


def extremal_enumerate(f: QuadraticPoly, N: int) -> int:
    """Largest difference-free subset by checking all ``2**N`` subsets."""
    if N > 24:
        raise ValueError("enumeration limited to N <= 24")
    masks = np.arange(1 << N, dtype=np.int64)
    ok = np.ones(masks.size, dtype=bool)
    for d in image_up_to(f, N).values:
        for u in range(1, N - d + 1):
            v = u + d
            ok &= ~(((masks >> (u - 1)) & 1).astype(bool) & ((masks >> (v - 1)) & 1).astype(bool))
    counts = np.zeros(masks.size, dtype=np.int64)
    m = masks.copy()
    while m.any():
        counts += m & 1
        m >>= 1
    return int(counts[ok].max())


class Vacuous:
    """Marker for a bound that says nothing at this ``N``."""

    def __init__(self, reason: str):
        self.reason = reason

    def __repr__(self) -> str:
        return f"Vacuous({self.reason!r})"

    def __str__(self) -> str:
        return "vacuous"


Which = Literal["ThmA", "ThmB", "ThmC", "Thm1.1"]


def _nested_logs(N: float, depth: int) -> list[float] | None:
    out = []
    x = float(N)
    for _ in range(depth):
        if x <= 0:
            return None
        x = math.log(x)
        out.append(x)
    return out


def bound_evaluator(which: Which, N: float, **params) -> float | Vacuous:
    """Right-hand side of the density bounds with implied constant 1.

    ``ThmA``: ``((log log N)**2 / log N) ** (1/3)``.
    ``ThmB``: ``(log N) ** (-c log log log log N)``, ``c`` default 1/12.
    ``ThmC``: ``((log log N)**mu / log N) ** (1/(k-1))``, ``mu = 3`` if ``k = 2`` else 2.
    ``Thm1.1``: ``(log N) ** (-rho log log log log N)``, ``rho`` default
    ``(1 - 11 epsilon) / log 3`` with ``epsilon`` default 0.01.
    """
    if N < 3:
        return Vacuous("N < 3")
    if which == "ThmA":
        logs = _nested_logs(N, 2)
        if logs is None or min(logs) <= 0:
            return Vacuous("log log N <= 0")
        value = (logs[1] ** 2 / logs[0]) ** (1 / 3)
    elif which == "ThmC":
        k = int(params.get("k", 2))
        mu = 3 if k == 2 else 2
        logs = _nested_logs(N, 2)
        if logs is None or min(logs) <= 0:
            return Vacuous("log log N <= 0")
        value = (logs[1] ** mu / logs[0]) ** (1 / (k - 1))
    elif which in ("ThmB", "Thm1.1"):
        if which == "ThmB":
            c = float(params.get("c", 1 / 12))
        else:
            eps = float(params.get("epsilon", 0.01))
            c = float(params.get("rho", (1 - 11 * eps) / math.log(3)))
        logs = _nested_logs(N, 4)
        if logs is None or min(logs) <= 0:
            return Vacuous("an inner logarithm is nonpositive")
        value = logs[0] ** (-c * logs[3])
    else:
        raise ValueError(f"unknown bound {which!r}")
    if value >= 1:
        return Vacuous("bound >= 1")
    return value
