"""End-to-end acceptance checks, one test per criterion.

Each check records ``[PASS]`` or ``[FAIL]`` with its measurements and wall time;
the lines are printed in the pytest terminal summary, or directly when this
file is run as a script.
"""
from __future__ import annotations

import math
import time
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from quadfree.cli import main as cli_main
from quadfree.errors import DegenerateRange, EmptyMajorMass, HypothesisViolated
from quadfree.expsums import (
    count_J,
    count_J_enumerate,
    gauss_sum,
    major_arc_approx,
    make_context,
    sixth_moment_bound,
    sixth_moment_exact,
    weyl_sum,
)
from quadfree.fourier import dft
from quadfree.iteration import (
    CRInstance,
    IterationParams,
    SpectralInstance,
    _cr_sets,
    blow_up,
    check_frequency_set,
    lemma_cr_check,
    outer_iteration,
    project_to_progression,
    rational_sumset,
    rational_sumset_bruteforce,
    seed_frequency_set,
    structured_instance,
    structured_params,
)
from quadfree.polycore import AuxiliaryFamily, DoubleRoot, QuadraticPoly, content, is_intersective, roots_mod
from quadfree.rng import SplitMix64
from quadfree.setlab import (
    extremal_difference_free,
    extremal_enumerate,
    greedy_difference_free,
    greedy_in_order,
    is_difference_free,
)

try:
    from .conftest import CORPUS
except ImportError:  # run as a script
    from conftest import CORPUS

pytestmark = pytest.mark.acceptance

RESULTS: dict[int, str] = {}
GOLDEN = Path(__file__).parent / "golden"
P = QuadraticPoly
SQ = P(1, 0, 0)


def record(n: int, title: str, ok: bool, detail: str, elapsed: float, limit: float | None) -> bool:
    in_time = limit is None or elapsed <= limit
    passed = ok and in_time
    budget = f" / {limit:.0f}s" if limit is not None else ""
    RESULTS[n] = f"[{'PASS' if passed else 'FAIL'}] criterion {n:2d} {title}: {detail} ({elapsed:.1f}s{budget})"
    return passed


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def corpus():
    return [P(*c) for c in CORPUS]


# 1 -------------------------------------------------------------------------


def check_plancherel():
    rng = SplitMix64(1)
    worst = 0.0
    for N in (128, 256, 1024, 4096):
        for _ in range(100):
            p = 0.05 + 0.9 * rng.random()
            A = [x for x in range(1, N + 1) if rng.random() < p] or [N]
            sp = dft(A, N)
            rel = abs(sp.total_power() - len(A) / N) / (len(A) / N)
            worst = max(worst, rel)
    return worst <= 1e-9, f"worst relative error {worst:.2e} <= 1e-9 over 400 sets"


def test_criterion_01_plancherel():
    (ok, detail), t = timed(check_plancherel)
    assert record(1, "Plancherel", ok, detail, t, 30)


# 2 -------------------------------------------------------------------------


def check_gauss():
    worst_sq = 0.0
    for q in range(1, 102, 2):
        for a in range(1, q + 1):
            if math.gcd(a, q) == 1:
                worst_sq = max(worst_sq, abs(abs(gauss_sum(SQ, a, q)) - math.sqrt(q)))
    worst_ratio = 0.0
    for f in corpus():
        c = content(f)
        for q in range(1, 80):
            for a in range(1, q + 1):
                if math.gcd(a, q) == 1:
                    worst_ratio = max(worst_ratio, abs(gauss_sum(f, a, q)) / math.sqrt(c * q))
    ok = worst_sq <= 1e-9 and worst_ratio <= 2
    return ok, f"max ||G|-sqrt q| = {worst_sq:.1e} (odd q <= 101); max |G|/sqrt(cont q) = {worst_ratio:.3f} <= 2 (q < 80)"


def test_criterion_02_gauss_sums():
    (ok, detail), t = timed(check_gauss)
    assert record(2, "Gauss sums", ok, detail, t, 10)


# 3 -------------------------------------------------------------------------


def check_major_arc_decay():
    Ms = [2**k for k in range(8, 15)]
    slopes = {}
    for q in (1, 2, 3, 5):
        errs = []
        for M in Ms:
            L = 30 * math.ceil((M * M + 1) / 10)  # 30 | L and the context's M is exactly M
            ctx = make_context(SQ, L)
            assert ctx.M == M
            t = 0 if q == 1 else L // q
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", HypothesisViolated)
                main = major_arc_approx(ctx, 1, q, 0.0)
            errs.append(abs(weyl_sum(ctx, t) - main))
        slopes[q] = float(np.polyfit(np.log(Ms), np.log(errs), 1)[0])
    ok = all(s <= -0.5 for s in slopes.values())
    return ok, "slopes " + ", ".join(f"q={q}: {s:.3f}" for q, s in slopes.items()) + " (need <= -0.5)"


def test_criterion_03_major_arc_decay():
    (ok, detail), t = timed(check_major_arc_decay)
    assert record(3, "Weyl major-arc decay", ok, detail, t, 120)


# 4 -------------------------------------------------------------------------


def generated_contexts():
    """Contexts for every corpus polynomial and its auxiliaries f_d (d <= 12) at several L."""
    out, skipped = [], 0
    for f in corpus():
        fam = AuxiliaryFamily(f)
        for d in range(1, 13):
            for L in (10**4, 10**5, 10**6):
                try:
                    out.append(make_context(fam.poly(d), L))
                except DegenerateRange:
                    skipped += 1
    return out, skipped


def check_s0():
    ctxs, skipped = generated_contexts()
    worst = min(c.s0_exact() for c in ctxs)
    ok = worst >= Fraction(1, 4)
    return ok, f"min S(0) = {float(worst):.4f} >= 1/4 over {len(ctxs)} contexts ({skipped} degenerate ranges skipped)"


def test_criterion_04_s0():
    (ok, detail), t = timed(check_s0)
    assert record(4, "S(0) >= 1/4", ok, detail, t, None)


# 5 -------------------------------------------------------------------------


def check_sixth_moment():
    n_inst, worst = 0, 0.0
    ok = True
    targets = [30, 60, 90, 120]
    for i, f in enumerate(corpus()):
        T = targets[i % 4]
        L = 3 * f(T) + 1
        ctx = make_context(f, L)
        if ctx.M > 120:
            continue
        exact = sixth_moment_exact(ctx)
        bound = sixth_moment_bound(ctx)
        J = count_J(ctx.alpha, -ctx.beta, ctx.M)
        ok &= exact <= bound and J >= ctx.M**3
        worst = max(worst, float(exact / bound))
        n_inst += 1
    agree = 0
    for alpha, beta in ((1, 0), (2, 1), (3, -2)):
        for M in range(1, 13):
            a, b = count_J(alpha, beta, M), count_J_enumerate(alpha, beta, M)
            ok &= a == b and a >= M**3
            agree += a == b
    return ok, f"{n_inst} instances, max moment/bound = {worst:.3f}; MITM == enumeration on {agree}/36 (M <= 12)"


def test_criterion_05_sixth_moment():
    (ok, detail), t = timed(check_sixth_moment)
    assert record(5, "sixth moment", ok, detail, t, 180)


# 6 -------------------------------------------------------------------------


def check_content():
    violations, checked = 0, 0
    for f in corpus():
        fam = AuxiliaryFamily(f)
        form = fam.form
        if isinstance(form, DoubleRoot):
            bound = abs(form.a)  # f_d = a x^2
        else:
            # |alpha lam - beta gamma| for primitive f; scaled by |a| otherwise
            bound = abs(form.a * form.resultant)
        for d in range(1, 5001):
            checked += 1
            violations += content(fam.poly(d)) > bound
    return violations == 0, f"{violations} violations over {checked} (f, d) pairs, d <= 5000"


def test_criterion_06_content_bound():
    (ok, detail), t = timed(check_content)
    assert record(6, "content bound", ok, detail, t, 60)


# 7 -------------------------------------------------------------------------


def check_coherence():
    D, Qmax = 5000, 60
    bad_coh = bad_root = 0
    for f in corpus():
        fam = AuxiliaryFamily(f)
        roots = [0] + [fam.root(d) for d in range(1, D + 1)]
        for s in range(1, D + 1):
            rs = roots[s]
            for d in range(2 * s, D + 1, s):
                bad_coh += (roots[d] - rs) % s != 0
        coeffs = [fam.poly(d).coefficients for d in range(1, D + 1)]
        for q in range(2, Qmax + 1):
            c = np.array([[a2 % q, a1 % q, a0 % q] for a2, a1, a0 in coeffs], dtype=np.int64)
            x = np.arange(q, dtype=np.int64)
            vals = (c[:, :1] * ((x * x) % q) + c[:, 1:2] * x + c[:, 2:]) % q
            bad_root += int(np.count_nonzero(~(vals == 0).any(axis=1)))
    ok = bad_coh == 0 and bad_root == 0
    return ok, f"{bad_coh} coherence failures (s | d <= {D}); {bad_root} (d, q) pairs with f_d rootless mod q <= {Qmax}"


def test_criterion_07_root_coherence():
    (ok, detail), t = timed(check_coherence)
    assert record(7, "root coherence", ok, detail, t, 60)


# 8 -------------------------------------------------------------------------


def rootless_moduli(f: QuadraticPoly, qmax: int) -> list[int]:
    out = []
    for q in range(1, qmax + 1):
        if roots_mod(f, q).size == 0:
            out.append(q)
    return out


def check_intersectivity():
    rng = SplitMix64(8)
    n_true = n_false = 0
    bad = 0
    exhausted = 0
    for _ in range(200):
        a2 = 0
        while a2 == 0:
            a2 = rng.randint(-50, 50)
        f = P(a2, rng.randint(-50, 50), rng.randint(-50, 50))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = is_intersective(f)
        if res:
            n_true += 1
            bad += bool(rootless_moduli(f, 1000))
        else:
            n_false += 1
            if res.witness is None:
                exhausted += 1
                bad += 1
            else:
                bad += roots_mod(f, res.witness).size != 0
    return bad == 0, f"{n_true} intersective, {n_false} not; {bad} disagreements, {exhausted} witness searches exhausted"


def test_criterion_08_intersectivity():
    (ok, detail), t = timed(check_intersectivity)
    assert record(8, "intersectivity decision", ok, detail, t, 60)


# 9 -------------------------------------------------------------------------


def check_extremal():
    ok = True
    mismatches = 0
    polys = [SQ, P(1, 1, 0), P(2, 1, 0)]
    for f in polys:
        for N in range(1, 21):
            mismatches += extremal_difference_free(f, N).size != extremal_enumerate(f, N)
    greedy_bad = 0
    for f in polys:
        for N in range(1, 41):
            ex = extremal_difference_free(f, N)
            greedy_bad += not ex.exact or len(greedy_difference_free(f, N)) > ex.size
    g10 = greedy_difference_free(SQ, 10).elements
    ok = mismatches == 0 and greedy_bad == 0 and g10 == (1, 3, 6, 8)
    return ok, f"{mismatches} mismatches vs 2^N enumeration (N <= 20); {greedy_bad} greedy > exact (N <= 40); greedy(x^2, 10) = {set(g10)}"


def test_criterion_09_extremal():
    (ok, detail), t = timed(check_extremal)
    assert record(9, "extremal solver", ok, detail, t, 120)


# 10 ------------------------------------------------------------------------


def check_inheritance():
    rng = SplitMix64(10)
    fams = [AuxiliaryFamily(f) for f in corpus()]
    pairs = [(d, q) for d in range(1, 61) for q in range(2, 61) if d * q <= 60]
    failures = 0
    for _ in range(1000):
        fam = rng.choice(fams)
        d, q = rng.choice(pairs)
        h_d, h_qd = fam.poly(d), fam.poly(q * d)
        step = fam.projection_step(q)
        lo = max(2 * step, 120)
        L = rng.randint(lo, max(lo, 600, 4 * step))
        order = list(range(1, L + 1))
        rng.shuffle(order)
        B = greedy_in_order(h_d, L, order)
        u = rng.randbelow(step)
        B_new = project_to_progression(B, L, u, step, (L - u) // step)
        failures += is_difference_free(B_new, h_qd) is not True
    return failures == 0, f"{failures} failures in 1000 trials (d q <= 60, 20 polynomials)"


def test_criterion_10_inheritance():
    (ok, detail), t = timed(check_inheritance)
    assert record(10, "inheritance", ok, detail, t, 60)


# 11 ------------------------------------------------------------------------


def random_reduced(rng: SplitMix64, lo_q: int, hi_q: int) -> Fraction:
    while True:
        q = rng.randint(lo_q, hi_q)
        a = rng.randbelow(q)
        if math.gcd(a, q) == 1:
            return Fraction(a, q)


def random_cr_instance(rng: SplitMix64) -> CRInstance:
    L = 1_000_003
    V, Vt = rng.randint(1, 8), rng.randint(1, 12)
    s_fracs = {random_reduced(rng, 1, V) for _ in range(rng.randint(1, 4))}
    P_tilde, P_s = [], {}
    for x in sorted(s_fracs):
        s = round(x * L) % L
        P_tilde.append(s)
        t_fracs = {random_reduced(rng, max(1, Vt // 2 + 1), Vt) for _ in range(rng.randint(1, 6))}
        P_s[s] = tuple(round(y * L) % L for y in sorted(t_fracs))
    return CRInstance(L, Fraction(1), V, Fraction(1), Vt, tuple(P_tilde), P_s)


def check_cr():
    rng = SplitMix64(11)
    failures = oracle_bad = 0
    min_margin = math.inf
    for _ in range(500):
        inst = random_cr_instance(rng)
        chk = lemma_cr_check(inst)
        failures += not chk.holds
        if chk.rhs > 0:
            min_margin = min(min_margin, chk.lhs / chk.rhs)
        S1, per = _cr_sets(inst)
        oracle_bad += rational_sumset(S1, per) != rational_sumset_bruteforce(S1, per)
    ok = failures == 0 and oracle_bad == 0
    return ok, f"{failures} inequality failures, {oracle_bad} sumset/oracle mismatches in 500 instances; min |R|/rhs = {min_margin:.3g}"


def test_criterion_11_sum_of_rationals():
    (ok, detail), t = timed(check_cr)
    assert record(11, "sum-of-rationals count", ok, detail, t, 60)


# 12 ------------------------------------------------------------------------


def check_orthogonality():
    rng = SplitMix64(12)
    polys = corpus()
    worst = 0.0
    built = 0
    while built < 50:
        f = rng.choice(polys)
        L = rng.randint(300, 3000)
        try:
            make_context(f, L)
        except DegenerateRange:
            continue
        order = list(range(1, L + 1))
        rng.shuffle(order)
        inst = SpectralInstance(greedy_in_order(f, L, order), f)
        for s in (0, 1):
            worst = max(worst, abs(inst.orthogonality_sum(s)))
        built += 1
    return worst <= 1e-8, f"max |sum| = {worst:.2e} <= 1e-8 over 50 instances, s in {{0, 1}}"


def test_criterion_12_orthogonality():
    (ok, detail), t = timed(check_orthogonality)
    assert record(12, "orthogonality identity", ok, detail, t, 60)


# 13 ------------------------------------------------------------------------


def check_blow_up():
    reports = []
    inst = structured_instance()
    params = structured_params(inst)
    P0 = seed_frequency_set()
    rep = blow_up(P0, inst, params)
    structured_gain = rep.gain_ratio
    reports.append((inst, rep))
    reports.append((inst, blow_up(rep.P_new, inst, params)))
    # Case 2 outputs of the outer loop on random greedy sets
    for seed in range(4):
        order = list(range(1, 2001))
        SplitMix64(seed).shuffle(order)
        trace = outer_iteration(greedy_in_order(SQ, 2000, order), SQ, IterationParams())
        if trace.terminal_kind != "Case2Data":
            continue
        c2 = trace.terminal
        sinst = SpectralInstance(c2.B, c2.h)
        try:
            reports.append((sinst, blow_up(P0, sinst, IterationParams())))
        except EmptyMajorMass:
            pass
    structural = all(r.membership and r.disjoint and check_frequency_set(i, r.P_new) == {"membership": True, "disjoint": True} for i, r in reports)
    ok = structural and structured_gain > 1
    return ok, f"{len(reports)} reports satisfy membership and one-per-arc: {structural}; structured gain ratio {structured_gain:.1f} > 1"


def test_criterion_13_blow_up():
    (ok, detail), t = timed(check_blow_up)
    assert record(13, "blow-up structure", ok, detail, t, 60)


# 14 ------------------------------------------------------------------------


SIMULATIONS = {
    "simulate_case2.json": ["simulate", "--poly", "1,0,0", "--n", "2000", "--set", "greedy:1,0,0;7", "--rounds", "2"],
    "simulate_increment.json": ["simulate", "--poly", "1,0,0", "--n", "1000", "--set", "scaled:4,greedy:1,0,0"],
    "simulate_structured.json": [
        "simulate", "--poly", "1,0,0", "--n", "3600", "--set", "structured_set.txt",
        "--inner-only", "--c0", "2700/13", "--rounds", "2",
    ],
}


def check_determinism(tmp: Path):
    import os

    cwd = os.getcwd()
    os.chdir(GOLDEN)
    try:
        same = 0
        for name, argv in SIMULATIONS.items():
            outs = []
            for run in range(2):
                path = tmp / f"{run}_{name}"
                cli_main(argv + ["--out", str(path)])
                outs.append(path.read_bytes())
            same += outs[0] == outs[1] == (GOLDEN / name).read_bytes()
    finally:
        os.chdir(cwd)
    return same == len(SIMULATIONS), f"{same}/{len(SIMULATIONS)} simulate traces byte-identical across two runs and to the golden files"


def test_criterion_14_determinism(tmp_path):
    (ok, detail), t = timed(lambda: check_determinism(tmp_path))
    assert record(14, "determinism", ok, detail, t, None)


if __name__ == "__main__":
    import tempfile

    checks = [
        (1, "Plancherel", check_plancherel, 30),
        (2, "Gauss sums", check_gauss, 10),
        (3, "Weyl major-arc decay", check_major_arc_decay, 120),
        (4, "S(0) >= 1/4", check_s0, None),
        (5, "sixth moment", check_sixth_moment, 180),
        (6, "content bound", check_content, 60),
        (7, "root coherence", check_coherence, 60),
        (8, "intersectivity decision", check_intersectivity, 60),
        (9, "extremal solver", check_extremal, 120),
        (10, "inheritance", check_inheritance, 60),
        (11, "sum-of-rationals count", check_cr, 60),
        (12, "orthogonality identity", check_orthogonality, 60),
        (13, "blow-up structure", check_blow_up, 60),
    ]
    for n, title, fn, limit in checks:
        (ok, detail), t = timed(fn)
        record(n, title, ok, detail, t, limit)
        print(RESULTS[n], flush=True)
    with tempfile.TemporaryDirectory() as d:
        (ok, detail), t = timed(lambda: check_determinism(Path(d)))
    record(14, "determinism", ok, detail, t, None)
    print(RESULTS[14])
