"""Acceptance criteria, each run at its stated tolerance.

Runs are cached per module so that the monotonicity audit reuses the traces
of the design runs.  One PASS/FAIL line per criterion is printed in the
terminal summary.  Run alone with ``pytest tests/test_acceptance.py``.
"""

import functools
import math
import subprocess
import sys

import numpy as np
import pytest

import report
from oracles import bracketed_real_roots, central_difference, direct_correlation, grid_argmin
from webest.correlation import correlation_array, cross_correlation
from webest.driver import SolverConfig, initial_set, run_p_schedule
from webest.entry import (
    EntryRegime,
    best_phase_continuous,
    entry_coeffs,
    entry_update,
    lowp_gammas,
    pge2_majorizer,
    real_roots_quartic,
    trig_poly_lowp,
    trig_poly_pge2,
)
from webest.metrics import islr_lower_bound_db, lp_objective, psl, sparsity, welch_psl_bound
from webest.surrogates import gamma_coeff, majorizer_coeffs_pge2, mu_coeff, smooth_g, smooth_objective
from webest.vector import gradient_f, gradient_g
from webest.waveform import TWO_PI, WaveformSet, alphabet_index, random_mpsk_init

pytestmark = pytest.mark.acceptance

SEEDS = range(20)
N = 64
ISLR_TARGETS = {2: 3.0103, 4: 10.7918, 8: 17.4819}
VECTOR_ITERS = {2: 2000, 4: 1000, 8: 500}


@functools.lru_cache(maxsize=None)
def islr_runs(method, M):
    iters = 150 if method == "entry" else VECTOR_ITERS[M]
    out = []
    for seed in SEEDS:
        cfg = SolverConfig(M=M, N=N, method=method, p_schedule=(2.0,), zeta=1e-9, max_iters=iters, seed=seed)
        out.append(run_p_schedule(cfg))
    return out


@functools.lru_cache(maxsize=None)
def discrete_runs():
    cfg = lambda s: SolverConfig(M=4, N=N, constraint=8, p_schedule=(2.0,), max_iters=300, seed=s)  # noqa: E731
    return [run_p_schedule(cfg(s)) for s in SEEDS]


@functools.lru_cache(maxsize=None)
def psl_runs():
    sched = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0)
    cfg = lambda s: SolverConfig(M=4, N=N, p_schedule=sched, zeta=1e-6, max_iters=100, seed=s)  # noqa: E731
    return [run_p_schedule(cfg(s)) for s in SEEDS]


@functools.lru_cache(maxsize=None)
def sparsity_runs():
    sched = (1.0, 0.75, 0.5, 0.25, 0.1)
    out = []
    for s in SEEDS:
        cfg = SolverConfig(M=4, N=N, p_schedule=sched, smooth_h=1, zeta=1e-6, max_iters=50, seed=s, init_alphabet=8)
        out.append((initial_set(cfg), *run_p_schedule(cfg)))
    return out


def _islr_check(criterion, method):
    parts, ok = [], True
    for M, target in ISLR_TARGETS.items():
        final = [tr[-1].rows[-1]["islr_db"] for _, tr in islr_runs(method, M)]
        mean = float(np.mean(final))
        good = abs(mean - target) <= 0.05
        ok &= good
        parts.append(f"M={M} mean {mean:.4f} dB vs {target}")
    report.record(criterion, ok, f"ISLR bound ({method}): " + "; ".join(parts))
    assert ok


def test_c01_islr_bound_entry():
    _islr_check(1, "entry")


def test_c02_islr_bound_vector():
    _islr_check(2, "vector")


def test_c03_discrete_islr():
    final = [tr[-1].rows[-1]["islr_db"] for _, tr in discrete_runs()]
    mean = float(np.mean(final))
    ok = mean <= 10.88
    for X, _ in discrete_runs():
        ok &= X.constraint.L == 8 and bool(np.all(np.abs(np.exp(1j * 8 * X.phases) - 1) < 1e-9))
    report.record(3, ok, f"L=8 discrete ISLR mean {mean:.4f} dB (limit 10.88)")
    assert ok


def test_c04_psl_schedule():
    bound = N * welch_psl_bound(4, N)
    decreased, gaps = [], []
    for X, traces in psl_runs():
        p2 = traces[0].rows[-1]["psl"]
        final = psl(X)
        decreased.append(final < p2)
        gaps.append(10 * math.log10(final / bound))
    ok = all(decreased) and float(np.mean(gaps)) <= 6.0
    report.record(
        4,
        ok,
        f"PSL dropped below the p=2 stage in {sum(decreased)}/20 seeds; mean gap to N*Welch {np.mean(gaps):.3f} dB (limit 6)",
    )
    assert ok


def _nonincreasing(v, rtol=1e-9):
    v = np.asarray(v)
    return bool(np.all(v[1:] <= v[:-1] + rtol * np.abs(v[:-1])))


def test_c05_monotonicity():
    checked, bad = 0, []
    runs = [("entry", r) for M in ISLR_TARGETS for r in islr_runs("entry", M)]
    runs += [("vector", r) for M in ISLR_TARGETS for r in islr_runs("vector", M)]
    runs += [("psl", r) for r in psl_runs()] + [("discrete", r) for r in discrete_runs()]
    for name, (_, traces) in runs:
        for tr in traces:
            checked += 1
            if not _nonincreasing(tr.column("objective")):
                bad.append(f"{name} p={tr.p}")
    for _, _, traces in sparsity_runs():
        for tr in traces:
            checked += 1
            f = tr.column("objective")
            if not _nonincreasing(tr.column("surrogate")) or f[-1] > f[0]:
                bad.append(f"sparsity p={tr.p}")
    ok = not bad
    report.record(5, ok, f"{checked} stage traces audited, {len(bad)} violations {bad[:3]}")
    assert ok


def test_c06_oracle_equivalence():
    rng = np.random.default_rng(6)
    # (a) FFT correlation vs direct summation
    worst = 0.0
    for n in (2, 3, 7, 16, 33, 64, 128):
        x = np.exp(1j * rng.uniform(-np.pi, np.pi, (2, n)))
        ref = direct_correlation(x[0], x[1])
        worst = max(worst, np.max(np.abs(cross_correlation(x[0], x[1]) - ref)) / np.max(np.abs(ref)))
    ok_a = worst <= 1e-10

    # (b) continuous entry update vs a 2e5-point phase grid of the local objective
    gap_b = 0.0
    for seed in range(12):
        p = (2.0, 3.0, 8.0, 0.5)[seed % 4]
        X = random_mpsk_init(3, 16, None, seed=seed)
        c = entry_coeffs(X, seed % 3, (5 * seed) % 16)
        if p >= 2:
            tp = trig_poly_pge2(c, pge2_majorizer(c, p))
        else:
            tp = trig_poly_lowp(c, lowp_gammas(c, p))
        phi = best_phase_continuous(tp)
        _, vmin = grid_argmin(tp.value)
        scale = max(1.0, abs(vmin))
        gap_b = max(gap_b, (tp.value(np.array([phi]))[0] - vmin) / scale)
    ok_b = gap_b <= 1e-8

    # (c) discrete entry update vs exhaustive search of the full objective
    mismatches = 0
    trials = 0
    for L in (2, 4, 8, 16, 64):
        for seed in range(4):
            p = (2.0, 1.0, 4.0, 0.5)[seed]
            X = random_mpsk_init(3, 10, L, seed=100 * L + seed)
            t, d = seed % 3, (3 * seed) % 10
            Y, _ = entry_update(X, t, d, EntryRegime(p, L))
            vals = []
            for l in range(L):
                ph = X.phases.copy()
                ph[t, d] = TWO_PI * l / L
                vals.append(lp_objective(WaveformSet(ph), p=p))
            vals = np.array(vals)
            cur = int(alphabet_index(X.phases[t, d], L))
            best = vals.min()
            tol = 1e-12 * best
            expect = cur if vals[cur] <= best + tol else int(np.flatnonzero(vals <= best + tol)[0])
            trials += 1
            mismatches += int(alphabet_index(Y.phases[t, d], L)) != expect
    ok_c = mismatches == 0

    # (d) quartic real roots vs grid bracketing
    root_fail = 0
    for _ in range(1000):
        q = rng.normal(size=5)
        got = real_roots_quartic(q)
        ref = bracketed_real_roots(q)
        if len(got) != len(ref) or np.any(np.abs(got - ref) > 1e-6 * (1 + np.abs(ref))):
            root_fail += 1
    ok_d = root_fail == 0

    ok = ok_a and ok_b and ok_c and ok_d
    report.record(
        6,
        ok,
        f"(a) FFT rel err {worst:.1e}; (b) grid gap {gap_b:.1e}; "
        f"(c) {trials - mismatches}/{trials} discrete matches; (d) {1000 - root_fail}/1000 root sets",
    )
    assert ok


def test_c07_gradients():
    worst = 0.0
    cases = 0
    for seed in range(10):
        M, n = (2, 3, 4)[seed % 3], (16, 32, 64)[seed % 3]
        w = np.random.default_rng(seed).uniform(0.3, 1.0, 2 * n - 1)
        X = random_mpsk_init(M, n, None, seed=seed)
        t = seed % M
        for p in (2.0, 3.0, 4.0, 8.0):
            g = gradient_f(X, t, w, p)
            ref = central_difference(lambda ph: lp_objective(WaveformSet(ph), w, p), X.phases, t)
            worst = max(worst, np.max(np.abs(g - ref)) / np.max(np.abs(ref)))
            cases += 1
        for h in (1, 2, 3):
            for p in (0.25, 0.75):
                g = gradient_g(X, t, w, p, 0.05, h)
                ref = central_difference(lambda ph: smooth_objective(WaveformSet(ph), w, p, h, 0.05), X.phases, t)
                worst = max(worst, np.max(np.abs(g - ref)) / np.max(np.abs(ref)))
                cases += 1
    ok = worst <= 1e-5
    report.record(7, ok, f"{cases} gradients, worst relative error vs central differences {worst:.2e}")
    assert ok


def test_c08_majorization():
    rng = np.random.default_rng(8)
    fails = []
    for p in (2.0, 2.5, 3.0, 8.0, 32.0):
        for _ in range(100):
            tau = rng.uniform(0.1, 3.0)
            r = tau * rng.uniform(0.0, 1.0)
            eta, psi, nu = majorizer_coeffs_pge2(r, tau, p)
            x = np.linspace(0.0, tau, 4001)
            gap = eta * x**2 + psi * x + nu - x**p
            scale = tau**p
            if gap.min() < -1e-9 * scale:
                fails.append(("dominate", p))
            if abs(eta * r**2 + psi * r + nu - r**p) > 1e-9 * scale:
                fails.append(("touch", p))
            if abs(2 * eta * r + psi - p * r ** (p - 1)) > 1e-8 * scale / tau:
                fails.append(("slope", p))
    for h, ps in ((1, (0.1, 0.5, 1.0)), (2, (0.25, 0.75, 2.0)), (3, (0.25, 0.75, 2.0))):
        for p in ps:
            for _ in range(100):
                r = rng.uniform(0.0, 3.0)
                g0 = gamma_coeff(h, 0.05, p, r)
                m0 = mu_coeff(h, 0.05, p, r)
                x = np.linspace(0.0, 6.0, 6001)
                if np.min(g0 * x**2 + m0 - smooth_g(h, 0.05, p, x)) < -1e-10:
                    fails.append(("dominate", h, p))
                if abs(g0 * r**2 + m0 - smooth_g(h, 0.05, p, r)) > 1e-12:
                    fails.append(("touch", h, p))
                dg = (smooth_g(h, 0.05, p, r + 1e-7) - smooth_g(h, 0.05, p, max(r - 1e-7, 0.0))) / (
                    r + 1e-7 - max(r - 1e-7, 0.0)
                )
                if abs(2 * g0 * r - dg) > 1e-5 * max(1.0, abs(dg)):
                    fails.append(("slope", h, p))
    ok = not fails
    report.record(8, ok, f"p>=2 majorizer and three smoothed families at 100 points each; {len(fails)} failures {fails[:3]}")
    assert ok


def test_c09_sparsity_trend():
    raised = 0
    finals, starts = [], []
    for X0, X, _ in sparsity_runs():
        s0, s1 = sparsity(X0), sparsity(X)
        starts.append(s0)
        finals.append(s1)
        raised += s1 > s0
    ok = raised >= 19
    report.record(
        9, ok, f"S_p raised in {raised}/20 seeds (mean {np.mean(starts):.4f} -> {np.mean(finals):.4f}; need 19)"
    )
    assert ok


def test_c10_determinism(tmp_path):
    configs = [
        ["-M", "3", "-N", "32", "--p-schedule", "2,4,8", "--max-iters", "40"],
        ["-M", "2", "-N", "24", "--alphabet", "16", "--max-iters", "40"],
        ["-M", "2", "-N", "24", "--method", "vector", "--max-iters", "60"],
        ["-M", "2", "-N", "24", "--p-schedule", "sparsity", "--max-iters", "20", "--smooth-h", "2"],
    ]
    identical = 0
    for i, args in enumerate(configs):
        outs = []
        for rep in range(2):
            out = tmp_path / f"c{i}r{rep}"
            cmd = [sys.executable, "-m", "webest.cli", "design", *args, "--seed", "11", "--out", str(out)]
            subprocess.run(cmd, check=True, capture_output=True)
            outs.append(((out / "phases.csv").read_bytes(), (out / "trace.csv").read_bytes()))
        identical += outs[0] == outs[1]
    ok = identical == len(configs)
    report.record(10, ok, f"{identical}/{len(configs)} configs gave byte-identical phases.csv and trace.csv")
    assert ok
