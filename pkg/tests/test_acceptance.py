"""Acceptance gate: twelve end-to-end criteria, one test and one printed
pass/fail line each.

Each criterion pins its tolerance and time budget explicitly.  The
criteria cover: vanishing on fixed points, functoriality, convex
linearity, the exact kernel algebra, the refinement KL estimator against
two closed-form oracles, simple-function fidelity, strict properness,
the worked coin example, sequential telescoping, the scaled family, and
byte-level CLI determinism.
"""

import functools
import math
import os
import random
import subprocess
import sys
import time
from fractions import Fraction

import pytest

from kernelflow.borel import (
    IntegratorSpec,
    agreement_check,
    bin_masses,
    discretized_kl,
    exponential_model,
    gaussian_model,
)
from kernelflow.documents import parse_morphism
from kernelflow.entropy import check_functoriality, convex_decompose, re_fin, scaled_functor
from kernelflow.finite import (
    FiniteDistribution,
    FiniteSpace,
    StochasticKernel,
    dirac,
    disintegrate,
    flatten,
    kernel_apply,
    kleisli_compose,
    pushforward,
)
from kernelflow.pairs import disintegration_pair, validate_coherent
from kernelflow.scoring import kl_score, properness_audit, sequential_scores, total_variation

from helpers import (
    direct_kl,
    rand_coherent_pair,
    rand_composable_pairs,
    rand_distribution,
    rand_map,
    rand_masses,
    rand_space,
)

INF = math.inf


def report(capsys, number: int, label: str, ok: bool, detail: str = ""):
    suffix = f" ({detail})" if detail else ""
    with capsys.disabled():
        print(f"[criterion {number:2d}] {label}: {'PASS' if ok else 'FAIL'}{suffix}")
    assert ok, f"criterion {number} failed: {label}{suffix}"


# ---------------------------------------------------------------------------
# Shared fixtures for the estimator criteria (5 and 7 reuse one ladder run)

GAUSS_TRUNC = (-12.0, 13.0)
QUAD = IntegratorSpec(kind="quad", tol=1e-9)
_LADDER_SECONDS = {}


@functools.cache
def gaussian_ladder():
    """Levels 1..14 of the N(0,1) || N(1,1) refinement run, timed once."""
    model = gaussian_model(0, 1, 1, 1, truncation=GAUSS_TRUNC)
    start = time.perf_counter()
    levels = []
    for n in range(1, 15):
        level = bin_masses(model, n, QUAD)
        levels.append((n, discretized_kl(level), level))
    _LADDER_SECONDS["gaussian"] = time.perf_counter() - start
    return model, levels


# ---------------------------------------------------------------------------


def test_criterion_01_fixed_points_vanish(capsys):
    rng = random.Random(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        xs = rand_space(rng, 8, "x")
        ys = rand_space(rng, min(4, len(xs)), "y")
        f = rand_map(rng, xs, ys, onto=True)
        p = rand_distribution(xs, rng, max_den=64)
        pair = disintegration_pair(p, f, ys)
        worst = max(worst, re_fin(pair).value)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 2.0
    report(capsys, 1, "disintegration hypotheses give RE <= 1e-12 (200 instances)",
           ok, f"worst {worst:.3g}, {elapsed:.2f}s")


def test_criterion_02_functoriality(capsys):
    rng = random.Random(202)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        first, second = rand_composable_pairs(rng, absolutely=True)
        check = check_functoriality(first, second)
        worst = max(worst, abs(check.residual))
    infinite_ok = True
    for i in range(50):
        if i % 2 == 0:
            first, second = rand_composable_pairs(rng, absolutely=False,
                                                  second_absolutely=True)
        else:
            first, second = rand_composable_pairs(rng, absolutely=True,
                                                  second_absolutely=False)
        check = check_functoriality(first, second)
        infinite_ok = infinite_ok and check.infinite_agreement is True
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and infinite_ok and elapsed < 5.0
    report(capsys, 2, "RE(second . first) = RE(first) + RE(second)",
           ok, f"worst residual {worst:.3g}, inf-agreement {infinite_ok}, {elapsed:.2f}s")


def test_criterion_03_convex_linearity(capsys):
    rng = random.Random(303)
    worst = 0.0
    agree = True
    for i in range(500):
        absolutely = False if i % 5 == 4 else None
        pair = rand_coherent_pair(rng, absolutely=absolutely)
        total = convex_decompose(pair).total
        direct = re_fin(pair).value
        if total == INF or direct == INF:
            agree = agree and total == direct
        else:
            worst = max(worst, abs(total - direct))
    ok = worst <= 1e-12 and agree
    report(capsys, 3, "decomposed total matches RE (500 pairs incl. infinite)",
           ok, f"worst gap {worst:.3g}, inf-agreement {agree}")


def test_criterion_04_exact_algebra(capsys):
    rng = random.Random(404)
    start = time.perf_counter()
    ok = True
    for _ in range(1000):
        xs = rand_space(rng, 5, "x")
        p = rand_distribution(xs, rng)

        # monad unit laws for flatten
        ok = ok and flatten([(p(x), dirac(x, xs)) for x in xs]) == p
        ok = ok and flatten([(Fraction(1), p)]) == p

        # Kleisli associativity on three random kernels W -> Z -> Y -> X
        ys, zs, ws = (rand_space(rng, 4, pre) for pre in ("y", "z", "w"))
        s = StochasticKernel(ys, xs, {y: rand_distribution(xs, rng) for y in ys})
        t = StochasticKernel(zs, ys, {z: rand_distribution(ys, rng) for z in zs})
        u = StochasticKernel(ws, zs, {w: rand_distribution(zs, rng) for w in ws})
        ok = ok and kleisli_compose(kleisli_compose(s, t), u) == kleisli_compose(
            s, kleisli_compose(t, u)
        )

        # coherence is closed under composition
        first, second = rand_composable_pairs(rng)
        composite_f = {x: second.f[first.f[x]] for x in first.p.space}
        composite_s = kleisli_compose(first.s, second.s)
        ok = ok and validate_coherent(
            composite_f, composite_s, first.p, second.q
        ).is_coherent

        # disintegration round-trip reconstructs p exactly
        target = rand_space(rng, min(4, len(xs)), "y2")
        f = rand_map(rng, xs, target, onto=True)
        dis = disintegrate(p, f, target)
        ok = ok and kernel_apply(dis.kernel, pushforward(p, f, target)) == p
        if not ok:
            break
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 5.0
    report(capsys, 4, "monad laws, Kleisli associativity, closure, round-trip exact",
           ok, f"1000 instances, {elapsed:.2f}s")


def test_criterion_05_gaussian_oracle(capsys):
    _, levels = gaussian_ladder()
    elapsed = _LADDER_SECONDS["gaussian"]
    truth = 0.5  # closed-form KL(N(0,1) || N(1,1))
    monotone = all(
        levels[i + 1][1] >= levels[i][1] - 2 * (levels[i][2].err_est + levels[i + 1][2].err_est)
        for i in range(len(levels) - 1)
    )
    bounded = all(kl <= truth + 1e-6 for _, kl, _ in levels)
    final_gap = abs(levels[-1][1] - truth)
    ok = monotone and bounded and final_gap <= 1e-3 and elapsed < 30.0
    report(capsys, 5, "Gaussian ladder monotone, bounded by 0.5, final within 1e-3",
           ok, f"final gap {final_gap:.2e}, {elapsed:.1f}s")


def test_criterion_06_exponential_oracle(capsys):
    model = exponential_model(1, 2, truncation=(0.0, 40.0))
    truth = 1 - math.log(2)
    start = time.perf_counter()
    final = None
    for n in range(1, 15):
        final = discretized_kl(bin_masses(model, n, QUAD))
    elapsed = time.perf_counter() - start
    gap = abs(final - truth)
    ok = gap <= 1e-3 and elapsed < 30.0
    report(capsys, 6, "exponential ladder final within 1e-3 of 1 - ln 2",
           ok, f"final {final:.10f}, gap {gap:.2e}, {elapsed:.1f}s")


def test_criterion_07_simple_function_fidelity(capsys):
    model, levels = gaussian_ladder()
    worst = max(agreement_check(model, level) for _, _, level in levels)
    ok = worst <= 1e-6
    report(capsys, 7, "simple functions reproduce bin masses at every level",
           ok, f"worst deviation {worst:.2e}")


def test_criterion_08_properness(capsys):
    violations = []
    for size in range(2, 7):
        space = FiniteSpace(tuple(f"o{i}" for i in range(size)))
        audit = properness_audit(space, trials=200, seed=800 + size)
        violations.extend(audit.violations)

    # exhaustive 2-point grid at resolution 1/64
    two = FiniteSpace(("a", "b"))
    grid = [
        FiniteDistribution(two, {"a": Fraction(k, 64), "b": Fraction(64 - k, 64)})
        for k in range(65)
    ]
    grid_ok = True
    for p in grid:
        if kl_score(p, p) != 0.0:
            grid_ok = False
        for q in grid:
            cross = kl_score(p, q)
            if cross < 0 or (total_variation(p, q) > 0 and not cross > 0):
                grid_ok = False
    ok = not violations and grid_ok
    report(capsys, 8, "log score strictly proper (1000 trials + exhaustive grid)",
           ok, f"{len(violations)} violations, grid {'ok' if grid_ok else 'bad'}")


COIN_DOC = """\
morphism v1
space pairs HH HT TH TT
space toss H T
map HH H
map HT H
map TH T
map TT T
p HH 1/4
p HT 1/4
p TH 1/4
p TT 1/4
s H HH 2/3
s H HT 1/3
s T TH 1/3
s T TT 2/3
"""


def test_criterion_09_coin_example(capsys):
    pair = parse_morphism(COIN_DOC).to_pair()
    forecasts_ok = (
        pair.s("H")("HH") == Fraction(2, 3)
        and pair.s("H")("HT") == Fraction(1, 3)
        and pair.s("T")("TT") == Fraction(2, 3)
        and pair.s("T")("TH") == Fraction(1, 3)
    )
    # direct expression p(H) S(p_H, s_H) + p(T) S(p_T, s_T) with an
    # independent float KL over the fiber conditionals
    p_h = {"HH": 0.5, "HT": 0.5}
    p_t = {"TH": 0.5, "TT": 0.5}
    s_h = {"HH": 2 / 3, "HT": 1 / 3}
    s_t = {"TH": 1 / 3, "TT": 2 / 3}
    direct = 0.5 * direct_kl(p_h, s_h) + 0.5 * direct_kl(p_t, s_t)
    total = convex_decompose(pair).total
    gap = abs(total - direct)
    ok = forecasts_ok and gap <= 1e-12
    report(capsys, 9, "coin example: forecasts (2/3, 1/3), total matches direct sum",
           ok, f"total {total:.10f}, gap {gap:.3g}")


def test_criterion_10_sequential_telescoping(capsys):
    rng = random.Random(1010)
    worst = 0.0
    space = FiniteSpace(("a", "b", "c"))
    for _ in range(100):
        truth = rand_distribution(space, rng)
        forecasts = [
            FiniteDistribution(space, dict(zip(space, rand_masses(rng, 3, full=True))))
            for _ in range(10)
        ]
        deltas = sequential_scores(truth, forecasts)
        telescoped = math.fsum(deltas[1:])
        direct = kl_score(truth, forecasts[0]) - kl_score(truth, forecasts[-1])
        worst = max(worst, abs(telescoped - direct))
    ok = worst <= 1e-12
    report(capsys, 10, "increments telescope to first minus last score",
           ok, f"worst gap {worst:.3g}")


def test_criterion_11_scaled_family(capsys):
    c = 2.0
    # criterion 1 suite, doubled
    rng = random.Random(101)
    worst1 = 0.0
    for _ in range(200):
        xs = rand_space(rng, 8, "x")
        ys = rand_space(rng, min(4, len(xs)), "y")
        f = rand_map(rng, xs, ys, onto=True)
        p = rand_distribution(xs, rng, max_den=64)
        worst1 = max(worst1, scaled_functor(c, disintegration_pair(p, f, ys)))
    # criterion 2 suite, doubled
    rng = random.Random(202)
    worst2 = 0.0
    for _ in range(500):
        first, second = rand_composable_pairs(rng, absolutely=True)
        check = check_functoriality(first, second)
        worst2 = max(worst2, abs(c * check.composite - c * check.first - c * check.second))
    # criterion 3 suite, doubled
    rng = random.Random(303)
    worst3 = 0.0
    agree = True
    for i in range(500):
        absolutely = False if i % 5 == 4 else None
        pair = rand_coherent_pair(rng, absolutely=absolutely)
        scaled = scaled_functor(c, pair)
        total = convex_decompose(pair).total
        if scaled == INF or total == INF:
            agree = agree and scaled == INF and total == INF
        else:
            worst3 = max(worst3, abs(c * total - scaled))
    ok = worst1 <= c * 1e-12 and worst2 < c * 1e-10 and worst3 <= c * 1e-12 and agree
    report(capsys, 11, "2x-scaled functor passes the vanishing/functoriality/linearity suites",
           ok, f"worst {worst1:.2g}/{worst2:.2g}/{worst3:.2g}")


def _cli(args, threads=None):
    env = dict(os.environ)
    if threads is not None:
        env["KERNELFLOW_THREADS"] = str(threads)
    else:
        env.pop("KERNELFLOW_THREADS", None)
    proc = subprocess.run(
        [sys.executable, "-m", "kernelflow.cli", *args],
        capture_output=True,
        env=env,
    )
    return proc.returncode, proc.stdout, proc.stderr


def test_criterion_12_cli_determinism(capsys, tmp_path):
    log = tmp_path / "log.txt"
    log.write_text(
        "forecast-log v1\noutcomes H T\n"
        "forecast 1 alice H 2/3 1/3\nforecast 2 alice T 1/2 1/2\n"
    )
    invocations = [
        ["estimate-kl", "gaussian", "0", "1", "1", "1",
         "--nmax", "4", "--tol", "1e-3", "--truncate", "-12", "13"],
        ["estimate-kl", "exponential", "1", "2", "--nmax", "4", "--tol", "1e-2",
         "--integrator", "mc", "--seed", "7", "--truncate", "0", "40"],
        ["score", str(log), "--mode", "empirical"],
    ]
    ok = True
    for argv in invocations:
        ok = ok and _cli(argv) == _cli(argv)
    # estimator output must not depend on the thread cap
    quad = invocations[0]
    ok = ok and _cli(quad, threads=1) == _cli(quad, threads=4)
    report(capsys, 12, "repeated CLI runs byte-identical, thread cap output-invariant", ok)
