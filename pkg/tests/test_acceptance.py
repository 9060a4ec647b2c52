"""End-to-end checks pinning the package's headline numbers.

Each test here covers one advertised guarantee, prints exactly one
[PASS]/[FAIL] line with the measured values and wall time, and then
asserts.  The lines are written straight to the terminal (bypassing
capture) so a plain pytest run shows the whole scoreboard.

Two checks need context:

* The quartic coupling 1/20 sits far outside the certified convergence
  radius (no admissible growth pair reaches past |t| = 1/2048, and the
  series itself diverges there: the order terms grow by a factor of
  96/20 = 4.8).  The order-6 partial sum is therefore printed for the
  record, and the sampler mean is instead compared against the
  equilibrium-measure moment, which is the honest finite-order target.
* At t = 1/100 the moment series does converge (the singularity is at
  -1/96) but no growth pair certifies a tail.  The series alternates
  with strictly shrinking terms over every computed order, so the first
  dropped term bounds the truncation error; that empirical bound is
  asserted alongside a fully certified instance at t = 1/8192.

The gluing kernel is compiled once up front so the timed checks measure
the computation, not numba's compiler.
"""

import random
import time
from fractions import Fraction

import numpy as np
import pytest

from mapcount.engine import MapCounter, TruncationBound, catalan, multi_indices
from mapcount.ising import (
    dressed_series_coefficients,
    ising_rooted_count,
    ising_series_coefficients,
    map_equation_series,
    verify_change_of_variables,
)
from mapcount.montecarlo import MCConfig, residual_words, sample, sd_residual
from mapcount.onematrix import solve_equilibrium
from mapcount.oracle import count_planar, count_with_adjoints, genus_census
from mapcount.potential import StarSpec
from mapcount.words import reverse_word, words_of_degree

QUARTIC = StarSpec(((0, 0, 0, 0),), 1)
CUBIC = StarSpec(((0, 0, 0),), 1)
TWO_COLOR = StarSpec(((0, 0, 0, 0), (1, 1, 1, 1), (0, 1)), 2)

SEED = 20260815


def _report(capsys, name, ok, detail, elapsed):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail} ({elapsed:.1f}s)"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


@pytest.fixture(scope="module", autouse=True)
def warm_kernel():
    count_planar((0, 0), [((0, 0), 1)])


@pytest.fixture(scope="module")
def recursion_grid():
    """Engine vs oracle over every root of degree <= 6 and every
    interaction multi-index of total order <= 3, for three star specs.
    Shared by the equivalence and growth-bound checks."""
    specs = {"quartic": QUARTIC, "cubic": CUBIC, "two-color": TWO_COLOR}
    counters = {}
    mismatches = []
    cells = 0
    t0 = time.time()
    for name, spec in specs.items():
        counter = MapCounter(spec)
        roots = [()]
        for deg in range(1, 7):
            roots.extend(words_of_degree(spec.num_colors, deg))
        for root in roots:
            for kbar in multi_indices(spec.num_terms, 3):
                engine = counter.map_count(root, kbar)
                stars = [(w, k) for w, k in zip(spec.star_words, kbar) if k]
                oracle = count_with_adjoints(root, stars)
                if engine != oracle:
                    mismatches.append((name, root, kbar, engine, oracle))
                cells += 1
        counters[name] = counter
    return {
        "specs": specs,
        "counters": counters,
        "mismatches": mismatches,
        "cells": cells,
        "elapsed": time.time() - t0,
    }


def test_quartic_pair_fixture(capsys):
    t0 = time.time()
    word = (0, 0, 0, 0)
    rooted_pair = count_planar(word, [(word, 1)])
    unrooted_pair = count_planar(None, [(word, 2)])
    engine = MapCounter(QUARTIC).map_count(word, (1,))
    elapsed = time.time() - t0
    ok = (rooted_pair == 36 and unrooted_pair == 36
          and engine == 72 == 2 * rooted_pair and elapsed < 1.0)
    _report(capsys, "quartic pair fixture", ok,
            f"oracle pair count {rooted_pair} (rooted) / {unrooted_pair} "
            f"(unrooted), engine 2^1 x count = {engine}", elapsed)


def test_catalan_baseline_and_genus_census(capsys):
    t0 = time.time()
    free = MapCounter(StarSpec((), 1))
    catalan_ok = all(
        free.map_count((0,) * (2 * k), ()) == catalan(k) for k in range(9)
    )
    cen = genus_census(None, [((0, 0, 0, 0), 1)])
    census_ok = dict(cen.by_genus) == {0: 2, 1: 1} and cen.disconnected == 0
    elapsed = time.time() - t0
    ok = catalan_ok and census_ok and elapsed < 1.0
    _report(capsys, "semicircle baseline", ok,
            f"moments(x^2k) = C_k for k <= 8: {catalan_ok}; one-star "
            f"genus census {dict(cen.by_genus)}", elapsed)


def test_recursion_matches_oracle_grid(recursion_grid, capsys):
    grid = recursion_grid
    ok = not grid["mismatches"] and grid["elapsed"] < 300.0
    sample_bad = grid["mismatches"][:3]
    _report(capsys, "recursion vs gluing oracle", ok,
            f"{grid['cells']} cells (3 specs, roots deg <= 6, orders <= 3), "
            f"mismatches {sample_bad if sample_bad else 'none'}",
            grid["elapsed"])


def test_growth_bound_on_memo_tables(recursion_grid, capsys):
    t0 = time.time()
    checked = 0
    violations = 0
    max_ratio = Fraction(0)
    for name, spec in recursion_grid["specs"].items():
        bound = TruncationBound.default(spec)
        cache = {}
        for (word, kbar), value in recursion_grid["counters"][name].table().items():
            key = (len(word), kbar)
            if key not in cache:
                cache[key] = bound.count_bound(spec, word, kbar)
            limit = cache[key]
            if abs(value) > limit:
                violations += 1
            elif value:
                max_ratio = max(max_ratio, Fraction(abs(value)) / limit)
            checked += 1
    elapsed = time.time() - t0
    ok = violations == 0 and checked > 0
    _report(capsys, "growth bound", ok,
            f"{checked} memoized counts within the default (A, B) bound, "
            f"{violations} violations, max |count|/bound = {float(max_ratio):.2e}",
            elapsed)


def test_traciality_and_parity(capsys):
    t0 = time.time()
    counter = MapCounter(TWO_COLOR)
    rng = random.Random(SEED)
    kbars = list(multi_indices(3, 2))
    trace_bad = 0
    for _ in range(100):
        total = rng.randint(2, 6)
        cut = rng.randint(1, total - 1)
        p = tuple(rng.randrange(2) for _ in range(cut))
        q = tuple(rng.randrange(2) for _ in range(total - cut))
        kbar = rng.choice(kbars)
        if counter.map_count(p + q, kbar) != counter.map_count(q + p, kbar):
            trace_bad += 1

    parity_cells = 0
    parity_bad = 0
    for root in [(0,), (1,), (0, 0, 0), (0, 1, 1), (0, 0, 0, 0, 0)]:
        for kbar in kbars:
            totals = [root.count(0) + 4 * kbar[0] + kbar[2],
                      root.count(1) + 4 * kbar[1] + kbar[2]]
            if totals[0] % 2 or totals[1] % 2:
                parity_cells += 1
                if counter.map_count(root, kbar) != 0:
                    parity_bad += 1
    elapsed = time.time() - t0
    ok = trace_bad == 0 and parity_bad == 0 and parity_cells > 0
    _report(capsys, "traciality and parity", ok,
            f"100 random word pairs traced both ways ({trace_bad} unequal); "
            f"{parity_cells} parity-violating cells all zero "
            f"({parity_bad} nonzero)", elapsed)


def test_monte_carlo_moments(capsys):
    t0 = time.time()
    t = Fraction(1, 20)
    n = 80

    series = MapCounter(QUARTIC).series_eval(
        (0, 0), [t], 6, bound=TruncationBound.default(QUARTIC))
    partial = float(series.value)
    m2 = solve_equilibrium(QUARTIC, [t]).moment(2)

    words = {(0, 0)}
    words |= set(residual_words(QUARTIC, (0,), 0))
    words |= set(residual_words(QUARTIC, (0, 0, 0), 0))
    config = MCConfig(n=n, sweeps=240000, burn_in=5000, chains=4, seed=SEED)
    assert config.sweeps >= 200000
    result = sample(QUARTIC, [t], sorted(words), config, assert_convex=True)
    est = result.moment((0, 0))
    res1 = sd_residual(result, (0,), 0)
    res3 = sd_residual(result, (0, 0, 0), 0)
    elapsed = time.time() - t0

    gap = abs(est.mean - m2)
    allowance = 3 * est.stderr + 5 / n**2
    ok = (est.stderr <= 0.02
          and series.tail_bound is None
          and gap <= allowance
          and abs(res1.value) <= 3 * res1.stderr
          and abs(res3.value) <= 3 * res3.stderr
          and elapsed <= 600.0)
    _report(capsys, "sampler moments", ok,
            f"mu(x^2) = {est.mean:.6f} +- {est.stderr:.6f} over "
            f"{est.n_samples} sweeps; equilibrium m2 = {m2:.6f}, gap "
            f"{gap:.1e} <= {allowance:.1e}; order-6 partial sum {partial:.3f} "
            f"printed for the record (uncertified, terms grow x4.8/order, "
            f"off by {abs(est.mean - partial):.1f}); residuals x: "
            f"{res1.value:.1e} +- {res1.stderr:.1e}, x^3: {res3.value:.1e} "
            f"+- {res3.stderr:.1e}", elapsed)


def test_equilibrium_solver(capsys):
    t0 = time.time()
    flat = solve_equilibrium(StarSpec((), 1), ())
    grid = np.linspace(-1.9, 1.9, 11)
    h_dev = float(np.max(np.abs(flat.h(grid) - 1.0)))
    flat_ok = (abs(flat.a + 2.0) < 1e-9 and abs(flat.b - 2.0) < 1e-9
               and flat.endpoint_residual < 1e-12 and h_dev < 1e-10)

    counter = MapCounter(QUARTIC)
    t = Fraction(1, 100)
    eq = solve_equilibrium(QUARTIC, [t])
    moment_bad = []
    for k in (1, 2, 3, 4):
        sv = counter.series_eval((0,) * k, [t], 17)
        terms = [sv.by_order[o] for o in range(18)]
        nonzero = [x for x in terms[1:] if x]
        alternating = all(a * b < 0 for a, b in zip(nonzero, nonzero[1:]))
        shrinking = all(abs(a) > abs(b) for a, b in zip(nonzero, nonzero[1:]))
        partial = sv.value - sv.by_order[17]
        tol = abs(sv.by_order[17]) + Fraction(1, 10**8)
        if not (alternating and shrinking
                and abs(eq.moment(k) - float(partial)) <= float(tol)):
            moment_bad.append(k)

    tight = TruncationBound.tightened(QUARTIC)
    ts = Fraction(1, 8192)
    eqs = solve_equilibrium(QUARTIC, [ts])
    certified_bad = []
    for k in (2, 4):
        sv = counter.series_eval((0,) * k, [ts], 8, bound=tight)
        if sv.tail_bound is None or (
                abs(eqs.moment(k) - float(sv.value))
                > float(sv.tail_bound) + 1e-8):
            certified_bad.append(k)

    eps = 1e-5
    slope = (solve_equilibrium(QUARTIC, [eps]).moment(2)
             - solve_equilibrium(QUARTIC, [-eps]).moment(2)) / (2 * eps)
    slope_ok = abs(slope + 16.0) < 1e-4
    elapsed = time.time() - t0

    ok = (flat_ok and not moment_bad and not certified_bad and slope_ok
          and elapsed < 10.0)
    _report(capsys, "equilibrium measure", ok,
            f"V=0 endpoints ({flat.a:.1f}, {flat.b:.1f}) residual "
            f"{flat.endpoint_residual:.1e}, h flat to {h_dev:.1e}; t=1/100 "
            f"moments 1..4 within first-dropped-term tolerance (bad: "
            f"{moment_bad or 'none'}); certified tail honored at 1/8192 "
            f"(bad: {certified_bad or 'none'}); dm2/dt = {slope:.6f}",
            elapsed)


ROOTED_FIXTURES = {
    (0, 0): {0: 1},
    (1, 0): {0: 2},
    (0, 1): {2: 2},
    (2, 0): {0: 9},
    (1, 1): {2: 12, 4: 6},
    (0, 2): {2: 9},
}


def test_ising_routes(capsys):
    t0 = time.time()
    dressed_bad = []
    for root in [(0, 0), (0, 1), (1, 1)]:
        bare = ising_series_coefficients(root, 1, 1, 4)
        dressed = dressed_series_coefficients(root, 1, 1, 4)
        if bare != dressed:
            dressed_bad.append(root)

    fixture_bad = []
    for (black, white), column in ROOTED_FIXTURES.items():
        for links in range(5):
            got = ising_rooted_count((0, 0), (0, black), (0, white), links)
            if got != column.get(links, 0):
                fixture_bad.append(((black, white), links, got))

    u0 = Fraction(1, 3)
    constant = map_equation_series(u0, 4).coefficient(0, 0)
    constant_ok = constant == u0**2 / (u0**2 - 1)

    residual = verify_change_of_variables(Fraction(1, 100), Fraction(1, 2))
    expected_residual = Fraction(0)
    if residual != expected_residual:
        # Record the measured value loudly: freeze it as the new fixture
        # above and treat the algebraic identity as refuted.
        cov_note = f"IDENTITY REFUTED, measured residual {residual}"
    else:
        cov_note = "0"
    elapsed = time.time() - t0

    ok = (not dressed_bad and not fixture_bad and constant_ok
          and residual == expected_residual and elapsed < 60.0)
    _report(capsys, "two-color couplings", ok,
            f"bare == dressed coefficients through order 4 for 3 roots "
            f"(bad: {dressed_bad or 'none'}); rooted fixture grid exact "
            f"(bad: {fixture_bad or 'none'}); algebraic constant term "
            f"{constant}; change-of-variables residual {cov_note}", elapsed)


def test_free_energy_and_entropy(capsys):
    t0 = time.time()
    table = MapCounter(QUARTIC).free_energy_table(2)
    entries_ok = dict(table.entries) == {(1,): 4, (2,): 144}
    entropy = {k: (1 - sum(k)) * v for k, v in table.entries.items()}
    entropy_ok = entropy == {(1,): 0, (2,): -144}

    # The table constructor already insists every anchor agrees; redo the
    # multi-term cells by hand so the agreement is visible here too.
    counter = MapCounter(TWO_COLOR)
    big = counter.free_energy_table(3)
    anchor_cells = 0
    anchor_bad = []
    largest = 0
    for kbar, entry in big.entries.items():
        if sum(1 for k in kbar if k) < 2:
            continue
        anchors = []
        for j, word in enumerate(TWO_COLOR.star_words):
            if kbar[j] == 0:
                continue
            lower = kbar[:j] + (kbar[j] - 1,) + kbar[j + 1:]
            anchors.append(counter.map_count(word, lower)
                           + counter.map_count(reverse_word(word), lower))
        anchor_cells += 1
        largest = max(largest, abs(entry))
        if any(a != entry for a in anchors):
            anchor_bad.append((kbar, entry, anchors))
    elapsed = time.time() - t0

    ok = (entries_ok and entropy_ok and anchor_cells > 0 and not anchor_bad
          and elapsed < 1.0)
    _report(capsys, "free energy and entropy", ok,
            f"quartic coefficients {dict(table.entries)}, entropy "
            f"{entropy}; {anchor_cells} multi-anchor two-color cells "
            f"re-derived per term (bad: {anchor_bad or 'none'}, largest "
            f"entry {largest})", elapsed)
