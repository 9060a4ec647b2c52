import random
from fractions import Fraction

import pytest

from mapcount.engine import (
    MapCounter,
    TruncationBound,
    catalan,
    multi_indices,
    semicircle_moment,
)
from mapcount.potential import StarSpec
from mapcount.words import reverse_word

QUARTIC = StarSpec(((0, 0, 0, 0),), 1)
TWO_COLOR = StarSpec(((0, 0, 0, 0), (1, 1, 1, 1), (0, 1)), 2)


def brute_noncrossing(word):
    """Independent count of color-respecting non-crossing pairings."""
    if not word:
        return 1
    if len(word) % 2:
        return 0
    total = 0
    for j in range(1, len(word), 2):
        if word[j] == word[0]:
            total += brute_noncrossing(word[1:j]) * brute_noncrossing(word[j + 1:])
    return total


def test_catalan_sequence():
    assert [catalan(k) for k in range(9)] == [1, 1, 2, 5, 14, 42, 132, 429, 1430]


def test_semicircle_base_case():
    for k in range(7):
        assert semicircle_moment((0,) * (2 * k)) == catalan(k)
        assert semicircle_moment((0,) * (2 * k + 1)) == 0


def test_semicircle_colored_words():
    rng = random.Random(31)
    for _ in range(60):
        w = tuple(rng.randrange(2) for _ in range(rng.randrange(9)))
        assert semicircle_moment(w, num_colors=2) == brute_noncrossing(w)


def test_first_order_quartic_values():
    mc = MapCounter(QUARTIC)
    assert mc.map_count((0, 0, 0, 0), (1,)) == 72
    assert mc.map_count((0, 0), (1,)) == 16
    assert mc.map_count((0,), (1,)) == 0
    assert mc.map_count((), (1,)) == 0
    assert mc.map_count((), (0,)) == 1


def test_traciality_is_reproduced():
    # the recursion always splits at the first letter; agreement under
    # cyclic rotation of the root word is a theorem about the counts,
    # not an assumption of the algorithm
    mc = MapCounter(TWO_COLOR)
    rng = random.Random(41)
    for _ in range(40):
        p = tuple(rng.randrange(2) for _ in range(rng.randrange(1, 4)))
        q = tuple(rng.randrange(2) for _ in range(rng.randrange(1, 4)))
        kbar = [0, 0, 0]
        for _ in range(rng.randrange(3)):
            kbar[rng.randrange(3)] += 1
        kbar = tuple(kbar)
        assert mc.map_count(p + q, kbar) == mc.map_count(q + p, kbar)


def test_involution_invariance():
    mc = MapCounter(TWO_COLOR)
    rng = random.Random(43)
    for _ in range(40):
        w = tuple(rng.randrange(2) for _ in range(rng.randrange(7)))
        kbar = [0, 0, 0]
        for _ in range(rng.randrange(3)):
            kbar[rng.randrange(3)] += 1
        kbar = tuple(kbar)
        assert mc.map_count(w, kbar) == mc.map_count(reverse_word(w), kbar)


def test_rooted_counts():
    mc = MapCounter(QUARTIC)
    assert mc.rooted_count((0, 0), (1,)) == 4
    # integrality across a small corpus
    for deg in range(0, 7, 2):
        for k in range(4):
            mc.rooted_count((0,) * deg, (k,))
    mc2 = MapCounter(TWO_COLOR)
    for kbar in multi_indices(3, 2):
        mc2.rooted_count((0, 1), kbar)
        mc2.rooted_count((0, 0), kbar)


def test_free_energy_table_quartic():
    mc = MapCounter(QUARTIC)
    ft = mc.free_energy_table(3)
    assert ft.entries[(1,)] == 4
    assert ft.entries[(2,)] == 144
    assert set(ft.entries) == {(1,), (2,), (3,)}
    # eval at t=0 vanishes; linear term is -t * 4
    assert ft.eval([Fraction(0)]) == 0
    t = Fraction(1, 1000)
    series = ft.eval([t])
    assert series + 4 * t < Fraction(1, 10000)  # -4t + O(t^2)


def test_free_energy_anchor_consistency_two_color():
    # every multi-index is anchored through each positive coordinate and
    # the constructor raises if any pair of anchors disagrees
    mc = MapCounter(TWO_COLOR)
    ft = mc.free_energy_table(3)
    assert ft.entries[(1, 0, 0)] == 4
    assert ft.entries[(0, 1, 0)] == 4
    assert ft.entries[(0, 0, 1)] == 0  # a lone link star cannot close up
    assert ft.entries[(0, 0, 2)] == 4  # two links glue in 2*2 labeled ways


def test_entropy_decomposition_identity():
    # entropy = moment-of-potential + free-energy, exactly, order by order
    mc = MapCounter(TWO_COLOR)
    order = 3
    ft = mc.free_energy_table(order)
    rng = random.Random(47)
    for _ in range(5):
        t = [Fraction(rng.randrange(-3, 4), rng.randrange(50, 200))
             for _ in range(3)]
        # truncated moment of V: sum_j t_j tau(q_j + q_j*) keeping only
        # contributions from multi-indices of total order <= `order`
        moment_v = Fraction(0)
        for j, q in enumerate(mc.spec.star_words):
            sv = mc.series_eval(q, t, order - 1)
            sv_star = mc.series_eval(reverse_word(q), t, order - 1)
            moment_v += t[j] * (sv.value + sv_star.value)
        lhs = ft.entropy_eval(t)
        rhs = moment_v + ft.eval(t)
        assert lhs == rhs


def test_entropy_low_order_coefficients():
    # in the quartic model the order-1 entropy term cancels and the
    # order-2 term is the two-star cluster count with weight (1 - 2)
    mc = MapCounter(QUARTIC)
    ft = mc.free_energy_table(2)
    t = Fraction(1, 7)
    expect = (1 - 1) * (-t) * 4 + (1 - 2) * t * t / 2 * 144
    assert ft.entropy_eval([t]) == expect


def test_truncation_bound_admissibility():
    dflt = TruncationBound.default(QUARTIC)
    assert dflt.order_base == 1024 and dflt.degree_base == 4
    assert dflt.is_admissible(QUARTIC)
    tight = TruncationBound.tightened(QUARTIC)
    assert tight.is_admissible(QUARTIC)
    assert tight.order_base < dflt.order_base
    # B = 2 is inadmissible for the quartic star: 4/B^2 alone hits 1
    assert not TruncationBound(order_base=Fraction(10 ** 9),
                               degree_base=Fraction(2)).is_admissible(QUARTIC)
    dflt2 = TruncationBound.default(TWO_COLOR)
    assert dflt2.is_admissible(TWO_COLOR)
    assert TruncationBound.tightened(TWO_COLOR).is_admissible(TWO_COLOR)


def test_memoized_cells_respect_growth_bound():
    for spec in (QUARTIC, TWO_COLOR):
        mc = MapCounter(spec)
        n = spec.num_terms
        for kbar in multi_indices(n, 2):
            for deg in range(5):
                for _ in range(3):
                    mc.map_count((0,) * deg, kbar)
        bound = TruncationBound.default(spec)
        for (word, kbar), value in mc.table().items():
            cap = bound.count_bound(spec, word, kbar)
            assert abs(value) <= cap, (word, kbar, value, cap)


def test_series_eval_reduces_to_semicircle_at_zero():
    mc = MapCounter(QUARTIC)
    sv = mc.series_eval((0, 0, 0, 0), [Fraction(0)], 4)
    assert sv.value == 2


def test_series_eval_partial_sums():
    mc = MapCounter(QUARTIC)
    t = Fraction(1, 100)
    sv = mc.series_eval((0, 0), [t], 2)
    # 1 - 16 t + 1152 t^2 / 2
    assert sv.value == 1 - 16 * t + 576 * t ** 2
    assert sv.by_order[0] == 1
    assert sv.by_order[1] == -16 * t
    assert sv.by_order[2] == 576 * t ** 2


def test_tail_bound_availability_and_validity():
    mc = MapCounter(QUARTIC)
    bound = TruncationBound.tightened(QUARTIC)
    # far inside the certified box
    t = Fraction(1, 8192)
    sv3 = mc.series_eval((0, 0), [t], 3, bound=bound)
    sv7 = mc.series_eval((0, 0), [t], 7, bound=bound)
    assert sv3.certified and sv7.certified
    assert sv3.tail_bound > 0
    # the tail bound at order 3 must dominate any later partial-sum move
    assert abs(sv7.value - sv3.value) <= sv3.tail_bound
    assert sv7.tail_bound < sv3.tail_bound
    # outside the certified box the bound honestly disappears
    sv = mc.series_eval((0, 0), [Fraction(1, 20)], 3, bound=bound)
    assert sv.tail_bound is None and not sv.certified
    assert not bound.certifies([Fraction(1, 20)])


def test_series_eval_multi_term():
    mc = MapCounter(TWO_COLOR)
    t = [Fraction(1, 50), Fraction(1, 60), Fraction(1, 70)]
    sv = mc.series_eval((0, 1), t, 2)
    # leading behavior: no order-0/1 term except the link star
    assert sv.by_order[0] == 0
    assert sv.by_order[1] == -t[2] * mc.map_count((0, 1), (0, 0, 1))
    assert mc.map_count((0, 1), (0, 0, 1)) == 2


def test_invalid_inputs():
    mc = MapCounter(QUARTIC)
    with pytest.raises(ValueError):
        mc.map_count((0, 0), (1, 1))
    with pytest.raises(ValueError):
        mc.map_count((0, 0), (-1,))
    with pytest.raises(ValueError):
        mc.map_count((5,), (1,))
    with pytest.raises(ValueError):
        mc.series_eval((0, 0), [], 2)
