"""Brute-force enumeration of fat-graph gluings.

A collection of stars (one per interaction vertex, plus optionally a
marked root star) is laid out as labeled half-edges, clockwise within
each star.  A gluing is a perfect matching of the half-edges in which
only equal colors pair.  Each complete matching is classified by
connectivity and by genus, read off the Euler characteristic
V - E + F, where faces are the cycles of (rotation-at-star o pairing).

This module is deliberately dumb: it enumerates every matching, one by
one, pairing the lowest unmatched half-edge with each same-color
candidate.  It exists to cross-check the loop-equation engine, which is
clever and therefore needs a witness.  A numba kernel accelerates the
walk when available; the pure-Python path is the reference
implementation and the two are compared in the test suite.

Counting conventions: stars are labeled and their half-edges carry a
marked first leg, so counts are of fully labeled objects with no
symmetry factors.  The unit word as a root is an isolated vertex: it
cannot reach any star, so the connected count is 1 with no other stars
and 0 otherwise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Iterator, Sequence

import numpy as np

from .words import Word, reverse_word, rotate_word, symmetry_degree

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


HALF_EDGE_GUARD = 22  # per color; 21!! is ~1.4e10 matchings, beyond patience


class GluingSizeError(ValueError):
    pass


@dataclass(frozen=True)
class Layout:
    """Half-edge tables for a list of star instances."""

    star_words: tuple[Word, ...]
    color: np.ndarray      # int8[nh], color of each half-edge
    star_id: np.ndarray    # int32[nh]
    rot_next: np.ndarray   # int32[nh], clockwise successor within the star
    star_start: np.ndarray  # int32[ns+1], half-edge ranges per star
    exclusive: np.ndarray  # uint8[ns], stars barred from pairing together

    @property
    def num_half_edges(self) -> int:
        return int(self.color.size)

    @property
    def num_stars(self) -> int:
        return len(self.star_words)


def build_layout(star_words: Sequence[Word],
                 exclusive_words: Sequence[Word] = (),
                 exempt_first: bool = False) -> Layout:
    """exempt_first leaves instance 0 unmarked even if its word is in
    exclusive_words; callers use it to keep a root star out of the
    no-mutual-link restriction."""
    words = tuple(tuple(w) for w in star_words)
    excl = {tuple(w) for w in exclusive_words}
    nh = sum(len(w) for w in words)
    color = np.zeros(nh, dtype=np.int8)
    star_id = np.zeros(nh, dtype=np.int32)
    rot_next = np.zeros(nh, dtype=np.int32)
    star_start = np.zeros(len(words) + 1, dtype=np.int32)
    exclusive = np.zeros(len(words), dtype=np.uint8)
    h = 0
    for s, w in enumerate(words):
        star_start[s] = h
        d = len(w)
        for p, c in enumerate(w):
            color[h + p] = c
            star_id[h + p] = s
            rot_next[h + p] = h + (p + 1) % d
        exclusive[s] = 1 if w in excl and not (exempt_first and s == 0) else 0
        h += d
    star_start[len(words)] = nh
    return Layout(words, color, star_id, rot_next, star_start, exclusive)


def check_size(layout: Layout, force: bool = False) -> None:
    counts: dict[int, int] = {}
    for c in layout.color:
        counts[int(c)] = counts.get(int(c), 0) + 1
    worst = max(counts.values(), default=0)
    if worst > HALF_EDGE_GUARD and not force:
        raise GluingSizeError(
            f"{worst} half-edges of one color (guard is {HALF_EDGE_GUARD}); "
            "pass force=True if you really want to wait"
        )


def matching_count_bound(layout: Layout) -> int:
    """Product over colors of (2k-1)!!: the unfiltered matching total."""
    counts: dict[int, int] = {}
    for c in layout.color:
        counts[int(c)] = counts.get(int(c), 0) + 1
    total = 1
    for k in counts.values():
        if k % 2:
            return 0
        total *= _double_factorial(k - 1)
    return total


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


# ---------------------------------------------------------------------------
# Pure-Python enumeration (reference path).
# ---------------------------------------------------------------------------

def enumerate_gluings(layout: Layout, forbid_exclusive_pairs: bool = False,
                      ) -> Iterator[tuple[int, ...]]:
    """Yield every admissible perfect matching as a partner tuple.

    The lowest unmatched half-edge is paired with each same-color
    candidate above it, recursively.  With forbid_exclusive_pairs, two
    half-edges whose stars are both marked exclusive refuse to pair
    (this is a constraint defining the count, not a pruning trick).
    """
    nh = layout.num_half_edges
    color = layout.color
    star_excl = layout.exclusive
    star_id = layout.star_id
    partner = [-1] * nh

    def rec(start: int) -> Iterator[tuple[int, ...]]:
        h0 = start
        while h0 < nh and partner[h0] >= 0:
            h0 += 1
        if h0 == nh:
            yield tuple(partner)
            return
        for h1 in range(h0 + 1, nh):
            if partner[h1] >= 0 or color[h1] != color[h0]:
                continue
            if (forbid_exclusive_pairs and star_excl[star_id[h0]]
                    and star_excl[star_id[h1]]):
                continue
            partner[h0], partner[h1] = h1, h0
            yield from rec(h0 + 1)
            partner[h0], partner[h1] = -1, -1

    yield from rec(0)


def gluing_genus(layout: Layout, partner: Sequence[int]) -> int | None:
    """Genus of a complete gluing, or None if it is disconnected."""
    ns = layout.num_stars
    if ns == 0:
        return 0
    # connectivity over stars
    seen = [False] * ns
    stack = [0]
    seen[0] = True
    found = 1
    while stack:
        s = stack.pop()
        for h in range(layout.star_start[s], layout.star_start[s + 1]):
            t = int(layout.star_id[partner[h]])
            if not seen[t]:
                seen[t] = True
                found += 1
                stack.append(t)
    if found < ns:
        return None
    # faces: cycles of h -> rot_next[partner[h]]
    nh = layout.num_half_edges
    visited = [False] * nh
    faces = 0
    for h in range(nh):
        if visited[h]:
            continue
        faces += 1
        x = h
        while not visited[x]:
            visited[x] = True
            x = int(layout.rot_next[partner[x]])
    chi = ns - nh // 2 + faces
    assert chi % 2 == 0, "odd Euler characteristic on an orientable gluing"
    return (2 - chi) // 2


@dataclass
class GluingCensus:
    by_genus: dict[int, int] = field(default_factory=dict)
    disconnected: int = 0

    @property
    def total(self) -> int:
        return self.disconnected + sum(self.by_genus.values())

    def planar(self) -> int:
        return self.by_genus.get(0, 0)


def census_python(layout: Layout, forbid_exclusive_pairs: bool = False,
                  ) -> GluingCensus:
    out = GluingCensus()
    for partner in enumerate_gluings(layout, forbid_exclusive_pairs):
        g = gluing_genus(layout, partner)
        if g is None:
            out.disconnected += 1
        else:
            out.by_genus[g] = out.by_genus.get(g, 0) + 1
    return out


# ---------------------------------------------------------------------------
# numba kernel: same walk, flattened to arrays and an explicit stack.
# ---------------------------------------------------------------------------

@njit(cache=True)
def _census_kernel(color, star_id, rot_next, star_start, star_excl,
                   forbid_excl, first_lo, first_hi, genus_counts, disc_count):
    nh = color.size
    if nh % 2 == 1:
        return  # no perfect matching exists
    ns = star_start.size - 1
    half = nh // 2
    partner = np.full(nh, -1, np.int32)
    stack_h0 = np.empty(half, np.int32)
    stack_h1 = np.empty(half, np.int32)
    seen_star = np.empty(ns, np.uint8)
    star_queue = np.empty(ns, np.int32)
    visited = np.empty(nh, np.uint8)

    if nh == 0:
        genus_counts[0] += 1
        return

    depth = 0
    h0 = np.int32(0)
    cursor = np.int32(0)  # candidates are h1 > cursor
    while True:
        # scan for the next candidate partner of h0
        h1 = cursor + 1
        while h1 < nh:
            if partner[h1] < 0 and color[h1] == color[h0]:
                if not (forbid_excl and star_excl[star_id[h0]]
                        and star_excl[star_id[h1]]):
                    # at depth 0 an external driver may restrict the branch
                    if depth > 0 or (first_lo <= h1 < first_hi):
                        break
            h1 += 1
        if h1 == nh:
            # exhausted candidates at this depth: backtrack
            if depth == 0:
                return
            depth -= 1
            h0 = stack_h0[depth]
            cursor = stack_h1[depth]
            partner[h0] = -1
            partner[cursor] = -1
            continue

        partner[h0] = h1
        partner[h1] = h0
        stack_h0[depth] = h0
        stack_h1[depth] = h1
        depth += 1

        if depth == half:
            # complete matching: classify
            for s in range(ns):
                seen_star[s] = 0
            seen_star[0] = 1
            star_queue[0] = 0
            qlen = 1
            found = 1
            while qlen > 0:
                qlen -= 1
                s = star_queue[qlen]
                for h in range(star_start[s], star_start[s + 1]):
                    t = star_id[partner[h]]
                    if seen_star[t] == 0:
                        seen_star[t] = 1
                        star_queue[qlen] = t
                        qlen += 1
                        found += 1
            if found < ns:
                disc_count[0] += 1
            else:
                for h in range(nh):
                    visited[h] = 0
                faces = 0
                for h in range(nh):
                    if visited[h] == 0:
                        faces += 1
                        x = h
                        while visited[x] == 0:
                            visited[x] = 1
                            x = rot_next[partner[x]]
                genus = (2 - ns + half - faces) // 2
                genus_counts[genus] += 1
            # undo and keep scanning from h1
            depth -= 1
            partner[h0] = -1
            partner[h1] = -1
            cursor = h1
        else:
            # descend: next lowest unmatched half-edge
            nxt = h0 + 1
            while partner[nxt] >= 0:
                nxt += 1
            h0 = nxt
            cursor = h0


def census_kernel(layout: Layout, forbid_exclusive_pairs: bool = False,
                  ) -> GluingCensus:
    nh = layout.num_half_edges
    genus_counts = np.zeros(nh // 2 + 2, dtype=np.int64)
    disc = np.zeros(1, dtype=np.int64)
    _census_kernel(layout.color, layout.star_id, layout.rot_next,
                   layout.star_start, layout.exclusive,
                   forbid_exclusive_pairs, 0, nh, genus_counts, disc)
    out = GluingCensus(disconnected=int(disc[0]))
    for g, n in enumerate(genus_counts):
        if n:
            out.by_genus[g] = int(n)
    return out


def census(layout: Layout, forbid_exclusive_pairs: bool = False,
           force: bool = False, use_kernel: bool | None = None) -> GluingCensus:
    """Full genus census of a layout's gluings.

    use_kernel None picks the numba path when available; the Python path
    is kept bit-for-bit equivalent and is what the tests trust.
    """
    check_size(layout, force=force)
    # a color with an odd number of half-edges cannot be paired at all,
    # so skip the enumeration entirely
    colors = np.asarray(layout.color)
    if colors.size and any(
            np.count_nonzero(colors == c) % 2
            for c in np.unique(colors)):
        return GluingCensus()
    if use_kernel is None:
        use_kernel = HAS_NUMBA
    if use_kernel and not HAS_NUMBA:
        raise RuntimeError("numba kernel requested but numba is unavailable")
    if use_kernel:
        return census_kernel(layout, forbid_exclusive_pairs)
    return census_python(layout, forbid_exclusive_pairs)


# ---------------------------------------------------------------------------
# Counting interfaces used by the rest of the package.
# ---------------------------------------------------------------------------

def expand_stars(star_counts: Sequence[tuple[Word, int]]) -> tuple[Word, ...]:
    out: list[Word] = []
    for word, k in star_counts:
        if k < 0:
            raise ValueError("negative star multiplicity")
        out.extend([tuple(word)] * k)
    return tuple(out)


def count_planar(root: Word | None, star_counts: Sequence[tuple[Word, int]],
                 exclusive_words: Sequence[Word] = (), force: bool = False,
                 use_kernel: bool | None = None,
                 exempt_root: bool = False) -> int:
    """Number of connected planar gluings with the given labeled stars.

    root None means no marked star at all; the unit root is an isolated
    vertex (1 on its own, 0 next to any star, since nothing can reach it).
    With exempt_root, the root may link to exclusive stars even if its
    own word appears in exclusive_words.
    """
    stars = expand_stars(star_counts)
    if root is not None and len(root) == 0:
        return 1 if not stars else 0
    instances = (() if root is None else (tuple(root),)) + stars
    layout = build_layout(instances, exclusive_words,
                          exempt_first=exempt_root and root is not None)
    forbid = bool(len(exclusive_words))
    return census(layout, forbid_exclusive_pairs=forbid, force=force,
                  use_kernel=use_kernel).planar()


def genus_census(root: Word | None, star_counts: Sequence[tuple[Word, int]],
                 exclusive_words: Sequence[Word] = (), force: bool = False,
                 use_kernel: bool | None = None) -> GluingCensus:
    stars = expand_stars(star_counts)
    if root is not None and len(root) == 0:
        out = GluingCensus()
        if not stars:
            out.by_genus[0] = 1
        else:
            # every gluing of the remaining stars misses the isolated root
            layout = build_layout(stars, exclusive_words)
            out.disconnected = census(
                layout, bool(len(exclusive_words)), force, use_kernel).total
        return out
    instances = (() if root is None else (tuple(root),)) + stars
    layout = build_layout(instances, exclusive_words)
    return census(layout, forbid_exclusive_pairs=bool(len(exclusive_words)),
                  force=force, use_kernel=use_kernel)


def reversal_is_rotation(word: Word) -> bool:
    w = tuple(word)
    rev = reverse_word(w)
    return any(rotate_word(w, p) == rev for p in range(len(w)))


def count_with_adjoints(root: Word | None,
                        star_counts: Sequence[tuple[Word, int]],
                        force: bool = False,
                        use_kernel: bool | None = None,
                        split_shortcut: bool | None = None) -> int:
    """Planar count for stars drawn from q + q*.

    Each star type q of multiplicity k is split into p copies of q and
    k - p of its reversal, summed over p with binomial weights.  When
    every reversal is a rotation of its word the split does not change
    the count (rotating a star's marked leg is a relabeling), so a
    single cell times 2^(sum k) suffices; that shortcut is validated
    against the full sum in the tests and can be forced off.
    """
    star_counts = [(tuple(w), k) for w, k in star_counts]
    if split_shortcut is None:
        split_shortcut = all(reversal_is_rotation(w) for w, _ in star_counts)
    if split_shortcut:
        base = count_planar(root, star_counts, force=force, use_kernel=use_kernel)
        return base * 2 ** sum(k for _, k in star_counts)
    total = 0
    ranges = [range(k + 1) for _, k in star_counts]
    for picks in itertools.product(*ranges):
        weight = 1
        cell: list[tuple[Word, int]] = []
        for (w, k), p in zip(star_counts, picks):
            weight *= comb(k, p)
            if p:
                cell.append((w, p))
            if k - p:
                cell.append((reverse_word(w), k - p))
        total += weight * count_planar(root, cell, force=force,
                                       use_kernel=use_kernel)
    return total


# ---------------------------------------------------------------------------
# Rooted counts: orbits under relabeling of the non-root stars.
# ---------------------------------------------------------------------------

def count_rooted_orbits(root: Word, star_counts: Sequence[tuple[Word, int]],
                        exclusive_words: Sequence[Word] = (),
                        force: bool = False, exempt_root: bool = False) -> int:
    """Orbits of connected planar gluings under the symmetry group of the
    unlabeled picture: permutations of identical non-root stars composed
    with rotations fixing each star's word.  The root star stays pinned.

    Pure Python; meant for small fixtures that pin down labeled-count /
    rooted-count ratios.
    """
    stars = expand_stars(star_counts)
    root = tuple(root)
    if len(root) == 0:
        return 1 if not stars else 0
    instances = (root,) + stars
    layout = build_layout(instances, exclusive_words,
                          exempt_first=exempt_root)
    check_size(layout, force=force)

    group = _star_symmetries(layout, fixed_instances=1)
    forbid = bool(len(exclusive_words))
    reps: set[tuple[int, ...]] = set()
    for partner in enumerate_gluings(layout, forbid):
        if gluing_genus(layout, partner) != 0:
            continue
        reps.add(min(_apply_perm(perm, partner) for perm in group))
    return len(reps)


def star_symmetry_order(star_counts: Sequence[tuple[Word, int]]) -> int:
    """Size of the relabeling group: k! per star type times the word's
    rotational symmetry count per instance."""
    order = 1
    for word, k in star_counts:
        order *= factorial(k) * symmetry_degree(tuple(word)) ** k
    return order


def _star_symmetries(layout: Layout, fixed_instances: int,
                     ) -> list[tuple[int, ...]]:
    ns = layout.num_stars
    movable = list(range(fixed_instances, ns))
    by_word: dict[Word, list[int]] = {}
    for s in movable:
        by_word.setdefault(layout.star_words[s], []).append(s)

    # rotation choices per movable instance: shifts fixing the word
    rot_choices: dict[int, list[int]] = {}
    for s in movable:
        w = layout.star_words[s]
        rot_choices[s] = [p for p in range(len(w))
                          if rotate_word(w, p) == w]

    groups = list(by_word.values())
    perms: list[tuple[int, ...]] = []
    for placement in itertools.product(
            *(itertools.permutations(g) for g in groups)):
        star_map = {s: s for s in range(ns)}
        for orig, new in zip(groups, placement):
            for a, b in zip(orig, new):
                star_map[a] = b
        for rots in itertools.product(
                *(rot_choices[s] for s in movable)):
            rot_of = {s: r for s, r in zip(movable, rots)}
            perm = list(range(layout.num_half_edges))
            for s in movable:
                d = len(layout.star_words[s])
                src = layout.star_start[s]
                dst = layout.star_start[star_map[s]]
                r = rot_of[s]
                for p in range(d):
                    perm[src + p] = int(dst) + (p + r) % d
            perms.append(tuple(perm))
    return perms


def _apply_perm(perm: tuple[int, ...], partner: tuple[int, ...],
                ) -> tuple[int, ...]:
    out = [-1] * len(partner)
    for a, b in enumerate(partner):
        out[perm[a]] = perm[b]
    return tuple(out)
