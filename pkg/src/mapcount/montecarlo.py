"""Metropolis sampler for multi-matrix models.

Samples m Hermitian N x N matrices from the density proportional to

    exp( -N tr V(A_1, ..., A_m) - (N/2) sum_c tr A_c^2 ),

V = sum_j t_j (q_j + q_j*), by random-walk Metropolis on single entry
pairs.  Energy differences are computed incrementally: each matrix
carries its square alongside, so a single-entry move costs O(N) for
potentials built from tr A^d (d <= 4) and tr A_a A_b.  That covers every
interaction this package's examples use; richer words would cost O(N^2)
per move and are rejected upfront rather than silently sampled slowly.

The sampler refuses to run unless the caller either asserts the
potential is convex or supplies a hard spectral cutoff L.  The cutoff
restricts the state space to ||A_c|| <= L: a move is vetoed if it would
push an eigenvalue past L.  Vetoes are decided exactly, but cheaply: we
carry a rigorous upper bound on each spectral norm (it grows by at most
|delta| per accepted move) and only fall back to a full eigensolve when
the bound alone cannot clear the move; the bound is refreshed by an
exact eigendecomposition every 50 sweeps.

Bookkeeping honesty checks are built in: every 100 sweeps the maintained
squares and the running energy are recomputed from scratch; the relative
energy drift must stay below 1e-8 or the run is declared corrupt.

Measurements are normalized traces tr(word)/N recorded per sweep.
Words whose trace follows from the maintained squares in O(N^2) are
measured every sweep; words needing fresh matrix products (degree >= 5,
or mixed words longer than two letters) are measured every
HEAVY_MEASURE_EVERY sweeps, so estimates report their own sample counts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from multiprocessing import get_context
from typing import Mapping, Sequence

import numpy as np

from .potential import StarSpec
from .words import Word, cyclic_derivative, nc_derivative, reverse_word

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


HEAVY_MEASURE_EVERY = 50
RESYNC_EVERY = 100
CUTOFF_RESYNC_EVERY = 50
ADAPT_EVERY = 50


class UnsupportedPotentialError(ValueError):
    pass


@dataclass
class MCConfig:
    n: int = 40
    sweeps: int = 20000
    burn_in: int = 2000
    chains: int = 4
    seed: int = 1234
    cutoff: float | None = None
    step: float | None = None

    @classmethod
    def from_text(cls, text: str) -> "MCConfig":
        """key = value lines; # starts a comment."""
        known = {"N": "n", "sweeps": "sweeps", "burn_in": "burn_in",
                 "chains": "chains", "seed": "seed", "cutoff": "cutoff",
                 "step": "step"}
        kwargs: dict = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key = value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in known:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            attr = known[key]
            if attr in ("cutoff", "step"):
                kwargs[attr] = float(value)
            else:
                kwargs[attr] = int(value)
        return cls(**kwargs)

    def validate(self) -> None:
        if self.n < 2:
            raise ValueError("N must be at least 2")
        if self.sweeps < 1 or self.burn_in < 0 or self.chains < 1:
            raise ValueError("sweeps/burn_in/chains out of range")
        if self.cutoff is not None and self.cutoff <= 0:
            raise ValueError("cutoff must be positive")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")


# ---------------------------------------------------------------------------
# Potential and measurement encodings for the kernel.
# ---------------------------------------------------------------------------

def encode_potential(spec: StarSpec, couplings: Sequence[Fraction | float],
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Fold V = sum t_j (q_j + q_j*) plus the Gaussian term into
    per-color power coefficients and a mixed tr(A_a A_b) table."""
    if len(couplings) != spec.num_terms:
        raise ValueError("one coupling per interaction term required")
    m = spec.num_colors
    pow_coef = np.zeros((m, 5))
    mix_coef = np.zeros((m, m))
    for c in range(m):
        pow_coef[c, 2] = 0.5
    for q, t in zip(spec.star_words, couplings):
        t = float(t)
        if len(set(q)) == 1:
            d = len(q)
            if d > 4:
                raise UnsupportedPotentialError(
                    f"pure power of degree {d} > 4 needs O(N^2) moves; "
                    "not supported")
            pow_coef[q[0], d] += 2.0 * t
        elif len(q) == 2:
            a, b = q
            mix_coef[min(a, b), max(a, b)] += 2.0 * t
        else:
            raise UnsupportedPotentialError(
                f"interaction word {q} is neither a pure power (deg <= 4) "
                "nor a two-letter product")
    return pow_coef, mix_coef


# measurement plan kinds
_PLAN_UNIT = 0
_PLAN_TR1 = 1
_PLAN_TR2 = 2
_PLAN_TR3 = 3
_PLAN_TR4 = 4
_PLAN_MIX2 = 5
_PLAN_POWHI = 6
_PLAN_CHAIN = 7


def _word_plan(word: Word) -> tuple[int, int, int]:
    if len(word) == 0:
        return (_PLAN_UNIT, 0, 0)
    if len(set(word)) == 1:
        c, d = word[0], len(word)
        if d <= 4:
            return ((_PLAN_TR1, _PLAN_TR2, _PLAN_TR3, _PLAN_TR4)[d - 1], c, d)
        if d <= 8:
            return (_PLAN_POWHI, c, d)
        return (_PLAN_CHAIN, 0, 0)
    if len(word) == 2:
        return (_PLAN_MIX2, word[0], word[1])
    return (_PLAN_CHAIN, 0, 0)


def word_is_light(word: Word) -> bool:
    return _word_plan(word)[0] not in (_PLAN_POWHI, _PLAN_CHAIN)


def encode_words(words: Sequence[Word]) -> tuple[np.ndarray, ...]:
    kinds = np.zeros(len(words), np.int32)
    c1 = np.zeros(len(words), np.int32)
    c2 = np.zeros(len(words), np.int32)
    cadence = np.zeros(len(words), np.int32)
    flat: list[int] = []
    off = np.zeros(len(words) + 1, np.int32)
    for i, w in enumerate(words):
        kind, a, b = _word_plan(w)
        kinds[i], c1[i], c2[i] = kind, a, b
        cadence[i] = 1 if word_is_light(w) else HEAVY_MEASURE_EVERY
        off[i] = len(flat)
        if kind == _PLAN_CHAIN:
            flat.extend(w)
        off[i + 1] = len(flat)
    word_flat = np.array(flat or [0], np.int32)
    return kinds, c1, c2, cadence, word_flat, off


# ---------------------------------------------------------------------------
# The kernel.
# ---------------------------------------------------------------------------

@njit(cache=True)
def _trace_energy(A, pow_coef, mix_coef):
    m, n = A.shape[0], A.shape[1]
    energy = 0.0
    for c in range(m):
        a2 = np.dot(A[c], A[c])
        tr1 = 0.0
        tr2 = 0.0
        tr3 = 0.0
        tr4 = 0.0
        for i in range(n):
            tr1 += A[c, i, i].real
            tr2 += a2[i, i].real
            for j in range(n):
                tr3 += (a2[i, j] * A[c, j, i]).real
                tr4 += (a2[i, j] * a2[j, i]).real
        energy += (pow_coef[c, 1] * tr1 + pow_coef[c, 2] * tr2
                   + pow_coef[c, 3] * tr3 + pow_coef[c, 4] * tr4)
        for b in range(c + 1, m):
            trm = 0.0
            for i in range(n):
                for j in range(n):
                    trm += (A[c, i, j] * A[b, j, i]).real
            energy += mix_coef[c, b] * trm
    return n * energy


@njit(cache=True)
def _spectral_norm(mat):
    vals = np.linalg.eigvalsh(mat)
    hi = abs(vals[0])
    for v in vals:
        if abs(v) > hi:
            hi = abs(v)
    return hi


@njit(cache=True)
def _measure_one(A, A2, kind, c1, c2, word_flat, lo, hi):
    n = A.shape[1]
    val = 0.0 + 0.0j
    if kind == 0:
        return val + n
    if kind == 1:
        for i in range(n):
            val += A[c1, i, i]
        return val
    if kind == 2:
        for i in range(n):
            val += A2[c1, i, i]
        return val
    if kind == 3:
        for i in range(n):
            for j in range(n):
                val += A2[c1, i, j] * A[c1, j, i]
        return val
    if kind == 4:
        for i in range(n):
            for j in range(n):
                val += A2[c1, i, j] * A2[c1, j, i]
        return val
    if kind == 5:
        for i in range(n):
            for j in range(n):
                val += A[c1, i, j] * A[c2, j, i]
        return val
    if kind == 6:
        a3 = np.dot(A2[c1], A[c1])
        if c2 == 5:
            for i in range(n):
                for j in range(n):
                    val += A2[c1, i, j] * a3[j, i]
        elif c2 == 6:
            for i in range(n):
                for j in range(n):
                    val += a3[i, j] * a3[j, i]
        else:
            a4 = np.dot(A2[c1], A2[c1])
            if c2 == 7:
                for i in range(n):
                    for j in range(n):
                        val += a4[i, j] * a3[j, i]
            else:
                for i in range(n):
                    for j in range(n):
                        val += a4[i, j] * a4[j, i]
        return val
    # general chain
    mat = A[word_flat[lo]].copy()
    for p in range(lo + 1, hi):
        mat = np.dot(mat, A[word_flat[p]])
    for i in range(n):
        val += mat[i, i]
    return val


@njit(cache=True)
def _mc_kernel(A, A2, pow_coef, mix_coef, burn_in, sweeps, step0,
               cutoff, use_cutoff, seed,
               plan_kind, plan_c1, plan_c2, cadence, word_flat, word_off,
               out_series, out_counts, out_stats):
    np.random.seed(seed)
    m = A.shape[0]
    n = A.shape[1]
    nwords = plan_kind.size
    step = step0
    energy = _trace_energy(A, pow_coef, mix_coef)
    norm_bound = np.zeros(m)
    for c in range(m):
        norm_bound[c] = _spectral_norm(A[c])

    acc_window = 0
    tot_window = 0
    acc_run = 0
    tot_run = 0
    veto = 0
    max_energy_drift = 0.0
    max_a2_drift = 0.0
    eigensolves = 0

    total_sweeps = burn_in + sweeps
    for sweep in range(total_sweeps):
        for c in range(m):
            for i in range(n):
                for j in range(i, n):
                    diag = i == j
                    if diag:
                        delta = complex(step * np.random.normal(), 0.0)
                    else:
                        delta = complex(step * np.random.normal() * 0.7071067811865476,
                                        step * np.random.normal() * 0.7071067811865476)
                    absd = abs(delta)
                    tot_window += 1
                    if sweep >= burn_in:
                        tot_run += 1

                    if use_cutoff:
                        bnew = norm_bound[c] + absd
                        if bnew > cutoff:
                            cand = A[c].copy()
                            if diag:
                                cand[i, i] = cand[i, i] + delta
                            else:
                                cand[i, j] = cand[i, j] + delta
                                cand[j, i] = cand[j, i] + delta.conjugate()
                            exact = _spectral_norm(cand)
                            eigensolves += 1
                            if exact > cutoff:
                                veto += 1
                                continue
                            bnew = exact
                    else:
                        bnew = norm_bound[c] + absd

                    # incremental energy difference
                    aji = A[c, j, i]
                    aii = A[c, i, i].real
                    ajj = A[c, j, j].real
                    a2ii = A2[c, i, i].real
                    a2jj = A2[c, j, j].real
                    d1 = 0.0
                    d2 = 0.0
                    d3 = 0.0
                    d4 = 0.0
                    if diag:
                        x = delta.real
                        d1 = x
                        d2 = 2.0 * x * aii + x * x
                        if pow_coef[c, 3] != 0.0:
                            d3 = 3.0 * x * a2ii + 3.0 * x * x * aii + x ** 3
                        if pow_coef[c, 4] != 0.0:
                            a3ii = 0.0
                            for p in range(n):
                                a3ii += (A2[c, i, p] * A[c, p, i]).real
                            d4 = (4.0 * x * a3ii
                                  + x * x * (4.0 * a2ii + 2.0 * aii * aii)
                                  + 4.0 * x ** 3 * aii + x ** 4)
                    else:
                        re_daji = (delta * aji).real
                        d2 = 4.0 * re_daji + 2.0 * absd * absd
                        if pow_coef[c, 3] != 0.0:
                            re_da2 = (delta * A2[c, j, i]).real
                            d3 = (3.0 * 2.0 * re_da2
                                  + 3.0 * absd * absd * (aii + ajj))
                        if pow_coef[c, 4] != 0.0:
                            a3ji = 0.0 + 0.0j
                            for p in range(n):
                                a3ji += A2[c, j, p] * A[c, p, i]
                            d4 = (8.0 * (delta * a3ji).real
                                  + 4.0 * absd * absd * (a2ii + a2jj)
                                  + 2.0 * (2.0 * (delta * delta * aji * aji).real
                                           + 2.0 * absd * absd * aii * ajj)
                                  + 8.0 * absd * absd * re_daji
                                  + 2.0 * absd ** 4)
                    de = (pow_coef[c, 1] * d1 + pow_coef[c, 2] * d2
                          + pow_coef[c, 3] * d3 + pow_coef[c, 4] * d4)
                    for b in range(m):
                        if b == c:
                            continue
                        cf = mix_coef[c, b] if c < b else mix_coef[b, c]
                        if cf != 0.0:
                            if diag:
                                de += cf * delta.real * A[b, i, i].real
                            else:
                                de += cf * 2.0 * (delta * A[b, j, i]).real
                    de *= n

                    if de <= 0.0 or np.random.random() < np.exp(-de):
                        # accept: update A2 first (reads old A), then A
                        dc = delta.conjugate()
                        if diag:
                            for p in range(n):
                                A2[c, p, i] += delta * A[c, p, i]
                            for p in range(n):
                                A2[c, i, p] += delta * A[c, i, p]
                            A2[c, i, i] += delta * delta
                            A[c, i, i] += delta
                        else:
                            for p in range(n):
                                A2[c, p, j] += delta * A[c, p, i]
                                A2[c, p, i] += dc * A[c, p, j]
                            for p in range(n):
                                A2[c, i, p] += delta * A[c, j, p]
                                A2[c, j, p] += dc * A[c, i, p]
                            A2[c, i, i] += absd * absd
                            A2[c, j, j] += absd * absd
                            A[c, i, j] += delta
                            A[c, j, i] += dc
                        energy += de
                        norm_bound[c] = bnew
                        acc_window += 1
                        if sweep >= burn_in:
                            acc_run += 1

        if sweep < burn_in:
            if (sweep + 1) % ADAPT_EVERY == 0 and tot_window > 0:
                rate = acc_window / tot_window
                step *= np.exp(rate - 0.30)
                if step < 1e-5:
                    step = 1e-5
                if step > 5.0:
                    step = 5.0
                acc_window = 0
                tot_window = 0

        if (sweep + 1) % RESYNC_EVERY == 0:
            fresh_energy = _trace_energy(A, pow_coef, mix_coef)
            denom = max(1.0, abs(fresh_energy))
            drift = abs(energy - fresh_energy) / denom
            if drift > max_energy_drift:
                max_energy_drift = drift
            for c in range(m):
                a2f = np.dot(A[c], A[c])
                dd = 0.0
                for i in range(n):
                    for j in range(n):
                        dv = abs(A2[c, i, j] - a2f[i, j])
                        if dv > dd:
                            dd = dv
                if dd > max_a2_drift:
                    max_a2_drift = dd
                A2[c, :, :] = a2f
            energy = fresh_energy

        if use_cutoff and (sweep + 1) % CUTOFF_RESYNC_EVERY == 0:
            for c in range(m):
                norm_bound[c] = _spectral_norm(A[c])
                eigensolves += 1

        if sweep >= burn_in:
            s = sweep - burn_in
            for w in range(nwords):
                if s % cadence[w] == 0:
                    val = _measure_one(A, A2, plan_kind[w], plan_c1[w],
                                       plan_c2[w], word_flat,
                                       word_off[w], word_off[w + 1])
                    out_series[w, out_counts[w]] = val / n
                    out_counts[w] += 1

    out_stats[0] = acc_run / max(1, tot_run)
    out_stats[1] = step
    out_stats[2] = max_energy_drift
    out_stats[3] = veto
    out_stats[4] = energy
    out_stats[5] = max_a2_drift
    out_stats[6] = eigensolves


def _run_chain(args: dict) -> dict:
    m, n = args["m"], args["n"]
    A = np.zeros((m, n, n), np.complex128)
    A2 = np.zeros((m, n, n), np.complex128)
    nwords = args["plan_kind"].size
    out_series = np.zeros((nwords, args["sweeps"]), np.complex128)
    out_counts = np.zeros(nwords, np.int64)
    out_stats = np.zeros(8)
    _mc_kernel(A, A2, args["pow_coef"], args["mix_coef"], args["burn_in"],
               args["sweeps"], args["step0"], args["cutoff"],
               args["use_cutoff"], args["seed"],
               args["plan_kind"], args["plan_c1"], args["plan_c2"],
               args["cadence"], args["word_flat"], args["word_off"],
               out_series, out_counts, out_stats)
    series = [out_series[w, :out_counts[w]].copy() for w in range(nwords)]
    return {"series": series, "stats": out_stats}


# ---------------------------------------------------------------------------
# Results and estimators.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentEstimate:
    word: Word
    mean: float
    stderr: float
    n_samples: int


def batch_means(chains: Sequence[np.ndarray], batches_per_chain: int = 16,
                ) -> tuple[float, float, int]:
    """Mean, batch-means standard error, and total count for possibly
    several chains of correlated samples."""
    bm: list[float] = []
    total = 0
    grand = 0.0
    for series in chains:
        series = np.asarray(series, dtype=float)
        total += series.size
        grand += float(series.sum())
        nb = min(batches_per_chain, max(1, series.size // 8))
        width = series.size // nb
        if width == 0:
            continue
        for k in range(nb):
            bm.append(float(series[k * width:(k + 1) * width].mean()))
    if total == 0:
        raise ValueError("no samples")
    mean = grand / total
    if len(bm) < 2:
        return mean, float("nan"), total
    arr = np.array(bm)
    stderr = float(arr.std(ddof=1) / sqrt(len(arr)))
    return mean, stderr, total


@dataclass
class MCResult:
    spec: StarSpec
    couplings: tuple[float, ...]
    config: MCConfig
    words: tuple[Word, ...]
    series: Mapping[Word, list[np.ndarray]]   # complex, per chain
    cadence: Mapping[Word, int]
    acceptance_rates: tuple[float, ...]
    final_steps: tuple[float, ...]
    max_energy_drift: float
    max_square_drift: float
    veto_count: int

    def moment(self, word: Word) -> MomentEstimate:
        word = tuple(word)
        chains = [s.real for s in self.series[word]]
        mean, stderr, total = batch_means(chains)
        return MomentEstimate(word=word, mean=mean, stderr=stderr,
                              n_samples=total)

    def moments(self) -> list[MomentEstimate]:
        return [self.moment(w) for w in self.words]


def sample(spec: StarSpec, couplings: Sequence[Fraction | float],
           words: Sequence[Word], config: MCConfig,
           assert_convex: bool = False, threads: int | None = None,
           ) -> MCResult:
    """Run `config.chains` independent chains and collect trace series.

    config.sweeps is the total post-burn-in sweep budget, split evenly
    across chains (each chain adds its own burn-in on top).
    """
    config.validate()
    if config.cutoff is None and not assert_convex:
        raise ValueError(
            "refusing to sample: potential not asserted convex and no "
            "spectral cutoff given")
    words = [tuple(w) for w in words]
    if len(set(words)) != len(words):
        raise ValueError("duplicate measurement words")
    pow_coef, mix_coef = encode_potential(spec, couplings)
    kinds, c1, c2, cadence, word_flat, word_off = encode_words(words)

    chains = config.chains
    per_chain = (config.sweeps + chains - 1) // chains
    step0 = config.step if config.step is not None else max(
        0.02, 0.5 / sqrt(config.n))
    base = dict(m=spec.num_colors, n=config.n, sweeps=per_chain,
                burn_in=config.burn_in, step0=float(step0),
                cutoff=float(config.cutoff or 0.0),
                use_cutoff=config.cutoff is not None,
                pow_coef=pow_coef, mix_coef=mix_coef, plan_kind=kinds,
                plan_c1=c1, plan_c2=c2, cadence=cadence,
                word_flat=word_flat, word_off=word_off)
    jobs = []
    for k in range(chains):
        args = dict(base)
        args["seed"] = (config.seed + 1000003 * k) % (2 ** 31 - 1)
        jobs.append(args)

    workers = threads if threads is not None else min(chains, os.cpu_count() or 1)
    if workers > 1 and chains > 1:
        # warm the compile cache before forking so children reuse it
        _warm_kernel()
        ctx = get_context("fork")
        with ctx.Pool(processes=min(workers, chains)) as pool:
            outs = pool.map(_run_chain, jobs)
    else:
        outs = [_run_chain(j) for j in jobs]

    series: dict[Word, list[np.ndarray]] = {w: [] for w in words}
    acc, steps = [], []
    drift = 0.0
    sq_drift = 0.0
    veto = 0
    for out in outs:
        for w, s in zip(words, out["series"]):
            series[w].append(s)
        st = out["stats"]
        acc.append(float(st[0]))
        steps.append(float(st[1]))
        drift = max(drift, float(st[2]))
        sq_drift = max(sq_drift, float(st[5]))
        veto += int(st[3])
    if drift > 1e-8:
        raise ArithmeticError(
            f"incremental energy drifted {drift:.2e} relative against the "
            "periodic recomputation; sampler state is corrupt")
    return MCResult(spec=spec, couplings=tuple(float(t) for t in couplings),
                    config=config, words=tuple(words), series=series,
                    cadence={w: int(c) for w, c in zip(words, cadence)},
                    acceptance_rates=tuple(acc), final_steps=tuple(steps),
                    max_energy_drift=drift, max_square_drift=sq_drift,
                    veto_count=veto)


_WARMED = False


def _warm_kernel() -> None:
    global _WARMED
    if _WARMED or not HAS_NUMBA:
        _WARMED = True
        return
    spec = StarSpec(((0, 0),), 1)
    cfg = MCConfig(n=2, sweeps=2, burn_in=1, chains=1, seed=1)
    pow_coef, mix_coef = encode_potential(spec, [Fraction(0)])
    kinds, c1, c2, cadence, flat, off = encode_words([(0,), (0, 0)])
    A = np.zeros((1, 2, 2), np.complex128)
    A2 = np.zeros((1, 2, 2), np.complex128)
    out = np.zeros((2, 2), np.complex128)
    cnt = np.zeros(2, np.int64)
    st = np.zeros(8)
    _mc_kernel(A, A2, pow_coef, mix_coef, cfg.burn_in, cfg.sweeps, 0.1,
               0.0, False, 1, kinds, c1, c2, cadence, flat, off,
               out, cnt, st)
    _WARMED = True


# ---------------------------------------------------------------------------
# Loop-equation residuals from samples.
# ---------------------------------------------------------------------------

def residual_words(spec: StarSpec, word: Word, color: int) -> tuple[Word, ...]:
    """Every word whose trace the residual estimator for (word, color)
    needs: include these in the sampler's measurement list."""
    word = tuple(word)
    needed: set[Word] = {(color,) + word}
    for q, pieces in _force_pieces(spec, color):
        for piece in pieces:
            needed.add(piece + word)
    for left, right in nc_derivative(word, color):
        needed.add(left)
        needed.add(right)
    needed.discard(())
    return tuple(sorted(needed))


def _force_pieces(spec: StarSpec, color: int):
    """Cyclic-derivative pieces of q + q* for each interaction word."""
    out = []
    for q in spec.star_words:
        pieces = (cyclic_derivative(q, color)
                  + cyclic_derivative(reverse_word(q), color))
        out.append((q, pieces))
    return out


@dataclass(frozen=True)
class ResidualEstimate:
    word: Word
    color: int
    value: float
    stderr: float
    n_samples: int


def sd_residual(result: MCResult, word: Word, color: int,
                ) -> ResidualEstimate:
    """Sample estimate of E mu((X_i + force_i) P) - E mu x mu (split_i P).

    This vanishes for the exact finite-N model without cutoff (it is the
    integration-by-parts identity), so its size in units of its standard
    error is a direct health check of the sampler.
    """
    spec = result.spec
    word = tuple(word)
    grid = 1
    needed = set(residual_words(spec, word, color))
    for w in needed:
        if w not in result.series:
            raise ValueError(f"sampler did not measure {w}; include "
                             "residual_words(...) in the measurement list")
        grid = max(grid, result.cadence[w])
    for w in needed:
        if grid % result.cadence[w] != 0:
            raise ValueError("measurement cadences are not alignable")

    res_chains: list[np.ndarray] = []
    for chain_idx in range(len(next(iter(result.series.values())))):
        def tr(w: Word) -> np.ndarray:
            s = result.series[w][chain_idx]
            stride = grid // result.cadence[w]
            return s[::stride]

        length = None
        for w in needed:
            arr = tr(w)
            length = arr.size if length is None else min(length, arr.size)
        acc = np.zeros(length, np.complex128)
        acc += tr((color,) + word)[:length]
        for (q, pieces), t in zip(_force_pieces(spec, color),
                                  result.couplings):
            if t == 0.0:
                continue
            for piece in pieces:
                acc += t * tr(piece + word)[:length]
        for left, right in nc_derivative(word, color):
            lv = tr(left)[:length] if left else 1.0
            rv = tr(right)[:length] if right else 1.0
            acc -= lv * rv
        res_chains.append(acc.real)
    mean, stderr, total = batch_means(res_chains)
    return ResidualEstimate(word=word, color=color, value=mean,
                            stderr=stderr, n_samples=total)
