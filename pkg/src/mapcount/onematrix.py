"""Equilibrium measure for one-color interactions.

In the large-size limit the spectral measure of a single random matrix
with weight exp(-N tr(A^2/2 + V(A))) minimizes an energy functional;
for a one-cut polynomial potential the minimizer is supported on a
single interval [a, b] with density

    psi(x) = (1 / 2 pi) sqrt((x - a)(b - x)) h(x),

where h is a polynomial.  Writing W'(s) = s + V'(s) for the effective
force, the endpoints solve the two constraint integrals

    (1/pi) int_a^b W'(s) / sqrt((s - a)(b - s)) ds = 0
    (1/pi) int_a^b s W'(s) / sqrt((s - a)(b - s)) ds = 2

and h comes from the finite difference quotient of W' against the
arcsine weight.  With V = 0 this gives the semicircle on [-2, 2] with
h = 1, and the moments of psi reproduce the engine's planar counts,
which is what the tests lean on.

All integrals here have polynomial integrands against Chebyshev
weights, so Gauss-Chebyshev quadrature is exact once the node count
clears half the degree; the solver still doubles nodes and checks
stability rather than trusting degree bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, pi
from typing import Sequence

import numpy as np

from .potential import StarSpec


def effective_force_coeffs(spec: StarSpec, couplings: Sequence[Fraction | float],
                           ) -> np.ndarray:
    """Coefficients (ascending) of W'(s) = s + V'(s) for a one-color spec.

    Each interaction term q_j = x^d contributes t_j (q + q*) = 2 t_j x^d
    to V, hence 2 d_j t_j s^(d_j - 1) to the force.
    """
    if spec.num_colors != 1:
        raise ValueError("equilibrium solver handles exactly one color")
    if len(couplings) != spec.num_terms:
        raise ValueError("one coupling per interaction term required")
    deg = max((len(q) for q in spec.star_words), default=1)
    coeffs = np.zeros(max(deg, 2), dtype=float)
    coeffs[1] = 1.0
    for q, t in zip(spec.star_words, couplings):
        d = len(q)
        coeffs[d - 1] += 2.0 * d * float(t)
    return coeffs


def _difference_quotient_coeffs(force_w: np.ndarray) -> np.ndarray:
    """Given W' in the scaled variable w (ascending coeffs), return the
    polynomial h~(w) with h(x) = h~(w)/half, using

        (1/pi) int (v^k - w^k)/(v - w) dw/sqrt(1-w^2)
            = sum_j C(2j, j) 4^(-j) v^(k-1-2j).
    """
    out = np.zeros(max(len(force_w) - 1, 1), dtype=float)
    for k, gamma in enumerate(force_w):
        if k == 0 or gamma == 0.0:
            continue
        for j in range(0, (k - 1) // 2 + 1):
            out[k - 1 - 2 * j] += gamma * comb(2 * j, j) / 4.0 ** j
    return out


@dataclass
class EquilibriumMeasure:
    a: float
    b: float
    force_coeffs: np.ndarray      # W' in x, ascending
    h_w_coeffs: np.ndarray        # h~ in w = (2x - a - b)/(b - a); h = h~/half
    endpoint_residual: float
    nodes_used: int
    newton_iterations: int

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.b - self.a)

    def h(self, x):
        w = (np.asarray(x, dtype=float) - self.midpoint) / self.half_width
        return _polyval(self.h_w_coeffs, w) / self.half_width

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x - self.a) * (self.b - x)
        out = np.where(inside > 0.0,
                       np.sqrt(np.maximum(inside, 0.0)) * self.h(x) / (2.0 * pi),
                       0.0)
        return out

    def moment(self, k: int, nodes: int = 256) -> float:
        """int x^k psi(x) dx by Gauss-Chebyshev (second kind); exact for
        polynomial h once nodes clear the degree."""
        j = np.arange(1, nodes + 1)
        theta = j * pi / (nodes + 1)
        v = np.cos(theta)
        weights = (pi / (nodes + 1)) * np.sin(theta) ** 2
        x = self.midpoint + self.half_width * v
        hv = _polyval(self.h_w_coeffs, v) / self.half_width
        integrand = x ** k * hv
        return float(self.half_width ** 2 / (2.0 * pi)
                     * np.sum(weights * integrand))

    def mass(self, nodes: int = 256) -> float:
        return self.moment(0, nodes)


def _polyval(coeffs_ascending: np.ndarray, x):
    out = np.zeros_like(np.asarray(x, dtype=float))
    for c in coeffs_ascending[::-1]:
        out = out * x + c
    return out


def _endpoint_equations(force: np.ndarray, a: float, b: float, nodes: int,
                        ) -> np.ndarray:
    """The two constraint integrals as averages over first-kind Chebyshev
    nodes: (1/n) sum W'(s_k) and (1/n) sum s_k W'(s_k) - 2."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    k = np.arange(1, nodes + 1)
    theta = (2 * k - 1) * pi / (2 * nodes)
    s = mid + half * np.cos(theta)
    ws = _polyval(force, s)
    return np.array([np.mean(ws), np.mean(s * ws) - 2.0])


def solve_equilibrium(spec: StarSpec, couplings: Sequence[Fraction | float],
                      nodes: int = 64, tol: float = 1e-12,
                      max_nodes: int = 4096, max_newton: int = 80,
                      initial: tuple[float, float] = (-2.0, 2.0),
                      ) -> EquilibriumMeasure:
    """Newton-solve the endpoint equations, doubling quadrature nodes until
    the residual is stable, then assemble the density."""
    force = effective_force_coeffs(spec, couplings)

    def newton(n: int, a: float, b: float) -> tuple[float, float, int]:
        for it in range(1, max_newton + 1):
            f = _endpoint_equations(force, a, b, n)
            if np.max(np.abs(f)) < tol:
                return a, b, it
            step = 1e-7 * max(1.0, abs(a), abs(b))
            jac = np.empty((2, 2))
            jac[:, 0] = (_endpoint_equations(force, a + step, b, n)
                         - _endpoint_equations(force, a - step, b, n)) / (2 * step)
            jac[:, 1] = (_endpoint_equations(force, a, b + step, n)
                         - _endpoint_equations(force, a, b - step, n)) / (2 * step)
            try:
                delta = np.linalg.solve(jac, -f)
            except np.linalg.LinAlgError as exc:
                raise ArithmeticError(
                    f"singular endpoint Jacobian at ({a}, {b})") from exc
            # stay in the sane region a < b
            scale = 1.0
            while b + scale * delta[1] - (a + scale * delta[0]) <= 1e-9:
                scale *= 0.5
                if scale < 1e-12:
                    raise ArithmeticError("endpoint Newton collapsed the cut")
            a += scale * delta[0]
            b += scale * delta[1]
        raise ArithmeticError(
            f"endpoint Newton did not reach {tol} in {max_newton} iterations"
        )

    a, b = initial
    n = nodes
    iters = 0
    while True:
        a, b, iters = newton(n, a, b)
        check = _endpoint_equations(force, a, b, 2 * n)
        if np.max(np.abs(check)) < 10 * tol or n >= max_nodes:
            break
        n *= 2
    residual = float(np.max(np.abs(_endpoint_equations(force, a, b, 2 * n))))

    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    # W' in the scaled variable w: substitute s = mid + half * w
    deg = len(force)
    force_w = np.zeros(deg)
    for k, c in enumerate(force):
        if c == 0.0:
            continue
        # (mid + half w)^k expanded
        for j in range(k + 1):
            force_w[j] += c * comb(k, j) * half ** j * mid ** (k - j)
    h_w = _difference_quotient_coeffs(force_w)

    return EquilibriumMeasure(a=a, b=b, force_coeffs=force,
                              h_w_coeffs=h_w, endpoint_residual=residual,
                              nodes_used=n, newton_iterations=iters)
