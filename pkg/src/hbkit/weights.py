"""Bernstein weights w_{p,n} built from two L^q kernel norms.

For a point z of the closed upper half-plane and q = p/(p-1),

    norm1 = || (k_z)^(n+1) ||_q,        norm2 = || rho^(1/q) K_{z,n} ||_q,

where K_{z,n} is the kernel of the modified derivative representation,
and w_{p,n}(z) = min(norm1, norm2)^(-pn/(pn+1)) with a vanishing norm
dropping out of the minimum.  Whole grids of points are integrated in one
batched adaptive run.

Near an atom of the singular measure b(t) turns infinitely often, so a
short window around every atom is left out of norm1 and the omitted part
is bounded instead: ``slack`` is an upper bound for it relative to
norm1^q.  The computed norm1 is then a lower bound and w an upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .kernels import kernel_eval
from .quadrature import QuadratureSpec, integrate_lines, peak_hints
from .symbol import SymbolFunction, step_outer_symbol

__all__ = [
    "WeightEvaluation",
    "conjugate_exponent",
    "weight",
    "weights",
    "weight_lower_bound_ratio",
    "lower_bound_factor",
    "example42_ratio",
    "zero_symbol_weight",
    "inverse_square_segment_integral",
    "kernel_lq_norm",
    "monotonicity_probe",
]


def conjugate_exponent(p: float) -> float:
    if not 1 < p <= 2:
        raise ValueError(f"p must lie in (1, 2], got {p}")
    return p / (p - 1.0)


@dataclass(frozen=True)
class WeightEvaluation:
    z: complex
    p: float
    n: int
    norm1: float
    norm2: float
    slack: float = 0.0

    @property
    def q(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def exponent(self) -> float:
        return self.p * self.n / (self.p * self.n + 1.0)

    def branch(self, norm: float) -> float:
        if norm == 0.0:
            return math.inf
        if math.isinf(norm):
            return 0.0
        return norm ** (-self.exponent)

    @property
    def w(self) -> float:
        if complex(self.z).imag == 0 and (math.isinf(self.norm1) or math.isinf(self.norm2)):
            return 0.0
        return min(self.branch(self.norm1), self.branch(self.norm2))


def zero_symbol_weight(z: complex, p: float, n: int) -> float:
    """Closed form for b = 0: norm1^q = sqrt(pi) G(s - 1/2)/G(s) y^(1-2s), s = (n+1)q/2."""
    q = conjugate_exponent(p)
    y = complex(z).imag
    if y <= 0:
        return 0.0
    s = 0.5 * (n + 1) * q
    log_int = 0.5 * math.log(math.pi) + math.lgamma(s - 0.5) - math.lgamma(s) + (1 - 2 * s) * math.log(y)
    log_norm1 = log_int / q
    return math.exp(-(p * n / (p * n + 1.0)) * log_norm1)


def _rho_intervals(symbol: SymbolFunction) -> list[tuple[float, float]]:
    if symbol.is_zero:
        return [(-math.inf, math.inf)]
    return [(p.alpha, p.beta) for p in symbol.outer.pieces if p.level < 0]


ATOM_WINDOW_TURNS = 2000


def _atom_windows(symbol: SymbolFunction) -> list[tuple[float, float]]:
    """(atom, half-width) with about ATOM_WINDOW_TURNS turns of b outside the window."""
    out = []
    bp = symbol.breakpoints()
    for at in symbol.singular.atoms:
        half = at.mass / (math.pi * ATOM_WINDOW_TURNS)
        others = [abs(at.t - x) for x in bp if x != at.t]
        if others:
            half = min(half, 0.25 * min(others))
        out.append((at.t, half))
    return out


def _real_node_ok(symbol: SymbolFunction, x: float, n: int) -> bool:
    return symbol.in_E(x, 2 * n + 2)


def weights(
    symbol: SymbolFunction,
    zs: Sequence[complex],
    p: float,
    n: int,
    spec: QuadratureSpec = QuadratureSpec(),
    second_norm: bool = True,
) -> list[WeightEvaluation]:
    """Weights at many points, both norms integrated in one batched run.

    ``second_norm=False`` drops the rho-weighted norm, which changes
    nothing for inner symbols.
    """
    q = conjugate_exponent(p)
    if n < 1:
        raise ValueError("n must be positive")
    zs = [complex(z) for z in zs]
    if any(z.imag < 0 for z in zs):
        raise ValueError("weights are defined on the closed upper half-plane")
    m = len(zs)
    norm1 = np.full(m, math.nan)
    norm2 = np.zeros(m)
    slack = np.zeros(m)
    live = []
    for i, z in enumerate(zs):
        if z.imag == 0 and not _real_node_ok(symbol, z.real, n):
            norm1[i] = norm2[i] = math.inf
        else:
            live.append(i)
    if not live:
        return [WeightEvaluation(z, p, n, float(a), float(b)) for z, a, b in zip(zs, norm1, norm2)]

    zl = np.array([zs[i] for i in live])
    if symbol.is_zero:
        for j, i in enumerate(live):
            w = zero_symbol_weight(zl[j], p, n)
            norm1[i] = w ** (-(p * n + 1.0) / (p * n))
        return [WeightEvaluation(z, p, n, float(a), float(b)) for z, a, b in zip(zs, norm1, norm2)]

    interior = zl.imag > 0
    bz = np.ones(zl.size, dtype=complex)
    if np.any(interior):
        bz[interior] = symbol.eval(zl[interior])
    if not np.all(interior):
        bz[~interior] = symbol.eval(zl[~interior].real)
    cbz = np.conj(bz)
    power1 = (n + 1) * q
    bpts = list(symbol.breakpoints())

    def first(t, owner):
        z = zl[owner][:, None]
        bt = np.asarray(symbol.eval(t))
        k = (1.0 - cbz[owner][:, None] * bt) / (t - np.conj(z))
        real_rows = np.nonzero(zl[owner].imag == 0)[0]
        for o in np.unique(owner[real_rows]):
            rows = real_rows[owner[real_rows] == o]
            k[rows] = kernel_eval(symbol, zl[o], t[rows])
        return np.abs(k) ** power1

    jobs = []
    slack_abs = np.zeros(zl.size)
    for j, z in enumerate(zl):
        pts = bpts + peak_hints([z])
        cuts = []
        for at, half in _atom_windows(symbol):
            gap = abs(z - at)
            if gap < 4.0 * half:
                continue
            cuts.append((at - half, at + half))
            slack_abs[j] += 2.0 * half * ((1.0 + abs(bz[j])) / (gap - half)) ** power1
        lo = -math.inf
        for c0, c1 in cuts:
            jobs.append((pts, lo, c0, j))
            lo = c1
        jobs.append((pts, lo, math.inf, j))
    res1 = integrate_lines(first, jobs, zl.size, spec)

    rho_iv = _rho_intervals(symbol) if second_norm else []
    res2 = None
    if rho_iv:
        coef = [math.comb(n + 1, j + 1) * (-1) ** j for j in range(n + 1)]

        def second(t, owner):
            c0 = cbz[owner][:, None]
            bt = np.asarray(symbol.eval(t))
            s = np.zeros(t.shape, dtype=complex)
            for j in range(n, -1, -1):
                s = s * (c0 * bt) + coef[j]
            frak = c0 * s / (t - np.conj(zl[owner][:, None])) ** (n + 1)
            return np.asarray(symbol.rho(t)) * np.abs(frak) ** q

        jobs2 = [
            (bpts + peak_hints([z]), lo, hi, j) for j, z in enumerate(zl) for lo, hi in rho_iv if cbz[j] != 0
        ]
        res2 = integrate_lines(second, jobs2, zl.size, spec)

    for j, i in enumerate(live):
        if res1.non_integrable(j):
            norm1[i] = math.inf
        else:
            res1.raise_for(j)
            val = float(res1.values[j])
            norm1[i] = val ** (1.0 / q)
            slack[i] = slack_abs[j] / val if val > 0 else 0.0
        if res2 is not None:
            if res2.non_integrable(j):
                norm2[i] = math.inf
            else:
                res2.raise_for(j)
                norm2[i] = max(float(res2.values[j]), 0.0) ** (1.0 / q)
    return [
        WeightEvaluation(z, p, n, float(a), float(b), float(c)) for z, a, b, c in zip(zs, norm1, norm2, slack)
    ]


def weight(
    symbol: SymbolFunction, z: complex, p: float, n: int = 1, spec: QuadratureSpec = QuadratureSpec()
) -> WeightEvaluation:
    return weights(symbol, [z], p, n, spec)[0]


def lower_bound_factor(symbol: SymbolFunction, z: complex, p: float, n: int) -> float:
    """(1 - |b(z)|)^(pn/(q(pn+1))) / (Im z)^n, so that w times it is the lower-bound ratio."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("the lower bound is stated for the open half-plane")
    q = conjugate_exponent(p)
    e = p * n / (q * (p * n + 1.0))
    bmod = 0.0 if symbol.is_zero else abs(symbol.eval(z))
    return (1.0 - bmod) ** e / z.imag**n


def weight_lower_bound_ratio(
    symbol: SymbolFunction, z, p: float, n: int = 1, spec: QuadratureSpec = QuadratureSpec()
):
    """w(z) (1 - |b(z)|)^(pn/(q(pn+1))) / (Im z)^n at one point or a list of points."""
    single = np.ndim(z) == 0
    zs = [complex(v) for v in np.atleast_1d(z)]
    if any(v.imag <= 0 for v in zs):
        raise ValueError("the lower bound is stated for the open half-plane")
    evals = weights(symbol, zs, p, n, spec)
    out = [ev.w * lower_bound_factor(symbol, v, p, n) for v, ev in zip(zs, evals)]
    return out[0] if single else np.array(out)


def example42_ratio(eps: float, y, q: float, spec: QuadratureSpec = QuadratureSpec()):
    """norm2 / norm1 for the step outer symbol (|b| = eps on [-1, 1]) at z = iy, n = 1."""
    p = q / (q - 1.0)
    symbol = step_outer_symbol(eps)
    single = np.ndim(y) == 0
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(ys <= 0):
        raise ValueError("y must be positive")
    evals = weights(symbol, [1j * v for v in ys], p, 1, spec)
    ratios = np.array([ev.norm2 / ev.norm1 for ev in evals])
    return float(ratios[0]) if single else ratios


def kernel_lq_norm(symbol: SymbolFunction, z: complex, q: float, power: int = 1,
                   spec: QuadratureSpec = QuadratureSpec()) -> float:
    """|| (k_z)^power ||_q, +inf when the integral diverges."""
    z = complex(z)
    res = integrate_lines(
        lambda t, _o: np.abs(np.asarray(kernel_eval(symbol, z, t))) ** (power * q),
        [(list(symbol.breakpoints()) + peak_hints([z]), -math.inf, math.inf, 0)],
        1,
        spec,
    )
    if res.non_integrable(0):
        return math.inf
    res.raise_for(0)
    return float(res.values[0]) ** (1.0 / q)


def inverse_square_segment_integral(
    symbol: SymbolFunction, z1: complex, z2: complex, p: float,
    spec: QuadratureSpec = QuadratureSpec(), samples: int = 0,
) -> float:
    """Arc-length integral of w_p^(-2) along [z1, z2]; +inf when w vanishes on it.

    The weight itself is a quadrature result, so the outer integral uses a
    fixed composite Gauss rule (``samples`` nodes, chosen from the segment
    geometry when 0) with its nodes batched into one weight run.
    """
    z1, z2 = complex(z1), complex(z2)
    length = abs(z2 - z1)
    if length == 0:
        return 0.0
    if symbol.is_zero:
        # w = c Im z exactly
        c = zero_symbol_weight(1j, p, 1)
        y1, y2 = z1.imag, z2.imag
        if min(y1, y2) <= 0:
            return math.inf
        if y1 == y2:
            return length / (c * y1) ** 2
        return length / abs(y2 - y1) * abs(1.0 / y1 - 1.0 / y2) / c**2
    nodes, wts = _segment_rule(z1, z2, samples)
    ev = weights(symbol, list(nodes), p, 1, spec)
    ws = np.array([e.w for e in ev])
    if np.any(ws == 0):
        return math.inf
    return float(np.sum(wts / ws**2))


def _segment_rule(z1: complex, z2: complex, samples: int):
    """Composite Gauss-Legendre nodes on [z1, z2], graded towards a low end."""
    length = abs(z2 - z1)
    ymin = max(min(z1.imag, z2.imag), 1e-12)
    panels = max(4, int(math.ceil(4 * math.log2(2 + length / ymin))))
    order = 8 if samples == 0 else max(2, samples // panels)
    x, w = np.polynomial.legendre.leggauss(order)
    # grade panels geometrically towards the endpoint closer to the axis
    frac = np.linspace(0.0, 1.0, panels + 1)
    if abs(z1.imag - z2.imag) > 1e-12:
        g = (np.exp(frac * 4.0) - 1.0) / (math.exp(4.0) - 1.0)
        frac = g if z1.imag < z2.imag else 1.0 - g[::-1]
    nodes, wts = [], []
    for s0, s1 in zip(frac[:-1], frac[1:]):
        mid, half = 0.5 * (s0 + s1), 0.5 * (s1 - s0)
        s = mid + half * x
        nodes.append(z1 + s * (z2 - z1))
        wts.append(w * half * length)
    return np.concatenate(nodes), np.concatenate(wts)


def monotonicity_probe(
    symbol: SymbolFunction, xs: Iterable[float], ys: Sequence[float], q: float,
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """Largest ratio ||k_{x+iy1}||_q / ||k_{x+iy2}||_q over y2 <= y1 (a grid probe)."""
    ys = sorted(float(v) for v in ys)
    worst = 0.0
    for x in xs:
        norms = [kernel_lq_norm(symbol, complex(x, y), q, 1, spec) for y in ys]
        for i in range(len(ys)):
            for j in range(i + 1):
                if norms[j] > 0:
                    worst = max(worst, norms[i] / norms[j])
    return worst

