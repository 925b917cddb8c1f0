"""Empirical Bernstein-type inequalities on kernel-combination families.

Every ratio has the exact H(b) norm of the Gram algebra in the
denominator; only the numerators involve quadrature or measure sums.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import DiscreteMeasure, LevelSetOracle, distances
from .kernels import KernelCombination, derivative_eval, hb_norm
from .quadrature import QuadratureSpec, integrate_line, peak_hints
from .symbol import SymbolFunction
from .weights import ATOM_WINDOW_TURNS, weights

__all__ = [
    "BernsteinReport",
    "random_family",
    "kernel_family",
    "bernstein_ratio",
    "paley_wiener_ratio",
    "Corollary53Result",
    "corollary53_check",
    "Corollary54Result",
    "corollary54_probe",
]


def random_family(
    symbol: SymbolFunction,
    size: int,
    seed: int,
    box: tuple[float, float, float, float] = (-3.0, 3.0, 0.1, 3.0),
    terms: int = 3,
) -> list[KernelCombination]:
    """Seeded kernel combinations.

    Node real parts are uniform on [box[0], box[1]], imaginary parts
    log-uniform on [box[2], box[3]], coefficients standard complex normal.
    """
    x0, x1, y0, y1 = box
    if not (x0 < x1 and 0 < y0 <= y1):
        raise ValueError("box must satisfy x0 < x1 and 0 < y0 <= y1")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(size):
        xs = rng.uniform(x0, x1, terms)
        ys = np.exp(rng.uniform(math.log(y0), math.log(y1), terms))
        cs = (rng.standard_normal(terms) + 1j * rng.standard_normal(terms)) / math.sqrt(2.0)
        out.append(KernelCombination(symbol, tuple(xs + 1j * ys), tuple(cs)))
    return out


def kernel_family(symbol: SymbolFunction, points: Sequence[complex]) -> list[KernelCombination]:
    """Single reproducing kernels at the given points."""
    return [KernelCombination.single(symbol, complex(z)) for z in points]


@dataclass(frozen=True)
class BernsteinReport:
    symbol_id: str
    p: float
    n: int
    measure_id: str
    seed: int | None
    ratios: tuple[float, ...]
    numerators: tuple[float, ...]
    norms: tuple[float, ...]
    restricted_constant: float | None = None

    @property
    def max_ratio(self) -> float:
        return max(self.ratios, default=0.0)

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.ratios)) if self.ratios else -1

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("index,ratio,numerator,hb_norm\n")
        for i, (r, a, b) in enumerate(zip(self.ratios, self.numerators, self.norms)):
            buf.write(f"{i},{r:.12e},{a:.12e},{b:.12e}\n")
        return buf.getvalue()


def _weights_at(symbol, nodes, p, n, spec, second_norm):
    ev = weights(symbol, list(nodes), p, n, spec, second_norm=second_norm)
    return np.array([e.w for e in ev])


def bernstein_ratio(
    symbol: SymbolFunction,
    p: float,
    n: int,
    mu: DiscreteMeasure,
    family: Sequence[KernelCombination],
    spec: QuadratureSpec = QuadratureSpec(),
    *,
    seed: int | None = None,
    weighted: bool = True,
    second_norm: bool = True,
    restricted_constant: float | None = None,
) -> BernsteinReport:
    """||f^(n) w_{p,n}||_{L^2(mu)} / ||f||_b for every f of the family.

    Segments of mu are discretized by composite Gauss-Legendre; a mass
    point where w vanishes contributes nothing.  ``weighted=False`` gives
    the unweighted ratio ||f^(n)||_{L^2(mu)} / ||f||_b.
    """
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    if not family:
        raise ValueError("the test family is empty")
    nodes, wts = mu.nodes_and_weights()
    w = _weights_at(symbol, nodes, p, n, spec, second_norm) if weighted and nodes.size else np.ones(nodes.size)
    ratios, nums, norms = [], [], []
    for f in family:
        if f.symbol is not symbol and f.symbol != symbol:
            raise ValueError("family member built on a different symbol")
        norm = hb_norm(f)
        if norm == 0:
            raise ValueError("family member has zero norm")
        if nodes.size:
            d = np.asarray(derivative_eval(f, nodes, n))
            vals = np.where(w == 0, 0.0, np.abs(d * w) ** 2)
            num = math.sqrt(float(np.sum(wts * vals)))
        else:
            num = 0.0
        nums.append(num)
        norms.append(norm)
        ratios.append(num / norm)
    return BernsteinReport(
        symbol.name or symbol.describe(), p, n, mu.name, seed,
        tuple(ratios), tuple(nums), tuple(norms), restricted_constant,
    )


def paley_wiener_ratio(f: KernelCombination, spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-10)) -> float:
    """||f'||_2 / ||f||_b over the whole line.

    For inner symbols ||f||_b is the Hardy norm, so for b = exp(iaz) this is
    the classical Bernstein quotient, bounded by a.
    """
    pts = list(f.symbol.breakpoints()) + peak_hints(f.nodes)
    val = integrate_line(lambda t: np.abs(np.asarray(derivative_eval(f, t, 1))) ** 2, pts, spec)
    return math.sqrt(float(val)) / hb_norm(f)


# level-set corollaries


def _line_rule(centres: Sequence[complex], breaks: Sequence[float], panels: int = 96, order: int = 10):
    """Fixed composite Gauss rule on the line through x = c + s tan(theta).

    Panel edges include the images of breakpoints and of x_j +- y_j 2^k.
    """
    xs = [complex(z).real for z in centres] + list(breaks)
    c = float(np.mean(xs)) if xs else 0.0
    s = max(1.0, float(np.ptp(xs)) if xs else 1.0)
    edges = set(np.linspace(-math.pi / 2, math.pi / 2, panels + 1))
    for z in centres:
        z = complex(z)
        for k in range(4):
            for sgn in (-1, 1):
                edges.add(math.atan((z.real + sgn * z.imag * 2**k - c) / s))
    for b in breaks:
        edges.add(math.atan((b - c) / s))
    e = np.array(sorted(edges))
    g, gw = np.polynomial.legendre.leggauss(order)
    a, b = e[:-1, None], e[1:, None]
    th = 0.5 * (b - a) * g + 0.5 * (a + b)
    wt = 0.5 * (b - a) * gw
    x = c + s * np.tan(th)
    jac = s / np.cos(th) ** 2
    return x.ravel(), (wt * jac).ravel()


@dataclass(frozen=True)
class Corollary53Result:
    eps: float
    n: int
    ratios: tuple[float, ...]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios, default=0.0)


def corollary53_check(
    symbol: SymbolFunction,
    eps: float,
    n: int,
    family: Sequence[KernelCombination],
    panels: int = 48,
    order: int = 8,
) -> Corollary53Result:
    """||f^(n) d_tilde^n||_2 / ||f||_b over the family.

    d_tilde is only Lipschitz, so the line integral uses a fixed composite
    rule whose nodes share one table of distances.
    """
    if symbol.is_zero:
        return Corollary53Result(eps, n, tuple(0.0 for _ in family))
    oracle = LevelSetOracle(symbol, eps)
    sp = symbol.spectrum()
    centres = [w for f in family for w in f.nodes]
    breaks = [e for iv in sp.intervals for e in iv if math.isfinite(e)] + list(sp.points)
    x, wt = _line_rule(centres, breaks, panels, order)
    dt = np.array([0.0 if sp.contains(v) else distances(oracle, v).d_tilde for v in x])
    keep = dt > 0
    x, wt, dt = x[keep], wt[keep], dt[keep]
    ratios = []
    for f in family:
        d = np.asarray(derivative_eval(f, x, n))
        ratios.append(math.sqrt(float(np.sum(wt * np.abs(d) ** 2 * dt ** (2 * n)))) / hb_norm(f))
    return Corollary53Result(eps, n, tuple(ratios))


@dataclass(frozen=True)
class Corollary54Result:
    interval: tuple[float, float]
    p: float
    integral: float
    integral_finite: bool
    spectrum_clear: bool
    b_continuous: bool
    continuity_moduli: tuple[float, ...] = ()
    band_values: dict = field(default_factory=dict)


BAND_LEVELS = 12
GROWTH_RATIO = 0.9


def _discontinuities(symbol: SymbolFunction, a: float, b: float) -> list[float]:
    pts = [at.t for at in symbol.singular.atoms]
    for pc in symbol.outer.pieces:
        if pc.level != 0:
            pts += list(pc.endpoints())
    return sorted({t for t in pts if a <= t <= b})


def _continuity_moduli(symbol: SymbolFunction, a: float, b: float, levels=(3, 4, 5, 6)) -> tuple[float, ...]:
    """Largest jump of b between neighbours of a square grid on S([a, b])."""
    if symbol.is_zero:
        return tuple(0.0 for _ in levels)
    h = b - a
    out = []
    bp = set(symbol.breakpoints())
    for k in levels:
        m = 2**k + 1
        xs = np.linspace(a, b, m)
        ys = np.linspace(0.0, h, m)
        # the bottom row sits just above the axis; breakpoints are nudged
        ys[0] = h * 1e-9
        xs = np.array([x + h * 1e-9 if x in bp else x for x in xs])
        grid = np.asarray(symbol.eval(xs[None, :] + 1j * ys[:, None]))
        jump = max(float(np.abs(np.diff(grid, axis=0)).max()), float(np.abs(np.diff(grid, axis=1)).max()))
        out.append(jump)
    return tuple(out)


def corollary54_probe(
    symbol: SymbolFunction,
    interval: tuple[float, float],
    p: float,
    spec: QuadratureSpec = QuadratureSpec(),
    order: int = 8,
) -> Corollary54Result:
    """Integral of w_p^(-2) over a bounded interval, and the two conclusions.

    A spectral interval overlapping the open interval makes w_p vanish on a
    set of positive measure.  Near isolated singular points the integral is
    split into dyadic bands; bands that stop shrinking geometrically mark
    divergence.  Continuity of b on the Carleson square is decided from the
    factorization data and accompanied by sampled grid moduli.
    """
    a, b = map(float, interval)
    if not (a < b and math.isfinite(a) and math.isfinite(b)):
        raise ValueError("interval must be bounded with a < b")
    sp = symbol.spectrum()
    clear = not sp.everything and not any(a < t < b for t in sp.points) and not any(
        lo < b and hi > a for lo, hi in sp.intervals
    )
    cont = symbol.is_zero or not _discontinuities(symbol, a, b)
    moduli = _continuity_moduli(symbol, a, b)

    def result(value, bands=None):
        return Corollary54Result((a, b), p, value, math.isfinite(value), clear, cont, moduli, bands or {})

    if sp.everything or any(lo < b and hi > a and min(hi, b) > max(lo, a) for lo, hi in sp.intervals):
        return result(math.inf)

    sing = _discontinuities(symbol, a, b)
    g, gw = np.polynomial.legendre.leggauss(order)
    windows = {at.t: at.mass / (math.pi * ATOM_WINDOW_TURNS) for at in symbol.singular.atoms}

    def integrate(pieces):
        lo = np.array([u for u, _ in pieces])
        hi = np.array([v for _, v in pieces])
        x = (0.5 * (hi - lo)[:, None] * (g + 1.0) + lo[:, None]).ravel()
        wt = (0.5 * (hi - lo)[:, None] * gw).ravel()
        w = np.array([e.w for e in weights(symbol, list(x), p, 1, spec)])
        if np.any(w == 0):
            return None
        return (wt / w**2).reshape(len(pieces), order).sum(axis=1)

    # regular part away from the singular points, then dyadic bands
    cuts = sorted({a, b, *sing})
    regular = []
    sides = []  # (point, direction, outer reach, innermost allowed offset)
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        reach = 0.25 * (hi - lo)
        r_lo, r_hi = lo, hi
        if lo in sing:
            r_lo = lo + reach
            sides.append((lo, 1, reach, 8.0 * windows.get(lo, 0.0)))
        if hi in sing:
            r_hi = hi - reach
            sides.append((hi, -1, reach, 8.0 * windows.get(hi, 0.0)))
        edges = np.linspace(r_lo, r_hi, 9)
        regular += list(zip(edges[:-1], edges[1:]))
    reg = integrate(regular)
    if reg is None:
        return result(math.inf)
    total = float(reg.sum())
    band_values: dict[tuple[float, int], list[float]] = {(t, d): [] for t, d, _, _ in sides}
    for level in range(BAND_LEVELS):
        active = [(t, d, r / 2**level) for t, d, r, floor in sides if r / 2 ** (level + 1) >= floor]
        if not active:
            break
        pieces = [tuple(sorted((t + d * off / 2, t + d * off))) for t, d, off in active]
        vals = integrate(pieces)
        if vals is None:
            return result(math.inf, band_values)
        for (t, d, _), v in zip(active, vals):
            seq = band_values[(t, d)]
            seq.append(float(v))
            total += float(v)
            if len(seq) >= 4 and all(seq[-3 + i] >= GROWTH_RATIO * seq[-4 + i] for i in range(3)):
                return result(math.inf, band_values)
    return result(total, band_values)
