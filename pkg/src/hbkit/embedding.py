"""Carleson-type embeddings of H(b) into L^2(mu) for discrete measures.

Three views of the same question: the geometric test on squares meeting
the extended level set, the square-family criterion with slice integrals
of w_p^(-2), and the kernel test with Poisson-type integrals.  Embedding
constants are measured on kernel families with exact H(b) norms.

The single-kernel inequality behind the necessity direction: with
f = k_z, ||k_z||_b^2 = pi (1 - |b(z)|^2) / Im z and
|1 - conj(b(z)) b(u)| >= 1 - |b(z)|, so

    (1 - |b(z)|) * P_mu(z) <= pi (1 + |b(z)|) * ||k_z||_mu^2 / ||k_z||_b^2,

where P_mu(z) is the integral of Im z / |u - conj(z)|^2 against mu.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bernstein import corollary54_probe, random_family
from .geometry import (
    CarlesonSquare,
    DiscreteMeasure,
    LevelSetOracle,
    RestrictedCarlesonResult,
    carleson_constant,
    level_set_components,
    restricted_carleson_check,
)
from .kernels import KernelCombination, gram_matrix, hb_norm, kernel_norm_sq
from .quadrature import QuadratureSpec
from .symbol import SymbolFunction
from .weights import inverse_square_segment_integral

__all__ = [
    "PoissonResult",
    "EmbeddingConstant",
    "EmbeddingVerdict",
    "SquareFamilyResult",
    "poisson_integral",
    "kernel_poisson_test",
    "embedding_family",
    "empirical_embedding_constant",
    "single_kernel_ratio",
    "embedding_check_thm61",
    "embedding_check_thm62",
    "embedding_verdict",
    "cls_warning",
    "kernel_approximation_error",
]


def poisson_integral(mu: DiscreteMeasure, z: complex) -> float:
    """Integral of Im z / |u - conj(z)|^2 over mu, in closed form."""
    z = complex(z)
    x, y = z.real, z.imag
    if y <= 0:
        raise ValueError("the Poisson integral is taken at points with Im z > 0")
    total = 0.0
    for pt, m in zip(mu.points, mu.masses):
        total += m * y / abs(pt - z.conjugate()) ** 2
    for s in mu.segments:
        d = s.density
        if s.horizontal:
            c = s.z1.imag + y
            a, b = s.z1.real - x, s.z2.real - x
            total += d * y / c * (math.atan(b / c) - math.atan(a / c))
        else:
            u = abs(s.z1.real - x)
            c1, c2 = s.z1.imag + y, s.z2.imag + y
            if u == 0:
                total += d * y * (1.0 / c1 - 1.0 / c2)
            else:
                total += d * y / u * (math.atan(c2 / u) - math.atan(c1 / u))
    return total


@dataclass(frozen=True)
class PoissonResult:
    value: float
    witness: complex | None
    values: tuple[float, ...]
    grid: tuple[complex, ...]
    necessary_and_sufficient: bool


def kernel_poisson_test(symbol: SymbolFunction, mu: DiscreteMeasure, grid: Sequence[complex]) -> PoissonResult:
    """sup over the grid of (1 - |b(z)|) P_mu(z).

    Only for symbols flagged with connected level sets is the verdict
    labelled necessary and sufficient.
    """
    grid = tuple(complex(z) for z in grid)
    if not grid:
        raise ValueError("empty grid")
    vals = []
    for z in grid:
        bmod = 0.0 if symbol.is_zero else abs(symbol.eval(z))
        vals.append((1.0 - bmod) * poisson_integral(mu, z))
    i = int(np.argmax(vals))
    return PoissonResult(float(vals[i]), grid[i], tuple(vals), grid, bool(symbol.cls or symbol.is_zero))


def _legal_node(symbol: SymbolFunction, z: complex) -> bool:
    if z.imag > 0:
        return True
    return not symbol.is_zero and symbol.in_E(z.real, 2)


def embedding_family(
    symbol: SymbolFunction,
    mu: DiscreteMeasure,
    grid: Sequence[complex] = (),
    size: int = 32,
    seed: int = 0,
    box: tuple[float, float, float, float] = (-3.0, 3.0, 0.1, 3.0),
) -> list[KernelCombination]:
    """Kernels at support points and grid points, then seeded random combinations.

    The single kernels make the one-point extremal problems exact; the
    random part probes interactions.
    """
    pts = []
    for z in list(mu.support_points()) + [complex(g) for g in grid]:
        if _legal_node(symbol, z) and z not in pts:
            pts.append(z)
    fam = [KernelCombination.single(symbol, z) for z in pts]
    if size:
        fam += random_family(symbol, size, seed, box)
    return fam


@dataclass(frozen=True)
class EmbeddingConstant:
    value: float
    witness: int
    ratios: tuple[float, ...]


def _mu_norm(f: KernelCombination, nodes: np.ndarray, wts: np.ndarray) -> float:
    if nodes.size == 0:
        return 0.0
    vals = np.asarray(f(nodes))
    return math.sqrt(float(np.sum(wts * np.abs(vals) ** 2)))


def empirical_embedding_constant(
    symbol: SymbolFunction, mu: DiscreteMeasure, family: Sequence[KernelCombination],
) -> EmbeddingConstant:
    """sup over the family of ||f||_{L^2(mu)} / ||f||_b."""
    if mu.empty:
        return EmbeddingConstant(0.0, -1, tuple(0.0 for _ in family))
    nodes, wts = mu.nodes_and_weights()
    ratios = []
    for f in family:
        ratios.append(_mu_norm(f, nodes, wts) / hb_norm(f))
    i = int(np.argmax(ratios)) if ratios else -1
    return EmbeddingConstant(float(ratios[i]) if ratios else 0.0, i, tuple(ratios))


def single_kernel_ratio(symbol: SymbolFunction, mu: DiscreteMeasure, z: complex) -> float:
    """||k_z||_mu^2 / ||k_z||_b^2 with the closed-form denominator."""
    f = KernelCombination.single(symbol, z)
    nodes, wts = mu.nodes_and_weights()
    return _mu_norm(f, nodes, wts) ** 2 / kernel_norm_sq(symbol, z)


@dataclass(frozen=True)
class EmbeddingVerdict:
    measure_id: str
    symbol_id: str
    eps: float | None
    geometric: RestrictedCarlesonResult | None = None
    poisson: PoissonResult | None = None
    empirical: EmbeddingConstant | None = None

    def summary(self) -> str:
        lines = [f"measure: {self.measure_id}", f"symbol: {self.symbol_id}"]
        if self.eps is not None:
            lines.append(f"level: {self.eps:.12g}")
        g = self.geometric
        if g is not None:
            sq = "none" if g.square is None else f"x0={g.square.x0:.12g} h={g.square.h:.12g}"
            lines.append(
                f"geometric: {'pass' if g.passed else 'fail'} value={g.value:.12g} bound={g.bound:.12g} "
                f"plain={g.plain_value:.12g} square={sq}"
            )
        if self.poisson is not None:
            kind = "necessary-and-sufficient" if self.poisson.necessary_and_sufficient else "necessary"
            w = self.poisson.witness
            lines.append(f"poisson ({kind}): value={self.poisson.value:.12g} witness={w.real:.12g}{w.imag:+.12g}i")
        if self.empirical is not None:
            lines.append(f"empirical constant: {self.empirical.value:.12g} witness={self.empirical.witness}")
        return "\n".join(lines) + "\n"

    def witness_csv(self) -> str:
        buf = io.StringIO()
        buf.write("re,im,poisson_value\n")
        if self.poisson is not None:
            for z, v in zip(self.poisson.grid, self.poisson.values):
                buf.write(f"{z.real:.12g},{z.imag:.12g},{v:.12e}\n")
        return buf.getvalue()


def embedding_check_thm61(symbol: SymbolFunction, eps: float, mu: DiscreteMeasure, K: float) -> EmbeddingVerdict:
    """Geometric sufficient condition: mu(S) <= K h on squares meeting the extended level set."""
    oracle = LevelSetOracle(symbol, eps)
    res = restricted_carleson_check(mu, oracle, K)
    return EmbeddingVerdict(mu.name, symbol.name or symbol.describe(), eps, geometric=res)


@dataclass(frozen=True)
class SquareFamilyResult:
    lower_side_constant: float
    slice_constant: float
    mass_constant: float
    slice_values: tuple[tuple[float, ...], ...]

    @property
    def passed(self) -> bool:
        return all(math.isfinite(v) for v in (self.lower_side_constant, self.slice_constant, self.mass_constant))


def embedding_check_thm62(
    symbol: SymbolFunction,
    squares: Sequence[CarlesonSquare],
    mu: DiscreteMeasure,
    p: float,
    spec: QuadratureSpec = QuadratureSpec(),
    levels: int = 4,
) -> SquareFamilyResult:
    """Square-family criterion.

    Reports the Carleson constant of the summed lower sides, the sup of
    |I_k| times the w_p^(-2) slice integrals over levels+1 heights per
    square, and sup mu(S_k)/|I_k|.  Slices on the real axis use the
    interval probe, which detects divergence at atoms and spectrum.
    """
    if not squares:
        raise ValueError("no squares given")
    missing = mu.support_within(squares)
    if missing:
        raise ValueError(f"measure support leaves the squares: {missing[0]}")
    sides = DiscreteMeasure.from_lists(
        segments=[(s.x0, s.y0, s.x1, s.y0, 1.0) for s in squares], name="lower sides"
    )
    lower = carleson_constant(sides)
    slices = []
    worst = 0.0
    for sq in squares:
        row = []
        for j in range(levels + 1):
            y = sq.y0 + sq.h * j / levels
            if y == 0:
                val = corollary54_probe(symbol, (sq.x0, sq.x1), p, spec).integral
            else:
                val = inverse_square_segment_integral(symbol, complex(sq.x0, y), complex(sq.x1, y), p, spec)
            row.append(sq.h * val)
        slices.append(tuple(row))
        worst = max(worst, max(row))
    mass = max(mu.mass_of(sq, 1e-12) / sq.h for sq in squares)
    return SquareFamilyResult(lower, worst, mass, tuple(slices))


def embedding_verdict(
    symbol: SymbolFunction,
    mu: DiscreteMeasure,
    grid: Sequence[complex],
    eps: float | None = None,
    K: float | None = None,
    family: Sequence[KernelCombination] | None = None,
) -> EmbeddingVerdict:
    """All available tests on one instance."""
    geo = None
    if eps is not None and K is not None:
        geo = restricted_carleson_check(mu, LevelSetOracle(symbol, eps), K)
    fam = list(family) if family is not None else embedding_family(symbol, mu, grid)
    return EmbeddingVerdict(
        mu.name,
        symbol.name or symbol.describe(),
        eps,
        geometric=geo,
        poisson=kernel_poisson_test(symbol, mu, grid),
        empirical=empirical_embedding_constant(symbol, mu, fam),
    )


def cls_warning(symbol: SymbolFunction, eps: float, box: tuple[float, float, float, float],
                resolution: int = 200) -> str | None:
    """A warning when a symbol flagged with connected level sets samples as disconnected."""
    if not symbol.cls:
        return None
    count = level_set_components(LevelSetOracle(symbol, eps), box, resolution)
    if count > 1:
        return f"sampled level set at {eps:g} shows {count} components inside the box"
    return None


def kernel_approximation_error(symbol: SymbolFunction, target: complex, nodes: Sequence[complex]) -> float:
    """Relative distance from k_target to the span of the kernels at nodes.

    Exact Gram algebra: the residual of the orthogonal projection, computed
    on the unit-diagonal Gram matrix by least squares.  ``target`` may be a
    boundary point of E_2(b); nodes are meant to lie in the open half-plane.
    """
    nodes = [complex(w) for w in nodes]
    if not nodes:
        return 1.0
    G = gram_matrix(symbol, [complex(target)] + nodes)
    d = np.sqrt(np.real(np.diag(G)))
    G = G / np.outer(d, d)
    coef, *_ = np.linalg.lstsq(G[1:, 1:], G[1:, 0], rcond=1e-13)
    captured = float(np.real(np.vdot(G[1:, 0], coef)))
    return math.sqrt(max(1.0 - captured, 0.0))
