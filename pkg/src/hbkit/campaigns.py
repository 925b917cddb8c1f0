"""Seeded identity campaigns over random kernel data.

Each campaign returns one residual per sample so that callers can report
the whole distribution, not just a pass/fail bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bernstein import random_family
from .kernels import (
    TWO_PI_I,
    KernelCombination,
    gram_matrix,
    hardy_norm_sq,
    hb_inner_product,
    hb_norm,
    kernel_eval,
    kernel_power_by_recurrence,
    representation_terms,
    rho_norm_sq,
    companion_g,
)
from .quadrature import QuadratureSpec
from .symbol import SymbolFunction

__all__ = [
    "DEFAULT_BOX",
    "random_points",
    "reproducing_residuals",
    "gram_checks",
    "decomposition_residuals",
    "representation_residuals",
    "recurrence_residuals",
    "boundary_derivative_ratio",
]

DEFAULT_BOX = (-3.0, 3.0, 0.1, 3.0)


def random_points(rng: np.random.Generator, count: int, box=DEFAULT_BOX) -> np.ndarray:
    x0, x1, y0, y1 = box
    xs = rng.uniform(x0, x1, count)
    ys = np.exp(rng.uniform(math.log(y0), math.log(y1), count))
    return xs + 1j * ys


def reproducing_residuals(symbol: SymbolFunction, pairs: int, seed: int, box=DEFAULT_BOX) -> np.ndarray:
    """|<f, k_w>_b - 2 pi i f(w)| / max(1, |2 pi i f(w)|) for random (f, w)."""
    fam = random_family(symbol, pairs, seed, box)
    ws = random_points(np.random.default_rng([seed, 1]), pairs, box)
    out = []
    for f, w in zip(fam, ws):
        lhs = hb_inner_product(f, KernelCombination.single(symbol, w))
        rhs = TWO_PI_I * complex(f(w))
        out.append(abs(lhs - rhs) / max(1.0, abs(rhs)))
    return np.array(out)


@dataclass(frozen=True)
class GramCheck:
    hermitian_error: float
    min_eigenvalue: float
    max_eigenvalue: float


def gram_checks(symbol: SymbolFunction, count: int, seed: int, box=DEFAULT_BOX) -> GramCheck:
    """Asymmetry of the unsymmetrized Gram matrix and its spectrum."""
    nodes = random_points(np.random.default_rng([seed, 2]), count, box)
    raw = gram_matrix(symbol, nodes, symmetrize=False)
    herm = float(np.abs(raw - raw.conj().T).max() / np.abs(raw).max())
    ev = np.linalg.eigvalsh(0.5 * (raw + raw.conj().T))
    return GramCheck(herm, float(ev[0]), float(ev[-1]))


def decomposition_residuals(symbol: SymbolFunction, count: int, seed: int,
                            spec: QuadratureSpec = QuadratureSpec(), box=DEFAULT_BOX) -> np.ndarray:
    """| ||f||_2^2 + ||g||_rho^2 - ||f||_b^2 | / ||f||_b^2 with quadrature on the right."""
    out = []
    for f in random_family(symbol, count, seed, box):
        exact = hb_norm(f) ** 2
        rhs = hardy_norm_sq(f, spec) + rho_norm_sq(companion_g(f), symbol, spec)
        out.append(abs(rhs - exact) / exact)
    return np.array(out)


def representation_residuals(symbol: SymbolFunction, count: int, seed: int, n: int,
                             spec: QuadratureSpec = QuadratureSpec(), box=DEFAULT_BOX):
    """(relative residuals, |second integral|) of the derivative representation."""
    fam = random_family(symbol, count, seed, box)
    z0s = random_points(np.random.default_rng([seed, 3]), count, box)
    res, second = [], []
    for f, z0 in zip(fam, z0s):
        lhs, hardy, rho_term = representation_terms(f, z0, n, spec)
        res.append(abs(lhs - hardy - rho_term) / (abs(lhs) if lhs != 0 else 1.0))
        second.append(abs(rho_term))
    return np.array(res), np.array(second)


def recurrence_residuals(symbol: SymbolFunction, count: int, seed: int, ell: int, box=DEFAULT_BOX) -> np.ndarray:
    """Relative gap between the recurrence and the direct kernel power."""
    rng = np.random.default_rng([seed, 4, ell])
    zs = random_points(rng, count, box)
    z0s = random_points(rng, count, box)
    out = []
    for z, z0 in zip(zs, z0s):
        direct = complex(kernel_eval(symbol, z0, z)) ** (ell + 1)
        rec = complex(kernel_power_by_recurrence(symbol, z0, ell, z))
        out.append(abs(rec - direct) / abs(direct))
    return np.array(out)


def boundary_derivative_ratio(symbol: SymbolFunction, xs, ys) -> float:
    """max |b'(x+iy)| / |b'(x)| over a grid, x off the spectrum."""
    sp = symbol.spectrum()
    worst = 0.0
    for x in xs:
        if sp.contains(x) or x in symbol.breakpoints():
            continue
        bound = symbol.angular_derivative_modulus(x)
        z = x + 1j * np.asarray(ys, dtype=float)
        vals = np.abs(np.asarray(symbol.derivative(z, 1)))
        worst = max(worst, float(vals.max() / bound))
    return worst
