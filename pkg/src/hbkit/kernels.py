"""Reproducing kernels of H(b) and the Gram algebra built on them.

The kernel at a node w is k_w(z) = (1 - conj(b(w)) b(z)) / (z - conj(w)),
with the reproducing identity <f, k_w>_b = 2 pi i f(w).  Inner products of
kernel combinations are therefore exact finite sums; quadrature is used
only for the L^2 cross-checks at the bottom of this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .quadrature import QuadratureSpec, integrate_line, peak_hints
from .symbol import SingularPointError, SymbolFunction, _as_complex, _ret

__all__ = [
    "KernelCombination",
    "CompanionFunction",
    "kernel_eval",
    "kernel_diagonal",
    "higher_kernel",
    "kernel_power_by_recurrence",
    "frak_kernel",
    "rho_kernel",
    "gram_matrix",
    "hb_inner_product",
    "hb_norm",
    "kernel_norm_sq",
    "companion_g",
    "derivative_eval",
    "representation_check",
    "representation_terms",
    "hardy_norm_sq",
    "rho_norm_sq",
]

TWO_PI_I = 2j * math.pi


def _check_node(symbol: SymbolFunction, w: complex, order: int = 2) -> complex:
    w = complex(w)
    if w.imag < 0:
        raise ValueError(f"node {w} lies below the real axis")
    if w.imag == 0 and not symbol.in_E(w.real, order):
        raise ValueError(f"boundary node {w.real} is not in E_{order}(b)")
    return w


def _near_diagonal(symbol: SymbolFunction, x: float, z: np.ndarray) -> np.ndarray:
    """Mask of z close enough to the real node x for the log1p form."""
    return np.abs(z - x) < 0.5 * symbol.singular_distance(x)


def kernel_eval(symbol: SymbolFunction, w: complex, z):
    """k_w(z); boundary nodes use a cancellation-free form near the node."""
    w = _check_node(symbol, w)
    zz, scalar = _as_complex(z)
    if symbol.is_zero:
        return _ret(1.0 / (zz - w.conjugate()), scalar)
    if w.imag > 0:
        bw = symbol.eval(w)
        return _ret((1.0 - np.conj(bw) * symbol.eval(zz)) / (zz - w.conjugate()), scalar)
    x = w.real
    out = np.empty(zz.shape, dtype=complex)
    at_node = zz == x
    near = _near_diagonal(symbol, x, zz) & ~at_node
    far = ~(near | at_node)
    if np.any(far):
        bx = symbol.eval(x)
        out[far] = (1.0 - np.conj(bx) * symbol.eval(zz[far])) / (zz[far] - x)
    if np.any(near):
        out[near] = -np.expm1(symbol.ratio_log(x, zz[near])) / (zz[near] - x)
    if np.any(at_node):
        out[at_node] = kernel_diagonal(symbol, w) / TWO_PI_I
    return _ret(out, scalar)


def kernel_diagonal(symbol: SymbolFunction, w: complex) -> complex:
    """2 pi i k_w(w) = ||k_w||_b^2 (returned as a complex number)."""
    w = _check_node(symbol, w)
    if symbol.is_zero:
        return complex(math.pi / w.imag)
    if w.imag > 0:
        bw = symbol.eval(w)
        return complex(math.pi * (1.0 - abs(bw) ** 2) / w.imag)
    # boundary node: k_x(x) = -conj(b(x)) b'(x), and 2 pi i k_x(x) = 2 pi |b'(x)|
    d = symbol.derivatives(w.real, 1)
    return complex(TWO_PI_I * (-np.conj(d[0]) * d[1]))


def kernel_norm_sq(symbol: SymbolFunction, w: complex) -> float:
    return kernel_diagonal(symbol, w).real


def _taylor_coefficients(symbol: SymbolFunction, z0: complex, n: int) -> np.ndarray:
    """a_j = b^(j)(z0)/j!, j = 0..n."""
    if symbol.is_zero:
        return np.zeros(n + 1, dtype=complex)
    d = symbol.derivatives(z0, n)
    return np.array([d[j] / math.factorial(j) for j in range(n + 1)], dtype=complex)


def higher_kernel(symbol: SymbolFunction, z0: complex, n: int, z):
    """Kernel for the n-th derivative at z0 (n = 0 gives kernel_eval)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    z0 = _check_node(symbol, z0, 2 * n + 2)
    if n == 0:
        return kernel_eval(symbol, z0, z)
    zz, scalar = _as_complex(z)
    d = zz - z0.conjugate()
    if symbol.is_zero:
        return _ret(d ** (-(n + 1)), scalar)
    a = np.conj(_taylor_coefficients(symbol, z0, n))
    poly = np.zeros(zz.shape, dtype=complex)
    for j in range(n, -1, -1):
        poly = poly * d + a[j]
    return _ret((1.0 - symbol.eval(zz) * poly) / d ** (n + 1), scalar)


def kernel_power_by_recurrence(symbol: SymbolFunction, z0: complex, ell: int, z):
    """(k_z0)^(ell+1)(z) assembled from higher kernels and lower powers."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    zz, scalar = _as_complex(z)
    k = np.asarray(kernel_eval(symbol, z0, zz))
    if ell == 0:
        return _ret(k, scalar)
    b = np.asarray(symbol.eval(zz))
    a = np.conj(_taylor_coefficients(symbol, z0, ell))
    u = 1.0 - a[0] * b
    out = u**ell * np.asarray(higher_kernel(symbol, z0, ell, zz))
    for j in range(1, ell + 1):
        out = out + b * a[j] * u ** (j - 1) * k ** (ell + 1 - j)
    return _ret(out, scalar)


def frak_kernel(symbol: SymbolFunction, z0: complex, n: int, t):
    """The L^2(rho) kernel of the modified derivative representation."""
    if n < 1:
        raise ValueError("n must be positive")
    z0 = _check_node(symbol, z0, 2 * n + 2)
    tt, scalar = _as_complex(t)
    if symbol.is_zero:
        return _ret(np.zeros(tt.shape, dtype=complex), scalar)
    c0 = np.conj(symbol.eval(z0))
    bt = np.asarray(symbol.eval(tt))
    s = np.zeros(tt.shape, dtype=complex)
    for j in range(n + 1):
        s = s + math.comb(n + 1, j + 1) * (-1) ** j * c0**j * bt**j
    return _ret(c0 * s / (tt - z0.conjugate()) ** (n + 1), scalar)


def rho_kernel(symbol: SymbolFunction, z0: complex, n: int, t):
    """The L^2(rho) kernel of the classical derivative representation."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    z0 = _check_node(symbol, z0, 2 * n + 2)
    tt, scalar = _as_complex(t)
    d = tt - z0.conjugate()
    a = np.conj(_taylor_coefficients(symbol, z0, n))
    poly = np.zeros(tt.shape, dtype=complex)
    for j in range(n, -1, -1):
        poly = poly * d + a[j]
    return _ret(poly / d ** (n + 1), scalar)


@dataclass(frozen=True, eq=False)
class KernelCombination:
    """f = sum_j c_j k_{w_j} for nodes w_j in the closed upper half-plane."""

    symbol: SymbolFunction
    nodes: tuple[complex, ...]
    coefficients: tuple[complex, ...]

    def __post_init__(self):
        nodes = tuple(complex(w) for w in self.nodes)
        coefs = tuple(complex(c) for c in self.coefficients)
        if len(nodes) != len(coefs):
            raise ValueError("nodes and coefficients differ in length")
        for w in nodes:
            _check_node(self.symbol, w)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "coefficients", coefs)

    @classmethod
    def single(cls, symbol: SymbolFunction, w: complex, c: complex = 1.0) -> "KernelCombination":
        return cls(symbol, (w,), (c,))

    @property
    def node_array(self) -> np.ndarray:
        return np.array(self.nodes, dtype=complex)

    @property
    def coef_array(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=complex)

    def node_values(self) -> np.ndarray:
        """conj(b(w_j)) for every node (zero for the zero symbol)."""
        if self.symbol.is_zero or not self.nodes:
            return np.zeros(len(self.nodes), dtype=complex)
        return np.conj(np.asarray(self.symbol.eval(self.node_array)))

    @property
    def has_boundary_nodes(self) -> bool:
        return any(w.imag == 0 for w in self.nodes)

    def __call__(self, z):
        return derivative_eval(self, z, 0)

    def scaled(self, factor: complex) -> "KernelCombination":
        return KernelCombination(self.symbol, self.nodes, tuple(c * factor for c in self.coefficients))


@dataclass(frozen=True, eq=False)
class CompanionFunction:
    """g(t) = sum_j e_j / (t - conj(w_j)), the rho-weighted partner of f."""

    nodes: tuple[complex, ...]
    coefficients: tuple[complex, ...]
    experimental: bool = False

    def __call__(self, t):
        tt, scalar = _as_complex(t)
        out = np.zeros(tt.shape, dtype=complex)
        for w, e in zip(self.nodes, self.coefficients):
            if e != 0:
                out = out + e / (tt - w.conjugate())
        return _ret(out, scalar)

    @property
    def vanishes(self) -> bool:
        return all(e == 0 for e in self.coefficients)


def gram_matrix(symbol: SymbolFunction, nodes: Sequence[complex], symmetrize: bool = True) -> np.ndarray:
    """G[j, k] = <k_{w_j}, k_{w_k}>_b = 2 pi i k_{w_j}(w_k).

    The diagonal is always the exact real norm; ``symmetrize=False`` keeps
    the off-diagonal entries as computed, for consistency checks.
    """
    w = np.array([_check_node(symbol, v) for v in nodes], dtype=complex)
    n = w.size
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    if symbol.is_zero:
        bw = np.zeros(n, dtype=complex)
    else:
        interior = w.imag > 0
        bw = np.ones(n, dtype=complex)
        bw[interior] = symbol.eval(w[interior])
        if not np.all(interior):
            bw[~interior] = symbol.eval(w[~interior].real)
    diff = w[None, :] - np.conj(w)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        g = TWO_PI_I * (1.0 - np.conj(bw)[:, None] * bw[None, :]) / diff
    # entries whose denominator vanishes or nearly so come from boundary nodes
    bad = np.abs(diff) < 1e-3 * np.maximum(1.0, np.abs(w)[None, :])
    bad &= (w.imag[None, :] == 0) & (w.imag[:, None] == 0)
    for j, k in zip(*np.nonzero(bad)):
        g[j, k] = TWO_PI_I * kernel_eval(symbol, w[j], w[k])
    # exact Hermitian symmetry and real diagonal
    for j in range(n):
        g[j, j] = kernel_diagonal(symbol, w[j]).real
    return 0.5 * (g + g.conj().T) if symmetrize else g


def hb_inner_product(f: KernelCombination, g: KernelCombination) -> complex:
    if f.symbol is not g.symbol and f.symbol != g.symbol:
        raise ValueError("kernel combinations belong to different symbols")
    if not f.nodes or not g.nodes:
        return 0j
    nodes = f.nodes + g.nodes
    G = gram_matrix(f.symbol, nodes)
    block = G[: len(f.nodes), len(f.nodes) :]
    return complex(f.coef_array @ block @ np.conj(g.coef_array))


def hb_norm(f: KernelCombination) -> float:
    if not f.nodes:
        return 0.0
    G = gram_matrix(f.symbol, f.nodes)
    c = f.coef_array
    return math.sqrt(max(float(np.real(c @ G @ np.conj(c))), 0.0))


def companion_g(f: KernelCombination) -> CompanionFunction:
    """Companion with ||f||_b^2 = ||f||_2^2 + ||g||_rho^2.

    Boundary nodes are accepted when b extends analytically across them;
    the result is then flagged experimental.
    """
    experimental = f.has_boundary_nodes
    for w in f.nodes:
        if w.imag == 0 and not math.isfinite(f.symbol.angular_derivative_modulus(w.real)):
            raise ValueError(f"boundary node {w.real} has no finite angular derivative")
    coefs = f.coef_array * f.node_values()
    return CompanionFunction(f.nodes, tuple(complex(c) for c in coefs), experimental)


def derivative_eval(f: KernelCombination, z, m: int = 0):
    """f^(m)(z) by termwise differentiation, 0 <= m <= 4."""
    if not 0 <= m <= 4:
        raise ValueError("m must lie in 0..4")
    zz, scalar = _as_complex(z)
    if not f.nodes:
        return _ret(np.zeros(zz.shape, dtype=complex), scalar)
    if m == 0 and f.has_boundary_nodes:
        out = np.zeros(zz.shape, dtype=complex)
        for w, c in zip(f.nodes, f.coefficients):
            out = out + c * np.asarray(kernel_eval(f.symbol, w, zz))
        return _ret(out, scalar)
    # f = S0(z) - b(z) S1(z) with S0 = sum c/(z - conj w), S1 = sum c conj(b(w))/(z - conj w)
    c = f.coef_array
    beta = c * f.node_values()
    wbar = np.conj(f.node_array)
    d = zz[..., None] - wbar
    if np.any(d == 0):
        raise SingularPointError("evaluation at the conjugate of a node")
    s0, s1 = [], []
    for k in range(m + 1):
        p = (-1) ** k * math.factorial(k) * d ** (-(k + 1))
        s0.append(p @ c)
        s1.append(p @ beta)
    out = s0[m]
    if not f.symbol.is_zero and np.any(beta != 0):
        bd = f.symbol.derivatives(zz, m)
        for k in range(m + 1):
            out = out - math.comb(m, k) * bd[k] * s1[m - k]
    return _ret(np.asarray(out), scalar)


def _line_points(symbol: SymbolFunction, centres) -> list[float]:
    pts = list(symbol.breakpoints())
    pts += peak_hints(centres)
    return pts


def hardy_norm_sq(f: KernelCombination, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """||f||_2^2 over the real line by quadrature (cross-check only)."""
    if not f.nodes:
        return 0.0
    val = integrate_line(lambda t: np.abs(np.asarray(f(t))) ** 2, _line_points(f.symbol, f.nodes), spec)
    return float(val)


def _rho_support(symbol: SymbolFunction) -> list[tuple[float, float]]:
    if symbol.is_zero:
        return [(-math.inf, math.inf)]
    return [(p.alpha, p.beta) for p in symbol.outer.pieces if p.level < 0]


def rho_norm_sq(g: CompanionFunction, symbol: SymbolFunction, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """int rho |g|^2 over the real line by quadrature (cross-check only)."""
    if g.vanishes:
        return 0.0
    total = 0.0
    pts = peak_hints(g.nodes)
    for lo, hi in _rho_support(symbol):
        total += integrate_line(
            lambda t: np.asarray(symbol.rho(t)) * np.abs(np.asarray(g(t))) ** 2, pts, spec, lo, hi
        )
    return float(total)


def representation_terms(
    f: KernelCombination, z0: complex, n: int, spec: QuadratureSpec = QuadratureSpec()
) -> tuple[complex, complex, complex]:
    """(f^(n)(z0), Hardy-line term, rho-weighted term) of the kernel representation.

    The two terms already carry the factor n!/(2 pi i); the rho term is
    exactly 0 when rho vanishes identically.
    """
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    symbol = f.symbol
    z0 = _check_node(symbol, z0, 2 * n + 2)
    lhs = complex(derivative_eval(f, z0, n))
    pts = _line_points(symbol, list(f.nodes) + [z0])
    factor = math.factorial(n) / TWO_PI_I

    def first(t):
        k = np.asarray(kernel_eval(symbol, z0, t))
        return np.asarray(f(t)) * np.conj(k ** (n + 1))

    hardy = factor * integrate_line(first, pts, spec)
    second = 0j
    g = companion_g(f)
    if not g.vanishes and not symbol.is_zero:
        for lo, hi in _rho_support(symbol):
            second += integrate_line(
                lambda t: np.asarray(g(t))
                * np.asarray(symbol.rho(t))
                * np.conj(np.asarray(frak_kernel(symbol, z0, n, t))),
                pts,
                spec,
                lo,
                hi,
            )
    return lhs, complex(hardy), complex(factor * second)


def representation_check(
    f: KernelCombination, z0: complex, n: int, spec: QuadratureSpec = QuadratureSpec()
) -> float:
    """Relative residual of the kernel representation of f^(n)(z0)."""
    lhs, hardy, second = representation_terms(f, z0, n, spec)
    scale = abs(lhs) if lhs != 0 else 1.0
    return abs(lhs - hardy - second) / scale
