"""Contractive analytic symbols on the upper half-plane.

A symbol is stored through its canonical factorization with finite data:
a finite Blaschke product, a singular inner part exp(iaz) times finitely
many atoms, and an outer part whose boundary log-modulus is piecewise
constant.  Everything here is closed form; no quadrature is involved.

All evaluators accept scalars or numpy arrays.  Real arguments are taken
as boundary values with a +0 imaginary part, so that logarithms of negative
reals land on the upper side of the cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = [
    "SingularPointError",
    "BlaschkeZero",
    "Atom",
    "OuterPiece",
    "BlaschkeData",
    "SingularData",
    "OuterData",
    "Spectrum",
    "SymbolFunction",
    "eval_b",
    "eval_b_derivative",
    "angular_derivative_modulus",
    "s_n",
    "spectrum",
    "step_outer_symbol",
    "log_power_outer_symbol",
]

MAX_DERIVATIVE_ORDER = 4


class SingularPointError(ValueError):
    """Evaluation requested at an atom, a piece endpoint, or below the axis."""


@dataclass(frozen=True)
class BlaschkeZero:
    z: complex
    multiplicity: int = 1
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        if not self.z.imag > 0:
            raise ValueError(f"Blaschke zero must lie in the upper half-plane, got {self.z}")
        if int(self.multiplicity) != self.multiplicity or self.multiplicity < 1:
            raise ValueError("multiplicity must be a positive integer")
        object.__setattr__(self, "multiplicity", int(self.multiplicity))
        if not 0.0 <= self.phase < 2 * math.pi:
            raise ValueError("phase must lie in [0, 2*pi)")


@dataclass(frozen=True)
class Atom:
    t: float
    mass: float

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ValueError("atom location must be finite")
        if not self.mass > 0:
            raise ValueError("atom mass must be positive")


@dataclass(frozen=True)
class OuterPiece:
    """log|b| = level on [alpha, beta]; one end may be infinite."""

    alpha: float
    beta: float
    level: float

    def __post_init__(self):
        if not self.alpha < self.beta:
            raise ValueError("piece needs alpha < beta")
        if math.isinf(self.alpha) and math.isinf(self.beta):
            raise ValueError("a piece may be unbounded on one side only")
        if not (self.level <= 0 and math.isfinite(self.level)):
            raise ValueError("piece level must be finite and nonpositive")

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.alpha) and math.isfinite(self.beta)

    def endpoints(self) -> tuple[float, ...]:
        return tuple(e for e in (self.alpha, self.beta) if math.isfinite(e))


@dataclass(frozen=True)
class BlaschkeData:
    zeros: tuple[BlaschkeZero, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "zeros", tuple(self.zeros))


@dataclass(frozen=True)
class SingularData:
    exp_mass: float = 0.0
    atoms: tuple[Atom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(sorted(self.atoms, key=lambda a: a.t)))
        if not (self.exp_mass >= 0 and math.isfinite(self.exp_mass)):
            raise ValueError("exp_mass must be finite and nonnegative")
        ts = [a.t for a in self.atoms]
        if len(set(ts)) != len(ts):
            raise ValueError("atom locations must be distinct")


@dataclass(frozen=True)
class OuterData:
    pieces: tuple[OuterPiece, ...] = ()

    def __post_init__(self):
        pieces = tuple(sorted(self.pieces, key=lambda p: p.alpha))
        object.__setattr__(self, "pieces", pieces)
        for left, right in zip(pieces[:-1], pieces[1:]):
            if right.alpha < left.beta:
                raise ValueError("outer pieces must have disjoint interiors")


@dataclass(frozen=True)
class Spectrum:
    """Closed subset of the real line: finitely many points and intervals."""

    points: tuple[float, ...] = ()
    intervals: tuple[tuple[float, float], ...] = ()
    everything: bool = False

    @property
    def empty(self) -> bool:
        return not (self.everything or self.points or self.intervals)

    def contains(self, x: float) -> bool:
        if self.everything:
            return True
        return x in self.points or any(a <= x <= b for a, b in self.intervals)

    def distance(self, x: float) -> float:
        if self.everything:
            return 0.0
        d = math.inf
        for p in self.points:
            d = min(d, abs(x - p))
        for a, b in self.intervals:
            d = min(d, max(a - x, 0.0, x - b))
        return d

    def meets(self, lo: float, hi: float) -> bool:
        """True when the closed interval [lo, hi] intersects the set."""
        if self.everything:
            return True
        return any(lo <= p <= hi for p in self.points) or any(
            a <= hi and b >= lo for a, b in self.intervals
        )


def _as_complex(z) -> tuple[np.ndarray, bool]:
    arr = np.asarray(z)
    scalar = arr.ndim == 0
    out = np.empty(arr.shape, dtype=complex)
    out.real = np.real(arr)
    # +0.0 turns a possible -0.0 into +0.0 so that log(-x) = log x + i pi
    out.imag = np.imag(arr) + 0.0
    return out, scalar


def _ret(arr: np.ndarray, scalar: bool):
    if scalar:
        v = arr[()]
        return complex(v) if np.iscomplexobj(arr) else float(v)
    return arr


def _piece_log_term(z: np.ndarray, piece: OuterPiece) -> np.ndarray:
    """Integral of 1/(z-t) + t/(t^2+1) over the piece, principal logs."""
    a, b = piece.alpha, piece.beta
    if math.isinf(a):
        # primitive -log(z-t) + log(t^2+1)/2 tends to 0 as t -> -inf
        return -np.log(z - b) + 0.5 * math.log(b * b + 1.0)
    if math.isinf(b):
        # and to -i*pi as t -> +inf
        return -1j * math.pi + np.log(z - a) - 0.5 * math.log(a * a + 1.0)
    return np.log(z - a) - np.log(z - b) + 0.5 * (math.log(b * b + 1.0) - math.log(a * a + 1.0))


def _piece_power_integral(x: float, piece: OuterPiece, n: float) -> float:
    """Integral of |x-t|^(-n) over the piece, for x outside the closed piece."""
    a, b = piece.alpha, piece.beta
    if x > b:
        near, far = x - b, x - a
    else:
        near, far = a - x, b - x
    if n == 1:
        return math.inf if math.isinf(far) else math.log(far / near)
    if n < 1 and math.isinf(far):
        return math.inf
    far_term = 0.0 if math.isinf(far) else far ** (1.0 - n)
    return (near ** (1.0 - n) - far_term) / (n - 1.0)


def _piece_interior_power_integral(x: float, piece: OuterPiece, n: float) -> float:
    """Same integral for x inside the closed piece (finite only for n < 1)."""
    if n >= 1 or not piece.bounded:
        return math.inf
    return ((x - piece.alpha) ** (1.0 - n) + (piece.beta - x) ** (1.0 - n)) / (1.0 - n)


@dataclass(frozen=True)
class SymbolFunction:
    """A point b of the unit ball of bounded analytic functions.

    ``is_zero`` marks the symbol b = 0, for which H(b) is the Hardy space.
    ``cls`` is a user-declared connected-level-set flag used by the
    embedding tests.
    """

    blaschke: BlaschkeData = field(default_factory=BlaschkeData)
    singular: SingularData = field(default_factory=SingularData)
    outer: OuterData = field(default_factory=OuterData)
    is_zero: bool = False
    name: str = ""
    cls: bool = False

    def __post_init__(self):
        if self.is_zero and (
            self.blaschke.zeros or self.singular.atoms or self.singular.exp_mass or self.outer.pieces
        ):
            raise ValueError("the zero symbol carries no factorization data")
        atom_ts = {a.t for a in self.singular.atoms}
        for p in self.outer.pieces:
            for t in atom_ts:
                if p.alpha <= t <= p.beta:
                    raise ValueError("atoms may not sit on outer pieces")

    # construction helpers

    @classmethod
    def zero(cls, name: str = "zero") -> "SymbolFunction":
        return cls(is_zero=True, name=name)

    @classmethod
    def factored(
        cls,
        zeros: Iterable = (),
        exp_mass: float = 0.0,
        atoms: Iterable = (),
        pieces: Iterable = (),
        name: str = "",
        cls_flag: bool = False,
    ) -> "SymbolFunction":
        """Build from plain tuples: zeros (z[, mult[, phase]]), atoms (t, m), pieces (a, b, c)."""
        zs = tuple(z if isinstance(z, BlaschkeZero) else BlaschkeZero(*_tuplify(z)) for z in zeros)
        ats = tuple(a if isinstance(a, Atom) else Atom(*a) for a in atoms)
        ps = tuple(p if isinstance(p, OuterPiece) else OuterPiece(*p) for p in pieces)
        return cls(
            BlaschkeData(zs), SingularData(float(exp_mass), ats), OuterData(ps), name=name, cls=cls_flag
        )

    @property
    def is_inner(self) -> bool:
        return not self.is_zero and all(p.level == 0 for p in self.outer.pieces)

    @property
    def has_exp_factor(self) -> bool:
        return self.singular.exp_mass > 0

    def breakpoints(self) -> tuple[float, ...]:
        """Atoms and finite piece endpoints, sorted."""
        pts = {a.t for a in self.singular.atoms}
        for p in self.outer.pieces:
            pts.update(p.endpoints())
        return tuple(sorted(pts))

    def _check_domain(self, z: np.ndarray) -> None:
        if np.any(z.imag < 0):
            raise SingularPointError("argument lies in the lower half-plane")
        real = z.imag == 0
        if not np.any(real):
            return
        bp = self.breakpoints()
        if bp and np.any(np.isin(z.real[real], bp)):
            bad = z.real[real][np.isin(z.real[real], bp)][0]
            raise SingularPointError(f"boundary evaluation at singular point {bad!r}")

    # evaluation

    def _blaschke(self, z: np.ndarray) -> np.ndarray:
        out = np.ones(z.shape, dtype=complex)
        for zr in self.blaschke.zeros:
            w = zr.z
            factor = np.exp(1j * zr.phase) * (z - w) / (z - w.conjugate())
            out = out * factor**zr.multiplicity
        return out

    def _log_exponential(self, z: np.ndarray) -> np.ndarray:
        """Logarithm of the singular inner times outer part."""
        h = 1j * self.singular.exp_mass * z
        for at in self.singular.atoms:
            h = h - (1j / math.pi) * at.mass * (1.0 / (z - at.t) + at.t / (at.t * at.t + 1.0))
        for p in self.outer.pieces:
            if p.level != 0:
                h = h + (1j / math.pi) * p.level * _piece_log_term(z, p)
        return h

    def eval(self, z):
        zz, scalar = _as_complex(z)
        if self.is_zero:
            self._check_domain(zz)
            return _ret(np.zeros(zz.shape, dtype=complex), scalar)
        self._check_domain(zz)
        return _ret(self._blaschke(zz) * np.exp(self._log_exponential(zz)), scalar)

    __call__ = eval

    def _log_derivatives(self, z: np.ndarray, k: int) -> np.ndarray:
        """k-th derivative (k >= 1) of the log of the exponential part."""
        sign_fact = (-1) ** k * math.factorial(k)
        h = np.zeros(z.shape, dtype=complex)
        if k == 1:
            h = h + 1j * self.singular.exp_mass
        for at in self.singular.atoms:
            h = h - (1j / math.pi) * at.mass * sign_fact * (z - at.t) ** (-(k + 1))
        c_k = (-1) ** (k - 1) * math.factorial(k - 1)
        for p in self.outer.pieces:
            if p.level == 0:
                continue
            term = np.zeros(z.shape, dtype=complex)
            if math.isfinite(p.alpha):
                term = term + (z - p.alpha) ** (-k)
            if math.isfinite(p.beta):
                term = term - (z - p.beta) ** (-k)
            h = h + (1j / math.pi) * p.level * c_k * term
        return h

    def derivatives(self, z, order: int) -> np.ndarray:
        """Stack of b, b', ..., b^(order) along a new leading axis."""
        if not 0 <= order <= MAX_DERIVATIVE_ORDER:
            raise ValueError(f"derivative order must lie in 0..{MAX_DERIVATIVE_ORDER}")
        zz, _ = _as_complex(z)
        self._check_domain(zz)
        m = order
        if self.is_zero:
            return np.zeros((m + 1,) + zz.shape, dtype=complex)
        # exponential part E = exp(h): E^(j) = sum_k C(j-1,k) h^(k+1) E^(j-1-k)
        hd = [None] + [self._log_derivatives(zz, k) for k in range(1, m + 1)]
        e = [np.exp(self._log_exponential(zz))]
        for j in range(1, m + 1):
            acc = np.zeros(zz.shape, dtype=complex)
            for k in range(j):
                acc = acc + math.comb(j - 1, k) * hd[k + 1] * e[j - 1 - k]
            e.append(acc)
        # Blaschke factors multiplied in one at a time with Leibniz
        prod = [np.ones(zz.shape, dtype=complex)] + [np.zeros(zz.shape, dtype=complex)] * m
        for zr in self.blaschke.zeros:
            w = zr.z
            rot = np.exp(1j * zr.phase)
            d = zz - w.conjugate()
            phi = [rot * (zz - w) / d]
            for k in range(1, m + 1):
                phi.append(-rot * 2j * w.imag * (-1) ** k * math.factorial(k) / d ** (k + 1))
            for _ in range(zr.multiplicity):
                prod = _leibniz(prod, phi, m)
        return np.stack(_leibniz(prod, e, m))

    def derivative(self, z, order: int):
        if not 1 <= order <= MAX_DERIVATIVE_ORDER:
            raise ValueError(f"derivative order must lie in 1..{MAX_DERIVATIVE_ORDER}")
        _, scalar = _as_complex(z)
        return _ret(self.derivatives(z, order)[order], scalar)

    # boundary quantities

    def boundary_modulus(self, t):
        """|b(t)| for real t (atoms count as modulus 1, a null set)."""
        tt = np.asarray(t, dtype=float)
        scalar = tt.ndim == 0
        if self.is_zero:
            return _ret(np.zeros(tt.shape), scalar)
        out = np.ones(tt.shape)
        for p in self.outer.pieces:
            inside = (tt > p.alpha) & (tt < p.beta)
            out = np.where(inside, math.exp(p.level), out)
        return _ret(out, scalar)

    def rho(self, t):
        """1 - |b(t)|^2 on the real line."""
        m = self.boundary_modulus(t)
        return 1.0 - np.square(m) if not np.isscalar(m) else 1.0 - m * m

    def angular_derivative_modulus(self, x: float) -> float:
        x = float(x)
        if self.is_zero:
            return math.inf
        total = self.singular.exp_mass
        for zr in self.blaschke.zeros:
            total += zr.multiplicity * 2.0 * zr.z.imag / abs(x - zr.z) ** 2
        for at in self.singular.atoms:
            if x == at.t:
                return math.inf
            total += at.mass / (math.pi * (x - at.t) ** 2)
        for p in self.outer.pieces:
            if p.level == 0:
                continue
            if p.alpha <= x <= p.beta:
                return math.inf
            total += abs(p.level) * _piece_power_integral(x, p, 2.0) / math.pi
        return total

    def s_n(self, x: float, n: float) -> float:
        """Ahern-Clark type sum; no 1/pi factor and no factor 2 on zeros."""
        x = float(x)
        if not n > 0:
            raise ValueError("n must be positive")
        if self.is_zero:
            return math.inf
        total = 0.0
        for zr in self.blaschke.zeros:
            total += zr.multiplicity * zr.z.imag / abs(x - zr.z) ** n
        for at in self.singular.atoms:
            if x == at.t:
                return math.inf
            total += at.mass / abs(x - at.t) ** n
        for p in self.outer.pieces:
            if p.level == 0:
                continue
            if p.alpha <= x <= p.beta:
                val = _piece_interior_power_integral(x, p, n) if p.alpha < x < p.beta else math.inf
            else:
                val = _piece_power_integral(x, p, n)
            total += abs(p.level) * val
        return total

    def in_E(self, x: float, n: float) -> bool:
        return math.isfinite(self.s_n(x, n))

    def spectrum(self) -> Spectrum:
        if self.is_zero:
            return Spectrum(everything=True)
        pts = tuple(sorted({a.t for a in self.singular.atoms}))
        ivs = tuple((p.alpha, p.beta) for p in self.outer.pieces if p.level != 0)
        # drop atoms that already sit at an interval endpoint
        pts = tuple(t for t in pts if not any(a <= t <= b for a, b in ivs))
        return Spectrum(points=pts, intervals=ivs)

    def singular_distance(self, x: float) -> float:
        """Distance from real x to atoms and piece endpoints."""
        bp = self.breakpoints()
        return min((abs(x - t) for t in bp), default=math.inf)

    def unimodular_at(self, x: float) -> bool:
        """|b(x)| = 1 with b analytic across x (x real)."""
        if self.is_zero:
            return False
        if x in self.breakpoints():
            return False
        return all(not (p.alpha < x < p.beta) or p.level == 0 for p in self.outer.pieces)

    def ratio_log(self, x: float, z) -> np.ndarray:
        """log(b(z)/b(x)) for real x with |b(x)| = 1 and z near x.

        Built factor by factor from log1p terms so that it stays accurate
        when z is very close to x.  Valid for |z - x| below half the
        distance from x to the singular set.
        """
        zz, _ = _as_complex(z)
        dz = zz - x
        out = 1j * self.singular.exp_mass * dz
        for zr in self.blaschke.zeros:
            w = zr.z
            out = out + zr.multiplicity * np.log1p(
                dz * (w - w.conjugate()) / ((zz - w.conjugate()) * (x - w))
            )
        for at in self.singular.atoms:
            out = out - (1j / math.pi) * at.mass * (x - zz) / ((zz - at.t) * (x - at.t))
        for p in self.outer.pieces:
            if p.level == 0:
                continue
            term = np.zeros(zz.shape, dtype=complex)
            if math.isfinite(p.alpha):
                term = term + np.log1p(dz / (x - p.alpha))
            if math.isfinite(p.beta):
                term = term - np.log1p(dz / (x - p.beta))
            out = out + (1j / math.pi) * p.level * term
        return out

    def describe(self) -> str:
        if self.is_zero:
            return "zero"
        parts = []
        if self.blaschke.zeros:
            parts.append(f"{len(self.blaschke.zeros)} zeros")
        if self.singular.exp_mass:
            parts.append(f"exp({self.singular.exp_mass:g}iz)")
        if self.singular.atoms:
            parts.append(f"{len(self.singular.atoms)} atoms")
        if self.outer.pieces:
            parts.append(f"{len(self.outer.pieces)} outer pieces")
        return ", ".join(parts) or "constant 1"


def _tuplify(z):
    if isinstance(z, (complex, float, int)):
        return (complex(z),)
    return tuple(z)


def _leibniz(f: list, g: list, m: int) -> list:
    return [sum(math.comb(j, k) * f[k] * g[j - k] for k in range(j + 1)) for j in range(m + 1)]


def step_outer_symbol(eps: float, alpha: float = -1.0, beta: float = 1.0, name: str = "") -> SymbolFunction:
    """Outer function with |b| = eps on [alpha, beta] and |b| = 1 elsewhere."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    return SymbolFunction.factored(
        pieces=[(alpha, beta, math.log(eps))], name=name or f"step_outer_{eps:g}"
    )


def log_power_outer_symbol(name: str = "log_power_outer") -> SymbolFunction:
    """exp((i/pi) log z): modulus exp(-1) on the negative axis, 1 on the positive."""
    return SymbolFunction.factored(pieces=[(-math.inf, 0.0, -1.0)], name=name, cls_flag=True)


# thin functional wrappers


def eval_b(symbol: SymbolFunction, z):
    return symbol.eval(z)


def eval_b_derivative(symbol: SymbolFunction, z, order: int):
    zz, _ = _as_complex(z)
    if np.any(zz.imag <= 0):
        raise SingularPointError("derivatives are taken in the open upper half-plane")
    return symbol.derivative(z, order)


def angular_derivative_modulus(symbol: SymbolFunction, x: float) -> float:
    return symbol.angular_derivative_modulus(x)


def s_n(symbol: SymbolFunction, x: float, n: float) -> float:
    return symbol.s_n(x, n)


def spectrum(symbol: SymbolFunction) -> Spectrum:
    return symbol.spectrum()
