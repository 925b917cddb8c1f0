"""Half-plane geometry: Carleson squares, discrete measures, level sets.

Level-set questions reduce to boundary questions through the minimum
principle: on a region free of zeros of b, inf |b| is attained on the
boundary, where real boundary points contribute the lower limit of |b|
from above.  Edges lying in the open half-plane are sampled densely and
the best samples are polished with a bounded scalar minimizer.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import ndimage, optimize

from .quadrature import QuadratureSpec
from .symbol import SymbolFunction, _as_complex, _ret

__all__ = [
    "MEMBERSHIP_TOL",
    "DISTANCE_TOL",
    "pseudohyperbolic",
    "CarlesonSquare",
    "DiscreteMeasure",
    "LevelSetOracle",
    "Distances",
    "distances",
    "carleson_search",
    "carleson_constant",
    "brute_force_carleson",
    "RestrictedCarlesonResult",
    "restricted_carleson_check",
    "VanishingResult",
    "vanishing_carleson_check",
    "derivative_distance_constant",
    "distance_weight_constant",
    "modulus_ratio_bounds",
    "level_set_components",
]

MEMBERSHIP_TOL = 1e-9
DISTANCE_TOL = 1e-4
RADIUS_CAP_FACTOR = 1e6
EDGE_SAMPLES = 257
SQUARE_DEPTH = 12


def pseudohyperbolic(z, w):
    """|z - w| / |z - conj(w)| for points of the open upper half-plane."""
    zz, s1 = _as_complex(z)
    ww, s2 = _as_complex(w)
    if np.any(zz.imag <= 0) or np.any(ww.imag <= 0):
        raise ValueError("pseudohyperbolic distance needs points with Im > 0")
    out = np.abs(zz - ww) / np.abs(zz - np.conj(ww))
    return _ret(out, s1 and s2)


@dataclass(frozen=True)
class CarlesonSquare:
    """Closed square [x0, x0+h] x [y0, y0+h]; y0 = 0 for boundary squares."""

    x0: float
    h: float
    y0: float = 0.0

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError("square side must be positive and finite")
        if not self.y0 >= 0:
            raise ValueError("square must lie in the closed upper half-plane")

    @classmethod
    def on_interval(cls, a: float, b: float) -> "CarlesonSquare":
        """The boundary square with lower side [a, b]."""
        return cls(a, b - a)

    @property
    def x1(self) -> float:
        return self.x0 + self.h

    @property
    def y1(self) -> float:
        return self.y0 + self.h

    def contains(self, z, tol: float = 0.0):
        zz, scalar = _as_complex(z)
        out = (
            (zz.real >= self.x0 - tol)
            & (zz.real <= self.x1 + tol)
            & (zz.imag >= self.y0 - tol)
            & (zz.imag <= self.y1 + tol)
        )
        return bool(out) if scalar else out


@dataclass(frozen=True)
class _Segment:
    z1: complex
    z2: complex
    density: float

    @property
    def horizontal(self) -> bool:
        return self.z1.imag == self.z2.imag

    @property
    def length(self) -> float:
        return abs(self.z2 - self.z1)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely many point masses plus horizontal or vertical segments.

    Segments carry a constant linear density.  Endpoints are reordered so
    that z1 is the left (horizontal) or lower (vertical) end.
    """

    points: tuple[complex, ...] = ()
    masses: tuple[float, ...] = ()
    segments: tuple[_Segment, ...] = ()
    name: str = ""

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.points)
        ms = tuple(float(m) for m in self.masses)
        if len(pts) != len(ms):
            raise ValueError("points and masses must have equal length")
        for p, m in zip(pts, ms):
            if p.imag < 0 or not np.isfinite(p):
                raise ValueError(f"support point {p} lies outside the closed upper half-plane")
            if not (m > 0 and math.isfinite(m)):
                raise ValueError("point masses must be positive and finite")
        segs = []
        for s in self.segments:
            z1, z2 = complex(s.z1), complex(s.z2)
            if min(z1.imag, z2.imag) < 0:
                raise ValueError("segments must lie in the closed upper half-plane")
            if z1 == z2:
                raise ValueError("degenerate segment")
            if z1.imag != z2.imag and z1.real != z2.real:
                raise ValueError("only horizontal and vertical segments are supported")
            if not (s.density > 0 and math.isfinite(s.density)):
                raise ValueError("segment density must be positive and finite")
            if (z2.real, z2.imag) < (z1.real, z1.imag):
                z1, z2 = z2, z1
            segs.append(_Segment(z1, z2, float(s.density)))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", ms)
        object.__setattr__(self, "segments", tuple(segs))

    @classmethod
    def from_lists(cls, masses: Iterable = (), segments: Iterable = (), name: str = "") -> "DiscreteMeasure":
        """masses = [(re, im, m)], segments = [(re1, im1, re2, im2, density)]."""
        masses = list(masses)
        pts = [complex(r, i) for r, i, _ in masses]
        ms = [m for _, _, m in masses]
        segs = [_Segment(complex(a, b), complex(c, d), e) for a, b, c, d, e in segments]
        return cls(tuple(pts), tuple(ms), tuple(segs), name)

    @classmethod
    def point(cls, z: complex, m: float, name: str = "") -> "DiscreteMeasure":
        return cls((complex(z),), (float(m),), (), name)

    @classmethod
    def lebesgue(cls, a: float, b: float, pieces: int = 1, height: float = 0.0, name: str = "") -> "DiscreteMeasure":
        """Lebesgue measure on [a, b] at the given height, split into pieces."""
        cuts = np.linspace(a, b, pieces + 1)
        segs = [_Segment(complex(u, height), complex(v, height), 1.0) for u, v in zip(cuts[:-1], cuts[1:])]
        return cls((), (), tuple(segs), name)

    @property
    def empty(self) -> bool:
        return not self.points and not self.segments

    @property
    def total_mass(self) -> float:
        return float(sum(self.masses) + sum(s.density * s.length for s in self.segments))

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted distinct real parts and heights of all support corners."""
        xs = [p.real for p in self.points]
        ys = [p.imag for p in self.points]
        for s in self.segments:
            xs += [s.z1.real, s.z2.real]
            ys += [s.z1.imag, s.z2.imag]
        return np.unique(np.asarray(xs, dtype=float)), np.unique(np.asarray(ys, dtype=float))

    def support_points(self) -> list[complex]:
        out = list(self.points)
        for s in self.segments:
            out += [s.z1, 0.5 * (s.z1 + s.z2), s.z2]
        return out

    def boundary_atoms(self) -> list[float]:
        return [p.real for p in self.points if p.imag == 0]

    def mass_in(self, x0, h, y0=0.0, tol: float = 0.0):
        """mu of closed squares [x0, x0+h] x [y0, y0+h]; arrays broadcast."""
        x0 = np.asarray(x0, dtype=float)
        h = np.asarray(h, dtype=float)
        y0 = np.asarray(y0, dtype=float)
        x1, y1 = x0 + h, y0 + h
        total = np.zeros(np.broadcast(x0, h, y0).shape)
        for p, m in zip(self.points, self.masses):
            inside = (p.real >= x0 - tol) & (p.real <= x1 + tol) & (p.imag >= y0 - tol) & (p.imag <= y1 + tol)
            total = total + m * inside
        for s in self.segments:
            if s.horizontal:
                c = s.z1.imag
                hit = (c >= y0 - tol) & (c <= y1 + tol)
                overlap = np.clip(np.minimum(x1, s.z2.real) - np.maximum(x0, s.z1.real), 0.0, None)
            else:
                a = s.z1.real
                hit = (a >= x0 - tol) & (a <= x1 + tol)
                overlap = np.clip(np.minimum(y1, s.z2.imag) - np.maximum(y0, s.z1.imag), 0.0, None)
            total = total + s.density * overlap * hit
        return total

    def mass_of(self, square: CarlesonSquare, tol: float = 0.0) -> float:
        return float(self.mass_in(square.x0, square.h, square.y0, tol))

    def nodes_and_weights(self, order: int = 24, pieces: int = 8) -> tuple[np.ndarray, np.ndarray]:
        """Discretization reproducing integrals of smooth functions against mu.

        Point masses are exact; segments use composite Gauss-Legendre.
        """
        nodes = list(self.points)
        wts = list(self.masses)
        g, gw = np.polynomial.legendre.leggauss(order)
        for s in self.segments:
            cuts = np.linspace(0.0, 1.0, pieces + 1)
            for u0, u1 in zip(cuts[:-1], cuts[1:]):
                u = 0.5 * (u1 - u0) * (g + 1.0) + u0
                nodes += list(s.z1 + (s.z2 - s.z1) * u)
                wts += list(0.5 * (u1 - u0) * gw * s.length * s.density)
        return np.asarray(nodes, dtype=complex), np.asarray(wts, dtype=float)

    def integrate(self, func: Callable[[np.ndarray], np.ndarray], order: int = 24, pieces: int = 8) -> float:
        z, w = self.nodes_and_weights(order, pieces)
        if z.size == 0:
            return 0.0
        return float(np.sum(w * np.real(func(z))))

    def support_within(self, squares: Sequence[CarlesonSquare], tol: float = 1e-12) -> list[str]:
        """Names of support pieces not covered by the union of squares."""
        bad = []
        for p in self.points:
            if not any(sq.contains(p, tol) for sq in squares):
                bad.append(f"point mass at {p}")
        for s in self.segments:
            ends = [s.z1, s.z2]
            if not any(all(sq.contains(e, tol) for e in ends) for sq in squares):
                # a segment may straddle adjacent squares; check a fine sample
                us = np.linspace(0.0, 1.0, 65)
                zs = s.z1 + (s.z2 - s.z1) * us
                if not all(any(sq.contains(z, tol) for sq in squares) for z in zs):
                    bad.append(f"segment {s.z1}..{s.z2}")
        return bad


class LevelSetOracle:
    """Membership in the level set |b| < eps and its union with the spectrum.

    Moduli are cached per point; the cache is append-only and guarded by a
    lock, so concurrent readers see consistent answers.
    """

    def __init__(self, symbol: SymbolFunction, eps: float, tol: float = MEMBERSHIP_TOL,
                 edge_samples: int = EDGE_SAMPLES):
        if not 0 < eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        self.symbol = symbol
        self.eps = float(eps)
        self.tol = float(tol)
        self.edge_samples = int(edge_samples)
        self._spectrum = symbol.spectrum()
        self._cache: dict[complex, float] = {}
        self._lock = threading.Lock()

    @property
    def threshold(self) -> float:
        return self.eps + self.tol

    @property
    def cache_size(self) -> int:
        with self._lock:
            return len(self._cache)

    def modulus(self, z):
        zz, scalar = _as_complex(z)
        flat = zz.ravel()
        out = np.empty(flat.size)
        with self._lock:
            missing = []
            for i, v in enumerate(flat):
                hit = self._cache.get(complex(v))
                if hit is None:
                    missing.append(i)
                else:
                    out[i] = hit
        if missing:
            vals = np.abs(self.symbol.eval(flat[missing]))
            out[missing] = vals
            with self._lock:
                for i, v in zip(missing, vals):
                    self._cache.setdefault(complex(flat[i]), float(v))
        return _ret(out.reshape(zz.shape), scalar)

    def in_level_set(self, z) -> bool:
        z = complex(z)
        return z.imag > 0 and self.modulus(z) < self.threshold

    def in_extended_set(self, z) -> bool:
        """Membership in the union of the spectrum and the level set."""
        z = complex(z)
        if z.imag == 0:
            return self._spectrum.contains(z.real)
        return self.in_level_set(z)

    # boundary behaviour

    def point_liminf(self, x: float) -> float:
        """Lower limit of |b(z)| as z tends to real x from above."""
        s = self.symbol
        if s.is_zero:
            return 0.0
        if any(a.t == x for a in s.singular.atoms):
            return 0.0
        out = 1.0
        for p in s.outer.pieces:
            if p.alpha <= x <= p.beta:
                out = min(out, math.exp(p.level))
        return out

    def segment_liminf(self, lo: float, hi: float, closed: bool = True) -> float:
        """Infimum of the boundary lower limits over a real interval."""
        s = self.symbol
        if s.is_zero:
            return 0.0

        def inside(t):
            return lo <= t <= hi if closed else lo < t < hi

        if any(inside(a.t) for a in s.singular.atoms):
            return 0.0
        out = 1.0
        for p in s.outer.pieces:
            meets = (p.alpha <= hi and p.beta >= lo) if closed else (p.alpha < hi and p.beta > lo)
            if meets:
                out = min(out, math.exp(p.level))
        return out

    def _zero_inside(self, pred) -> bool:
        return any(pred(zr.z) for zr in self.symbol.blaschke.zeros)

    def path_minimum(self, path: Callable[[np.ndarray], np.ndarray]) -> tuple[float, complex]:
        """Minimum of |b| along path(u), u in (0, 1), sampled then polished."""
        n = self.edge_samples
        u = (np.arange(n) + 0.5) / n
        vals = np.asarray(self.modulus(path(u)))
        best = float(vals.min())
        arg = complex(path(np.array([u[int(vals.argmin())]]))[0])
        # a dip between samples is no deeper than the largest sample step,
        # so polishing only matters close to the threshold
        if best - self.threshold > 2.0 * float(np.abs(np.diff(vals)).max(initial=0.0)):
            return best, arg
        # polish every interior local minimum among the lowest few
        local = np.flatnonzero(
            (vals <= np.roll(vals, 1)) & (vals <= np.roll(vals, -1))
        )
        local = local[np.argsort(vals[local])][:4]
        for i in local:
            a, b = max(u[i] - 1.0 / n, 0.0), min(u[i] + 1.0 / n, 1.0)
            res = optimize.minimize_scalar(
                lambda v: float(self.modulus(path(np.array([v]))[0])),
                bounds=(a, b), method="bounded", options={"xatol": 1e-10},
            )
            if res.fun < best:
                best = float(res.fun)
                arg = complex(path(np.array([res.x]))[0])
        return best, arg

    def halfdisc_meets(self, x: float, r: float) -> bool:
        """Does the open half-disc of radius r about real x meet the level set?"""
        if self.segment_liminf(x - r, x + r, closed=False) < self.threshold:
            return True
        if self._zero_inside(lambda w: abs(w - x) < r):
            return True
        m, _ = self.path_minimum(lambda u: x + r * np.exp(1j * math.pi * u))
        return m < self.threshold

    def square_meets(self, sq: CarlesonSquare) -> bool:
        """Does the closed square meet the union of spectrum and level set?"""
        if self.symbol.is_zero:
            return True
        if sq.y0 == 0:
            if self._spectrum.meets(sq.x0, sq.x1):
                return True
            if self.segment_liminf(sq.x0, sq.x1) < self.threshold:
                return True
        if self._zero_inside(lambda w: sq.contains(w)):
            return True
        x0, x1, y0, y1 = sq.x0, sq.x1, sq.y0, sq.y1
        edges = [
            lambda u: x0 + u * (x1 - x0) + 1j * y1,
            lambda u: x0 + 1j * (y0 + u * (y1 - y0)),
            lambda u: x1 + 1j * (y0 + u * (y1 - y0)),
        ]
        if y0 > 0:
            edges.append(lambda u: x0 + u * (x1 - x0) + 1j * y0)
        for e in edges:
            m, _ = self.path_minimum(e)
            if m < self.threshold:
                return True
        return False


@dataclass(frozen=True)
class Distances:
    d0: float
    d_eps: float
    d_tilde: float
    capped: bool = False


def _level_distance(oracle: LevelSetOracle, x: float) -> tuple[float, bool]:
    if oracle.point_liminf(x) < oracle.threshold:
        return 0.0, False
    cap = RADIUS_CAP_FACTOR * (1.0 + abs(x))
    r = 1.0
    if oracle.halfdisc_meets(x, r):
        lo, hi = 0.0, r
        while hi > DISTANCE_TOL:
            mid = 0.5 * hi
            if oracle.halfdisc_meets(x, mid):
                hi = mid
            else:
                lo = mid
                break
    else:
        lo = r
        hi = 2.0 * r
        while not oracle.halfdisc_meets(x, hi):
            lo = hi
            if hi >= cap:
                return cap, True
            hi = min(2.0 * hi, cap)
    while hi - lo > DISTANCE_TOL:
        mid = 0.5 * (lo + hi)
        if oracle.halfdisc_meets(x, mid):
            hi = mid
        else:
            lo = mid
    return hi, False


def distances(oracle: LevelSetOracle, x: float) -> Distances:
    """Distances from real x to the spectrum, the level set, and their union.

    The level-set distance is an upper estimate within DISTANCE_TOL.  When
    the search radius cap is hit the cap is returned and ``capped`` is set;
    the true distance is then at least the cap.
    """
    x = float(x)
    d0 = oracle.symbol.spectrum().distance(x)
    d_eps, capped = _level_distance(oracle, x)
    d_tilde = min(d0, d_eps)
    return Distances(d0, d_eps, d_tilde, capped and d_tilde == d_eps)


# Carleson constants


def _candidates(mu: DiscreteMeasure) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the square arrangement: left/right anchored at x-coords,
    sides from heights and from x-coordinate gaps."""
    xs, ys = mu.coordinates()
    ys = ys[ys > 0]
    gaps = (xs[None, :] - xs[:, None]).ravel()
    sides = np.unique(np.concatenate([ys, gaps[gaps > 0]]))
    if sides.size == 0:
        return np.empty(0), np.empty(0)
    left_x = np.repeat(xs, sides.size)
    left_h = np.tile(sides, xs.size)
    right_x = left_x - left_h
    x0 = np.concatenate([left_x, right_x])
    h = np.concatenate([left_h, left_h])
    return x0, h


def _scale_tol(mu: DiscreteMeasure) -> float:
    xs, ys = mu.coordinates()
    scale = max(np.abs(xs).max(initial=0.0), np.abs(ys).max(initial=0.0), 1.0)
    return 1e-12 * scale


def _real_density_sup(mu: DiscreteMeasure) -> float:
    """Limit of the ratio for vanishing squares resting on real segments."""
    out = 0.0
    for s in mu.segments:
        if s.horizontal and s.z1.imag == 0:
            out = max(out, s.density)
        if not s.horizontal and s.z1.imag == 0:
            out = max(out, s.density)
    return out


def carleson_search(mu: DiscreteMeasure, qualify: Callable[[CarlesonSquare], bool] | None = None,
                    ) -> tuple[float, CarlesonSquare | None]:
    """sup mu(S)/h over boundary squares S, optionally only over qualifying ones.

    Without a qualifier the sup over the candidate vertices is exact for
    these measures.  Returns the value and a square attaining it (None for
    an empty measure or an h -> 0 limit).
    """
    if mu.empty:
        return 0.0, None
    tol = _scale_tol(mu)
    if qualify is None:
        if mu.boundary_atoms():
            return math.inf, None
        x0, h = _candidates(mu)
        best, sq = _real_density_sup(mu), None
        if x0.size:
            ratio = mu.mass_in(x0, h, 0.0, tol) / h
            i = int(np.argmax(ratio))
            if ratio[i] >= best:
                best, sq = float(ratio[i]), CarlesonSquare(float(x0[i]), float(h[i]))
        return best, sq
    return _qualified_search(mu, qualify, tol)


def carleson_constant(mu: DiscreteMeasure) -> float:
    return carleson_search(mu)[0]


def brute_force_carleson(mu: DiscreteMeasure) -> float:
    """Independent check for point masses: minimal square of every subset."""
    if mu.segments:
        raise ValueError("brute force handles point masses only")
    if mu.empty:
        return 0.0
    if mu.boundary_atoms():
        return math.inf
    pts = list(mu.points)
    best = 0.0
    for mask in range(1, 1 << len(pts)):
        sub = [p for i, p in enumerate(pts) if mask >> i & 1]
        lo = min(p.real for p in sub)
        hi = max(p.real for p in sub)
        h = max(hi - lo, max(p.imag for p in sub))
        # slide the square over every admissible left edge position
        for x0 in (lo, hi - h):
            m = sum(
                mm for p, mm in zip(pts, mu.masses)
                if x0 - 1e-12 <= p.real <= x0 + h + 1e-12 and p.imag <= h + 1e-12
            )
            best = max(best, m / h)
    return best


def _minimal_qualifying_side(qualify, x_anchor: float, right: bool, h_start: float) -> float | None:
    def square(h):
        return CarlesonSquare(x_anchor - h if right else x_anchor, h)

    hi = h_start
    for _ in range(64):
        if qualify(square(hi)):
            break
        hi *= 2.0
    else:
        return None
    lo = 0.0
    for _ in range(SQUARE_DEPTH):
        mid = 0.5 * (lo + hi)
        if qualify(square(mid)):
            hi = mid
        else:
            lo = mid
    return hi


def _qualified_search(mu, qualify, tol):
    best, best_sq = 0.0, None
    x0s, hs = _candidates(mu)
    squares = [CarlesonSquare(float(a), float(b)) for a, b in zip(x0s, hs)]
    xs, ys = mu.coordinates()
    base = max(float(np.ptp(xs)) if xs.size else 0.0, float(ys.max(initial=0.0)), 1e-3)
    # minimal qualifying squares at every anchor
    for x in xs:
        for right in (False, True):
            h = _minimal_qualifying_side(qualify, float(x), right, base / 64.0)
            if h is not None:
                squares.append(CarlesonSquare(float(x) - h if right else float(x), h))
    for sq in squares:
        if not qualify(sq):
            continue
        r = mu.mass_of(sq, tol) / sq.h
        if r > best:
            best, best_sq = r, sq
    return best, best_sq


@dataclass(frozen=True)
class RestrictedCarlesonResult:
    passed: bool
    value: float
    bound: float
    square: CarlesonSquare | None
    plain_value: float


def _limit_qualifies(oracle: LevelSetOracle, x: float) -> bool:
    return oracle.symbol.spectrum().contains(x) or oracle.point_liminf(x) < oracle.threshold


def restricted_carleson_check(mu: DiscreteMeasure, oracle: LevelSetOracle, K: float) -> RestrictedCarlesonResult:
    """Test mu(S) <= K h over squares meeting the extended level set.

    The sup runs over the candidate vertices that qualify plus, at every
    anchor, the smallest qualifying square found by bisection to depth
    SQUARE_DEPTH.  Boundary atoms inside the extended set give an infinite
    value through vanishing squares.
    """
    plain = carleson_constant(mu)
    if any(_limit_qualifies(oracle, x) for x in mu.boundary_atoms()):
        return RestrictedCarlesonResult(False, math.inf, K, None, plain)
    value, sq = carleson_search(mu, oracle.square_meets)
    for s in mu.segments:
        if s.z1.imag == 0 and s.horizontal:
            if oracle.segment_liminf(s.z1.real, s.z2.real) < oracle.threshold or \
                    oracle.symbol.spectrum().meets(s.z1.real, s.z2.real):
                value = max(value, s.density)
    return RestrictedCarlesonResult(value <= K, value, K, sq, plain)


@dataclass(frozen=True)
class VanishingResult:
    vanishing: bool
    reasons: tuple[str, ...] = ()


def vanishing_carleson_check(mu: DiscreteMeasure, oracle: LevelSetOracle) -> VanishingResult:
    """Finite-data form of the vanishing condition on qualifying squares.

    Compact support makes the large-square limit vacuous, so only vanishing
    squares matter: they keep a positive ratio exactly at boundary atoms
    and along real segments, and count when they qualify.
    """
    reasons = []
    for x in mu.boundary_atoms():
        if _limit_qualifies(oracle, x):
            reasons.append(f"boundary atom at {x:g} in the closure of the extended level set")
    for s in mu.segments:
        if s.z1.imag != 0:
            continue
        lo, hi = s.z1.real, s.z2.real
        if oracle.symbol.spectrum().meets(lo, hi) or oracle.segment_liminf(lo, hi) < oracle.threshold:
            reasons.append(f"real segment {lo:g}..{hi:g} touching the extended level set")
    return VanishingResult(not reasons, tuple(reasons))


# empirical constants of the level-set lemmas


def derivative_distance_constant(oracle: LevelSetOracle, xs: Iterable[float]) -> float:
    """max |b'(x)| d_tilde(x) over x off the spectrum."""
    sp = oracle.symbol.spectrum()
    best = 0.0
    for x in xs:
        if sp.contains(x):
            continue
        d = distances(oracle, x).d_tilde
        if d == 0:
            continue
        best = max(best, oracle.symbol.angular_derivative_modulus(x) * d)
    return best


def distance_weight_constant(oracle: LevelSetOracle, xs: Sequence[float], ys: Sequence[float],
                             p: float, n: int, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """max d_tilde(x)^n / w_{p,n}(x+iy) over a grid with y > 0."""
    from .weights import weights

    dt = {float(x): distances(oracle, x).d_tilde for x in xs}
    zs = [complex(x, y) for x in xs for y in ys if dt[float(x)] > 0]
    if not zs:
        return 0.0
    ev = weights(oracle.symbol, zs, p, n, spec)
    best = 0.0
    for z, e in zip(zs, ev):
        w = e.w
        if w == 0:
            return math.inf
        best = max(best, dt[z.real] ** n / w)
    return best


def modulus_ratio_bounds(symbol: SymbolFunction, pairs: Iterable[tuple[complex, complex]]) -> tuple[float, float]:
    """min and max of (1-|b(z)|)/(1-|b(w)|) over the given pairs."""
    lo, hi = math.inf, 0.0
    for z, w in pairs:
        r = (1.0 - abs(symbol.eval(z))) / (1.0 - abs(symbol.eval(w)))
        lo, hi = min(lo, r), max(hi, r)
    return lo, hi


def level_set_components(oracle: LevelSetOracle, box: tuple[float, float, float, float],
                         resolution: int = 200) -> int:
    """Number of connected pieces of the sampled level set inside a box.

    A warning-grade probe only: connectivity of an open set is not decided
    by finitely many samples.
    """
    x0, x1, y0, y1 = box
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(max(y0, 1e-9), y1, resolution)
    grid = xs[None, :] + 1j * ys[:, None]
    mask = np.asarray(oracle.modulus(grid)) < oracle.threshold
    _, count = ndimage.label(mask)
    return int(count)
