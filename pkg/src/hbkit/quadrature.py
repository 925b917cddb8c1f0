"""Adaptive Gauss-Legendre quadrature on the real line and on segments.

Panels with the largest error estimates are bisected in batches, so the
integrand is called on large numpy arrays rather than point by point.
Several independent integrals can share one run (see ``integrate_lines``):
panels carry an owner index and every owner has its own tolerance.

Infinite ends are handled by the change of variables t = A + S(1/u - 1),
which maps u in (0, 1] onto [A, +inf).  Oscillating tails (as produced by
symbols with an exponential factor) stay tractable under this map, where a
plain truncation radius would need millions of periods.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "NonIntegrableError",
    "BatchResult",
    "integrate_line",
    "integrate_lines",
    "integrate_segment",
    "adaptive_integrate",
    "peak_hints",
]

OK, NON_INTEGRABLE, BUDGET, NAN = 0, 1, 2, 3


class QuadratureError(RuntimeError):
    """Raised when the panel budget is exhausted or the integrand returns NaN."""


class NonIntegrableError(QuadratureError):
    """Raised when refinement stalls on an unbounded or non-integrable spot."""


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 0.0
    max_panels: int = 200_000
    order: int = 10

    def __post_init__(self):
        if not (1e-14 < self.rel_tol < 1e-2):
            raise ValueError(f"rel_tol must lie in (1e-14, 1e-2), got {self.rel_tol}")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be nonnegative")
        if self.max_panels <= 0:
            raise ValueError("max_panels must be positive")
        if self.order < 2:
            raise ValueError("order must be at least 2")

    def refined(self, factor: float = 0.5) -> "QuadratureSpec":
        return QuadratureSpec(
            rel_tol=self.rel_tol * factor,
            abs_tol=self.abs_tol * factor,
            max_panels=self.max_panels,
            order=self.order,
        )


@dataclass(frozen=True)
class BatchResult:
    """Per-owner values, error estimates, panel counts and status codes."""

    values: np.ndarray
    errors: np.ndarray
    panels: np.ndarray
    status: np.ndarray
    messages: tuple[str, ...]

    def ok(self, i: int) -> bool:
        return int(self.status[i]) == OK

    def non_integrable(self, i: int) -> bool:
        return int(self.status[i]) == NON_INTEGRABLE

    def raise_for(self, i: int) -> None:
        code = int(self.status[i])
        if code == NON_INTEGRABLE:
            raise NonIntegrableError(self.messages[i])
        if code != OK:
            raise QuadratureError(self.messages[i])


@lru_cache(maxsize=16)
def _gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _map(kind, anchor, scale, u):
    """Parameter u -> (t, dt/du) for core (kind 0) and tail (kind +-1) panels."""
    if not np.any(kind):
        return u, np.ones_like(u)
    s = 1.0 / np.where(kind == 0, 1.0, u)
    t = np.where(kind == 0, u, anchor + kind * scale * (s - 1.0))
    jac = np.where(kind == 0, 1.0, scale * s * s)
    return t, jac


_FIELDS = ("a", "b", "kind", "anchor", "scale", "owner", "left", "right", "value", "err")


class _Panels:
    """Struct-of-arrays panel store."""

    def __init__(self, **arrays):
        for k in _FIELDS:
            setattr(self, k, arrays[k])

    def take(self, mask) -> "_Panels":
        return _Panels(**{k: getattr(self, k)[mask] for k in _FIELDS})

    @staticmethod
    def concat(parts: Sequence["_Panels"]) -> "_Panels":
        return _Panels(**{k: np.concatenate([getattr(p, k) for p in parts]) for k in _FIELDS})

    @property
    def size(self) -> int:
        return self.a.size


def _evaluate(f, a, b, kind, anchor, scale, owner, order):
    """Whole-panel and half-panel Gauss sums from one integrand call.

    Also returns per-panel flags for NaN and infinite values and the
    abscissa of an infinite value (NaN where there is none).
    """
    x, w = _gauss(order)
    p = a.size
    mid = 0.5 * (a + b)
    lo = np.concatenate([a, a, mid])
    hi = np.concatenate([b, mid, b])
    half = 0.5 * (hi - lo)
    u = (0.5 * (lo + hi))[:, None] + half[:, None] * x[None, :]
    t, jac = _map(np.tile(kind, 3)[:, None], np.tile(anchor, 3)[:, None], np.tile(scale, 3)[:, None], u)
    vals = np.asarray(f(t, np.tile(owner, 3)))
    if vals.shape != t.shape:
        vals = np.broadcast_to(vals, t.shape)
    nan_pt = np.isnan(vals)
    inf_pt = np.isinf(vals)
    clean = np.where(nan_pt | inf_pt, 0.0, vals)
    sums = (clean * jac * w[None, :]).sum(axis=1) * half
    fold = lambda v: v[:p] | v[p : 2 * p] | v[2 * p :]  # noqa: E731
    nan = fold(nan_pt.any(axis=1))
    inf = fold(inf_pt.any(axis=1))
    rows = np.arange(t.shape[0])
    bad = np.where(inf_pt.any(axis=1), t[rows, np.argmax(inf_pt, axis=1)], np.nan)
    bad_t = np.fmax(np.fmax(bad[:p], bad[p : 2 * p]), bad[2 * p :])
    return sums[:p], sums[p : 2 * p], sums[2 * p :], nan, inf, bad_t


def _group_cumsum(values: np.ndarray, groups: np.ndarray) -> np.ndarray:
    """Cumulative sum restarting at each new group (groups sorted)."""
    cs = np.cumsum(values)
    if cs.size == 0:
        return cs
    starts = np.r_[True, groups[1:] != groups[:-1]]
    start_idx = np.maximum.accumulate(np.where(starts, np.arange(cs.size), 0))
    return cs - (cs - values)[start_idx]


def _flag_bad(p: _Panels, nan, inf, bad_t, status, messages):
    for i in np.unique(p.owner[nan]):
        if status[i] == OK:
            status[i] = NAN
            messages[i] = "integrand returned NaN"
    for i in np.unique(p.owner[inf]):
        if status[i] == OK:
            status[i] = NON_INTEGRABLE
            ts = bad_t[inf & (p.owner == i)]
            messages[i] = f"integrand is infinite near t={float(ts[0])!r}"


def _run(f, a, b, kind, anchor, scale, owner, n_owners, spec) -> BatchResult:
    order = spec.order
    eps = np.finfo(float).eps
    status = np.zeros(n_owners, dtype=int)
    messages = [""] * n_owners
    whole, l, r, nan, inf, bad_t = _evaluate(f, a, b, kind, anchor, scale, owner, order)
    val = l + r
    live = _Panels(a=a, b=b, kind=kind, anchor=anchor, scale=scale, owner=owner,
                   left=l, right=r, value=val, err=np.abs(whole - val))
    _flag_bad(live, nan, inf, bad_t, status, messages)
    done: list[_Panels] = []
    done_total = np.zeros(n_owners, dtype=val.dtype)
    done_err = np.zeros(n_owners)
    while live.size:
        own = live.owner
        total = done_total.copy()
        np.add.at(total, own, live.value)
        err_sum = done_err + np.bincount(own, weights=live.err, minlength=n_owners)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        converged = err_sum <= tol
        floor = (live.b - live.a) <= 64 * eps * np.maximum(
            1.0, np.maximum(np.abs(live.a), np.abs(live.b))
        )
        stuck = np.bincount(own, weights=np.where(floor, live.err, 0.0), minlength=n_owners)
        for i in np.nonzero((~converged) & (stuck > 0.5 * tol) & (status == OK))[0]:
            j = int(np.argmax(np.where((own == i) & floor, live.err, -1.0)))
            t, _ = _map(live.kind[j : j + 1], live.anchor[j : j + 1], live.scale[j : j + 1],
                        np.array([0.5 * (live.a[j] + live.b[j])]))
            status[i] = NON_INTEGRABLE
            messages[i] = f"refinement stalled near t={float(t[0])!r} with error {live.err[j]:.3g}"
        # split all but the smallest errors whose sum stays below tol/2, per owner
        srt = np.lexsort((live.err, own))
        cum = _group_cumsum(live.err[srt], own[srt])
        split = np.zeros(live.size, dtype=bool)
        split[srt] = cum > 0.5 * tol[own[srt]]
        active = (~converged) & (status == OK)
        split &= active[own] & ~floor
        counts = np.bincount(own, minlength=n_owners) + np.bincount(own[split], minlength=n_owners)
        for i in np.nonzero(active & (counts > spec.max_panels))[0]:
            status[i] = BUDGET
            messages[i] = (
                f"panel budget of {spec.max_panels} exhausted "
                f"(current estimate {complex(total[i])!r}, error {err_sum[i]:.3g})"
            )
        still = (status == OK) & ~converged
        split &= still[own]
        # owners that are finished or failed retire their panels
        retire = ~still[own]
        if np.any(retire):
            gone = live.take(retire)
            done.append(gone)
            np.add.at(done_total, gone.owner, gone.value)
            done_err += np.bincount(gone.owner, weights=gone.err, minlength=n_owners)
        if not np.any(split):
            rest = ~retire
            if np.any(rest):
                done.append(live.take(rest))
            break
        stay = ~split & ~retire
        par = live.take(split)
        mid = 0.5 * (par.a + par.b)
        ca = np.concatenate([par.a, mid])
        cb = np.concatenate([mid, par.b])
        ck = np.tile(par.kind, 2)
        can = np.tile(par.anchor, 2)
        csc = np.tile(par.scale, 2)
        cown = np.tile(par.owner, 2)
        whole = np.concatenate([par.left, par.right])
        _, l, r, nan, inf, bad_t = _evaluate(f, ca, cb, ck, can, csc, cown, order)
        val = l + r
        child = _Panels(a=ca, b=cb, kind=ck, anchor=can, scale=csc, owner=cown,
                        left=l, right=r, value=val, err=np.abs(whole - val))
        _flag_bad(child, nan, inf, bad_t, status, messages)
        live = _Panels.concat([live.take(stay), child])
    allp = _Panels.concat(done) if done else live
    values = np.zeros(n_owners, dtype=allp.value.dtype)
    # fixed summation order so results do not depend on bookkeeping
    srt = np.lexsort((allp.a, allp.kind, allp.owner))
    np.add.at(values, allp.owner[srt], allp.value[srt])
    errors = np.bincount(allp.owner, weights=allp.err, minlength=n_owners)
    used = np.bincount(allp.owner, minlength=n_owners)
    return BatchResult(values, errors, used, status, tuple(messages))


def _batch(f, a, b, kind, anchor, scale, owner, n_owners, spec) -> BatchResult:
    if a.size == 0:
        z = np.zeros(n_owners)
        return BatchResult(z, z.copy(), np.zeros(n_owners, int), np.zeros(n_owners, int), ("",) * n_owners)
    return _run(f, a, b, kind, anchor, scale, owner, n_owners, spec)


def adaptive_integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: np.ndarray,
    b: np.ndarray,
    kind: np.ndarray | None = None,
    anchor: np.ndarray | None = None,
    scale: np.ndarray | None = None,
    spec: QuadratureSpec = QuadratureSpec(),
) -> tuple[float | complex, float, int]:
    """Globally adaptive integration of ``f`` over a union of initial panels.

    Returns ``(value, error_estimate, panel_count)``.  Every round bisects
    the panels that carry the largest error estimates until the summed
    estimate fits the tolerance.  A panel's estimate is the difference
    between its one-panel and two-half-panel Gauss rules.
    """
    a = np.asarray(a, dtype=float)
    n0 = a.size
    if n0 == 0:
        return 0.0, 0.0, 0
    b = np.asarray(b, dtype=float)
    kind = np.zeros(n0, dtype=int) if kind is None else np.asarray(kind, dtype=int)
    anchor = np.zeros(n0) if anchor is None else np.asarray(anchor, dtype=float)
    scale = np.ones(n0) if scale is None else np.asarray(scale, dtype=float)
    res = _batch(lambda t, _o: f(t), a, b, kind, anchor, scale, np.zeros(n0, dtype=int), 1, spec)
    res.raise_for(0)
    return _scalar(res.values[0]), float(res.errors[0]), int(res.panels[0])


def _scalar(v):
    return complex(v) if np.iscomplexobj(v) else float(v)


MERGE_TOL = 1e-12


def _breakpoints(points: Iterable[float], lower: float, upper: float) -> np.ndarray:
    """Finite points strictly inside (lower, upper), near-duplicates merged.

    Of two points closer than MERGE_TOL (relative) the one listed first
    survives, so singular points passed ahead of hints stay exact and no
    sliver panel can put nodes onto them by rounding.
    """
    kept: list[float] = [v for v in (lower, upper) if math.isfinite(v)]
    out: list[float] = []
    for p in points:
        p = float(p)
        if not (math.isfinite(p) and lower < p < upper):
            continue
        tol = MERGE_TOL * max(1.0, abs(p))
        if any(abs(p - k) <= tol for k in kept):
            continue
        kept.append(p)
        out.append(p)
    return np.array(sorted(out), dtype=float)


def _line_panels(points: Iterable[float], lower: float, upper: float):
    """Initial panels (a, b, kind, anchor, scale) for one interval."""
    if not lower < upper:
        raise ValueError("lower must be below upper")
    lo_inf, hi_inf = math.isinf(lower), math.isinf(upper)
    if lo_inf and lower > 0 or hi_inf and upper < 0:
        raise ValueError("bad interval orientation")
    pts = _breakpoints(points, lower, upper)
    if lo_inf and hi_inf:
        left_end = min(pts.min(initial=-1.0), -1.0)
        right_end = max(pts.max(initial=1.0), 1.0)
    elif lo_inf:
        right_end = upper
        left_end = min(pts.min(initial=upper - 1.0), upper - 1.0)
    elif hi_inf:
        left_end = lower
        right_end = max(pts.max(initial=lower + 1.0), lower + 1.0)
    else:
        left_end, right_end = lower, upper
    edges = np.unique(np.concatenate([[left_end, right_end], pts]))
    edges = edges[(edges >= left_end) & (edges <= right_end)]
    a = list(edges[:-1])
    b = list(edges[1:])
    kind = [0] * len(a)
    anchor = [0.0] * len(a)
    scale = [1.0] * len(a)
    tail_scale = max(1.0, 0.5 * (right_end - left_end))
    tail_u = [0.0, 0.125, 0.25, 0.5, 1.0]
    for inf_side, k, anc in ((hi_inf, 1, right_end), (lo_inf, -1, left_end)):
        if inf_side:
            for u0, u1 in zip(tail_u[:-1], tail_u[1:]):
                a.append(u0)
                b.append(u1)
                kind.append(k)
                anchor.append(anc)
                scale.append(tail_scale)
    return a, b, kind, anchor, scale


def integrate_lines(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    jobs: Sequence[tuple[Iterable[float], float, float, int]],
    n_owners: int,
    spec: QuadratureSpec = QuadratureSpec(),
) -> BatchResult:
    """Many line integrals in one adaptive run.

    Each job is ``(points, lower, upper, owner)``; jobs sharing an owner
    are summed.  ``f(t, owner)`` receives a 2-d array of abscissae (one row
    per panel) and the owner of every row.  Failures are reported per
    owner in the result instead of being raised.
    """
    cols: list[list] = [[], [], [], [], [], []]
    for points, lower, upper, owner in jobs:
        if lower == upper:
            continue
        a, b, kind, anchor, scale = _line_panels(points, lower, upper)
        for c, v in zip(cols, (a, b, kind, anchor, scale, [owner] * len(a))):
            c.extend(v)
    return _batch(
        f,
        np.array(cols[0], dtype=float),
        np.array(cols[1], dtype=float),
        np.array(cols[2], dtype=int),
        np.array(cols[3], dtype=float),
        np.array(cols[4], dtype=float),
        np.array(cols[5], dtype=int),
        n_owners,
        spec,
    )


def integrate_line(
    f: Callable[[np.ndarray], np.ndarray],
    points: Iterable[float] = (),
    spec: QuadratureSpec = QuadratureSpec(),
    lower: float = -math.inf,
    upper: float = math.inf,
) -> float | complex:
    """Integrate a vectorised ``f`` over ``(lower, upper)``.

    ``points`` are breakpoints (atoms, interval ends, kernel centres and
    scale hints); panel edges are placed on them so that no node lands on
    a singular point.
    """
    if lower == upper:
        return 0.0
    if lower > upper:
        raise ValueError("lower must not exceed upper")
    res = integrate_lines(lambda t, _o: f(t), [(points, lower, upper, 0)], 1, spec)
    res.raise_for(0)
    return _scalar(res.values[0])


def integrate_segment(
    f: Callable[[np.ndarray], np.ndarray],
    z1: complex,
    z2: complex,
    spec: QuadratureSpec = QuadratureSpec(),
    points: Iterable[float] = (),
) -> float | complex:
    """Arc-length integral of ``f`` over the straight segment [z1, z2].

    ``points`` are breakpoints given as fractions of the segment in (0, 1).
    """
    z1, z2 = complex(z1), complex(z2)
    length = abs(z2 - z1)
    if length == 0.0:
        return 0.0
    d = z2 - z1
    value = integrate_line(lambda s: f(z1 + s * d), points, spec, 0.0, 1.0)
    return value * length


def peak_hints(centres: Iterable[complex], reach: float = 64.0, max_levels: int = 48) -> list[float]:
    """Breakpoints x +- y 2^k around each centre x + iy.

    Integrands such as |t - conj(z)|^(-s) have a peak of width Im z at
    Re z; a geometric ladder of panel edges lets the adaptive rule see the
    peak at every scale instead of stepping over it.
    """
    pts: list[float] = []
    for c in centres:
        c = complex(c)
        x, y = c.real, abs(c.imag)
        pts.append(x)
        if y == 0.0:
            continue
        top = max(reach, 1.0)
        h = y
        for _ in range(max_levels):
            pts.extend((x - h, x + h))
            if h >= top:
                break
            h *= 2.0
    return pts
