"""Finite sections of normalized reproducing-kernel systems.

Riesz-sequence questions are answered on finite sections only: the Gram
matrix of unit-norm kernels, its extreme eigenvalues, and perturbation
experiments that move the nodes inside pseudohyperbolic discs.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import pseudohyperbolic
from .kernels import gram_matrix
from .quadrature import QuadratureSpec
from .symbol import SymbolFunction
from .weights import conjugate_exponent, inverse_square_segment_integral

__all__ = [
    "GramError",
    "KernelSystem",
    "PerturbationPlan",
    "GramBounds",
    "gram_bounds",
    "carleson_sequence_test",
    "StabilityResult",
    "stability_functional",
    "CriterionResult",
    "corollary73_check",
    "disc_point",
    "forced_collision",
    "PerturbationReport",
    "perturbation_experiment",
]

HERMITIAN_TOL = 1e-10
GAMMA_FLOOR = 1.0 / 3.0


class GramError(RuntimeError):
    """The computed Gram matrix is not Hermitian: a kernel evaluation bug."""


def _modulus(symbol: SymbolFunction, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if symbol.is_zero:
        return np.zeros(z.shape)
    return np.abs(np.asarray(symbol.eval(z)))


@dataclass(frozen=True, eq=False)
class KernelSystem:
    """Unit-norm kernels at nodes of the open upper half-plane."""

    symbol: SymbolFunction
    nodes: tuple[complex, ...]
    gram: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = tuple(complex(z) for z in self.nodes)
        if not nodes:
            raise ValueError("a kernel system needs at least one node")
        if any(z.imag <= 0 for z in nodes):
            raise ValueError("nodes must lie in the open upper half-plane")
        object.__setattr__(self, "nodes", nodes)
        raw = gram_matrix(self.symbol, nodes, symmetrize=False)
        scale = float(np.abs(raw).max())
        if np.abs(raw - raw.conj().T).max() > HERMITIAN_TOL * scale:
            raise GramError("Gram matrix is not Hermitian within tolerance")
        d = np.sqrt(np.real(np.diag(raw)))
        g = raw / np.outer(d, d)
        g = 0.5 * (g + g.conj().T)
        np.fill_diagonal(g, 1.0)
        object.__setattr__(self, "gram", g)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def kernel_norms_sq(self) -> np.ndarray:
        """pi (1 - |b|^2) / Im at every node."""
        z = np.array(self.nodes)
        return math.pi * (1.0 - _modulus(self.symbol, z) ** 2) / z.imag

    def moved(self, nodes: Sequence[complex]) -> "KernelSystem":
        return KernelSystem(self.symbol, tuple(nodes))


@dataclass(frozen=True)
class PerturbationPlan:
    """Targets mu_n for the nodes, with the exponent data of the criterion."""

    targets: tuple[complex, ...]
    p: float = 1.5
    gamma: float = 0.4
    eps: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(complex(z) for z in self.targets))
        if any(z.imag <= 0 for z in self.targets):
            raise ValueError("targets must lie in the open upper half-plane")
        conjugate_exponent(self.p)
        if not 1 < self.p < 2:
            raise ValueError("p must lie in (1, 2)")
        if not self.gamma > GAMMA_FLOOR:
            raise ValueError(f"gamma must exceed 1/3, got {self.gamma}")
        if not self.eps >= 0:
            raise ValueError("eps must be nonnegative")

    @classmethod
    def identity(cls, system: KernelSystem, **kw) -> "PerturbationPlan":
        return cls(system.nodes, **kw)

    def check(self, system: KernelSystem) -> None:
        if len(self.targets) != system.size:
            raise ValueError("plan and system differ in size")


@dataclass(frozen=True)
class GramBounds:
    lam_min: float
    lam_max: float
    condition: float

    def passes(self, threshold: float) -> bool:
        return self.lam_min > threshold


def gram_bounds(system: KernelSystem) -> GramBounds:
    """Extreme eigenvalues of the finite-section Gram matrix."""
    ev = np.linalg.eigvalsh(system.gram)
    lo, hi = float(ev[0]), float(ev[-1])
    cond = hi / lo if lo > 0 else math.inf
    return GramBounds(lo, hi, cond)


def carleson_sequence_test(nodes: Sequence[complex]) -> float:
    """inf over k of the product over n != k of pseudohyperbolic distances."""
    z = np.array([complex(v) for v in nodes])
    if z.size == 0:
        raise ValueError("no nodes")
    if z.size == 1:
        return 1.0
    rho = np.asarray(pseudohyperbolic(z[:, None], z[None, :]))
    np.fill_diagonal(rho, 1.0)
    return float(np.prod(rho, axis=0).min())


@dataclass(frozen=True)
class StabilityResult:
    value: float
    per_node: tuple[float, ...]


def stability_functional(
    system: KernelSystem, plan: PerturbationPlan, spec: QuadratureSpec = QuadratureSpec(),
) -> StabilityResult:
    """sup_n ||k_{lambda_n}||^(-2) times the w_p^(-2) integral along [lambda_n, mu_n]."""
    plan.check(system)
    norms = system.kernel_norms_sq()
    vals = []
    for lam, mu, nrm in zip(system.nodes, plan.targets, norms):
        if lam == mu:
            vals.append(0.0)
            continue
        vals.append(inverse_square_segment_integral(system.symbol, lam, mu, plan.p, spec) / nrm)
    return StabilityResult(max(vals), tuple(vals))


@dataclass(frozen=True)
class CriterionResult:
    satisfied: tuple[bool, ...]
    margins: tuple[float, ...]
    radii: tuple[float, ...]

    @property
    def all(self) -> bool:
        return all(self.satisfied)


def criterion_radii(system: KernelSystem, gamma: float, eps: float) -> np.ndarray:
    """eps (1 - |b(lambda_n)|)^gamma for every node."""
    if not gamma > GAMMA_FLOOR:
        raise ValueError(f"gamma must exceed 1/3, got {gamma}")
    return eps * (1.0 - _modulus(system.symbol, np.array(system.nodes))) ** gamma


def corollary73_check(system: KernelSystem, plan: PerturbationPlan) -> CriterionResult:
    """Pseudohyperbolic displacement of every node against eps (1 - |b|)^gamma."""
    plan.check(system)
    radii = criterion_radii(system, plan.gamma, plan.eps)
    lam = np.array(system.nodes)
    mu = np.array(plan.targets)
    dist = np.asarray(pseudohyperbolic(lam, mu))
    margins = radii - dist
    return CriterionResult(tuple(bool(m >= 0) for m in margins), tuple(map(float, margins)), tuple(map(float, radii)))


def disc_point(lam: complex, u: complex) -> complex:
    """The point at pseudohyperbolic position u (|u| < 1) around lam."""
    lam = complex(lam)
    return (lam - lam.conjugate() * u) / (1.0 - u)


def forced_collision(system: KernelSystem, index: int = 0, distance: float = 1e-3) -> KernelSystem:
    """Move node index+1 to the given pseudohyperbolic distance from node index."""
    if system.size < 2:
        raise ValueError("a collision needs two nodes")
    nodes = list(system.nodes)
    j = (index + 1) % len(nodes)
    nodes[j] = disc_point(nodes[index], distance)
    return system.moved(nodes)


@dataclass(frozen=True)
class TrialRow:
    trial: int
    kind: str
    scale: float
    functional: float
    lam_min: float
    condition: float
    within: bool


@dataclass(frozen=True)
class PerturbationReport:
    baseline: GramBounds
    rows: tuple[TrialRow, ...]
    eps_star: float
    functional_star: float
    violations: tuple[int, ...]
    functional_per_eps: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("trial,kind,scale,functional,lam_min,condition,within_criterion\n")
        for r in self.rows:
            buf.write(
                f"{r.trial},{r.kind},{r.scale:.12g},{r.functional:.12e},{r.lam_min:.12e},"
                f"{r.condition:.12e},{int(r.within)}\n"
            )
        return buf.getvalue()

    def summary(self) -> str:
        return (
            "finite-section perturbation experiment\n"
            f"baseline lam_min={self.baseline.lam_min:.12e} lam_max={self.baseline.lam_max:.12e} "
            f"condition={self.baseline.condition:.12e}\n"
            f"calibrated eps*={self.eps_star:.12e} functional at eps*={self.functional_star:.12e}\n"
            f"functional/eps on criterion trials={self.functional_per_eps:.12e}\n"
            f"violations={len(self.violations)}\n"
        )


def _unit_disc_samples(rng: np.random.Generator, n: int) -> np.ndarray:
    r = np.sqrt(rng.uniform(0.0, 1.0, n))
    th = rng.uniform(0.0, 2 * math.pi, n)
    return r * np.exp(1j * th)


def _perturbed(system: KernelSystem, radii: np.ndarray, u: np.ndarray) -> list[complex]:
    return [disc_point(lam, r * v) for lam, r, v in zip(system.nodes, radii, u)]


def perturbation_experiment(
    system: KernelSystem,
    plan: PerturbationPlan,
    trials: int = 16,
    seed: int = 0,
    spec: QuadratureSpec = QuadratureSpec(),
    outside_factor: float = 4.0,
    bisection_steps: int = 10,
) -> PerturbationReport:
    """Random node moves inside and outside the criterion discs.

    Trial t draws unit-disc offsets from a generator seeded by (seed, t).
    Inside trials use radii eps (1 - |b|)^gamma, outside trials scale them
    by ``outside_factor`` (capped below 1).  eps* is the largest scale, by
    bisection on [0, 1], at which every trial keeps lam_min at least half
    the baseline; the functional at eps* is the largest over the trials at
    that scale.  Violations are outside trials with functional below it
    that still lose more than half of lam_min.
    """
    plan.check(system)
    base = gram_bounds(system)
    unit = [_unit_disc_samples(np.random.default_rng([seed, t]), system.size) for t in range(trials)]
    unit_radii = criterion_radii(system, plan.gamma, 1.0)

    def run(scale, u):
        radii = np.minimum(unit_radii * scale, 0.999)
        moved = system.moved(_perturbed(system, radii, u))
        return moved, gram_bounds(moved)

    rows = []
    for t, u in enumerate(unit):
        for kind, scale in (("inside", plan.eps), ("outside", min(plan.eps * outside_factor, 0.999))):
            moved, gb = run(scale, u)
            tp = PerturbationPlan(moved.nodes, plan.p, plan.gamma, plan.eps)
            f = stability_functional(system, tp, spec).value
            within = corollary73_check(system, tp).all
            rows.append(TrialRow(t, kind, scale, f, gb.lam_min, gb.condition, within))

    def stable(scale):
        return all(run(scale, u)[1].lam_min >= 0.5 * base.lam_min for u in unit)

    lo, hi = 0.0, 1.0
    if stable(hi):
        lo = hi
    else:
        for _ in range(bisection_steps):
            mid = 0.5 * (lo + hi)
            if stable(mid):
                lo = mid
            else:
                hi = mid
    eps_star = lo
    f_star = 0.0
    if eps_star > 0:
        for u in unit:
            moved, _ = run(eps_star, u)
            tp = PerturbationPlan(moved.nodes, plan.p, plan.gamma, plan.eps)
            f_star = max(f_star, stability_functional(system, tp, spec).value)
    violations = tuple(
        i for i, r in enumerate(rows) if r.functional < f_star and r.lam_min < 0.5 * base.lam_min
    )
    per_eps = max(
        (r.functional / plan.eps for r in rows if r.within and plan.eps > 0), default=0.0
    )
    return PerturbationReport(base, tuple(rows), eps_star, f_star, violations, per_eps)
