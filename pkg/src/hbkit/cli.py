"""Batch driver: ``hbkit <command> --config FILE --out DIR``.

Every run writes ``<command>.csv`` (plus extra tables for some commands),
``summary.txt`` and ``manifest.txt``.  Floats are printed with 17
significant digits and work is split into fixed chunks, so the thread
count never changes a byte of output.  The manifest timestamp is the only
line that differs between reruns.

Exit status: 0 success, 2 configuration or input error, 3 numerical
failure, 4 the run finished but reported findings.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .bernstein import bernstein_ratio, paley_wiener_ratio, random_family
from .campaigns import (
    boundary_derivative_ratio,
    decomposition_residuals,
    gram_checks,
    recurrence_residuals,
    representation_residuals,
    reproducing_residuals,
)
from .config import COMMANDS, ConfigError, ExperimentConfig, load_config
from .embedding import embedding_family, embedding_verdict, empirical_embedding_constant
from .geometry import LevelSetOracle, brute_force_carleson, carleson_constant, distances, restricted_carleson_check
from .quadrature import QuadratureError, QuadratureSpec
from .riesz import (
    GramError,
    KernelSystem,
    PerturbationPlan,
    carleson_sequence_test,
    forced_collision,
    gram_bounds,
    perturbation_experiment,
    stability_functional,
)
from .symbol import SymbolFunction
from .weights import lower_bound_factor, weights

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_FINDINGS = 4

CHUNK = 16

DEFAULT_TOLERANCES = {
    "reproducing": 1e-12,
    "gram": 1e-12,
    "decomposition": 1e-6,
    "representation": 1e-5,
    "recurrence": 1e-10,
    "boundary_derivative": 1e-8,
}


def fmt(v) -> str:
    """Byte-stable number formatting."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


class Table:
    def __init__(self, *columns: str):
        self.columns = columns
        self.rows: list[str] = []

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError("row length does not match the header")
        self.rows.append(",".join(v if isinstance(v, str) else fmt(v) for v in values))

    def text(self) -> str:
        return ",".join(self.columns) + "\n" + "".join(r + "\n" for r in self.rows)


@dataclass
class RunResult:
    tables: dict[str, Table] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)
    findings: list[str] = field(default_factory=list)

    def note(self, line: str) -> None:
        self.summary.append(line)

    def finding(self, line: str) -> None:
        self.findings.append(line)


class Pool:
    """Order-preserving map over fixed chunks."""

    def __init__(self, threads: int):
        self.threads = max(1, int(threads))

    def map(self, fn: Callable, items: Sequence) -> list:
        items = list(items)
        chunks = [items[i:i + CHUNK] for i in range(0, len(items), CHUNK)]
        if self.threads == 1 or len(chunks) < 2:
            parts = [fn(c) for c in chunks]
        else:
            with ThreadPoolExecutor(self.threads) as ex:
                parts = list(ex.map(fn, chunks))
        return [x for part in parts for x in part]


@dataclass
class Context:
    config: ExperimentConfig
    seed: int
    spec: QuadratureSpec
    pool: Pool
    symbols: list[tuple[str, SymbolFunction]]


# commands


def run_eval(ctx: Context) -> RunResult:
    blk = ctx.config.eval
    res = RunResult()
    order = blk.derivative_order
    cols = ["symbol", "re", "im", "b_re", "b_im"]
    for k in range(1, order + 1):
        cols += [f"d{k}_re", f"d{k}_im"]
    tab = Table(*cols)
    for label, s in ctx.symbols:
        for x, y in blk.points:
            d = np.atleast_1d(s.derivatives(complex(x, y), order))
            row = [label, x, y]
            for v in d[: order + 1]:
                row += [float(np.real(v)), float(np.imag(v))]
            tab.add(*row)
    res.tables["eval"] = tab
    res.note(f"evaluated {len(blk.points)} points on {len(ctx.symbols)} symbols")
    if not blk.checks:
        return res

    tol = {**DEFAULT_TOLERANCES, **blk.tolerances}
    checks = Table("symbol", "check", "detail", "count", "max_residual", "tolerance", "pass")
    box = blk.box

    def record(label, name, detail, values, bound):
        values = np.atleast_1d(values)
        worst = float(values.max()) if values.size else 0.0
        ok = bool(worst <= bound)
        checks.add(label, name, detail, int(values.size), worst, bound, ok)
        if not ok:
            res.finding(f"{label}: {name} {detail} max residual {fmt(worst)} exceeds {fmt(bound)}")

    for label, s in ctx.symbols:
        for name in blk.checks:
            if name == "reproducing":
                record(label, name, "inner product", reproducing_residuals(s, blk.samples, ctx.seed, box), tol[name])
            elif name == "gram":
                g = gram_checks(s, blk.samples, ctx.seed, box)
                record(label, name, "hermitian", g.hermitian_error, tol[name])
                record(label, name, "psd", max(0.0, -g.min_eigenvalue / g.max_eigenvalue), tol[name])
            elif name == "decomposition":
                record(label, name, "norm split", decomposition_residuals(s, blk.samples, ctx.seed, ctx.spec, box),
                       tol[name])
            elif name == "representation":
                for n in blk.orders:
                    r, second = representation_residuals(s, blk.samples, ctx.seed, n, ctx.spec, box)
                    record(label, name, f"n={n}", r, tol[name])
                    if s.is_inner or s.is_zero:
                        record(label, name, f"n={n} second integral", second, 0.0)
            elif name == "recurrence":
                for ell in blk.orders:
                    record(label, name, f"l={ell}", recurrence_residuals(s, blk.samples, ctx.seed, ell, box),
                           tol[name])
            elif name == "boundary_derivative":
                g = blk.derivative_grid
                xs = g.xs() if g is not None else np.linspace(-3.0, 3.0, 50)
                ys = g.ys() if g is not None else np.geomspace(1e-3, 10.0, 20)
                ratio = boundary_derivative_ratio(s, xs, ys) if not s.is_zero else 0.0
                record(label, name, "interior over boundary", max(0.0, ratio - 1.0), tol[name])
                res.note(f"{label}: max |b'(x+iy)|/|b'(x)| over {xs.size}x{ys.size} grid={fmt(ratio)}")
    res.tables["checks"] = checks
    res.note(f"checks: {len(checks.rows)} rows, {len(res.findings)} failing")
    return res


def _refined(values: np.ndarray, geometric: bool) -> np.ndarray:
    v = np.unique(values)
    if v.size < 2:
        return v
    mids = np.sqrt(v[:-1] * v[1:]) if geometric else 0.5 * (v[:-1] + v[1:])
    return np.unique(np.concatenate([v, mids]))


def run_weight_sweep(ctx: Context) -> RunResult:
    blk = ctx.config.weight_sweep
    res = RunResult()
    pts = blk.grid.complex_points()
    tab = Table("symbol", "p", "n", "re", "im", "w", "norm1", "norm2", "slack", "norm_ratio", "lower_bound_ratio")
    sups: dict[tuple[float, int], list[tuple[str, float]]] = {}
    for label, s in ctx.symbols:
        for p in blk.p:
            for n in blk.n:
                evs = ctx.pool.map(lambda c: weights(s, c, p, n, ctx.spec), pts)
                lows = []
                ratio_sup = 0.0
                for z, ev in zip(pts, evs):
                    ratio = ev.norm2 / ev.norm1 if ev.norm1 > 0 else math.inf
                    if math.isfinite(ratio):
                        ratio_sup = max(ratio_sup, ratio)
                    low = math.nan
                    if blk.lower_bound and z.imag > 0:
                        low = ev.w * lower_bound_factor(s, z, p, n)
                        lows.append(low)
                    tab.add(label, p, n, z.real, z.imag, ev.w, ev.norm1, ev.norm2, ev.slack, ratio, low)
                sups.setdefault((p, n), []).append((label, ratio_sup))
                res.note(f"{label} p={fmt(p)} n={n}: sup norm2/norm1={fmt(ratio_sup)}")
                if blk.lower_bound:
                    inf_c = min(lows)
                    res.note(f"{label} p={fmt(p)} n={n}: inf lower-bound ratio={fmt(inf_c)}")
                    if not inf_c > 0:
                        res.finding(f"{label} p={fmt(p)} n={n}: lower-bound ratio not positive ({fmt(inf_c)})")
                    if blk.refine:
                        fine = [complex(x, y) for x in _refined(blk.grid.xs(), False)
                                for y in _refined(blk.grid.ys(), True) if y > 0]
                        fevs = ctx.pool.map(lambda c: weights(s, c, p, n, ctx.spec), fine)
                        inf_f = min(ev.w * lower_bound_factor(s, z, p, n) for z, ev in zip(fine, fevs))
                        inf_f = min(inf_f, inf_c)
                        change = abs(inf_f - inf_c) / inf_c if inf_c > 0 else math.inf
                        res.note(f"{label} p={fmt(p)} n={n}: refined inf={fmt(inf_f)} relative change={fmt(change)}")
                        if not change <= blk.refine_tolerance:
                            res.finding(f"{label} p={fmt(p)} n={n}: refined infimum moved by {fmt(change)}")
    if blk.expect_increasing_ratio:
        for key, seq in sups.items():
            vals = [v for _, v in seq]
            if not all(a < b for a, b in zip(vals, vals[1:])):
                res.finding(f"p={fmt(key[0])} n={key[1]}: sup ratios not strictly increasing across symbols")
            else:
                res.note(f"p={fmt(key[0])} n={key[1]}: sup ratios strictly increase across symbols")
    res.tables["weight-sweep"] = tab
    return res


def run_bernstein(ctx: Context) -> RunResult:
    blk = ctx.config.bernstein
    res = RunResult()
    fseed = blk.family.seed if blk.family.seed is not None else ctx.seed
    tab = Table("symbol", "family", "index", "ratio", "numerator", "hb_norm")
    mu = blk.measure.build() if blk.measure is not None else None
    for label, s in ctx.symbols:
        def measure(size, seed, tag):
            fam = random_family(s, size, seed, blk.family.box, blk.family.terms)
            if blk.mode == "line":
                ratios = ctx.pool.map(lambda c: [paley_wiener_ratio(f, ctx.spec) for f in c], fam)
                for i, r in enumerate(ratios):
                    tab.add(label, tag, i, r, math.nan, math.nan)
                return max(ratios)
            rep = bernstein_ratio(s, blk.p, blk.n, mu, fam, ctx.spec, seed=seed, weighted=blk.weighted)
            for i, (r, a, b) in enumerate(zip(rep.ratios, rep.numerators, rep.norms)):
                tab.add(label, tag, i, r, a, b)
            return rep.max_ratio

        m1 = measure(blk.family.size, fseed, "base")
        res.note(f"{label}: max ratio={fmt(m1)} over {blk.family.size} functions")
        if blk.bound is not None and m1 > blk.bound:
            res.finding(f"{label}: max ratio {fmt(m1)} exceeds bound {fmt(blk.bound)}")
        if blk.family.doubling:
            m2 = max(m1, measure(2 * blk.family.size, fseed + 1, "doubled"))
            change = (m2 - m1) / m1 if m1 > 0 else 0.0
            res.note(f"{label}: doubled family max ratio={fmt(m2)} relative change={fmt(change)}")
            if change > blk.stability:
                res.finding(f"{label}: max ratio moved by {fmt(change)} under family doubling")
            if blk.bound is not None and m2 > blk.bound:
                res.finding(f"{label}: doubled family ratio {fmt(m2)} exceeds bound {fmt(blk.bound)}")
        if blk.eps is not None and mu is not None:
            K = blk.K if blk.K is not None else math.inf
            rc = restricted_carleson_check(mu, LevelSetOracle(s, blk.eps), K)
            res.note(f"{label}: restricted Carleson constant at level {fmt(blk.eps)}={fmt(rc.value)} "
                     f"plain={fmt(rc.plain_value)}")
            if blk.K is not None and not rc.passed:
                res.finding(f"{label}: restricted Carleson constant {fmt(rc.value)} exceeds K={fmt(blk.K)}")
    res.tables["bernstein"] = tab
    return res


NECESSITY_ROUNDING = 1e-12


def _ratio(a: float, b: float) -> float:
    if b > 0:
        return a / b
    return 0.0 if a == 0 else math.inf


def run_embed(ctx: Context) -> RunResult:
    blk = ctx.config.embed
    res = RunResult()
    mu = blk.measure.build()
    grid = blk.grid.complex_points()
    fseed = blk.family.seed if blk.family.seed is not None else ctx.seed
    tab = Table("symbol", "re", "im", "poisson_value", "pi_c_squared", "plain_ratio", "single_kernel_ratio")
    if blk.brute_force:
        if mu.segments or len(mu.points) > 8:
            raise ValueError("brute-force comparison needs at most 8 point masses and no segments")
        bf, cc = brute_force_carleson(mu), carleson_constant(mu)
        ok = bf == cc or abs(bf - cc) <= 1e-12 * max(abs(bf), abs(cc))
        res.note(f"brute-force Carleson constant={fmt(bf)} vertex search={fmt(cc)} match={int(ok)}")
        if not ok:
            res.finding(f"brute-force Carleson constant {fmt(bf)} differs from search {fmt(cc)}")
    for label, s in ctx.symbols:
        fam = embedding_family(s, mu, grid, blk.family.size, fseed, blk.family.box)
        v = embedding_verdict(s, mu, grid, blk.eps, blk.K, family=fam)
        res.note(f"{label}:")
        res.summary.extend("  " + line for line in v.summary().splitlines())
        c2 = math.pi * v.empirical.value ** 2
        worst_plain = worst_kernel = 0.0
        for z, pv in zip(v.poisson.grid, v.poisson.values):
            bmod = 0.0 if s.is_zero else abs(s.eval(z))
            plain = _ratio(pv, c2)
            kernel = _ratio(pv, (1.0 + bmod) * c2)
            worst_plain, worst_kernel = max(worst_plain, plain), max(worst_kernel, kernel)
            tab.add(label, z.real, z.imag, pv, c2, plain, kernel)
        res.note(f"  necessity: max poisson/(pi C^2)={fmt(worst_plain)} "
                 f"max poisson/(pi (1+|b|) C^2)={fmt(worst_kernel)}")
        if worst_kernel > 1.0 + NECESSITY_ROUNDING:
            res.finding(f"{label}: poisson test exceeds the single-kernel bound by factor {fmt(worst_kernel)}")
        if blk.family.doubling:
            fam2 = embedding_family(s, mu, grid, 2 * blk.family.size, fseed + 1, blk.family.box)
            c_2 = max(v.empirical.value, empirical_embedding_constant(s, mu, fam2).value)
            base = v.empirical.value
            change = (c_2 - base) / base if base > 0 else 0.0
            res.note(f"  doubled family constant={fmt(c_2)} relative change={fmt(change)}")
            if change > blk.stability:
                res.finding(f"{label}: embedding constant moved by {fmt(change)} under family doubling")
        g = v.geometric
        if blk.expect == "restricted_only" and g is not None:
            if not (g.passed and g.plain_value > g.bound):
                res.finding(f"{label}: expected restricted pass with plain failure, got restricted "
                            f"{fmt(g.value)} plain {fmt(g.plain_value)} at K={fmt(g.bound)}")
            if g.passed and not math.isfinite(v.empirical.value):
                res.finding(f"{label}: restricted test passes but the empirical constant is infinite")
    res.tables["embed"] = tab
    return res


def run_levelset(ctx: Context) -> RunResult:
    blk = ctx.config.levelset
    res = RunResult()
    xs = blk.xs()
    tab = Table("symbol", "x", "d0", "d_eps", "d_tilde", "capped")
    for label, s in ctx.symbols:
        oracle = LevelSetOracle(s, blk.eps)
        ds = ctx.pool.map(lambda c: [distances(oracle, float(x)) for x in c], xs)
        for x, d in zip(xs, ds):
            tab.add(label, x, d.d0, d.d_eps, d.d_tilde, d.capped)
        capped = sum(d.capped for d in ds)
        res.note(f"{label}: {len(ds)} points at level {fmt(blk.eps)}, {capped} capped")
    res.tables["levelset"] = tab
    return res


def run_riesz(ctx: Context) -> RunResult:
    blk = ctx.config.riesz
    res = RunResult()
    tab = Table("symbol", "trial", "kind", "scale", "functional", "lam_min", "condition", "within_criterion")
    nodes = blk.node_list()
    for label, s in ctx.symbols:
        system = KernelSystem(s, tuple(nodes))
        base = gram_bounds(system)
        res.note(f"{label}: finite-section Gram lam_min={fmt(base.lam_min)} lam_max={fmt(base.lam_max)} "
                 f"condition={fmt(base.condition)}")
        if not base.passes(blk.lam_threshold):
            res.finding(f"{label}: lam_min {fmt(base.lam_min)} does not exceed {fmt(blk.lam_threshold)}")
        cs = carleson_sequence_test(nodes)
        res.note(f"{label}: Carleson sequence product inf={fmt(cs)}")
        if base.lam_min > 0 and not cs > 0:
            res.finding(f"{label}: Gram bounded below but Carleson sequence product vanishes")
        plan = PerturbationPlan(tuple(nodes), blk.p, blk.gamma, blk.eps)
        ident = stability_functional(system, plan, ctx.spec).value
        res.note(f"{label}: identity perturbation functional={fmt(ident)}")
        if ident != 0:
            res.finding(f"{label}: identity perturbation functional is {fmt(ident)}, not 0")
        rep = perturbation_experiment(system, plan, blk.trials, ctx.seed, ctx.spec, blk.outside_factor)
        for r in rep.rows:
            tab.add(label, r.trial, r.kind, r.scale, r.functional, r.lam_min, r.condition, r.within)
        inside = [r.condition / base.condition for r in rep.rows if r.kind == "inside"]
        lo, hi = min(inside), max(inside)
        res.note(f"{label}: inside condition ratio range [{fmt(lo)}, {fmt(hi)}]")
        if not (hi < blk.condition_factor and lo > 1.0 / blk.condition_factor):
            res.finding(f"{label}: inside perturbations change the condition number by more than "
                        f"{fmt(blk.condition_factor)}x")
        res.note(f"{label}: calibrated eps*={fmt(rep.eps_star)} functional at eps*={fmt(rep.functional_star)} "
                 f"functional/eps={fmt(rep.functional_per_eps)}")
        if rep.violations:
            res.finding(f"{label}: {len(rep.violations)} trials below the calibrated functional lost half of lam_min")
        if system.size >= 2:
            col = gram_bounds(forced_collision(system, 0, blk.collision_distance))
            res.note(f"{label}: forced collision condition={fmt(col.condition)}")
            if not col.condition > blk.collision_floor:
                res.finding(f"{label}: forced collision condition {fmt(col.condition)} "
                            f"not above {fmt(blk.collision_floor)}")
    res.tables["riesz"] = tab
    return res


RUNNERS = {
    "eval": run_eval,
    "weight-sweep": run_weight_sweep,
    "bernstein": run_bernstein,
    "embed": run_embed,
    "levelset": run_levelset,
    "riesz": run_riesz,
}


# output


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_outputs(out: Path, command: str, cfg: ExperimentConfig, seed: int, config_bytes: bytes,
                  result: RunResult | None, status: int, error: str | None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, bytes] = {}
    if result is not None:
        for name, tab in result.tables.items():
            files[f"{name}.csv"] = tab.text().encode()
    buf = io.StringIO()
    buf.write(f"hbkit {command}: finite-section numerical report\n")
    if result is not None:
        for line in result.summary:
            buf.write(line + "\n")
        buf.write(f"findings: {len(result.findings)}\n")
        for line in result.findings:
            buf.write(f"finding: {line}\n")
    if error is not None:
        buf.write(f"error: {error}\n")
    buf.write(f"status: {status}\n")
    files["summary.txt"] = buf.getvalue().encode()
    for name, data in files.items():
        (out / name).write_bytes(data)
    m = io.StringIO()
    m.write("toolkit=hbkit\n")
    m.write(f"version={__version__}\n")
    m.write(f"command={command}\n")
    m.write(f"seed={seed}\n")
    m.write(f"rel_tol={fmt(cfg.rel_tol)}\n")
    m.write(f"config_sha256={_sha(config_bytes)}\n")
    m.write(f"config={cfg.model_dump_json()}\n")
    for name in sorted(files):
        m.write(f"output.{name}.sha256={_sha(files[name])}\n")
    m.write(f"exit_status={status}\n")
    m.write(f"timestamp={_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")
    (out / "manifest.txt").write_text(m.getvalue())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hbkit", description="Numerical experiments in de Branges-Rovnyak spaces.")
    ap.add_argument("--version", action="version", version=f"hbkit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for c in COMMANDS:
        p = sub.add_parser(c)
        p.add_argument("--config", required=True, type=Path, help="YAML experiment file")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    return ap


def _err(msg: str) -> None:
    print(f"hbkit: {msg}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        _err("configuration error: --threads must be positive")
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if cfg.resolved_command != args.command:
            raise ConfigError(f"config holds a {cfg.resolved_command} block, not {args.command}")
        seed = args.seed if args.seed is not None else cfg.seed
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": seed})
        symbols = [(sc.label, sc.build()) for sc in cfg.symbol_configs()]
    except (ConfigError, ValueError) as e:
        _err(f"configuration error: {e}")
        return EXIT_CONFIG
    config_bytes = args.config.read_bytes()
    ctx = Context(cfg, seed, QuadratureSpec(rel_tol=cfg.rel_tol), Pool(args.threads), symbols)
    result, error = None, None
    try:
        with np.errstate(all="ignore"):
            result = RUNNERS[args.command](ctx)
        status = EXIT_FINDINGS if result.findings else EXIT_OK
    except (QuadratureError, GramError, np.linalg.LinAlgError, FloatingPointError) as e:
        status, error = EXIT_NUMERICAL, f"numerical failure: {type(e).__name__}: {e}"
    except ValueError as e:
        status, error = EXIT_CONFIG, f"invalid input: {e}"
    write_outputs(args.out, args.command, cfg, seed, config_bytes, result, status, error)
    if error:
        _err(error)
    elif result.findings:
        for f in result.findings:
            _err(f"finding: {f}")
    return status


if __name__ == "__main__":
    sys.exit(main())
