"""Command-line harness.

    nevanlab fmt --config configs/fmt_exp.cfg --out runs/exp
    nevanlab smt --config configs/smt_exp.cfg
    nevanlab geometry --config configs/geometry_c2.cfg
    nevanlab table --config configs/fmt_c2.cfg --grid 1:8:12

Exit codes: 0 pass, 1 assertion failure, 2 config error, 3 hypothesis failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .config import RunConfig, load_config
from .errors import ConfigError, DomainError, NevanlabError, PreconditionError, UnsupportedOperation
from .exhaustion import (
    ExhaustionWeight,
    Mode,
    boundary_gradient_norm,
    default_constants,
    gradient_norm_fd,
    mei_lower_bound_check,
    parabolic_geometry_check,
    resolve_mode,
)
from .maps import map_from_config
from .models import (
    LiYauConstants,
    ModelManifold,
    green_integral,
    manifold_from_config,
    sample_unit_vectors,
)
from .nevanlinna import NevanlinnaTable, build_table, check_smt_hypotheses, is_bounded, is_monotone_increasing
from .quad import integrate_boundary, integrate_domain
from .target import DivisorData

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_PRECONDITION = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# assembling objects from a config


def build_manifold(cfg: RunConfig) -> ModelManifold:
    return manifold_from_config(cfg.manifold)


def build_constants(M: ModelManifold, cfg: RunConfig) -> LiYauConstants | None:
    mode = resolve_mode(M, cfg.mode)
    if mode is Mode.DIRICHLET:
        return None
    c = default_constants(M, mode, cfg.epsilon)
    if cfg.A is not None:
        c = replace(c, A=float(cfg.A), B=max(float(cfg.A), c.B or float(cfg.A)))
    return c


def build_weights(cfg: RunConfig, M: ModelManifold | None = None) -> list[ExhaustionWeight]:
    M = M or build_manifold(cfg)
    mode = resolve_mode(M, cfg.mode)
    c = build_constants(M, cfg)
    return [ExhaustionWeight(M, mode, float(r), c) for r in cfg.grid.values()]


def build_table_from_config(cfg: RunConfig, smt: bool = False) -> NevanlinnaTable:
    M = build_manifold(cfg)
    f = map_from_config(M, cfg.map)
    divisors = DivisorData.points(cfg.divisors)
    weights = build_weights(cfg, M)
    tab = build_table(
        f,
        divisors,
        weights,
        cfg.quadrature,
        renormalize=cfg.renormalize,
        smt=smt,
        delta=cfg.delta,
        theta_spec=replace(cfg.quadrature, rtol=cfg.theta_rtol),
        rel=cfg.tolerance,
    )
    tab.meta["config"] = cfg.resolved()
    return tab


# ---------------------------------------------------------------------------
# output


def _write(out: str, files: dict[str, str]) -> None:
    os.makedirs(out, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(out, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _header(cfg: RunConfig, constants: dict) -> list[str]:
    lines = ["# resolved configuration", cfg.to_text().rstrip(), "", "# constants"]
    lines += [f"{k} = {v}" for k, v in sorted(constants.items())]
    return lines + [""]


def _table_files(tab: NevanlinnaTable, summary: list[str]) -> dict[str, str]:
    return {
        "table.csv": tab.to_csv(),
        "table.json": tab.to_json() + "\n",
        "curves.csv": tab.curves_csv(),
        "summary.txt": "\n".join(summary) + "\n",
    }


# ---------------------------------------------------------------------------
# subcommands


def run_table(cfg: RunConfig) -> int:
    tab = build_table_from_config(cfg)
    summary = _header(cfg, tab.meta["constants"]) + [f"rows = {len(tab.rows)}"]
    _write(cfg.out, _table_files(tab, summary))
    return EXIT_OK


def run_fmt(cfg: RunConfig) -> int:
    tab = build_table_from_config(cfg)
    ok = tab.fmt_ok()
    summary = _header(cfg, tab.meta["constants"])
    summary.append(f"max_fmt_residual = {tab.max_fmt_residual()!r}")
    for row in tab.rows:
        for lb in tab.labels:
            d = row.per[lb]
            flag = "ok" if d["fmt_ok"] else "FAIL"
            summary.append(f"r = {row.r!r} D = {lb} residual = {d['fmt_residual']!r} tolerance = {d['fmt_tolerance']!r} {flag}")
    summary.append("PASS fmt closure" if ok else "FAIL fmt closure")
    _write(cfg.out, _table_files(tab, summary))
    return EXIT_OK if ok else EXIT_FAIL


def run_smt(cfg: RunConfig) -> int:
    M = build_manifold(cfg)
    f = map_from_config(M, cfg.map)
    divisors = DivisorData.points(cfg.divisors)
    svf = check_smt_hypotheses(f, divisors)
    min_ev, c = svf.cone_check()
    tab = build_table_from_config(cfg, smt=True)
    tab.meta["cone"] = {"min_eigenvalue": min_ev, "c": c, "gauge": svf.gauge}
    ratio = [row.ratio for row in tab.rows]
    bounded = is_bounded(ratio)
    consts = dict(tab.meta["constants"])
    consts["c"] = repr(c)
    summary = _header(cfg, consts)
    summary.append(f"max_fmt_residual = {tab.max_fmt_residual()!r}")
    for row in tab.rows:
        summary.append(f"r = {row.r!r} lhs = {row.lhs!r} rhs = {row.rhs!r} scale = {row.scale!r} ratio = {row.ratio!r}")
    summary.append(f"monotone_top_half = {is_monotone_increasing(ratio)}")
    try:
        defects = tab.defects()
        for lb, d in defects.items():
            summary.append(f"defect[{lb}] = {d.tail!r} slope = {d.slope!r}")
        summary.append(f"defect_sum = {sum(d.tail for d in defects.values())!r}")
    except PreconditionError as exc:
        summary.append(f"defects unavailable: {exc}")
    summary.append("PASS smt gap bounded" if bounded else "FAIL smt gap bounded")
    _write(cfg.out, _table_files(tab, summary))
    return EXIT_OK if bounded else EXIT_FAIL


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def geometry_properties(cfg: RunConfig) -> list[dict]:
    """Evaluate every geometric property that applies to the configured model."""
    M = build_manifold(cfg)
    mode = resolve_mode(M, cfg.mode)
    c = build_constants(M, cfg)
    radii = np.array(_floats(cfg.geometry["radii"])) if "radii" in cfg.geometry else cfg.grid.values()
    n_dir = int(cfg.geometry.get("directions", "256"))
    n_samples = int(cfg.geometry.get("samples", "10000"))
    spec = cfg.quadrature
    seed = cfg.seed
    rng = lambda k: np.random.Generator(np.random.Philox(key=[seed, k]))
    w0 = ExhaustionWeight(M, mode, 1.0, c)
    props: list[dict] = []
    chosen = {t.strip() for t in cfg.geometry.get("properties", "").split(",") if t.strip()}
    unknown = chosen - set(GEOMETRY_PROPERTIES)
    if unknown:
        raise ConfigError(f"unknown geometry properties: {', '.join(sorted(unknown))}")
    want = lambda name: not chosen or name in chosen

    def add(name, ok, margin, detail=""):
        props.append({"name": name, "pass": bool(ok), "margin": float(margin), "detail": detail})

    if w0.is_ball and want("boundary_is_geodesic_sphere"):
        dev = 0.0
        for r in radii:
            b = w0.at(r).boundary(n_dir)
            dev = max(dev, float(np.max(np.abs(b.rho - r)) / r) if b.found.all() else math.inf)
        add("boundary_is_geodesic_sphere", dev < 1e-8, dev, f"max |rho - r|/r over {n_dir} directions (tol 1e-08)")

    if M.is_flat and (want("harmonic_measure_mass") or want("theta_measure_mass")):
        worst = 0.0
        for r in radii:
            w = w0.at(r)
            mass = integrate_boundary(w, lambda x: np.ones(x.shape[0]), spec).value
            if mode is Mode.NON_PARABOLIC:
                target = 1.0
            else:
                inner = integrate_domain(w, lambda x: M.heat_kernel(w.r, x), spec).value
                target = 1.0 - inner
                if M.is_euclidean and M.factors[0].m == 1:
                    worst = max(worst, abs(target - math.exp(-r / 4.0)))
            worst = max(worst, abs(mass - target))
        name = "harmonic_measure_mass" if mode is Mode.NON_PARABOLIC else "theta_measure_mass"
        add(name, worst <= 1e-6, worst, "max deviation over the radii (tol 1e-06)")

    if mode is Mode.NON_PARABOLIC and M.is_euclidean and want("gradient_law"):
        r = float(cfg.geometry.get("gradient_radius", radii[-1]))
        w = w0.at(r)
        worst = 0.0
        dirs = sample_unit_vectors(M.real_dim, 16)
        for t in (0.5 * r, 0.9 * r, r):
            fd = gradient_norm_fd(w, M.origin() + t * dirs)
            exact = boundary_gradient_norm(w, t)
            worst = max(worst, float(np.max(np.abs(fd / exact - 1.0))))
        add("gradient_law", worst < 1e-4, worst, "max relative deviation at t = 0.5r, 0.9r, r (tol 1e-04)")

    if M.kernel_supported and c is not None and want("heat_kernel_sandwich"):
        g = rng(6)
        t = np.exp(g.uniform(math.log(1e-3), math.log(1e3), n_samples))
        u = g.normal(size=(n_samples, M.real_dim))
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        x = M.wrap(M.origin() + g.uniform(0.0, 20.0, n_samples)[:, None] * u)
        lo, val, up = M.log_li_yau_sandwich(c, t, x)
        margin = float(min(np.min(val - lo), np.min(up - val)))
        # exact on ℂᵐ, where both sides are equalities up to rounding
        tol = -1e-10 * max(1.0, float(np.max(np.abs(val))))
        add("heat_kernel_sandwich", margin >= tol, margin, f"min log-margin over {n_samples} samples")

    if mode is Mode.NON_PARABOLIC and c is not None and c.A is not None and want("green_sandwich"):
        g = rng(5)
        u = g.normal(size=(n_samples, M.real_dim))
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        x = M.wrap(M.origin() + g.uniform(0.05, 20.0, n_samples)[:, None] * u)
        G = M.green(x)
        I = green_integral(M, M.distance(x))
        B = c.B if c.B is not None else c.A
        rel = float(min(np.min(G / (c.A * I) - 1.0), np.min(1.0 - G / (B * I))))
        add("green_sandwich", rel >= -1e-12, rel, f"A = {c.A!r}, B = {B!r}")

    if mode is Mode.PARABOLIC and M.is_euclidean and M.factors[0].m == 1 and want("heat_weight_below_disk_green"):
        g = rng(7)
        rs = g.uniform(0.1, 100.0, 1000)
        rho = rs * g.uniform(1e-6, 1.0, 1000)
        x = np.stack([rho, np.zeros_like(rho)], axis=-1)
        h = np.array([float(w0.at(r).value(xi[None, :])[0]) for r, xi in zip(rs, x)])
        gdisk = np.log(rs / rho) / math.pi
        margin = float(np.min(gdisk - h))
        add("heat_weight_below_disk_green", margin >= -1e-10, margin, "min (g_r - h_r) over 1000 samples")

    if mode is Mode.PARABOLIC and not w0.is_ball and want("boundary_between_r_and_beta_r"):
        chk = parabolic_geometry_check(w0, radii, n_dir)
        ratio_hi = float(np.nanmax(chk.rho_max / chk.r))
        ok = chk.threshold is not None
        add(
            "boundary_between_r_and_beta_r",
            ok,
            ratio_hi,
            f"beta = {chk.beta!r}, threshold r* = {chk.threshold!r}, flagged directions = {int(np.max(chk.flagged))}",
        )
    if mode is Mode.PARABOLIC and not w0.is_ball and want("heat_weight_lower_bound"):
        mei = mei_lower_bound_check(w0, radii, 100, seed)
        add(
            "heat_weight_lower_bound",
            mei.threshold is not None,
            float(np.min(mei.min_margin)),
            f"threshold r* = {mei.threshold!r}",
        )
    return props


GEOMETRY_PROPERTIES = (
    "boundary_is_geodesic_sphere",
    "harmonic_measure_mass",
    "theta_measure_mass",
    "gradient_law",
    "heat_kernel_sandwich",
    "green_sandwich",
    "heat_weight_below_disk_green",
    "boundary_between_r_and_beta_r",
    "heat_weight_lower_bound",
)


def run_geometry(cfg: RunConfig) -> int:
    M = build_manifold(cfg)
    c = build_constants(M, cfg)
    props = geometry_properties(cfg)
    lines = _header(cfg, {} if c is None else c.describe())
    for p in props:
        lines.append(f"{'PASS' if p['pass'] else 'FAIL'} {p['name']} margin = {p['margin']!r} {p['detail']}".rstrip())
    ok = all(p["pass"] for p in props)
    report = {"config": cfg.resolved(), "constants": {} if c is None else c.describe(), "properties": props}
    _write(cfg.out, {"summary.txt": "\n".join(lines) + "\n", "geometry.json": json.dumps(report, indent=2, sort_keys=True) + "\n"})
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"fmt": run_fmt, "smt": run_smt, "geometry": run_geometry, "table": run_table}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nevanlab", description="Nevanlinna functions on model Kähler manifolds.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("fmt", "First Main Theorem closure table"),
        ("smt", "Second Main Theorem gap ratio and defects"),
        ("geometry", "geometric property checks for the exhaustion"),
        ("table", "dump the Nevanlinna table only"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="configuration file")
        s.add_argument("--out", help="output directory (overrides [run] out)")
        s.add_argument("--seed", type=int, help="seed for sampled quantities")
        s.add_argument("--grid", help="r-grid as min:max:count[:log]")
        s.add_argument("--tolerance", type=float, help="relative FMT tolerance (default 1e-3)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = load_config(args.config).with_overrides(args.out, args.seed, args.grid, args.tolerance)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (UnsupportedOperation, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NevanlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
