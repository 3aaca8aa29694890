"""Command-line front end: threshold analysis, threshold surfaces, scenario
simulation and report re-rendering.

Standard output stays machine-parseable (key=value lines or CSV); progress
goes to standard error. Exit codes: 0 success, 2 configuration error,
3 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import analytic, dataio, kernels, montecarlo
from .market import ConfigError, HomogeneousSpec


def _parse_kv(pairs, what, cast=float):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"expected {what} as name=value, got {item!r}")
        name, value = item.split("=", 1)
        try:
            out[name.strip()] = cast(value)
        except ValueError:
            raise ConfigError(f"bad value in {what} {item!r}") from None
    return out


def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must be lo:hi:steps, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"grid must be lo:hi:steps, got {text!r}") from None
    if n < 1:
        raise ConfigError("grid needs at least one point")
    return np.linspace(lo, hi, n)


def _load_ce_file(path: str) -> tuple[tuple[str, ...], tuple[float, ...]]:
    """Two-column class,exposure text file (header optional)."""
    names, values = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.lower().replace(" ", "") == "class,exposure":
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise ConfigError(f"{path}:{lineno}: expected class,exposure")
            try:
                values.append(float(parts[1]))
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: non-numeric exposure") from None
            names.append(parts[0])
    if not names:
        raise ConfigError(f"{path}: no exposure rows")
    return tuple(names), tuple(values)


def _homogeneous_spec(args) -> HomogeneousSpec:
    source = args.ce
    if source.startswith("equal:"):
        try:
            k = int(source.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"equal:<K> needs an integer, got {source!r}") from None
        if k < 1:
            raise ConfigError("equal:<K> needs K >= 1")
        spec = HomogeneousSpec(
            credit_exposures=(1.0,) * k,
            alphas=(1.0,) * k,
            rho=args.rho,
            cleared_class=k - 1,
            class_names=tuple(f"class{i + 1}" for i in range(k)),
        )
    elif os.path.exists(source):
        names, values = _load_ce_file(source)
        spec = HomogeneousSpec(
            credit_exposures=values,
            alphas=(1.0,) * len(values),
            rho=args.rho,
            cleared_class=len(values) - 1,
            class_names=names,
        )
    else:
        base = dataio.builtin_credit_exposures(source)
        spec = HomogeneousSpec(
            credit_exposures=base.credit_exposures,
            alphas=base.alphas,
            rho=args.rho,
            cleared_class=base.cleared_class,
            class_names=base.class_names,
        )
    alphas = list(spec.alphas)
    for name, value in _parse_kv(args.alpha, "--alpha").items():
        if name not in spec.class_names:
            raise ConfigError(
                f"unknown class {name!r}; available: {list(spec.class_names)}"
            )
        alphas[spec.class_names.index(name)] = value
    cleared = spec.cleared_class
    if args.cleared is not None:
        if args.cleared not in spec.class_names:
            raise ConfigError(f"unknown cleared class {args.cleared!r}")
        cleared = spec.class_names.index(args.cleared)
    return HomogeneousSpec(
        credit_exposures=spec.credit_exposures,
        alphas=tuple(alphas),
        rho=args.rho,
        cleared_class=cleared,
        class_names=spec.class_names,
    )


def cmd_threshold(args) -> int:
    spec = _homogeneous_spec(args)
    result = analytic.min_clearing_members(spec, w=args.w)
    n = result.n_star
    print(f"n_star={n}")
    for m in sorted({max(2, n - 1), n, n + 1}):
        print(
            f"N={m} bilateral_ee={result.bilateral_ee(m):.10g} "
            f"ccp_ee={result.ccp_ee(m):.10g}"
        )
    return 0


def cmd_surface(args) -> int:
    spec = _homogeneous_spec(args)
    alpha_grid = _parse_grid(args.alpha_grid)
    rho_grid = _parse_grid(args.rho_grid)
    surface = analytic.threshold_surface(spec, alpha_grid, rho_grid, w=args.w)
    analytic.write_surface(args.out, alpha_grid, rho_grid, surface)
    print(f"surface={args.out} cells={surface.size}")
    return 0


def cmd_scenarios(args) -> int:
    rc = dataio.load_run_config(args.config) if args.config else dataio.RunConfig()
    if args.notionals is not None:
        rc.notionals = args.notionals
    if args.rho is not None:
        rc.rho = args.rho
    rc.betas.update(_parse_kv(args.beta, "--beta"))
    rc.w.update(_parse_kv(args.w, "--w"))
    for cls, marg in _parse_kv(args.marginal, "--marginal", cast=str).items():
        if marg not in ("gaussian", "t3"):
            raise ConfigError(f"marginal must be gaussian or t3, got {marg!r}")
        rc.marginals[cls] = marg
    if args.paths is not None:
        rc.paths = args.paths
    if args.seed is not None:
        rc.seed = args.seed
    if args.mirror is not None:
        rc.mirror_dealers = args.mirror
    if args.out is not None:
        rc.out_dir = args.out

    config, model, scenarios, assumptions = dataio.build_market(rc)
    print(
        f"running {len(scenarios)} scenarios, paths={rc.paths}, seed={rc.seed}, "
        f"backend={args.backend or kernels.DEFAULT_BACKEND}",
        file=sys.stderr,
    )
    report = montecarlo.simulate(
        config,
        model,
        scenarios,
        rc.paths,
        rc.seed,
        threads=args.threads,
        level=args.level,
        backend=args.backend,
        collect_histograms=args.histograms,
        keep_samples=args.dump_paths,
        assumptions=assumptions,
    )
    files = dataio.write_report(report, rc.out_dir)
    if not config.has_t_marginals():
        # the closed forms exist for all-Gaussian runs; this file depends on
        # the market only, so --paths can never change it
        files["analytic_ee"] = dataio.write_analytic_ee(config, scenarios, rc.out_dir)
    if args.dump_paths:
        path = os.path.join(rc.out_dir, "paths.csv")
        montecarlo.write_path_dump(report, path)
        files["paths"] = path
    for s, name in enumerate(report.scenario_names):
        line = (
            f"scenario={name} total_ee={report.total_ee[s]:.6g} "
            f"mean_max={report.mean_max[s]:.6g}"
        )
        if report.base_index is not None:
            line += (
                f" total_ee_ratio={report.total_ee_ratio[s]:.6g}"
                f" mean_max_ratio={report.mean_max_ratio[s]:.6g}"
            )
        print(line)
    for name, path in sorted(files.items()):
        print(f"file_{name}={path}")
    return 0


def cmd_report(args) -> int:
    report = dataio.load_report(args.dump)
    files = dataio.write_report(report, args.out)
    for name, path in sorted(files.items()):
        print(f"file_{name}={path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccpnet",
        description="Bilateral vs multilateral netting analysis for OTC dealer markets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "threshold", help="minimum clearing members for a homogeneous market"
    )
    p.add_argument(
        "--ce", default="bis-2010h1", help="builtin name, equal:<K>, or class,exposure CSV"
    )
    p.add_argument("--alpha", action="append", metavar="CLASS=V")
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--cleared", default=None, metavar="CLASS")
    p.add_argument("--w", type=float, default=1.0, help="clearing fraction")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("surface", help="threshold over an (alpha, rho) grid")
    p.add_argument("--ce", default="bis-2010h1")
    p.add_argument("--alpha", action="append", metavar="CLASS=V")
    p.add_argument("--rho", type=float, default=0.0, help="base rho (unused in grid)")
    p.add_argument("--cleared", default=None, metavar="CLASS")
    p.add_argument("--w", type=float, default=1.0)
    p.add_argument("--alpha-grid", required=True, metavar="LO:HI:N")
    p.add_argument("--rho-grid", required=True, metavar="LO:HI:N")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("scenarios", help="simulate the five clearing scenarios")
    p.add_argument("--config", default=None, help="run-config file")
    p.add_argument("--notionals", default=None, help="builtin name or CSV path")
    p.add_argument("--beta", action="append", metavar="CLASS=V")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--w", action="append", metavar="CLASS=V")
    p.add_argument("--marginal", action="append", metavar="CLASS=gaussian|t3")
    p.add_argument("--paths", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--level", type=float, default=0.99, help="VaR/ES level")
    p.add_argument("--out", default=None)
    p.add_argument("--mirror", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument(
        "--histograms", action=argparse.BooleanOptionalAction, default=True
    )
    p.add_argument("--dump-paths", action="store_true")
    p.add_argument("--backend", choices=kernels.available_backends(), default=None)
    p.set_defaults(func=cmd_scenarios)

    p = sub.add_parser("report", help="re-render tables from a report dump")
    p.add_argument("--dump", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
