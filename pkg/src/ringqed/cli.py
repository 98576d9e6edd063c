"""Command-line front end.

Exit codes: 0 success, 1 runtime/convergence failure, 2 configuration
error, 3 acceptance failure (``figures`` and ``validate``).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import acceptance, oracle, routing
from .disorder import DisorderSpec, degraded_tuning_range, expected_structure_ratio
from .model import AtomChain, ParameterError, SystemParams
from .modes import LABELS, decompose_modes, spectrum_for_structure
from .recipes import RECIPES
from .scan import ResultTable, ScanConfig, _chain_for, extract_peaks, run_scan

log = logging.getLogger("ringqed")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_ACCEPTANCE = 0, 1, 2, 3


class ConfigError(Exception):
    pass


# ------------------------------------------------------------------ config assembly

FIXED_FLAGS = {
    "g": float, "kappa_in": float, "kappa_other": float, "gamma": float, "epsilon": float,
    "delta": float, "delta_ac": float, "n_atoms": int, "s_magnitude": float, "arg_s": float,
    "nc": float, "kappa_in_ratio": float, "sigma": float, "wavelength_nm": float, "samples": int,
}

DEFAULTS = {
    "spectrum": {
        "quantity": "n_tot",
        "axis1": {"name": "delta", "start": -6.0, "stop": 6.0, "points": 601},
        "axis2": {"name": "delta_ac", "start": -10.0, "stop": 10.0, "points": 201},
        "fixed": {"g": 0.5, "kappa_in": 0.1, "n_atoms": 20},
    },
    "modes": {"fixed": {"n_atoms": 10}},
    "routing": {"fixed": {"g": 0.5, "kappa_in": 0.1, "delta_ac": 10.0, "n_atoms": 10}},
    "phase": {
        "quantity": "phi_plus",
        "axis1": {"name": "s_magnitude", "values": [0.0, 5.0, 10.0]},
        "axis2": {"name": "delta", "start": -2.0, "stop": 2.0, "points": 401},
        "fixed": {"g": 0.5, "kappa_in": 0.1, "delta_ac": 10.0, "n_atoms": 10},
    },
    "disorder": {
        "quantity": "mean_s",
        "axis1": {"name": "n_atoms", "values": [2, 3, 4, 5, 6, 8, 10, 15, 20, 30, 40, 50, 60, 70, 80, 90, 100]},
        "fixed": {"sigma": 20.0, "samples": 10_000},
    },
    "validate": {"fixed": {"n_atoms": 1, "epsilon": 1e-3}},
    "figures": {},
}


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _parse_axis(text: str) -> dict:
    """``name:start:stop:points`` or ``name=v1,v2,...``."""
    if "=" in text:
        name, vals = text.split("=", 1)
        return {"name": name, "values": [float(v) for v in vals.split(",")]}
    parts = text.split(":")
    if len(parts) != 4:
        raise ConfigError(f"axis: cannot parse {text!r} (use name:start:stop:points or name=v1,v2)")
    try:
        return {"name": parts[0], "start": float(parts[1]), "stop": float(parts[2]), "points": int(parts[3])}
    except ValueError as exc:
        raise ConfigError(f"axis: cannot parse {text!r}: {exc}") from exc


def load_config(args) -> ScanConfig:
    doc = DEFAULTS.get(args.command, {})
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from exc
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config: top level must be a JSON object")
        # a config naming its own axes replaces the recipe axes wholesale
        if "axis1" in loaded:
            doc = {k: v for k, v in doc.items() if k not in ("axis1", "axis2")}
        doc = _merge(doc, loaded)
    over: dict = {"fixed": {}}
    for key in FIXED_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            over["fixed"][key] = value
    if getattr(args, "positions", None):
        over["fixed"]["positions"] = [float(v) for v in args.positions.split(",")]
        over["fixed"].setdefault("n_atoms", len(over["fixed"]["positions"]))
        over["fixed"]["s_magnitude"] = None
    for key in ("quantity", "engine", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            over[key] = value
    if getattr(args, "axis1", None):
        over["axis1"] = _parse_axis(args.axis1)
        over["axis2"] = None
    if getattr(args, "axis2", None):
        over["axis2"] = _parse_axis(args.axis2)
    axes = {k: over.pop(k) for k in ("axis1", "axis2") if k in over}
    doc = _merge(doc, over)
    doc.update(axes)
    try:
        return ScanConfig.model_validate(doc)
    except ValidationError as exc:
        first = exc.errors()[0]
        path = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise ConfigError(f"config error at {path}: {first['msg']}") from exc


def params_of(cfg: ScanConfig) -> SystemParams:
    fx = cfg.fixed
    kin, kother = fx.kappa_in, fx.kappa_other
    if fx.kappa_in_ratio is not None:
        k = kin + kother
        kin, kother = fx.kappa_in_ratio * k, (1 - fx.kappa_in_ratio) * k
    g = fx.g
    if fx.nc is not None:
        g = math.sqrt(fx.nc * (kin + kother) * fx.gamma / (4 * fx.n_atoms))
    return SystemParams(g=g, kappa_in=kin, kappa_other=kother, gamma=fx.gamma, epsilon=fx.epsilon,
                        delta=fx.delta, delta_ac=fx.delta_ac)


def chain_of(cfg: ScanConfig) -> AtomChain:
    fx = cfg.fixed
    if fx.positions is not None:
        return AtomChain(fx.positions)
    s = float(fx.n_atoms if fx.s_magnitude is None else fx.s_magnitude)
    return _chain_for(fx.n_atoms, s, fx.arg_s)


# ------------------------------------------------------------------ output


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _record_table(record: dict) -> ResultTable:
    """Two-column key/value table; complex values split into _re/_im rows."""
    table = ResultTable(["field", "value"])
    for key, value in record.items():
        if isinstance(value, complex):
            name, _, unit = key.partition("[")
            unit = f"[{unit}" if unit else ""
            table.rows.append([f"{name}_re{unit}", value.real])
            table.rows.append([f"{name}_im{unit}", value.imag])
        else:
            table.rows.append([key, value])
    return table


def _table_text(table: ResultTable, fmt: str) -> str:
    if fmt == "json" and table.columns == ["field", "value"]:
        return json.dumps({k: _jsonable(v) for k, v in table.rows}, indent=1) + "\n"
    return table.dump(fmt)


def _jsonable(v):
    if v is None:
        return "undefined"
    if isinstance(v, (bool, str, int)):
        return v
    v = float(v)
    return v if math.isfinite(v) else repr(v)


# ------------------------------------------------------------------ commands


def cmd_scan(args, cfg: ScanConfig) -> int:
    table = run_scan(cfg, threads=args.threads)
    if getattr(args, "peaks", False):
        if cfg.axis2 is not None or cfg.axis1.name != "delta":
            raise ConfigError("config error at axis1: --peaks needs a single delta axis")
        q = cfg.quantity
        fx = cfg.fixed
        spec = None
        if fx.n_atoms >= 1 and fx.positions is None:
            s = fx.n_atoms if fx.s_magnitude is None else fx.s_magnitude
            spec = spectrum_for_structure(params_of(cfg), fx.n_atoms, s)
        report = extract_peaks(table.column("delta"), table.column(q), spec)
        peaks = ResultTable(["center[gamma]", "height[1]", "fwhm[gamma]", "label"])
        for pk in report.peaks:
            peaks.rows.append([pk.center, pk.height, pk.fwhm, pk.label or ""])
        if report.diagnostic:
            log.warning("%s", report.diagnostic)
        table = peaks
    _emit(table.dump(args.format), args.out)
    if table.columns[-1] == "error" and table.errors:
        log.warning("%d grid points failed; see the error column", len(table.errors))
    return EXIT_OK


def cmd_modes(args, cfg: ScanConfig) -> int:
    p, chain = params_of(cfg), chain_of(cfg)
    m = decompose_modes(p, chain)
    ev = spectrum_for_structure(p, chain.n_atoms, abs(m.structure)).eigenvalues
    rec = {
        "n_atoms": chain.n_atoms,
        "structure_factor": complex(m.structure),
        "s_over_n": abs(m.structure) / chain.n_atoms,
        "g1[gamma]": m.g1,
        "g2[gamma]": m.g2,
        "dark_space_dim": m.dark_space_dim,
        "c1_plus": complex(m.c1[0]), "c1_minus": complex(m.c1[1]),
        "c2_plus": complex(m.c2[0]), "c2_minus": complex(m.c2[1]),
    }
    for lab, e in zip(LABELS, ev):
        rec[f"{lab}[gamma]"] = complex(e)
    _emit(_table_text(_record_table(rec), args.format), args.out)
    return EXIT_OK


def cmd_routing(args, cfg: ScanConfig) -> int:
    if args.feasible:
        region = routing.feasible_region(args.w, args.loss)
        if not region.feasible:
            print(f"no cooperativity up to 1e6 reaches W >= {args.w} and n_loss <= {args.loss}")
            return EXIT_RUNTIME
        rec = {
            "target_w": args.w, "target_loss": args.loss, "min_nc": region.min_nc,
            "delta_over_gamma_at_min_nc": region.min_nc_detuning,
            "min_detuning_large_nc": region.min_detuning_limit,
        }
        print(f"minimal NC = {region.min_nc:.2f} (Delta/gamma = {region.min_nc_detuning:.2f})", file=sys.stderr)
        _emit(_table_text(_record_table(rec), args.format), args.out)
        return EXIT_OK
    p = params_of(cfg)
    n = cfg.fixed.n_atoms
    if args.mirror_ratios:
        ratios = [float(v) for v in args.mirror_ratios.split(",")]
        nc = p.collective_cooperativity(n)
        scan = routing.mirror_ratio_scan(nc, p.delta_atom / p.gamma, ratios, n_atoms=n)
        table = ResultTable(["kappa_in_ratio[1]", "w[1]", "n_loss[1]", "error"])
        for r, w, l in zip(scan.ratios, scan.tuning_range, scan.n_loss):
            table.rows.append([r, w, l, ""])
        _emit(table.dump(args.format), args.out)
        return EXIT_OK
    m = routing.routing_metrics(p, chain_of(cfg))
    at_zero = p.replace(delta=0.0)
    figs = routing.router_figures(at_zero, n)
    rec = {
        "n_out_plus": m.n_out_plus, "n_out_minus": m.n_out_minus, "n_out_tot": m.n_out_tot,
        "phi_plus[rad]": m.phi_plus, "phi_minus[rad]": m.phi_minus, "relative_phase[rad]": m.relative_phase,
        "nc": p.collective_cooperativity(n), "w_numeric": figs.tuning_range,
        "n_loss_numeric": figs.n_loss, "argmax_s_loss": figs.argmax_s_loss,
    }
    if p.kappa_other == 0:
        nc, x = p.collective_cooperativity(n), p.delta_atom / p.gamma
        rec["w_closed_form"] = routing.tuning_range(nc, x)
        rec["n_loss_closed_form"] = routing.max_photon_loss_analytic(nc, x)
    _emit(_table_text(_record_table(rec), args.format), args.out)
    return EXIT_OK


def cmd_disorder(args, cfg: ScanConfig) -> int:
    code = cmd_scan(args, cfg)
    fx = cfg.fixed
    spec = DisorderSpec(sigma=fx.sigma / fx.wavelength_nm, samples=fx.samples, seed=cfg.seed)
    router = routing.router_params(100.0, 10.0)
    deg = degraded_tuning_range(router, 10, spec)
    clean = routing.tuning_range_numeric(router, 10)
    print(
        f"large-N law exp(-2k^2 sigma^2) = {expected_structure_ratio(spec.sigma):.5f}; "
        f"router at NC=100, Delta=10 gamma: W {clean:.4f} -> {deg.tuning_range_mean_s:.4f} "
        f"(sample-averaged {deg.tuning_range_monte_carlo:.4f}), n_loss {deg.n_loss_clean:.5f} -> {deg.n_loss_degraded:.5f}",
        file=sys.stderr,
    )
    return code


def cmd_validate(args, cfg: ScanConfig) -> int:
    p, chain = params_of(cfg), chain_of(cfg)
    if chain.n_atoms > oracle.MAX_ATOMS:
        raise ConfigError(f"config error at fixed.n_atoms: validate supports at most {oracle.MAX_ATOMS} atoms")
    r = acceptance.oracle_report(p, chain=chain, mf_epsilon=args.mf_epsilon)
    ok = r["oracle_vs_analytic"] < 0.01 and r["meanfield_vs_oracle"] < 0.02
    print(f"N={chain.n_atoms} oracle cutoff {r['cutoff']} (strong drive {r['cutoff_strong']})")
    print(f"max relative deviation oracle vs closed form: {r['oracle_vs_analytic']:.3e} (limit 1e-2)")
    print(f"max relative deviation mean field vs oracle at eps={args.mf_epsilon:g}: "
          f"{r['meanfield_vs_oracle']:.3e} (limit 2e-2)")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_ACCEPTANCE


def cmd_figures(args, cfg: ScanConfig) -> int:
    outdir = Path(args.out) if args.out else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)
    ok = True
    for name, recipe in RECIPES.items():
        if args.skip_recipes:
            break
        res = recipe(threads=args.threads)
        ok &= res.passed
        print(res.line(), flush=True)
        if outdir:
            for stem, table in res.tables.items():
                (outdir / f"{stem}.{args.format}").write_text(table.dump(args.format), encoding="utf-8")
    for crit in acceptance.CRITERIA:
        res = crit()
        ok &= res.passed
        print(res.line(), flush=True)
    print("ALL PASS" if ok else "SOME CHECKS FAILED")
    return EXIT_OK if ok else EXIT_ACCEPTANCE


COMMANDS = {
    "spectrum": cmd_scan, "modes": cmd_modes, "routing": cmd_routing, "phase": cmd_scan,
    "disorder": cmd_disorder, "validate": cmd_validate, "figures": cmd_figures,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scan configuration")
    common.add_argument("--out", help="output file (directory for 'figures'); stdout if omitted")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")
    over = common.add_argument_group("parameter overrides")
    for key, typ in FIXED_FLAGS.items():
        over.add_argument("--" + key.replace("_", "-"), dest=key, type=typ)
    over.add_argument("--positions", help="comma-separated atom positions in units of lambda")
    over.add_argument("--engine", choices=("analytic", "meanfield", "oracle"))
    over.add_argument("--quantity")
    over.add_argument("--axis1", help="name:start:stop:points or name=v1,v2,...")
    over.add_argument("--axis2", help="second axis, same syntax")

    parser = argparse.ArgumentParser(prog="ringqed", description="Atom chain in a ring cavity: spectra, modes and routing.")
    sub = parser.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("spectrum", parents=[common], help="transmission/photon-number scans")
    sp.add_argument("--peaks", action="store_true", help="report peaks of a 1D delta scan instead of the table")
    sub.add_parser("modes", parents=[common], help="collective mode decomposition and eigenvalues")
    rp = sub.add_parser("routing", parents=[common], help="router metrics and feasibility")
    rp.add_argument("--feasible", action="store_true", help="minimal NC for the --w/--loss targets")
    rp.add_argument("--w", type=float, default=0.9)
    rp.add_argument("--loss", type=float, default=0.01)
    rp.add_argument("--mirror-ratios", help="comma-separated kappa_in/kappa values to scan")
    pp = sub.add_parser("phase", parents=[common], help="output phase curves")
    pp.add_argument("--peaks", action="store_true", help=argparse.SUPPRESS)
    dp = sub.add_parser("disorder", parents=[common], help="Monte Carlo structure factor under position noise")
    dp.add_argument("--peaks", action="store_true", help=argparse.SUPPRESS)
    vp = sub.add_parser("validate", parents=[common], help="master equation vs closed form vs mean field")
    vp.add_argument("--mf-epsilon", type=float, default=0.01)
    fp = sub.add_parser("figures", parents=[common], help="run all recipes and acceptance checks")
    fp.add_argument("--skip-recipes", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.threads < 1:
        print("config error at threads: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (ParameterError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
