"""Command-line front end.

Config files are ``key = value`` lines. Keys are the field names of
:class:`SystemConfig` and :class:`PowerModelConfig` in SI units, or one of the
unit-suffixed aliases in :data:`ALIASES` (``noise_power_dbm = -96``,
``rho_u_mw = 200``, ``L_bs_gflops_per_w = 12.8`` ...). ``#`` starts a comment.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

from . import __version__
from . import study as st
from .analytic import Scheme
from .config import ConfigError, PowerModelConfig, SystemConfig, dbm_to_watt
from .power import PowerBreakdown

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

# alias -> (field, converter to SI)
ALIASES = {
    "noise_power_dbm": ("noise_power_w", dbm_to_watt),
    "rho_u_mw": ("rho_u", lambda v: v * 1e-3),
    "rho_p_mw": ("rho_p", lambda v: v * 1e-3),
    "rho_u_w": ("rho_u", float),
    "rho_p_w": ("rho_p", float),
    "bandwidth_mhz": ("bandwidth_hz", lambda v: v * 1e6),
    "coherence_bandwidth_khz": ("coherence_bandwidth_hz", lambda v: v * 1e3),
    "coherence_time_ms": ("coherence_time_s", lambda v: v * 1e-3),
    "L_bs_gflops_per_w": ("L_bs", lambda v: v * 1e9),
    "L_mt_gflops_per_w": ("L_mt", lambda v: v * 1e9),
    "P_cod_w_per_gbit": ("P_cod", lambda v: v * 1e-9),
    "P_dec_w_per_gbit": ("P_dec", lambda v: v * 1e-9),
    "P_bt_w_per_gbit": ("P_bt", lambda v: v * 1e-9),
}

SYS_FIELDS = {f.name: f for f in fields(SystemConfig)}
PM_FIELDS = {f.name: f for f in fields(PowerModelConfig)}
INT_FIELDS = {"M", "K", "C", "N", "L", "tau"}

# reduced link-level scale used by `validate` unless the user sets these keys
VALIDATE_DEFAULTS = {"M": 100, "K": 10, "N": 64, "L": 8}

SURFACE_COLUMNS = ("M", "K", "scheme", "drops", "seed", "sum_se_bpshz", "total_power_w",
                   "ee_bits_per_joule") + PowerBreakdown.COMPONENTS


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key == "tau" and raw.lower() in ("none", ""):
        return None
    try:
        return int(raw) if key in INT_FIELDS else float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as a number") from None


def parse_pairs(lines, source: str = "<config>") -> dict:
    """Resolve ``key = value`` lines to SI field values."""
    out = {}
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected key = value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in ALIASES:
            field_name, conv = ALIASES[key]
            out[field_name] = conv(_parse_value(field_name, raw))
        elif key in SYS_FIELDS or key in PM_FIELDS:
            out[key] = _parse_value(key, raw)
        else:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
    return out


def build_configs(values: dict) -> tuple[SystemConfig, PowerModelConfig]:
    sys_kw = {k: v for k, v in values.items() if k in SYS_FIELDS}
    pm_kw = {k: v for k, v in values.items() if k in PM_FIELDS}
    return SystemConfig(**sys_kw), PowerModelConfig(**pm_kw)


def load_config(path=None, overrides=()) -> tuple[SystemConfig, PowerModelConfig]:
    """Built-in defaults, then the file, then ``key=value`` overrides."""
    return build_configs(_resolve(path, overrides))


def _resolve(path, overrides) -> dict:
    values = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        values.update(parse_pairs(p.read_text().splitlines(), str(p)))
    values.update(parse_pairs(overrides, "--set"))
    return values


def parse_grid(spec: str) -> tuple[int, ...]:
    """``a:b:step`` (inclusive) or a comma list."""
    try:
        if ":" in spec:
            a, b, *step = (int(x) for x in spec.split(":"))
            return tuple(range(a, b + 1, step[0] if step else 1))
        return tuple(int(x) for x in spec.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"bad grid {spec!r}") from None


def _fmt(v) -> str:
    # repr of a float is the shortest round-trip string: byte-stable
    return repr(float(v)) if isinstance(v, float) else str(v)


def _schemes(filt: str) -> list[Scheme]:
    return {"sc": [Scheme.TD], "ofdm": [Scheme.FD], "both": [Scheme.TD, Scheme.FD]}[filt]


def _scheme_label(s: Scheme) -> str:
    return "SC" if s is Scheme.TD else "OFDM"


def surface_rows(points, schemes, extra: dict | None = None):
    for p in points:
        for s in schemes:
            br = p.power(s)
            row = {"M": p.M, "K": p.K, "scheme": _scheme_label(s), "drops": p.drops, "seed": p.seed,
                   "sum_se_bpshz": p.se(s), "total_power_w": br.total, "ee_bits_per_joule": p.ee(s)}
            row.update(br.as_dict())
            if extra:
                row = {**extra, **row}
            yield row


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def _summary(res: st.StudyResult, schemes, prefix: str = "") -> list[str]:
    lines = []
    for s in schemes:
        o = res.argmax(s)
        lines.append(f"{prefix}{_scheme_label(s):4s} EE_max = {o.ee / 1e6:.3f} Mbit/J at M={o.M}, K={o.K}"
                     f" (SE = {o.se:.2f} bit/s/Hz)")
    return lines


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mimoee", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file (missing keys take the defaults)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one key")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--drops", type=int, default=None)
    common.add_argument("--full-scale", action="store_true", help=f"use {st.FULL_SCALE_DROPS} drops")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--scheme", choices=("sc", "ofdm", "both"), default="both")
    common.add_argument("--m-grid", default=None, help="a:b:step or comma list")
    common.add_argument("--k-grid", default=None, help="a:b:step or comma list")
    common.add_argument("--workers", type=int, default=1, help="threads for drop generation")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    sub.add_parser("surface", parents=[common], help="EE(M, K) surface of both schemes")
    sub.add_parser("optimum", parents=[common], help="EE-maximising (M, K) per scheme")
    sub.add_parser("cell-sweep", parents=[common], help="optimum per cell-radius row")
    p = sub.add_parser("ce-sweep", parents=[common], help="optimum vs computational-efficiency scale")
    p.add_argument("--scales", default="1.0:2.0:0.05", help="a:b:step or comma list of floats")
    sub.add_parser("tradeoff", parents=[common], help="per-M EE-maximising K as (SE, EE)")
    p = sub.add_parser("validate", parents=[common], help="link-level check of the closed-form SINRs")
    p.add_argument("--symbols", type=int, default=1000, help="symbol slots per drop")
    return ap


def _parse_scales(spec: str) -> list[float]:
    try:
        if ":" in spec:
            a, b, step = (float(x) for x in spec.split(":"))
            n = int(round((b - a) / step))
            return [round(a + i * step, 10) for i in range(n + 1)]
        return [float(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad scale grid {spec!r}") from None


def run(args) -> int:
    values = _resolve(args.config, args.set)
    if args.command == "validate":
        values = {**VALIDATE_DEFAULTS, **values}
    cfg, pm = build_configs(values)
    if args.full_scale:
        drops = st.FULL_SCALE_DROPS
    elif args.drops is not None:
        drops = args.drops
    else:
        drops = 200 if args.command == "validate" else st.DEFAULT_DROPS
    if drops < 1:
        raise ConfigError("--drops must be >= 1")
    m_grid = parse_grid(args.m_grid) if args.m_grid else st.DEFAULT_M_GRID
    k_grid = parse_grid(args.k_grid) if args.k_grid else st.DEFAULT_K_GRID
    if args.command != "validate":
        st.check_grid(cfg, k_grid)
    schemes = _schemes(args.scheme)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    manifest = {
        "version": __version__, "subcommand": args.command, "config_path": args.config,
        "overrides": list(args.set), "seed": args.seed, "drops": drops, "output_dir": str(out),
        "scheme": args.scheme, "m_grid": list(m_grid), "k_grid": list(k_grid),
        "config": asdict(cfg), "power_model": asdict(pm),
    }
    lines = []
    kw = dict(drops=drops, seed=args.seed, workers=args.workers)

    if args.command in ("surface", "optimum"):
        res = st.ee_surface(cfg, pm, m_grid, k_grid, **kw)
        write_csv(out / "surface.csv", SURFACE_COLUMNS, surface_rows(res.grid, schemes))
        lines += _summary(res, schemes)
        if args.command == "surface" and len(schemes) == 2:
            g, p = res.max_gain_fd_over_td()
            lines.append(f"max OFDM-over-SC EE gain {100 * g:.1f}% at M={p.M}, K={p.K}")
    elif args.command == "cell-sweep":
        results = st.cell_radius_sweep(cfg, pm, st.CELL_RADIUS_SCHEDULE, m_grid=m_grid, k_grid=k_grid, **kw)
        cols = ("r_cell", "d_min", "L") + SURFACE_COLUMNS
        rows = []
        for r in results:
            md = r.metadata
            rows += surface_rows(r.grid, schemes, {"r_cell": md["r_cell"], "d_min": md["d_min"], "L": md["L"]})
            lines += _summary(r, schemes, f"r_cell={md['r_cell']:g} m, L={md['L']}: ")
            lines.append(f"  winner: {_scheme_label(r.winner)}")
        write_csv(out / "sweep.csv", cols, rows)
    elif args.command == "ce-sweep":
        rep = st.ce_sweep(cfg, pm, _parse_scales(args.scales), m_grid=m_grid, k_grid=k_grid, **kw)
        rows = []
        for s, r in zip(rep.scales, rep.results):
            rows += surface_rows(r.grid, schemes, {"ce_scale": float(s)})
            lines += _summary(r, schemes, f"ce_scale={s:.2f}: ")
        write_csv(out / "sweep.csv", ("ce_scale",) + SURFACE_COLUMNS, rows)
        lines.append("crossover (smallest scale with SC >= OFDM): "
                     + ("none in grid" if rep.crossover is None else f"{rep.crossover:.2f}"))
        manifest["crossover"] = rep.crossover
    elif args.command == "tradeoff":
        res = st.ee_surface(cfg, pm, m_grid, k_grid, **kw)
        curve = st.tradeoff_curve(cfg, pm, m_grid, k_grid=k_grid, result=res, **kw)
        keep = {(t.scheme, t.M, t.K) for t in curve}
        rows = [r for s in schemes for r in surface_rows(
            [p for p in res.grid if (s, p.M, p.K) in keep], [s])]
        rows.sort(key=lambda r: (r["scheme"], r["M"]))
        write_csv(out / "surface.csv", SURFACE_COLUMNS, rows)
        for t in curve:
            if t.scheme in schemes:
                lines.append(f"{_scheme_label(t.scheme):4s} M={t.M:3d} K*={t.K:2d} SE={t.se:6.2f} "
                             f"EE={t.ee / 1e6:.3f} Mbit/J")
    elif args.command == "validate":
        rep = st.validate_linklevel(cfg, drops, args.symbols, args.seed, args.workers)
        cols = ("scheme", "drops", "symbols_per_drop", "seed", "sinr_gap_db", "rate_gap_bpcu",
                "genie_rate_gap_bpcu")
        rows = [{"scheme": _scheme_label(s), "drops": drops, "symbols_per_drop": args.symbols,
                 "seed": args.seed, "sinr_gap_db": rep.sinr_gap_db[s], "rate_gap_bpcu": rep.rate_gap_bpcu[s],
                 "genie_rate_gap_bpcu": rep.genie_rate_gap_bpcu[s]} for s in schemes]
        write_csv(out / "validation.csv", cols, rows)
        for r in rows:
            lines.append(f"{r['scheme']:4s} SINR gap {r['sinr_gap_db']:.3f} dB, rate gap "
                         f"{r['rate_gap_bpcu']:.4f} bpcu (genie ergodic {r['genie_rate_gap_bpcu']:.3f})")
        manifest["symbols_per_drop"] = args.symbols

    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return run(args)
    except ConfigError as e:
        print(f"mimoee: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # any module failure maps to the runtime code
        print(f"mimoee: error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
