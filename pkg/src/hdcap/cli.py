"""Command-line front end.

Usage examples:
  hdcap curve --scheme fsk --m 2 --channel awgn
  hdcap curve --scheme psk --m 3 --channel rician --k 1 --output json
  hdcap lowsnr --channel rician --k 1 --m 2 4 8 32
  hdcap simulate --scheme psk --m 4 --channel awgn --snr-db 0 --seed 42 --trials 1000000

Exit codes: 0 success, 1 usage error, 2 numeric failure, 3 simulation deviation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from .channel import ChannelKind, ChannelSpec, NumericalError
from .metrics import Scheme, default_snr_grid, received_energy_scale, sweep
from .oofsk import OofskConfig
from .psk import PskConfig, psk_lowsnr, psk_lowsnr_asymptotic
from .simcheck import simulate_oofsk, simulate_psk

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_DEVIATION = 0, 1, 2, 3
CURVE_HEADER = ["snr_db", "rate_nats", "spectral_eff", "eb_n0_db"]
LOWSNR_HEADER = ["m", "c_dot0", "c_ddot0", "eb_zero_se_db", "s0"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def _json_num(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def build_channel(cfg: dict) -> ChannelSpec:
    kind = cfg.get("channel", "awgn")
    d, gamma_sq, k = cfg.get("d"), cfg.get("gamma_sq"), cfg.get("k")
    omega = cfg.get("omega", 1.0)
    if kind == "awgn":
        if gamma_sq not in (None, 0, 0.0) or k is not None:
            raise UsageError("awgn channel takes only --d")
        return ChannelSpec.awgn(1.0 if d is None else d)
    if kind not in ("rician", "noncoherent", "coherent"):
        raise UsageError(f"unknown channel {kind!r}")
    coherent = kind == "coherent"
    if k is not None:
        if d is not None or gamma_sq is not None:
            raise UsageError("give either --k (with optional --omega) or --d/--gamma-sq")
        return ChannelSpec.rician(k, omega, coherent=coherent)
    if d is None or gamma_sq is None:
        raise UsageError(f"{kind} channel needs --k or both --d and --gamma-sq")
    return ChannelSpec(ChannelKind.COHERENT if coherent else ChannelKind.NONCOHERENT, d, gamma_sq)


def build_scheme(cfg: dict) -> Scheme:
    scheme = cfg.get("scheme")
    m = cfg.get("m")
    if isinstance(m, list):
        if len(m) != 1:
            raise UsageError(f"{scheme} takes a single --m")
        m = m[0]
    if scheme is None or m is None:
        raise UsageError("--scheme and --m are required")
    nu = cfg.get("nu")
    if scheme == "oofsk":
        if nu is None:
            raise UsageError("oofsk requires --nu")
    elif scheme == "fsk":
        if nu not in (None, 1, 1.0):
            raise UsageError("fsk implies --nu 1")
        nu = 1.0
    elif scheme == "psk":
        if nu is not None:
            raise UsageError("psk takes no --nu")
        nu = 1.0
    try:
        return Scheme(scheme, int(m), float(nu))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _merged_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        grid = cfg.pop("snr_grid", None) or {}
        for key in ("min_db", "max_db", "points"):
            if key in grid:
                cfg.setdefault(key, grid[key])
    for key, val in vars(args).items():
        if val is not None and key not in ("command", "config", "func"):
            cfg[key] = val
    return cfg


def _emit(out, payload: dict, rows: list[list], header: list[str], summary: dict,
          fmt: str, quiet: bool):
    if fmt == "json":
        doc = {"schema": SCHEMA_VERSION, **payload,
               "summary": {k: _json_num(v) for k, v in summary.items()}}
        if not quiet:
            doc["rows"] = [dict(zip(header, map(_json_num, r))) for r in rows]
        json.dump(doc, out, indent=2)
        out.write("\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    if not quiet:
        writer.writerow(header)
        for r in rows:
            writer.writerow([_fmt(v) for v in r])
    for k, v in summary.items():
        out.write(f"# {k},{_fmt(v)}\n")


def cmd_curve(cfg: dict, out) -> int:
    scheme = build_scheme(cfg)
    spec = build_channel(cfg)
    try:
        grid = default_snr_grid(float(cfg.get("min_db", -50.0)), float(cfg.get("max_db", 20.0)),
                                int(cfg.get("points", 60)))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad SNR grid: {exc}") from None
    scale = received_energy_scale(spec)
    res = sweep(scheme, spec, grid, scale=scale)
    rows = [[p.snr_db, p.rate_nats, p.spectral_eff, p.eb_n0_db] for p in res.points]
    summary = {"min_eb_db": res.min_eb_db, "se_at_min": res.se_at_min,
               "snr_at_min": res.snr_at_min}
    payload = {"command": "curve", "scheme": scheme.kind, "m": scheme.m, "nu": scheme.nu,
               "channel": {"kind": spec.kind.value, "d": spec.d, "gamma_sq": spec.gamma_sq},
               "energy_scale": scale}
    _emit(out, payload, rows, CURVE_HEADER, summary, cfg.get("output", "csv"),
          cfg.get("quiet", False))
    return EXIT_OK


def cmd_lowsnr(cfg: dict, out) -> int:
    if cfg.get("scheme", "psk") != "psk":
        raise UsageError("lowsnr is defined for psk only")
    spec = build_channel(cfg)
    ms = cfg.get("m") or [2, 3, 4, 8, 16, 32]
    if not isinstance(ms, list):
        ms = [ms]
    rows = []
    for m in ms:
        try:
            s = psk_lowsnr(PskConfig(int(m)), spec)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        rows.append([int(m), s.c_dot0, s.c_ddot0, s.eb_n0_zero_se_db, s.s0])
    s = psk_lowsnr_asymptotic(spec)
    rows.append([math.inf, s.c_dot0, s.c_ddot0, s.eb_n0_zero_se_db, s.s0])
    payload = {"command": "lowsnr", "scheme": "psk",
               "channel": {"kind": spec.kind.value, "d": spec.d, "gamma_sq": spec.gamma_sq}}
    quiet = cfg.get("quiet", False)
    summary = {"eb_zero_se_db_inf": s.eb_n0_zero_se_db, "s0_inf": s.s0}
    _emit(out, payload, rows, LOWSNR_HEADER, summary, cfg.get("output", "csv"), quiet)
    return EXIT_OK


def cmd_simulate(cfg: dict, out) -> int:
    scheme = build_scheme(cfg)
    spec = build_channel(cfg)
    trials, seed = cfg.get("trials"), cfg.get("seed")
    if trials is None or seed is None:
        raise UsageError("simulate needs --trials and --seed")
    if int(trials) < 1:
        raise UsageError("--trials must be >= 1")
    if "snr_db" not in cfg:
        raise UsageError("simulate needs --snr-db")
    snr = 10.0 ** (cfg["snr_db"] / 10.0)
    if scheme.kind == "psk":
        rep = simulate_psk(PskConfig(scheme.m), spec, snr, int(trials), int(seed))
    else:
        rep = simulate_oofsk(OofskConfig(scheme.m, scheme.nu), spec, snr, int(trials), int(seed))
    doc = rep.to_json()
    if cfg.get("quiet", False):
        doc = {k: doc[k] for k in ("schema", "scheme", "seed", "trials", "max_abs_dev",
                                   "sigma_bound", "passed")}
    json.dump(doc, out, indent=2)
    out.write("\n")
    return EXIT_OK if rep.passed else EXIT_DEVIATION


def _add_common(p: argparse.ArgumentParser, multi_m: bool = False):
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--scheme", choices=["psk", "oofsk", "fsk"])
    if multi_m:
        p.add_argument("--m", type=int, nargs="+")
    else:
        p.add_argument("--m", type=int)
    p.add_argument("--nu", type=float, help="duty cycle (oofsk)")
    p.add_argument("--channel", choices=["awgn", "rician", "noncoherent", "coherent"],
                   help="rician = noncoherent Rician fading")
    p.add_argument("--k", type=float, help="Rician factor |d|^2/gamma^2 (0 = Rayleigh)")
    p.add_argument("--omega", type=float, help="total channel power d^2 + gamma^2 (default 1)")
    p.add_argument("--d", type=float, help="line-of-sight gain |d|")
    p.add_argument("--gamma-sq", dest="gamma_sq", type=float, help="diffuse variance")
    p.add_argument("--output", choices=["csv", "json"])
    p.add_argument("--quiet", action="store_true", default=None, help="summary only")


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hdcap", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("curve", help="spectral efficiency / bit energy sweep")
    _add_common(p)
    p.add_argument("--min-db", dest="min_db", type=float)
    p.add_argument("--max-db", dest="max_db", type=float)
    p.add_argument("--points", type=int)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("lowsnr", help="closed-form low-SNR PSK table")
    _add_common(p, multi_m=True)
    p.set_defaults(func=cmd_lowsnr)

    p = sub.add_parser("simulate", help="Monte Carlo check of transition probabilities")
    _add_common(p)
    p.add_argument("--snr-db", dest="snr_db", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = make_parser().parse_args(argv)
    func = args.func
    try:
        cfg = _merged_config(args)
        buf = io.StringIO()
        code = func(cfg, buf)
    except UsageError as exc:
        print(f"hdcap {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, ArithmeticError) as exc:
        print(f"hdcap {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out.write(buf.getvalue())
    return code


if __name__ == "__main__":
    raise SystemExit(main())
