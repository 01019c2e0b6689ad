"""Command-line interface: reproducible runs from strict JSON configs.

Every output CSV embeds the effective config as a comment header, so a file
can be regenerated bit-for-bit from its own echo.  Exit codes: 0 success,
1 configuration or validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__
from .analysis import drift_to_field, sweep_shift, sweep_shuttle_time
from .control import build_schedule
from .dynamics import LeakageError, dwell_phase_params
from .gate_algebra import verify_identities, wrap_phase
from .protocol import calibrate_tau
from .spin_model import (
    AnalyticHyperfine,
    DipolarPair,
    SpinPairParams,
    TableHyperfine,
    dipolar_max_strength,
    hyperfine_at,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


class ConfigError(ValueError):
    pass


DEFAULT_CONFIG = {
    "b_mt": 100.0,
    "hyperfine": {
        "kind": "analytic",
        "a_max_mhz": 117.0,
        "e_rop_mv_per_m": 2.0,
        "kappa": 0.01,
        "e_knee_mv_per_m": 1.0,
        "clamp_width_mv_per_m": 0.5,
    },
    "schedule": {
        "e_start_mv_per_m": 3.8,
        "t_ramp_ns": 20.0,
        "steps_per_ramp": 4000,
    },
    "tau_ns": "calibrate",
    "sweep": {
        "shuttle_times_ns": [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
        "deltas_mv_per_m": [0.0, 1e-3, 3.1623e-3, 1e-2, 3.1623e-2, 1e-1],
        "kinds": ["static", "alternating"],
        "travel_idle_ns": 0.0,
    },
    "dipolar_r_nm": 1.0,
    "seed": 42,
    "identity_sets": 10000,
    "corrupt_convention": False,
}

_TABLE_HYPERFINE_KEYS = {"kind", "path"}


def _check_keys(section, allowed, where):
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown config key(s) in {where}: {sorted(unknown)}")


def _merged(user, default, where):
    if not isinstance(user, dict):
        raise ConfigError(f"{where} must be an object")
    _check_keys(user, default, where)
    out = {}
    for key, base in default.items():
        if isinstance(base, dict) and key in user:
            out[key] = _merged(user[key], base, f"{where}.{key}")
        else:
            out[key] = user.get(key, base)
    return out


def load_config(path: str | None) -> dict:
    """Merge a user config file over the defaults with strict key checking."""
    if path is None:
        user = {}
    else:
        with open(path, encoding="utf-8") as fh:
            user = json.load(fh)
    if not isinstance(user, dict):
        raise ConfigError("config root must be a JSON object")
    hyper = user.get("hyperfine", {})
    if isinstance(hyper, dict) and hyper.get("kind") == "table":
        _check_keys(hyper, _TABLE_HYPERFINE_KEYS, "hyperfine")
        if "path" not in hyper:
            raise ConfigError("table hyperfine needs a 'path'")
        rest = {k: v for k, v in user.items() if k != "hyperfine"}
        cfg = _merged(rest, {k: v for k, v in DEFAULT_CONFIG.items()
                             if k != "hyperfine"}, "config")
        cfg["hyperfine"] = {"kind": "table", "path": hyper["path"]}
    else:
        cfg = _merged(user, DEFAULT_CONFIG, "config")
    _validate(cfg)
    return cfg


def _require_number(value, name, positive=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) \
            or not math.isfinite(value):
        raise ConfigError(f"{name} must be a finite number")
    if positive and value <= 0:
        raise ConfigError(f"{name} must be positive")
    if nonneg and value < 0:
        raise ConfigError(f"{name} must be non-negative")


def _validate(cfg: dict) -> None:
    _require_number(cfg["b_mt"], "b_mt", nonneg=True)
    hyper = cfg["hyperfine"]
    if hyper["kind"] == "analytic":
        for key in ("a_max_mhz", "kappa", "e_knee_mv_per_m", "clamp_width_mv_per_m"):
            _require_number(hyper[key], f"hyperfine.{key}", positive=True)
        _require_number(hyper["e_rop_mv_per_m"], "hyperfine.e_rop_mv_per_m")
    elif hyper["kind"] != "table":
        raise ConfigError("hyperfine.kind must be 'analytic' or 'table'")
    sched = cfg["schedule"]
    _require_number(sched["e_start_mv_per_m"], "schedule.e_start_mv_per_m")
    _require_number(sched["t_ramp_ns"], "schedule.t_ramp_ns", positive=True)
    if isinstance(sched["steps_per_ramp"], bool) or \
            not isinstance(sched["steps_per_ramp"], int) or sched["steps_per_ramp"] < 2:
        raise ConfigError("schedule.steps_per_ramp must be an integer >= 2")
    if cfg["tau_ns"] != "calibrate":
        _require_number(cfg["tau_ns"], "tau_ns", positive=True)
    sweep = cfg["sweep"]
    if not isinstance(sweep["shuttle_times_ns"], list) or not sweep["shuttle_times_ns"]:
        raise ConfigError("sweep.shuttle_times_ns must be a non-empty list")
    for t in sweep["shuttle_times_ns"]:
        _require_number(t, "sweep.shuttle_times_ns entry", positive=True)
    if not isinstance(sweep["deltas_mv_per_m"], list):
        raise ConfigError("sweep.deltas_mv_per_m must be a list")
    for d in sweep["deltas_mv_per_m"]:
        _require_number(d, "sweep.deltas_mv_per_m entry", nonneg=True)
    if 0.0 not in [float(d) for d in sweep["deltas_mv_per_m"]]:
        raise ConfigError("sweep.deltas_mv_per_m must include 0 as the baseline")
    for kind in sweep["kinds"]:
        if kind not in ("static", "alternating"):
            raise ConfigError(f"unknown sweep kind {kind!r}")
    _require_number(sweep["travel_idle_ns"], "sweep.travel_idle_ns", nonneg=True)
    _require_number(cfg["dipolar_r_nm"], "dipolar_r_nm", positive=True)
    for key in ("seed", "identity_sets"):
        if isinstance(cfg[key], bool) or not isinstance(cfg[key], int) or cfg[key] < 0:
            raise ConfigError(f"{key} must be a non-negative integer")
    if not isinstance(cfg["corrupt_convention"], bool):
        raise ConfigError("corrupt_convention must be a boolean")


def build_model(cfg: dict):
    hyper = cfg["hyperfine"]
    if hyper["kind"] == "table":
        return TableHyperfine.from_csv(hyper["path"])
    return AnalyticHyperfine(
        a_max_mhz=hyper["a_max_mhz"],
        e_rop=hyper["e_rop_mv_per_m"],
        kappa=hyper["kappa"],
        e_knee=hyper["e_knee_mv_per_m"],
        clamp_width=hyper["clamp_width_mv_per_m"],
    )


def build_params(cfg: dict) -> SpinPairParams:
    return SpinPairParams(b_mt=cfg["b_mt"], hyperfine=build_model(cfg))


def build_run_schedule(cfg: dict, params: SpinPairParams, tau: float):
    sched = cfg["schedule"]
    t_ramp = float(sched["t_ramp_ns"])
    return build_schedule(
        e_start=float(sched["e_start_mv_per_m"]),
        e_rop=params.hyperfine.e_rop,
        t_ramp=t_ramp,
        tau=tau,
        dt=t_ramp / int(sched["steps_per_ramp"]),
    )


def resolve_tau(cfg: dict, params: SpinPairParams) -> float:
    if cfg["tau_ns"] == "calibrate":
        return calibrate_tau(params)
    return float(cfg["tau_ns"])


def _config_echo(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def _write_csv(path, cfg, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# robustcz {__version__}\n")
        fh.write(f"# config: {_config_echo(cfg)}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return "%.17g" % value


def cmd_verify_identities(cfg, out, jobs):
    checks = verify_identities(seed=cfg["seed"], n_sets=cfg["identity_sets"],
                               corrupt=cfg["corrupt_convention"])
    ok = True
    for chk in checks:
        passed = chk.max_error < 1e-9
        ok = ok and passed
        print(f"{'PASS' if passed else 'FAIL'}  {chk.name}: max error {chk.max_error:.3e}")
    if out:
        _write_csv(out, cfg, "identity,max_error",
                   [(chk.name.replace(",", ";"), chk.max_error) for chk in checks])
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_universality(cfg, out, jobs):
    # the measurement-circuit subset of the identity checks, at 1e-9
    checks = [c for c in verify_identities(seed=cfg["seed"], n_sets=1)
              if "circuit" in c.name or "measurement" in c.name]
    ok = True
    for chk in checks:
        passed = chk.max_error < 1e-9
        ok = ok and passed
        print(f"{'PASS' if passed else 'FAIL'}  {chk.name}: max error {chk.max_error:.3e}")
    if out:
        _write_csv(out, cfg, "identity,max_error",
                   [(chk.name.replace(",", ";"), chk.max_error) for chk in checks])
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_calibrate_tau(cfg, out, jobs):
    params = build_params(cfg)
    tau = calibrate_tau(params)
    a_rop = float(hyperfine_at(params.hyperfine, params.hyperfine.e_rop))
    residual = float(wrap_phase(dwell_phase_params(params, a_rop, tau)[2] - math.pi))
    print(f"tau = {tau:.9f} ns (dwell conditional phase residual {residual:.3e} rad)")
    if out:
        _write_csv(out, cfg, "tau_ns,conditional_phase_residual_rad",
                   [(tau, residual)])
    return EXIT_OK


def cmd_sweep_shuttle(cfg, out, jobs):
    params = build_params(cfg)
    template = build_run_schedule(cfg, params, tau=0.0)
    result = sweep_shuttle_time(params, template, cfg["sweep"]["shuttle_times_ns"],
                                jobs=jobs)
    crossing = result.first_below(1e-4)
    if crossing is None:
        print("flip-flop probability never fell below 1e-4 in the sweep range")
    else:
        print(f"first shuttle time with flip-flop probability < 1e-4: {crossing:g} ns")
    print(f"monotone non-increasing over the sweep: {result.non_increasing}")
    if out:
        _write_csv(out, cfg, "shuttle_time_ns,flip_flop_probability", result.rows)
    return EXIT_OK


def cmd_sweep_shift(cfg, out, jobs):
    params = build_params(cfg)
    tau = resolve_tau(cfg, params)
    schedule = build_run_schedule(cfg, params, tau)
    sweep = cfg["sweep"]
    result = sweep_shift(params, schedule, tau, kinds=tuple(sweep["kinds"]),
                         deltas=sweep["deltas_mv_per_m"],
                         travel_idle=sweep["travel_idle_ns"], jobs=jobs)
    for kind in sweep["kinds"]:
        slope = result.slope(kind)
        text = "n/a" if slope is None else f"{slope:.3f}"
        print(f"{kind}: fitted log-log slope of the worst phase channel = {text}")
    if out:
        _write_csv(out, cfg,
                   "kind,delta_E_MV_per_m,channel,delta_rad,worst_case_probability",
                   result.rows)
    return EXIT_OK


def cmd_dipolar(cfg, out, jobs):
    r = float(cfg["dipolar_r_nm"])
    pairs = [
        ("electron-electron", DipolarPair.electron_electron(r)),
        ("electron-nucleus", DipolarPair.electron_nucleus(r)),
        ("nucleus-nucleus", DipolarPair.nucleus_nucleus(r)),
    ]
    rows = []
    for name, pair in pairs:
        strength = dipolar_max_strength(pair)
        rows.append((name, r, strength))
        print(f"{name} at r = {r:g} nm: {strength:.6g} Hz")
    if out:
        _write_csv(out, cfg, "pair,r_nm,max_strength_hz", rows)
    return EXIT_OK


_COMMANDS = {
    "verify-identities": cmd_verify_identities,
    "universality": cmd_universality,
    "calibrate-tau": cmd_calibrate_tau,
    "sweep-shuttle": cmd_sweep_shuttle,
    "sweep-shift": cmd_sweep_shift,
    "dipolar": cmd_dipolar,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="robustcz",
        description="Adiabatic shuttle gate simulator: identities, calibration, sweeps.")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--out", default=None, help="output CSV path")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel workers for sweeps")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs < 1:
        print("config error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](cfg, args.out, args.jobs)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LeakageError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
