"""Command-line front end: threshold, lsa-scan, simulate, diagnose, sweep.

Every file this tool writes is a deterministic function of the config bytes
and the command-line arguments; sweeps fan out share-nothing subprocesses and
assemble their manifest in index order, so results do not depend on --jobs.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics, gridio, lsa
from .config import (
    ConfigError,
    RunConfig,
    config_from_dict,
    default_config,
    describe_keys,
    dump_config,
    load_config,
    set_by_path,
)
from .dynamics import (
    AdiabaticSolveError,
    PumpProfile,
    SimConfig,
    SimulationError,
    simulate,
)
from .params import TWO_PI, detuning_for_theta_eff, scale_params

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

SUMMARY_HEADER = (
    "snapshot,step,time,bunching,k_dominant,hexagonality,"
    "ring_power_fraction,field_density_correlation,clip_events,"
    "s_min,s_max,n_min,n_max"
)

MANIFEST_HEADER = (
    "index,param,value,seed,directory,status,message,"
    "final_bunching,final_hexagonality,final_k_dominant,final_correlation"
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _load(args) -> RunConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return default_config()


def _resolve_model(cfg: RunConfig):
    """Scaled parameters plus the threshold reference used by simulations.

    When sim.theta_eff is set, the bare detuning is pinned so the effective
    detuning equals theta_eff at the threshold saturation; otherwise the
    configured cavity_detuning is used directly and the threshold reference is
    computed at that fixed detuning.
    """
    sp = scale_params(cfg.physical_params())
    theta_eff = cfg["sim"]["theta_eff"]
    if theta_eff is None:
        th = lsa.threshold_at_fixed_theta(sp)
        return sp, th, None
    th = lsa.threshold_at(sp, theta_eff)
    if th.converged:
        theta = detuning_for_theta_eff(theta_eff, th.s0_th, sp)
        sp = sp.with_theta(theta)
    return sp, th, theta_eff


def cmd_threshold(args) -> int:
    cfg = _load(args)
    raw = cfg.to_dict()
    if args.b0 is not None:
        raw["physical"]["optical_density"] = args.b0
    cfg = config_from_dict(raw)
    theta_eff = args.theta_eff if args.theta_eff is not None else cfg["sim"]["theta_eff"]
    if theta_eff is None:
        theta_eff = -1.0
    sp = scale_params(cfg.physical_params())
    th = lsa.threshold_at(sp, theta_eff)
    if not th.converged:
        print(f"no instability: {th.message}")
        return EXIT_NUMERICAL
    lam = TWO_PI * math.sqrt(sp.a) / th.k_c
    i_ext = lsa.extra_cavity_intensity(th, sp, theta_eff)
    s0_an = lsa.analytic_threshold(sp) if sp.C > 0 and sp.Delta != 0 and sp.sigma != 0 else math.nan
    print(f"theta_eff           {theta_eff!r}")
    print(f"b0                  {sp.b0!r}")
    print(f"s0_th               {th.s0_th!r}")
    print(f"s0_analytic         {s0_an!r}")
    print(f"k_c (scaled)        {th.k_c!r}")
    print(f"pattern_period_m    {lam!r}")
    print(f"pump_Y_th           {th.pump_Y_th!r}")
    print(f"I_ext_mW_cm2        {i_ext!r}")
    print(f"conversion          {lsa.BUILDUP_CONVENTION}")
    return EXIT_OK


def cmd_lsa_scan(args) -> int:
    cfg = _load(args)
    scan = cfg["scan"]
    b0_min = args.b0_min if args.b0_min is not None else scan["b0_min"]
    b0_max = args.b0_max if args.b0_max is not None else scan["b0_max"]
    points = args.points if args.points is not None else scan["points"]
    if b0_min <= 0 or b0_max <= 0:
        print("b0 bounds must be positive", file=sys.stderr)
        return EXIT_VALIDATION
    if points < 1:
        print("points must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    if points == 1:
        b0s = [b0_min]
    else:
        b0s = list(np.logspace(math.log10(b0_min), math.log10(b0_max), points))
    sp = scale_params(cfg.physical_params())
    result = lsa.scan_b0(sp, b0s, scan["theta_eff"])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(result.to_csv().encode("ascii"))
    print(f"wrote {out} ({len(result.rows)} rows)")
    return EXIT_OK


def _build_sim_config(cfg: RunConfig, sp, th) -> SimConfig:
    sim = cfg["sim"]
    if sim["domain_size_scaled"] is not None:
        domain = sim["domain_size_scaled"]
    else:
        if not th.converged or not math.isfinite(th.k_c) or th.k_c <= 0:
            raise SimulationError(
                "cannot size the domain in pattern periods: " + (th.message or "no threshold")
            )
        domain = sim["domain_periods"] * TWO_PI / th.k_c
    if sim["pump_amplitude_scaled"] is not None:
        amplitude = complex(sim["pump_amplitude_scaled"])
    else:
        if sim["pump_relative"] is None:
            raise ConfigError(["one of sim.pump_amplitude_scaled or sim.pump_relative is required"])
        if not th.converged:
            raise SimulationError(
                "relative pump needs a converged threshold: " + (th.message or "")
            )
        amplitude = complex(math.sqrt(sim["pump_relative"] * th.pump_Y_th))
    pump = PumpProfile(
        kind=sim["pump_kind"],
        amplitude=amplitude,
        width=sim["pump_width_fraction"] * domain / 2.0,
        order=sim["pump_order"],
    )
    return SimConfig(
        nx=sim["nx"],
        ny=sim["ny"],
        domain_size=domain,
        dt=sim["dt_scaled"],
        t_end=sim["t_end_scaled"],
        pump=pump,
        noise_amplitude=sim["noise_amplitude"],
        rng_seed=sim["rng_seed"],
        field_mode=sim["field_mode"],
        snapshot_stride=sim["snapshot_stride"],
    )


def run_simulation(cfg: RunConfig, out_dir: Path) -> dict:
    """Simulate per config, dump snapshots and the summary CSV; returns final metrics."""
    sp, th, theta_eff = _resolve_model(cfg)
    sim_cfg = _build_sim_config(cfg, sp, th)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "resolved_config.yaml").write_bytes(dump_config(cfg).encode("utf-8"))
    meta = [
        f"theta_used {_fmt(sp.Theta)}",
        f"theta_eff_requested {_fmt(theta_eff)}",
        f"threshold_s0 {_fmt(th.s0_th if th.converged else None)}",
        f"threshold_k_c {_fmt(th.k_c if th.converged else None)}",
        f"threshold_Y {_fmt(th.pump_Y_th if th.converged else None)}",
        f"pump_amplitude {_fmt(abs(complex(sim_cfg.pump.amplitude)))}",
        f"domain_size {_fmt(sim_cfg.domain_size)}",
        f"intensity_conversion {lsa.BUILDUP_CONVENTION}",
    ]
    (out_dir / "derived.txt").write_bytes(("\n".join(meta) + "\n").encode("ascii"))

    window = sim_cfg.pump.kind == "supergaussian"
    k_min = 0.5 * th.k_c if (window and th.converged) else 0.0
    write_pgm = cfg["output"]["write_pgm"]
    rows = [SUMMARY_HEADER]
    final = {}
    snap_index = 0
    for state in simulate(sim_cfg, sp):
        E = state.field
        n = state.density
        tag = f"{snap_index:06d}"
        gridio.write_cavx(out_dir / f"snap_{tag}_E.cavx", E.values, E.dx, E.dy, E.time)
        gridio.write_cavx(out_dir / f"snap_{tag}_n.cavx", n.values, n.dx, n.dy, n.time)
        s = E.saturation
        if write_pgm:
            s_lo, s_hi = gridio.write_pgm(out_dir / f"snap_{tag}_s.pgm", s)
            n_lo, n_hi = gridio.write_pgm(out_dir / f"snap_{tag}_n.pgm", n.values)
        else:
            s_lo, s_hi = float(s.min()), float(s.max())
            n_lo, n_hi = float(n.values.min()), float(n.values.max())
        report = diagnostics.analyze(E, n, dx=E.dx, window=window, k_min=k_min)
        rows.append(
            ",".join(
                _fmt(v)
                for v in (
                    snap_index,
                    state.step_index,
                    E.time,
                    report.bunching,
                    report.k_dominant,
                    report.hexagonality,
                    report.ring_power_fraction,
                    report.field_density_correlation,
                    state.clip_events,
                    s_lo,
                    s_hi,
                    n_lo,
                    n_hi,
                )
            )
        )
        final = {
            "bunching": report.bunching,
            "hexagonality": report.hexagonality,
            "k_dominant": report.k_dominant,
            "correlation": report.field_density_correlation,
            "time": E.time,
            "clip_events": state.clip_events,
        }
        snap_index += 1
    (out_dir / "summary.csv").write_bytes(("\n".join(rows) + "\n").encode("ascii"))
    return final


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out_dir = Path(args.out_dir or cfg["output"]["directory"])
    final = run_simulation(cfg, out_dir)
    print(
        f"done at t={_fmt(final.get('time'))}: bunching={_fmt(final.get('bunching'))} "
        f"hexagonality={_fmt(final.get('hexagonality'))} "
        f"k_dominant={_fmt(final.get('k_dominant'))}"
    )
    return EXIT_OK


def cmd_diagnose(args) -> int:
    dump = gridio.read_cavx(args.infile)
    values = np.abs(dump.values) ** 2 if dump.is_complex else dump.values
    report = diagnostics.analyze(
        values, np.ones_like(values), dx=dump.dx, window=args.window, k_min=args.k_min
    )
    # single-grid report: contrast of the analyzed grid, no cross correlation
    mean = values.mean()
    report.bunching = float(values.std() / mean) if mean > 0 else math.nan
    report.field_density_correlation = None
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(report.to_csv().encode("ascii"))
    if args.peaks_out:
        Path(args.peaks_out).write_bytes(report.peaks_to_csv().encode("ascii"))
    print(f"wrote {out}")
    return EXIT_OK


def _sweep_value(schema_value, text: str):
    if isinstance(schema_value, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(schema_value, int):
        return int(text)
    if isinstance(schema_value, float) or schema_value is None:
        return float(text)
    return text


def _sweep_job(raw: dict, param: str, text_value: str, index: int, out_dir_s: str):
    """One share-nothing sweep job; executed in a subprocess."""
    raw = {sec: dict(keys) for sec, keys in raw.items()}
    base_seed = raw["sim"]["rng_seed"]
    defaults = default_config()
    sec, key = param.split(".")
    value = _sweep_value(defaults[sec][key], text_value)
    set_by_path(raw, param, value)
    raw["sim"]["rng_seed"] = base_seed + index
    cfg = config_from_dict(raw)
    job_dir = Path(out_dir_s) / f"job{index:03d}_{sec}_{key}_{text_value}"
    try:
        final = run_simulation(cfg, job_dir)
        return (
            index,
            param,
            text_value,
            raw["sim"]["rng_seed"],
            str(job_dir),
            "ok",
            "",
            final.get("bunching"),
            final.get("hexagonality"),
            final.get("k_dominant"),
            final.get("correlation"),
        )
    except (SimulationError, AdiabaticSolveError, ConfigError, ValueError) as exc:
        return (
            index,
            param,
            text_value,
            raw["sim"]["rng_seed"],
            str(job_dir),
            "failed",
            str(exc).replace(",", ";").replace("\n", " "),
            None,
            None,
            None,
            None,
        )


def cmd_sweep(args) -> int:
    cfg = _load(args)
    try:
        set_by_path(cfg.to_dict(), args.param, None)  # key existence check only
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        print("no sweep values given", file=sys.stderr)
        return EXIT_VALIDATION
    out_dir = Path(args.out_dir or cfg["output"]["directory"])
    out_dir.mkdir(parents=True, exist_ok=True)
    raw = cfg.to_dict()
    results = []
    if args.jobs <= 1:
        for i, v in enumerate(values):
            results.append(_sweep_job(raw, args.param, v, i, str(out_dir)))
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [
                pool.submit(_sweep_job, raw, args.param, v, i, str(out_dir))
                for i, v in enumerate(values)
            ]
            results = [f.result() for f in futures]
    results.sort(key=lambda r: r[0])
    rows = [MANIFEST_HEADER]
    n_failed = 0
    for r in results:
        n_failed += r[5] != "ok"
        rows.append(",".join(_fmt(x) for x in r))
    (out_dir / "manifest.csv").write_bytes(("\n".join(rows) + "\n").encode("ascii"))
    print(f"sweep complete: {len(results) - n_failed}/{len(results)} jobs ok")
    if n_failed == len(results):
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavx",
        description="Thresholds, scans and pattern simulations for optomechanical "
        "transverse crystallization in a longitudinally pumped cavity.",
        epilog="Config keys:\n" + describe_keys(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="instability threshold at one working point")
    p.add_argument("--config", help="YAML config file (defaults used when omitted)")
    p.add_argument("--b0", type=float, help="override optical density")
    p.add_argument("--theta-eff", type=float, dest="theta_eff", help="effective cavity detuning")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("lsa-scan", help="threshold scan over optical density, CSV output")
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--b0-min", type=float, dest="b0_min")
    p.add_argument("--b0-max", type=float, dest="b0_max")
    p.add_argument("--points", type=int)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_lsa_scan)

    p = sub.add_parser("simulate", help="integrate the coupled equations, dump snapshots")
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default from config)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", help="pattern diagnostics for one CAVX dump")
    p.add_argument("--in", dest="infile", required=True, help="input CAVX file")
    p.add_argument("--out", required=True, help="output report CSV")
    p.add_argument("--peaks-out", dest="peaks_out", help="optional peak-list CSV")
    p.add_argument("--window", action="store_true", help="apply a Hann window before spectra")
    p.add_argument("--k-min", dest="k_min", type=float, default=0.0,
                   help="ignore radial bins below this wavenumber")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("sweep", help="independent simulations over one scalar config key")
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--param", required=True, help="config key, e.g. sim.pump_relative")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default from config)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    except gridio.CavxFormatError as exc:
        print(f"bad CAVX file: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SimulationError, AdiabaticSolveError, lsa.NoInstabilityError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
