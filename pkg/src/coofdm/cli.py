"""Command-line front end.

Five subcommands cover the full measurement flow:

  generate   modulate one frame and export the four-rail waveform
  impair     pass a waveform through the channel emulator
  sync       synchronize a captured waveform and report estimates
  run        Monte-Carlo trials of one scenario, trial CSV + aggregate
  sweep      sweep one config field across values, summary CSV per value

Exit codes: 0 success, 2 bad configuration or arguments, 3 no frame
detected, 4 file I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .channel import pad_tail, run_channel
from .harness import (
    ScenarioConfig,
    aggregate,
    apply_override,
    build_tx,
    field_kind,
    parse_config,
    read_ber_curve,
    run_sweep,
    run_trials,
    training_for,
    write_ber_curve,
    write_integer_cfo_trace,
    write_timing_trace,
    write_trial_reports,
    _parse_scalar,
    _trial_randomness,
)
from .metrics import CurveRangeError, osnr_penalty, r_osnr
from .params import ParameterError
from .sync import synchronize
from .waveform import WaveformFormatError, export_waveform, import_waveform

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_FRAME = 3
EXIT_IO = 4


def _load_config(args: argparse.Namespace) -> ScenarioConfig:
    cfg = parse_config(args.config) if args.config else ScenarioConfig()
    for item in args.set or []:
        if "=" not in item:
            raise ParameterError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        cfg = apply_override(cfg, key.strip(), raw.strip())
    return cfg


def _print_kv(pairs: dict) -> None:
    for k, v in pairs.items():
        print(f"{k} = {v}")


def _cmd_generate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    bits, _, _ = _trial_randomness(cfg, args.trial)
    w, _, _ = build_tx(cfg, bits)
    w = pad_tail(w, cfg.tail_gap_samples)
    export_waveform(w, args.out)
    if args.bits:
        Path(args.bits).write_text(
            "".join(f"{b:d}\n" for b in bits), newline="\n")
    print(f"wrote {len(w)} samples/pol to {args.out}_*.txt")
    return EXIT_OK


def _cmd_impair(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    w = import_waveform(args.input, sample_rate=cfg.params.sample_rate)
    out = run_channel(w, cfg.channel)
    export_waveform(out, args.out)
    print(f"wrote {len(out)} samples/pol to {args.out}_*.txt")
    return EXIT_OK


def _cmd_sync(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    if args.traces:
        cfg = apply_override(cfg, "sync.keep_traces", "true")
    w = import_waveform(args.input, sample_rate=cfg.params.sample_rate)
    training = training_for(cfg.params, cfg.pn_seed)
    res = synchronize(w, cfg.params, training, cfg.sync)
    out = {"frame_found": int(res.frame_found)}
    if np.isfinite(res.timing_peak):
        out["timing_peak"] = f"{res.timing_peak:.6f}"
    if not res.frame_found:
        _print_kv(out)
        return EXIT_NO_FRAME
    assert res.cfo is not None and res.sco is not None
    out.update({
        "d_hat_x": res.d_hat_x,
        "d_hat_y": res.d_hat_y,
        "alpha_used": res.alpha_used,
        "cfo_hz": f"{res.cfo.total_hz:.3f}",
        "cfo_fractional_bins": f"{res.cfo.fractional:.6f}",
        "cfo_integer_bins": res.cfo.integer,
        "sco_ppm": f"{res.sco.gamma * 1e6:.4f}",
        "sco_iterations": res.sco.iterations,
        "pol_disagree": int(res.pol_disagree),
        "low_confidence_cfo": int(res.low_confidence_cfo),
        "integer_cfo_at_edge": int(res.integer_cfo_at_edge),
    })
    _print_kv(out)
    if args.traces:
        outdir = Path(args.traces)
        outdir.mkdir(parents=True, exist_ok=True)
        if res.timing_trace is not None:
            write_timing_trace(res.timing_trace, outdir / "timing_metric.csv")
        if res.integer_cfo is not None:
            write_integer_cfo_trace(res.integer_cfo,
                                    outdir / "integer_cfo.csv")
        print(f"traces written to {outdir}")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    reports = run_trials(cfg)
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    label = cfg.label or "scenario"
    path = write_trial_reports(reports, outdir / f"trials_{label}.csv")
    agg = aggregate(reports, cfg.params.subcarrier_spacing)
    _print_kv(agg)
    print(f"trial reports written to {path}")
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    kind = field_kind(args.field)
    values = [_parse_scalar(v, kind) for v in args.values.split(",")]
    result = run_sweep(cfg, args.field, values, write_trials=args.write_trials)
    for row in result.rows:
        print(f"{args.field}={row['value']}  fer={row['fer']:.4g}  "
              f"ber={row['ber']:.4g}  cfo_mse={row['cfo_mse']:.4g}")
    if result.curve is not None:
        curve_path = Path(cfg.outdir) / f"ber_curve_{result.curve.label}.csv"
        write_ber_curve(result.curve, curve_path)
        print(f"ber curve written to {curve_path}")
        if args.target_ber is not None:
            try:
                required = r_osnr(result.curve, args.target_ber)
                print(f"r_osnr_db = {required:.4f}")
                if args.baseline:
                    base = read_ber_curve(args.baseline, label="baseline")
                    penalty = osnr_penalty(result.curve, base, args.target_ber)
                    print(f"osnr_penalty_db = {penalty:.4f}")
            except CurveRangeError as exc:
                print(f"r_osnr unavailable: {exc}", file=sys.stderr)
    for f in result.files:
        print(f"wrote {f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coofdm",
        description="Dual-polarization coherent optical OFDM simulator "
                    "and synchronizer.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="scenario INI file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field, e.g. channel.cfo_hz=2.5e9")

    p = sub.add_parser("generate", help="modulate a frame, export waveform")
    common(p)
    p.add_argument("--out", required=True, metavar="BASEPATH")
    p.add_argument("--trial", type=int, default=0,
                   help="trial index used for payload bits (default 0)")
    p.add_argument("--bits", metavar="PATH",
                   help="also write payload bits, one per line")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("impair", help="run a waveform through the channel")
    common(p)
    p.add_argument("--in", dest="input", required=True, metavar="BASEPATH")
    p.add_argument("--out", required=True, metavar="BASEPATH")
    p.set_defaults(func=_cmd_impair)

    p = sub.add_parser("sync", help="synchronize a captured waveform")
    common(p)
    p.add_argument("--in", dest="input", required=True, metavar="BASEPATH")
    p.add_argument("--traces", metavar="DIR",
                   help="write timing/integer-CFO traces as CSV")
    p.set_defaults(func=_cmd_sync)

    p = sub.add_parser("run", help="Monte-Carlo trials of one scenario")
    common(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="sweep one config field")
    common(p)
    p.add_argument("--field", required=True,
                   help="config field to sweep, e.g. channel.osnr_db")
    p.add_argument("--values", required=True,
                   help="comma-separated values")
    p.add_argument("--target-ber", type=float, default=None,
                   help="report required OSNR at this BER (OSNR sweeps)")
    p.add_argument("--baseline", metavar="CSV",
                   help="baseline BER curve for penalty computation")
    p.add_argument("--write-trials", action="store_true",
                   help="also write per-trial CSVs")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WaveformFormatError as exc:
        print(f"waveform error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
