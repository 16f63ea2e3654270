"""Command line front end: ``cfdyn <subcommand> ...``.

Subcommands: gen, design-filter, filter, spectrum, train, rollout, eval.
Every subcommand accepts ``--out``, ``--seed`` and ``--config``. For
``train`` the config is an experiment file; for the others it is a TOML or
JSON table whose keys are option names (``cutoff = 0.4``) and which supplies
defaults that explicit flags override.

Exit codes: 0 success, 1 bad input data, 2 usage or config error, 3 divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import filters as flt
from . import spectrum as spc
from .experiment import dumps_json, load_config, load_predictor, run_experiment, tomllib
from .filters import FilterError
from .learn import ConfigError
from .neural import DivergenceError
from .signal import NoiseSpec, SignalError, add_noise, read_csv, rmse, rmse_over_time, write_csv
from .spectrum import SpectrumError
from .systems import DoubleMassSpec, VdpSpec, gen_double_mass, gen_vdp_sim, gen_vdp_truth

EXIT_OK, EXIT_DATA, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def _emit(text: str, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args):
    overrides = {k: v for k, v in (("dt", args.dt), ("duration", args.duration)) if v is not None}
    if args.system == "double-mass":
        sig = gen_double_mass(DoubleMassSpec(**overrides))
    else:
        extra = {k: v for k, v in (("omega", args.omega), ("a", args.a), ("b", args.b), ("a_tilde", args.a_tilde))
                 if v is not None}
        if args.initial_state is not None:
            extra["initial_state"] = tuple(args.initial_state)
        spec = VdpSpec(**overrides, **extra)
        sig = gen_vdp_truth(spec) if args.system == "vdp-truth" else gen_vdp_sim(spec)
    if args.noise:
        sig = add_noise(sig, NoiseSpec(args.noise, args.seed))
    write_csv(sig, args.out)
    return EXIT_OK


def _coeffs_blob(c: flt.FilterCoefficients, n_response=None):
    blob = c.to_dict()
    if n_response:
        resp = flt.frequency_response(c, n_response)
        blob["response"] = {"frequency_hz": resp[:, 0].tolist(), "magnitude": resp[:, 1].tolist(),
                            "phase_rad": resp[:, 2].tolist()}
    return blob


def cmd_design_filter(args):
    if args.kind == "complementary":
        pair = flt.make_pair(args.order, args.cutoff, args.fs, args.perfect)
        blob = {"perfect": pair.perfect, "high": _coeffs_blob(pair.high, args.response),
                "low": _coeffs_blob(pair.low, args.response)}
    else:
        blob = _coeffs_blob(flt.design_butterworth(args.order, args.cutoff, args.fs, args.kind), args.response)
    _emit(dumps_json(blob), args.out)
    return EXIT_OK


def _parse_design(text: str, fs_data: float):
    """``kind:order:cutoff[:fs]`` with kind lowpass, highpass or complement (1 - lowpass)."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ConfigError(f"--design: expected kind:order:cutoff[:fs], got {text!r}")
    kind = parts[0]
    try:
        order, cutoff = int(parts[1]), float(parts[2])
        fs = float(parts[3]) if len(parts) == 4 else fs_data
    except ValueError:
        raise ConfigError(f"--design: malformed number in {text!r}") from None
    if abs(fs - fs_data) > 1e-9 * fs_data:
        raise ConfigError(f"--design: filter designed for {fs:g} Hz but the signal is sampled at {fs_data:g} Hz")
    if kind == "complement":
        return flt.make_perfect_complement(flt.design_butterworth(order, cutoff, fs, "lowpass")).high
    if kind not in ("lowpass", "highpass"):
        raise ConfigError(f"--design: unknown kind {kind!r}")
    return flt.design_butterworth(order, cutoff, fs, kind)


def cmd_filter(args):
    sig = read_csv(args.input)
    coeffs = _parse_design(args.design, sig.sample_rate_hz)
    out = flt.filtfilt(coeffs, sig) if args.filtfilt else flt.iir_filter(coeffs, sig, args.init)
    write_csv(out, args.out)
    return EXIT_OK


def cmd_spectrum(args):
    sig = read_csv(args.input)
    spec = spc.magnitude_spectrum(sig)
    rows = ["frequency_hz,magnitude"] + [f"{f!r},{m!r}" for f, m in zip(spec.frequencies_hz.tolist(),
                                                                        spec.magnitudes.tolist())]
    if args.out:
        Path(args.out).write_text("\n".join(rows) + "\n")
    if args.suggest_cutoff:
        print(f"suggested cutoff: {spc.suggest_cutoff(spec, prominence=args.prominence)!r} Hz")
    elif not args.out:
        print("\n".join(rows))
    return EXIT_OK


def cmd_train(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seeds=(args.seed,))
    out = args.out or cfg.output_dir
    summary = run_experiment(cfg, out, jobs=args.jobs, log=lambda m: print(m, file=sys.stderr))
    for name, m in summary["methods"].items():
        print(f"{m['label']}: {m['table']}")
    if "simulator_rmse" in summary:
        print(f"simulator: {summary['simulator_rmse']:.3f}")
    print(f"artifacts in {out}")
    return EXIT_OK


def cmd_rollout(args):
    _, predict = load_predictor(args.checkpoint, args.seed, args.method)
    context = read_csv(args.context)
    sim = read_csv(args.sim) if args.sim else None
    write_csv(predict(context, args.horizon, sim), args.out)
    return EXIT_OK


def cmd_eval(args):
    t0 = time.perf_counter()
    pred, truth = read_csv(args.pred), read_csv(args.truth)
    if truth.n_steps != pred.n_steps:
        # align on the time axis: predictions usually start after a warmup
        start = int(round((pred.start_time_s - truth.start_time_s) * truth.sample_rate_hz))
        if start < 0 or start + pred.n_steps > truth.n_steps:
            raise SignalError("prediction does not lie inside the truth time range")
        truth = truth[start:start + pred.n_steps]
    total = rmse(pred, truth)
    curve_path = Path(args.out).with_suffix(".rmse_time.csv") if args.out else None
    if curve_path is not None:
        write_csv(rmse_over_time(pred, truth), curve_path)
    report = {"rmse_total": total, "rmse_over_time_csv_path": str(curve_path) if curve_path else None,
              "runtime_s": time.perf_counter() - t0, "seed": args.seed}
    print(f"rmse_total: {total!r}")
    if args.out:
        Path(args.out).write_text(dumps_json(report))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p, out_required=False):
    p.add_argument("--out", required=out_required, help="output file or directory")
    p.add_argument("--seed", type=int, default=None, help="random seed")
    p.add_argument("--config", default=None, help="config file (TOML or JSON)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cfdyn", description="Complementary-filter dynamics learning toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic trajectory as CSV")
    p.add_argument("system", choices=["double-mass", "vdp-truth", "vdp-sim"])
    _common(p, out_required=True)
    p.add_argument("--noise", type=float, default=0.0, help="observation noise variance")
    p.add_argument("--dt", type=float)
    p.add_argument("--duration", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--a-tilde", type=float)
    p.add_argument("--initial-state", type=float, nargs=4, metavar=("X", "Y", "U", "V"))
    p.set_defaults(func=cmd_gen, seed=0)

    p = sub.add_parser("design-filter", help="print Butterworth or complementary coefficients as JSON")
    _common(p)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--cutoff", type=float, required=True)
    p.add_argument("--fs", type=float, required=True)
    p.add_argument("--kind", choices=["lowpass", "highpass", "complementary"], default="lowpass")
    p.add_argument("--perfect", action="store_true", help="perfect complement instead of shared-cutoff pair")
    p.add_argument("--response", type=int, default=None, metavar="N", help="include N-point frequency response")
    p.set_defaults(func=cmd_design_filter)

    p = sub.add_parser("filter", help="filter a CSV signal")
    _common(p, out_required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--design", required=True, help="kind:order:cutoff[:fs], kind in lowpass|highpass|complement")
    p.add_argument("--filtfilt", action="store_true", help="zero-phase forward-backward filtering")
    p.add_argument("--init", choices=["zeros", "hold_input"], default="zeros")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("spectrum", help="one-sided magnitude spectrum and cutoff suggestion")
    _common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--suggest-cutoff", action="store_true")
    p.add_argument("--prominence", type=float, default=0.05)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("train", help="run an experiment config over its seeds")
    _common(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the seeds")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rollout", help="predict from a checkpoint")
    _common(p, out_required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--context", required=True, help="CSV whose first R samples seed the model")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--sim", help="simulator CSV (hybrid and residual models)")
    p.add_argument("--method", default="ours", help="'ours' or a baseline name from the config")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("eval", help="RMSE of a prediction against the truth")
    _common(p)
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_eval)
    return parser


def _config_defaults(parser, argv):
    """Install defaults from ``--config`` on the chosen non-train subcommand."""
    command = argv[0] if argv and not argv[0].startswith("-") else None
    if command in (None, "train") or "--config" not in argv:
        return
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return  # let argparse report the missing value
    path = Path(argv[idx + 1])
    try:
        text = path.read_text()
        table = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: cannot parse ({exc})") from None
    sub = parser._subparsers._group_actions[0].choices.get(command)
    if sub is None:
        return
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, value in table.items():
        dest = "input" if key == "in" else key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise ConfigError(f"{path}: unknown option {key!r} for {command}")
        defaults[dest] = value
    for action in sub._actions:
        if action.dest in defaults:
            action.required = False
    sub.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _config_defaults(parser, argv)
        args = parser.parse_args(argv)
        if args.command == "train" and args.config is None:
            raise ConfigError("train: --config is required")
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (SignalError, FilterError, SpectrumError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
