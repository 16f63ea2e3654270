"""Config-driven experiments: data generation, seeded training runs and artifacts.

An experiment file (TOML or JSON) has four parts::

    scheme = "split"            # or "hybrid"
    seeds = [0, 1, 2, 3, 4]
    output_dir = "runs/system_i"

    [data]                      # which trajectory, how much of it is for training
    [hyperparameters]           # keys named after the hyperparameter table rows
    [baselines]                 # comparison models trained on the same data

Every run writes ``checkpoint.json``, ``pred_seed{k}.csv``,
``rmse_time_seed{k}.csv`` (plus ``pred_<method>_seed{k}.csv`` and
``rmse_time_<method>_seed{k}.csv`` for each baseline) and ``summary.json``
into the output directory.
"""

from __future__ import annotations

import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import learn
from .learn import BaselineConfig, ConfigError, HybridConfig, ModelSpec, PairSpec, SplitConfig, TrainSpec
from .neural import load_checkpoint, save_checkpoint
from .signal import NoiseSpec, Signal, add_noise, read_csv, rmse, rmse_over_time, write_csv
from .systems import DoubleMassSpec, VdpSpec, gen_double_mass, gen_vdp_sim, gen_vdp_truth

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMES = ("split", "hybrid")

_TOP_KEYS = {"scheme", "seeds", "output_dir", "data", "hyperparameters", "baselines"}
_DATA_KEYS = {
    "system", "simulator", "noise variance", "noise seed", "training interval",
    "prediction horizon", "duration", "omega", "a", "b", "a_tilde", "initial state",
}
_SPLIT_KEYS = {
    "hidden_size (GRU 1)", "hidden_size (GRU 2)", "cutoff frequency w", "filter order",
    "sample frequency f", "subtrajectory length", "warmup phase", "training steps",
    "sampling rate k", "batch size", "learning rate", "perfectly complementary", "+HP",
}
_HYBRID_KEYS = {
    "model", "hidden_size GRU", "input_dim", "hidden_dim", "rec_dim", "cutoff frequency w",
    "filter order", "sample frequency f", "subtrajectory length", "warmup phase",
    "recognition steps n", "training steps", "batch size", "learning rate", "learning rate schedule",
}
_BASELINE_KEYS = {"methods", "hidden_size GRU", "training steps", "learning rate", "learning rate schedule"}
_BASELINE_METHODS = {"gru", "rnn", "residual gru", "residual rnn"}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DataSpec:
    system: str = "double-mass"
    simulator: str | None = None
    noise_variance: float = 0.0
    noise_seed: int = 0
    training_interval: int = 250
    horizon: int = 1000
    sample_rate_hz: float = 10.0
    overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    seeds: tuple
    output_dir: str
    data: DataSpec
    method: object  # SplitConfig or HybridConfig with seed 0
    baselines: tuple
    baseline: BaselineConfig
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def method_for_seed(self, seed: int):
        return replace(self.method, seed=seed)

    def baseline_for_seed(self, seed: int) -> BaselineConfig:
        return replace(self.baseline, seed=seed)


def _check_keys(table: dict, allowed: set, where: str):
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(repr(k) for k in unknown)}")


def _get(table: dict, key: str, where: str, kind, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"{where}.{key}: missing required key")
        return default
    value = table[key]
    try:
        if kind is int:
            if isinstance(value, bool) or not float(value).is_integer():
                raise ValueError
            return int(value)
        if kind is bool:
            if not isinstance(value, bool):
                raise ValueError
            return value
        if kind is float:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}: expected {kind.__name__}, got {value!r}") from None


def _schedule(table, where):
    raw = table.get("learning rate schedule", [])
    try:
        return tuple((int(e), float(lr)) for e, lr in raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.learning rate schedule: expected a list of [epoch, lr] pairs") from None


def _parse_data(table: dict, fs: float) -> DataSpec:
    where = "data"
    _check_keys(table, _DATA_KEYS, where)
    system = _get(table, "system", where, str, "double-mass")
    if system not in ("double-mass", "vdp") and not system.startswith("csv:"):
        raise ConfigError(f"{where}.system: expected 'double-mass', 'vdp' or 'csv:<path>', got {system!r}")
    overrides = {}
    for key in ("duration", "omega", "a", "b", "a_tilde"):
        if key in table:
            overrides[key] = _get(table, key, where, float)
    if "initial state" in table:
        state = table["initial state"]
        if not isinstance(state, list) or len(state) != 4:
            raise ConfigError(f"{where}.initial state: expected four numbers (x, y, u, v)")
        overrides["initial_state"] = tuple(float(v) for v in state)
    data = DataSpec(
        system=system,
        simulator=_get(table, "simulator", where, str),
        noise_variance=_get(table, "noise variance", where, float, 0.0),
        noise_seed=_get(table, "noise seed", where, int, 0),
        training_interval=_get(table, "training interval", where, int, 250),
        horizon=_get(table, "prediction horizon", where, int, 1000),
        sample_rate_hz=fs,
        overrides=overrides,
    )
    if data.noise_variance < 0:
        raise ConfigError(f"{where}.noise variance: must be nonnegative")
    if data.training_interval < 2 or data.horizon < 2:
        raise ConfigError(f"{where}: training interval and prediction horizon must be at least 2")
    return data


def _parse_split(table: dict) -> SplitConfig:
    where = "hyperparameters"
    _check_keys(table, _SPLIT_KEYS, where)
    train = TrainSpec(
        subtraj_len=_get(table, "subtrajectory length", where, int, 150),
        warmup=_get(table, "warmup phase", where, int, 30),
        epochs=_get(table, "training steps", where, int, 300),
        batch_size=_get(table, "batch size", where, int, 50),
        lr=_get(table, "learning rate", where, float, 1e-3),
    )
    return SplitConfig(
        high_model=ModelSpec("gru", _get(table, "hidden_size (GRU 1)", where, int, 48)),
        low_model=ModelSpec("gru", _get(table, "hidden_size (GRU 2)", where, int, 16)),
        pair=PairSpec(
            _get(table, "filter order", where, int, 3),
            _get(table, "cutoff frequency w", where, float, 0.4),
            _get(table, "perfectly complementary", where, bool, False),
        ),
        k=_get(table, "sampling rate k", where, int, 2),
        train=train,
        hp_wrap=_get(table, "+HP", where, bool, False),
    )


def _parse_hybrid(table: dict) -> HybridConfig:
    where = "hyperparameters"
    _check_keys(table, _HYBRID_KEYS, where)
    kind = _get(table, "model", where, str, "rnn")
    if kind == "gru":
        model = ModelSpec("gru", _get(table, "hidden_size GRU", where, int, 64))
        warmup = _get(table, "warmup phase", where, int, 10)
    elif kind == "rnn":
        model = ModelSpec(
            "rnn",
            _get(table, "input_dim", where, int, 4),
            width=_get(table, "hidden_dim", where, int, 500),
            rec_dim=_get(table, "rec_dim", where, int, 100),
        )
        warmup = _get(table, "recognition steps n", where, int, 10)
    else:
        raise ConfigError(f"{where}.model: expected 'gru' or 'rnn', got {kind!r}")
    train = TrainSpec(
        subtraj_len=_get(table, "subtrajectory length", where, int, 200),
        warmup=warmup,
        epochs=_get(table, "training steps", where, int, 2000),
        batch_size=_get(table, "batch size", where, int, 50),
        lr=_get(table, "learning rate", where, float, 1e-3),
        lr_schedule=_schedule(table, where),
    )
    pair = PairSpec(_get(table, "filter order", where, int, 1), _get(table, "cutoff frequency w", where, float, 0.25), True)
    return HybridConfig(model, pair, train)


def _parse_baselines(table: dict, scheme: str, method) -> tuple:
    where = "baselines"
    _check_keys(table, _BASELINE_KEYS, where)
    default = ["gru"] if scheme == "split" else [method.model.kind]
    methods = table.get("methods", default)
    if not isinstance(methods, list) or any(m not in _BASELINE_METHODS for m in methods):
        raise ConfigError(f"{where}.methods: expected a list drawn from {sorted(_BASELINE_METHODS)}, got {methods!r}")
    if scheme == "split" and any(m.startswith("residual") for m in methods):
        raise ConfigError(f"{where}.methods: residual baselines need a simulator (hybrid scheme only)")
    if scheme == "split":
        base = method.baseline_config()
        spec, tr = base.model, base.train
    else:
        spec, tr = method.model, method.train
    if "hidden_size GRU" in table:
        spec = replace(spec, hidden_size=_get(table, "hidden_size GRU", where, int))
    tr = replace(
        tr,
        epochs=_get(table, "training steps", where, int, tr.epochs),
        lr=_get(table, "learning rate", where, float, tr.lr),
        lr_schedule=_schedule(table, where) if "learning rate schedule" in table else tr.lr_schedule,
    )
    return tuple(methods), BaselineConfig(spec, tr)


def parse_config(raw: dict, base_dir=".") -> ExperimentConfig:
    """Validate a parsed config mapping; raises :class:`ConfigError` naming the offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")
    _check_keys(raw, _TOP_KEYS, "config")
    scheme = _get(raw, "scheme", "config", str, required=True)
    if scheme not in SCHEMES:
        raise ConfigError(f"config.scheme: expected one of {SCHEMES}, got {scheme!r}")
    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or any(isinstance(s, bool) or not isinstance(s, int) for s in seeds):
        raise ConfigError(f"config.seeds: expected a non-empty list of integers, got {seeds!r}")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("config.seeds: duplicate seeds")
    hyper = raw.get("hyperparameters", {})
    data_table = raw.get("data", {})
    for name, table in (("hyperparameters", hyper), ("data", data_table), ("baselines", raw.get("baselines", {}))):
        if not isinstance(table, dict):
            raise ConfigError(f"config.{name}: expected a table")
    fs = _get(hyper, "sample frequency f", "hyperparameters", float, 10.0)
    if not fs > 0:
        raise ConfigError("hyperparameters.sample frequency f: must be positive")
    data = _parse_data(data_table, fs)
    if data.system.startswith("csv:"):
        data = replace(data, system="csv:" + str(Path(base_dir) / data.system[4:]))
    if data.simulator is not None:
        data = replace(data, simulator=str(Path(base_dir) / data.simulator))
    method = _parse_split(hyper) if scheme == "split" else _parse_hybrid(hyper)
    if scheme == "split":
        try:
            method.validate(fs)
        except ConfigError as exc:
            raise ConfigError(f"hyperparameters.sampling rate k: {exc}") from None
    else:
        try:
            learn._check_hybrid_pair(method.pair.build(fs))
        except Exception as exc:  # filter design errors carry their own message
            raise ConfigError(f"hyperparameters.cutoff frequency w: {exc}") from None
    tr = method.train
    if data.training_interval < tr.subtraj_len:
        raise ConfigError(
            f"data.training interval: {data.training_interval} steps is shorter than the "
            f"subtrajectory length {tr.subtraj_len}"
        )
    if data.horizon <= tr.warmup + method.pair.order:
        raise ConfigError(f"data.prediction horizon: {data.horizon} does not exceed the warmup length {tr.warmup}")
    baselines, baseline = _parse_baselines(raw.get("baselines", {}), scheme, method)
    return ExperimentConfig(
        scheme, tuple(seeds), str(raw.get("output_dir", "runs")), data, method, baselines, baseline, raw
    )


BUNDLED_CONFIGS = Path(__file__).with_name("configs")


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package, e.g. ``bundled_config("system_i_split")``."""
    path = BUNDLED_CONFIGS / (name if name.endswith(".toml") else name + ".toml")
    if not path.exists():
        known = sorted(p.stem for p in BUNDLED_CONFIGS.glob("*.toml"))
        raise ConfigError(f"no bundled config {name!r} (have {', '.join(known)})")
    return path


def load_config(path) -> ExperimentConfig:
    """Load a TOML/JSON experiment file; a bare name selects a bundled config."""
    path = Path(path)
    if not path.exists() and path.parent == Path(".") and path.suffix in ("", ".toml"):
        path = bundled_config(path.name)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        raw = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: cannot parse ({exc})") from None
    return parse_config(raw, path.parent)


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentData:
    """Observed trajectory, the reference it is scored against and the optional simulator."""

    observed: Signal
    truth: Signal
    simulator: Signal | None


def _read(path: str, fs: float) -> Signal:
    sig = read_csv(path)
    if not math.isclose(sig.sample_rate_hz, fs, rel_tol=1e-6):
        raise ConfigError(f"{path}: sampled at {sig.sample_rate_hz:g} Hz, config says {fs:g} Hz")
    return sig


def build_data(cfg: ExperimentConfig) -> ExperimentData:
    d = cfg.data
    dt = 1.0 / d.sample_rate_hz
    ov = d.overrides
    sim = None
    if d.system == "double-mass":
        truth = gen_double_mass(DoubleMassSpec(dt=dt, **{k: v for k, v in ov.items() if k == "duration"}))
    elif d.system == "vdp":
        spec = VdpSpec(dt=dt, **ov)
        truth, sim = gen_vdp_truth(spec), gen_vdp_sim(spec)
    else:
        truth = _read(d.system[4:], d.sample_rate_hz)
    if d.simulator is not None:
        sim = _read(d.simulator, d.sample_rate_hz)
    observed = add_noise(truth, NoiseSpec(d.noise_variance, d.noise_seed))
    need = max(d.horizon, d.training_interval)
    if truth.n_steps < need:
        raise ConfigError(f"data: trajectory has {truth.n_steps} steps, need {need}")
    if cfg.scheme == "hybrid" or any(b.startswith("residual") for b in cfg.baselines):
        if sim is None:
            raise ConfigError("data.simulator: the hybrid scheme needs simulator output")
        if sim.n_steps < need:
            raise ConfigError(f"data.simulator: has {sim.n_steps} steps, need {need}")
    return ExperimentData(observed, truth, sim)


# ---------------------------------------------------------------------------
# per-seed runs
# ---------------------------------------------------------------------------


@dataclass
class MethodResult:
    prediction: Signal
    models: dict
    loss_history: dict
    runtime_s: float
    components: dict = field(default_factory=dict)


def _recurrent_models(prefix, rec):
    return {f"{prefix}.model": rec.model, f"{prefix}.rec": rec.recognizer}


def _run_main(cfg: ExperimentConfig, data: ExperimentData, seed: int) -> MethodResult:
    T, N = cfg.data.training_interval, cfg.data.horizon
    train_y = data.observed[:T]
    method = cfg.method_for_seed(seed)
    if cfg.scheme == "split":
        trained = learn.train_split(method, train_y)
        parts = learn.predict_split_components(trained, train_y, N)
        models = {**_recurrent_models("high", trained.high), **_recurrent_models("low", trained.low)}
        return MethodResult(parts.total, models, trained.loss_history, trained.runtime_s,
                            {"high": parts.high, "low": parts.low})
    trained = learn.train_hybrid(method, train_y, data.simulator[:T])
    parts = learn.predict_hybrid_components(trained, data.observed, data.simulator, N)
    return MethodResult(parts.total, _recurrent_models("hybrid", trained.recurrent),
                        {"hybrid": trained.loss_history}, trained.runtime_s,
                        {"rollout": parts.rollout, "simulator": parts.simulator})


def _run_baseline(cfg: ExperimentConfig, data: ExperimentData, seed: int, name: str) -> MethodResult:
    T, N = cfg.data.training_interval, cfg.data.horizon
    base = cfg.baseline_for_seed(seed)
    residual = name.startswith("residual")
    kind = name.split()[-1]
    if kind != base.model.kind:
        # a baseline of the other family falls back to that family's defaults
        base = replace(base, model=ModelSpec("gru", 64) if kind == "gru" else ModelSpec("rnn", 4))
    if residual:
        trained = learn.train_residual(kind, base, data.observed[:T], data.simulator[:T])
    else:
        trained = learn.train_baseline(kind, base, data.observed[:T])
    context = data.observed if cfg.scheme == "hybrid" else data.observed[:T]
    pred = learn.predict_baseline(trained, context, N, data.simulator)
    return MethodResult(pred, _recurrent_models(name.replace(" ", "_"), trained.recurrent),
                        {name: trained.loss_history}, trained.runtime_s)


def run_seed(cfg: ExperimentConfig, seed: int, data: ExperimentData | None = None) -> dict:
    """Train and predict every method for one seed; returns ``{method: MethodResult}``."""
    data = build_data(cfg) if data is None else data
    out = {"ours": _run_main(cfg, data, seed)}
    for name in cfg.baselines:
        out[name] = _run_baseline(cfg, data, seed, name)
    return out


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return format(float(x), ".17g")


def dumps_json(obj, indent=2) -> str:
    """JSON text with every float written to 17 significant digits."""

    def enc(o, level):
        pad, inner = " " * (indent * level), " " * (indent * (level + 1))
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{inner}{json.dumps(str(k))}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
        if isinstance(o, (bool, np.bool_)) or o is None:
            return json.dumps(bool(o) if o is not None else None)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            if not math.isfinite(o):
                return json.dumps(None)
            return _fmt(o)
        return json.dumps(o)

    return enc(obj, 0) + "\n"


def format_mean_std(values) -> str:
    """Table-style ``mean (std)`` with three decimals."""
    arr = np.asarray(values, dtype=float)
    return f"{arr.mean():.3f} ({arr.std():.3f})"


def _pred_name(method: str, seed: int, stem: str) -> str:
    tag = "" if method == "ours" else method.replace(" ", "_") + "_"
    return f"{stem}_{tag}seed{seed}.csv"


def summarize(cfg: ExperimentConfig, data: ExperimentData, results: dict) -> dict:
    """Build the summary mapping from ``{seed: {method: MethodResult}}``."""
    R = cfg.method.train.warmup
    N = cfg.data.horizon
    truth = data.truth[R:N]
    methods = {}
    names = ["ours", *cfg.baselines]
    for name in names:
        per_seed = [rmse(results[s][name].prediction, truth) for s in cfg.seeds]
        curves = np.stack([rmse_over_time(results[s][name].prediction, truth).samples[0] for s in cfg.seeds])
        label = {"ours": f"{cfg.scheme} (ours)"}.get(name, name)
        methods[name] = {
            "label": label,
            "rmse": per_seed,
            "rmse_mean": float(np.mean(per_seed)),
            "rmse_std": float(np.std(per_seed)),
            "table": format_mean_std(per_seed),
            "rmse_over_time_final_mean": float(curves.mean(axis=0)[-1]),
        }
    summary = {
        "scheme": cfg.scheme,
        "system": cfg.data.system,
        "seeds": list(cfg.seeds),
        "evaluation_window": [R, N],
        "methods": methods,
    }
    if data.simulator is not None:
        summary["simulator_rmse"] = rmse(data.simulator[R:N], truth)
    summary["runtime_s"] = {name: {str(s): results[s][name].runtime_s for s in cfg.seeds} for name in names}
    return summary


def write_artifacts(cfg: ExperimentConfig, data: ExperimentData, results: dict, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    R, N = cfg.method.train.warmup, cfg.data.horizon
    truth = data.truth[R:N]
    models = {}
    for s in cfg.seeds:
        for name, res in results[s].items():
            write_csv(res.prediction, out / _pred_name(name, s, "pred"))
            write_csv(rmse_over_time(res.prediction, truth), out / _pred_name(name, s, "rmse_time"))
            models.update({f"seed{s}.{k}": m for k, m in res.models.items()})
    save_checkpoint(out / "checkpoint.json", models, {"config": cfg.raw, "seeds": list(cfg.seeds)})
    summary = summarize(cfg, data, results)
    (out / "summary.json").write_text(dumps_json(summary))
    return summary


def _run_seed_job(args):
    cfg, seed = args
    return seed, run_seed(cfg, seed)


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs: int = 1, log=None) -> dict:
    """Run every seed (optionally in ``jobs`` worker processes) and write the artifacts."""
    data = build_data(cfg)
    out_dir = cfg.output_dir if out_dir is None else out_dir
    results = {}
    if jobs > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for seed, res in pool.map(_run_seed_job, [(cfg, s) for s in cfg.seeds]):
                results[seed] = res
                if log:
                    log(f"seed {seed} done")
    else:
        for s in cfg.seeds:
            results[s] = run_seed(cfg, s, data)
            if log:
                log(f"seed {s} done")
    return write_artifacts(cfg, data, results, out_dir)


# ---------------------------------------------------------------------------
# checkpoints back into predictors
# ---------------------------------------------------------------------------


def _recurrent(models, prefix):
    return learn.Recurrent(models[f"{prefix}.model"], models.get(f"{prefix}.rec"))


def load_predictor(path, seed: int, method: str = "ours"):
    """Rebuild a trained predictor from ``checkpoint.json``.

    Returns ``(cfg, predict)`` where ``predict(context, horizon, y_sim=None)``
    gives a :class:`Signal` over indices ``R..horizon-1``.
    """
    models, extra = load_checkpoint(path)
    cfg = parse_config(extra["config"], Path(path).parent)
    if seed not in cfg.seeds:
        raise ConfigError(f"seed {seed} not in checkpoint (has {list(cfg.seeds)})")
    fs = cfg.data.sample_rate_hz
    models = {k[len(f"seed{seed}."):]: m for k, m in models.items() if k.startswith(f"seed{seed}.")}
    if method == "ours" and cfg.scheme == "split":
        method_cfg = cfg.method_for_seed(seed)
        trained = learn.TrainedSplit(_recurrent(models, "high"), _recurrent(models, "low"),
                                     method_cfg.pair.build(fs), method_cfg, {}, 0.0)
        return cfg, lambda ctx, n, y_sim=None: learn.predict_split(trained, ctx, n)
    if method == "ours":
        method_cfg = cfg.method_for_seed(seed)
        trained = learn.TrainedHybrid(_recurrent(models, "hybrid"), method_cfg.pair.build(fs), method_cfg, [], 0.0)

        def predict(ctx, n, y_sim=None):
            if y_sim is None:
                raise ConfigError("hybrid rollout needs simulator output (--sim)")
            return learn.predict_hybrid(trained, ctx, y_sim, n)

        return cfg, predict
    if method not in cfg.baselines:
        raise ConfigError(f"method {method!r} not in checkpoint (has 'ours', {', '.join(cfg.baselines)})")
    trained = learn.TrainedBaseline(_recurrent(models, method.replace(" ", "_")), method.split()[-1],
                                    method.startswith("residual"), cfg.baseline_for_seed(seed), [], 0.0)
    return cfg, lambda ctx, n, y_sim=None: learn.predict_baseline(trained, ctx, n, y_sim)

