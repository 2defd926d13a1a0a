"""Command-line entry point: ``canet <subcommand> [flags]``.

Exit codes: 0 success, 1 validation / configuration error, 2 runtime or
numeric error.

Config files are TOML with up to three tables::

    [model]   # any ModelConfig field
    [train]   # any TrainConfig field
    [run]     # data = [...], seeds = [...], noise_levels = [...],
              # look_backs = [...], period = 24

Unknown tables or keys are rejected.  Flags override file values.  A data
path of the form ``synthetic:<name>`` (``sine_trend``, ``regime_switching``,
``long_memory``) generates a seeded synthetic series instead of reading a CSV.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import checkpoint, harness, synthetic
from .checks import REGISTRY, run_check
from .data import SUMMARY_HEADER, SeriesFrame, load_csv, summarize
from .errors import CanetError, CheckpointError, ConfigError, ContractError, DataError, NumericError
from .model import CANet, ModelConfig
from .train import TrainConfig, evaluate, naive_baselines, prepare, train

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("canet")

RUN_KEYS = {"data", "seeds", "noise_levels", "look_backs", "period"}
SYNTHETIC = {
    "sine_trend": synthetic.sine_trend,
    "regime_switching": synthetic.regime_switching,
    "long_memory": synthetic.long_memory,
}


@dataclass
class RunSpec:
    command: str
    model: ModelConfig
    train: TrainConfig
    data: list[str] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: [0])
    noise_levels: list[float] = field(default_factory=lambda: list(harness.DEFAULT_NOISE_LEVELS))
    look_backs: list[int] = field(default_factory=lambda: list(harness.DEFAULT_LOOKBACKS))
    period: int | None = None


def read_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        raw = tomllib.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    unknown = set(raw) - {"model", "train", "run"}
    if unknown:
        raise ConfigError(f"{path}: unknown tables {sorted(unknown)}")
    bad = set(raw.get("run", {})) - RUN_KEYS
    if bad:
        raise ConfigError(f"{path}: unknown run keys {sorted(bad)}")
    return raw


def resolve(args: argparse.Namespace) -> RunSpec:
    raw = read_config(getattr(args, "config", None))
    model_d = dict(raw.get("model", {}))
    train_d = dict(raw.get("train", {}))
    run_d = dict(raw.get("run", {}))
    if args.seed is not None:
        model_d["seed"] = args.seed
        train_d["seed"] = args.seed
    if args.precision is not None:
        model_d["precision"] = args.precision
    try:
        model = ModelConfig.from_dict(model_d)
        tcfg = TrainConfig.from_dict(train_d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    spec = RunSpec(args.command, model, tcfg)
    spec.data = list(args.data) if args.data else list(run_d.get("data", []))
    for key in ("seeds", "noise_levels", "look_backs", "period"):
        if key in run_d:
            setattr(spec, key, run_d[key])
    return spec


def banner(spec: RunSpec) -> None:
    print(f"# canet {spec.command} seed={spec.model.seed}", file=sys.stderr)
    print("# model " + json.dumps(spec.model.to_dict(), sort_keys=True), file=sys.stderr)
    print("# train " + json.dumps(spec.train.to_dict(), sort_keys=True), file=sys.stderr)


def load_frame(path: str) -> SeriesFrame:
    if path.startswith("synthetic:"):
        name = path.split(":", 1)[1]
        if name not in SYNTHETIC:
            raise ConfigError(f"unknown synthetic dataset {name!r}; choose from {sorted(SYNTHETIC)}")
        return SYNTHETIC[name]()
    return load_csv(path)


def one_frame(spec: RunSpec) -> SeriesFrame:
    if len(spec.data) != 1:
        raise ConfigError(f"{spec.command} needs exactly one --data source, got {len(spec.data)}")
    return load_frame(spec.data[0])


def match_channels(spec: RunSpec, frame: SeriesFrame) -> ModelConfig:
    if spec.model.channels != frame.channels:
        log.info("setting channels=%d from data", frame.channels)
        return replace(spec.model, channels=frame.channels)
    return spec.model


def _emit(rows, header, out: str | None) -> None:
    if out:
        harness.write_csv(rows, out, header)
    else:
        w = csv.DictWriter(sys.stdout, fieldnames=list(header))
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k) for k in header})


def _file_inputs(spec: RunSpec) -> list[str]:
    return [p for p in spec.data if not p.startswith("synthetic:")]


# -- subcommands --------------------------------------------------------------


def cmd_summarize(spec: RunSpec, args) -> int:
    if not spec.data:
        raise ConfigError("summarize needs at least one --data path")
    rows = summarize(spec.data)
    _emit(rows, SUMMARY_HEADER, args.out)
    return 0


def cmd_train(spec: RunSpec, args) -> int:
    if not args.out:
        raise ConfigError("train needs --out for the checkpoint path")
    frame = one_frame(spec)
    cfg = match_channels(spec, frame)
    splits = prepare(frame, cfg.look_back, cfg.horizon)
    model = CANet(cfg)
    hist = train(model, splits.train, splits.val, spec.train)
    out = Path(args.out)
    checkpoint.save(model, out)
    harness.write_csv(hist.epochs, out.with_suffix(".history.csv"), ("epoch", "train_loss", "val_mse", "val_mae"))
    val_mse, val_mae = evaluate(model, splits.val, spec.train.eval_batch_size)
    harness.write_manifest(
        out.with_suffix(".manifest.json"),
        command="train",
        model=cfg,
        train_config=spec.train,
        inputs=_file_inputs(spec),
        extra={"best_epoch": hist.best_epoch, "val_mse": val_mse, "val_mae": val_mae, "data": spec.data},
    )
    print(f"best_epoch={hist.best_epoch} val_mse={val_mse:.6g} val_mae={val_mae:.6g}")
    return 0


def cmd_eval(spec: RunSpec, args) -> int:
    if not args.ckpt:
        raise ConfigError("eval needs --ckpt")
    model = checkpoint.load(args.ckpt)
    frame = one_frame(spec)
    cfg = model.config
    if frame.channels != cfg.channels:
        raise ConfigError(f"checkpoint expects {cfg.channels} channels, data has {frame.channels}")
    splits = prepare(frame, cfg.look_back, cfg.horizon)
    rows = []
    for name, wb in (("val", splits.val), ("test", splits.test)):
        m, a = evaluate(model, wb, spec.train.eval_batch_size)
        rows.append({"split": name, "horizon": cfg.horizon, "mse": m, "mae": a, "params": model.param_count()})
    base = naive_baselines(splits.test, spec.period)
    for name, rep in base.items():
        rows.append({"split": f"test:{name}", "horizon": cfg.horizon, "mse": rep.mse, "mae": rep.mae, "params": 0})
    _emit(rows, ("split", "horizon", "mse", "mae", "params"), args.out)
    return 0


def cmd_ablate(spec: RunSpec, args) -> int:
    frame = one_frame(spec)
    cfg = match_channels(spec, frame)
    rows = harness.run_ablation(cfg, frame, spec.train, seeds=spec.seeds)
    _emit(rows, harness.ABLATION_HEADER, args.out)
    if args.out:
        harness.write_manifest(Path(args.out).with_suffix(".manifest.json"), command="ablate", model=cfg, train_config=spec.train, inputs=_file_inputs(spec))
    return 0


def cmd_noise_sweep(spec: RunSpec, args) -> int:
    if not args.ckpt:
        raise ConfigError("noise-sweep needs --ckpt")
    model = checkpoint.load(args.ckpt)
    frame = one_frame(spec)
    splits = prepare(frame, model.config.look_back, model.config.horizon)
    rows = harness.run_noise_sweep(model, splits, spec.noise_levels, seed=spec.model.seed)
    _emit(rows, harness.NOISE_HEADER, args.out)
    if args.out:
        harness.write_manifest(Path(args.out).with_suffix(".manifest.json"), command="noise-sweep", model=model.config, inputs=_file_inputs(spec))
    return 0


def cmd_lookback_sweep(spec: RunSpec, args) -> int:
    frame = one_frame(spec)
    cfg = match_channels(spec, frame)
    rows = harness.run_lookback_sweep(cfg, frame, spec.train, spec.look_backs)
    _emit(rows, harness.LOOKBACK_HEADER, args.out)
    if args.out:
        harness.write_manifest(Path(args.out).with_suffix(".manifest.json"), command="lookback-sweep", model=cfg, train_config=spec.train, inputs=_file_inputs(spec))
    return 0


def cmd_gradcheck(spec: RunSpec, args) -> int:
    failed = 0
    for name in REGISTRY:
        r = run_check(name, seed=spec.model.seed)
        status = "PASS" if r.passed else "FAIL"
        failed += not r.passed
        print(f"{status} {name:22s} max_rel_error={r.max_rel_error:.3e}")
    return 0 if failed == 0 else 2


COMMANDS = {
    "summarize": cmd_summarize,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "noise-sweep": cmd_noise_sweep,
    "lookback-sweep": cmd_lookback_sweep,
    "gradcheck": cmd_gradcheck,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="canet", description="CANet forecasting experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--data", nargs="+", help="CSV path(s) or synthetic:<name>")
        p.add_argument("--out", help="output path (checkpoint for train, CSV otherwise)")
        p.add_argument("--seed", type=int)
        p.add_argument("--precision", type=int, choices=(32, 64))
        p.add_argument("--ckpt", help="checkpoint to load (eval, noise-sweep)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        spec = resolve(args)
        banner(spec)
        return COMMANDS[args.command](spec, args)
    except (ConfigError, DataError, ContractError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, CanetError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
