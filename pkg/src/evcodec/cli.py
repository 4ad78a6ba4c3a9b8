"""Command-line pipeline: train | compress | decompress | evaluate | baseline.

Hyperparameters come from built-in defaults, overridden by an optional
key=value config file, overridden by explicit flags.  Every command is
deterministic given its inputs, config, and seed.  On failure a single
categorized error line goes to stderr and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import baseline as baseline_mod
from . import codec, dbn, metrics
from .errors import CodecError, ConfigError, MismatchError
from .estimator import BlockAutoencoder
from .events import load_events, raw_size_bits
from .superframe import aggregate, blocks_to_matrix, fit_normalizer, to_blocks

logger = logging.getLogger(__name__)

DEFAULTS = {
    "dt_ms": 10.0,
    "dt_list": "0.5,5,10,20,30",
    "epochs": 20,
    "batch": 10,
    "lr": 0.1,
    "seed": 0,
    "quant_scale": 1.0,
    "train_seconds": 10.0,
    "layer_sizes": "900,1000,500,250,20",
}

_CONFIG_KEYS = set(DEFAULTS) | {"events", "model", "out", "sensor", "coder", "input"}


def load_config(path: str | Path) -> dict[str, str]:
    """Line-oriented key=value file; '#' starts a comment."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected key=value at line {lineno} of {path}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r} at line {lineno}")
        values[key] = value.strip()
    return values


def _resolve(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags.

    Keys set by the config file or a flag (rather than a default) are
    recorded under "_provided".
    """
    merged: dict = dict(DEFAULTS)
    provided: set[str] = set()
    if getattr(args, "config", None):
        overrides = load_config(args.config)
        merged.update(overrides)
        provided.update(overrides)
    for key, value in vars(args).items():
        if key in ("command", "config", "func"):
            continue
        if value is not None:
            merged[key] = value
            provided.add(key)
    merged["_provided"] = provided
    return merged


def _parse_sensor(value) -> tuple[int, int]:
    if value is None:
        raise ConfigError("sensor geometry is required (--sensor WxH)")
    try:
        w, _, h = str(value).lower().partition("x")
        width, height = int(w), int(h)
    except ValueError:
        raise ConfigError(f"cannot parse sensor geometry {value!r}") from None
    if width <= 0 or height <= 0:
        raise ConfigError("sensor dimensions must be positive")
    return width, height


def _parse_dt_list(value) -> list[float]:
    try:
        out = [float(v) * 1e-3 for v in str(value).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse dt list {value!r}") from None
    if not out or any(v <= 0 for v in out):
        raise ConfigError("dt list must contain positive millisecond values")
    return out


def _parse_layer_sizes(value) -> tuple[int, ...]:
    try:
        sizes = tuple(int(v) for v in str(value).split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse layer sizes {value!r}") from None
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ConfigError("layer sizes need at least two positive entries")
    return sizes


def _require(cfg: dict, key: str) -> str:
    value = cfg.get(key)
    if value is None:
        raise ConfigError(f"missing required option --{key.replace('_', '-')}")
    return value


def _load_stream(cfg: dict):
    width, height = _parse_sensor(_require(cfg, "sensor"))
    path = _require(cfg, "events")
    try:
        return load_events(path, width, height)
    except OSError as exc:
        raise ConfigError(f"cannot read events file: {exc}") from None


def cmd_train(cfg: dict) -> int:
    stream = _load_stream(cfg)
    dt = float(cfg["dt_ms"]) * 1e-3
    span = float(cfg["train_seconds"])
    training = stream.first_seconds(span)
    logger.info("training on %d events (%.3g s at dt=%.4g ms)",
                len(training), span, float(cfg["dt_ms"]))
    frames = aggregate(training, dt)
    if not frames:
        raise ConfigError("no events inside the training span")
    norm = fit_normalizer(frames)
    blocks = [b for f in frames for b in to_blocks(f, norm)]
    X = blocks_to_matrix(blocks)
    logger.info("%d frames -> %d training blocks, normalizer scale %g",
                len(frames), len(blocks), norm.scale)
    est = BlockAutoencoder(layer_sizes=_parse_layer_sizes(cfg["layer_sizes"]),
                           epochs=int(cfg["epochs"]),
                           batch_size=int(cfg["batch"]),
                           learning_rate=float(cfg["lr"]),
                           quant_scale=float(cfg["quant_scale"]),
                           random_state=int(cfg["seed"]))
    est.fit(X)
    model = est.model_
    model.norm_scale = norm.scale
    model.sensor_size = (stream.sensor_width, stream.sensor_height)
    out = _require(cfg, "out")
    dbn.save_model(out, model)
    logger.info("final reconstruction loss %.4f; model written to %s",
                est.loss_, out)
    print(f"model={out}")
    return 0


def cmd_compress(cfg: dict) -> int:
    stream = _load_stream(cfg)
    model = dbn.load_model(_require(cfg, "model"))
    if "quant_scale" in cfg.get("_provided", ()) \
            and float(cfg["quant_scale"]) != model.quant_scale:
        raise MismatchError(
            f"--quant-scale {cfg['quant_scale']} conflicts with the model's "
            f"recorded scale {model.quant_scale}; retrain to change it")
    dt = float(cfg["dt_ms"]) * 1e-3
    data = codec.compress(stream, model, dt)
    out = _require(cfg, "out")
    Path(out).write_bytes(data)
    print(f"compressed={out} bits={len(data) * 8} events={len(stream)}")
    return 0


def cmd_decompress(cfg: dict) -> int:
    model = dbn.load_model(_require(cfg, "model"))
    path = _require(cfg, "input")
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read container: {exc}") from None
    frames = codec.decompress(data, model)
    out = _require(cfg, "out")
    Path(out).write_text(frames_to_text(frames))
    print(f"frames={len(frames)} out={out}")
    return 0


def frames_to_text(frames) -> str:
    """Count-grid text: one block of rows per window, blank-line separated."""
    lines = [f"# frames {len(frames)}"]
    for f in frames:
        lines.append(f"# frame {f.window_index} t_start {f.t_start:.9f} dt {f.dt:.9f}")
        for row in f.counts:
            lines.append(" ".join(str(int(v)) for v in row))
        lines.append("")
    return "\n".join(lines) + "\n"


def cmd_evaluate(cfg: dict) -> int:
    stream = _load_stream(cfg)
    model_path = _require(cfg, "model")
    model = dbn.load_model(model_path)
    model_bits = Path(model_path).stat().st_size * 8
    reports = []
    for dt in _parse_dt_list(cfg["dt_list"]):
        reports.append(codec.evaluate(stream, model, dt, model_file_bits=model_bits))
    for report in reports:
        sys.stdout.write(report.to_text())
        sys.stdout.write("\n")
    csv_text = metrics.reports_to_csv(reports)
    if cfg.get("out"):
        Path(cfg["out"]).write_text(csv_text)
        logger.info("metrics table written to %s", cfg["out"])
    else:
        sys.stdout.write(csv_text)
    return 0


def cmd_baseline(cfg: dict) -> int:
    stream = _load_stream(cfg)
    coder = _require(cfg, "coder")
    raw = raw_size_bits(stream)
    if coder == "huffman":
        bits = baseline_mod.compressed_size_bits(baseline_mod.huffman_raw(stream))
    elif coder == "delta-huffman":
        bits = baseline_mod.compressed_size_bits(baseline_mod.delta_huffman(stream))
    elif coder.startswith("external:"):
        try:
            result = baseline_mod.external_compress(stream, coder.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if result.status == "skipped":
            print(f"coder={coder} status=skipped reason={result.reason}")
            return 0
        bits = result.compressed_bits
    else:
        raise ConfigError(f"unknown coder {coder!r}; use huffman, delta-huffman, "
                          f"or external:<tool>")
    print(f"coder={coder} status=ok events={len(stream)} raw_bits={raw} "
          f"compressed_bits={bits} e2e_cr={metrics.e2e_cr(raw, bits):.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evcodec",
        description="Event-stream codec: latent-code compression of "
                    "aggregated event-camera data.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, events=True, model=False, out=False):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int)
        if events:
            p.add_argument("--events", help="event text file (t x y p per line)")
            p.add_argument("--sensor", help="sensor geometry WxH, e.g. 240x180")
        if model:
            p.add_argument("--model", help="model file path")
        if out:
            p.add_argument("--out", help="output path")

    p = sub.add_parser("train", help="fit the autoencoder and write a model file")
    common(p, model=False, out=True)
    p.add_argument("--dt-ms", dest="dt_ms", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--quant-scale", dest="quant_scale", type=float)
    p.add_argument("--train-seconds", dest="train_seconds", type=float)
    p.add_argument("--layer-sizes", dest="layer_sizes")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compress", help="compress events with a trained model")
    common(p, model=True, out=True)
    p.add_argument("--dt-ms", dest="dt_ms", type=float)
    p.add_argument("--quant-scale", dest="quant_scale", type=float)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="reconstruct super-frames from a container")
    common(p, events=False, model=True, out=True)
    p.add_argument("--in", dest="input", help="compressed container path")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("evaluate", help="compression ratios and PSNR per dt")
    common(p, model=True, out=True)
    p.add_argument("--dt-list", dest="dt_list",
                   help="comma-separated windows in ms (default 0.5,5,10,20,30)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("baseline", help="lossless reference coders over raw events")
    common(p)
    p.add_argument("--coder", help="huffman | delta-huffman | external:<tool>")
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(_resolve(args))
    except CodecError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OverflowError) as exc:
        print(f"error: invalid-input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
