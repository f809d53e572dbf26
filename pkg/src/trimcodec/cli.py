"""Command-line interface: train, compress, decompress, inpaint, bench,
gen-corpus.

Reports are line-delimited ``key=value`` records so scripts and tests can
parse them without a serialization library.  Every command is deterministic
under a fixed ``--seed``.  The ``TCAE_THREADS`` environment variable caps the
numeric libraries' internal thread pools.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import codec, pgm, synthetic
from .masks import RASTER, SCHEDULES, SLOPE
from .model import ContextModel, ModelConfig, load_model, save_model
from .tensor import Rng
from .training import train
from .validation import check_region


class CliError(Exception):
    """User-facing failure with a one-line diagnostic."""


def _positive(kind, name):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return value
    return parse


def _non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("value must be non-negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trimcodec",
                                     description="Context-model entropy coding for gray images")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-corpus", help="write a synthetic PGM corpus")
    gen.add_argument("--output", required=True, help="directory for the images")
    gen.add_argument("--kind", choices=synthetic.CORPUS_KINDS, default="markov-texture")
    gen.add_argument("--count", type=_positive(int, "count"), default=32)
    gen.add_argument("--size", type=_positive(int, "size"), default=64)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--flip-prob", type=float, default=0.1)

    tr = sub.add_parser("train", help="train a context model on a PGM corpus")
    tr.add_argument("--input", required=True, help="directory of PGM images")
    tr.add_argument("--output", required=True, help="model file to write")
    tr.add_argument("--schedule", choices=SCHEDULES, default=RASTER)
    tr.add_argument("--groups", type=_positive(int, "groups"), default=4)
    tr.add_argument("--residual-blocks", type=_non_negative_int, default=1)
    tr.add_argument("--steps", type=_positive(int, "steps"), default=2000)
    tr.add_argument("--batch", type=_positive(int, "batch"), default=2)
    tr.add_argument("--eval-interval", type=_positive(int, "eval interval"), default=100)
    tr.add_argument("--patience", type=_positive(int, "patience"), default=3)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--metrics", help="metrics log path (default: model path + .metrics)")

    for name in ("compress", "decompress"):
        cmd = sub.add_parser(name, help=f"{name} one gray image")
        cmd.add_argument("--input", required=True)
        cmd.add_argument("--output", required=True)
        cmd.add_argument("--model", required=True)
        if name == "compress":
            cmd.add_argument("--tile", type=_non_negative_int, default=0,
                             help="spatial tile size, 0 codes the image untiled")

    inp = sub.add_parser("inpaint", help="resample a rectangular region from the model")
    inp.add_argument("--input", required=True)
    inp.add_argument("--output", required=True)
    inp.add_argument("--model", required=True)
    inp.add_argument("--region", help="x,y,w,h (default: bottom-right ninth of the image)")
    inp.add_argument("--seed", type=int, default=0)

    bench = sub.add_parser("bench", help="coding passes and wall time, both schedules")
    bench.add_argument("--input", required=True)
    bench.add_argument("--model", help="raster-schedule model (default: fresh seeded)")
    bench.add_argument("--slope-model", help="slope-schedule model (default: fresh seeded)")
    bench.add_argument("--groups", type=_positive(int, "groups"), default=1)
    bench.add_argument("--residual-blocks", type=_non_negative_int, default=0)
    bench.add_argument("--seed", type=int, default=0)
    return parser


def _load_corpus(directory: str) -> list[np.ndarray]:
    root = Path(directory)
    if not root.is_dir():
        raise CliError(f"corpus directory {directory!r} does not exist")
    paths = sorted(root.glob("*.pgm"))
    if not paths:
        raise CliError(f"corpus directory {directory!r} holds no .pgm files")
    try:
        return [pgm.read_pgm(p) for p in paths]
    except pgm.PgmError as exc:
        raise CliError(f"unreadable corpus: {exc}") from exc


def _load_model(path: str) -> ContextModel:
    try:
        return load_model(Path(path).read_bytes())
    except FileNotFoundError:
        raise CliError(f"model file {path!r} does not exist") from None
    except ValueError as exc:
        raise CliError(f"bad model file {path!r}: {exc}") from exc


def _emit(out, **fields):
    print(" ".join(f"{k}={v}" for k, v in fields.items()), file=out)


def cmd_gen_corpus(args, out) -> int:
    images = synthetic.generate_images(args.kind, args.count, args.size, args.seed,
                                       flip_prob=args.flip_prob)
    root = Path(args.output)
    root.mkdir(parents=True, exist_ok=True)
    for idx, img in enumerate(images):
        pgm.write_pgm(root / f"{args.kind}-{idx:04d}.pgm", img)
    _emit(out, kind=args.kind, count=args.count, size=args.size, seed=args.seed,
          directory=root)
    return 0


def cmd_train(args, out) -> int:
    images = _load_corpus(args.input)
    cuboids = [codec.to_bitplanes(img) for img in images]
    config = ModelConfig(alphabet_size=2, groups=args.groups, depth=8,
                         schedule=args.schedule, residual_blocks=args.residual_blocks)
    model = ContextModel.initialize(config, seed=args.seed)
    metrics_path = Path(args.metrics) if args.metrics else Path(args.output + ".metrics")
    with open(metrics_path, "w") as metrics:
        def log(row):
            print(f"step={row['step']} loss_bps={row['loss_bps']:.6f} lr={row['lr']:.6g}",
                  file=metrics)
        result = train(model, cuboids, batch_size=args.batch, max_steps=args.steps,
                       eval_interval=args.eval_interval, patience=args.patience,
                       seed=args.seed, log=log)
    Path(args.output).write_bytes(save_model(model))
    _emit(out, model=args.output, metrics=metrics_path, steps=result.steps,
          final_loss_bps=f"{result.final_loss_bps:.6f}",
          plateaued=str(result.stopped_by_plateau).lower())
    return 0


def cmd_compress(args, out) -> int:
    model = _load_model(args.model)
    if model.config.alphabet_size != 2 or model.config.depth != 8:
        raise CliError("image compression needs a bit-plane model (m=2, C=8)")
    try:
        image = pgm.read_pgm(args.input)
    except FileNotFoundError:
        raise CliError(f"input image {args.input!r} does not exist") from None
    except pgm.PgmError as exc:
        raise CliError(str(exc)) from exc
    cuboid = codec.to_bitplanes(image)
    result = codec.encode_cuboid(cuboid, model, tile_size=args.tile)
    Path(args.output).write_bytes(result.blob)
    height, width = image.shape
    raw_bits = width * height * 8
    _emit(out, input=args.input, output=args.output, width=width, height=height,
          tile=args.tile, payload_bits=result.payload_bits,
          container_bytes=len(result.blob),
          ratio=f"{raw_bits / result.payload_bits:.6f}")
    return 0


def cmd_decompress(args, out) -> int:
    model = _load_model(args.model)
    try:
        blob = Path(args.input).read_bytes()
    except FileNotFoundError:
        raise CliError(f"input container {args.input!r} does not exist") from None
    try:
        result = codec.decode_cuboid(blob, model)
    except codec.CodecError as exc:
        raise CliError(f"cannot decode {args.input!r}: {exc}") from exc
    pgm.write_pgm(args.output, codec.from_bitplanes(result.cuboid))
    _emit(out, input=args.input, output=args.output,
          forward_passes=result.forward_passes, schedule=result.header.schedule)
    return 0


def cmd_inpaint(args, out) -> int:
    model = _load_model(args.model)
    try:
        image = pgm.read_pgm(args.input)
    except (FileNotFoundError, pgm.PgmError) as exc:
        raise CliError(f"cannot read {args.input!r}: {exc}") from exc
    height, width = image.shape
    if args.region:
        try:
            region = check_region(args.region.split(","))
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    else:
        w, h = width // 3, height // 3
        region = (width - w, height - h, w, h)
    try:
        completed = codec.inpaint(image, region, model, Rng(args.seed % 2**64))
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    pgm.write_pgm(args.output, completed)
    _emit(out, input=args.input, output=args.output,
          region=",".join(str(v) for v in region), seed=args.seed)
    return 0


def _bench_model(path: str | None, schedule: str, seed: int, groups: int, blocks: int) -> ContextModel:
    if path:
        model = _load_model(path)
        if model.config.schedule != schedule:
            raise CliError(f"model {path!r} uses the {model.config.schedule} schedule, "
                           f"expected {schedule}")
        return model
    config = ModelConfig(alphabet_size=2, groups=groups, depth=8, schedule=schedule,
                         residual_blocks=blocks)
    return ContextModel.initialize(config, seed=seed, zero_final=False)


def cmd_bench(args, out) -> int:
    try:
        image = pgm.read_pgm(args.input)
    except (FileNotFoundError, pgm.PgmError) as exc:
        raise CliError(f"cannot read {args.input!r}: {exc}") from exc
    cuboid = codec.to_bitplanes(image)
    width, height, depth = cuboid.shape
    report = {"width": width, "height": height, "depth": depth}
    passes = {}
    for schedule in (RASTER, SLOPE):
        model = _bench_model(args.model if schedule == RASTER else args.slope_model,
                             schedule, args.seed, args.groups, args.residual_blocks)
        t0 = time.perf_counter()
        encoded = codec.encode_cuboid(cuboid, model)
        t1 = time.perf_counter()
        decoded = codec.decode_cuboid(encoded.blob, model)
        t2 = time.perf_counter()
        if not np.array_equal(decoded.cuboid, cuboid):
            raise CliError(f"{schedule} round trip failed")  # pragma: no cover
        passes[schedule] = decoded.forward_passes
        report[f"{schedule}_encode_seconds"] = f"{t1 - t0:.4f}"
        report[f"{schedule}_decode_seconds"] = f"{t2 - t1:.4f}"
        report[f"{schedule}_passes"] = decoded.forward_passes
        report[f"{schedule}_payload_bits"] = encoded.payload_bits
    report["pass_ratio"] = f"{passes[RASTER] / passes[SLOPE]:.4f}"
    _emit(out, **report)
    return 0


_COMMANDS = {
    "gen-corpus": cmd_gen_corpus,
    "train": cmd_train,
    "compress": cmd_compress,
    "decompress": cmd_decompress,
    "inpaint": cmd_inpaint,
    "bench": cmd_bench,
}


def _thread_cap():
    value = os.environ.get("TCAE_THREADS")
    if not value:
        return None
    try:
        threads = int(value)
    except ValueError:
        raise CliError(f"TCAE_THREADS must be an integer, got {value!r}") from None
    if threads < 1:
        raise CliError("TCAE_THREADS must be positive")
    return threads


def run(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    threads = _thread_cap()
    command = _COMMANDS[args.command]
    if threads is None:
        return command(args, out)
    from threadpoolctl import threadpool_limits
    with threadpool_limits(limits=threads):
        return command(args, out)


def main(argv=None) -> int:
    try:
        return run(argv)
    except CliError as exc:
        print(f"trimcodec: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"trimcodec: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
