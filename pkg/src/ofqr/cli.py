"""``ofqr`` command-line interface.

Exit codes: 0 success, 1 operational error, 2 invalid arguments.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ofqr import io
from ofqr.errors import OfqrError
from ofqr.optics import Geometry, NoiseModel

log = logging.getLogger("ofqr")


def _floats(text: str) -> list[float]:
    """Comma list ``1,2,5`` or range ``start:stop:step`` (stop inclusive)."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        n = int(round((stop - start) / step))
        return [round(start + i * step, 10) for i in range(n + 1)]
    return [float(v) for v in text.split(",") if v]


def _load_geometry(args) -> Geometry:
    geom = Geometry.from_json(io.load_json(args.geometry)) if args.geometry else Geometry()
    if getattr(args, "gap", None) is not None:
        geom = geom.with_gap(args.gap)
    return geom


def _load_noise(args) -> NoiseModel | None:
    if getattr(args, "noiseless", False):
        return None
    if getattr(args, "noise", None):
        return NoiseModel.from_json(io.load_json(args.noise))
    return NoiseModel()


def cmd_gen_data(args) -> int:
    from ofqr.pipeline.dataset import gen_dataset

    manifest = gen_dataset(_load_geometry(args), _load_noise(args), args.count, args.seed,
                           args.out, jobs=args.jobs, id_offset=args.id_offset)
    print(f"wrote {len(manifest['records'])} samples to {args.out}")
    return 0


def cmd_train(args) -> int:
    from ofqr.nn.network import NetworkConfig
    from ofqr.pipeline.dataset import load_dataset
    from ofqr.pipeline.training import TrainConfig, train

    train_set = load_dataset(args.train)
    val_set = load_dataset(args.val)
    h, w = train_set.geometry.sensor_shape
    net = NetworkConfig.from_json(io.load_json(args.network)) if args.network else NetworkConfig(height=h, width=w)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, lr=args.lr, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    history = train(train_set, val_set, net, cfg, out, jobs=args.jobs, progress=True)
    best = max(r["val_ssim"] for r in history)
    print(f"best val_ssim {best:.4f}; checkpoint {out}")
    return 0


def cmd_eval(args) -> int:
    from ofqr.pipeline.dataset import load_dataset
    from ofqr.pipeline.evaluation import Model, evaluate

    records = evaluate(Model.load(args.checkpoint), load_dataset(args.data), args.out, args.triptychs)
    mean = sum(r.ssim for r in records) / max(len(records), 1)
    rate = sum(r.decode_success for r in records) / max(len(records), 1)
    print(f"mean_ssim {mean:.4f} decode_rate {rate:.3f} n {len(records)}")
    return 0


def _sweep_geometry(args, model) -> Geometry:
    if args.geometry:
        return _load_geometry(args)
    return Geometry.from_json(model.header["geometry"])


def cmd_sweep_gap(args) -> int:
    from ofqr.pipeline.evaluation import Model
    from ofqr.pipeline.sweeps import sweep_gap

    models = [Model.load(p) for p in args.checkpoints]
    result = sweep_gap(models, _floats(args.gaps), args.n, args.seed,
                       _sweep_geometry(args, models[0]), _load_noise(args), args.jobs)
    result.write_csv(args.out)
    print(f"wrote {len(result.rows)} rows to {args.out}")
    return 0


def cmd_sweep_shift(args) -> int:
    from ofqr.pipeline.evaluation import Model
    from ofqr.pipeline.sweeps import default_shifts, sweep_shift

    model = Model.load(args.checkpoint)
    if args.shifts:
        pairs = [tuple(float(v) for v in item.split(",")) for item in args.shifts.split(";")]
    else:
        pairs = default_shifts(args.step)
    result = sweep_shift(model, pairs, args.n, args.seed, _sweep_geometry(args, model),
                         _load_noise(args), args.jobs)
    result.write_csv(args.out)
    print(f"wrote {len(result.rows)} rows to {args.out}")
    return 0


def cmd_sweep_rot(args) -> int:
    from ofqr.pipeline.evaluation import Model
    from ofqr.pipeline.sweeps import sweep_rot

    model = Model.load(args.checkpoint)
    result = sweep_rot(model, args.axes.split(","), _floats(args.angles), args.n, args.seed,
                       _sweep_geometry(args, model), _load_noise(args), args.jobs)
    result.write_csv(args.out)
    print(f"wrote {len(result.rows)} rows to {args.out}")
    return 0


def cmd_tikhonov(args) -> int:
    from ofqr.inverse import RegularizerConfig, SvdFactors, reconstruct_linear, svd_decompose
    from ofqr.optics import build_transfer_matrix

    geom = _load_geometry(args)
    cache = Path(args.factors) if args.factors else None
    if cache is not None and (cache / "manifest.json").exists():
        factors = SvdFactors.load(cache)
    else:
        factors = svd_decompose(build_transfer_matrix(geom), geometry=geom)
        if cache is not None:
            factors.save(cache)
    frame = io.load_tensor(args.frame)
    if args.rank:
        config = RegularizerConfig(mode="truncation", rank=args.rank)
    else:
        config = RegularizerConfig(mode="tikhonov", lam=args.lam)
    image = reconstruct_linear(frame, factors, config, geom)
    out = Path(args.out)
    if out.suffix.lower() == ".pgm":
        io.save_pgm(out, image)
    else:
        io.save_tensor(out, image)
    print(f"wrote {image.shape[0]}x{image.shape[1]} reconstruction to {out}")
    return 0


def cmd_qr_encode(args) -> int:
    from ofqr.qr import encode

    grid = encode(args.text)
    io.save_pgm(args.out, (~grid).astype(float), maxval=255)
    return 0


def cmd_qr_decode(args) -> int:
    from ofqr.qr import decode

    img = io.load_pgm(args.infile)
    if img.shape != (29, 29):
        from ofqr.qr import sample_grid

        grid = sample_grid(img)
    else:
        grid = img < 0.5
    print(decode(grid))
    return 0


def cmd_grad_check(args) -> int:
    from ofqr.nn.gradcheck import grad_check
    from ofqr.nn.network import NetworkConfig

    config = NetworkConfig(height=args.size, width=args.size,
                           architecture="linear" if args.linear else "unet")
    report = grad_check(config, args.seed, args.tolerance, args.coords, mutation=args.mutation)
    for key, err in report.per_array.items():
        print(f"{key:20s} {err:.3e}")
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} max_rel_error {report.max_rel_error:.3e} tolerance {report.tolerance:g}")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=0)
    shared.add_argument("--geometry", help="geometry JSON file")
    shared.add_argument("--jobs", type=int, default=1)
    noise = argparse.ArgumentParser(add_help=False)
    noise.add_argument("--noise", help="noise model JSON file")
    noise.add_argument("--noiseless", action="store_true")
    noise.add_argument("--gap", type=float, help="override geometry gap (mm)")

    p = argparse.ArgumentParser(prog="ofqr", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-data", parents=[shared, noise], help="simulate a dataset")
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--id-offset", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("train", parents=[shared], help="train one network")
    s.add_argument("--train", required=True)
    s.add_argument("--val", required=True)
    s.add_argument("--network", help="network config JSON")
    s.add_argument("--epochs", type=int, default=30)
    s.add_argument("--batch-size", type=int, default=10)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--out", required=True, help="checkpoint path")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", parents=[shared], help="evaluate a checkpoint")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--triptychs", type=int, default=0)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep-gap", parents=[shared, noise], help="defocus sweep")
    s.add_argument("--checkpoints", nargs="+", required=True)
    s.add_argument("--gaps", default="1:10:1")
    s.add_argument("--n", type=int, default=40)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep_gap)

    s = sub.add_parser("sweep-shift", parents=[shared, noise], help="translation sweep")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--shifts", help="'dx,dy;dx,dy;...' in mm (default: 3x3 grid)")
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--n", type=int, default=40)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep_shift)

    s = sub.add_parser("sweep-rot", parents=[shared, noise], help="rotation sweep")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--axes", default="x,y,z")
    s.add_argument("--angles", default="0,1")
    s.add_argument("--n", type=int, default=40)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep_rot)

    s = sub.add_parser("tikhonov", parents=[shared], help="regularised SVD reconstruction")
    s.add_argument("--frame", required=True)
    s.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    s.add_argument("--rank", type=int)
    s.add_argument("--factors", help="directory caching the SVD factors")
    s.add_argument("--gap", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_tikhonov)

    s = sub.add_parser("qr", help="QR encode/decode")
    qsub = s.add_subparsers(dest="qr_command", required=True)
    e = qsub.add_parser("encode")
    e.add_argument("--text", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_qr_encode)
    d = qsub.add_parser("decode")
    d.add_argument("--in", dest="infile", required=True)
    d.set_defaults(func=cmd_qr_decode)

    s = sub.add_parser("grad-check", parents=[shared], help="finite-difference gradient check")
    s.add_argument("--size", type=int, default=16)
    s.add_argument("--tolerance", type=float, default=1e-4)
    s.add_argument("--coords", type=int, default=200)
    s.add_argument("--linear", action="store_true")
    s.add_argument("--mutation", choices=["padding"])
    s.set_defaults(func=cmd_grad_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose or args.command == "train" else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except (OfqrError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stdout if args.command == "qr" else sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
