"""Command-line entry point.

Subcommands: dataset, train-vae, train-restorer, train-lora, infer,
sweep-alpha, analyze, serve. Every command accepts ``--seed`` and is fully
reproducible given it; machine-readable results go to stdout or files,
logs to stderr. Each run writes a resolved-config snapshot next to its
outputs. ``LH_HOME`` overrides the default checkpoint/cache directory.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .errors import (
    CheckpointError,
    ConfigurationError,
    IngestionError,
    LatresError,
    ValidationError,
)

log = logging.getLogger("latres")


def lh_home() -> Path:
    return Path(os.environ.get("LH_HOME", Path.home() / ".latres"))


def default_ckpt_path() -> Path:
    return lh_home() / "default.ckpt"


def parse_grid(spec: str) -> list[float]:
    """Parse an alpha grid: 'a:b:step' (inclusive), 'x,y,z', or one value."""
    spec = spec.strip()
    try:
        if ":" in spec:
            start_s, stop_s, step_s = spec.split(":")
            start, stop, step = float(start_s), float(stop_s), float(step_s)
            if step <= 0:
                raise ValidationError(f"grid step must be > 0, got {step}")
            values = []
            v = start
            while v <= stop + 1e-9:
                values.append(round(v, 10))
                v += step
            return values
        if "," in spec:
            return [float(v) for v in spec.split(",") if v.strip()]
        return [float(spec)]
    except ValueError as exc:
        raise ValidationError(f"cannot parse grid {spec!r}: {exc}") from exc


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config(args) -> "RunConfig":
    from .config import RunConfig, load_run_config

    cfg = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _snapshot(cfg, target: Path) -> None:
    from .config import dump_run_config

    if target.suffix:  # file output -> sibling snapshot
        path = target.with_name(target.name + ".config.json")
    else:
        target.mkdir(parents=True, exist_ok=True)
        path = target / "resolved_config.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    dump_run_config(cfg, path)


def _write_log(entries: list[dict], path: Path) -> None:
    path.write_text(json.dumps(entries, indent=2) + "\n")


def cmd_dataset(args) -> int:
    from . import serialization
    from .dataset import build_dataset, save_dataset

    cfg = _load_config(args)
    manifest = cfg.dataset
    overrides = {}
    for name in ("source", "count", "resolution", "folder"):
        val = getattr(args, name, None)
        if val is not None:
            overrides[name] = val
    if args.kinds:
        overrides["degradations"] = tuple(k.strip() for k in args.kinds.split(","))
    if overrides:
        manifest = dataclasses.replace(manifest, **overrides)
    cfg = dataclasses.replace(cfg, dataset=manifest)
    out = Path(args.out)
    ds = build_dataset(manifest)
    save_dataset(ds, out)
    _snapshot(cfg, out)
    log.info("wrote %d samples to %s", len(ds), out)
    print(serialization.pretty_json(manifest), end="")
    return 0


def cmd_train_vae(args) -> int:
    from .dataset import load_dataset
    from .training import train_vae

    cfg = _load_config(args)
    section = cfg.vae
    if args.steps is not None:
        section = dataclasses.replace(section, steps=args.steps)
    cfg = dataclasses.replace(cfg, vae=section)
    ds = load_dataset(args.dataset)
    bundle, history = train_vae(section, ds)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bundle.save(out)
    _write_log(history, out.with_name(out.name + ".log.json"))
    _snapshot(cfg, out)
    log.info("saved %s (model %s)", out, bundle.model_id())
    return 0


def cmd_train_restorer(args) -> int:
    from .checkpoint import CheckpointBundle
    from .dataset import load_dataset
    from .training import train_restorer

    cfg = _load_config(args)
    section = cfg.restorer
    if args.steps is not None:
        section = dataclasses.replace(section, steps=args.steps)
    cfg = dataclasses.replace(cfg, restorer=section)
    ds = load_dataset(args.dataset)
    bundle, history = train_restorer(section, ds, CheckpointBundle.load(args.ckpt))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bundle.save(out)
    _write_log(history, out.with_name(out.name + ".log.json"))
    _snapshot(cfg, out)
    log.info("saved %s (model %s)", out, bundle.model_id())
    return 0


def cmd_train_lora(args) -> int:
    from .checkpoint import CheckpointBundle, export_adapters
    from .dataset import load_dataset
    from .training import train_adapters

    cfg = _load_config(args)
    section = cfg.adapters
    if args.steps is not None:
        section = dataclasses.replace(section, steps=args.steps)
    cfg = dataclasses.replace(cfg, adapters=section)
    ds = load_dataset(args.dataset)
    bundle, history = train_adapters(section, ds, CheckpointBundle.load(args.ckpt))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bundle.save(out)
    if args.export_adapters:
        export_adapters(bundle, args.export_adapters)
    _write_log(history, out.with_name(out.name + ".log.json"))
    _snapshot(cfg, out)
    log.info("saved %s (model %s)", out, bundle.model_id())
    return 0


def cmd_infer(args) -> int:
    from .checkpoint import CheckpointBundle
    from .imageio import load_image, save_image
    from .metrics import compute_metrics
    from .pipeline import InferenceSession

    cfg = _load_config(args)
    ckpt = args.ckpt or default_ckpt_path()
    session = InferenceSession(CheckpointBundle.load(ckpt))
    if not session.has_adapters:
        log.warning("bundle has no adapters; alpha has no effect")
    image = load_image(args.input)
    out = session.restore(
        image, args.alpha, tile=cfg.pipeline.tile, overlap=cfg.pipeline.overlap
    )
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_image(out_path, out, bits=16 if args.bits16 else 8)
    _snapshot(cfg, out_path)
    if args.ref:
        report = compute_metrics(out, load_image(args.ref), session.prior)
        print(json.dumps(report.to_dict(), sort_keys=True))
    log.info("wrote %s", out_path)
    return 0


def cmd_sweep_alpha(args) -> int:
    from .checkpoint import CheckpointBundle
    from .dataset import load_dataset
    from .pipeline import sweep_alpha

    cfg = _load_config(args)
    grid = parse_grid(args.grid)
    ds = load_dataset(args.dataset)
    rows = sweep_alpha(
        CheckpointBundle.load(args.ckpt),
        ds,
        grid,
        tile=cfg.pipeline.tile,
        overlap=cfg.pipeline.overlap,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.json").write_text(json.dumps(rows, indent=2) + "\n")
    with open(out / "sweep.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    _snapshot(cfg, out)
    print(json.dumps(rows, sort_keys=True))
    return 0


def cmd_analyze(args) -> int:
    from . import serialization
    from .freq import SpectralBands, cdcs, hf_energy_proportion, lf_energy_proportion
    from .tensorio import load_tensor

    if args.analysis == "cdcs":
        root = Path(args.latents)
        groups = {}
        for sub in sorted(p for p in root.iterdir() if p.is_dir()):
            files = sorted(sub.glob("*.lht"))
            if files:
                groups[sub.name] = [load_tensor(p) for p in files]
        if len(groups) < 2:
            raise ValidationError(
                f"{root} must contain >= 2 subdirectories of .lht tensor dumps"
            )
        bands = SpectralBands(cutoff=args.cutoff) if args.bands else None
        report = cdcs(groups, bands=bands)
        print(json.dumps(report.to_dict(), sort_keys=True))
        return 0

    if args.analysis == "spectrum":
        path = Path(args.input)
        if path.suffix == ".lht":
            arr = load_tensor(path)
        else:
            from .imageio import load_image

            arr = load_image(path)
        bands = SpectralBands(cutoff=args.cutoff)
        print(
            json.dumps(
                {
                    "input": str(path),
                    "cutoff": args.cutoff,
                    "hf_energy_proportion": hf_energy_proportion(arr, bands),
                    "lf_energy_proportion": lf_energy_proportion(arr, bands),
                },
                sort_keys=True,
            )
        )
        return 0

    # encode: dump posterior-mean latents for every degradation and clean
    from .checkpoint import CheckpointBundle
    from .dataset import load_dataset
    from .pipeline import InferenceSession
    from .tensorio import save_tensor

    ds = load_dataset(args.dataset)
    session = InferenceSession(CheckpointBundle.load(args.ckpt))
    out = Path(args.out)
    groups = {"clean": ds.clean}
    groups.update(ds.degraded)
    for name, arr in groups.items():
        sub = out / name
        sub.mkdir(parents=True, exist_ok=True)
        for i in range(arr.shape[0]):
            save_tensor(sub / f"{i:04d}.lht", session.encode_mean(arr[i]))
    log.info("wrote latents for %s to %s", sorted(groups), out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .checkpoint import CheckpointBundle
    from .service import create_app

    ckpt = args.ckpt or default_ckpt_path()
    bundle = CheckpointBundle.load(ckpt)
    app = create_app(bundle, ui_dir=Path(args.ui) if args.ui else None)
    log.info("serving model %s on %s:%d", bundle.model_id(), args.host, args.port)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="latres", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="run config JSON")
        p.add_argument("--seed", type=int, help="override every config seed")

    p = sub.add_parser("dataset", parents=[], help="build a clean/degraded dataset")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--source", choices=["procedural", "folder"])
    p.add_argument("--count", type=int)
    p.add_argument("--resolution", type=int)
    p.add_argument("--folder", help="source folder for folder datasets")
    p.add_argument("--kinds", help="comma-separated degradation kinds")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train-vae", help="phase 1: train the autoencoder")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="output checkpoint path")
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_train_vae)

    p = sub.add_parser("train-restorer", help="phase 2: train the latent restorer")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--ckpt", required=True, help="phase-1 checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_train_restorer)

    p = sub.add_parser("train-lora", help="phase 3: train the high-frequency adapters")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--ckpt", required=True, help="phase-2 checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--export-adapters", help="also write the adapters standalone")
    p.set_defaults(func=cmd_train_lora)

    p = sub.add_parser("infer", help="restore one image")
    common(p)
    p.add_argument("--ckpt", help=f"checkpoint (default {default_ckpt_path()})")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--ref", help="reference image; prints metrics when given")
    p.add_argument("--bits16", action="store_true", help="write 16-bit PNG")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("sweep-alpha", help="metrics over an alpha grid")
    common(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--grid", default="0:1:0.25", help="start:stop:step, list, or value")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep_alpha)

    p = sub.add_parser("analyze", help="frequency/latent diagnostics")
    asub = p.add_subparsers(dest="analysis", required=True)
    pc = asub.add_parser("cdcs", help="cross-degradation cosine similarity")
    common(pc)
    pc.add_argument("--latents", required=True, help="dir of <id>/*.lht dumps")
    pc.add_argument("--bands", action="store_true", help="also report per-band values")
    pc.add_argument("--cutoff", type=float, default=0.5)
    pc.set_defaults(func=cmd_analyze)
    ps = asub.add_parser("spectrum", help="spectral energy proportions")
    common(ps)
    ps.add_argument("--input", required=True, help="PNG image or .lht tensor")
    ps.add_argument("--cutoff", type=float, default=0.5)
    ps.set_defaults(func=cmd_analyze)
    pe = asub.add_parser("encode", help="dump posterior-mean latents for a dataset")
    common(pe)
    pe.add_argument("--ckpt", required=True)
    pe.add_argument("--dataset", required=True)
    pe.add_argument("--out", required=True)
    pe.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    common(p)
    p.add_argument("--ckpt", help=f"checkpoint (default {default_ckpt_path()})")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--ui", help="directory of built UI assets to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ConfigurationError, IngestionError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except LatresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 2
        print(f"unexpected failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
