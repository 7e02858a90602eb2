"""Command-line surface.

Subcommands:
    dataset build       synthesize a training corpus
    train fbdd          train one branch denoiser on a corpus
    train hfa           train one alignment network on a corpus
    decompose           split one composite into layers given its alpha
    pipeline run        full three-stage run from a request file
    evaluate            score a decomposition method against a corpus
    ablate ban-loss     compare background-aligner objectives

Global flags on every subcommand: --config (JSON/YAML settings file),
--seed, --out, --adapters (adapter wiring file for pipeline runs).
Environment variables LAYERKIT_<SECTION>__<KEY> override the config
file; see layerkit.config.
"""

import argparse
import json
import sys
from pathlib import Path

from . import pngio
from .baselines import SolverConfig, decompose_smooth
from .config import RuntimeConfig, config_hash, load_config
from .datforge import build_corpus, load_corpus
from .diffusion import (
    FBDDModels,
    FBDDTrainConfig,
    IdentityAutoencoder,
    decompose,
    load_codec,
    load_denoiser,
    save_denoiser,
    train_fbdd,
)
from .hfa import (
    HFATrainConfig,
    degraded_layer_estimate,
    load_aligner,
    run_ban_ablation,
    save_aligner,
    train_hfa,
)
from .metrics import (
    build_report,
    distribution_distance,
    layer_errors,
    perceptual_distance,
    psnr,
    seam_metric,
    write_report,
)
from .metrics.report import write_csv
from .pipeline import (
    PipelineModels,
    PipelineRequest,
    load_adapters,
    multi_layer_decompose,
    persist_stack,
    run_pipeline,
)
from .raster import composite as compose_layers
from .raster import region_copy
from .seeding import spawn_seeds


def _require(args, name: str):
    value = getattr(args, name.replace("-", "_"), None)
    if value is None:
        raise ValueError(f"--{name} is required for this command")
    return value


def _codec_from_config(cfg: RuntimeConfig):
    if cfg.fbdd.codec == "identity":
        return IdentityAutoencoder()
    raise ValueError(
        "config asks for the learned codec; pass --codec with a trained "
        "codec checkpoint (train one via layerkit.diffusion.train_autoencoder)"
    )


def _load_models(args, cfg: RuntimeConfig) -> PipelineModels:
    codec = load_codec(args.codec) if args.codec else _codec_from_config(cfg)
    fg = load_denoiser(_require(args, "fg-model"))
    bg = load_denoiser(_require(args, "bg-model"))
    fan = load_aligner(args.fan) if args.fan else None
    ban = load_aligner(args.ban) if args.ban else None
    return PipelineModels(fbdd=FBDDModels(codec, fg, bg), fan=fan, ban=ban)


def _refined_layers(comp, alpha, models: PipelineModels, steps: int, seed: int):
    fg_hat, bg_hat = decompose(comp, alpha, models.fbdd, steps=steps, seed=seed)
    if models.fan is not None:
        from .hfa import fan_refine

        fg = fan_refine(models.fan, comp, alpha, fg_hat)
    else:
        fg = region_copy(fg_hat, comp, alpha, "fg")
    if models.ban is not None:
        from .hfa import ban_refine

        bg = ban_refine(models.ban, comp, alpha, bg_hat)
    else:
        bg = region_copy(bg_hat, comp, alpha, "bg")
    return fg, bg


def cmd_dataset_build(args) -> int:
    cfg = load_config(args.config)
    out = _require(args, "out")
    count = args.count if args.count is not None else cfg.data.count
    resolution = args.resolution if args.resolution is not None else cfg.data.resolution
    manifest = build_corpus(
        count=count,
        seed=args.seed,
        root=out,
        resolution=resolution,
        with_trimaps=cfg.data.with_trimaps,
        bit_depth=cfg.data.bit_depth,
    )
    print(f"wrote {manifest['count']} samples at {resolution}px under {out}")
    return 0


def cmd_train_fbdd(args) -> int:
    cfg = load_config(args.config)
    out = _require(args, "out")
    samples = load_corpus(_require(args, "corpus"), limit=args.limit)
    codec = load_codec(args.codec) if args.codec else _codec_from_config(cfg)
    train_cfg = FBDDTrainConfig(
        steps=args.steps if args.steps is not None else cfg.fbdd.steps,
        batch_size=cfg.fbdd.batch_size,
        lr=cfg.fbdd.lr,
        seed=args.seed,
        base_width=cfg.fbdd.base_width,
        stages=cfg.fbdd.stages,
        schedule_steps=cfg.fbdd.schedule_steps,
    )
    bundle, losses = train_fbdd(samples, args.branch, codec, train_cfg)
    save_denoiser(out, bundle)
    print(
        f"trained {args.branch} denoiser on {len(samples)} samples for "
        f"{train_cfg.steps} steps (final loss {losses[-1]:.4f}) -> {out}"
    )
    return 0


def cmd_train_hfa(args) -> int:
    cfg = load_config(args.config)
    out = _require(args, "out")
    samples = load_corpus(_require(args, "corpus"), limit=args.limit)
    est_seeds = spawn_seeds(args.seed, len(samples))
    estimates = [
        degraded_layer_estimate(s, args.role, sd) for s, sd in zip(samples, est_seeds)
    ]
    train_cfg = HFATrainConfig(
        steps=args.steps if args.steps is not None else cfg.hfa.steps,
        batch_size=cfg.hfa.batch_size,
        lr=cfg.hfa.lr,
        seed=args.seed,
        base_width=cfg.hfa.base_width,
        stages=cfg.hfa.stages,
        ban_weight=cfg.hfa.ban_weight,
        hf_scales=cfg.hfa.hf_scales,
    )
    bundle, losses = train_hfa(samples, estimates, args.role, train_cfg,
                               loss_variant=args.variant)
    save_aligner(out, bundle)
    print(
        f"trained {args.role} aligner ({bundle.loss_variant}) on {len(samples)} "
        f"samples for {train_cfg.steps} steps (final loss {losses[-1]:.4f}) -> {out}"
    )
    return 0


def cmd_decompose(args) -> int:
    cfg = load_config(args.config)
    out = _require(args, "out")
    comp = pngio.load_image(args.composite)
    alpha = pngio.load_alpha(args.alpha)
    provenance = {
        "seed": int(args.seed),
        "method": args.method,
        "config_hash": config_hash(cfg),
    }
    if args.method == "smooth":
        solver_cfg = SolverConfig(
            smoothness=cfg.solver.smoothness,
            iterations=cfg.solver.iterations,
            tol=cfg.solver.tol,
        )
        fg, bg, info = decompose_smooth(comp, alpha, solver_cfg)
        fg = region_copy(fg, comp, alpha, "fg")
        bg = region_copy(bg, comp, alpha, "bg")
        provenance["converged"] = bool(info.converged)
    else:
        models = _load_models(args, cfg)
        steps = args.steps if args.steps is not None else cfg.sampler.steps
        fg, bg = _refined_layers(comp, alpha, models, steps, args.seed)
    final = compose_layers(fg, bg, alpha)
    manifest_path = persist_stack(out, [(fg, alpha), (bg, None)], final, provenance)
    print(f"decomposed {args.composite} -> {manifest_path}")
    return 0


def _read_request(path, default_seed: int) -> PipelineRequest:
    data = json.loads(Path(path).read_text())
    image = None
    if data.get("input_image"):
        image = pngio.load_image(data["input_image"])
        image = image[:, :, :3] if image.shape[2] > 3 else image
    return PipelineRequest(
        prompt=data.get("prompt", ""),
        foreground_indices=tuple(data.get("foreground_indices", ())),
        foreground_prompts=tuple(data.get("foreground_prompts", ())),
        input_image=image,
        seed=int(data.get("seed", default_seed)),
    )


def cmd_pipeline_run(args) -> int:
    cfg = load_config(args.config)
    out = _require(args, "out")
    registry = load_adapters(_require(args, "adapters"))
    models = _load_models(args, cfg)
    request = _read_request(_require(args, "request"), args.seed)
    if args.steps is not None:
        cfg.sampler.steps = args.steps
    if len(request.foreground_prompts) >= 2:
        result = multi_layer_decompose(request, registry, models, cfg, out_dir=out)
    else:
        result = run_pipeline(request, registry, models, cfg, out_dir=out)
    n_fg = sum(1 for _, a in result.layers if a is not None)
    print(f"pipeline wrote {n_fg} foreground layer(s) -> {result.manifest_path}")
    for prompt in result.skipped:
        print(f"  skipped: {prompt!r} matched no region")
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    out = _require(args, "out")
    samples = load_corpus(_require(args, "corpus"), limit=args.limit)
    models = None
    if args.method == "fbdd":
        models = _load_models(args, cfg)
    steps = args.steps if args.steps is not None else cfg.sampler.steps

    fg_rows, bg_rows = [], []
    pred_bgs = []
    for i, s in enumerate(samples):
        if args.method == "smooth":
            solver_cfg = SolverConfig(
                smoothness=cfg.solver.smoothness,
                iterations=cfg.solver.iterations,
                tol=cfg.solver.tol,
            )
            fg, bg, _ = decompose_smooth(s.composite, s.alpha, solver_cfg)
            fg = region_copy(fg, s.composite, s.alpha, "fg")
            bg = region_copy(bg, s.composite, s.alpha, "bg")
        else:
            fg, bg = _refined_layers(s.composite, s.alpha, models, steps, seed=s.seed)
        fe = layer_errors(fg, s.foreground)
        be = layer_errors(bg, s.background)
        fg_rows.append({
            "mad": fe.mad, "mse": fe.mse, "sad": fe.sad,
            "psnr": psnr(fg, s.foreground),
            "perceptual": perceptual_distance(fg, s.foreground),
        })
        bg_rows.append({
            "mad": be.mad, "mse": be.mse, "sad": be.sad,
            "psnr": psnr(bg, s.background),
            "perceptual": perceptual_distance(bg, s.background),
            "seam": seam_metric(bg, s.alpha),
        })
        pred_bgs.append(bg)

    dist = distribution_distance(pred_bgs, [s.background for s in samples])
    groups = {"fg": fg_rows, "bg": bg_rows}
    report = build_report(groups, meta={
        "method": args.method,
        "samples": len(samples),
        "config_hash": config_hash(cfg),
        "bg_fid": dist.fid,
        "bg_kid": dist.kid,
    })
    write_report(out, report)
    if args.csv:
        write_csv(args.csv, groups)
    for label in ("fg", "bg"):
        row = report["display"][label]
        parts = ", ".join(f"{k} {v:.3f}" for k, v in sorted(row.items()))
        print(f"{label}: {parts}")
    print(f"bg fid {dist.fid:.4f}, kid {dist.kid:.4f} -> {out}")
    return 0


def cmd_ablate_ban(args) -> int:
    cfg = load_config(args.config)
    out = _require(args, "out")
    samples = load_corpus(_require(args, "corpus"))
    n_train, n_eval = args.train_count, args.eval_count
    if len(samples) < n_train + n_eval:
        raise ValueError(
            f"corpus holds {len(samples)} samples but the split needs {n_train + n_eval}"
        )
    train_cfg = HFATrainConfig(
        steps=args.steps if args.steps is not None else cfg.hfa.steps,
        batch_size=cfg.hfa.batch_size,
        lr=cfg.hfa.lr,
        seed=args.seed,
        base_width=cfg.hfa.base_width,
        stages=cfg.hfa.stages,
        ban_weight=cfg.hfa.ban_weight,
        hf_scales=cfg.hfa.hf_scales,
    )
    result = run_ban_ablation(
        samples[:n_train], samples[n_train:n_train + n_eval],
        train_cfg, estimate_seed=args.seed,
    )
    report = {
        "schema": 1,
        "variants": {
            name: {k: v for k, v in entry.items() if k != "bundle"}
            for name, entry in result["variants"].items()
        },
        "config": result["config"],
    }
    if "ban_vs_mse" in result:
        report["ban_vs_mse"] = result["ban_vs_mse"]
    Path(out).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    for name, entry in sorted(report["variants"].items()):
        print(f"{name}: mean seam {entry['seam_mean']:.5f}")
    if "ban_vs_mse" in report:
        t = report["ban_vs_mse"]
        print(f"ban vs mse: {t['wins']}/{t['n']} wins, sign test p = {t['pvalue']:.4f}")
    return 0


def _add_common(sub):
    sub.add_argument("--config", default=None, help="JSON or YAML settings file")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", default=None, help="output file or directory")
    sub.add_argument("--adapters", default=None, help="adapter wiring JSON")


def _add_model_flags(sub):
    sub.add_argument("--fg-model", dest="fg_model", default=None)
    sub.add_argument("--bg-model", dest="bg_model", default=None)
    sub.add_argument("--fan", default=None, help="foreground aligner checkpoint")
    sub.add_argument("--ban", default=None, help="background aligner checkpoint")
    sub.add_argument("--codec", default=None, help="codec checkpoint")
    sub.add_argument("--steps", type=int, default=None, help="sampler steps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="layerkit",
                                     description="layered-image synthesis toolkit")
    top = parser.add_subparsers(dest="command")

    dataset = top.add_parser("dataset", help="corpus tools")
    dsub = dataset.add_subparsers(dest="subcommand")
    build = dsub.add_parser("build", help="synthesize a training corpus")
    _add_common(build)
    build.add_argument("--count", type=int, default=None)
    build.add_argument("--resolution", type=int, default=None)
    build.set_defaults(handler=cmd_dataset_build)

    train = top.add_parser("train", help="model training")
    tsub = train.add_subparsers(dest="subcommand")
    tf = tsub.add_parser("fbdd", help="train one branch denoiser")
    _add_common(tf)
    tf.add_argument("--corpus", default=None)
    tf.add_argument("--branch", choices=("fg", "bg"), required=True)
    tf.add_argument("--codec", default=None, help="codec checkpoint")
    tf.add_argument("--steps", type=int, default=None)
    tf.add_argument("--limit", type=int, default=None)
    tf.set_defaults(handler=cmd_train_fbdd)
    th = tsub.add_parser("hfa", help="train one alignment network")
    _add_common(th)
    th.add_argument("--corpus", default=None)
    th.add_argument("--role", choices=("fan", "ban"), required=True)
    th.add_argument("--variant", choices=("ban", "mse", "regionwise"), default=None)
    th.add_argument("--steps", type=int, default=None)
    th.add_argument("--limit", type=int, default=None)
    th.set_defaults(handler=cmd_train_hfa)

    dec = top.add_parser("decompose", help="split a composite given its alpha")
    _add_common(dec)
    _add_model_flags(dec)
    dec.add_argument("--composite", required=True)
    dec.add_argument("--alpha", required=True)
    dec.add_argument("--method", choices=("fbdd", "smooth"), default="fbdd")
    dec.set_defaults(handler=cmd_decompose)

    pipe = top.add_parser("pipeline", help="full three-stage runs")
    psub = pipe.add_subparsers(dest="subcommand")
    prun = psub.add_parser("run", help="run from a request file")
    _add_common(prun)
    _add_model_flags(prun)
    prun.add_argument("--request", default=None, help="request JSON")
    prun.set_defaults(handler=cmd_pipeline_run)

    ev = top.add_parser("evaluate", help="score a method against a corpus")
    _add_common(ev)
    _add_model_flags(ev)
    ev.add_argument("--corpus", default=None)
    ev.add_argument("--method", choices=("fbdd", "smooth"), default="fbdd")
    ev.add_argument("--limit", type=int, default=None)
    ev.add_argument("--csv", default=None, help="also write per-sample CSV")
    ev.set_defaults(handler=cmd_evaluate)

    ab = top.add_parser("ablate", help="ablation studies")
    asub = ab.add_subparsers(dest="subcommand")
    ban = asub.add_parser("ban-loss", help="compare background objectives")
    _add_common(ban)
    ban.add_argument("--corpus", default=None)
    ban.add_argument("--train-count", dest="train_count", type=int, default=24)
    ban.add_argument("--eval-count", dest="eval_count", type=int, default=20)
    ban.add_argument("--steps", type=int, default=None)
    ban.set_defaults(handler=cmd_ablate_ban)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = getattr(args, "handler", None)
    if handler is None:
        parser.print_help()
        return 2
    try:
        return handler(args)
    except (ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
