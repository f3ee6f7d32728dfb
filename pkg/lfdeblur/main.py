"""
Command-line entry point: synth, train, infer, eval, slice and info.

Every numeric default comes from the config models. Values resolve as
defaults < --config file < flags; environment variables are never read.
"""
import argparse
import asyncio
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple, Type

from pydantic import BaseModel

from lfdeblur.core.config import (
    LOG_DIR,
    ModelConfig,
    SynthConfig,
    TrainConfig,
    load_config_file,
    render_config,
    resolve_config,
)
from lfdeblur.core.exceptions import EXIT_OK, EXIT_RUNTIME, LFDeblurError, exit_code_for
from lfdeblur.core.lightfield import EPIOrientation, epi, micro_lens, sai
from lfdeblur.core.logger import get_logger, set_log_level
from lfdeblur.network.deblur_net import ablation_config
from lfdeblur.network.param_count import count_params
from lfdeblur.services import blur_service, inference_service, metrics_service, training_service
from lfdeblur.services.checkpoint_service import load_model
from lfdeblur.utils.image_utils import export_image, load_light_field
from lfdeblur.utils.run_logging import log_run

logger = get_logger(__name__)

# (config dict, result summary, exit code)
CommandResult = Tuple[Dict[str, Any], Dict[str, Any], int]


def _add_config_flags(parser: argparse.ArgumentParser, *models: Type[BaseModel]) -> None:
    """One --flag-name per config field; values stay strings until pydantic validates them."""
    seen = set()
    for model_cls in models:
        group = parser.add_argument_group(f"{model_cls.__name__} overrides")
        for key, field in model_cls.model_fields.items():
            if key in seen:
                continue
            seen.add(key)
            default = field.default
            group.add_argument(
                f"--{key.replace('_', '-')}",
                dest=key,
                default=None,
                metavar="VALUE",
                help=f"{field.description or key} (default: {default})",
            )


def _resolve(args: argparse.Namespace, model_cls: Type[BaseModel]) -> BaseModel:
    file_values = load_config_file(args.config) if args.config else {}
    return resolve_config(model_cls, file_values, vars(args))


def _echo(*configs: BaseModel, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Print the fully resolved configuration and return it as a dict."""
    lines = [render_config(*configs)] if configs else []
    for key, value in (extra or {}).items():
        lines.append(f"{key}={value}")
    text = "\n".join(line for line in lines if line)
    print(text)
    resolved: Dict[str, Any] = {}
    for config in configs:
        for key, value in config.model_dump().items():
            resolved.setdefault(key, value)
    resolved.update(extra or {})
    return resolved


def _synth(args: argparse.Namespace) -> CommandResult:
    cfg = _resolve(args, SynthConfig)
    config = _echo(cfg, extra={"in": args.input, "out": args.out, "jobs": args.jobs})
    outputs = asyncio.run(blur_service.synthesize_scenes(args.input, args.out, cfg, args.jobs))
    return config, {"outputs": [str(p) for p in outputs]}, EXIT_OK


def _train(args: argparse.Namespace) -> CommandResult:
    model_cfg = _resolve(args, ModelConfig)
    train_cfg = _resolve(args, TrainConfig)
    config = _echo(model_cfg, train_cfg, extra={"sharp": args.sharp, "blurred": args.blurred, "out": args.out})
    dataset = training_service.load_dataset(args.sharp, args.blurred)
    result = training_service.train_loop(model_cfg, train_cfg, dataset, args.out, resume=args.resume)
    print(f"checkpoint={result.checkpoint_path}")
    summary = {
        "last_checkpoint": str(result.last_checkpoint),
        "best_checkpoint": str(result.best_checkpoint) if result.best_checkpoint else None,
        "final_step": result.final_step,
        "final_loss": result.losses[-1] if result.losses else None,
    }
    return config, summary, EXIT_OK


def _model_flags_given(args: argparse.Namespace) -> bool:
    return bool(args.config) or any(getattr(args, key, None) is not None for key in ModelConfig.model_fields)


def _infer(args: argparse.Namespace) -> CommandResult:
    requested = _resolve(args, ModelConfig) if _model_flags_given(args) else None
    net, payload = load_model(args.ckpt, requested, args.device)
    config = _echo(net.config, extra={"ckpt": payload["path"], "in": args.input, "out": args.out})
    outputs = inference_service.infer_with_model(net, args.input, args.out)
    return config, {"outputs": [str(p) for p in outputs]}, EXIT_OK


def _eval(args: argparse.Namespace) -> CommandResult:
    config = _echo(extra={"pred": args.pred, "gt": args.gt, "report": args.report, "error_maps": args.error_maps})
    report = metrics_service.evaluate_directories(args.pred, args.gt, args.error_maps)
    print(metrics_service.render_report(report), end="")
    if args.report:
        metrics_service.write_report(report, args.report)
    code = EXIT_RUNTIME if report.failures or not report.per_scene else EXIT_OK
    return config, report.model_dump(exclude={"per_scene": {"__all__": {"per_view"}}}), code


def _slice(args: argparse.Namespace) -> CommandResult:
    config = _echo(extra={k: v for k, v in vars(args).items() if k not in ("handler",)})
    lf = load_light_field(args.input)
    if args.kind == "sai":
        image = sai(lf, args.u, args.v)
    elif args.kind == "micro":
        image = micro_lens(lf, args.x, args.y)
    else:
        image = epi(lf, args.orientation, args.fixed_angular, args.fixed_spatial)
    path = export_image(image, args.out, args.scale)
    return config, {"output": str(path), "shape": list(image.shape)}, EXIT_OK


def _info(args: argparse.Namespace) -> CommandResult:
    model_cfg = _resolve(args, ModelConfig)
    ablated = ablation_config(model_cfg, args.ablation)
    config = _echo(ablated, extra={"ablation": args.ablation})
    report = count_params(ablated)
    for line in report.lines():
        print(line)
    summary: Dict[str, Any] = {"total": report.total}
    if args.ablation != "none":
        delta = report.total - count_params(model_cfg).total
        print(f"delta_vs_full {delta:+d}")
        summary["delta_vs_full"] = delta
    return config, summary, EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Flat key=value config file")
    common.add_argument("--log-level", default=None, help="Logging level (DEBUG, INFO, WARNING, ...)")
    common.add_argument("--log-dir", default=LOG_DIR, help=f"Directory for JSON run records (default: {LOG_DIR})")

    parser = argparse.ArgumentParser(prog="lfdeblur", description="Light-field motion deblurring toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="Synthesize motion-blurred light fields")
    p.add_argument("--in", dest="input", required=True, help="Sharp view directory or root of scenes")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--jobs", type=int, default=1, help="Scenes processed concurrently")
    _add_config_flags(p, SynthConfig)
    p.set_defaults(handler=_synth)

    p = sub.add_parser("train", parents=[common], help="Train the deblurring network")
    p.add_argument("--sharp", required=True, help="Sharp view directory or root of scenes")
    p.add_argument("--blurred", required=True, help="Blurred view directory or root of scenes")
    p.add_argument("--out", required=True, help="Run directory (checkpoints under out/ckpt)")
    p.add_argument("--resume", default=None, help="Checkpoint to resume from")
    _add_config_flags(p, ModelConfig, TrainConfig)
    p.set_defaults(handler=_train)

    p = sub.add_parser("infer", parents=[common], help="Deblur light fields with a checkpoint")
    p.add_argument("--ckpt", required=True, help="Checkpoint file, directory, run directory or best/last")
    p.add_argument("--in", dest="input", required=True, help="Blurred view directory or root of scenes")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--device", default="cpu", help="Torch device")
    _add_config_flags(p, ModelConfig)
    p.set_defaults(handler=_infer)

    p = sub.add_parser("eval", parents=[common], help="Compute PSNR, SSIM, NCC and LMSE")
    p.add_argument("--pred", required=True, help="Predicted view directory or root of scenes")
    p.add_argument("--gt", required=True, help="Ground-truth view directory or root of scenes")
    p.add_argument("--report", default=None, help="Write the report to this file")
    p.add_argument("--error-maps", default=None, help="Write per-view |pred - gt| PNGs under this directory")
    p.set_defaults(handler=_eval)

    p = sub.add_parser("slice", parents=[common], help="Export an SAI, micro-lens image or EPI")
    p.add_argument("--in", dest="input", required=True, help="View directory")
    p.add_argument("--out", required=True, help="Output PNG file")
    p.add_argument("--kind", choices=["sai", "micro", "epi"], required=True)
    p.add_argument("--u", type=int, default=0)
    p.add_argument("--v", type=int, default=0)
    p.add_argument("--x", type=int, default=0)
    p.add_argument("--y", type=int, default=0)
    p.add_argument("--orientation", choices=[o.value for o in EPIOrientation], default=EPIOrientation.HORIZONTAL.value)
    p.add_argument("--fixed-angular", type=int, default=0, help="u (horizontal EPI) or v (vertical EPI)")
    p.add_argument("--fixed-spatial", type=int, default=0, help="y (horizontal EPI) or x (vertical EPI)")
    p.add_argument("--scale", type=int, default=1, help="Nearest-neighbour upscaling factor")
    p.set_defaults(handler=_slice)

    p = sub.add_parser("info", parents=[common], help="Print the resolved model config and parameter breakdown")
    p.add_argument("--ablation", choices=["none", "vasc", "dpva", "ape"], default="none")
    _add_config_flags(p, ModelConfig)
    p.set_defaults(handler=_info)

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run one CLI invocation.

    Returns:
        0 on success, 2 for usage errors, 1 for runtime failures
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_RUNTIME

    handler: Callable[[argparse.Namespace], CommandResult] = args.handler

    try:
        if args.log_level:
            set_log_level(args.log_level)
        config, result, code = handler(args)
    except (LFDeblurError, OSError, ValueError) as e:
        message = getattr(e, "message", str(e))
        code = exit_code_for(e)
        logger.error(f"{args.command} failed: {message}")
        print(f"error: {message}", file=sys.stderr)
        log_run(args.command, {k: v for k, v in vars(args).items() if k != "handler"}, error=message,
                exit_code=code, log_dir=args.log_dir)
        return code

    log_run(args.command, config, result, exit_code=code, log_dir=args.log_dir)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
