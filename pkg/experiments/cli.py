import argparse
import logging
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence

import yaml

from experiments.config import load_manifest, resolved_yaml
from experiments.constructors import (
    construct_autoencoder_config,
    construct_mel_config,
    construct_stft_config,
)
from experiments.loaders import (
    describe_condition,
    load_condition_reference,
    load_frozen_autoencoder,
    load_input,
    load_models,
)
from experiments.runners import (
    AUTOENCODER_CHECKPOINT,
    BWE_FACTOR,
    prepare_corpus,
    run_bwe_experiment,
    run_m2s_experiment,
    train_bwe_model,
    train_m2s_model,
    write_sweep,
)
from experiments.schemas import ConditionSchema, ExperimentManifest, ModelPresetSchema
from experiments.utils import output_directories
from src.autoencoders.toy_vae import ToyVAE, train_toy_vae
from src.evaluation.comparisons import banded_metrics, mean_metrics, stereo_metrics, trim_to
from src.evaluation.reports import EvalReport, EvalRow, emit_report, format_table
from src.evaluation.sweep import interpolation_sweep
from src.exceptions import (
    ArtifactMismatchError,
    ConfigError,
    DataError,
    EmptyInputError,
    LatentFormatError,
)
from src.latents.audio_io import WAV_SUBTYPES, read_wav, write_wav
from src.latents.relt import read_latent_file, write_latent_file
from src.latents.types import AudioBuffer, LatentSequence, StackedLatent
from src.networks.condition_encoder import (
    ConditioningEncoder,
    ConditioningEncoderSpec,
    transfer_condition,
)
from src.networks.counting import count_flops, count_params
from src.networks.latent_predictor import LatentPredictor, ModelSpec
from src.samplers import sample_prior
from src.signal_ops.filters import BandSplitConfig
from src.signal_ops.resampling import resample_sinc
from src.signal_ops.stereo import downmix_to_mono
from src.training.checkpoints import checkpoint_manifest, save_autoencoder
from src.utils import configure_logging, make_generator, set_seed

logger = logging.getLogger(__name__)

EXIT_CODES = (
    (ConfigError, 2),
    (ArtifactMismatchError, 3),
    (DataError, 4),
    (EmptyInputError, 4),
    (LatentFormatError, 4),
)
PAPER_FRAME_RATE_HZ = 44100 / 1024
FLOPS_PRESETS: Dict[str, Callable[[int], ModelSpec]] = {
    ModelPresetSchema.small.value: ModelSpec.small,
    ModelPresetSchema.medium.value: ModelSpec.medium,
    ModelPresetSchema.stereo.value: ModelSpec.stereo,
    ModelPresetSchema.tiny.value: ModelSpec.tiny,
}


def exit_code(error: BaseException) -> int:
    for error_type, code in EXIT_CODES:
        if isinstance(error, error_type):
            return code
    return 1


def _manifest(args: argparse.Namespace) -> ExperimentManifest:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.output_dir is not None:
        overrides.append(f"output_dir={args.output_dir}")
    manifest = load_manifest(config_path=args.config, preset=args.preset, overrides=overrides)
    logger.info(f"Resolved config:\n{resolved_yaml(manifest)}")
    set_seed(manifest.seed)
    return manifest


def _log_arguments(args: argparse.Namespace) -> None:
    arguments = {
        key: value
        for key, value in sorted(vars(args).items())
        if key != "handler" and not callable(value)
    }
    logger.info(f"Resolved arguments:\n{yaml.safe_dump(arguments, sort_keys=True)}")


def _autoencoder(
    path: Optional[str], manifest: Optional[ExperimentManifest] = None
) -> ToyVAE:
    """
    The frozen autoencoder given on the command line, else the manifest's checkpoint,
    else the one trained into the manifest's output directory.
    """
    expected = None
    if manifest is not None:
        expected = construct_autoencoder_config(manifest)
        if path is None:
            path = manifest.autoencoder.checkpoint or os.path.join(
                manifest.output_dir, "checkpoints", AUTOENCODER_CHECKPOINT
            )
    if path is None:
        raise ArtifactMismatchError("No frozen autoencoder checkpoint given (--autoencoder)")
    return load_frozen_autoencoder(path, expected=expected)


def _at_rate(audio: AudioBuffer, sample_rate_hz: int) -> AudioBuffer:
    if audio.sample_rate_hz == sample_rate_hz:
        return audio
    logger.info(f"Resampling input from {audio.sample_rate_hz} Hz to {sample_rate_hz} Hz.")
    return resample_sinc(audio, sample_rate_hz)


def cmd_train_vae(args: argparse.Namespace) -> None:
    manifest = _manifest(args)
    config = construct_autoencoder_config(manifest)
    train_corpus, _ = prepare_corpus(manifest, config.sample_rate_hz)
    model, losses = train_toy_vae(
        config=config,
        corpus=train_corpus.clips,
        steps=manifest.autoencoder.training_steps,
        seed=manifest.seed,
    )
    path = args.output or os.path.join(
        output_directories(manifest.output_dir)["checkpoints"], AUTOENCODER_CHECKPOINT
    )
    save_autoencoder(model, path, losses=losses)
    print(path)


def cmd_encode(args: argparse.Namespace) -> None:
    _log_arguments(args)
    frozen_ae = _autoencoder(args.autoencoder)
    audio = _at_rate(read_wav(args.input), frozen_ae.spec.sample_rate_hz)
    latent = frozen_ae.encode_stereo(audio) if audio.channels == 2 else frozen_ae.encode(audio)
    write_latent_file(args.output, latent)
    logger.info(f"Encoded {args.input} into {tuple(latent.data.shape)} latent at {args.output}.")


def cmd_decode(args: argparse.Namespace) -> None:
    _log_arguments(args)
    frozen_ae = _autoencoder(args.autoencoder)
    latent = read_latent_file(args.input)
    if isinstance(latent, StackedLatent):
        audio = frozen_ae.decode_stereo(latent)
    else:
        audio = frozen_ae.decode(latent)
    write_wav(args.output, audio, subtype=args.subtype)
    logger.info(f"Decoded {args.input} into {audio.length} samples at {args.output}.")


def _cmd_train(args: argparse.Namespace, task: str) -> None:
    manifest = _manifest(args)
    if manifest.task != task:
        raise ConfigError("task", f"train-{task} needs a {task} config, got {manifest.task!r}")
    frozen_ae = _autoencoder(args.autoencoder, manifest)
    train_corpus, _ = prepare_corpus(manifest, frozen_ae.spec.sample_rate_hz)
    checkpoints_path = output_directories(manifest.output_dir)["checkpoints"]
    if task == "bwe":
        _, path = train_bwe_model(
            manifest, frozen_ae, train_corpus, checkpoints_path, resume_path=args.resume
        )
    else:
        _, path = train_m2s_model(
            manifest, frozen_ae, train_corpus, checkpoints_path, resume_path=args.resume
        )
    print(path)


def cmd_train_bwe(args: argparse.Namespace) -> None:
    _cmd_train(args, "bwe")


def cmd_train_m2s(args: argparse.Namespace) -> None:
    _cmd_train(args, "m2s")


def _infer_bwe(args, frozen_ae: ToyVAE, models) -> None:
    source = load_input(args.input)
    if isinstance(source, AudioBuffer):
        if source.channels != 1:
            raise DataError("Bandwidth extension takes mono input")
        source = _at_rate(source, frozen_ae.spec.sample_rate_hz)
        length = source.length
        z_in = frozen_ae.encode(source)
    elif isinstance(source, LatentSequence):
        logger.info("Latent input, skipping the encoder.")
        length, z_in = None, source
    else:
        raise DataError("Bandwidth extension takes a single latent sequence")
    z_out = models.predictor.predict(z_in)
    out = frozen_ae.decode(z_out)
    if length is not None:
        out = trim_to(out, length)
    write_wav(args.output, out, subtype=args.subtype)
    if args.latent_output:
        write_latent_file(args.latent_output, z_out)


def _infer_m2s(args, frozen_ae: ToyVAE, models) -> None:
    source = load_input(args.input)
    if isinstance(source, AudioBuffer):
        if source.channels == 2:
            source = downmix_to_mono(source)
        source = _at_rate(source, frozen_ae.spec.sample_rate_hz)
        length = source.length
        z_in = frozen_ae.encode(source)
    elif isinstance(source, LatentSequence):
        logger.info("Latent input, skipping the encoder.")
        length, z_in = None, source
    else:
        raise DataError("Mono-to-stereo takes a single latent sequence")
    condition = args.condition
    if condition == ConditionSchema.file:
        if args.condition_path is None:
            raise ConfigError("--condition-path", "required with --condition file")
        c = transfer_condition(
            models.encoder, load_condition_reference(args.condition_path, frozen_ae)
        )
    else:
        if condition == ConditionSchema.seed and args.condition_seed is None:
            raise ConfigError("--condition-seed", "required with --condition seed")
        seed = args.condition_seed if condition == ConditionSchema.seed else args.seed
        c = sample_prior(models.predictor.spec.condition_dim, generator=make_generator(seed))
    logger.info(f"Using {condition} {describe_condition(c)}.")
    z_out = models.predictor.predict(z_in, c)
    out = frozen_ae.decode_stereo(z_out)
    if length is not None:
        out = trim_to(out, length)
    write_wav(args.output, out, subtype=args.subtype)
    if args.latent_output:
        write_latent_file(args.latent_output, z_out)


def cmd_infer(args: argparse.Namespace) -> None:
    _log_arguments(args)
    set_seed(args.seed)
    frozen_ae = _autoencoder(args.autoencoder)
    models = load_models(args.checkpoint, task=args.task)
    if models.predictor.spec.latent_channels_in != frozen_ae.spec.latent_channels:
        raise ArtifactMismatchError(
            f"Model takes {models.predictor.spec.latent_channels_in} latent channels, "
            f"autoencoder has {frozen_ae.spec.latent_channels}"
        )
    if args.task == "bwe":
        _infer_bwe(args, frozen_ae, models)
    else:
        _infer_m2s(args, frozen_ae, models)
    logger.info(f"Wrote {args.task} output to {args.output}.")


def _wav_directory(directory: str) -> List[str]:
    if not os.path.isdir(directory):
        raise DataError(f"Directory {directory} does not exist")
    names = sorted(f for f in os.listdir(directory) if f.lower().endswith(".wav"))
    if not names:
        raise EmptyInputError(f"No .wav files in {directory}")
    return names


def cmd_eval(args: argparse.Namespace) -> None:
    manifest = _manifest(args)
    names = _wav_directory(args.reference_dir)
    candidate_names = _wav_directory(args.candidate_dir)
    if names != candidate_names:
        raise DataError(
            f"{args.reference_dir} and {args.candidate_dir} do not hold the same file names"
        )
    stft_config, mel_config = construct_stft_config(manifest), construct_mel_config(manifest)
    rows = []
    for name in names:
        reference = read_wav(os.path.join(args.reference_dir, name))
        candidate = read_wav(os.path.join(args.candidate_dir, name))
        if candidate.sample_rate_hz != reference.sample_rate_hz:
            raise DataError(f"{name}: sample rates differ")
        candidate = trim_to(candidate, reference.length)
        if manifest.task == "bwe":
            split_cfg = BandSplitConfig.for_low_rate(reference.sample_rate_hz // BWE_FACTOR)
            rows.append(banded_metrics(reference, candidate, split_cfg, stft_config, mel_config))
        else:
            rows.append(stereo_metrics(reference, candidate, stft_config, mel_config))
    report = EvalReport(
        task=manifest.task,
        rows=[EvalRow(label=args.label, metrics=mean_metrics(rows))],
        provenance={"reference_dir": args.reference_dir, "candidate_dir": args.candidate_dir},
    )
    emit_report(report, os.path.join(output_directories(manifest.output_dir)["reports"], "eval"))
    print(format_table(report).to_string())


def cmd_flops(args: argparse.Namespace) -> None:
    _log_arguments(args)
    presets = [args.preset] if args.preset else ["small", "medium", "stereo"]
    for preset in presets:
        spec = FLOPS_PRESETS[preset](args.latent_channels)
        model = LatentPredictor(spec)
        modules = [model]
        if spec.conditioned:
            modules.append(
                ConditioningEncoder(
                    ConditioningEncoderSpec.for_latent(
                        latent_channels=spec.latent_channels_out, output_dim=spec.condition_dim
                    )
                )
            )
        gflops = count_flops(model, args.seconds, args.frame_rate) / 1e9
        print(
            f"{preset}: params={count_params(*modules)} "
            f"gflops={gflops:.3f} per {args.seconds:g} s "
            f"({gflops / args.seconds:.3f} per second of audio)"
        )


def cmd_sweep(args: argparse.Namespace) -> None:
    manifest = _manifest(args)
    frozen_ae = _autoencoder(args.autoencoder, manifest)
    models = load_models(args.checkpoint, task="m2s")
    _, test_corpus = prepare_corpus(manifest, frozen_ae.spec.sample_rate_hz)
    sweep = interpolation_sweep(
        f_theta=models.predictor,
        g_phi=models.encoder,
        frozen_ae=frozen_ae,
        corpus=test_corpus.clips,
        lambdas=manifest.evaluation.lambdas,
        seed=manifest.seed,
    )
    write_sweep(
        sweep, output_directories(manifest.output_dir)["sweeps"], plot=manifest.evaluation.plot
    )
    print(yaml.safe_dump(sweep.summary(), sort_keys=False))


def cmd_run(args: argparse.Namespace) -> None:
    manifest = _manifest(args)
    report = run_bwe_experiment(manifest) if manifest.task == "bwe" else run_m2s_experiment(manifest)
    print(format_table(report).to_string())


def cmd_manifest(args: argparse.Namespace) -> None:
    if not os.path.exists(args.checkpoint):
        raise ArtifactMismatchError(f"Checkpoint {args.checkpoint} does not exist")
    print(checkpoint_manifest(args.checkpoint))


def build_parser() -> argparse.ArgumentParser:
    logging_parent = argparse.ArgumentParser(add_help=False)
    logging_parent.add_argument(
        "--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"]
    )
    config_parent = argparse.ArgumentParser(add_help=False)
    config_parent.add_argument("--config", type=str, default=None, help="Path to a YAML config.")
    config_parent.add_argument(
        "--preset", type=str, default=None, help="Name of a shipped preset, e.g. desk-bwe."
    )
    config_parent.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Dotted config override, repeatable.",
    )
    config_parent.add_argument("--seed", type=int, default=None)
    config_parent.add_argument("--output-dir", type=str, default=None)

    parser = argparse.ArgumentParser(
        prog="re-encoder",
        description="Audio processing in the latent space of a frozen autoencoder.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    train_vae = subparsers.add_parser(
        "train-vae", parents=[logging_parent, config_parent], help="Train the toy autoencoder."
    )
    train_vae.add_argument("--output", type=str, default=None)
    train_vae.set_defaults(handler=cmd_train_vae)

    for name, handler, help_text in (
        ("encode", cmd_encode, "Encode a WAV file into a latent file."),
        ("decode", cmd_decode, "Decode a latent file into a WAV file."),
    ):
        command = subparsers.add_parser(name, parents=[logging_parent], help=help_text)
        command.add_argument("--autoencoder", type=str, required=True)
        command.add_argument("--input", type=str, required=True)
        command.add_argument("--output", type=str, required=True)
        command.set_defaults(handler=handler)
        if name == "decode":
            command.add_argument("--subtype", choices=WAV_SUBTYPES, default="FLOAT")

    for name, handler in (("train-bwe", cmd_train_bwe), ("train-m2s", cmd_train_m2s)):
        command = subparsers.add_parser(
            name, parents=[logging_parent, config_parent], help=f"Train the {name[6:]} model."
        )
        command.add_argument("--autoencoder", type=str, default=None)
        command.add_argument("--resume", type=str, default=None)
        command.set_defaults(handler=handler)

    infer = subparsers.add_parser(
        "infer", parents=[logging_parent], help="Run a trained model on one input."
    )
    infer.add_argument("--task", choices=["bwe", "m2s"], required=True)
    infer.add_argument("--checkpoint", type=str, required=True)
    infer.add_argument("--autoencoder", type=str, required=True)
    infer.add_argument("--input", type=str, required=True)
    infer.add_argument("--output", type=str, required=True)
    infer.add_argument("--latent-output", type=str, default=None)
    infer.add_argument(
        "--condition", choices=[c.value for c in ConditionSchema], default="prior"
    )
    infer.add_argument("--condition-path", type=str, default=None)
    infer.add_argument("--condition-seed", type=int, default=None)
    infer.add_argument("--seed", type=int, default=0)
    infer.add_argument("--subtype", choices=WAV_SUBTYPES, default="FLOAT")
    infer.set_defaults(handler=cmd_infer)

    evaluate = subparsers.add_parser(
        "eval", parents=[logging_parent, config_parent], help="Compare two WAV directories."
    )
    evaluate.add_argument("--reference-dir", type=str, required=True)
    evaluate.add_argument("--candidate-dir", type=str, required=True)
    evaluate.add_argument("--label", type=str, default="candidate")
    evaluate.set_defaults(handler=cmd_eval)

    flops = subparsers.add_parser(
        "flops", parents=[logging_parent], help="Report parameters and GFLOPs per preset."
    )
    flops.add_argument("--preset", choices=sorted(FLOPS_PRESETS), default=None)
    flops.add_argument("--seconds", type=float, default=1.0)
    flops.add_argument("--frame-rate", type=float, default=PAPER_FRAME_RATE_HZ)
    flops.add_argument("--latent-channels", type=int, default=64)
    flops.set_defaults(handler=cmd_flops)

    sweep = subparsers.add_parser(
        "sweep", parents=[logging_parent, config_parent], help="Condition interpolation sweep."
    )
    sweep.add_argument("--checkpoint", type=str, required=True)
    sweep.add_argument("--autoencoder", type=str, default=None)
    sweep.set_defaults(handler=cmd_sweep)

    run = subparsers.add_parser(
        "run", parents=[logging_parent, config_parent], help="Run a whole experiment."
    )
    run.set_defaults(handler=cmd_run)

    manifest = subparsers.add_parser(
        "manifest", parents=[logging_parent], help="Print a checkpoint's contents."
    )
    manifest.add_argument("--checkpoint", type=str, required=True)
    manifest.set_defaults(handler=cmd_manifest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return int(error.code or 0)
    configure_logging(getattr(logging, args.log_level))
    try:
        args.handler(args)
    except Exception as error:
        logger.debug("Command failed.", exc_info=True)
        print(f"error: {type(error).__name__}: {error}", file=sys.stderr)
        return exit_code(error)
    return 0


if __name__ == "__main__":
    sys.exit(main())
