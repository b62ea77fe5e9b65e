import dataclasses
import logging
import os
from typing import Dict, List, Optional, Tuple

import pandas as pd
import yaml

from experiments.config import manifest_hash
from experiments.constructors import (
    construct_autoencoder_config,
    construct_discriminator_spec,
    construct_encoder_spec,
    construct_mel_config,
    construct_model_spec,
    construct_pairs,
    construct_stft_config,
    construct_training_config,
)
from experiments.data import Corpus, chunk_corpus, load_corpus, split_corpus
from experiments.loaders import load_frozen_autoencoder
from experiments.plotters import plot_losses, plot_sweep
from experiments.schemas import ExperimentManifest
from experiments.utils import file_hash, output_directories
from src.autoencoders.toy_vae import ToyVAE, train_toy_vae
from src.evaluation.comparisons import banded_metrics, mean_metrics, stereo_metrics, trim_to
from src.evaluation.reports import EvalReport, EvalRow, emit_report
from src.evaluation.sweep import interpolation_sweep
from src.exceptions import DataError
from src.latents.audio_io import read_wav
from src.networks.condition_encoder import transfer_condition
from src.networks.counting import count_flops
from src.samplers import sample_prior
from src.signal_ops.filters import BandSplitConfig
from src.signal_ops.resampling import degrade_bandwidth
from src.signal_ops.stereo import downmix_to_mono
from src.training.base import LatentTrainer
from src.training.bwe import BandwidthExtensionTrainer
from src.training.checkpoints import (
    load_checkpoint,
    restore_checkpoint,
    save_autoencoder,
    save_checkpoint,
)
from src.training.m2s import MonoToStereoTrainer
from src.utils import make_generator, parameter_hash

logger = logging.getLogger(__name__)

AUTOENCODER_CHECKPOINT = "autoencoder.reck"
BWE_FACTOR = 2


def prepare_corpus(
    manifest: ExperimentManifest, sample_rate_hz: int
) -> Tuple[Corpus, Corpus]:
    corpus = load_corpus(manifest.corpus, sample_rate_hz=sample_rate_hz, seed=manifest.seed)
    train_corpus, test_corpus = split_corpus(
        corpus, test_fraction=manifest.corpus.test_fraction, seed=manifest.seed
    )
    logger.info(
        f"Split {corpus.name} into {len(train_corpus)} training and {len(test_corpus)} test clips."
    )
    return train_corpus, test_corpus


def prepare_autoencoder(
    manifest: ExperimentManifest,
    train_corpus: Corpus,
    checkpoints_path: str,
) -> Tuple[ToyVAE, str]:
    """
    Loads the frozen autoencoder named in the manifest, or one trained earlier in the
    same output directory, otherwise trains the toy VAE and saves it.

    :return: frozen autoencoder and its checkpoint path
    """
    expected = construct_autoencoder_config(manifest)
    if manifest.autoencoder.checkpoint is not None:
        path = manifest.autoencoder.checkpoint
        return load_frozen_autoencoder(path, expected=expected), path
    path = os.path.join(checkpoints_path, AUTOENCODER_CHECKPOINT)
    if os.path.exists(path):
        return load_frozen_autoencoder(path, expected=expected), path
    model, losses = train_toy_vae(
        config=expected,
        corpus=train_corpus.clips,
        steps=manifest.autoencoder.training_steps,
        seed=manifest.seed,
    )
    save_autoencoder(model, path, losses=losses)
    if manifest.evaluation.plot:
        plot_losses(
            history=_losses_frame(losses),
            save_path=os.path.join(checkpoints_path, "autoencoder-losses.png"),
            title="Toy VAE",
        )
    return model, path


def _losses_frame(losses: List[float]) -> pd.DataFrame:
    return pd.DataFrame({"step": range(1, len(losses) + 1), "rec": losses})


def _fit_or_resume(
    trainer: LatentTrainer,
    checkpoints_path: str,
    name: str,
    plot: bool,
    resume_path: Optional[str] = None,
) -> str:
    """
    Continues from resume_path, or from an earlier final checkpoint with the same name,
    then trains up to total_steps and writes the final checkpoint, loss history and plot.
    """
    path = os.path.join(checkpoints_path, f"{name}.reck")
    if resume_path is None and os.path.exists(path):
        resume_path = path
    if resume_path is not None:
        restore_checkpoint(trainer, load_checkpoint(resume_path))
        logger.info(f"Resumed {name} from {resume_path=} at step {trainer.step}.")
    if trainer.step < trainer.config.total_steps:
        trainer.fit(checkpoint_dir=os.path.join(checkpoints_path, name))
        save_checkpoint(trainer, path)
    history = trainer.history_frame()
    history.to_csv(os.path.join(checkpoints_path, f"{name}-history.csv"), index=False)
    if plot and len(history):
        plot_losses(
            history=history,
            save_path=os.path.join(checkpoints_path, f"{name}-losses.png"),
            title=name,
        )
    trainer.eval()
    return path


def train_bwe_model(
    manifest: ExperimentManifest,
    frozen_ae: ToyVAE,
    train_corpus: Corpus,
    checkpoints_path: str,
    use_discriminator: Optional[bool] = None,
    resume_path: Optional[str] = None,
) -> Tuple[BandwidthExtensionTrainer, str]:
    """
    :param use_discriminator: overrides the training config, False gives the L1-only ablation
    """
    config = construct_training_config(manifest)
    if use_discriminator is not None:
        config = dataclasses.replace(config, use_discriminator=use_discriminator)
    chunks = chunk_corpus(train_corpus.clips, config.chunk_seconds)
    trainer = BandwidthExtensionTrainer(
        config=config,
        model_spec=construct_model_spec(manifest, frozen_ae.spec.latent_channels),
        pairs=construct_pairs("bwe", frozen_ae, chunks),
        discriminator_spec=construct_discriminator_spec(manifest),
    )
    name = "bwe-l1-disc" if config.use_discriminator else "bwe-l1"
    path = _fit_or_resume(
        trainer, checkpoints_path, name, manifest.evaluation.plot, resume_path=resume_path
    )
    return trainer, path


def train_m2s_model(
    manifest: ExperimentManifest,
    frozen_ae: ToyVAE,
    train_corpus: Corpus,
    checkpoints_path: str,
    resume_path: Optional[str] = None,
) -> Tuple[MonoToStereoTrainer, str]:
    config = construct_training_config(manifest)
    chunks = chunk_corpus(train_corpus.clips, config.chunk_seconds)
    model_spec = construct_model_spec(manifest, frozen_ae.spec.latent_channels)
    trainer = MonoToStereoTrainer(
        config=config,
        model_spec=model_spec,
        pairs=construct_pairs("m2s", frozen_ae, chunks),
        encoder_spec=construct_encoder_spec(manifest, model_spec),
    )
    path = _fit_or_resume(
        trainer, checkpoints_path, "m2s", manifest.evaluation.plot, resume_path=resume_path
    )
    return trainer, path


def _gflops_per_second(trainer: LatentTrainer, frame_rate_hz: float) -> float:
    return count_flops(trainer.predictor, 1.0, frame_rate_hz) / 1e9


def _external_clips(row_label: str, directory: str, test_corpus: Corpus) -> Optional[list]:
    """
    Externally rendered outputs in file-name order, or None when the row has to be skipped.
    """
    if not os.path.isdir(directory):
        logger.warning(f"Skipping row {row_label!r}: {directory=} does not exist.")
        return None
    names = sorted(f for f in os.listdir(directory) if f.lower().endswith(".wav"))
    if len(names) != len(test_corpus):
        logger.warning(
            f"Skipping row {row_label!r}: {len(names)} files for {len(test_corpus)} test clips."
        )
        return None
    clips = [read_wav(os.path.join(directory, name)) for name in names]
    for name, clip, reference in zip(names, clips, test_corpus.clips):
        if clip.sample_rate_hz != reference.sample_rate_hz or clip.length < reference.length:
            raise DataError(
                f"Row {row_label!r}: {name} does not cover its reference at {reference.sample_rate_hz} Hz"
            )
    return [trim_to(clip, reference.length) for clip, reference in zip(clips, test_corpus.clips)]


def _conventions(manifest: ExperimentManifest, split_cfg: Optional[BandSplitConfig]) -> Dict:
    conventions = {
        "stft_resolutions": [list(r) for r in construct_stft_config(manifest).resolutions],
        "mel": dataclasses.asdict(construct_mel_config(manifest)),
        "log": "natural",
        "channels": "distances averaged over channels treated as a batch",
        "aggregate": "mean over held-out clips in name order",
    }
    if split_cfg is not None:
        conventions["band_split"] = dataclasses.asdict(split_cfg)
    return conventions


def _provenance(
    manifest: ExperimentManifest,
    artifacts: Dict[str, str],
    modules: Dict[str, str],
    conventions: Dict,
    skipped: List[str],
) -> Dict:
    return {
        "experiment_id": manifest.experiment_id,
        "manifest_hash": manifest_hash(manifest),
        "seed": manifest.seed,
        "checkpoint_hashes": {name: file_hash(path) for name, path in artifacts.items()},
        "parameter_hashes": modules,
        "conventions": conventions,
        "skipped_rows": skipped,
    }


def run_bwe_experiment(manifest: ExperimentManifest) -> EvalReport:
    """
    Transmission-scenario comparison for bandwidth extension. Rows, in order:
    the autoencoder reconstruction bound, the unprocessed band-limited input,
    the latent module trained with L1 only and with L1 plus the discriminator,
    then any externally rendered rows.
    """
    directories = output_directories(manifest.output_dir)
    ae_config = construct_autoencoder_config(manifest)
    train_corpus, test_corpus = prepare_corpus(manifest, ae_config.sample_rate_hz)
    frozen_ae, ae_path = prepare_autoencoder(manifest, train_corpus, directories["checkpoints"])
    l1_trainer, l1_path = train_bwe_model(
        manifest, frozen_ae, train_corpus, directories["checkpoints"], use_discriminator=False
    )
    gan_trainer, gan_path = train_bwe_model(
        manifest, frozen_ae, train_corpus, directories["checkpoints"], use_discriminator=True
    )

    split_cfg = BandSplitConfig.for_low_rate(frozen_ae.spec.sample_rate_hz // BWE_FACTOR)
    stft_config, mel_config = construct_stft_config(manifest), construct_mel_config(manifest)
    candidates: Dict[str, list] = {
        "VAE rec.": [],
        "Unprocessed input": [],
        "Ours (L1)": [],
        "Ours (L1 + Disc)": [],
    }
    for x in test_corpus.clips:
        z_in = frozen_ae.encode(degrade_bandwidth(x, factor=BWE_FACTOR))
        candidates["VAE rec."].append(trim_to(frozen_ae.decode(frozen_ae.encode(x)), x.length))
        candidates["Unprocessed input"].append(degrade_bandwidth(x, factor=BWE_FACTOR))
        for label, trainer in (("Ours (L1)", l1_trainer), ("Ours (L1 + Disc)", gan_trainer)):
            out = frozen_ae.decode(trainer.predictor.predict(z_in))
            candidates[label].append(trim_to(out, x.length))
    skipped = []
    for external in manifest.external_rows:
        clips = _external_clips(external.label, external.directory, test_corpus)
        if clips is None:
            skipped.append(external.label)
        else:
            candidates[external.label] = clips

    gflops = {
        "Ours (L1)": _gflops_per_second(l1_trainer, frozen_ae.spec.frame_rate_hz),
        "Ours (L1 + Disc)": _gflops_per_second(gan_trainer, frozen_ae.spec.frame_rate_hz),
    }
    rows = [
        EvalRow(
            label=label,
            metrics=mean_metrics(
                [
                    banded_metrics(x, y, split_cfg, stft_config, mel_config)
                    for x, y in zip(test_corpus.clips, outputs)
                ]
            ),
            gflops=gflops.get(label),
            note="added degradation floor" if label == "Unprocessed input" else None,
        )
        for label, outputs in candidates.items()
    ]
    report = EvalReport(
        task="bwe",
        rows=rows,
        provenance=_provenance(
            manifest,
            artifacts={"autoencoder": ae_path, "bwe-l1": l1_path, "bwe-l1-disc": gan_path},
            modules={
                "autoencoder": parameter_hash(frozen_ae),
                "bwe-l1": parameter_hash(l1_trainer.predictor),
                "bwe-l1-disc": parameter_hash(gan_trainer.predictor),
            },
            conventions=_conventions(manifest, split_cfg),
            skipped=skipped,
        ),
    )
    emit_report(report, os.path.join(directories["reports"], "bwe"))
    return report


def run_m2s_experiment(manifest: ExperimentManifest) -> EvalReport:
    """
    Mono-to-stereo comparison. Rows, in order: the autoencoder stereo reconstruction
    bound, the latent module with a prior-sampled condition and with the oracle condition
    taken from the ground-truth stereo, then any externally rendered rows.
    The interpolation sweep is attached to the report and written under sweeps/.
    """
    if not manifest.corpus.stereo:
        raise DataError("Mono-to-stereo experiments need a stereo corpus (corpus.stereo)")
    directories = output_directories(manifest.output_dir)
    ae_config = construct_autoencoder_config(manifest)
    train_corpus, test_corpus = prepare_corpus(manifest, ae_config.sample_rate_hz)
    frozen_ae, ae_path = prepare_autoencoder(manifest, train_corpus, directories["checkpoints"])
    trainer, m2s_path = train_m2s_model(
        manifest, frozen_ae, train_corpus, directories["checkpoints"]
    )

    stft_config, mel_config = construct_stft_config(manifest), construct_mel_config(manifest)
    generator = make_generator(manifest.seed)
    candidates: Dict[str, list] = {"VAE rec.": [], "Rand c": [], "Oracle c": []}
    for x in test_corpus.clips:
        z_tgt = frozen_ae.encode_stereo(x)
        z_in = frozen_ae.encode(downmix_to_mono(x))
        candidates["VAE rec."].append(trim_to(frozen_ae.decode_stereo(z_tgt), x.length))
        prior = sample_prior(trainer.model_spec.condition_dim, generator=generator)
        oracle = transfer_condition(trainer.encoder, z_tgt)
        for label, c in (("Rand c", prior), ("Oracle c", oracle)):
            out = frozen_ae.decode_stereo(trainer.predictor.predict(z_in, c))
            candidates[label].append(trim_to(out, x.length))
    skipped = []
    for external in manifest.external_rows:
        clips = _external_clips(external.label, external.directory, test_corpus)
        if clips is None:
            skipped.append(external.label)
        else:
            candidates[external.label] = clips

    gflops = _gflops_per_second(trainer, frozen_ae.spec.frame_rate_hz)
    rows = [
        EvalRow(
            label=label,
            metrics=mean_metrics(
                [
                    stereo_metrics(x, y, stft_config, mel_config)
                    for x, y in zip(test_corpus.clips, outputs)
                ]
            ),
            gflops=gflops if label in ("Rand c", "Oracle c") else None,
        )
        for label, outputs in candidates.items()
    ]

    sweep = interpolation_sweep(
        f_theta=trainer.predictor,
        g_phi=trainer.encoder,
        frozen_ae=frozen_ae,
        corpus=test_corpus.clips,
        lambdas=manifest.evaluation.lambdas,
        seed=manifest.seed,
    )
    write_sweep(sweep, directories["sweeps"], plot=manifest.evaluation.plot)

    report = EvalReport(
        task="m2s",
        rows=rows,
        provenance=_provenance(
            manifest,
            artifacts={"autoencoder": ae_path, "m2s": m2s_path},
            modules={
                "autoencoder": parameter_hash(frozen_ae),
                "m2s.predictor": parameter_hash(trainer.predictor),
                "m2s.encoder": parameter_hash(trainer.encoder),
            },
            conventions=_conventions(manifest, None),
            skipped=skipped,
        ),
        sweep=sweep.summary(),
    )
    emit_report(report, os.path.join(directories["reports"], "m2s"))
    return report


def write_sweep(sweep, directory: str, plot: bool = True) -> Dict[str, str]:
    """
    Writes the scatter CSV, the correlation summary and optionally the scatter plot.
    """
    os.makedirs(directory, exist_ok=True)
    paths = {
        "scatter": os.path.join(directory, "sweep.csv"),
        "summary": os.path.join(directory, "summary.yaml"),
    }
    sweep.frame.to_csv(paths["scatter"], index=False)
    with open(paths["summary"], "w") as file:
        yaml.safe_dump(sweep.summary(), file, sort_keys=False)
    if plot:
        paths["plot"] = os.path.join(directory, "sweep.png")
        plot_sweep(sweep, paths["plot"], title="Channel log-energy ratio")
    logger.info(f"Wrote interpolation sweep to {directory=}.")
    return paths
