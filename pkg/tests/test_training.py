import dataclasses
import os

import pytest
import torch

from mockers.autoencoder import MockAutoencoder
from src.autoencoders import ToyVAE, ToyVAEConfig
from src.exceptions import ArtifactMismatchError, ConfigError, DimensionError, EmptyInputError
from src.latents.types import AudioBuffer, LatentSequence
from src.networks import ConditioningEncoderSpec, DiscriminatorSpec, ModelSpec
from src.objectives import LossWeights
from src.training import (
    BandwidthExtensionTrainer,
    MonoToStereoTrainer,
    TrainingConfig,
    TrainingPair,
    checkpoint_manifest,
    collate,
    load_autoencoder,
    load_checkpoint,
    load_trained_models,
    lr_at,
    make_bwe_pair,
    make_m2s_pair,
    restore_checkpoint,
    save_autoencoder,
    save_checkpoint,
)

BWE_MODEL = ModelSpec.tiny(latent_channels=16)
M2S_MODEL = ModelSpec.tiny(latent_channels=16, conditioned=True, condition_dim=8)
M2S_ENCODER = ConditioningEncoderSpec.for_latent(16, 8, hidden_dim=32, num_blocks=1)


def _noise(channels: int, length: int = 800, seed: int = 0) -> AudioBuffer:
    return AudioBuffer(
        samples=0.3 * torch.randn(channels, length, generator=torch.Generator().manual_seed(seed)),
        sample_rate_hz=8000,
    )


@pytest.fixture
def autoencoder() -> MockAutoencoder:
    return MockAutoencoder()


@pytest.fixture
def bwe_pairs(autoencoder):
    return [make_bwe_pair(autoencoder, _noise(1, seed=i), source=f"clip-{i}") for i in range(6)]


@pytest.fixture
def m2s_pairs(autoencoder):
    return [make_m2s_pair(autoencoder, _noise(2, seed=i)) for i in range(6)]


def _config(task: str, **kwargs) -> TrainingConfig:
    return dataclasses.replace(
        TrainingConfig.desk(task),
        batch_size=2,
        total_steps=4,
        warmup_main=2,
        warmup_disc=2,
        log_every=0,
        **kwargs,
    )


def _bwe_trainer(pairs, **kwargs) -> BandwidthExtensionTrainer:
    return BandwidthExtensionTrainer(
        config=_config("bwe", **kwargs),
        model_spec=BWE_MODEL,
        pairs=pairs,
        discriminator_spec=DiscriminatorSpec.tiny(),
    )


def _m2s_trainer(pairs, **kwargs) -> MonoToStereoTrainer:
    return MonoToStereoTrainer(
        config=_config("m2s", **kwargs),
        model_spec=M2S_MODEL,
        pairs=pairs,
        encoder_spec=M2S_ENCODER,
    )


def _assert_same_parameters(a: torch.nn.Module, b: torch.nn.Module):
    for (name, x), (_, y) in zip(a.state_dict().items(), b.state_dict().items()):
        assert torch.allclose(x, y, atol=1e-7), name


@pytest.mark.parametrize(
    "step,base_lr,warmup_steps,expected",
    [
        [0, 1e-3, 10, 0.0],
        [5, 1e-3, 10, 5e-4],
        [10, 1e-3, 10, 1e-3],
        [1000, 1e-3, 10, 1e-3],
        [0, 1e-3, 0, 1e-3],
    ],
)
def test_lr_at(step, base_lr, warmup_steps, expected):
    assert lr_at(step, base_lr, warmup_steps) == pytest.approx(expected)


def test_lr_at_rejects_negative_step():
    with pytest.raises(ValueError):
        lr_at(-1, 1e-3, 10)


def test_bwe_pair_shapes(autoencoder):
    pair = make_bwe_pair(autoencoder, _noise(1))
    assert pair.z_in.data.shape == pair.z_tgt.data.shape == (16, 50)
    assert not pair.stacked
    assert not torch.equal(pair.z_in.data, pair.z_tgt.data)


def test_m2s_pair_shapes(autoencoder):
    pair = make_m2s_pair(autoencoder, _noise(2))
    assert pair.z_in.data.shape == (16, 50)
    assert pair.z_tgt.data.shape == (2, 16, 50)
    assert pair.stacked


def test_pairs_reject_wrong_channel_count(autoencoder):
    with pytest.raises(DimensionError):
        make_bwe_pair(autoencoder, _noise(2))
    with pytest.raises(DimensionError):
        make_m2s_pair(autoencoder, _noise(1))


def test_pair_rejects_frame_mismatch():
    with pytest.raises(DimensionError):
        TrainingPair(
            z_in=LatentSequence(data=torch.zeros(4, 10), frame_rate_hz=10.0),
            z_tgt=LatentSequence(data=torch.zeros(4, 11), frame_rate_hz=10.0),
        )


def test_collate(bwe_pairs, autoencoder):
    z_in, z_tgt = collate(bwe_pairs[:3])
    assert z_in.shape == z_tgt.shape == (3, 16, 50)
    with pytest.raises(EmptyInputError):
        collate([])
    with pytest.raises(DimensionError):
        collate([bwe_pairs[0], make_bwe_pair(autoencoder, _noise(1, length=1600))])


def test_batches_depend_only_on_seed_and_step(bwe_pairs):
    first, second = _bwe_trainer(bwe_pairs), _bwe_trainer(bwe_pairs)
    assert [first.batch_indices(step) for step in range(5)] == [
        second.batch_indices(step) for step in range(5)
    ]
    assert second.batch_indices(4) == first.batch_indices(4)
    other = _bwe_trainer(bwe_pairs, seed=1)
    assert [other.batch_indices(step) for step in range(3)] != [
        first.batch_indices(step) for step in range(3)
    ]


def test_each_epoch_visits_every_pair_once(bwe_pairs):
    trainer = _bwe_trainer(bwe_pairs)
    epoch = sum((trainer.batch_indices(step) for step in range(3)), [])
    assert sorted(epoch) == list(range(len(bwe_pairs)))


def test_trainer_rejects_empty_pairs():
    with pytest.raises(EmptyInputError):
        _bwe_trainer([])


def test_bwe_trainer_rejects_conditioned_model(bwe_pairs):
    with pytest.raises(ValueError):
        BandwidthExtensionTrainer(_config("bwe"), M2S_MODEL, bwe_pairs)


@pytest.mark.parametrize(
    "model_spec,encoder_spec",
    [
        [BWE_MODEL, M2S_ENCODER],
        [M2S_MODEL, ConditioningEncoderSpec.for_latent(16, 4, hidden_dim=32)],
        [M2S_MODEL, ConditioningEncoderSpec.for_latent(8, 8, hidden_dim=32)],
    ],
)
def test_m2s_trainer_validation(m2s_pairs, model_spec, encoder_spec):
    with pytest.raises(ValueError):
        MonoToStereoTrainer(_config("m2s"), model_spec, m2s_pairs, encoder_spec)


def test_bwe_history(bwe_pairs):
    trainer = _bwe_trainer(bwe_pairs)
    history = trainer.fit(steps=3)
    assert trainer.step == 3
    assert list(history["step"]) == [1, 2, 3]
    assert {"rec", "adv", "fm", "disc", "total", "lr_main", "lr_disc"} <= set(history.columns)
    weights = trainer.config.weights
    for _, row in history.iterrows():
        expected = weights.w_rec * row["rec"] + weights.w_adv * row["adv"] + weights.w_fm * row["fm"]
        assert row["total"] == pytest.approx(expected, rel=1e-5)


def test_bwe_without_discriminator_logs_reconstruction_only(bwe_pairs):
    history = _bwe_trainer(bwe_pairs, use_discriminator=False).fit(steps=2)
    assert "disc" not in history.columns
    assert list(history["total"]) == pytest.approx(list(10.0 * history["rec"]), rel=1e-5)


def test_adversarial_start_step(bwe_pairs):
    history = _bwe_trainer(bwe_pairs, adversarial_start_step=2).fit(steps=3)
    assert history["disc"].isna().tolist() == [True, True, False]


def test_zero_adversarial_weights_match_reconstruction_only(bwe_pairs):
    silent = _bwe_trainer(
        bwe_pairs, weights=LossWeights(w_rec=10.0, w_adv=0.0, w_fm=0.0, w_kl=0.0)
    )
    plain = _bwe_trainer(bwe_pairs, use_discriminator=False)
    silent.fit(steps=3)
    plain.fit(steps=3)
    _assert_same_parameters(silent.predictor, plain.predictor)


def test_discriminator_update_leaves_predictor_gradients_untouched(bwe_pairs):
    trainer = _bwe_trainer(bwe_pairs)
    seen = []
    disc_step = trainer.disc_optimizer.step

    def recording_step(*args, **kwargs):
        seen.append([parameter.grad for parameter in trainer.predictor.parameters()])
        return disc_step(*args, **kwargs)

    trainer.disc_optimizer.step = recording_step
    trainer.train_step()
    assert len(seen) == 1
    assert all(grad is None for grad in seen[0])
    assert all(parameter.grad is not None for parameter in trainer.predictor.parameters())


def test_warmup_learning_rates_are_logged(bwe_pairs):
    history = _bwe_trainer(bwe_pairs).fit(steps=3)
    config = TrainingConfig.desk("bwe")
    assert list(history["lr_main"]) == pytest.approx([config.lr_main / 2, config.lr_main, config.lr_main])


def test_m2s_history(m2s_pairs):
    trainer = _m2s_trainer(m2s_pairs)
    history = trainer.fit()
    assert trainer.step == 4
    assert {"rec", "kl", "total"} <= set(history.columns)
    assert "adv" not in history.columns
    for _, row in history.iterrows():
        assert row["total"] == pytest.approx(10.0 * row["rec"] + 5e-4 * row["kl"], rel=1e-5)


@pytest.mark.parametrize("w_kl", [5e-4, 0.0])
def test_m2s_step_reaches_encoder_heads(m2s_pairs, w_kl):
    trainer = _m2s_trainer(m2s_pairs, weights=LossWeights(w_rec=10.0, w_adv=0.0, w_fm=0.0, w_kl=w_kl))
    with torch.no_grad():
        for block in trainer.predictor.blocks:
            block.norm.projection.weight.normal_()
    trainer.train_step()
    for head in (trainer.encoder.mu_head, trainer.encoder.log_sigma_head):
        assert head.weight.grad is not None
        assert float(head.weight.grad.abs().sum()) > 0.0


@pytest.mark.parametrize("make_trainer,pairs_fixture", [[_bwe_trainer, "bwe_pairs"], [_m2s_trainer, "m2s_pairs"]])
def test_resume_matches_unbroken_run(make_trainer, pairs_fixture, request, tmp_path):
    pairs = request.getfixturevalue(pairs_fixture)
    unbroken = make_trainer(pairs)
    unbroken.fit(steps=4)

    first_half = make_trainer(pairs)
    first_half.fit(steps=2)
    path = os.path.join(tmp_path, "half.reck")
    save_checkpoint(first_half, path)

    resumed = make_trainer(pairs)
    restore_checkpoint(resumed, load_checkpoint(path))
    assert resumed.step == 2
    resumed.fit()
    assert resumed.step == 4
    for name, module in unbroken.modules().items():
        _assert_same_parameters(module, resumed.modules()[name])
    assert [row["rec"] for row in resumed.history] == pytest.approx(
        [row["rec"] for row in unbroken.history], rel=1e-6
    )


def test_save_load_save_is_byte_identical(bwe_pairs, tmp_path):
    trainer = _bwe_trainer(bwe_pairs)
    trainer.fit(steps=2)
    first = os.path.join(tmp_path, "first.reck")
    second = os.path.join(tmp_path, "second.reck")
    save_checkpoint(trainer, first)
    restored = _bwe_trainer(bwe_pairs)
    restore_checkpoint(restored, load_checkpoint(first))
    save_checkpoint(restored, second)
    with open(first, "rb") as a, open(second, "rb") as b:
        assert a.read() == b.read()


def test_restore_rejects_other_task(bwe_pairs, m2s_pairs, tmp_path):
    trainer = _m2s_trainer(m2s_pairs)
    path = os.path.join(tmp_path, "m2s.reck")
    save_checkpoint(trainer, path)
    with pytest.raises(ArtifactMismatchError):
        restore_checkpoint(_bwe_trainer(bwe_pairs), load_checkpoint(path))
    with pytest.raises(ArtifactMismatchError):
        load_trained_models(path, kind="bwe")


def test_restore_rejects_other_architecture(bwe_pairs, tmp_path):
    path = os.path.join(tmp_path, "bwe.reck")
    save_checkpoint(_bwe_trainer(bwe_pairs), path)
    wider = BandwidthExtensionTrainer(
        config=_config("bwe"),
        model_spec=dataclasses.replace(BWE_MODEL, hidden_dim=32),
        pairs=bwe_pairs,
        discriminator_spec=DiscriminatorSpec.tiny(),
    )
    with pytest.raises(ArtifactMismatchError):
        restore_checkpoint(wider, load_checkpoint(path))


@pytest.mark.parametrize("damage", ["magic", "truncate", "append"])
def test_load_rejects_damaged_checkpoint(bwe_pairs, tmp_path, damage):
    path = os.path.join(tmp_path, "bwe.reck")
    save_checkpoint(_bwe_trainer(bwe_pairs), path)
    with open(path, "rb") as file:
        data = file.read()
    if damage == "magic":
        data = b"XXXX" + data[4:]
    elif damage == "truncate":
        data = data[:-10]
    else:
        data = data + b"\x00"
    with open(path, "wb") as file:
        file.write(data)
    with pytest.raises(ArtifactMismatchError):
        load_checkpoint(path)


def test_load_trained_models(m2s_pairs, tmp_path):
    trainer = _m2s_trainer(m2s_pairs)
    trainer.fit(steps=1)
    path = os.path.join(tmp_path, "m2s.reck")
    save_checkpoint(trainer, path)
    models = load_trained_models(path)
    assert models.kind == "m2s"
    assert models.step == 1
    assert not models.predictor.training
    trainer.eval()
    z = torch.randn(1, 16, 20)
    c = torch.randn(1, 8)
    with torch.no_grad():
        assert torch.equal(models.predictor(z, c), trainer.predictor(z, c))
        stacked = torch.randn(1, 2, 16, 20)
        assert torch.equal(models.encoder(stacked)[0], trainer.encoder(stacked)[0])


def test_periodic_checkpoints(bwe_pairs, tmp_path):
    trainer = _bwe_trainer(bwe_pairs, checkpoint_every=2)
    directory = os.path.join(tmp_path, "periodic")
    trainer.fit(checkpoint_dir=directory)
    assert sorted(os.listdir(directory)) == ["step-00000002.reck", "step-00000004.reck"]
    assert load_checkpoint(os.path.join(directory, "step-00000002.reck")).step == 2


def test_checkpoint_manifest(bwe_pairs, tmp_path):
    trainer = _bwe_trainer(bwe_pairs)
    trainer.fit(steps=2)
    path = os.path.join(tmp_path, "bwe.reck")
    save_checkpoint(trainer, path)
    manifest = checkpoint_manifest(path)
    assert "kind: bwe" in manifest
    assert "step: 2" in manifest
    assert "history: 2 rows" in manifest


def test_autoencoder_checkpoint_round_trip(tmp_path):
    model = ToyVAE(ToyVAEConfig.tiny())
    path = os.path.join(tmp_path, "autoencoder.reck")
    save_autoencoder(model, path, losses=[1.0, 0.5])
    loaded = load_autoencoder(path, expected=ToyVAEConfig.tiny())
    x = _noise(1, length=640)
    assert torch.equal(loaded.encode(x).data, model.freeze().encode(x).data)
    with pytest.raises(ArtifactMismatchError):
        load_autoencoder(path, expected=ToyVAEConfig.paper())


def test_autoencoder_loader_rejects_trainer_checkpoint(bwe_pairs, tmp_path):
    path = os.path.join(tmp_path, "bwe.reck")
    save_checkpoint(_bwe_trainer(bwe_pairs), path)
    with pytest.raises(ArtifactMismatchError):
        load_autoencoder(path)


@pytest.mark.parametrize(
    "task,batch_size,chunk_seconds,use_discriminator",
    [
        ["bwe", 256, 1.4, True],
        ["m2s", 256, 4.0, False],
    ],
)
def test_paper_recipe(task, batch_size, chunk_seconds, use_discriminator):
    config = TrainingConfig.paper(task)
    assert config.batch_size == batch_size
    assert config.chunk_seconds == chunk_seconds
    assert config.use_discriminator == use_discriminator
    assert config.total_steps == 250_000
    assert (config.lr_main, config.lr_disc) == (5e-4, 1e-4)
    assert (config.warmup_main, config.warmup_disc) == (1_000, 20_000)
    assert config.weights.w_rec == 10.0


def test_config_dict_round_trip():
    config = TrainingConfig.desk("m2s", seed=3)
    assert TrainingConfig.from_dict(config.to_dict()) == config
    assert TrainingConfig.from_dict(config.to_dict()).hash() == config.hash()
    assert TrainingConfig.desk("m2s", seed=4).hash() != config.hash()


@pytest.mark.parametrize(
    "config,key",
    [
        [{"learning_rate": 1e-3}, "learning_rate"],
        [{"weights": {"w_perceptual": 1.0}}, "weights.w_perceptual"],
        [{"task": "denoise"}, "task"],
        [{"batch_size": 0}, "batch_size"],
        [{"total_steps": 10, "warmup_main": 11}, "warmup_main"],
        [{"precision": "fp8"}, "precision"],
        [{"betas": [0.9, 1.0]}, "betas"],
        [{"grad_clip_norm": 0.0}, "grad_clip_norm"],
    ],
)
def test_config_errors_name_the_key(config, key):
    with pytest.raises(ConfigError) as error:
        TrainingConfig.from_dict(config)
    assert error.value.key == key


@pytest.mark.slow
def test_bwe_overfits_single_pair(autoencoder):
    pairs = [make_bwe_pair(autoencoder, _noise(1))]
    trainer = BandwidthExtensionTrainer(
        config=dataclasses.replace(
            TrainingConfig.desk("bwe"),
            batch_size=1,
            total_steps=300,
            warmup_main=10,
            warmup_disc=10,
            use_discriminator=False,
            log_every=0,
        ),
        model_spec=BWE_MODEL,
        pairs=pairs,
    )
    history = trainer.fit()
    assert history["rec"].iloc[-10:].mean() < 0.5 * history["rec"].iloc[:10].mean()


@pytest.mark.slow
def test_m2s_overfits_single_pair(autoencoder):
    pairs = [make_m2s_pair(autoencoder, _noise(2))]
    trainer = MonoToStereoTrainer(
        config=dataclasses.replace(
            TrainingConfig.desk("m2s"),
            batch_size=1,
            total_steps=300,
            warmup_main=10,
            warmup_disc=10,
            log_every=0,
        ),
        model_spec=M2S_MODEL,
        pairs=pairs,
        encoder_spec=M2S_ENCODER,
    )
    history = trainer.fit()
    assert history["rec"].iloc[-10:].mean() < 0.5 * history["rec"].iloc[:10].mean()
    assert history["kl"].notna().all()
