import math

import pytest
import torch

from src.exceptions import (
    DimensionError,
    EmptyInputError,
    NonFiniteError,
    SequenceTooShortError,
)
from src.latents.types import LatentSequence, StackedLatent
from src.networks import (
    AdaptiveLayerNorm,
    ConditioningEncoder,
    ConditioningEncoderSpec,
    ConvNeXtV2Block,
    DiscriminatorSpec,
    GlobalResponseNorm,
    LatentDiscriminator,
    LatentPredictor,
    ModelSpec,
    count_flops,
    count_params,
    transfer_condition,
)
from src.samplers import ConditionVector, reparameterize
from src.utils import make_generator

PAPER_FRAME_RATE_HZ = 44100 / 1024


@pytest.fixture(autouse=True)
def seed_torch():
    torch.manual_seed(0)


@pytest.mark.parametrize(
    "spec,expected",
    [
        [ModelSpec.small(), 4.3e6],
        [ModelSpec.medium(), 19.1e6],
    ],
)
def test_predictor_parameter_count(spec, expected):
    n = count_params(LatentPredictor(spec))
    assert abs(n - expected) / expected < 0.10


def test_stereo_parameter_count_includes_conditioning_branch():
    predictor = LatentPredictor(ModelSpec.stereo())
    encoder = ConditioningEncoder(ConditioningEncoderSpec.for_latent(64, 64))
    n = count_params(predictor, encoder)
    assert abs(n - 24.8e6) / 24.8e6 < 0.10


@pytest.mark.parametrize(
    "spec,expected_gflops",
    [
        [ModelSpec.small(), 0.4],
        [ModelSpec.medium(), 1.6],
    ],
)
def test_flops_per_second(spec, expected_gflops):
    gflops = count_flops(LatentPredictor(spec), 1.0, PAPER_FRAME_RATE_HZ) / 1e9
    assert abs(gflops - expected_gflops) / expected_gflops < 0.15


@pytest.mark.parametrize("seconds", [2.0, 5.0, 10.0])
def test_flops_linear_in_duration(seconds):
    model = LatentPredictor(ModelSpec.tiny())
    assert count_flops(model, seconds, 43.0) == seconds * count_flops(model, 1.0, 43.0)


def test_flops_sequence_terms_only_for_conditioned_models():
    unconditioned = LatentPredictor(ModelSpec.tiny())
    conditioned = LatentPredictor(ModelSpec.tiny(conditioned=True))
    assert count_flops(unconditioned, 1.0, 43.0, include_sequence_terms=True) == count_flops(
        unconditioned, 1.0, 43.0
    )
    assert count_flops(conditioned, 1.0, 43.0, include_sequence_terms=True) > count_flops(
        conditioned, 1.0, 43.0
    )


@pytest.mark.parametrize("seconds", [0.0, -1.0])
def test_flops_rejects_non_positive_duration(seconds):
    with pytest.raises(ValueError):
        count_flops(LatentPredictor(ModelSpec.tiny()), seconds, 43.0)


def test_bwe_medium_predict_shape():
    model = LatentPredictor(ModelSpec.medium()).eval()
    z = LatentSequence(data=torch.randn(64, 60), frame_rate_hz=PAPER_FRAME_RATE_HZ)
    out = model.predict(z)
    assert isinstance(out, LatentSequence)
    assert out.data.shape == (64, 60)
    assert out.frame_rate_hz == z.frame_rate_hz


def test_m2s_medium_predict_shape():
    model = LatentPredictor(ModelSpec.stereo()).eval()
    z = LatentSequence(data=torch.randn(64, 172), frame_rate_hz=PAPER_FRAME_RATE_HZ)
    c = ConditionVector.deterministic(torch.randn(64))
    out = model.predict(z, c)
    assert isinstance(out, StackedLatent)
    assert out.data.shape == (2, 64, 172)


@pytest.mark.parametrize("frames", [1, 7, 33])
def test_block_preserves_shape(frames):
    block = ConvNeXtV2Block(dim=8, expansion=2, kernel_size=7)
    assert block(torch.randn(3, 8, frames)).shape == (3, 8, frames)


def test_block_with_zero_output_projection_is_identity():
    block = ConvNeXtV2Block(dim=8)
    torch.nn.init.zeros_(block.pwconv2.weight)
    torch.nn.init.zeros_(block.pwconv2.bias)
    x = torch.zeros(2, 8, 10)
    assert torch.equal(block(x), x)
    x = torch.randn(2, 8, 10)
    assert torch.equal(block(x), x)


def test_predictor_with_zero_weights_outputs_zeros():
    model = LatentPredictor(ModelSpec.tiny())
    with torch.no_grad():
        for parameter in model.parameters():
            parameter.zero_()
    out = model(torch.randn(2, 16, 12))
    assert torch.equal(out, torch.zeros(2, 16, 12))


def test_grn_on_constant_input():
    grn = GlobalResponseNorm(6)
    with torch.no_grad():
        grn.gamma.copy_(torch.randn(1, 1, 6))
        grn.beta.copy_(torch.randn(1, 1, 6))
    x = torch.full((2, 9, 6), 0.75)
    expected = grn.gamma * x + grn.beta + x
    assert torch.allclose(grn(x), expected, atol=1e-5)


def test_grn_is_identity_at_initialisation():
    x = torch.randn(2, 9, 6)
    assert torch.equal(GlobalResponseNorm(6)(x), x)


def test_adaptive_layer_norm_is_plain_layer_norm_at_initialisation():
    norm = AdaptiveLayerNorm(dim=8, condition_dim=4)
    x = torch.randn(2, 5, 8)
    expected = torch.nn.functional.layer_norm(x, (8,))
    assert torch.allclose(norm(x, torch.randn(2, 4)), expected, atol=1e-6)


def test_conditioned_predictor_matches_unconditioned_at_initialisation():
    conditioned = LatentPredictor(
        ModelSpec(variant="custom", num_blocks=2, hidden_dim=32, latent_channels_in=8,
                  latent_channels_out=8, conditioned=True, condition_dim=4)
    )
    unconditioned = LatentPredictor(
        ModelSpec(variant="custom", num_blocks=2, hidden_dim=32, latent_channels_in=8,
                  latent_channels_out=8)
    )
    unconditioned.load_state_dict(conditioned.state_dict(), strict=False)
    z = torch.randn(2, 8, 11)
    out_a = conditioned(z, torch.randn(2, 4))
    out_b = conditioned(z, 10.0 * torch.randn(2, 4))
    assert torch.allclose(out_a, out_b, atol=1e-6)
    assert torch.allclose(out_a, unconditioned(z), atol=1e-5)


def test_block_gradients():
    block = ConvNeXtV2Block(dim=4, expansion=2, kernel_size=3, condition_dim=3).double()
    with torch.no_grad():
        block.grn.gamma.normal_()
        block.norm.projection.weight.normal_()
    x = torch.randn(1, 4, 5, dtype=torch.float64, requires_grad=True)
    c = torch.randn(1, 3, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(block, (x, c))


def _perturb_zero_initialised(model: torch.nn.Module) -> None:
    with torch.no_grad():
        for module in model.modules():
            if isinstance(module, GlobalResponseNorm):
                module.gamma.normal_()
                module.beta.normal_()
            elif isinstance(module, AdaptiveLayerNorm):
                module.projection.weight.normal_()


@pytest.mark.parametrize("conditioned", [False, True])
def test_predictor_gradients(conditioned):
    model = LatentPredictor(
        ModelSpec.tiny(latent_channels=4, conditioned=conditioned, condition_dim=3)
    ).double()
    _perturb_zero_initialised(model)
    z = torch.randn(1, 4, 5, dtype=torch.float64, requires_grad=True)
    if conditioned:
        c = torch.randn(1, 3, dtype=torch.float64, requires_grad=True)
        assert torch.autograd.gradcheck(model, (z, c))
    else:
        assert torch.autograd.gradcheck(model, (z,))


def test_encoder_gradients_through_reparameterisation():
    encoder = ConditioningEncoder(
        ConditioningEncoderSpec.for_latent(3, output_dim=3, hidden_dim=8, num_blocks=1)
    ).double()
    _perturb_zero_initialised(encoder)

    def sample(z):
        mu, log_sigma = encoder(z)
        return reparameterize(mu, torch.exp(log_sigma), generator=make_generator(0)).sample

    z = torch.randn(2, 2, 3, 5, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(sample, (z,))


def test_discriminator_gradients():
    discriminator = LatentDiscriminator(DiscriminatorSpec(internal_channels=4)).double()
    for layer in discriminator.layers:
        layer.reset_parameters()
    z = torch.randn(1, 3, 24, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(lambda x: discriminator(x).score_map, (z,))
    discriminator(z).score_map.sum().backward()
    assert float(z.grad.abs().sum()) > 0.0


@pytest.mark.parametrize("kernel_size", [0, 4])
def test_block_rejects_even_kernel(kernel_size):
    with pytest.raises(ValueError):
        ConvNeXtV2Block(dim=4, kernel_size=kernel_size)


def test_conditioned_predictor_requires_condition():
    model = LatentPredictor(ModelSpec.tiny(conditioned=True))
    with pytest.raises(ValueError):
        model(torch.randn(1, 16, 5))


def test_unconditioned_predictor_rejects_condition():
    model = LatentPredictor(ModelSpec.tiny())
    with pytest.raises(ValueError):
        model(torch.randn(1, 16, 5), torch.randn(1, 8))


@pytest.mark.parametrize(
    "z,condition",
    [
        [torch.randn(1, 15, 5), torch.randn(1, 8)],
        [torch.randn(16, 5), torch.randn(1, 8)],
        [torch.randn(1, 16, 5), torch.randn(1, 7)],
        [torch.randn(2, 16, 5), torch.randn(1, 8)],
    ],
)
def test_predictor_rejects_bad_shapes(z, condition):
    model = LatentPredictor(ModelSpec.tiny(conditioned=True))
    with pytest.raises(DimensionError):
        model(z, condition)


def test_predict_rejects_non_finite_input():
    model = LatentPredictor(ModelSpec.tiny())
    data = torch.zeros(16, 4)
    data[3, 2] = math.inf
    with pytest.raises(NonFiniteError):
        model.predict(LatentSequence(data=data, frame_rate_hz=10.0))


def test_predict_rejects_channel_mismatch():
    model = LatentPredictor(ModelSpec.tiny())
    with pytest.raises(DimensionError):
        model.predict(LatentSequence(data=torch.zeros(8, 4), frame_rate_hz=10.0))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"num_blocks": 0},
        {"hidden_dim": 0},
        {"dw_kernel": 6},
        {"output_streams": 3},
        {"variant": "L"},
        {"conditioned": True, "condition_dim": 0},
    ],
)
def test_model_spec_validation(kwargs):
    with pytest.raises(ValueError):
        ModelSpec(**kwargs)


def _zero_heads(encoder: ConditioningEncoder) -> ConditioningEncoder:
    for head in (encoder.mu_head, encoder.log_sigma_head):
        torch.nn.init.zeros_(head.weight)
        torch.nn.init.zeros_(head.bias)
    return encoder


def test_encoder_with_zero_heads_gives_standard_normal():
    encoder = _zero_heads(ConditioningEncoder(ConditioningEncoderSpec.for_latent(8, 4, hidden_dim=16)))
    c = encoder.condition(torch.randn(3, 2, 8, 10), generator=make_generator(5))
    assert torch.equal(c.mu, torch.zeros(3, 4))
    assert torch.equal(c.sigma, torch.ones(3, 4))
    assert torch.equal(c.sample, torch.randn((3, 4), generator=make_generator(5)))


def test_encoder_is_deterministic_given_seed():
    encoder = ConditioningEncoder(ConditioningEncoderSpec.for_latent(8, 4, hidden_dim=16))
    z = StackedLatent(data=torch.randn(2, 8, 10), frame_rate_hz=10.0)
    first = encoder.encode(z, generator=make_generator(1))
    second = encoder.encode(z, generator=make_generator(1))
    assert torch.equal(first.sample, second.sample)
    assert first.sample.shape == (4,)


def test_encoder_pools_over_time():
    encoder = ConditioningEncoder(ConditioningEncoderSpec.for_latent(8, 4, hidden_dim=16))
    mu_short, _ = encoder(torch.randn(1, 2, 8, 5))
    mu_long, _ = encoder(torch.randn(1, 2, 8, 50))
    assert mu_short.shape == mu_long.shape == (1, 4)


def test_encoder_rejects_zero_frames():
    encoder = ConditioningEncoder(ConditioningEncoderSpec.for_latent(8, 4, hidden_dim=16))
    with pytest.raises(EmptyInputError):
        encoder(torch.zeros(1, 2, 8, 0))


def test_encoder_rejects_wrong_channels():
    encoder = ConditioningEncoder(ConditioningEncoderSpec.for_latent(8, 4, hidden_dim=16))
    with pytest.raises(DimensionError):
        encoder(torch.zeros(1, 2, 7, 5))


def test_transfer_condition_uses_posterior_mean():
    encoder = ConditioningEncoder(ConditioningEncoderSpec.for_latent(8, 4, hidden_dim=16))
    reference = StackedLatent(data=torch.randn(2, 8, 10), frame_rate_hz=10.0)
    c = transfer_condition(encoder, reference)
    mu, _ = encoder(reference.data[None])
    assert torch.allclose(c.sample, mu[0])
    assert torch.equal(c.sigma, torch.ones(4))


@pytest.mark.parametrize("frames", [21, 40])
def test_discriminator_shapes(frames):
    discriminator = LatentDiscriminator(DiscriminatorSpec.tiny())
    out = discriminator(torch.randn(2, 16, frames))
    assert out.score_map.shape == (2, 16, frames - 20)
    assert len(out.features) == 6
    assert out.features[0].shape == (2, 32, 16, frames - 4)
    assert torch.equal(out.features[-1][:, 0], out.score_map)


@pytest.mark.parametrize("frames", [1, 20])
def test_discriminator_rejects_short_latents(frames):
    discriminator = LatentDiscriminator(DiscriminatorSpec.tiny())
    with pytest.raises(SequenceTooShortError):
        discriminator(torch.randn(1, 16, frames))


def test_discriminator_score_single_sequence():
    discriminator = LatentDiscriminator(DiscriminatorSpec.tiny())
    out = discriminator.score(LatentSequence(data=torch.randn(16, 30), frame_rate_hz=10.0))
    assert out.score_map.shape == (1, 16, 10)


def test_discriminator_spec_validation():
    with pytest.raises(ValueError):
        DiscriminatorSpec(num_layers=3)
