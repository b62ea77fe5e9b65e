import torch

from src.networks.latent_predictor import LatentPredictor


def count_params(*modules: torch.nn.Module) -> int:
    """
    Number of trainable scalars across the given modules.
    """
    return sum(
        parameter.numel()
        for module in modules
        for parameter in module.parameters()
        if parameter.requires_grad
    )


def frames_for(seconds_of_audio: float, frame_rate_hz: float) -> int:
    return int(round(seconds_of_audio * frame_rate_hz))


def count_flops(
    model: LatentPredictor,
    seconds_of_audio: float,
    frame_rate_hz: float,
    include_sequence_terms: bool = False,
) -> float:
    """
    Analytic forward-pass FLOPs of a latent predictor on a clip of the given duration.
    Convolutions and linear layers count 2 per multiply-accumulate per output position,
    norms, activations and residual adds count 1 per element.

    :param model: the predictor
    :param seconds_of_audio: clip duration
    :param frame_rate_hz: latent frame rate
    :param include_sequence_terms: add the once-per-sequence condition projections,
        which makes the count affine rather than linear in duration
    :return: FLOPs
    """
    if seconds_of_audio <= 0:
        raise ValueError(f"{seconds_of_audio=} must be positive")
    spec = model.spec
    per_frame = 2 * spec.latent_channels_in * spec.hidden_dim
    per_frame += sum(block.flops_per_frame() for block in model.blocks)
    per_frame += 2 * spec.hidden_dim * spec.output_streams * spec.latent_channels_out
    flops = float(per_frame * frames_for(seconds_of_audio, frame_rate_hz))
    if include_sequence_terms:
        flops += sum(block.flops_per_sequence() for block in model.blocks)
    return flops
