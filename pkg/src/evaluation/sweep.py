import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats
from tqdm import tqdm

from src.autoencoders.base import FrozenAutoencoder
from src.evaluation.comparisons import trim_to
from src.exceptions import EmptyInputError
from src.latents.types import AudioBuffer
from src.networks.condition_encoder import ConditioningEncoder, transfer_condition
from src.networks.latent_predictor import LatentPredictor
from src.samplers import interpolate_conditions, sample_prior
from src.signal_ops.stereo import channel_log_energy_ratio, downmix_to_mono
from src.utils import make_generator

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (0.0, 0.25, 0.5, 0.75, 1.0)
SWEEP_COLUMNS = ["clip_id", "lambda", "gt_ratio", "out_ratio"]


@dataclass
class SweepResult:
    """
    frame has one row per (clip, lambda) with columns clip_id, lambda, gt_ratio, out_ratio
    """

    frame: pd.DataFrame
    correlations: Dict[float, float]
    trend: Tuple[Optional[float], Optional[float]]

    def summary(self) -> Dict:
        rho, p_value = self.trend
        return {
            "correlations": {float(k): float(v) for k, v in self.correlations.items()},
            "trend_spearman_rho": rho,
            "trend_p_value": p_value,
            "clips": int(self.frame["clip_id"].nunique()),
        }


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """
    Pearson correlation, 0.0 when either series has zero variance.
    """
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if len(x) < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0
    return float(np.clip(stats.pearsonr(x, y)[0], -1.0, 1.0))


def interpolation_sweep(
    f_theta: LatentPredictor,
    g_phi: ConditioningEncoder,
    frozen_ae: FrozenAutoencoder,
    corpus: Sequence[AudioBuffer],
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    seed: int = 0,
) -> SweepResult:
    """
    Blends the ground-truth condition of each stereo clip with one prior draw,
    c = lambda * c_gt + (1 - lambda) * c_0, and records the channel log-energy ratio of
    the generated stereo against that of the ground truth.

    :param f_theta: trained conditioned predictor
    :param g_phi: trained conditioning encoder, its posterior mean is c_gt
    :param frozen_ae: autoencoder used for encoding and decoding
    :param corpus: stereo clips
    :param lambdas: blend weights in [0, 1]
    :param seed: seed for the prior draws
    :return: scatter data, Pearson correlation per lambda and the Spearman trend over lambda
    """
    if len(corpus) == 0:
        raise EmptyInputError("Interpolation sweep needs at least one clip")
    generator = make_generator(seed)
    rows = []
    for clip_id, x in enumerate(tqdm(corpus, desc="Sweep Clip")):
        z_tgt = frozen_ae.encode_stereo(x)
        z_in = frozen_ae.encode(downmix_to_mono(x))
        c_gt = transfer_condition(g_phi, z_tgt)
        c_0 = sample_prior(c_gt.dimension, generator=generator)
        gt_ratio = channel_log_energy_ratio(x)
        for lam in lambdas:
            c = interpolate_conditions(c_gt, c_0, float(lam))
            out = frozen_ae.decode_stereo(f_theta.predict(z_in, c))
            rows.append(
                {
                    "clip_id": clip_id,
                    "lambda": float(lam),
                    "gt_ratio": gt_ratio,
                    "out_ratio": channel_log_energy_ratio(trim_to(out, x.length)),
                }
            )
    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    correlations = {
        float(lam): pearson(group["gt_ratio"], group["out_ratio"])
        for lam, group in frame.groupby("lambda", sort=True)
    }
    trend: Tuple[Optional[float], Optional[float]] = (None, None)
    if len(correlations) >= 3:
        result = stats.spearmanr(list(correlations), list(correlations.values()))
        if np.isfinite(result[0]):
            trend = (float(result[0]), float(result[1]))
    logger.info(f"Interpolation sweep correlations: {correlations}, trend {trend}.")
    return SweepResult(frame=frame, correlations=correlations, trend=trend)
