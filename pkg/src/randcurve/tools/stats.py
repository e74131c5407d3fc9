"""Statistical summaries, scaling fits and the tail-envelope check."""

import logging
import math
from collections.abc import Sequence

import numpy as np

from ..errors import InvalidArgumentError
from ..models.data_models import (
    EnvelopeCheck,
    EnvelopeRow,
    NoiseKind,
    SampleSummary,
    ScalingFit,
    SupFieldScaling,
)
from ..utils.parallel import map_ordered
from ..utils.seeding import derive_sample_seed
from ..utils.validators import require, validate_increasing
from .noise import sample_noise

logger = logging.getLogger(__name__)

SUBGAUSSIAN_SIGMA2 = 4.0 * math.pi
MIN_ENVELOPE_SAMPLES = 100
QUANTILES = {"q05": 0.05, "q25": 0.25, "q50": 0.5, "q75": 0.75, "q95": 0.95}


def binomial_standard_error(p: float, n: int) -> float:
    """√(p(1-p)/n) with p clipped to [0, 1]."""
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    p = min(max(p, 0.0), 1.0)
    return math.sqrt(p * (1.0 - p) / n)


def summarize_samples(values: Sequence[float], R: float | None = None) -> SampleSummary:
    """Mean, unbiased variance, standard error and quantiles of a sample list.

    With ``R > 1`` the normalized mean mean/(log R)^(3/4) is included.
    """
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise InvalidArgumentError("Cannot summarize an empty sample list")
    n = int(data.size)
    variance = float(data.var(ddof=1)) if n > 1 else 0.0
    mean = float(data.mean())
    return SampleSummary(
        n=n,
        mean=mean,
        variance=variance,
        std_err=math.sqrt(variance / n),
        quantiles={key: float(np.quantile(data, q)) for key, q in QUANTILES.items()},
        normalized_mean=mean / math.log(R) ** 0.75 if R is not None and R > 1 else None,
        R=R,
    )


def fit_log_power(points: Sequence[tuple[float, float]]) -> ScalingFit:
    """Least-squares fit of value ≈ a·(log R)^b on log-log-log axes.

    Args:
        points: ``(R, value)`` pairs with at least three distinct R >= 3 and positive values.
    """
    if len(points) < 3:
        raise InvalidArgumentError(f"Need at least 3 points, got {len(points)}")
    R = np.array([p[0] for p in points], dtype=float)
    v = np.array([p[1] for p in points], dtype=float)
    if np.any(R < 3):
        raise InvalidArgumentError("All R must be >= 3 so that log log R > 0")
    if np.any(v <= 0):
        raise InvalidArgumentError("All values must be positive")
    if np.unique(R).size < 3:
        raise InvalidArgumentError("Need at least 3 distinct R values")

    x = np.log(np.log(R))
    y = np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (intercept + slope * x))))
    return ScalingFit(exponent=float(slope), prefactor=float(np.exp(intercept)), residual=residual)


def subgaussian_envelope_check(
    samples: Sequence[float],
    t_grid: Sequence[float],
    sigma2: float = SUBGAUSSIAN_SIGMA2,
) -> EnvelopeCheck:
    """Compare P(|X - mean| >= t) with 2·exp(-t²/(2σ²)) plus three binomial standard errors.

    The standard error is that of a proportion equal to the bound, i.e. the largest
    deviation the bound itself would produce by sampling noise.
    """
    data = np.asarray(samples, dtype=float)
    if data.size < MIN_ENVELOPE_SAMPLES:
        raise InvalidArgumentError(
            f"Envelope check needs at least {MIN_ENVELOPE_SAMPLES} samples, got {data.size}"
        )
    if sigma2 <= 0:
        raise InvalidArgumentError(f"sigma2 must be positive, got {sigma2}")
    deviations = np.abs(data - data.mean())
    rows = []
    for t in t_grid:
        empirical = float(np.mean(deviations >= t))
        bound = 2.0 * math.exp(-t * t / (2.0 * sigma2))
        se = binomial_standard_error(bound, data.size)
        rows.append(
            EnvelopeRow(
                t=t, empirical=empirical, bound=bound, std_err=se, violation=empirical - bound - 3 * se
            )
        )
    max_violation = max((row.violation for row in rows), default=0.0)
    return EnvelopeCheck(ok=max_violation <= 0, max_violation=max_violation, sigma2=sigma2, rows=rows)


def _sup_field_sample(task: tuple) -> list[float]:
    noise_kind, R_list, seed = task
    side = R_list[-1]
    values = np.abs(sample_noise(noise_kind, side, side, seed).values)
    sups = []
    for R in R_list:
        start = (side - R) // 2
        sups.append(float(values[start : start + R, start : start + R].max()))
    return sups


def sup_field_scaling(
    noise_kind: NoiseKind | str,
    R_list: Sequence[int],
    n_samples: int,
    master_seed: int,
    workers: int | None = None,
) -> SupFieldScaling:
    """Mean of sup_{Q_R}|ξ| over centered R×R boxes, and its ratio to (log R)^(1/2).

    All boxes of one sample are nested inside the same field.
    """
    R_list = [int(R) for R in R_list]
    require(validate_increasing(R_list, "R_list"))
    if R_list[0] < 2:
        raise InvalidArgumentError("R values must be >= 2")
    if n_samples < 1:
        raise InvalidArgumentError(f"n_samples must be >= 1, got {n_samples}")

    tasks = [
        (NoiseKind(noise_kind), R_list, derive_sample_seed(master_seed, "sup-field", i))
        for i in range(n_samples)
    ]
    table = np.array(list(map_ordered(_sup_field_sample, tasks, workers)))
    means = [float(m) for m in table.mean(axis=0)]
    ratios = [m / math.sqrt(math.log(R)) for m, R in zip(means, R_list)]
    fit_points = [(R, m) for R, m in zip(R_list, means) if R >= 3]
    fit = fit_log_power(fit_points) if len(fit_points) >= 3 else None
    return SupFieldScaling(R_list=R_list, means=means, ratios=ratios, max_ratio=max(ratios), fit=fit)


def monotone_within(
    values: Sequence[float], errors: Sequence[float], k: float = 2.0, decreasing: bool = True
) -> bool:
    """Whether consecutive values are monotone up to k combined standard errors."""
    if len(values) != len(errors):
        raise InvalidArgumentError("values and errors must have the same length")
    sign = 1.0 if decreasing else -1.0
    return all(
        sign * (b - a) <= k * math.hypot(ea, eb)
        for a, b, ea, eb in zip(values, values[1:], errors, errors[1:])
    )
