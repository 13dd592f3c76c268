"""Seeded synthetic layers with controllable feature correlation.

Activations follow a low-rank factor model X = F Z + 0.1 E with a handful
of rows amplified to mimic systematic activation outliers. The rank knob
controls how strongly features interact, which is exactly what makes joint
swap selection beat separate selection; the outlier knob is what separates
activation-aware warm starts from plain magnitude.

All draws come from one Philox counter-based generator (a portable, named
algorithm), so a seed pins every byte of the output on any platform.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, ShapeMismatch

NOISE_SCALE = 0.1


@dataclass(frozen=True)
class SynthConfig:
    d_in: int
    d_out: int
    n_cols: int
    corr_rank: int
    outlier_count: int
    outlier_scale: float
    seed: int

    def __post_init__(self):
        if min(self.d_in, self.d_out, self.n_cols, self.corr_rank) < 1:
            raise InvalidConfig("all dimensions must be >= 1")
        if self.corr_rank > self.d_in:
            raise InvalidConfig(
                f"corr_rank {self.corr_rank} exceeds d_in {self.d_in}"
            )
        if not 0 <= self.outlier_count <= self.d_in:
            raise InvalidConfig(
                f"outlier_count {self.outlier_count} outside [0, {self.d_in}]"
            )
        if self.outlier_scale < 1.0:
            raise InvalidConfig(f"outlier_scale must be >= 1, got {self.outlier_scale}")


def generate_layer(cfg: SynthConfig):
    """Deterministic (W, X) pair for the given config.

    W is standard normal. X mixes corr_rank latent factors into d_in
    features plus small independent noise, then multiplies outlier_count
    randomly chosen feature rows by outlier_scale.
    """
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    weights = rng.standard_normal((cfg.d_out, cfg.d_in))
    factors = rng.standard_normal((cfg.d_in, cfg.corr_rank))
    latent = rng.standard_normal((cfg.corr_rank, cfg.n_cols))
    noise = rng.standard_normal((cfg.d_in, cfg.n_cols))
    x = factors @ latent + NOISE_SCALE * noise
    if cfg.outlier_count:
        outliers = rng.choice(cfg.d_in, size=cfg.outlier_count, replace=False)
        x[outliers] *= cfg.outlier_scale
    return weights, x


@dataclass
class ReductionSummary:
    """Relative loss reductions of refined masks against their warm start."""

    per_row_pct: np.ndarray  # NaN where the warm-start loss was zero
    mean_pct: float | None
    excluded_rows: list


def relative_error_reduction(before, after) -> ReductionSummary:
    """Per-row and mean reduction (before - after) / before, in percent.

    Rows whose warm-start loss is zero carry no signal and are excluded
    from the mean; they are reported in excluded_rows instead.
    """
    before = np.asarray(before, dtype=np.float64).ravel()
    after = np.asarray(after, dtype=np.float64).ravel()
    if before.shape != after.shape:
        raise ShapeMismatch(
            f"loss vectors differ in length: {before.shape} vs {after.shape}"
        )
    per_row = np.full(before.shape, np.nan)
    valid = before > 0.0
    per_row[valid] = 100.0 * (before[valid] - after[valid]) / before[valid]
    excluded = np.flatnonzero(~valid).tolist()
    mean = float(np.mean(per_row[valid])) if valid.any() else None
    return ReductionSummary(per_row_pct=per_row, mean_pct=mean, excluded_rows=excluded)
