"""Core tactile signal types, the sensor noise channel, and evaluation metrics.

A tactile frame is one snapshot of a square taxel array: a length-n vector of
contact forces in newtons (n = side^2, stored row-major). Frames are immutable
values; every operation here is a pure function, so frames can be processed
concurrently without shared state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FORCE_MIN = 0.0   # N, lower end of a taxel's range
FORCE_MAX = 0.02  # N, upper end of a taxel's range (saturation)

#: Sentinel PSNR for a zero-error reconstruction. Using +inf keeps table
#: generation running instead of raising on a division by zero.
PSNR_PERFECT = math.inf


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TactileFrame:
    """Square grid of non-negative contact forces at one time step."""

    side: int                 # taxels per edge; n = side^2
    forces: np.ndarray        # length-n forces in N, row-major
    timestamp_ms: int = 0     # milliseconds at 1 kHz sampling

    def __post_init__(self):
        if self.side < 1:
            raise ValueError(f"side must be >= 1, got {self.side}")
        if self.timestamp_ms < 0:
            raise ValueError("timestamp_ms must be non-negative")
        forces = np.asarray(self.forces, dtype=np.float64).ravel()
        if forces.shape != (self.side * self.side,):
            raise ValueError(
                f"forces must have length side^2 = {self.side ** 2}, got {forces.size}"
            )
        if not np.all(np.isfinite(forces)):
            raise ValueError("forces must be finite")
        if np.any(forces < 0.0):
            raise ValueError("forces must be non-negative")
        object.__setattr__(self, "forces", _readonly(forces))

    @property
    def n(self) -> int:
        return self.side * self.side

    def as_grid(self) -> np.ndarray:
        """Forces as a (side, side) array (row-major view of the vector)."""
        return self.forces.reshape(self.side, self.side)


@dataclass(frozen=True)
class SensorNoiseModel:
    """Additive Gaussian taxel noise followed by clipping to the sensor range.

    The generator is counter-based (Philox) and keyed on (seed, timestamp),
    so the channel is a pure function of the seed and the input frame: equal
    seed and input give bit-identical output, and frames at distinct time
    steps get independent draws.
    """

    sigma: float = 0.001        # N; 0.001 is 5% of the 0.02 N range
    force_min: float = FORCE_MIN
    force_max: float = FORCE_MAX
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not self.force_min < self.force_max:
            raise ValueError("force_min must be < force_max")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


def _noise_rng(model: SensorNoiseModel, timestamp_ms: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=(int(model.seed), int(timestamp_ms)))
    return np.random.Generator(np.random.Philox(ss))


def add_sensor_noise(frame: TactileFrame, model: SensorNoiseModel) -> TactileFrame:
    """Apply the sensor channel: add per-taxel Gaussian noise, clip to range.

    Deterministic: the draw depends only on (model.seed, frame.timestamp_ms),
    never on call order.
    """
    if model.sigma == 0.0:
        noisy = frame.forces.copy()
    else:
        g = _noise_rng(model, frame.timestamp_ms).normal(0.0, model.sigma, frame.n)
        noisy = frame.forces + g
    np.clip(noisy, model.force_min, model.force_max, out=noisy)
    return TactileFrame(frame.side, noisy, frame.timestamp_ms)


def psnr(estimate: TactileFrame, truth: TactileFrame, mu: float = FORCE_MAX) -> float:
    """Peak signal-to-noise ratio of `estimate` against `truth`, in dB.

    10*log10(mu^2 / MSE) with mu the peak force a taxel can report. A perfect
    reconstruction (zero MSE) returns the PSNR_PERFECT sentinel.
    """
    if estimate.side != truth.side:
        raise ValueError("frames must have the same side")
    if mu <= 0:
        raise ValueError("mu must be positive")
    mse = float(np.mean((truth.forces - estimate.forces) ** 2))
    if mse == 0.0:
        return PSNR_PERFECT
    return 10.0 * math.log10(mu * mu / mse)


def psnr_vectors(estimate: np.ndarray, truth: np.ndarray, mu: float = FORCE_MAX) -> float:
    """psnr() on raw force vectors, for hot loops that avoid frame wrapping."""
    mse = float(np.mean((np.asarray(truth, float) - np.asarray(estimate, float)) ** 2))
    if mse == 0.0:
        return PSNR_PERFECT
    return 10.0 * math.log10(mu * mu / mse)


def approx_sparsity(coeffs: np.ndarray, tau: float) -> int:
    """Number of coefficients whose magnitude exceeds tau.

    Magnitude (not signed value) is compared, matching the best-k-term reading
    of approximate sparsity: the k largest-magnitude entries carry the signal.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    return int(np.count_nonzero(np.abs(np.asarray(coeffs)) > tau))
