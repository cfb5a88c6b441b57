"""Sparse recovery of tactile frames from compressed measurements.

The solver minimizes the l1-regularized least squares objective
``0.5 * ||A s - y||^2 + lambda * ||s||_1`` with A = Phi Psi applied
operator-style (never densified), using FISTA: a proximal gradient step of
size 1/L followed by the Beck-Teboulle momentum update. Iteration count is
fixed by configuration to standardize per-frame reconstruction time; a
stream threads solver state so each frame starts from the previous frame's
solution (warm start).

A brute-force smallest-support solver is included as the module's
independent ground truth for tiny instances.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import bases as _bases
from . import measurement as _meas
from .frames import TactileFrame


class LinearMap:
    """Minimal apply/adjoint pair with an (m, p) shape."""

    def __init__(self, shape, apply_fn, adjoint_fn):
        self.shape = tuple(shape)
        self._apply = apply_fn
        self._adjoint = adjoint_fn

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self._apply(v)

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        return self._adjoint(v)


def matrix_map(A: np.ndarray) -> LinearMap:
    A = np.asarray(A, dtype=np.float64)
    return LinearMap(A.shape, lambda v: A @ v, lambda v: A.T @ v)


def compose(op: _meas.MeasurementOperator, basis: _bases.SparseBasis) -> LinearMap:
    """A = Phi Psi: synthesize then measure; adjoint analyzes the back-projection."""
    if basis.n != op.shape[1]:
        raise ValueError(f"basis n = {basis.n} does not match operator n = {op.shape[1]}")
    return LinearMap(
        (op.shape[0], basis.n),
        lambda s: _meas.apply(op, _bases.synthesize(basis, s)),
        lambda r: _bases.analyze(basis, _meas.adjoint_apply(op, r)),
    )


def calibrate_stepsize(op, basis: _bases.SparseBasis | None = None, *,
                       tol: float = 1e-6, max_iter: int = 10_000,
                       seed: int = 0) -> float:
    """L = 2 * lambda_max(A^T A) by power iteration on the composed operator.

    The start vector is seeded, so calibration is deterministic. Raises if the
    relative change has not fallen below `tol` within `max_iter` iterations.
    """
    A = compose(op, basis) if basis is not None else op
    p = A.shape[1]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    v = rng.normal(size=p)
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    for _ in range(max_iter):
        w = A.adjoint(A.apply(v))
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            raise ValueError("operator is zero on the start vector; cannot calibrate")
        if abs(lam - lam_prev) <= tol * lam:
            return 2.0 * lam
        v = w / lam
        lam_prev = lam
    raise RuntimeError(f"power iteration did not converge in {max_iter} iterations")


@dataclass(frozen=True)
class ReconstructionConfig:
    lam: float                  # l1 weight; 0.1 suits SBHE, 1.0 separable
    stepsize_L: float           # 2 * lambda_max(A^T A), from calibrate_stepsize
    iterations: int = 20        # fixed count standardizes reconstruction time
    warm_start: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.stepsize_L <= 0:
            raise ValueError("stepsize_L must be positive")


def default_lambda(op: _meas.MeasurementOperator) -> float:
    return 0.1 if isinstance(op, _meas.SbheOperator) else 1.0


@dataclass(frozen=True)
class ReconstructionState:
    """FISTA carry-over between frames: last iterate, momentum point, momentum scalar."""

    estimate: np.ndarray        # x_k
    momentum: np.ndarray        # z_{k+1}, the point the next gradient is taken at
    t: float                    # t_{k+1}

    @classmethod
    def reset(cls, p: int) -> "ReconstructionState":
        z = np.zeros(p)
        return cls(z, z.copy(), 1.0)


def _soft_threshold(v: np.ndarray, thr: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


def fista_bpdn(y: np.ndarray, A: LinearMap, config: ReconstructionConfig,
               state: ReconstructionState | None = None):
    """Run exactly config.iterations of FISTA; returns (estimate, new state).

    With warm_start the solve continues from `state`; carrying the returned
    state across repeated identical measurements reproduces a single longer
    cold run bit for bit.
    """
    y = np.asarray(y, dtype=np.float64)
    m, p = A.shape
    if y.shape != (m,):
        raise ValueError(f"expected length-{m} measurement vector, got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("measurements contain NaN or inf")
    if state is None or not config.warm_start:
        state = ReconstructionState.reset(p)
    if state.estimate.shape != (p,):
        raise ValueError("state length does not match the operator")

    L = config.stepsize_L
    shrink = config.lam / L
    x_prev = state.estimate
    z = state.momentum
    t = state.t
    for _ in range(config.iterations):
        grad = A.adjoint(A.apply(z) - y)
        x = _soft_threshold(z - grad / L, shrink)
        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        z = x + ((t - 1.0) / t_next) * (x - x_prev)
        x_prev = x
        t = t_next
    return x_prev, ReconstructionState(x_prev, z, t)


def bpdn_objective(y: np.ndarray, A: LinearMap, s: np.ndarray, lam: float) -> float:
    r = A.apply(s) - y
    return 0.5 * float(r @ r) + lam * float(np.sum(np.abs(s)))


def reconstruct_frame(y: np.ndarray, op: _meas.MeasurementOperator,
                      basis: _bases.SparseBasis, config: ReconstructionConfig,
                      state: ReconstructionState | None = None,
                      timestamp_ms: int = 0):
    """Recover a frame from measurements; negatives are clamped to zero.

    Force cannot be negative, so negative synthesized values are set to 0;
    values above the sensor maximum are left untouched. Returns the frame and
    the updated solver state.
    """
    s_hat, state = fista_bpdn(y, compose(op, basis), config, state)
    x = _bases.synthesize(basis, s_hat)
    np.maximum(x, 0.0, out=x)
    return TactileFrame(basis.side, x, timestamp_ms), state


@dataclass(frozen=True)
class StreamRecord:
    frame_index: int
    iterations: int
    wall_ms: float
    psnr_db: float | None


@dataclass(frozen=True)
class StreamResult:
    frames: list[TactileFrame]
    records: list[StreamRecord]


def stream_reconstruct(measurements, op: _meas.MeasurementOperator,
                       basis: _bases.SparseBasis, config: ReconstructionConfig,
                       truths=None) -> StreamResult:
    """Reconstruct a measurement sequence, threading warm-start state.

    `truths` (optional, same length) adds a PSNR column to the per-frame
    records. Timing covers the solve and synthesis of each frame only.
    """
    from .frames import psnr as _psnr

    A = compose(op, basis)
    state = ReconstructionState.reset(basis.n)
    frames: list[TactileFrame] = []
    records: list[StreamRecord] = []
    truth_list = list(truths) if truths is not None else None
    for i, y in enumerate(measurements):
        y = np.asarray(y, dtype=np.float64)
        t0 = time.perf_counter()
        s_hat, state = fista_bpdn(y, A, config, state if config.warm_start else None)
        x = _bases.synthesize(basis, s_hat)
        np.maximum(x, 0.0, out=x)
        wall_ms = (time.perf_counter() - t0) * 1e3
        frame = TactileFrame(basis.side, x, i)
        frames.append(frame)
        value = None
        if truth_list is not None:
            value = _psnr(frame, truth_list[i])
        records.append(StreamRecord(i, config.iterations, wall_ms, value))
    return StreamResult(frames, records)


@dataclass(frozen=True)
class L0Result:
    coeffs: np.ndarray
    support: tuple[int, ...]
    residual: float


def l0_oracle(y: np.ndarray, A: np.ndarray, k_max: int,
              residual_tol: float = 1e-9) -> L0Result:
    """Exhaustive smallest-support solve of A s ~= y (tiny instances only).

    Supports are enumerated by increasing size (lexicographic within a size);
    the first support whose least-squares residual falls below `residual_tol`
    wins. If none does, the minimum-residual support of size k_max is
    returned. This is deliberately exponential: it is the ground truth the
    iterative solver is checked against.
    """
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    m, p = A.shape
    if p > 20:
        raise ValueError("l0 oracle is limited to p <= 20 columns")
    if not 0 <= k_max <= 3:
        raise ValueError("l0 oracle is limited to k_max <= 3")
    if y.shape != (m,):
        raise ValueError("y length does not match A")

    best = L0Result(np.zeros(p), (), float(np.linalg.norm(y)))
    if best.residual <= residual_tol:
        return best
    for k in range(1, k_max + 1):
        for support in combinations(range(p), k):
            cols = A[:, support]
            sol, *_ = np.linalg.lstsq(cols, y, rcond=None)
            residual = float(np.linalg.norm(cols @ sol - y))
            if residual < best.residual - 1e-15:
                coeffs = np.zeros(p)
                coeffs[list(support)] = sol
                best = L0Result(coeffs, support, residual)
                if residual <= residual_tol:
                    return best
    return best
