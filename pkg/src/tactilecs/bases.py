"""Orthonormal 2-D separable transforms used as the sparse representation.

Three bases are provided: the orthonormal type-II DCT and the periodic
orthonormal Daubechies wavelets D2 (Haar) and D4. Each basis acts as an
n x n orthogonal matrix (n = side^2) with synthesize = matrix, analyze =
transpose (= inverse); both are applied with fast separable transforms and
never materialize the matrix except through the explicit `dense_matrix`
helper for small sides.

Wavelet boundary handling is periodic and the 2-D transform is the standard
multilevel scheme: one row pass and one column pass per level, recursing on
the coarse quarter. All transforms are stateless after construction and safe
to apply concurrently to distinct signals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

from .frames import TactileFrame, approx_sparsity

KINDS = ("dct2", "haar2", "d4_2d")

_SQRT3 = np.sqrt(3.0)
_HAAR_H = np.array([1.0, 1.0]) / np.sqrt(2.0)
_D4_H = np.array([1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3]) / (4.0 * np.sqrt(2.0))


def _highpass(h: np.ndarray) -> np.ndarray:
    # quadrature mirror: g_k = (-1)^k h_{L-1-k}
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return g


_HAAR_G = _highpass(_HAAR_H)
_D4_G = _highpass(_D4_H)


@dataclass(frozen=True)
class SparseBasis:
    """An orthonormal 2-D transform selected by name."""

    kind: str           # one of KINDS
    side: int           # transform edge length; power of 2 for wavelets
    levels: int | None = None  # wavelet decomposition depth; None = full

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}; expected one of {KINDS}")
        if self.side < 1:
            raise ValueError("side must be >= 1")
        if self.kind in ("haar2", "d4_2d"):
            if self.side & (self.side - 1):
                raise ValueError("wavelet bases require a power-of-2 side")
            max_levels = self.side.bit_length() - 1
            levels = max_levels if self.levels is None else self.levels
            if not 0 <= levels <= max_levels:
                raise ValueError(f"levels must be in [0, {max_levels}]")
            object.__setattr__(self, "levels", levels)
        elif self.levels is not None:
            raise ValueError("levels only applies to wavelet bases")

    @property
    def n(self) -> int:
        return self.side * self.side


def _forward_axis(x: np.ndarray, h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """One analysis level along the last axis, periodic; output [approx | detail]."""
    xe = x[..., 0::2]
    xo = x[..., 1::2]
    if h.size == 2:
        a = (xe + xo) * h[0]
        d = (xe - xo) * h[0]
    else:
        xe1 = np.roll(xe, -1, axis=-1)
        xo1 = np.roll(xo, -1, axis=-1)
        a = h[0] * xe + h[1] * xo + h[2] * xe1 + h[3] * xo1
        d = g[0] * xe + g[1] * xo + g[2] * xe1 + g[3] * xo1
    return np.concatenate([a, d], axis=-1)


def _inverse_axis(c: np.ndarray, h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Inverse of one analysis level along the last axis."""
    half = c.shape[-1] // 2
    a = c[..., :half]
    d = c[..., half:]
    out = np.empty_like(c)
    if h.size == 2:
        out[..., 0::2] = (a + d) * h[0]
        out[..., 1::2] = (a - d) * h[0]
    else:
        a1 = np.roll(a, 1, axis=-1)
        d1 = np.roll(d, 1, axis=-1)
        out[..., 0::2] = h[0] * a + g[0] * d + h[2] * a1 + g[2] * d1
        out[..., 1::2] = h[1] * a + g[1] * d + h[3] * a1 + g[3] * d1
    return out


def _wavelet_filters(kind: str):
    if kind == "haar2":
        return _HAAR_H, _HAAR_G
    return _D4_H, _D4_G


def _wavelet_analyze(grid: np.ndarray, levels: int, h, g) -> np.ndarray:
    out = np.array(grid, dtype=np.float64)
    s = out.shape[0]
    for _ in range(levels):
        sub = out[:s, :s]
        sub = _forward_axis(sub, h, g)
        sub = _forward_axis(sub.T, h, g).T
        out[:s, :s] = sub
        s //= 2
    return out


def _wavelet_synthesize(coeffs: np.ndarray, levels: int, h, g) -> np.ndarray:
    out = np.array(coeffs, dtype=np.float64)
    side = out.shape[0]
    sizes = [side >> k for k in range(levels)]
    for s in reversed(sizes):
        sub = out[:s, :s]
        sub = _inverse_axis(sub.T, h, g).T
        sub = _inverse_axis(sub, h, g)
        out[:s, :s] = sub
    return out


def analyze(basis: SparseBasis, signal: np.ndarray) -> np.ndarray:
    """Transform coefficients of a length-n signal: the transpose (= inverse) map."""
    x = np.asarray(signal, dtype=np.float64).ravel()
    if x.size != basis.n:
        raise ValueError(f"signal length {x.size} != n = {basis.n}")
    grid = x.reshape(basis.side, basis.side)
    if basis.kind == "dct2":
        return _fft.dctn(grid, type=2, norm="ortho").ravel()
    h, g = _wavelet_filters(basis.kind)
    return _wavelet_analyze(grid, basis.levels, h, g).ravel()


def synthesize(basis: SparseBasis, coeffs: np.ndarray) -> np.ndarray:
    """Signal synthesized from a length-n coefficient vector."""
    c = np.asarray(coeffs, dtype=np.float64).ravel()
    if c.size != basis.n:
        raise ValueError(f"coefficient length {c.size} != n = {basis.n}")
    grid = c.reshape(basis.side, basis.side)
    if basis.kind == "dct2":
        return _fft.idctn(grid, type=2, norm="ortho").ravel()
    h, g = _wavelet_filters(basis.kind)
    return _wavelet_synthesize(grid, basis.levels, h, g).ravel()


def dense_matrix(basis: SparseBasis) -> np.ndarray:
    """Materialize the n x n basis matrix, column by column. Small sides only."""
    if basis.side > 16:
        raise ValueError("dense_matrix is restricted to side <= 16")
    n = basis.n
    out = np.empty((n, n))
    e = np.zeros(n)
    for i in range(n):
        e[i] = 1.0
        out[:, i] = synthesize(basis, e)
        e[i] = 0.0
    return out


def sparsity_table(frames, bases, tau: float) -> dict[str, dict[str, float]]:
    """Mean and max approximate sparsity of a frame sequence under each basis."""
    frames = list(frames)
    if not frames:
        raise ValueError("frame sequence must be non-empty")
    table: dict[str, dict[str, float]] = {}
    for basis in bases:
        counts = [
            approx_sparsity(analyze(basis, f.forces if isinstance(f, TactileFrame) else f), tau)
            for f in frames
        ]
        table[basis.kind] = {"mean": float(np.mean(counts)), "max": int(np.max(counts))}
    return table
