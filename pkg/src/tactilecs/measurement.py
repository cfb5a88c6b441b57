"""Hardware-faithful compressive measurement operators.

Two families are implemented, both with entries in {-1, 0, +1} so a hardware
realization only ever negates and sums taxel values:

* SBHE: a partial block Hadamard transform with randomly permuted columns,
  ``Q_m W P_n`` with W block-diagonal over B x B Sylvester-Hadamard blocks.
  Each block's columns form one disjoint measurement group of B taxels.
* Separable: a two-sided product ``Y = Phi1^T X Phi2`` on the frame matrix,
  with both factors drawn as column subsets of one +-1 orthogonal matrix
  (a column-scrambled, row-sign-flipped Sylvester-Hadamard family).

Operators are immutable after construction, regenerate deterministically from
their seed, and are applied without densifying. The brute-force restricted
isometry oracle and the measurement-group wiring report live here too.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np


def sylvester_hadamard(order: int) -> np.ndarray:
    """Dense Sylvester-Hadamard matrix of a power-of-2 order, entries +-1."""
    if order < 1 or order & (order - 1):
        raise ValueError("Hadamard order must be a power of 2")
    h = np.ones((1, 1))
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


def _fwht_last_axis(a: np.ndarray) -> np.ndarray:
    """In-place fast Walsh-Hadamard transform (Sylvester order) on the last axis."""
    width = a.shape[-1]
    h = 1
    while h < width:
        a = a.reshape(a.shape[:-1] + (width // (2 * h), 2, h))
        top = a[..., 0, :] + a[..., 1, :]
        bot = a[..., 0, :] - a[..., 1, :]
        a[..., 0, :] = top
        a[..., 1, :] = bot
        a = a.reshape(a.shape[:-3] + (width,))
        h *= 2
    return a


# dense per-block multiply beats the butterfly's numpy-call overhead for small B
_DENSE_BLOCK_LIMIT = 64


@dataclass(frozen=True)
class SbheOperator:
    n: int                      # signal length (taxel count)
    m: int                      # measurement count
    block_size: int             # B; measurement-group size
    seed: int
    column_permutation: np.ndarray = field(repr=False)   # perm: (P x)[i] = x[perm[i]]
    selected_rows: np.ndarray = field(repr=False)        # m distinct row indices, ascending
    _block: np.ndarray | None = field(repr=False, default=None, compare=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)


@dataclass(frozen=True)
class SeparableOperator:
    side: int                   # sqrt(n)
    m1: int                     # retained columns for the left factor
    m2: int                     # retained columns for the right factor
    seed: int
    phi1: np.ndarray = field(repr=False)   # side x m1, entries +-1
    phi2: np.ndarray = field(repr=False)   # side x m2, entries +-1

    @property
    def n(self) -> int:
        return self.side * self.side

    @property
    def m(self) -> int:
        return self.m1 * self.m2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)


MeasurementOperator = SbheOperator | SeparableOperator


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def sbhe_new(n: int, m: int, block_size: int = 32, seed: int = 0) -> SbheOperator:
    """Draw an SBHE realization: W fixed by B, permutation and row subset by seed."""
    B = block_size
    if B < 1 or B & (B - 1):
        raise ValueError("block_size must be a power of 2")
    if n % B:
        raise ValueError(f"block_size {B} must divide n = {n}")
    if not 1 <= m <= n:
        raise ValueError(f"m must be in [1, n]; got m={m}, n={n}")
    rng = _rng(seed)
    perm = rng.permutation(n)
    rows = np.sort(rng.choice(n, size=m, replace=False))
    block = sylvester_hadamard(B) if B <= _DENSE_BLOCK_LIMIT else None
    return SbheOperator(n, m, B, seed, perm, rows, block)


def separable_new(side: int, m1: int, m2: int, seed: int = 0) -> SeparableOperator:
    """Draw a separable +-1 operator: one scrambled-Hadamard family instance,
    independent seeded column subsets for the two factors."""
    if side < 1 or side & (side - 1):
        raise ValueError("side must be a power of 2")
    if not (1 <= m1 <= side and 1 <= m2 <= side):
        raise ValueError("m1 and m2 must be in [1, side]")
    rng = _rng(seed)
    h = sylvester_hadamard(side)
    colperm = rng.permutation(side)
    signs = rng.integers(0, 2, size=side) * 2.0 - 1.0
    family = signs[:, None] * h[:, colperm]
    cols1 = np.sort(rng.choice(side, size=m1, replace=False))
    cols2 = np.sort(rng.choice(side, size=m2, replace=False))
    return SeparableOperator(side, m1, m2, seed, family[:, cols1], family[:, cols2])


def _sbhe_blocks_forward(op: SbheOperator, x: np.ndarray) -> np.ndarray:
    """W P x for a batch laid out as (..., n)."""
    permuted = x[..., op.column_permutation]
    blocks = permuted.reshape(x.shape[:-1] + (op.n // op.block_size, op.block_size))
    if op._block is not None:
        out = blocks @ op._block          # Sylvester blocks are symmetric
    else:
        out = _fwht_last_axis(blocks.copy())
    return out.reshape(x.shape[:-1] + (op.n,))


def _apply_batch(op: MeasurementOperator, x: np.ndarray) -> np.ndarray:
    if isinstance(op, SbheOperator):
        return _sbhe_blocks_forward(op, x)[..., op.selected_rows]
    grids = x.reshape(x.shape[:-1] + (op.side, op.side))
    y = op.phi1.T @ grids @ op.phi2
    return y.reshape(x.shape[:-1] + (op.m,))


def _adjoint_batch(op: MeasurementOperator, y: np.ndarray) -> np.ndarray:
    if isinstance(op, SbheOperator):
        full = np.zeros(y.shape[:-1] + (op.n,))
        full[..., op.selected_rows] = y
        z = _sbhe_blocks_forward_unpermuted(op, full)
        out = np.empty_like(z)
        out[..., op.column_permutation] = z
        return out
    grids = y.reshape(y.shape[:-1] + (op.m1, op.m2))
    z = op.phi1 @ grids @ op.phi2.T
    return z.reshape(y.shape[:-1] + (op.n,))


def _sbhe_blocks_forward_unpermuted(op: SbheOperator, v: np.ndarray) -> np.ndarray:
    """W v (no column permutation); W is symmetric so this is also W^T v."""
    blocks = v.reshape(v.shape[:-1] + (op.n // op.block_size, op.block_size))
    if op._block is not None:
        out = blocks @ op._block
    else:
        out = _fwht_last_axis(blocks.copy())
    return out.reshape(v.shape[:-1] + (op.n,))


def apply(op: MeasurementOperator, x: np.ndarray) -> np.ndarray:
    """y = Phi x for a length-n vector, computed without densifying Phi."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (op.shape[1],):
        raise ValueError(f"expected length-{op.shape[1]} vector, got shape {x.shape}")
    return _apply_batch(op, x)


def adjoint_apply(op: MeasurementOperator, y: np.ndarray) -> np.ndarray:
    """Phi^T y for a length-m vector; satisfies <Phi x, y> = <x, Phi^T y>."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (op.shape[0],):
        raise ValueError(f"expected length-{op.shape[0]} vector, got shape {y.shape}")
    return _adjoint_batch(op, y)


def apply_rows(op: MeasurementOperator, X: np.ndarray) -> np.ndarray:
    """Apply the operator to each row of a (k, n) batch; returns (k, m)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != op.shape[1]:
        raise ValueError(f"expected (k, {op.shape[1]}) batch, got {X.shape}")
    return _apply_batch(op, X)


def dense(op: MeasurementOperator) -> np.ndarray:
    """Materialize Phi as an m x n array (tests and small RIP studies only)."""
    return _apply_batch(op, np.eye(op.shape[1])).T


def operator_to_json(op: MeasurementOperator) -> dict:
    """Seed-based serialization; matrices are regenerated, never stored dense."""
    if isinstance(op, SbheOperator):
        return {"kind": "sbhe", "n": op.n, "m": op.m,
                "block_size": op.block_size, "seed": op.seed}
    return {"kind": "separable", "side": op.side, "m1": op.m1, "m2": op.m2,
            "seed": op.seed}


def operator_from_json(header: dict) -> MeasurementOperator:
    kind = header.get("kind")
    if kind == "sbhe":
        return sbhe_new(header["n"], header["m"], header["block_size"], header["seed"])
    if kind == "separable":
        return separable_new(header["side"], header["m1"], header["m2"], header["seed"])
    raise ValueError(f"unknown operator kind {kind!r}")


def rip_delta_bruteforce(A: np.ndarray, k: int) -> float:
    """Exhaustive restricted-isometry constant of the column-normalized A.

    Enumerates every size-k column support and returns
    max(1 - sigma_min^2, sigma_max^2 - 1) over all supports. Exponential by
    design; refuses more than 20 columns.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("A must be a 2-D array")
    p = A.shape[1]
    if p > 20:
        raise ValueError("brute-force RIP oracle is limited to p <= 20 columns")
    if not 1 <= k <= p:
        raise ValueError("k must be in [1, p]")
    norms = np.linalg.norm(A, axis=0)
    delta = 0.0
    for support in combinations(range(p), k):
        cols = A[:, support]
        sub_norms = norms[list(support)]
        if np.any(sub_norms == 0.0):
            delta = max(delta, 1.0)
            continue
        sv = np.linalg.svd(cols / sub_norms, compute_uv=False)
        delta = max(delta, sv[0] ** 2 - 1.0, 1.0 - sv[-1] ** 2)
    return float(delta)


@dataclass(frozen=True)
class WiringReport:
    """Measurement groups as they would be wired on the array."""

    kind: str
    groups: tuple[tuple[int, ...], ...]        # taxel ids per group
    measurements_per_group: tuple[int, ...]
    column_stage: dict | None = None           # separable second stage, if any


def wiring_report(op: MeasurementOperator) -> WiringReport:
    if isinstance(op, SbheOperator):
        B = op.block_size
        n_blocks = op.n // B
        groups = tuple(
            tuple(sorted(int(t) for t in op.column_permutation[b * B:(b + 1) * B]))
            for b in range(n_blocks)
        )
        counts = np.bincount(op.selected_rows // B, minlength=n_blocks)
        return WiringReport("sbhe", groups, tuple(int(c) for c in counts))
    rows = tuple(
        tuple(range(r * op.side, (r + 1) * op.side)) for r in range(op.side)
    )
    stage = {"column_passes": op.m2, "outputs_per_pass": op.m1}
    return WiringReport("separable", rows, tuple([op.m2] * op.side), stage)
