"""Benchmark harness: the experiment protocols behind the CLI tables.

Every function here is a pure function of its arguments and the seeds it is
handed: rows come back as plain dicts in a deterministic order, ready for
CSV. Wall-clock timings are returned separately from quality numbers so the
primary tables are byte-identical across reruns.
"""

from __future__ import annotations

import csv
import hashlib
import math

import numpy as np

from . import bases as _bases
from . import contact as _contact
from . import learning as _learning
from . import measurement as _meas
from . import reconstruction as _rec
from .datasets import ObservationDataset
from .frames import SensorNoiseModel, add_sensor_noise, psnr_vectors


def derive_seed(*parts) -> int:
    """Stable sub-seed from a global seed plus string/int tags."""
    mixed = []
    for p in parts:
        if isinstance(p, str):
            digest = hashlib.sha256(p.encode()).digest()
            mixed.append(int.from_bytes(digest[:8], "little"))
        else:
            mixed.append(int(p))
    return int(np.random.SeedSequence(tuple(mixed)).generate_state(1, np.uint64)[0])


def make_operator(kind: str, n: int, m: int, seed: int,
                  block_size: int = 32) -> _meas.MeasurementOperator:
    """Operator of the requested kind with m (or the closest product) outputs."""
    if kind == "sbhe":
        return _meas.sbhe_new(n, m, block_size, seed)
    if kind == "separable":
        side = int(round(math.sqrt(n)))
        m1, m2 = separable_factors(side, m)
        return _meas.separable_new(side, m1, m2, seed)
    raise ValueError(f"unknown operator kind {kind!r}")


def separable_factors(side: int, m_target: int) -> tuple[int, int]:
    """Best (m1, m2) with m1*m2 <= m_target and both factors <= side."""
    best = (1, 1)
    for m1 in range(1, side + 1):
        m2 = min(side, m_target // m1)
        if m2 < 1:
            break
        if m1 * m2 > best[0] * best[1]:
            best = (m1, m2)
    return best


def compression_measurements(n: int, ratios=(3, 4, 5)) -> list[int]:
    """Measurement counts for n:1-style compression ratios (floor division)."""
    return [n // r for r in ratios]


def _psnr_stats(estimates: np.ndarray, truths: np.ndarray) -> dict:
    values = [psnr_vectors(e, t) for e, t in zip(estimates, truths)]
    return {
        "mean_psnr_db": float(np.mean(values)),
        "psnr_min_db": float(np.min(values)),
        "psnr_max_db": float(np.max(values)),
    }


def calibrate_lambda(y_samples: np.ndarray, A: _rec.LinearMap, L: float,
                     truth_samples: np.ndarray, basis: _bases.SparseBasis,
                     lam_grid) -> float:
    """Grid-search the l1 weight on a few frames, judged by PSNR to the truth.

    Mirrors the tuning protocol the defaults came from; ties go to the
    smaller lambda.
    """
    best_lam, best_score = None, -np.inf
    for lam in sorted(float(v) for v in lam_grid):
        cfg = _rec.ReconstructionConfig(lam=lam, stepsize_L=L, iterations=100,
                                        warm_start=False)
        scores = []
        for y, truth in zip(y_samples, truth_samples):
            s_hat, _ = _rec.fista_bpdn(y, A, cfg)
            x_hat = np.maximum(_bases.synthesize(basis, s_hat), 0.0)
            scores.append(psnr_vectors(x_hat, truth))
        score = float(np.mean(scores))
        if score > best_score:
            best_lam, best_score = lam, score
    return best_lam


def acquisition_benchmark(trajectories: dict, side: int, operator_kinds,
                          basis_kinds, m_values, iteration_counts,
                          lam_by_kind: dict | None = None, seed: int = 0,
                          warm_start: bool = True, block_size: int = 32):
    """PSNR table over (object, operator, basis, m, iterations) cells.

    `trajectories` maps object label -> (true_frames, sensor_frames) as
    (T, n) arrays. Returns (quality_rows, timing_rows): quality rows carry
    reconstruction and sensor-signal PSNR statistics; timing rows carry mean
    wall time per frame and are reported apart so quality tables rerun
    byte-identically.
    """
    n = side * side
    lam_by_kind = dict(lam_by_kind or {})
    quality_rows, timing_rows = [], []
    for label in sorted(trajectories):
        true_frames, sensor_frames = trajectories[label]
        sensor_stats = _psnr_stats(sensor_frames, true_frames)
        for kind in operator_kinds:
            for m in m_values:
                op = make_operator(kind, n, m, derive_seed(seed, kind, m), block_size)
                measurements = _meas.apply_rows(op, sensor_frames)
                for basis_kind in basis_kinds:
                    basis = _bases.SparseBasis(basis_kind, side)
                    L = _rec.calibrate_stepsize(op, basis)
                    lam = lam_by_kind.get(kind, _rec.default_lambda(op))
                    for iters in iteration_counts:
                        cfg = _rec.ReconstructionConfig(
                            lam=lam, stepsize_L=L, iterations=iters,
                            warm_start=warm_start,
                        )
                        result = _rec.stream_reconstruct(measurements, op, basis, cfg)
                        recon = np.stack([f.forces for f in result.frames])
                        cell = {
                            "object": label,
                            "operator": kind,
                            "basis": basis_kind,
                            "m": op.shape[0],
                            "iterations": iters,
                            "lambda": lam,
                        }
                        quality_rows.append({
                            **cell,
                            **_psnr_stats(recon, true_frames),
                            "sensor_mean_psnr_db": sensor_stats["mean_psnr_db"],
                            "sensor_psnr_min_db": sensor_stats["psnr_min_db"],
                            "sensor_psnr_max_db": sensor_stats["psnr_max_db"],
                        })
                        timing_rows.append({
                            **cell,
                            "mean_wall_ms": float(np.mean(
                                [r.wall_ms for r in result.records])),
                        })
    return quality_rows, timing_rows


def split_accuracies(dataset: ObservationDataset, n_splits: int, C_grid,
                     dev_fraction: float, val_fraction: float,
                     seed: int = 0) -> list[float]:
    """Test accuracy per seeded perturbation split."""
    out = []
    for split in range(n_splits):
        result = _learning.cross_validate(
            dataset, C_grid, dev_fraction, val_fraction,
            split_seed=derive_seed(seed, "split", split),
        )
        test = dataset.subset_by_perturbations(result.test_perturbations)
        out.append(_learning.accuracy(result.model, test))
    return out


def signal_size_benchmark(sensor_dataset: ObservationDataset,
                          coarse_datasets: dict, signal_sizes,
                          operator_kinds=("sbhe",), n_splits: int = 10,
                          C_grid=None, dev_fraction: float = 0.4,
                          val_fraction: float = 0.2, seed: int = 0,
                          block_size: int = 32) -> list[dict]:
    """Accuracy vs signal size for compressed signals and coarse-array baselines.

    `coarse_datasets` maps taxel count -> sensor dataset from the matching
    coarse array. A random-guess reference row (100/M percent) is appended.
    """
    n = sensor_dataset.feature_dim
    rows = []
    for m in signal_sizes:
        for kind in operator_kinds:
            op = make_operator(kind, n, m, derive_seed(seed, kind, m), block_size)
            comp = _learning.compress_dataset(sensor_dataset, op)
            accs = split_accuracies(comp, n_splits, C_grid, dev_fraction,
                                    val_fraction, seed)
            rows.append(_accuracy_row("compressed_" + kind, op.shape[0], accs))
        if m in coarse_datasets:
            accs = split_accuracies(coarse_datasets[m], n_splits, C_grid,
                                    dev_fraction, val_fraction, seed)
            rows.append(_accuracy_row("sensor", m, accs))
    rows.append({
        "signal": "random_guess",
        "signal_size": 0,
        "mean_accuracy_pct": 100.0 / sensor_dataset.n_classes,
        "min_accuracy_pct": 100.0 / sensor_dataset.n_classes,
        "max_accuracy_pct": 100.0 / sensor_dataset.n_classes,
        "splits": 0,
    })
    return rows


def _accuracy_row(signal: str, size: int, accs) -> dict:
    return {
        "signal": signal,
        "signal_size": int(size),
        "mean_accuracy_pct": 100.0 * float(np.mean(accs)),
        "min_accuracy_pct": 100.0 * float(np.min(accs)),
        "max_accuracy_pct": 100.0 * float(np.max(accs)),
        "splits": len(accs),
    }


def training_size_benchmark(sensor_dataset: ObservationDataset,
                            coarse_dataset: ObservationDataset | None,
                            m: int = 16, fractions=None, n_splits: int = 10,
                            C_grid=None, seed: int = 0,
                            operator_kind: str = "sbhe",
                            block_size: int = 32) -> list[dict]:
    """Accuracy vs training-set size at a fixed compressed signal size.

    `fractions` is a list of (dev, val) perturbation fractions; the default
    sweep is (40,20), (20,5), (10,3), (6,2), (2,1), (0.66,0.33) percent.
    Rows cover the compressed signals, the full sensor signals, and (when
    given) the coarse sensor baseline of the same size as m.
    """
    if fractions is None:
        fractions = [(0.40, 0.20), (0.20, 0.05), (0.10, 0.03),
                     (0.06, 0.02), (0.02, 0.01), (0.0066, 0.0033)]
    n = sensor_dataset.feature_dim
    op = make_operator(operator_kind, n, m, derive_seed(seed, operator_kind, m),
                       block_size)
    comp = _learning.compress_dataset(sensor_dataset, op)
    rows = []
    P = len(sensor_dataset.perturbations)
    for dev_frac, val_frac in fractions:
        if round(dev_frac * P) < 1 or round(val_frac * P) < 1:
            continue  # finer than one perturbation; not realizable at this P
        tagged = [
            ("compressed_" + operator_kind, comp, op.shape[0]),
            ("sensor_full", sensor_dataset, n),
        ]
        if coarse_dataset is not None:
            tagged.append(("sensor", coarse_dataset, coarse_dataset.feature_dim))
        for signal, ds, size in tagged:
            accs = split_accuracies(ds, n_splits, C_grid, dev_frac, val_frac, seed)
            rows.append({
                "dev_fraction": dev_frac,
                "val_fraction": val_frac,
                "training_pct": 100.0 * (dev_frac + val_frac),
                **_accuracy_row(signal, size, accs),
            })
    return rows


def confusion_benchmark(dataset: ObservationDataset, m: int,
                        dev_fraction: float, val_fraction: float,
                        n_splits: int = 10, C_grid=None, seed: int = 0,
                        operator_kind: str = "sbhe",
                        block_size: int = 32) -> list[dict]:
    """Mean confusion matrix (percent, row-normalized) over seeded splits."""
    n = dataset.feature_dim
    op = make_operator(operator_kind, n, m, derive_seed(seed, operator_kind, m),
                       block_size)
    comp = _learning.compress_dataset(dataset, op)
    total = np.zeros((comp.n_classes, comp.n_classes))
    for split in range(n_splits):
        result = _learning.cross_validate(
            comp, C_grid, dev_fraction, val_fraction,
            split_seed=derive_seed(seed, "split", split),
        )
        test = comp.subset_by_perturbations(result.test_perturbations)
        total += _learning.confusion_matrix(result.model, test)
    mean = total / n_splits
    rows = []
    for i, actual in enumerate(comp.class_names):
        row = {"actual": actual}
        for j, predicted in enumerate(comp.class_names):
            row[predicted] = float(mean[i, j])
        rows.append(row)
    return rows


def rip_report(cases=None, k_values=(1, 2, 3), seed: int = 0) -> list[dict]:
    """Brute-force restricted-isometry constants for small seeded operators.

    Each case composes a small operator with a basis (or raw taxel identity)
    and reports delta for each k. Default cases cover SBHE and separable
    operators at n = 16 with every basis kind.
    """
    if cases is None:
        cases = []
        for kind in ("sbhe", "separable"):
            for basis_kind in (None, "dct2", "haar2", "d4_2d"):
                cases.append({"operator": kind, "n": 16, "m": 10,
                              "basis": basis_kind})
    rows = []
    for case in cases:
        n = case["n"]
        if n > 20:
            raise ValueError("rip report is limited to n <= 20")
        side = int(round(math.sqrt(n)))
        if case["operator"] == "sbhe":
            op = _meas.sbhe_new(n, case["m"], case.get("block_size", 4),
                                derive_seed(seed, "sbhe", n, case["m"]))
        else:
            m1, m2 = separable_factors(side, case["m"])
            op = _meas.separable_new(side, m1, m2,
                                     derive_seed(seed, "separable", n, case["m"]))
        A = _meas.dense(op)
        basis_kind = case.get("basis")
        if basis_kind is not None:
            A = A @ _bases.dense_matrix(_bases.SparseBasis(basis_kind, side))
        for k in k_values:
            rows.append({
                "operator": case["operator"],
                "basis": basis_kind or "identity",
                "n": n,
                "m": op.shape[0],
                "k": k,
                "delta": _meas.rip_delta_bruteforce(A, k),
            })
    return rows


def sparsity_report(trajectories: dict, side: int, basis_kinds,
                    tau: float = 0.001) -> list[dict]:
    """Mean/max approximate sparsity per object and basis at threshold tau."""
    rows = []
    for label in sorted(trajectories):
        frames = trajectories[label]
        table = _bases.sparsity_table(
            frames, [_bases.SparseBasis(k, side) for k in basis_kinds], tau)
        for basis_kind in basis_kinds:
            rows.append({
                "object": label,
                "basis": basis_kind,
                "tau": tau,
                "mean_sparsity": table[basis_kind]["mean"],
                "max_sparsity": table[basis_kind]["max"],
            })
    return rows


def write_csv(path, rows, columns=None) -> None:
    """Rows to CSV with a stable header; floats via repr for byte-stable reruns."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return value


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fp:
        return list(csv.DictReader(fp))


def emit_gnuplot_script(csv_path, out_path, x_column: int, y_column: int,
                        title: str = "") -> str:
    """Write a minimal gnuplot script plotting one CSV column pair."""
    script = (
        "set datafile separator ','\n"
        f"set title '{title}'\n"
        "set key autotitle columnhead\n"
        f"plot '{csv_path}' using {x_column}:{y_column} with linespoints\n"
    )
    with open(out_path, "w") as fp:
        fp.write(script)
    return script


def simulate_trajectories(array: _contact.TaxelArraySpec, objects,
                          traj: _contact.TrajectorySpec,
                          noise: SensorNoiseModel) -> dict:
    """label -> (true, sensor) frame matrices for each object's touch."""
    out = {}
    for obj in objects:
        frames = _contact.run_trajectory(array, obj, traj)
        true_mat = np.stack([f.forces for f in frames])
        sensor = np.stack([add_sensor_noise(f, noise).forces for f in frames])
        out[obj.label] = (true_mat, sensor)
    return out
