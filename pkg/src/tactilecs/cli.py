"""Command-line surface: simulation, measurement, reconstruction, benchmarks.

Every command is driven by a JSON config file plus flag overrides and a
global ``--seed``; rerunning a command with the same config produces
byte-identical primary outputs (tables, TACF files, models). Wall-clock
timings go to separate ``*_timing.csv`` sidecars. Each command writes a
manifest listing every produced artifact with its content hash.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import bases as _bases
from . import bench as _bench
from . import catalog as _catalog
from . import contact as _contact
from . import learning as _learning
from . import measurement as _meas
from . import reconstruction as _rec
from . import tacf as _tacf
from .datasets import ObservationDataset, load_dataset, save_dataset
from .frames import SensorNoiseModel, TactileFrame, add_sensor_noise


class ConfigError(Exception):
    """Bad or missing configuration; exits with code 2."""


class DataError(Exception):
    """Missing or malformed input data; exits with code 3."""


CATALOG_BUILDERS = {
    "golf_ball": _catalog.golf_ball,
    "racquetball": _catalog.racquetball,
    "volleyball": _catalog.volleyball,
    "basketball": _catalog.basketball,
    "cracker_box": _catalog.cracker_box,
    "cereal_box": _catalog.cereal_box,
    "jello_box": _catalog.jello_box,
    "granola_box": _catalog.granola_box,
    "gravy_can": _catalog.gravy_can,
    "tuna_can": _catalog.tuna_can,
    "salmon_can": _catalog.salmon_can,
    "mustard_up": _catalog.mustard_upright,
    "mustard_side": _catalog.mustard_side,
    "banana": _catalog.banana,
    "cup": _catalog.cup,
    "clamp": _catalog.clamp,
    "drill": _catalog.drill,
}


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fp:
        for block in iter(lambda: fp.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, paths) -> Path:
    artifacts = [
        {"path": p.name, "sha256": _sha256(p), "bytes": p.stat().st_size}
        for p in paths
    ]
    manifest = {"command": command, "config": config, "artifacts": artifacts}
    path = out_dir / "manifest.json"
    with open(path, "w") as fp:
        json.dump(manifest, fp, indent=1, sort_keys=True)
    return path


def _out_dir(config: dict) -> Path:
    out = Path(config.get("out_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_objects(spec, spacing: float = 2.0):
    """Object list from catalog names, JSON files, or inline definitions."""
    if isinstance(spec, str):
        if spec == "classification_catalog":
            return _catalog.classification_catalog(spacing)
        if spec == "acquisition_catalog":
            return _catalog.acquisition_catalog(spacing)
        spec = [spec]
    objects = []
    for entry in spec:
        if isinstance(entry, str):
            if entry not in CATALOG_BUILDERS:
                raise ConfigError(f"unknown catalog object {entry!r}")
            builder = CATALOG_BUILDERS[entry]
            try:
                objects.append(builder(spacing))
            except TypeError:
                objects.append(builder())
        elif "file" in entry:
            path = Path(entry["file"])
            if not path.exists():
                raise DataError(f"object file not found: {path}")
            with open(path) as fp:
                objects.append(_contact.object_from_json(json.load(fp)))
        elif "primitive" in entry:
            objects.append(_contact.primitive_object(
                entry["primitive"], entry["dimensions"],
                entry.get("fill_spacing_mm", spacing), entry.get("label")))
        elif "vertices" in entry:
            obj = _contact.union_from_vertices(
                entry["vertices"], entry.get("label", "object"))
            objects.append(_contact.rest_on_plane(obj) if entry.get("rest", True)
                           else obj)
        elif "centers_mm" in entry:
            objects.append(_contact.object_from_json(entry))
        else:
            raise ConfigError(f"cannot interpret object entry {entry!r}")
    return objects


def _array_spec(config: dict) -> _contact.TaxelArraySpec:
    spec = dict(config.get("array", {}))
    pose = spec.pop("substrate_pose", None)
    if pose is not None:
        spec["substrate_pose"] = _contact.SubstratePose(**pose)
    spec.setdefault("side", 32)
    return _contact.TaxelArraySpec(**spec)


def _noise_model(config: dict) -> SensorNoiseModel:
    spec = dict(config.get("noise", {}))
    spec.setdefault("seed", _bench.derive_seed(config.get("seed", 0), "noise"))
    return SensorNoiseModel(**spec)


def _trajectory(config: dict, default_steps: int = 4200) -> _contact.TrajectorySpec:
    spec = dict(config.get("trajectory", {}))
    spec.setdefault("steps", default_steps)
    return _contact.TrajectorySpec(**spec)


def _grid(config: dict) -> _contact.PerturbationGrid:
    spec = config.get("grid", "standard")
    if spec == "standard":
        return _contact.PerturbationGrid.standard()
    return _contact.PerturbationGrid(
        tuple(spec["row_offsets_mm"]), tuple(spec["col_offsets_mm"]),
        tuple(spec["yaw_angles_deg"]))


def _operator_from_config(config: dict, n: int, seed: int):
    spec = config.get("operator")
    if spec is None:
        raise ConfigError("missing 'operator' section")
    if isinstance(spec, str):
        path = Path(spec)
        if not path.exists():
            raise DataError(f"operator file not found: {path}")
        with open(path) as fp:
            return _meas.operator_from_json(json.load(fp))
    spec = dict(spec)
    kind = spec.get("kind", "sbhe")
    op_seed = spec.get("seed", _bench.derive_seed(seed, "operator", kind))
    if kind == "sbhe":
        return _meas.sbhe_new(spec.get("n", n), spec["m"],
                              spec.get("block_size", 32), op_seed)
    if kind == "separable":
        side = spec.get("side", int(round(n ** 0.5)))
        if "m1" in spec:
            return _meas.separable_new(side, spec["m1"], spec["m2"], op_seed)
        m1, m2 = _bench.separable_factors(side, spec["m"])
        return _meas.separable_new(side, m1, m2, op_seed)
    raise ConfigError(f"unknown operator kind {kind!r}")


def _load_dataset_config(config: dict) -> ObservationDataset:
    spec = config.get("dataset")
    if not spec:
        raise ConfigError("missing 'dataset' section")
    features = Path(spec["features"])
    meta = Path(spec["meta"])
    if not features.exists() or not meta.exists():
        raise DataError(f"dataset files not found: {features}, {meta}")
    return load_dataset(features, meta)


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(config: dict) -> None:
    array = _array_spec(config)
    objects = _resolve_objects(config.get("objects", "acquisition_catalog"),
                               config.get("fill_spacing_mm", 2.0))
    traj = _trajectory(config)
    noise = _noise_model(config)
    out = _out_dir(config)
    written = []
    for obj in objects:
        try:
            frames = _contact.run_trajectory(array, obj, traj)
        except _contact.OverCompressionError as err:
            raise DataError(f"object {obj.label!r}: {err}") from err
        true_path = out / f"{obj.label}_true.tacf"
        sensor_path = out / f"{obj.label}_sensor.tacf"
        _tacf.write_frames(true_path, frames)
        _tacf.write_frames(sensor_path,
                           (add_sensor_noise(f, noise) for f in frames))
        written += [true_path, sensor_path]
    _write_manifest(out, "simulate", config, written)
    print(f"simulate: wrote {len(written)} TACF files to {out}")


def cmd_observe(config: dict) -> None:
    array = _array_spec(config)
    objects = _resolve_objects(config.get("objects", "classification_catalog"),
                               config.get("fill_spacing_mm", 2.0))
    grid = _grid(config)
    noise = _noise_model(config)
    depth = config.get("descent_depth_mm", 1.5)
    out = _out_dir(config)
    try:
        dataset = _contact.generate_observations(array, objects, grid, noise, depth)
    except _contact.OverCompressionError as err:
        raise DataError(str(err)) from err
    tacf_path = out / "observations.tacf"
    _tacf.write_frames(
        tacf_path,
        (TactileFrame(array.side, row, i) for i, row in enumerate(dataset.features)),
    )
    features_path = out / "features.npy"
    meta_path = out / "dataset_meta.json"
    save_dataset(dataset, features_path, meta_path)
    _write_manifest(out, "observe", config, [tacf_path, features_path, meta_path])
    print(f"observe: {dataset.n_observations} observations "
          f"({dataset.n_classes} classes) to {out}")


def cmd_measure(config: dict) -> None:
    source = config.get("input")
    if not source:
        raise ConfigError("missing 'input' TACF path")
    if not Path(source).exists():
        raise DataError(f"input not found: {source}")
    frames = _tacf.read_frames(source)
    if not frames:
        raise DataError(f"no frames in {source}")
    signals = np.stack([f.forces for f in frames])
    op = _operator_from_config(config, signals.shape[1], config.get("seed", 0))
    if op.shape[1] != signals.shape[1]:
        raise ConfigError(
            f"operator expects n = {op.shape[1]}, frames have n = {signals.shape[1]}")
    out = _out_dir(config)
    y_path = out / config.get("out_name", "measurements.npy")
    np.save(y_path, _meas.apply_rows(op, signals))
    op_path = out / "operator.json"
    with open(op_path, "w") as fp:
        json.dump(_meas.operator_to_json(op), fp, indent=1, sort_keys=True)
    _write_manifest(out, "measure", config, [y_path, op_path])
    print(f"measure: {signals.shape[0]} frames -> m = {op.shape[0]} at {out}")


def cmd_reconstruct(config: dict) -> None:
    y_path = Path(config.get("measurements", ""))
    if not y_path.exists():
        raise DataError(f"measurements not found: {y_path}")
    measurements = np.load(y_path)
    basis_spec = config.get("basis", {"kind": "haar2"})
    op = _operator_from_config(config, 0, config.get("seed", 0))
    side = int(round(op.shape[1] ** 0.5))
    basis = _bases.SparseBasis(basis_spec.get("kind", "haar2"), side,
                               basis_spec.get("levels"))
    L = _rec.calibrate_stepsize(op, basis)
    cfg = _rec.ReconstructionConfig(
        lam=config.get("lam", _rec.default_lambda(op)),
        stepsize_L=L,
        iterations=config.get("iterations", 20),
        warm_start=config.get("warm_start", True),
    )
    truths = None
    if config.get("truth"):
        truth_path = Path(config["truth"])
        if not truth_path.exists():
            raise DataError(f"truth not found: {truth_path}")
        truths = _tacf.read_frames(truth_path)
        if len(truths) != measurements.shape[0]:
            raise DataError("truth frame count does not match measurements")
    result = _rec.stream_reconstruct(measurements, op, basis, cfg, truths)
    out = _out_dir(config)
    recon_path = out / config.get("out_name", "reconstruction.tacf")
    _tacf.write_frames(recon_path, result.frames)
    metrics_path = out / "reconstruction_metrics.csv"
    _bench.write_csv(
        metrics_path,
        [{"frame_index": r.frame_index, "iterations": r.iterations,
          "wall_ms": r.wall_ms, "psnr_db": r.psnr_db} for r in result.records],
        ["frame_index", "iterations", "wall_ms", "psnr_db"],
    )
    _write_manifest(out, "reconstruct", config, [recon_path])
    print(f"reconstruct: {len(result.frames)} frames at {out}")


def cmd_bench_acquisition(config: dict) -> None:
    array = _array_spec(config)
    objects = _resolve_objects(config.get("objects", "acquisition_catalog"),
                               config.get("fill_spacing_mm", 2.0))
    traj = _trajectory(config, default_steps=840)
    noise = _noise_model(config)
    seed = config.get("seed", 0)
    n = array.n
    m_values = config.get("m_values") or _bench.compression_measurements(
        n, config.get("ratios", (3, 4, 5)))
    trajectories = _bench.simulate_trajectories(array, objects, traj, noise)
    quality, timing = _bench.acquisition_benchmark(
        trajectories, array.side,
        config.get("operators", ("sbhe", "separable")),
        config.get("bases", ("haar2", "dct2")),
        m_values,
        config.get("iteration_counts", (20, 10, 5)),
        config.get("lambdas"),
        seed=seed,
        warm_start=config.get("warm_start", True),
    )
    out = _out_dir(config)
    qcols = ["object", "operator", "basis", "m", "iterations", "lambda",
             "mean_psnr_db", "psnr_min_db", "psnr_max_db",
             "sensor_mean_psnr_db", "sensor_psnr_min_db", "sensor_psnr_max_db"]
    qpath = out / "acquisition.csv"
    _bench.write_csv(qpath, quality, qcols)
    _bench.write_csv(out / "acquisition_timing.csv", timing,
                     ["object", "operator", "basis", "m", "iterations",
                      "lambda", "mean_wall_ms"])
    _bench.emit_gnuplot_script(qpath.name, out / "acquisition.gp", 4, 7,
                               "mean PSNR vs measurements")
    _write_manifest(out, "bench-acquisition", config, [qpath])
    print(f"bench-acquisition: {len(quality)} cells at {out}")


def _coarse_sensor_datasets(config, sizes, fine_array, objects, grid, noise, depth):
    datasets = {}
    for size in sizes:
        side = int(round(size ** 0.5))
        if side * side != size:
            continue
        if size == fine_array.n:
            continue
        coarse = _contact.TaxelArraySpec(
            side=side, extent_mm=fine_array.extent_mm,
            spring_k=fine_array.spring_k)
        datasets[size] = _contact.generate_observations(
            coarse, objects, grid, noise, depth)
    return datasets


def cmd_bench_classification(config: dict) -> None:
    array = _array_spec(config)
    objects = _resolve_objects(config.get("objects", "classification_catalog"),
                               config.get("fill_spacing_mm", 2.0))
    grid = _grid(config)
    noise = _noise_model(config)
    depth = config.get("descent_depth_mm", 1.5)
    seed = config.get("seed", 0)
    sizes = config.get("signal_sizes", [array.n, 64, 16, 4, 1])
    splits = config.get("splits", 10)
    C_grid = config.get("C_grid")
    dev_fraction = config.get("dev_fraction", 0.4)
    val_fraction = config.get("val_fraction", 0.2)

    try:
        sensor = _contact.generate_observations(array, objects, grid, noise, depth)
        coarse = _coarse_sensor_datasets(
            config, sizes, array, objects, grid, noise, depth)
    except _contact.OverCompressionError as err:
        raise DataError(str(err)) from err
    coarse[array.n] = sensor

    out = _out_dir(config)
    paths = []
    rows = _bench.signal_size_benchmark(
        sensor, coarse, sizes, config.get("operators", ("sbhe",)),
        splits, C_grid, dev_fraction, val_fraction, seed)
    size_path = out / "signal_size.csv"
    _bench.write_csv(size_path, rows,
                     ["signal", "signal_size", "mean_accuracy_pct",
                      "min_accuracy_pct", "max_accuracy_pct", "splits"])
    paths.append(size_path)

    sweep = config.get("training_sweep", True)
    if sweep:
        fractions = None
        if isinstance(sweep, (list, tuple)):
            fractions = [tuple(pair) for pair in sweep]
        m_train = config.get("training_sweep_m", 16)
        rows = _bench.training_size_benchmark(
            sensor, coarse.get(m_train), m_train, fractions, splits,
            C_grid, seed)
        train_path = out / "training_size.csv"
        _bench.write_csv(train_path, rows,
                         ["dev_fraction", "val_fraction", "training_pct",
                          "signal", "signal_size", "mean_accuracy_pct",
                          "min_accuracy_pct", "max_accuracy_pct", "splits"])
        paths.append(train_path)

    confusion = config.get("confusion", {"m": 64, "dev_fraction": 0.02,
                                         "val_fraction": 0.01})
    if confusion:
        rows = _bench.confusion_benchmark(
            sensor, confusion.get("m", 64),
            confusion.get("dev_fraction", 0.02),
            confusion.get("val_fraction", 0.01),
            splits, C_grid, seed)
        conf_path = out / "confusion.csv"
        _bench.write_csv(conf_path, rows,
                         ["actual", *sensor.class_names])
        paths.append(conf_path)

    _write_manifest(out, "bench-classification", config, paths)
    print(f"bench-classification: wrote {len(paths)} tables to {out}")


def cmd_rip_report(config: dict) -> None:
    rows = _bench.rip_report(config.get("cases"),
                             tuple(config.get("k_values", (1, 2, 3))),
                             config.get("seed", 0))
    out = _out_dir(config)
    path = out / "rip.csv"
    _bench.write_csv(path, rows, ["operator", "basis", "n", "m", "k", "delta"])
    _write_manifest(out, "rip-report", config, [path])
    print(f"rip-report: {len(rows)} rows at {path}")


def cmd_sparsity_table(config: dict) -> None:
    array = _array_spec(config)
    objects = _resolve_objects(config.get("objects", "acquisition_catalog"),
                               config.get("fill_spacing_mm", 2.0))
    traj = _trajectory(config, default_steps=840)
    noise = _noise_model(config)
    trajectories = _bench.simulate_trajectories(array, objects, traj, noise)
    true_only = {label: pair[0] for label, pair in trajectories.items()}
    rows = _bench.sparsity_report(
        true_only, array.side,
        config.get("bases", ("haar2", "d4_2d", "dct2")),
        config.get("tau", 0.001))
    out = _out_dir(config)
    path = out / "sparsity.csv"
    _bench.write_csv(path, rows,
                     ["object", "basis", "tau", "mean_sparsity", "max_sparsity"])
    _write_manifest(out, "sparsity-table", config, [path])
    print(f"sparsity-table: {len(rows)} rows at {path}")


def cmd_train(config: dict) -> None:
    dataset = _load_dataset_config(config)
    if config.get("operator"):
        op = _operator_from_config(config, dataset.feature_dim,
                                   config.get("seed", 0))
        dataset = _learning.compress_dataset(dataset, op)
    result = _learning.cross_validate(
        dataset, config.get("C_grid"),
        config.get("dev_fraction", 0.4), config.get("val_fraction", 0.2),
        split_seed=config.get("split_seed", config.get("seed", 0)))
    out = _out_dir(config)
    model_path = out / config.get("out_name", "model.json")
    with open(model_path, "w") as fp:
        json.dump(_learning.dag_model_to_json(result.model), fp, sort_keys=True)
    test = dataset.subset_by_perturbations(result.test_perturbations)
    report = {
        "chosen_C": result.C,
        "val_accuracy_by_C": {str(k): v for k, v in result.val_accuracy_by_C.items()},
        "test_accuracy": (_learning.accuracy(result.model, test)
                          if test.n_observations else None),
        "dev_perturbations": result.dev_perturbations.tolist(),
        "val_perturbations": result.val_perturbations.tolist(),
        "test_perturbations": result.test_perturbations.tolist(),
    }
    report_path = out / "training_report.json"
    with open(report_path, "w") as fp:
        json.dump(report, fp, indent=1, sort_keys=True)
    _write_manifest(out, "train", config, [model_path, report_path])
    print(f"train: C = {result.C}, test accuracy = {report['test_accuracy']}")


def cmd_classify(config: dict) -> None:
    model_path = Path(config.get("model", ""))
    if not model_path.exists():
        raise DataError(f"model not found: {model_path}")
    with open(model_path) as fp:
        model = _learning.dag_model_from_json(json.load(fp))
    dataset = _load_dataset_config(config)
    if config.get("operator"):
        op = _operator_from_config(config, dataset.feature_dim,
                                   config.get("seed", 0))
        dataset = _learning.compress_dataset(dataset, op)
    if dataset.feature_dim != model.feature_dim:
        raise ConfigError(
            f"model expects {model.feature_dim} features, dataset has "
            f"{dataset.feature_dim}")
    predicted = _learning.classify_batch(model, dataset.features)
    rows = [
        {"index": i,
         "actual": dataset.class_names[dataset.labels[i]],
         "predicted": model.class_names[predicted[i]],
         "correct": int(predicted[i] == dataset.labels[i])}
        for i in range(dataset.n_observations)
    ]
    out = _out_dir(config)
    pred_path = out / "predictions.csv"
    _bench.write_csv(pred_path, rows, ["index", "actual", "predicted", "correct"])
    _write_manifest(out, "classify", config, [pred_path])
    acc = float(np.mean([r["correct"] for r in rows])) if rows else float("nan")
    print(f"classify: accuracy = {acc:.4f} over {len(rows)} observations")


# ---------------------------------------------------------------------------
# argument handling

COMMANDS = {
    "simulate": cmd_simulate,
    "observe": cmd_observe,
    "measure": cmd_measure,
    "reconstruct": cmd_reconstruct,
    "bench-acquisition": cmd_bench_acquisition,
    "bench-classification": cmd_bench_classification,
    "rip-report": cmd_rip_report,
    "sparsity-table": cmd_sparsity_table,
    "train": cmd_train,
    "classify": cmd_classify,
}


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _apply_override(config: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = config
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override through non-object key {part!r}")
    node[parts[-1]] = value


def load_config(args) -> dict:
    config: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path) as fp:
                config = json.load(fp)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON in {path}: {err}") from err
        if not isinstance(config, dict):
            raise ConfigError("config root must be a JSON object")
    for item in args.set or []:
        key, value = _parse_override(item)
        _apply_override(config, key, value)
    if args.seed is not None:
        config["seed"] = args.seed
    config.setdefault("seed", 0)
    if args.out_dir:
        config["out_dir"] = args.out_dir
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tactilecs",
        description="Compressed sensing toolkit for tactile arrays.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="JSON config file")
        cmd.add_argument("--seed", type=int, default=None,
                         help="global seed (overrides config)")
        cmd.add_argument("--out-dir", help="output directory (overrides config)")
        cmd.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="dotted-path config override, value parsed as JSON")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        COMMANDS[args.command](config)
        return 0
    except (ConfigError, ValueError, TypeError, KeyError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (DataError, OSError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
