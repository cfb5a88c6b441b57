"""Quasistatic contact simulator for a planar taxel array touching objects.

Taxels are rigid spheres hung from a rigid planar substrate by independent
springs along the substrate normal. Objects are unions of equal-radius
spheres resting on the support plane z = 0; the array touches from above.
Contact is resolved per taxel: the taxel sphere is pushed up by the smallest
displacement that removes every penetration with the object union and the
support plane, and the spring force is that displacement times the spring
constant, saturating at the sensor maximum. Dampers contribute nothing at
the recorded steady states, and taxels never interact with each other.

All functions are pure: identical specs produce bit-identical frames, and
frames (or whole observations) can be computed in parallel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .datasets import ObservationDataset
from .frames import FORCE_MAX, SensorNoiseModel, TactileFrame, add_sensor_noise


class OverCompressionError(RuntimeError):
    """A taxel spring was driven past one pitch: the array bottomed out."""


@dataclass(frozen=True)
class SubstratePose:
    """Rigid planar pose of the array substrate."""

    x_mm: float = 0.0
    y_mm: float = 0.0
    yaw_deg: float = 0.0    # rotation about the array normal, about the array center
    z_mm: float = 0.0       # height of taxel rest centers above the support plane


@dataclass(frozen=True)
class SphereUnionObject:
    """Contact geometry approximated by equal-radius spheres."""

    centers: np.ndarray     # (S, 3) sphere centers in mm
    radius: float           # shared sphere radius in mm
    label: str = "object"

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        if centers.ndim != 2 or centers.shape[1] != 3 or centers.shape[0] < 1:
            raise ValueError("centers must be a non-empty (S, 3) array")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        centers = np.ascontiguousarray(centers)
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)

    @property
    def top_mm(self) -> float:
        return float(self.centers[:, 2].max() + self.radius)


@dataclass(frozen=True)
class TaxelArraySpec:
    """Planar square taxel grid and its spring suspension."""

    side: int                          # taxels per edge
    extent_mm: float = 256.0           # array edge length
    taxel_radius_mm: float | None = None   # default: pitch/2 (no overlap at rest)
    spring_k: float | None = None          # N/mm; default saturates at half-pitch compression
    substrate_pose: SubstratePose = SubstratePose()

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("side must be >= 1")
        if self.extent_mm <= 0:
            raise ValueError("extent_mm must be positive")
        pitch = self.extent_mm / self.side
        if self.taxel_radius_mm is None:
            object.__setattr__(self, "taxel_radius_mm", pitch / 2.0)
        if not 0 < self.taxel_radius_mm <= pitch / 2.0:
            raise ValueError("taxel_radius_mm must be in (0, pitch/2]")
        if self.spring_k is None:
            object.__setattr__(self, "spring_k", FORCE_MAX / (pitch / 2.0))
        if self.spring_k <= 0:
            raise ValueError("spring_k must be positive")

    @property
    def pitch_mm(self) -> float:
        return self.extent_mm / self.side

    @property
    def n(self) -> int:
        return self.side * self.side


@dataclass(frozen=True)
class TrajectorySpec:
    """Touch protocol: straight descent, then translation parallel to the plane."""

    descent_depth_mm: float = 1.5
    translate_distance_mm: float = 40.0
    steps: int = 4200
    dt_ms: int = 1
    descent_steps: int | None = None   # default: ~the first quarter of the steps

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.dt_ms < 1:
            raise ValueError("dt_ms must be >= 1")
        if self.descent_depth_mm < 0 or self.translate_distance_mm < 0:
            raise ValueError("distances must be non-negative")
        if self.descent_steps is None:
            object.__setattr__(
                self, "descent_steps", max(1, round(self.steps * 1000 / 4200))
            )
        if not 1 <= self.descent_steps <= self.steps:
            raise ValueError("descent_steps must be in [1, steps]")


@dataclass(frozen=True)
class PerturbationGrid:
    """Systematic array-pose offsets used to generate observations."""

    row_offsets_mm: tuple[float, ...]
    col_offsets_mm: tuple[float, ...]
    yaw_angles_deg: tuple[float, ...]

    def __post_init__(self):
        if not (self.row_offsets_mm and self.col_offsets_mm and self.yaw_angles_deg):
            raise ValueError("perturbation grid must be non-empty")
        object.__setattr__(self, "row_offsets_mm", tuple(float(v) for v in self.row_offsets_mm))
        object.__setattr__(self, "col_offsets_mm", tuple(float(v) for v in self.col_offsets_mm))
        object.__setattr__(self, "yaw_angles_deg", tuple(float(v) for v in self.yaw_angles_deg))

    @property
    def count(self) -> int:
        return len(self.row_offsets_mm) * len(self.col_offsets_mm) * len(self.yaw_angles_deg)

    def poses(self) -> list[dict]:
        """Flattened grid, rows outermost, yaw innermost."""
        return [
            {"row_mm": r, "col_mm": c, "yaw_deg": w}
            for r in self.row_offsets_mm
            for c in self.col_offsets_mm
            for w in self.yaw_angles_deg
        ]

    @classmethod
    def standard(cls) -> "PerturbationGrid":
        """6 row offsets x 6 column offsets x 10 yaws = 360 poses."""
        offsets = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0)
        yaws = tuple(float(a) for a in range(0, 50, 5))
        return cls(offsets, offsets, yaws)


def union_from_vertices(vertices, label: str = "object") -> SphereUnionObject:
    """Spheres at the given vertices, radius twice the mean nearest-neighbor gap."""
    verts = np.atleast_2d(np.asarray(vertices, dtype=np.float64))
    if verts.shape[0] < 2:
        raise ValueError("radius undefined: need at least 2 vertices")
    if verts.shape[1] != 3:
        raise ValueError("vertices must be (V, 3)")
    dists, _ = cKDTree(verts).query(verts, k=2)
    radius = 2.0 * float(np.mean(dists[:, 1]))
    return SphereUnionObject(verts, radius, label)


def rest_on_plane(obj: SphereUnionObject) -> SphereUnionObject:
    """Shift the object vertically so its lowest sphere touches z = 0."""
    shift = float(obj.centers[:, 2].min() - obj.radius)
    centers = obj.centers.copy()
    centers[:, 2] -= shift
    return replace(obj, centers=centers)


def _fibonacci_directions(count: int) -> np.ndarray:
    """Deterministic, nearly uniform unit vectors on the sphere."""
    i = np.arange(count) + 0.5
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _sphere_surface(radius: float, spacing: float) -> np.ndarray:
    count = max(8, math.ceil(1.5 * 4.0 * math.pi * radius * radius / spacing**2))
    return radius * _fibonacci_directions(count)


def _ellipsoid_surface(a: float, b: float, c: float, spacing: float) -> np.ndarray:
    top = max(a, b, c)
    count = max(8, math.ceil(1.5 * 4.0 * math.pi * top * top / spacing**2))
    return _fibonacci_directions(count) * np.array([a, b, c])


def _box_surface(lx: float, ly: float, lz: float, spacing: float) -> np.ndarray:
    axes = [
        np.linspace(-h / 2.0, h / 2.0, max(2, math.ceil(h / spacing) + 1))
        for h in (lx, ly, lz)
    ]
    points = []
    for fixed_axis in range(3):
        free = [axes[k] for k in range(3) if k != fixed_axis]
        uu, vv = np.meshgrid(free[0], free[1], indexing="ij")
        for sign in (-1.0, 1.0):
            face = np.empty((uu.size, 3))
            half = (lx, ly, lz)[fixed_axis] / 2.0
            face[:, fixed_axis] = sign * half
            other = [k for k in range(3) if k != fixed_axis]
            face[:, other[0]] = uu.ravel()
            face[:, other[1]] = vv.ravel()
            points.append(face)
    pts = np.concatenate(points)
    return np.unique(np.round(pts, 9), axis=0)


def _cylinder_surface(radius: float, height: float, spacing: float) -> np.ndarray:
    n_around = max(4, math.ceil(2.0 * math.pi * radius / spacing))
    angles = np.linspace(0.0, 2.0 * math.pi, n_around, endpoint=False)
    ring = np.stack([radius * np.cos(angles), radius * np.sin(angles)], axis=1)
    zs = np.linspace(-height / 2.0, height / 2.0, max(2, math.ceil(height / spacing) + 1))
    wall = np.concatenate([np.column_stack([ring, np.full(len(ring), z)]) for z in zs])
    caps = []
    for z in (-height / 2.0, height / 2.0):
        r = radius - spacing
        while r > 0:
            k = max(4, math.ceil(2.0 * math.pi * r / spacing))
            a = np.linspace(0.0, 2.0 * math.pi, k, endpoint=False)
            caps.append(np.column_stack([r * np.cos(a), r * np.sin(a), np.full(k, z)]))
            r -= spacing
        caps.append(np.array([[0.0, 0.0, z]]))
    return np.concatenate([wall] + caps)


def primitive_object(kind: str, dimensions, fill_spacing_mm: float = 2.0,
                     label: str | None = None) -> SphereUnionObject:
    """Surface-sample a primitive into a sphere union resting on the plane.

    Centers lie on the primitive's surface, at most `fill_spacing_mm` apart,
    and the shared sphere radius equals the spacing so the union has no gaps
    a taxel can slip through. Dimensions: sphere (radius,), box (lx, ly, lz),
    cylinder (radius, height), ellipsoid (a, b, c semi-axes).
    """
    if fill_spacing_mm <= 0:
        raise ValueError("fill_spacing_mm must be positive")
    dims = tuple(float(d) for d in np.atleast_1d(dimensions))
    if any(d <= 0 for d in dims):
        raise ValueError(f"degenerate dimensions {dims}")
    if kind == "sphere":
        (radius,) = dims
        pts = _sphere_surface(radius, fill_spacing_mm)
    elif kind == "box":
        lx, ly, lz = dims
        pts = _box_surface(lx, ly, lz, fill_spacing_mm)
    elif kind == "cylinder":
        radius, height = dims
        pts = _cylinder_surface(radius, height, fill_spacing_mm)
    elif kind == "ellipsoid":
        a, b, c = dims
        pts = _ellipsoid_surface(a, b, c, fill_spacing_mm)
    else:
        raise ValueError(f"unknown primitive kind {kind!r}")
    obj = SphereUnionObject(pts, fill_spacing_mm, label or kind)
    return rest_on_plane(obj)


def _rotation_2d(yaw_deg: float) -> np.ndarray:
    """Rotation matrix; quarter turns are exact so lattice symmetries hold bitwise."""
    r = yaw_deg % 360.0
    quarter = {0.0: ((1.0, 0.0), (0.0, 1.0)),
               90.0: ((0.0, -1.0), (1.0, 0.0)),
               180.0: ((-1.0, 0.0), (0.0, -1.0)),
               270.0: ((0.0, 1.0), (-1.0, 0.0))}
    if r in quarter:
        return np.array(quarter[r])
    c, s = math.cos(math.radians(r)), math.sin(math.radians(r))
    return np.array([[c, -s], [s, c]])


def taxel_positions(array: TaxelArraySpec, pose: SubstratePose) -> np.ndarray:
    """World (x, y) of each taxel center, row-major, for the given pose."""
    coords = (np.arange(array.side) + 0.5) * array.pitch_mm - array.extent_mm / 2.0
    xs, ys = np.meshgrid(coords, coords)           # x varies along columns
    local = np.stack([xs.ravel(), ys.ravel()], axis=1)
    rot = _rotation_2d(pose.yaw_deg)
    return local @ rot.T + np.array([pose.x_mm, pose.y_mm])


def _contact_heights(array: TaxelArraySpec, obj: SphereUnionObject,
                     pose: SubstratePose, z_floor: float) -> np.ndarray:
    """Lowest center height each taxel can sit at without penetrating anything.

    Exact for evaluation at any substrate height >= z_floor: spheres that
    cannot reach above z_floor are pruned before the pairwise pass.
    """
    taxels = taxel_positions(array, pose)
    rho = array.taxel_radius_mm
    reach = obj.radius + rho
    reach2 = reach * reach

    centers = obj.centers
    keep = centers[:, 2] + reach >= z_floor
    if np.any(keep):
        lateral = centers[keep, :2] - np.array([pose.x_mm, pose.y_mm])
        max_r = array.extent_mm / math.sqrt(2.0) + reach
        near = np.einsum("ij,ij->i", lateral, lateral) <= max_r * max_r
        kept = centers[keep][near]
    else:
        kept = centers[:0]

    heights = np.full(array.n, rho)               # support-plane clearance
    if kept.shape[0] == 0:
        return heights

    if array.n * kept.shape[0] > 1_000_000:
        # sparse pairing: only taxel/sphere pairs within lateral reach matter
        tree = cKDTree(kept[:, :2])
        neighbor_lists = tree.query_ball_point(taxels, r=reach)
        counts = np.fromiter((len(v) for v in neighbor_lists), dtype=np.int64,
                             count=array.n)
        if counts.sum() == 0:
            return heights
        sphere_idx = np.concatenate(
            [np.asarray(v, dtype=np.int64) for v in neighbor_lists if v]
        )
        taxel_idx = np.repeat(np.arange(array.n), counts)
        dx = taxels[taxel_idx, 0] - kept[sphere_idx, 0]
        dy = taxels[taxel_idx, 1] - kept[sphere_idx, 1]
        d2 = dx * dx + dy * dy
        strict = d2 < reach2
        need = kept[sphere_idx[strict], 2] + np.sqrt(
            np.maximum(reach2 - d2[strict], 0.0)
        )
        np.maximum.at(heights, taxel_idx[strict], need)
        return heights

    chunk = max(1, int(4_000_000 // max(array.n, 1)))
    for start in range(0, kept.shape[0], chunk):
        block = kept[start:start + chunk]
        dx = taxels[:, 0:1] - block[np.newaxis, :, 0]
        dy = taxels[:, 1:2] - block[np.newaxis, :, 1]
        d2 = dx * dx + dy * dy
        inside = d2 < reach2
        lift = np.where(inside, np.sqrt(np.maximum(reach2 - d2, 0.0)), -np.inf)
        need = lift + block[np.newaxis, :, 2]
        np.maximum(heights, need.max(axis=1), out=heights)
    return heights


def _forces_from_heights(array: TaxelArraySpec, heights: np.ndarray, z: float) -> np.ndarray:
    delta = np.maximum(heights - z, 0.0)
    worst = float(delta.max()) if delta.size else 0.0
    if worst > array.pitch_mm:
        taxel = int(delta.argmax())
        raise OverCompressionError(
            f"over-compression: taxel {taxel} spring deflection {worst:.3f} mm "
            f"exceeds the {array.pitch_mm:.3f} mm pitch"
        )
    return np.minimum(array.spring_k * delta, FORCE_MAX)


def quasistatic_frame(array: TaxelArraySpec, obj: SphereUnionObject,
                      pose: SubstratePose, timestamp_ms: int = 0) -> TactileFrame:
    """Steady-state frame for one substrate pose."""
    heights = _contact_heights(array, obj, pose, z_floor=pose.z_mm)
    forces = _forces_from_heights(array, heights, pose.z_mm)
    return TactileFrame(array.side, forces, timestamp_ms)


def start_height(array: TaxelArraySpec, obj: SphereUnionObject) -> float:
    """Substrate height at which any lateral pose is guaranteed contact-free."""
    return obj.top_mm + array.taxel_radius_mm


def run_trajectory(array: TaxelArraySpec, obj: SphereUnionObject,
                   traj: TrajectorySpec) -> list[TactileFrame]:
    """Simulate the touch protocol at 1 kHz and return every frame.

    The substrate starts just clear of the object (at `start_height`), descends
    linearly by descent_depth_mm over the descent phase, then translates along
    +x by translate_distance_mm at constant speed. Frames are recorded after
    each step's motion.
    """
    base = array.substrate_pose
    z0 = start_height(array, obj)
    z_end = z0 - traj.descent_depth_mm
    frames: list[TactileFrame] = []

    descent_pose = replace(base, z_mm=z_end)
    heights = _contact_heights(array, obj, descent_pose, z_floor=z_end)
    for t in range(traj.descent_steps):
        z = z0 - traj.descent_depth_mm * (t + 1) / traj.descent_steps
        forces = _forces_from_heights(array, heights, z)
        frames.append(TactileFrame(array.side, forces, t * traj.dt_ms))

    slide_steps = traj.steps - traj.descent_steps
    for k in range(slide_steps):
        shift = traj.translate_distance_mm * (k + 1) / slide_steps
        pose = replace(base, x_mm=base.x_mm + shift, z_mm=z_end)
        frame = quasistatic_frame(array, obj, pose, (traj.descent_steps + k) * traj.dt_ms)
        frames.append(frame)
    return frames


def generate_observations(array: TaxelArraySpec, objects, grid: PerturbationGrid,
                          noise: SensorNoiseModel,
                          descent_depth_mm: float = 1.5) -> ObservationDataset:
    """One noisy end-of-descent observation per (object, perturbation).

    Each observation gets its own noise sub-seed derived from
    (noise.seed, object index, perturbation index), so results do not depend
    on evaluation order and the generation is safe to parallelize.
    """
    objects = list(objects)
    if not objects:
        raise ValueError("need at least one object")
    names = tuple(o.label for o in objects)
    if len(set(names)) != len(names):
        raise ValueError("object labels must be distinct")
    poses = grid.poses()
    base = array.substrate_pose

    features = np.empty((len(objects) * len(poses), array.n))
    labels = np.empty(features.shape[0], dtype=np.int64)
    pert_ids = np.empty(features.shape[0], dtype=np.int64)
    row = 0
    for obj_idx, obj in enumerate(objects):
        z_end = start_height(array, obj) - descent_depth_mm
        for pert_idx, pert in enumerate(poses):
            pose = SubstratePose(
                x_mm=base.x_mm + pert["col_mm"],
                y_mm=base.y_mm + pert["row_mm"],
                yaw_deg=base.yaw_deg + pert["yaw_deg"],
                z_mm=z_end,
            )
            try:
                frame = quasistatic_frame(array, obj, pose)
            except OverCompressionError as err:
                raise OverCompressionError(
                    f"object {obj.label!r}, perturbation {pert}: {err}"
                ) from err
            sub = np.random.SeedSequence((int(noise.seed), obj_idx, pert_idx))
            sub_seed = int(sub.generate_state(1, np.uint64)[0])
            child = replace(noise, seed=sub_seed)
            features[row] = add_sensor_noise(frame, child).forces
            labels[row] = obj_idx
            pert_ids[row] = pert_idx
            row += 1
    return ObservationDataset(features, labels, names, pert_ids, tuple(poses))


def object_to_json(obj: SphereUnionObject) -> dict:
    return {
        "label": obj.label,
        "radius_mm": obj.radius,
        "centers_mm": obj.centers.tolist(),
    }


def object_from_json(data: dict) -> SphereUnionObject:
    return SphereUnionObject(
        np.asarray(data["centers_mm"], dtype=np.float64),
        float(data["radius_mm"]),
        data.get("label", "object"),
    )
