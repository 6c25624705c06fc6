#!/usr/bin/env python3
"""
Seeded procedural trellis-orchard scenes with exhaustive ground truth.

Scenes are built in the calibrated frame (row along +Y, ground at z = 0, the
designated tree at the origin) and exported in a random raw reconstruction
frame together with the reference-chart observation that undoes it.
"""

import logging
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..calibrate import Calibration
from ..core.cloud import ColorPointCloud
from ..core.geometry import rotation_about
from ..exceptions import SpecError
from ..io import dump_gt_apples, write_json, write_ply
from ..models.sidecars import CalibrationSidecar
from ..segment.labels import NO_TREE, SemanticLabel
from .shapes import (
    bezier,
    hsv_colors,
    sample_cylinder_shell,
    sample_ground,
    sample_shell_around,
    sample_sphere_surface,
    sample_tube,
)

logger = logging.getLogger(__name__)

# ground, leaves and apples carry no semantic class
UNLABELED = -1

_BARK_HUE = (0.07, 0.12)
_LEAF_HUE = (0.25, 0.38)
_GROUND_HUE = (0.075, 0.085)
_RED_HUE = (-0.03, 0.03)
_GREEN_HUE = (0.16, 0.19)

_CHART_DISTANCE = 1.0
_CHART_OFFSET = 0.25
_CHART_HEIGHT = 0.6
_CHART_SPACING = 0.05
_CHART_GRID = (4, 6)


class SceneSpec(BaseModel):
    """Parameters of one synthetic winter/harvest scene pair"""

    model_config = ConfigDict(extra="forbid")

    n_trees: int = Field(5, ge=1, description="Trees in the row")
    spacing: float = Field(1.0, gt=0, description="Mean tree spacing along the row (m)")
    spacing_jitter: float = Field(0.05, ge=0, description="Uniform jitter of tree positions (m)")
    height_range: Tuple[float, float] = Field((1.6, 2.8), description="Tree heights (m)")
    wire_heights: List[float] = Field([0.5, 1.0, 1.5, 2.0], description="Trellis wire heights (m)")
    wire_x: float = Field(0.025, description="Wire offset from the trunk line (m)")
    pipe_drop: float = Field(0.06, gt=0, description="Water pipe distance below the lowest wire (m)")
    pole: bool = Field(True, description="Place a support pole after the last tree")
    apples_per_tree: int = Field(12, ge=0)
    noise: float = Field(0.002, ge=0, description="Gaussian coordinate noise sigma (m)")
    droop: float = Field(0.03, ge=0, description="Harvest droop at branch tips (m)")
    density: float = Field(40000.0, gt=0, description="Points per square meter of surface")
    ground_density: float = Field(2000.0, ge=0, description="Ground points per square meter")
    leaf_density: float = Field(800.0, ge=0, description="Leaf points per meter of branch")
    touching: bool = Field(True, description="Let two neighbouring trees touch")
    floating: bool = Field(True, description="Add a detached twig to the first tree")
    raw_frame: bool = Field(True, description="Export in a random raw frame with a chart sidecar")
    row_half_extent: float = Field(3.0, gt=0, description="Half length of the modelled row (m)")
    seed: int = 0

    @classmethod
    def create(cls, **values) -> "SceneSpec":
        try:
            return cls(**values)
        except ValidationError as e:
            raise SpecError(str(e)) from e


@dataclass(frozen=True)
class LabeledCloud:
    cloud: ColorPointCloud
    labels: np.ndarray = field(repr=False)
    tree_ids: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.cloud)


@dataclass(frozen=True)
class SyntheticScene:
    """Scene pair in the calibrated frame plus the raw-frame calibrations"""

    spec: SceneSpec
    winter: LabeledCloud
    harvest: LabeledCloud
    harvest_source: np.ndarray = field(repr=False)
    apples: np.ndarray = field(repr=False)
    apple_tree_ids: np.ndarray = field(repr=False)
    tree_bases: np.ndarray
    winter_calibration: Calibration
    harvest_calibration: Calibration
    winter_sidecar: CalibrationSidecar
    harvest_sidecar: CalibrationSidecar

    @staticmethod
    def _to_raw(cloud: ColorPointCloud, calibration: Calibration) -> ColorPointCloud:
        raw = (cloud.points + calibration.origin) @ calibration.rotation.T / calibration.scale
        return ColorPointCloud(raw, cloud.colors)

    def raw_winter(self) -> ColorPointCloud:
        return self._to_raw(self.winter.cloud, self.winter_calibration)

    def raw_harvest(self) -> ColorPointCloud:
        return self._to_raw(self.harvest.cloud, self.harvest_calibration)


@dataclass
class _Part:
    points: np.ndarray
    colors: np.ndarray
    label: int
    tree_id: int
    droop: np.ndarray
    winter: bool = True


@dataclass
class _Branch:
    """Branch centerline; harvest droop at arc fraction t is base + gain * t^2 (times spec.droop)"""

    path: np.ndarray
    tree_id: int
    droop_base: float = 0.0
    droop_gain: float = 1.0


@dataclass
class _Layout:
    """Tree positions plus the laterals that deviate from the regular arches"""

    ys: np.ndarray
    heights: np.ndarray
    contacts: Dict[Tuple[int, int, float], np.ndarray] = field(default_factory=dict)
    floating: Optional[Tuple[int, int, float]] = None
    short_side: Optional[Tuple[int, float]] = None


def _check(spec: SceneSpec) -> None:
    lo, hi = spec.height_range
    if not 0 < lo <= hi:
        raise SpecError(f"invalid height range {spec.height_range}")
    heights = spec.wire_heights
    if not heights or heights[0] <= 0 or any(b <= a for a, b in zip(heights, heights[1:])):
        raise SpecError("wire heights must be positive and strictly increasing")
    if heights[0] - spec.pipe_drop <= 0.02:
        raise SpecError("water pipe would lie on the ground")
    first = (spec.n_trees // 2) * spec.spacing + spec.spacing_jitter
    last = (spec.n_trees - 1 - spec.n_trees // 2) * spec.spacing + spec.spacing_jitter
    extent = max(first + 0.55, last + 0.45)
    if spec.pole:
        extent = max(extent, last + spec.spacing / 2 + 0.1)
    if extent > spec.row_half_extent - 0.1:
        raise SpecError(
            f"{spec.n_trees} trees at {spec.spacing} m spacing do not fit in a "
            f"{2 * spec.row_half_extent} m row"
        )


def _random_calibration(rng: np.random.Generator) -> Calibration:
    yaw = rotation_about([0, 0, 1], rng.uniform(0, 2 * np.pi))
    tilt = rotation_about([1, 0, 0], np.radians(rng.uniform(-3, 3)))
    return Calibration(float(rng.uniform(0.5, 2.0)), yaw @ tilt, rng.uniform(-5, 5, 3))


def _chart_sidecar(calibration: Calibration) -> CalibrationSidecar:
    """Chart patch centers, row-major from the top row, as seen in the raw frame"""
    rows, cols = _CHART_GRID
    r, c = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    centers = np.column_stack(
        [
            np.full(rows * cols, -_CHART_DISTANCE),
            -_CHART_OFFSET + (c.ravel() - (cols - 1) / 2) * _CHART_SPACING,
            _CHART_HEIGHT + ((rows - 1) / 2 - r.ravel()) * _CHART_SPACING,
        ]
    )
    raw = (centers + calibration.origin) @ calibration.rotation.T / calibration.scale
    return CalibrationSidecar(
        marker_points=raw.tolist(),
        patch_spacing_m=_CHART_SPACING,
        d_R_cc=_CHART_DISTANCE,
        d_T_cc=_CHART_OFFSET,
        grid_shape=_CHART_GRID,
    )


def _identity_sidecar() -> CalibrationSidecar:
    return CalibrationSidecar(scale=1.0, rotation=np.eye(3).tolist(), origin=[0.0, 0.0, 0.0])


def _narrow(rng: np.random.Generator, hue: Tuple[float, float], width: float = 0.005):
    start = rng.uniform(*hue)
    return start, start + width


class _SceneBuilder:
    """Accumulates scene parts and branch centerlines"""

    def __init__(self, spec: SceneSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.parts: List[_Part] = []
        self.branches: List[_Branch] = []

    def add(self, points, colors, label, tree_id=NO_TREE, droop=None, winter=True):
        if len(points) == 0:
            return
        droop = np.zeros(len(points)) if droop is None else np.asarray(droop, dtype=np.float64)
        self.parts.append(_Part(np.asarray(points), colors, int(label), int(tree_id), droop, winter))

    def tube(self, path, radii, label, tree_id, colors, branch: Optional[_Branch] = None):
        """Tube part; ``branch`` makes it droop in the harvest scene and carry fruit and leaves"""
        points, fraction = sample_tube(self.rng, path, radii, self.spec.density)
        droop = None
        if branch is not None:
            droop = self.spec.droop * (branch.droop_base + branch.droop_gain * fraction**2)
            self.branches.append(branch)
        self.add(points, colors(len(points)), label, tree_id, droop)

    def bark(self, hue):
        return partial(hsv_colors, self.rng, hue=hue, saturation=(0.45, 0.65), value=(0.3, 0.45))


def _plan(spec: SceneSpec, rng: np.random.Generator) -> _Layout:
    designated = spec.n_trees // 2
    ys = (np.arange(spec.n_trees) - designated) * spec.spacing
    jitter = rng.uniform(-spec.spacing_jitter, spec.spacing_jitter, spec.n_trees)
    jitter[designated] = 0.0
    layout = _Layout(ys + jitter, rng.uniform(*spec.height_range, spec.n_trees))

    if spec.touching and spec.n_trees >= 2:
        j = int(rng.integers(0, spec.n_trees - 1))
        low = min(layout.heights[j], layout.heights[j + 1])
        for q, wire in enumerate(spec.wire_heights):
            contact_z = wire + 0.13 + 0.2
            if contact_z + 0.1 > low:
                break
            mid = 0.5 * (layout.ys[j] + layout.ys[j + 1])
            x = rng.uniform(-0.03, 0.03)
            layout.contacts[(j + 1, q, 1.0)] = np.array([x, mid + 0.01, contact_z])
            layout.contacts[(j + 2, q, -1.0)] = np.array([x, mid - 0.01, contact_z])
            break
    if spec.floating:
        layout.floating = (1, 0, -1.0)
    if spec.pole:
        layout.short_side = (spec.n_trees, 1.0)
    return layout


def _point_at_height(path: np.ndarray, z: float) -> np.ndarray:
    return np.array([np.interp(z, path[:, 2], path[:, i]) for i in range(3)])


def _arch(rng, start: np.ndarray, side: float, length: float) -> Tuple[np.ndarray, float]:
    """Lateral bending up and back down; returns the path and its apex height"""
    peak = rng.uniform(0.15, 0.22)
    x_end = rng.uniform(-0.08, 0.08)
    rise = rng.uniform(0.0, 0.08)
    end = start + np.array([x_end, side * length, rise])
    control = start + np.array([x_end / 2, side * 0.55 * length, 2 * peak - rise / 2])
    return bezier(start, control, end), start[2] + peak


def _rising(start: np.ndarray, tip: np.ndarray) -> np.ndarray:
    """Lateral climbing steadily to ``tip``"""
    return bezier(start, start + (tip - start) * np.array([0.5, 0.5, 0.8]), tip)


def _build_tree(builder: _SceneBuilder, layout: _Layout, tree_id: int) -> None:
    spec, rng = builder.spec, builder.rng
    y, height = layout.ys[tree_id - 1], layout.heights[tree_id - 1]
    bark = builder.bark(_narrow(rng, _BARK_HUE))

    t = np.linspace(0.0, 1.0, 12)[:, None]
    lean = np.array([rng.uniform(-0.015, 0.015), rng.uniform(-0.02, 0.02), height])
    leader = np.array([0.0, y, 0.0]) + t * lean
    builder.tube(leader, np.linspace(0.02, 0.01, len(leader)), SemanticLabel.TREE_TRUNK, tree_id, bark)

    radii = np.linspace(0.008, 0.004, 16)
    for q, wire in enumerate(spec.wire_heights):
        for side in (-1.0, 1.0):
            key = (tree_id, q, side)
            start = _point_at_height(leader, wire + rng.uniform(0.11, 0.15))
            if key in layout.contacts:
                path = _rising(_point_at_height(leader, wire + 0.13), layout.contacts[key])
            else:
                lo, hi = (0.34, 0.40) if key == layout.floating else (0.30, 0.40)
                if layout.short_side == (tree_id, side):
                    hi = 0.30
                path, apex = _arch(rng, start, side, rng.uniform(lo, hi))
                if apex + 0.1 > height:
                    continue
            branch = _Branch(path, tree_id)
            builder.tube(path, radii, SemanticLabel.BRANCH, tree_id, bark, branch)
            _spurs(builder, path, tree_id, bark)
            if key == layout.floating:
                tip = path[-1]
                twig = np.linspace(tip + [0.0, side * 0.03, 0.0], tip + [0.0, side * 0.15, 0.0], 6)
                builder.tube(
                    twig, np.full(6, 0.003), SemanticLabel.BRANCH, tree_id, bark, _Branch(twig, tree_id, 1.0, 0.0)
                )


def _spurs(builder: _SceneBuilder, path: np.ndarray, tree_id: int, bark) -> None:
    """Short side shoots leaving the lateral out of the trellis plane"""
    rng = builder.rng
    for _ in range(int(rng.integers(1, 3))):
        t = rng.uniform(0.4, 0.85)
        base = path[int(round(t * (len(path) - 1)))]
        direction = np.array([rng.choice([-1.0, 1.0]), rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.3)])
        direction /= np.linalg.norm(direction)
        spur = np.linspace(base, base + rng.uniform(0.06, 0.10) * direction, 6)
        branch = _Branch(spur, tree_id, t**2, 0.0)
        builder.tube(spur, np.linspace(0.004, 0.003, 6), SemanticLabel.BRANCH, tree_id, bark, branch)


def _infrastructure(builder: _SceneBuilder, layout: _Layout) -> None:
    """Wires, water pipe, support pole and ground"""
    spec, rng = builder.spec, builder.rng
    half = spec.row_half_extent + 0.3

    def span(z: float) -> np.ndarray:
        return np.array([[spec.wire_x, -half, z], [spec.wire_x, half, z]])

    wire = partial(hsv_colors, rng, hue=(0.58, 0.62), saturation=(0.2, 0.3), value=(0.55, 0.7))
    pipe = partial(hsv_colors, rng, hue=(0.6, 0.65), saturation=(0.3, 0.4), value=(0.2, 0.3))
    for height in spec.wire_heights:
        builder.tube(span(height), [0.002, 0.002], SemanticLabel.TRELLIS_WIRE, NO_TREE, wire)
    lowest = spec.wire_heights[0] - spec.pipe_drop
    builder.tube(span(lowest), [0.008, 0.008], SemanticLabel.TRELLIS_WIRE, NO_TREE, pipe)

    if spec.pole:
        y_pole = layout.ys[-1] + spec.spacing / 2
        points = sample_cylinder_shell(rng, (0.0, y_pole), 0.045, 0.0, 2.3, spec.density)
        colors = hsv_colors(rng, len(points), (0.53, 0.57), (0.2, 0.3), (0.6, 0.75))
        builder.add(points, colors, SemanticLabel.SUPPORT_POLE)

    if spec.ground_density > 0:
        ground = sample_ground(rng, (-1.3, 1.3), (-half, half), spec.ground_density)
        builder.add(ground, hsv_colors(rng, len(ground), _GROUND_HUE, (0.4, 0.5), (0.3, 0.4)), UNLABELED)


def _branch_points(branches: List[_Branch], rng, n: int, t_range=(0.25, 0.95)):
    """``n`` random (point, tree id, droop factor) samples along branch centerlines"""
    lengths = np.array([np.linalg.norm(np.diff(b.path, axis=0), axis=1).sum() for b in branches])
    which = rng.choice(len(branches), size=n, p=lengths / lengths.sum())
    t = rng.uniform(*t_range, n)
    anchors = np.empty((n, 3))
    droop = np.empty(n)
    for i, (b, ti) in enumerate(zip(which, t)):
        branch = branches[b]
        pos = ti * (len(branch.path) - 1)
        k = min(int(pos), len(branch.path) - 2)
        anchors[i] = branch.path[k] + (pos - k) * (branch.path[k + 1] - branch.path[k])
        droop[i] = branch.droop_base + branch.droop_gain * ti**2
    tree_ids = np.array([branches[b].tree_id for b in which], dtype=np.int64)
    return anchors, tree_ids, droop


def _leaves(builder: _SceneBuilder) -> None:
    spec, rng = builder.spec, builder.rng
    if spec.leaf_density <= 0 or not builder.branches:
        return
    total = sum(np.linalg.norm(np.diff(b.path, axis=0), axis=1).sum() for b in builder.branches)
    n = int(round(total * spec.leaf_density))
    if n == 0:
        return
    anchors, tree_ids, droop = _branch_points(builder.branches, rng, n, (0.1, 1.0))
    points = sample_shell_around(rng, anchors, 0.02, 0.06)
    colors = hsv_colors(rng, n, _LEAF_HUE, (0.5, 0.7), (0.35, 0.55))
    for tree_id in np.unique(tree_ids):
        sel = tree_ids == tree_id
        builder.add(points[sel], colors[sel], UNLABELED, tree_id, spec.droop * droop[sel], winter=False)


def _apples(builder: _SceneBuilder, n_trees: int) -> Tuple[np.ndarray, np.ndarray]:
    """Apple spheres hanging below branches, centers at least 10 cm apart (harvest frame)"""
    spec, rng = builder.spec, builder.rng
    centers: List[np.ndarray] = []
    owners: List[int] = []
    for tree_id in range(1, n_trees + 1):
        branches = [b for b in builder.branches if b.tree_id == tree_id]
        if not branches or spec.apples_per_tree == 0:
            continue
        placed = 0
        for _ in range(50 * spec.apples_per_tree):
            if placed == spec.apples_per_tree:
                break
            anchor, _, droop = _branch_points(branches, rng, 1)
            radius = rng.uniform(0.03, 0.04)
            center = anchor[0] + np.array([rng.uniform(-0.03, 0.03), 0.0, -(radius + 0.01)])
            center[2] -= spec.droop * droop[0]
            if centers and np.min(np.linalg.norm(np.array(centers) - center, axis=1)) < 0.10:
                continue
            points = sample_sphere_surface(rng, center, radius, spec.density)
            hue = _narrow(rng, _RED_HUE if rng.random() < 0.5 else _GREEN_HUE, 0.002)
            colors = hsv_colors(rng, len(points), hue, (0.6, 0.9), (0.55, 0.85))
            builder.add(points, colors, UNLABELED, tree_id, winter=False)
            centers.append(center)
            owners.append(tree_id)
            placed += 1
        if placed < spec.apples_per_tree:
            logger.warning(f"Tree {tree_id}: placed {placed} of {spec.apples_per_tree} apples")
    return np.array(centers).reshape(-1, 3), np.array(owners, dtype=np.int64)


def _assemble(parts: List[_Part], rng, noise: float, harvest: bool) -> LabeledCloud:
    chosen = [p for p in parts if harvest or p.winter]
    points = np.concatenate([p.points for p in chosen])
    if harvest:
        points[:, 2] -= np.concatenate([p.droop for p in chosen])
    if noise > 0:
        points = points + rng.normal(0.0, noise, points.shape)
    cloud = ColorPointCloud(points, np.concatenate([p.colors for p in chosen]))
    labels = np.concatenate([np.full(len(p.points), p.label, dtype=np.int64) for p in chosen])
    tree_ids = np.concatenate([np.full(len(p.points), p.tree_id, dtype=np.int64) for p in chosen])
    return LabeledCloud(cloud, labels, tree_ids)


def generate_scene(spec: Optional[SceneSpec] = None) -> SyntheticScene:
    """Deterministic winter/harvest scene pair for ``spec.seed``"""
    spec = spec or SceneSpec()
    _check(spec)
    rng = np.random.default_rng(spec.seed)
    builder = _SceneBuilder(spec, rng)

    layout = _plan(spec, rng)
    for tree_id in range(1, spec.n_trees + 1):
        _build_tree(builder, layout, tree_id)
    _infrastructure(builder, layout)
    _leaves(builder)
    apples, apple_tree_ids = _apples(builder, spec.n_trees)

    winter = _assemble(builder.parts, rng, spec.noise, harvest=False)
    harvest = _assemble(builder.parts, rng, spec.noise, harvest=True)
    in_winter = np.concatenate([np.full(len(p.points), p.winter) for p in builder.parts])
    source = np.full(len(in_winter), -1, dtype=np.int64)
    source[in_winter] = np.arange(int(in_winter.sum()))

    if spec.raw_frame:
        winter_calib, harvest_calib = _random_calibration(rng), _random_calibration(rng)
        winter_sidecar, harvest_sidecar = _chart_sidecar(winter_calib), _chart_sidecar(harvest_calib)
    else:
        winter_calib = harvest_calib = Calibration(1.0, np.eye(3), np.zeros(3))
        winter_sidecar = harvest_sidecar = _identity_sidecar()

    logger.info(
        f"Scene seed {spec.seed}: {spec.n_trees} trees, {len(winter)} winter points, "
        f"{len(harvest)} harvest points, {len(apples)} apples"
    )
    return SyntheticScene(
        spec=spec,
        winter=winter,
        harvest=harvest,
        harvest_source=source,
        apples=apples,
        apple_tree_ids=apple_tree_ids,
        tree_bases=np.column_stack([np.zeros(spec.n_trees), layout.ys, np.zeros(spec.n_trees)]),
        winter_calibration=winter_calib,
        harvest_calibration=harvest_calib,
        winter_sidecar=winter_sidecar,
        harvest_sidecar=harvest_sidecar,
    )


def write_scene(scene: SyntheticScene, directory: Union[str, Path]) -> Dict[str, Path]:
    """Raw-frame PLYs with ground-truth scalars, calibration sidecars and apple ground truth.

    Ground-truth apples are written in the calibrated harvest frame.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "winter": write_ply(
            directory / "winter.ply",
            scene.raw_winter(),
            {"semlabel": scene.winter.labels, "treeid": scene.winter.tree_ids},
        ),
        "harvest": write_ply(
            directory / "harvest.ply",
            scene.raw_harvest(),
            {"semlabel": scene.harvest.labels, "treeid": scene.harvest.tree_ids},
        ),
        "winter_calib": write_json(
            directory / "winter_calib.json", scene.winter_sidecar.model_dump(exclude_none=True)
        ),
        "harvest_calib": write_json(
            directory / "harvest_calib.json", scene.harvest_sidecar.model_dump(exclude_none=True)
        ),
        "gt_apples": write_json(
            directory / "gt_apples.json", dump_gt_apples(scene.apples, scene.apple_tree_ids)
        ),
        "spec": write_json(directory / "scene.json", scene.spec),
    }
    print(f"🌱 Wrote synthetic scene (seed {scene.spec.seed}) to {directory}")
    return paths
