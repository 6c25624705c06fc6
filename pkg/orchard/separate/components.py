#!/usr/bin/env python3
"""
Skeleton components of the tree cloud and their relation to the trunks
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from ..core.geometry import point_segment_distances
from ..core.topology import Skeleton
from ..segment.labels import Tree, TreeSet

logger = logging.getLogger(__name__)


class ComponentKind(str, Enum):
    ASSIGNED = "assigned"
    SPANNING = "spanning"
    FLOATING = "floating"


@dataclass(frozen=True)
class ComponentStatus:
    """Trees a component lies close to; the kind follows from their count"""

    trees: Tuple[int, ...]

    @property
    def kind(self) -> ComponentKind:
        if not self.trees:
            return ComponentKind.FLOATING
        if len(self.trees) == 1:
            return ComponentKind.ASSIGNED
        return ComponentKind.SPANNING

    @property
    def tree(self) -> Optional[int]:
        return self.trees[0] if len(self.trees) == 1 else None


def trunk_segment(tree: Tree) -> Tuple[np.ndarray, np.ndarray]:
    """Vertical segment from the tree base up to the height of its main-axis top"""
    base = np.asarray(tree.base, dtype=np.float64)
    return base, base + np.array([0.0, 0.0, max(float(tree.top[2]) - base[2], 0.0)])


def distance_to_trunk(points: np.ndarray, tree: Tree) -> float:
    """Minimum distance of ``points`` to the trunk segment of ``tree``"""
    a, b = trunk_segment(tree)
    return float(point_segment_distances(points, a, b).min())


def assign_components(
    components: List[Skeleton], trees: TreeSet, max_distance: float = 0.30
) -> List[ComponentStatus]:
    """Link each component to every tree whose trunk segment it comes closer to than ``max_distance``"""
    if len(trees) == 0:
        return [ComponentStatus(()) for _ in components]
    statuses = []
    if components:
        centers = np.concatenate([component.centers() for component in components])
        starts = np.cumsum([0] + [len(component) for component in components[:-1]])
        near = np.column_stack(
            [np.minimum.reduceat(point_segment_distances(centers, *trunk_segment(t)), starts) for t in trees]
        ) < max_distance
        for row in near:
            statuses.append(ComponentStatus(tuple(t.id for t, close in zip(trees, row) if close)))
    counts = {kind: sum(s.kind == kind for s in statuses) for kind in ComponentKind}
    logger.info(
        f"Components: {counts[ComponentKind.ASSIGNED]} assigned, "
        f"{counts[ComponentKind.SPANNING]} spanning, {counts[ComponentKind.FLOATING]} floating"
    )
    return statuses


def nearest_trunk(points: np.ndarray, trees: TreeSet, candidates: Optional[List[int]] = None) -> int:
    """Id of the tree whose trunk segment is closest to ``points`` (lowest id on ties)"""
    pool = [t for t in trees if candidates is None or t.id in candidates]
    dist = [distance_to_trunk(points, t) for t in pool]
    return pool[int(np.argmin(dist))].id
