#!/usr/bin/env python3
"""
Cutting a skeleton component that touches several trees into per-tree pieces
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.topology import Skeleton, bfs_hops, connected_components, shortest_path_rows
from ..exceptions import NotConnected
from ..models.config import PipelineConfig
from ..segment.labels import TreeSet
from .components import nearest_trunk

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LocalAxis:
    """Main axis of one tree recomputed on a component; rows index the component"""

    tree_id: int
    rows: np.ndarray
    top: int


def refresh_axis(component: Skeleton, y: float, radius: float, tree_id: int) -> Optional[LocalAxis]:
    """Lowest-to-highest path of the component voxels inside the trunk cylinder at ``y``"""
    centers = component.centers()
    inside = np.flatnonzero(np.hypot(centers[:, 0], centers[:, 1] - y) < radius)
    if len(inside) == 0:
        return None
    bottom = int(inside[np.argmin(centers[inside, 2])])
    hops, _ = bfs_hops(component, bottom)
    reachable = inside[hops[inside] >= 0]
    top = int(reachable[np.argmax(centers[reachable, 2])])
    rows = shortest_path_rows(component, bottom, top)
    return LocalAxis(tree_id, rows, top)


def _protected(component: Skeleton, axes: Sequence[LocalAxis]) -> np.ndarray:
    """Axis voxels and their 26-neighbours"""
    mask = np.zeros(len(component), dtype=bool)
    for axis in axes:
        mask[axis.rows] = True
        nb = component.neighbor_table[axis.rows]
        mask[nb[nb >= 0]] = True
    return mask


def select_cut(path_z: np.ndarray, arc: Optional[np.ndarray] = None) -> int:
    """Position in ``path_z`` of the largest deviation from the chord between its ends.

    The chord is interpolated over ``arc``, the cumulative length along the
    path (path positions when omitted). Ties go to the higher voxel, then to
    the earlier path position.
    """
    n = len(path_z)
    arc = np.arange(n, dtype=np.float64) if arc is None else np.asarray(arc, dtype=np.float64)
    if n <= 2 or arc[-1] <= arc[0]:
        chord = np.full(n, path_z.mean())
    else:
        chord = path_z[0] + (path_z[-1] - path_z[0]) * (arc - arc[0]) / (arc[-1] - arc[0])
    deviation = np.round(np.abs(path_z - chord), 12)
    order = np.lexsort((np.arange(n), -path_z, -deviation))
    return int(order[0])


def cut_between(
    component: Skeleton, first: LocalAxis, second: LocalAxis, removed: np.ndarray
) -> int:
    """Remove cut voxels until the two axis tops are disconnected; returns the cut count"""
    protected = _protected(component, [first, second])
    centers = component.centers()
    cuts = 0
    for _ in range(len(component)):
        try:
            path = shortest_path_rows(component, first.top, second.top, removed)
        except NotConnected:
            return cuts
        open_rows = path[~protected[path]]
        if len(open_rows) == 0:
            logger.warning(
                f"Trees {first.tree_id} and {second.tree_id} touch along their main axes; not split"
            )
            return cuts
        along = centers[open_rows]
        arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(along, axis=0), axis=1))])
        cut = open_rows[select_cut(along[:, 2], arc)]
        removed[cut] = True
        cuts += 1
    return cuts


def split_spanning(
    component: Skeleton,
    spanned: Sequence[int],
    trees: TreeSet,
    config: Optional[PipelineConfig] = None,
) -> List[Tuple[Skeleton, int]]:
    """Pieces of a component spanning several trees, each with its nearest tree id.

    Adjacent pairs of the spanned trees (in row order) are disconnected by
    repeatedly removing one cut voxel from the path joining their axis tops.
    """
    config = config or PipelineConfig()
    members = sorted(spanned, key=lambda tid: trees.by_id(tid).y)
    axes = [
        refresh_axis(component, trees.by_id(tid).y, config.trunk_cylinder_radius, tid)
        for tid in members
    ]
    removed = np.zeros(len(component), dtype=bool)
    for first, second in zip(axes, axes[1:]):
        if first is None or second is None:
            continue
        cuts = cut_between(component, first, second, removed)
        logger.debug(f"Trees {first.tree_id}/{second.tree_id}: {cuts} cut voxels")

    pieces = []
    for voxels in connected_components(component.voxels[~removed]):
        piece = Skeleton(voxels, component.grid)
        pieces.append((piece, nearest_trunk(piece.centers(), trees, list(members))))
    return pieces
