#!/usr/bin/env python3
"""
Semantic labels and detected trees
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, List

import numpy as np


class SemanticLabel(IntEnum):
    TREE_TRUNK = 0
    BRANCH = 1
    TRELLIS_WIRE = 2
    SUPPORT_POLE = 3

    @property
    def display_name(self) -> str:
        return _DISPLAY[self]


_DISPLAY = {
    SemanticLabel.TREE_TRUNK: "Tree trunk",
    SemanticLabel.BRANCH: "Branch",
    SemanticLabel.TRELLIS_WIRE: "Trellis wire / water pipe",
    SemanticLabel.SUPPORT_POLE: "Support pole",
}

NON_TREE_LABELS = (SemanticLabel.TRELLIS_WIRE, SemanticLabel.SUPPORT_POLE)

# tree id carried by points that belong to no tree
NO_TREE = 0


def new_labeling(n_points: int) -> np.ndarray:
    """Per-point labels, all Branch"""
    return np.full(n_points, int(SemanticLabel.BRANCH), dtype=np.int8)


def label_counts(labels: np.ndarray) -> Dict[str, int]:
    return {label.name.lower(): int((labels == label).sum()) for label in SemanticLabel}


@dataclass(frozen=True)
class Tree:
    """Verified tree in the trellis frame"""

    id: int
    base: np.ndarray
    axis: np.ndarray = field(repr=False)
    axis_length: float = 0.0

    @property
    def y(self) -> float:
        return float(self.base[1])

    @property
    def top(self) -> np.ndarray:
        return self.axis[-1]


@dataclass(frozen=True)
class TreeSet:
    """Trees ordered by strictly increasing row position"""

    trees: List[Tree] = field(default_factory=list)

    def __post_init__(self):
        ys = [t.y for t in self.trees]
        if any(b <= a for a, b in zip(ys, ys[1:])):
            raise ValueError("tree bases must be strictly increasing along the row")

    def __len__(self) -> int:
        return len(self.trees)

    def __iter__(self):
        return iter(self.trees)

    @property
    def ids(self) -> List[int]:
        return [t.id for t in self.trees]

    def by_id(self, tree_id: int) -> Tree:
        for tree in self.trees:
            if tree.id == tree_id:
                return tree
        raise KeyError(f"no tree with id {tree_id}")

    def axis_points(self):
        """All main-axis points stacked, with the owning tree id of each"""
        if not self.trees:
            return np.zeros((0, 3)), np.zeros(0, dtype=np.int64)
        points = np.concatenate([t.axis for t in self.trees])
        owners = np.concatenate([np.full(len(t.axis), t.id, dtype=np.int64) for t in self.trees])
        return points, owners
