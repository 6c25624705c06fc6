#!/usr/bin/env python3
"""
Writers for run artifacts: JSON documents, assignment CSV and debug images
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Union

import numpy as np
from pydantic import BaseModel

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

ASSIGNMENT_COLUMNS = ("apple_id", "x", "y", "z", "tree_id", "nn_distance_m")


def write_json(path: PathLike, document: Union[BaseModel, Any]) -> Path:
    """Sorted-key JSON; pydantic models are dumped with their aliases"""
    path = Path(path)
    if isinstance(document, BaseModel):
        document = document.model_dump(by_alias=True, mode="json")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_assignment_csv(path: PathLike, locations: np.ndarray, tree_ids, distances) -> Path:
    """One row per apple: id, location, assigned tree and nearest-point distance"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(ASSIGNMENT_COLUMNS)
        for i, (p, tree, d) in enumerate(zip(locations, tree_ids, distances)):
            writer.writerow([i, f"{p[0]:.6f}", f"{p[1]:.6f}", f"{p[2]:.6f}", int(tree), f"{d:.6f}"])
    return path


def write_pgm(path: PathLike, image: np.ndarray) -> Path:
    """8-bit binary PGM, linearly stretched to the image maximum"""
    path = Path(path)
    image = np.asarray(image, dtype=np.float64)
    peak = image.max() if image.size else 0.0
    scaled = np.zeros(image.shape, dtype=np.uint8) if peak <= 0 else (255 * image / peak).astype(np.uint8)
    height, width = scaled.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(scaled.tobytes())
    return path


def write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
