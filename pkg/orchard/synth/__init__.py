"""
Procedural orchard scenes for testing and benchmarking
"""

from .scene import UNLABELED, LabeledCloud, SceneSpec, SyntheticScene, generate_scene, write_scene

__all__ = ["UNLABELED", "LabeledCloud", "SceneSpec", "SyntheticScene", "generate_scene", "write_scene"]
