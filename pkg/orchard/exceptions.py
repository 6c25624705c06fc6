#!/usr/bin/env python3
"""
Exception hierarchy for the orchard pipeline.

Every error carries an ``exit_code`` so the CLI can map failures to process
exit status without inspecting messages.
"""


class OrchardError(Exception):
    """Base class for all pipeline errors"""

    exit_code = 1

    def __init__(self, detail: str = ""):
        super().__init__(detail or self.__class__.__name__)
        self.detail = detail or self.__class__.__name__


class EmptyInput(OrchardError):
    """An operation received an empty cloud, grid or voxel set"""


class DegenerateLine(OrchardError):
    """Line anchors coincide"""


class DegenerateInput(OrchardError):
    """Too few or degenerate samples for a robust fit"""


class NotConnected(OrchardError):
    """Two skeleton voxels lie in different 26-connected components"""


class DegenerateMarker(OrchardError):
    """Reference chart patch centers are collinear"""


class MarkerNoiseTooHigh(OrchardError):
    """Observed chart patch spacing is too inconsistent to derive a scale"""


class EmptyRoi(OrchardError):
    """Region-of-interest crop removed every point"""


class NoTrellisFound(OrchardError):
    """No horizontal wire lines or no trellis plane could be estimated"""


class NoTrunkCandidates(OrchardError):
    """The ground histogram of the trellis slab has no qualifying peak"""


class EmptyTrees(OrchardError):
    """No tree point survived wire/pole removal, or no point carries a tree id"""


class AlignmentFailed(OrchardError):
    """ICP could not find enough correspondences"""


class ShapeError(OrchardError):
    """Arrays that must align have different lengths"""


class SpecError(OrchardError):
    """Invalid synthetic scene specification"""


class ConfigError(OrchardError):
    """Invalid pipeline configuration"""

    exit_code = 2


class ParseError(OrchardError):
    """Malformed PLY or sidecar file"""

    exit_code = 3
