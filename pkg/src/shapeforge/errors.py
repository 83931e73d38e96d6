"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data/mesh/artifact problems with 3, numeric divergence with 4.
"""


class ShapeForgeError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(ShapeForgeError):
    """Invalid, unknown, or missing configuration keys/values."""


class MeshError(ShapeForgeError):
    """Unparseable, empty, or degenerate mesh data."""


class WatertightError(ShapeForgeError):
    """An operation required a closed, consistently oriented mesh."""


class EmptySurfaceError(ShapeForgeError):
    """Iso-surface extraction found no zero crossing."""


class StageArtifactError(ShapeForgeError):
    """A pipeline stage is missing its inputs or found an incompatible
    artifact format version."""


class DivergenceError(ShapeForgeError):
    """Training lost numeric stability (non-finite loss)."""

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class InfeasibleDesignError(ShapeForgeError):
    """A candidate genome could not be turned into a valid design."""
