"""shapeforge: shape optimization over a learned signed-distance latent space.

A small mesh corpus is distilled into a Lipschitz-bounded neural signed
distance field with one latent code per shape; a multi-objective genetic
search then explores the latent space for designs trading off analytic
proxy objectives (mass, stiffness, drag), extracting watertight meshes
along the way.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DivergenceError,
    EmptySurfaceError,
    InfeasibleDesignError,
    MeshError,
    ShapeForgeError,
    StageArtifactError,
    WatertightError,
)
from .geometry import (
    ScalarGrid,
    TriMesh,
    center_and_normalize,
    load_mesh,
    export_mesh,
    marching_cubes,
    mesh_volume,
    sample_sdf,
    validate_watertight,
)
from .neural import NetworkConfig, build_decoder, decoder_forward
from .training import TrainConfig, train, save_checkpoint, load_checkpoint
from .latent import LatentBank, SearchBounds, derive_bounds, interpolate
from .evolution import GaConfig, run_nsga2
from .objectives import ObjectiveSpec, build_evaluator, reconstruct_mesh
from .metrics import PointCloud, chamfer_distance, coverage, mmd, sample_surface
from .config import RunConfig, load_config

__all__ = [
    "__version__",
    "ShapeForgeError", "ConfigError", "MeshError", "WatertightError",
    "EmptySurfaceError", "StageArtifactError", "DivergenceError",
    "InfeasibleDesignError",
    "TriMesh", "ScalarGrid", "load_mesh", "export_mesh", "mesh_volume",
    "validate_watertight", "center_and_normalize", "marching_cubes",
    "sample_sdf",
    "NetworkConfig", "build_decoder", "decoder_forward",
    "TrainConfig", "train", "save_checkpoint", "load_checkpoint",
    "LatentBank", "SearchBounds", "derive_bounds", "interpolate",
    "GaConfig", "run_nsga2",
    "ObjectiveSpec", "build_evaluator", "reconstruct_mesh",
    "PointCloud", "chamfer_distance", "mmd", "coverage", "sample_surface",
    "RunConfig", "load_config",
]
