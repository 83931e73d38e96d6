"""Mesh handling, signed distances, iso-surface extraction, silhouettes."""

from .grid import ScalarGrid, cube_lattice_points, grid_from_values, sample_grid
from .marching import marching_cubes
from .mesh import (
    TriMesh,
    WatertightReport,
    center_and_normalize,
    export_mesh,
    load_mesh,
    mesh_volume,
    require_watertight,
    validate_watertight,
)
from .sdf import (
    SdfSampleSet,
    area_weighted_surface_points,
    load_samples,
    sample_sdf,
    save_samples,
    signed_distance,
    signed_distances,
    unsigned_distances,
)
from .silhouette import (
    frontal_projected_area,
    silhouette_occupancy,
    silhouette_second_moment,
)

__all__ = [
    "ScalarGrid",
    "SdfSampleSet",
    "TriMesh",
    "WatertightReport",
    "area_weighted_surface_points",
    "center_and_normalize",
    "cube_lattice_points",
    "export_mesh",
    "frontal_projected_area",
    "grid_from_values",
    "load_mesh",
    "load_samples",
    "marching_cubes",
    "mesh_volume",
    "require_watertight",
    "sample_grid",
    "sample_sdf",
    "save_samples",
    "signed_distance",
    "signed_distances",
    "silhouette_occupancy",
    "silhouette_second_moment",
    "unsigned_distances",
    "validate_watertight",
]
