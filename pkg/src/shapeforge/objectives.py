"""Objective evaluators: decode a genome to a mesh, then score it.

Every evaluator maps (genome, frozen decoder) to one scalar under a
minimization convention; maximize-direction objectives are negated
exactly once, here.  Mesh extraction failures surface as an infeasible
flag rather than sentinel numbers.  An external-command protocol lets a
real solver replace the built-in analytic proxies.
"""

from __future__ import annotations

import math
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    EmptySurfaceError,
    InfeasibleDesignError,
    MeshError,
    WatertightError,
)
from .geometry.grid import ScalarGrid, sample_grid
from .geometry.marching import marching_cubes
from .geometry.mesh import TriMesh, export_mesh, mesh_volume
from .geometry.silhouette import frontal_projected_area, silhouette_second_moment
from .neural import DecoderParams, decoder_forward

__all__ = [
    "ObjectiveSpec",
    "EvaluationContext",
    "decode_grid",
    "reconstruct_mesh",
    "stiffness_from_frequency",
    "mass_objective",
    "stiffness_proxy_objective",
    "drag_proxy_objective",
    "build_evaluator",
]

DEFAULT_EXTRACTION_RESOLUTION = 64
SILHOUETTE_RESOLUTION = 256

_KINDS = ("mass", "stiffness_proxy", "drag_proxy", "external")
_DIRECTIONS = ("minimize", "maximize")


def decode_grid(
    params: DecoderParams, z: np.ndarray, resolution: int, batch: int = 65536
) -> ScalarGrid:
    """Evaluate the decoder for one latent code on the full cubic lattice
    over [-1, 1]^3."""
    z = np.asarray(z, dtype=np.float64).reshape(-1)

    def fn(points):
        return decoder_forward(params, points, np.tile(z, (points.shape[0], 1)))

    return sample_grid(fn, resolution, batch=batch)


def reconstruct_mesh(
    params: DecoderParams, z: np.ndarray, resolution: int, iso: float = 0.0
) -> TriMesh:
    """Decode a latent code and extract its zero iso-surface as a
    watertight triangle mesh."""
    return marching_cubes(decode_grid(params, z, resolution), iso=iso)


def stiffness_from_frequency(mass: float, frequency: float) -> float:
    """Stiffness of an equivalent single-mass oscillator: mass times the
    squared angular frequency, k = m (2 pi f)^2."""
    if mass <= 0:
        raise ValueError(f"mass must be > 0, got {mass}")
    if frequency < 0:
        raise ValueError(f"frequency must be >= 0, got {frequency}")
    omega = 2.0 * math.pi * frequency
    return mass * omega * omega


@dataclass
class ObjectiveSpec:
    """One named objective: which evaluator to run, which direction the
    user cares about, and evaluator parameters."""

    name: str
    kind: str
    direction: str = "minimize"
    density: float = 1.0
    axis: str = "x"
    resolution: int | None = None  # None -> context default
    command: list = field(default_factory=list)  # external evaluator argv
    line: int = 0  # which stdout line the external objective reads

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown objective kind {self.kind!r}; "
                              f"expected one of {_KINDS}")
        if self.direction not in _DIRECTIONS:
            raise ConfigError(f"direction must be one of {_DIRECTIONS}, "
                              f"got {self.direction!r}")
        if self.resolution is not None and self.resolution < 8:
            raise ConfigError(f"extraction resolution must be >= 8, "
                              f"got {self.resolution}")
        if self.density < 0:
            raise ConfigError(f"density must be >= 0, got {self.density}")
        if self.kind == "external" and not self.command:
            raise ConfigError("external objective needs a command")
        if self.line < 0:
            raise ConfigError(f"line must be >= 0, got {self.line}")


class EvaluationContext:
    """Frozen decoder plus memoized per-genome mesh extraction and
    external-command invocation."""

    def __init__(self, params: DecoderParams, resolution: int = DEFAULT_EXTRACTION_RESOLUTION):
        if resolution < 8:
            raise ConfigError(f"extraction resolution must be >= 8, got {resolution}")
        self.params = params
        self.resolution = resolution
        self._mesh_cache: dict = {}
        self._external_cache: dict = {}

    def mesh_for(self, genome: np.ndarray, resolution: int | None = None) -> TriMesh:
        """Reconstruct (or fetch the cached) mesh for a genome.  Raises
        InfeasibleDesignError when extraction fails."""
        genome = np.asarray(genome, dtype=np.float64).reshape(-1)
        res = self.resolution if resolution is None else resolution
        key = (genome.tobytes(), res)
        if key not in self._mesh_cache:
            try:
                mesh = reconstruct_mesh(self.params, genome, res)
            except (EmptySurfaceError, WatertightError, MeshError) as exc:
                self._mesh_cache[key] = exc
            else:
                self._mesh_cache[key] = mesh
        hit = self._mesh_cache[key]
        if isinstance(hit, Exception):
            raise InfeasibleDesignError(str(hit)) from hit
        return hit

    def external_lines(self, command: list, genome: np.ndarray, mesh: TriMesh) -> list:
        """Write the candidate mesh to a temp OBJ, run ``command`` with the
        path appended, and return stdout parsed as one float per line.
        Nonzero exit or unparseable output marks the genome infeasible."""
        genome = np.asarray(genome, dtype=np.float64).reshape(-1)
        key = (tuple(command), genome.tobytes())
        if key not in self._external_cache:
            self._external_cache[key] = self._run_external(command, mesh)
        hit = self._external_cache[key]
        if isinstance(hit, Exception):
            raise InfeasibleDesignError(str(hit)) from hit
        return hit

    @staticmethod
    def _run_external(command: list, mesh: TriMesh):
        with tempfile.TemporaryDirectory() as tmp:
            obj_path = Path(tmp) / "candidate.obj"
            export_mesh(mesh, obj_path)
            try:
                proc = subprocess.run(
                    list(command) + [str(obj_path)],
                    capture_output=True,
                    text=True,
                    check=False,
                )
            except OSError as exc:
                return InfeasibleDesignError(f"external evaluator failed to start: {exc}")
        if proc.returncode != 0:
            return InfeasibleDesignError(
                f"external evaluator exited {proc.returncode}: {proc.stderr.strip()}"
            )
        try:
            values = [float(line) for line in proc.stdout.splitlines() if line.strip()]
        except ValueError:
            return InfeasibleDesignError(
                f"external evaluator output is not numeric: {proc.stdout!r}"
            )
        if not values:
            return InfeasibleDesignError("external evaluator produced no output")
        return values


def _positive_volume(mesh: TriMesh) -> float:
    volume = mesh_volume(mesh)
    if volume <= 0:
        raise InfeasibleDesignError(f"non-positive enclosed volume {volume}")
    return volume


def mass_objective(mesh: TriMesh, density: float) -> float:
    """Mass of the solid: density times enclosed volume."""
    return density * _positive_volume(mesh)


def stiffness_proxy_objective(
    mesh: TriMesh, density: float = 1.0, axis: str = "x"
) -> float:
    """Dimensionless stiffness stand-in: treat the shape as a single-mass
    oscillator whose frequency grows with the spread of its silhouette,
    f = sqrt(second_moment / volume), and return m (2 pi f)^2.  Scaling a
    shape by s scales this proxy by s^4."""
    volume = _positive_volume(mesh)
    moment = silhouette_second_moment(mesh, axis, SILHOUETTE_RESOLUTION)
    frequency = math.sqrt(moment / volume)
    return stiffness_from_frequency(density * volume, frequency)


def drag_proxy_objective(mesh: TriMesh, axis: str = "x") -> float:
    """Frontal projected area along the travel axis; smaller silhouette,
    lower drag."""
    return frontal_projected_area(mesh, axis, SILHOUETTE_RESOLUTION)


def _raw_value(spec: ObjectiveSpec, context: EvaluationContext, genome) -> float:
    mesh = context.mesh_for(genome, spec.resolution)
    if spec.kind == "mass":
        return mass_objective(mesh, spec.density)
    if spec.kind == "stiffness_proxy":
        return stiffness_proxy_objective(mesh, spec.density, spec.axis)
    if spec.kind == "drag_proxy":
        return drag_proxy_objective(mesh, spec.axis)
    lines = context.external_lines(spec.command, genome, mesh)
    if spec.line >= len(lines):
        raise InfeasibleDesignError(
            f"external evaluator wrote {len(lines)} values, "
            f"objective {spec.name!r} wants line {spec.line}"
        )
    return lines[spec.line]


def build_evaluator(
    params: DecoderParams,
    specs: list,
    resolution: int = DEFAULT_EXTRACTION_RESOLUTION,
):
    """Bundle objective specs into one genome evaluator suitable for the
    GA loop: genome -> (objective vector, feasible).  Maximize-direction
    values are negated here, once, so the GA always minimizes."""
    if not specs:
        raise ConfigError("at least one objective is required")
    context = EvaluationContext(params, resolution)

    def evaluate(genome):
        values = []
        try:
            for spec in specs:
                raw = _raw_value(spec, context, genome)
                values.append(-raw if spec.direction == "maximize" else raw)
        except InfeasibleDesignError:
            return None, False
        return np.asarray(values, dtype=np.float64), True

    evaluate.context = context
    evaluate.specs = list(specs)
    return evaluate
