"""Design objectives: mass, the oscillator stiffness stand-in, the drag
silhouette, the external-command escape hatch, and the genome evaluator
the search loop consumes."""

import math
import sys

import numpy as np
import pytest

from shapeforge.errors import ConfigError, EmptySurfaceError, InfeasibleDesignError
from shapeforge.geometry.mesh import TriMesh, mesh_volume
from shapeforge.objectives import (
    EvaluationContext,
    ObjectiveSpec,
    build_evaluator,
    decode_grid,
    drag_proxy_objective,
    mass_objective,
    reconstruct_mesh,
    stiffness_from_frequency,
    stiffness_proxy_objective,
)
from shapeforge.procedural import box, icosphere


def scaled(mesh: TriMesh, s: float) -> TriMesh:
    return TriMesh(vertices=mesh.vertices * s, faces=mesh.faces)


class TestStiffnessFromFrequency:
    def test_unit_mass_unit_frequency(self):
        assert stiffness_from_frequency(1.0, 1.0) == pytest.approx(
            4.0 * math.pi**2, rel=1e-15
        )

    def test_quadratic_in_frequency(self):
        base = stiffness_from_frequency(2.0, 3.0)
        assert stiffness_from_frequency(2.0, 6.0) == pytest.approx(4.0 * base)

    def test_linear_in_mass(self):
        base = stiffness_from_frequency(1.0, 5.0)
        assert stiffness_from_frequency(3.0, 5.0) == pytest.approx(3.0 * base)

    def test_nonpositive_mass_rejected(self):
        with pytest.raises(ValueError, match="mass"):
            stiffness_from_frequency(0.0, 1.0)

    def test_negative_frequency_rejected(self):
        with pytest.raises(ValueError, match="frequency"):
            stiffness_from_frequency(1.0, -1.0)


class TestMassObjective:
    def test_density_times_volume(self):
        mesh = box(half_x=0.3, half_y=0.4, half_z=0.5)
        want = 2.5 * (0.6 * 0.8 * 1.0)
        assert mass_objective(mesh, density=2.5) == pytest.approx(want, rel=1e-12)

    def test_unit_density_is_volume(self):
        mesh = icosphere(radius=0.5, subdivisions=3)
        assert mass_objective(mesh, 1.0) == pytest.approx(mesh_volume(mesh))

    def test_inverted_mesh_is_infeasible(self):
        mesh = box(half_x=0.3, half_y=0.3, half_z=0.3)
        flipped = TriMesh(vertices=mesh.vertices, faces=mesh.faces[:, ::-1])
        with pytest.raises(InfeasibleDesignError, match="volume"):
            mass_objective(flipped, 1.0)


class TestStiffnessProxy:
    def test_linear_in_density(self):
        mesh = box(half_x=0.3, half_y=0.4, half_z=0.5)
        k1 = stiffness_proxy_objective(mesh, density=1.0, axis="z")
        k2 = stiffness_proxy_objective(mesh, density=2.0, axis="z")
        assert k2 == pytest.approx(2.0 * k1, rel=1e-12)

    def test_fourth_power_scaling(self):
        mesh = box(half_x=0.2, half_y=0.3, half_z=0.4)
        k1 = stiffness_proxy_objective(mesh, axis="z")
        k2 = stiffness_proxy_objective(scaled(mesh, 1.5), axis="z")
        assert k2 / k1 == pytest.approx(1.5**4, rel=0.03)

    def test_spread_beats_compact_at_equal_volume(self):
        # same enclosed volume, but the material farther from the axis
        # spins up a higher oscillation frequency
        compact = box(half_x=0.2, half_y=0.2, half_z=0.45)
        spread = box(half_x=0.6, half_y=0.6, half_z=0.05)
        k_c = stiffness_proxy_objective(compact, axis="z")
        k_s = stiffness_proxy_objective(spread, axis="z")
        assert mesh_volume(compact) == pytest.approx(mesh_volume(spread), rel=1e-12)
        assert k_s > k_c

    def test_matches_oscillator_formula(self):
        mesh = box(half_x=0.3, half_y=0.3, half_z=0.3)
        from shapeforge.geometry.silhouette import silhouette_second_moment

        volume = mesh_volume(mesh)
        moment = silhouette_second_moment(mesh, "x", 256)
        freq = math.sqrt(moment / volume)
        want = stiffness_from_frequency(volume, freq)
        assert stiffness_proxy_objective(mesh, 1.0, "x") == pytest.approx(want)


class TestDragProxy:
    def test_axis_ordering_on_anisotropic_box(self):
        mesh = box(half_x=0.2, half_y=0.3, half_z=0.5)
        area_x = drag_proxy_objective(mesh, "x")
        area_y = drag_proxy_objective(mesh, "y")
        area_z = drag_proxy_objective(mesh, "z")
        assert area_x == pytest.approx(0.6 * 1.0, rel=0.02)
        assert area_y == pytest.approx(0.4 * 1.0, rel=0.02)
        assert area_z == pytest.approx(0.4 * 0.6, rel=0.02)
        assert area_x > area_y > area_z

    def test_sphere_presents_more_than_box_of_equal_volume(self):
        # equal enclosed volume: the circular silhouette pi r^2 beats the
        # square face (4/3 pi r^3 = a^3 puts pi r^2 / a^2 at about 1.21)
        sphere = icosphere(radius=(3.0 / (4.0 * math.pi)) ** (1.0 / 3.0),
                           subdivisions=3)
        cube = box(half_x=0.5, half_y=0.5, half_z=0.5)
        assert mesh_volume(sphere) == pytest.approx(mesh_volume(cube), rel=0.01)
        for axis in ("x", "y", "z"):
            assert drag_proxy_objective(sphere, axis) > drag_proxy_objective(
                cube, axis
            )


class TestObjectiveSpec:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError, match="kind"):
            ObjectiveSpec(name="m", kind="weight")

    def test_bad_direction_rejected(self):
        with pytest.raises(ConfigError, match="direction"):
            ObjectiveSpec(name="m", kind="mass", direction="up")

    def test_low_resolution_rejected(self):
        with pytest.raises(ConfigError, match="resolution"):
            ObjectiveSpec(name="m", kind="mass", resolution=4)

    def test_negative_density_rejected(self):
        with pytest.raises(ConfigError, match="density"):
            ObjectiveSpec(name="m", kind="mass", density=-1.0)

    def test_external_requires_command(self):
        with pytest.raises(ConfigError, match="command"):
            ObjectiveSpec(name="e", kind="external")

    def test_negative_line_rejected(self):
        with pytest.raises(ConfigError, match="line"):
            ObjectiveSpec(name="e", kind="external", command=["true"], line=-1)


@pytest.fixture()
def box_context(monkeypatch, toy_train_result):
    """Evaluation context whose mesh extraction is replaced by an analytic
    box scaled by the first gene, so objective plumbing can be tested
    without waiting on a long training run."""

    def fake_reconstruct(params, z, resolution, iso=0.0):
        s = float(np.asarray(z).reshape(-1)[0])
        if s <= 0:
            raise EmptySurfaceError("no surface for non-positive scale")
        return box(half_x=0.3 * s, half_y=0.3 * s, half_z=0.3 * s)

    monkeypatch.setattr("shapeforge.objectives.reconstruct_mesh", fake_reconstruct)
    return toy_train_result.params


class TestBuildEvaluator:
    def test_requires_objectives(self, box_context):
        with pytest.raises(ConfigError, match="objective"):
            build_evaluator(box_context, [])

    def test_minimize_returns_raw_maximize_negates(self, box_context):
        spec_min = ObjectiveSpec(name="m", kind="mass", direction="minimize")
        spec_max = ObjectiveSpec(name="m", kind="mass", direction="maximize")
        genome = np.array([1.0])
        v_min, ok1 = build_evaluator(box_context, [spec_min])(genome)
        v_max, ok2 = build_evaluator(box_context, [spec_max])(genome)
        assert ok1 and ok2
        assert v_min[0] == pytest.approx(0.6**3, rel=1e-12)
        assert v_max[0] == pytest.approx(-v_min[0], rel=1e-12)

    def test_objective_vector_order_matches_specs(self, box_context):
        specs = [
            ObjectiveSpec(name="m", kind="mass"),
            ObjectiveSpec(name="a", kind="drag_proxy", axis="z"),
        ]
        values, ok = build_evaluator(box_context, specs)(np.array([1.0]))
        assert ok
        assert values.shape == (2,)
        assert values[0] == pytest.approx(0.216, rel=1e-6)
        assert values[1] == pytest.approx(0.36, rel=0.04)

    def test_extraction_failure_marks_infeasible(self, box_context):
        spec = ObjectiveSpec(name="m", kind="mass")
        values, ok = build_evaluator(box_context, [spec])(np.array([-1.0]))
        assert values is None and not ok

    def test_mesh_cache_returns_same_object(self, box_context):
        evaluate = build_evaluator(box_context, [ObjectiveSpec(name="m", kind="mass")])
        genome = np.array([1.0])
        first = evaluate.context.mesh_for(genome)
        second = evaluate.context.mesh_for(genome)
        assert first is second

    def test_low_context_resolution_rejected(self, box_context):
        with pytest.raises(ConfigError, match="resolution"):
            EvaluationContext(box_context, resolution=4)


class TestExternalObjective:
    def _spec(self, script, line=0):
        return ObjectiveSpec(
            name="ext",
            kind="external",
            command=[sys.executable, str(script)],
            line=line,
        )

    def test_reads_selected_stdout_line(self, box_context, tmp_path):
        script = tmp_path / "eval.py"
        script.write_text(
            "import sys\n"
            "n_vertices = sum(1 for l in open(sys.argv[1]) if l.startswith('v '))\n"
            "print(n_vertices)\nprint(2.5)\n"
        )
        evaluate = build_evaluator(box_context, [self._spec(script, line=1)])
        values, ok = evaluate(np.array([1.0]))
        assert ok
        assert values[0] == 2.5

    def test_receives_candidate_mesh_path(self, box_context, tmp_path):
        script = tmp_path / "eval.py"
        script.write_text(
            "import sys\n"
            "n_vertices = sum(1 for l in open(sys.argv[1]) if l.startswith('v '))\n"
            "print(n_vertices)\n"
        )
        evaluate = build_evaluator(box_context, [self._spec(script)])
        values, ok = evaluate(np.array([1.0]))
        assert ok
        assert values[0] == 8  # the stand-in box writes eight corners

    def test_nonzero_exit_marks_infeasible(self, box_context, tmp_path):
        script = tmp_path / "eval.py"
        script.write_text("import sys\nsys.exit(3)\n")
        values, ok = build_evaluator(box_context, [self._spec(script)])(
            np.array([1.0])
        )
        assert values is None and not ok

    def test_non_numeric_output_marks_infeasible(self, box_context, tmp_path):
        script = tmp_path / "eval.py"
        script.write_text("print('not a number')\n")
        values, ok = build_evaluator(box_context, [self._spec(script)])(
            np.array([1.0])
        )
        assert values is None and not ok

    def test_missing_line_marks_infeasible(self, box_context, tmp_path):
        script = tmp_path / "eval.py"
        script.write_text("print(1.0)\n")
        values, ok = build_evaluator(box_context, [self._spec(script, line=4)])(
            np.array([1.0])
        )
        assert values is None and not ok

    def test_command_runs_once_per_genome(self, box_context, tmp_path):
        counter = tmp_path / "count"
        script = tmp_path / "eval.py"
        script.write_text(
            f"open({str(counter)!r}, 'a').write('x')\nprint(1.0)\n"
        )
        evaluate = build_evaluator(box_context, [self._spec(script)])
        genome = np.array([1.0])
        evaluate(genome)
        evaluate(genome)
        assert counter.read_text() == "x"


class TestDecodeAndReconstruct:
    def test_grid_matches_direct_forward(self, toy_train_result):
        from shapeforge.neural import decoder_forward

        params = toy_train_result.params
        z = toy_train_result.latents.get("sphere")
        grid = decode_grid(params, z, resolution=9)
        assert grid.values.shape == (9, 9, 9)
        center = grid.values[4, 4, 4]
        direct = decoder_forward(
            params, np.zeros((1, 3)), z.reshape(1, -1)
        )[0]
        assert center == pytest.approx(direct, abs=1e-12)

    def test_reconstruct_trained_shape_is_closed_surface(self, toy_train_result):
        from shapeforge.geometry.mesh import validate_watertight

        params = toy_train_result.params
        z = toy_train_result.latents.get("sphere")
        mesh = reconstruct_mesh(params, z, resolution=32)
        assert validate_watertight(mesh).is_watertight
        assert 0.1 < mesh_volume(mesh) < 4.0
