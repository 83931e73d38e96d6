"""The two kernel backends must agree: the compiled path is an accelerator,
never a different algorithm."""

import numpy as np
import pytest

from shapeforge import kernels
from shapeforge.kernels import numpy_impl
from shapeforge.procedural import icosphere, torus

numba_impl = pytest.importorskip(
    "shapeforge.kernels.numba_impl", reason="compiled backend unavailable"
)


@pytest.fixture(scope="module")
def tri_soup():
    mesh = torus(segments_major=24, segments_minor=12)
    a, b, c = mesh.corners()
    return (
        np.ascontiguousarray(a),
        np.ascontiguousarray(b),
        np.ascontiguousarray(c),
    )


@pytest.fixture(scope="module")
def queries():
    rng = np.random.default_rng(42)
    return rng.uniform(-1.2, 1.2, (257, 3))


class TestBackendEquivalence:
    def test_min_sqdist_to_triangles(self, tri_soup, queries):
        a, b, c = tri_soup
        got = numba_impl.min_sqdist_to_triangles(queries, a, b, c)
        want = numpy_impl.min_sqdist_to_triangles(queries, a, b, c)
        np.testing.assert_array_equal(got, want)

    def test_tri_sqdist_pairs(self, tri_soup, queries):
        a, b, c = tri_soup
        got = numba_impl.tri_sqdist_pairs(queries[:40], a, b, c)
        want = numpy_impl.tri_sqdist_pairs(queries[:40], a, b, c)
        np.testing.assert_array_equal(got, want)

    def test_ray_crossings(self, tri_soup, queries):
        a, b, c = tri_soup
        direction = np.array([0.5377, 0.8123, 0.2271])
        direction /= np.linalg.norm(direction)
        got = numba_impl.ray_crossings(queries, direction, a, b, c)
        want = numpy_impl.ray_crossings(queries, direction, a, b, c)
        np.testing.assert_array_equal(got, want)

    def test_winding_numbers(self, tri_soup, queries):
        a, b, c = tri_soup
        got = numba_impl.winding_numbers(queries, a, b, c)
        want = numpy_impl.winding_numbers(queries, a, b, c)
        # different summation order; agreement to tight float tolerance
        np.testing.assert_allclose(got, want, atol=1e-11)

    def test_nn_sqdist(self, queries):
        rng = np.random.default_rng(3)
        refs = rng.uniform(-1.0, 1.0, (311, 3))
        got = numba_impl.nn_sqdist(queries, refs)
        want = numpy_impl.nn_sqdist(queries, refs)
        np.testing.assert_array_equal(got, want)

    def test_nn_sqdist_grid_matches_exhaustive(self, queries):
        rng = np.random.default_rng(4)
        refs = rng.uniform(-1.0, 1.0, (2500, 3))
        for impl in (numba_impl, numpy_impl):
            grid = impl.nn_sqdist_grid(queries, refs)
            exact = impl.nn_sqdist(queries, refs)
            np.testing.assert_array_equal(grid, exact)

    def test_rasterize_triangles(self):
        rng = np.random.default_rng(5)
        tri2d = rng.uniform(-1.0, 1.0, (50, 3, 2))
        got = numba_impl.rasterize_triangles(tri2d, 96)
        want = numpy_impl.rasterize_triangles(tri2d, 96)
        np.testing.assert_array_equal(got, want)

    def test_emit_mc_triangles(self):
        rng = np.random.default_rng(6)
        case_ids = rng.integers(0, 256, 500)
        cell_edge_vid = rng.integers(0, 10_000, (500, 12))
        got = numba_impl.emit_mc_triangles(
            case_ids, cell_edge_vid, kernels.TRI_TABLE, kernels.TRI_COUNTS
        )
        want = numpy_impl.emit_mc_triangles(
            case_ids, cell_edge_vid, kernels.TRI_TABLE, kernels.TRI_COUNTS
        )
        np.testing.assert_array_equal(got, want)


class TestDispatch:
    def test_active_backend_exports_match(self):
        assert kernels.BACKEND in ("numba", "numpy")
        impl = numba_impl if kernels.NUMBA_ENABLED else numpy_impl
        assert kernels.nn_sqdist is impl.nn_sqdist

    def test_env_flag_forces_numpy(self):
        import subprocess
        import sys

        code = (
            "import shapeforge.kernels as k; "
            "print(k.BACKEND, k.NUMBA_ENABLED)"
        )
        out = subprocess.run(
            [sys.executable, "-c", code],
            env={"SHAPEFORGE_NUMBA": "0", "PATH": "/usr/bin:/bin"},
            capture_output=True,
            text=True,
            check=True,
        )
        assert out.stdout.split() == ["numpy", "False"]


class TestGeometryOnBothBackends:
    def test_sphere_distances_identical_across_backends(self):
        # end-to-end check through the mesh SDF path
        from shapeforge.geometry.sdf import signed_distances

        mesh = icosphere(radius=0.6, subdivisions=3)
        rng = np.random.default_rng(11)
        pts = rng.uniform(-1.0, 1.0, (100, 3))
        d = signed_distances(mesh, pts)
        expected = np.linalg.norm(pts, axis=1) - 0.6
        np.testing.assert_allclose(d, expected, atol=3e-3)
