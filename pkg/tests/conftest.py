"""Shared fixtures: model surfaces, seeded points and an isolated environment."""

import numpy as np
import pytest

from CGM_Engine.surfaces.catalog import make_surface
from CGM_Engine.utils.threading_utils import SafeThreadExecutor
from models.surface_spec import SurfaceSpec

SEED = 20240917


@pytest.fixture(autouse=True)
def isolated_environment(tmp_path, monkeypatch):
    """Logs and reports go to the test's temporary directory."""
    monkeypatch.setenv("CGM_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.setenv("CGM_OUTPUT_DIR", str(tmp_path / "output_files"))
    monkeypatch.setenv("NO_COLOR", "1")
    monkeypatch.delenv("CGM_WORKERS", raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def executor():
    pool = SafeThreadExecutor(2)
    yield pool
    pool.shutdown(wait=True)


@pytest.fixture(scope="session")
def sphere():
    return make_surface(SurfaceSpec("sphere", radius=1.0))


@pytest.fixture(scope="session")
def torus():
    return make_surface(SurfaceSpec("torus", major_radius=2.0, minor_radius=1.0))


@pytest.fixture(scope="session")
def perturbed_sphere():
    return make_surface(SurfaceSpec("perturbed-sphere", radius=1.0, amplitude=0.05, perturbation="x1x2"))


@pytest.fixture(scope="session")
def patch_r2xs2():
    return make_surface(SurfaceSpec("patch-r2xs2", length=1.0))


@pytest.fixture(scope="session")
def patch_rxs3():
    return make_surface(SurfaceSpec("patch-rxs3", length=1.0))


def interior_points(chart, rng, count=6):
    """Seeded parameter points away from the chart edges."""
    return chart.sample(rng, count, 0.05)
