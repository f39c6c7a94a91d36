"""
Pytest configuration and shared fixtures for confmorph tests.

Meshes are small analytic surfaces so that every numerical stage has an
exact answer to compare against.
"""

import logging
from collections.abc import Generator
from pathlib import Path

import numpy as np
import pytest

from confmorph.config import PipelineConfig, load_pipeline_config
from confmorph.misc.logger import logger
from confmorph.models.mesh import TriangleMesh
from confmorph.models.parameterization import DiskParameterization
from tests.fixtures.sample_meshes import (
    hemisphere_parameterization,
    identity_parameterization,
    ring_disk,
)
from tests.utils import write_run


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch: pytest.MonkeyPatch) -> Generator[None, None, None]:
    """Keep ``MORPH_*`` variables of the developer's shell out of the tests."""
    monkeypatch.delenv("MORPH_LOG", raising=False)
    monkeypatch.delenv("MORPH_JOBS", raising=False)
    level = logger.level
    yield
    logger.setLevel(level)


@pytest.fixture
def flat_disk() -> TriangleMesh:
    return ring_disk(6)


@pytest.fixture
def flat_param(flat_disk: TriangleMesh) -> DiskParameterization:
    return identity_parameterization(flat_disk)


@pytest.fixture(scope="session")
def hemi_param() -> DiskParameterization:
    """Lower unit hemisphere with its exact conformal disk map (8 rings)."""
    return hemisphere_parameterization(8)


@pytest.fixture(scope="session")
def hemi_mesh(hemi_param: DiskParameterization) -> TriangleMesh:
    return hemi_param.mesh


@pytest.fixture
def small_hemisphere() -> DiskParameterization:
    return hemisphere_parameterization(5)


@pytest.fixture
def self_morph_run(tmp_path: Path) -> Path:
    """
    A run morphing the 5-ring hemisphere into itself.

    Keyframes at t = 0 and 1 share the exact disk map, landmarks pair four
    interior vertices with themselves and one frame edge joins the center to
    a vertex of the third ring.
    """
    param = hemisphere_parameterization(5)
    interior = param.mesh.interior
    far = int(interior[np.argmax(np.linalg.norm(param.image[interior], axis=1))])
    landmarks = [(0, 0), (3, 3), (10, 10), (far, far)]
    return write_run(
        tmp_path,
        [param.mesh, param.mesh],
        [0.0, 1.0],
        landmarks,
        features=[0, 25],
        edges=[(0, 1)],
        params=[(param.image, param.lam), (param.image, param.lam)],
        frames=[0.0, 0.5, 1.0],
    )


@pytest.fixture
def pipeline_document(self_morph_run: Path) -> PipelineConfig:
    return load_pipeline_config(self_morph_run)


@pytest.fixture
def quiet_logs(caplog: pytest.LogCaptureFixture) -> pytest.LogCaptureFixture:
    caplog.set_level(logging.WARNING, logger="confmorph")
    return caplog
