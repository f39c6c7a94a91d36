"""
Pipeline factory: from a run description to keyframes, matchings, frames,
registrations and the signature homotopy.

Every stage is computed lazily and at most once, so ``match`` and ``frame``
only pay for what they report while ``morph`` walks the whole chain.
"""

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np

from confmorph.config import Config, KeyframeConfig, PipelineConfig, QiemSettings, create_config
from confmorph.misc.logger import logger
from confmorph.models.frame import GeodesicFrame
from confmorph.models.matching import DiskMatching, LandmarkSet, MatchingComparison
from confmorph.models.mesh import FloatArray, TriangleMesh
from confmorph.models.parameterization import DiskParameterization
from confmorph.models.signature import RegistrationMap, SurfaceSignature
from confmorph.services.conformal import riemann_disk_map
from confmorph.services.geodesic import build_frame
from confmorph.services.homotopy import SignatureHomotopy
from confmorph.services.matching import compare_matchings, landmark_set
from confmorph.services.mesh_io import load_mesh, load_parameterization, read_features, read_landmark_pairs
from confmorph.services.operators import surface_signature
from confmorph.services.registration import boundary_correspondence, build_registration, transfer_positions

Variant = Literal["omgmf", "omt"]


@dataclass(frozen=True, eq=False)
class Keyframe:
    time: float
    mesh: TriangleMesh
    param: DiskParameterization
    signature: SurfaceSignature


def load_keyframe(config: KeyframeConfig, qiem: QiemSettings | None = None) -> Keyframe:
    """Read a keyframe mesh and parameterize it, unless a ``u,v,lambda`` table is given."""
    mesh = load_mesh(config.mesh)
    if config.param is not None:
        param = load_parameterization(mesh, config.param)
        logger.info("Keyframe t=%.4f: parameterization read from %s", config.time, config.param)
    else:
        param = riemann_disk_map(mesh, qiem)
    return Keyframe(config.time, mesh, param, surface_signature(mesh, param))


class MorphPipeline:
    """
    Stages of a morphing run over the keyframes of ``config``.

    Pair ``i`` links keyframe ``i`` to ``i + 1``. The unified mesh is the
    first keyframe's triangulation.
    """

    def __init__(self, config: PipelineConfig) -> None:
        self.config = config
        self._registrations: dict[Variant, list[RegistrationMap]] = {}
        self._homotopies: dict[Variant, SignatureHomotopy] = {}

    @cached_property
    def keyframes(self) -> list[Keyframe]:
        return [load_keyframe(k, self.config.qiem) for k in self.config.keyframes]

    @property
    def unified(self) -> DiskParameterization:
        return self.keyframes[0].param

    @property
    def times(self) -> FloatArray:
        return np.array(self.config.times, dtype=np.float64)

    @cached_property
    def landmarks(self) -> list[LandmarkSet]:
        out = []
        for i, pair in enumerate(self.config.pairs):
            source, target = read_landmark_pairs(pair.landmarks)
            out.append(landmark_set(self.keyframes[i].param, self.keyframes[i + 1].param, source, target))
        return out

    @cached_property
    def comparisons(self) -> list[MatchingComparison]:
        settings = self.config.matching
        out = []
        for i, lm in enumerate(self.landmarks):
            a, b = self.keyframes[i], self.keyframes[i + 1]
            out.append(
                compare_matchings(a.mesh, b.mesh, a.param, b.param, lm, settings.grid, settings.epsilon, settings.quadrature)
            )
        return out

    @cached_property
    def frames(self) -> list[GeodesicFrame]:
        out = []
        for i, pair in enumerate(self.config.pairs):
            features, topology = read_features(pair.features)
            source = self.keyframes[i]
            out.append(build_frame(source.mesh, source.param, features, topology, self.config.geodesic))
        return out

    def matching(self, i: int, variant: Variant = "omgmf") -> DiskMatching:
        comparison = self.comparisons[i]
        return comparison.omgmf if variant == "omgmf" else comparison.omt

    def registrations(self, variant: Variant = "omgmf") -> list[RegistrationMap]:
        if variant not in self._registrations:
            regs = []
            for i, lm in enumerate(self.landmarks):
                a, b = self.keyframes[i], self.keyframes[i + 1]
                f = self.matching(i, variant)
                boundary = boundary_correspondence(f, a.param, b.param, lm)
                regs.append(build_registration(a.param, b.param, self.frames[i], f, boundary))
            self._registrations[variant] = regs
        return self._registrations[variant]

    def homotopy(self, variant: Variant = "omgmf") -> SignatureHomotopy:
        if variant not in self._homotopies:
            logger.info("Building the %s homotopy", variant.upper())
            self._homotopies[variant] = SignatureHomotopy(
                self.times,
                [k.signature for k in self.keyframes],
                [k.param for k in self.keyframes],
                self.registrations(variant),
            )
        return self._homotopies[variant]

    def keyframe_normals(self, variant: Variant = "omgmf") -> list[FloatArray]:
        """Vertex normals of every keyframe resampled on the unified mesh."""
        homotopy = self.homotopy(variant)
        unified = self.unified.mesh
        normals = [unified.vertex_normals()]
        for i, (reg, keyframe) in enumerate(zip(self.registrations(variant), self.keyframes[1:], strict=True), start=1):
            positions = transfer_positions(reg, keyframe.mesh.positions, keyframe.param, homotopy.images[i])
            normals.append(unified.vertex_normals(positions))
        return normals

    def nearest_keyframe(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))


def open_pipeline(config_path: Path) -> tuple[Config, MorphPipeline]:
    """
    Load the environment settings and the run at ``config_path``.

    Raises:
        ConfigurationError: If the document is missing, invalid or names missing files
    """
    config = create_config(config_path)
    assert config.pipeline is not None
    return config, MorphPipeline(config.pipeline)
