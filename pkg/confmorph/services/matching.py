"""
Landmark matching between disk parameterizations.

The disk matching is ``f_D = m ∘ f_g``: a thin-plate displacement
``f_g(x) = x + sum_j w_j U(|x - c_j|) alpha_j`` followed by the optimal Möbius
map ``m``. The plate is fitted on the Möbius-preimages of the target
landmarks, with weights ``lambda_b / lambda_a`` sampled at the grid centers.
"""

import math

import numpy as np
from scipy import linalg, optimize

from confmorph.misc.exceptions import (
    LandmarkCountError,
    OutsideDiskError,
    RankDeficientError,
    ThinPlateParameterError,
)
from confmorph.misc.logger import logger
from confmorph.models.matching import (
    DISK_SLACK,
    DiskMatching,
    LandmarkSet,
    MatchingComparison,
    MatchingEnergies,
    ThinPlateField,
    grid_centers,
)
from confmorph.models.mesh import FloatArray, IntArray, TriangleMesh
from confmorph.models.parameterization import DiskParameterization, MobiusDisk
from confmorph.services.locate import TriangleLocator
from confmorph.services.mobius import mobius_disk_apply

START_RADII = np.linspace(-0.6, 0.6, 5)
START_ANGLES = np.linspace(-np.pi, np.pi, 8, endpoint=False)
ESCALATION_FACTOR = 10.0
ESCALATION_ROUNDS = 12


def landmark_set(
    pa: DiskParameterization, pb: DiskParameterization, source_index: IntArray, target_index: IntArray
) -> LandmarkSet:
    """
    Landmarks given by vertex indices on the two meshes.

    Raises:
        LandmarkCountError: If fewer than 3 pairs are given
    """
    source_index = np.asarray(source_index, dtype=np.int64)
    target_index = np.asarray(target_index, dtype=np.int64)
    if len(source_index) != len(target_index) or len(source_index) < 3:
        raise LandmarkCountError(min(len(source_index), len(target_index)), 3, "match_surfaces")
    for index, mesh in ((source_index, pa.mesh), (target_index, pb.mesh)):
        if index.min() < 0 or index.max() >= mesh.n_vertices:
            raise LandmarkCountError(len(index), 3, "match_surfaces")
    return LandmarkSet(
        source_index,
        target_index,
        pa.mesh.positions[source_index],
        pb.mesh.positions[target_index],
        pa.image[source_index],
        pb.image[target_index],
    )


def _wrap(theta: float) -> float:
    """Wrap into (-pi, pi]."""
    return math.pi - (math.pi - theta) % (2.0 * math.pi)


def _unpack(x: FloatArray) -> MobiusDisk:
    b = complex(x[0], x[1])
    return MobiusDisk(b / math.sqrt(1.0 + abs(b) ** 2), _wrap(float(x[2])))


def _pack(a: complex, theta: float) -> FloatArray:
    b = a / math.sqrt(1.0 - abs(a) ** 2)
    return np.array([b.real, b.imag, theta])


def mobius_objective(m: MobiusDisk, lm: LandmarkSet) -> float:
    diff = mobius_disk_apply(m, lm.source_disk) - lm.target_disk
    return float(np.sum(diff * diff))


def optimal_mobius(lm: LandmarkSet) -> MobiusDisk:
    """
    Disk Möbius map minimizing the squared landmark mismatch.

    Levenberg-Marquardt runs from the identity and from a 5 x 5 grid of centers
    times 8 rotations; the parameterization a = b / sqrt(1 + |b|^2) keeps every
    iterate inside the disk. The best optimum wins, earlier starts on ties.

    Raises:
        LandmarkCountError: If fewer than 2 landmarks are given
    """
    if len(lm) < 2:
        raise LandmarkCountError(len(lm), 2, "optimal_mobius")
    z = lm.source_disk[:, 0] + 1j * lm.source_disk[:, 1]
    w = lm.target_disk[:, 0] + 1j * lm.target_disk[:, 1]

    def residuals(x: FloatArray) -> FloatArray:
        b = complex(x[0], x[1])
        a = b / math.sqrt(1.0 + abs(b) ** 2)
        r = np.exp(1j * x[2]) * (z - a) / (1.0 - np.conj(a) * z) - w
        return np.concatenate((r.real, r.imag))

    starts = [_pack(0j, 0.0)]
    starts += [_pack(complex(ax, ay), th) for ax in START_RADII for ay in START_RADII for th in START_ANGLES if ax * ax + ay * ay < 0.81]

    best, best_cost = MobiusDisk.identity(), float("inf")
    for x0 in starts:
        result = optimize.least_squares(residuals, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
        cost = float(np.sum(result.fun**2))
        if cost < best_cost:
            best, best_cost = _unpack(result.x), cost
        if best_cost <= 1e-28:
            break
    logger.debug("Optimal Möbius a=%s theta=%.9f objective %.3e", best.a, best.theta, best_cost)
    return best


def thin_plate_fit(
    lm: LandmarkSet,
    n: int,
    epsilon: float,
    weights: FloatArray | None = None,
    targets: FloatArray | None = None,
    *,
    regularize: bool = False,
) -> ThinPlateField:
    """
    Fit plate coefficients so that S alpha ~ targets at the source landmarks.

    ``targets`` defaults to the landmarks' target disk points. When n^2 <= m the
    least-squares problem is solved by a column-pivoted QR factorization; when
    n^2 > m (or ``regularize`` is set) the Tikhonov system
    (eps I + S^T S) alpha = S^T q is solved instead.

    Raises:
        LandmarkCountError: If no landmarks are given
        ThinPlateParameterError: If n < 2 or epsilon < 0
        RankDeficientError: If S is rank deficient and epsilon = 0
    """
    if len(lm) < 1:
        raise LandmarkCountError(len(lm), 1, "thin_plate_fit")
    if n < 2 or epsilon < 0:
        raise ThinPlateParameterError(n, epsilon)
    centers = grid_centers(n)
    w = np.ones(n * n) if weights is None else np.asarray(weights, dtype=np.float64)
    q = lm.target_disk if targets is None else np.asarray(targets, dtype=np.float64)
    field = ThinPlateField(n, centers, np.zeros((n * n, 2)), w, epsilon)
    s = field.design(lm.source_disk)
    m, columns = s.shape

    method = "tikhonov"
    if columns <= m and not regularize:
        qmat, r, perm = linalg.qr(s, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        rank = int(np.sum(diag > max(m, columns) * np.finfo(np.float64).eps * diag[0])) if diag[0] > 0 else 0
        if rank == columns:
            alpha = np.empty((columns, 2))
            alpha[perm] = linalg.solve_triangular(r, qmat.T @ q)
            method = "qr"
        elif epsilon == 0.0:
            raise RankDeficientError(rank, columns)
    elif epsilon == 0.0:
        raise RankDeficientError(min(m, columns), columns)
    if method == "tikhonov":
        alpha = linalg.solve(epsilon * np.eye(columns) + s.T @ s, s.T @ q, assume_a="pos")

    residual = float(np.linalg.norm(s @ alpha - q))
    logger.debug("Thin plate n=%d eps=%.1e via %s: residual %.3e", n, epsilon, method, residual)
    return ThinPlateField(n, centers, alpha, w, epsilon, residual, method)


def matching_eval(dm: DiskMatching, x: FloatArray) -> FloatArray:
    """
    Evaluate the plate displacement, then the Möbius map.

    Images leaving the disk by at most 1e-6 are pulled back radially.

    Raises:
        OutsideDiskError: If an image lies farther outside the unit disk
    """
    x = np.asarray(x, dtype=np.float64)
    pts = np.atleast_2d(x)
    moved = pts + dm.plate.displacement(pts)
    out = mobius_disk_apply(dm.mobius, moved)
    radius = np.linalg.norm(out, axis=1)
    outside = np.flatnonzero(radius > 1.0 + DISK_SLACK)
    if len(outside):
        raise OutsideDiskError(float(radius[outside[0]]), int(outside[0]))
    over = radius > 1.0
    out[over] /= radius[over, np.newaxis]
    return out[0] if x.ndim == 1 else out


def center_weights(pa: DiskParameterization, pb: DiskParameterization, centers: FloatArray) -> FloatArray:
    """lambda_b / lambda_a at each center; 1 where a center is outside either disk image."""
    weights = np.ones(len(centers))
    locators = (TriangleLocator(pa.image, pa.mesh.faces), TriangleLocator(pb.image, pb.mesh.faces))
    for j, c in enumerate(centers):
        if not all(loc.contains(c) for loc in locators):
            continue
        lam_a = locators[0].interpolate(pa.lam, c[np.newaxis])[0]
        lam_b = locators[1].interpolate(pb.lam, c[np.newaxis])[0]
        weights[j] = lam_b / lam_a
    return weights


def mobius_only(m: MobiusDisk, n: int) -> DiskMatching:
    return DiskMatching(m, ThinPlateField.zero(n))


def matching_energies(
    f: DiskMatching,
    sa: TriangleMesh,
    sb: TriangleMesh,
    pa: DiskParameterization,
    pb: DiskParameterization,
    lm: LandmarkSet,
    quadrature: str = "midpoint",
    locator_b: TriangleLocator | None = None,
) -> MatchingEnergies:
    """
    Conformal, local and global matching energies.

    E_global sums |S_b(f_D(x)) - S_b(x)|^2 times parametric area over the source
    parametric triangles, sampling each at its barycenter ("midpoint") or at its
    three edge midpoints ("edge_midpoint").

    Raises:
        PointLocationError: If a matched point cannot be located on ``pb``
    """
    locator_b = locator_b or TriangleLocator(pb.image, pb.mesh.faces)
    matched = matching_eval(f, lm.source_disk)
    ratio = pb.lam[lm.target_index] / pa.lam[lm.source_index]
    e_d = float(np.sum(ratio * np.sum((matched - lm.target_disk) ** 2, axis=1)))

    lifted = locator_b.interpolate(sb.positions, matched, clamp=True, operation="matching_energies")
    e_loc = float(np.sum((lifted - lm.target_3d) ** 2))

    tri = pa.image[pa.mesh.faces]
    area = pa.mesh.face_areas(pa.image)
    if quadrature == "midpoint":
        samples = [tri.mean(axis=1)]
        weight = area
    elif quadrature == "edge_midpoint":
        samples = [0.5 * (tri[:, k] + tri[:, (k + 1) % 3]) for k in range(3)]
        weight = area / 3.0
    else:
        raise ValueError(f"unknown quadrature {quadrature!r}")
    e_global = 0.0
    for x in samples:
        here = locator_b.interpolate(sb.positions, x, clamp=True, operation="matching_energies")
        there = locator_b.interpolate(sb.positions, matching_eval(f, x), clamp=True, operation="matching_energies")
        e_global += float(np.sum(weight * np.sum((there - here) ** 2, axis=1)))
    return MatchingEnergies(e_d, e_loc, e_global)


def compare_matchings(
    sa: TriangleMesh,
    sb: TriangleMesh,
    pa: DiskParameterization,
    pb: DiskParameterization,
    lm: LandmarkSet,
    n: int = 5,
    epsilon: float = 1e-8,
    quadrature: str = "midpoint",
) -> MatchingComparison:
    """
    Fit the Möbius-only and the composite matching and score both.

    If any energy of the composite exceeds the Möbius-only value (or its images
    leave the disk) the plate is refitted with Tikhonov regularization, epsilon
    growing tenfold per round; after the last round the plate is dropped.
    """
    mobius = optimal_mobius(lm)
    locator_b = TriangleLocator(pb.image, pb.mesh.faces)
    omt = mobius_only(mobius, n)
    omt_energies = matching_energies(omt, sa, sb, pa, pb, lm, quadrature, locator_b)

    weights = center_weights(pa, pb, grid_centers(n))
    displacement = mobius_disk_apply(mobius.inverse(), lm.target_disk) - lm.source_disk
    eps = epsilon
    for round_ in range(ESCALATION_ROUNDS + 1):
        try:
            plate = thin_plate_fit(lm, n, eps, weights, displacement, regularize=round_ > 0)
            candidate = DiskMatching(mobius, plate)
            energies = matching_energies(candidate, sa, sb, pa, pb, lm, quadrature, locator_b)
        except (RankDeficientError, OutsideDiskError) as e:
            logger.debug("Plate fit rejected at eps=%.1e: %s", eps, e.message)
        else:
            if energies.dominated_by(omt_energies):
                logger.info(
                    "Matching energies OMT %s, OMGMF %s (eps %.1e, %d escalations)",
                    omt_energies.as_row(), energies.as_row(), eps, round_,
                )
                return MatchingComparison(omt, candidate, omt_energies, energies, round_)
        eps = max(eps, 1e-8) * ESCALATION_FACTOR
    logger.warning("Plate never lowered every energy, falling back to the Möbius-only matching")
    return MatchingComparison(omt, omt, omt_energies, omt_energies, ESCALATION_ROUNDS + 1)


def match_surfaces(
    sa: TriangleMesh,
    sb: TriangleMesh,
    pa: DiskParameterization,
    pb: DiskParameterization,
    lm: LandmarkSet,
    n: int = 5,
    epsilon: float = 1e-8,
) -> DiskMatching:
    """Composite matching whose energies never exceed those of the Möbius-only one."""
    return compare_matchings(sa, sb, pa, pb, lm, n, epsilon).omgmf
