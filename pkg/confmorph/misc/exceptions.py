"""
Custom exceptions for confmorph.

Every error carries a machine-readable ``error_code`` and a ``details`` dict.
The details always name the pipeline ``module`` and the ``operation`` that
failed, so the command line can report where a run broke down.
"""

from typing import Any


class MorphError(Exception):
    """Base exception class for all confmorph errors."""

    module = "confmorph"

    def __init__(
        self,
        message: str,
        error_code: str | None = None,
        details: dict[str, Any] | None = None,
        operation: str | None = None,
    ) -> None:
        """
        Initialize confmorph error.

        Args:
            message: Human-readable error message
            error_code: Machine-readable error code
            details: Additional error details
            operation: Name of the operation that failed
        """
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details = {"module": self.module, "operation": operation, **(details or {})}

    @property
    def operation(self) -> str | None:
        return self.details.get("operation")


# --- mesh-core ---------------------------------------------------------------


class MeshError(MorphError):
    """Mesh representation and operator errors."""

    module = "mesh-core"


class MeshParseError(MeshError):
    """Raised when an OBJ/PLY file cannot be parsed."""

    def __init__(self, path: str, reason: str, line: int | None = None) -> None:
        where = f"{path}:{line}" if line is not None else path
        super().__init__(
            f"Cannot parse mesh {where}: {reason}",
            "MESH_PARSE_ERROR",
            {"path": path, "line": line, "reason": reason},
            operation="load_mesh",
        )


class NonManifoldMeshError(MeshError):
    """Raised when the mesh violates the manifold / orientation invariants."""

    def __init__(self, reason: str, operation: str = "load_mesh") -> None:
        super().__init__(
            f"Mesh is not an oriented connected manifold: {reason}",
            "NON_MANIFOLD_MESH",
            {"reason": reason},
            operation=operation,
        )


class BoundaryLoopError(MeshError):
    """Raised when a mesh has the wrong number of boundary loops."""

    def __init__(self, loop_count: int, expected: str, operation: str = "load_mesh") -> None:
        super().__init__(
            f"Expected {expected}, found {loop_count} boundary loop(s)",
            "BOUNDARY_LOOP_ERROR",
            {"loop_count": loop_count, "expected": expected},
            operation=operation,
        )


class DegenerateFaceError(MeshError):
    """Raised when a face has repeated indices or zero area."""

    def __init__(self, face: int, reason: str, operation: str = "cotangent_laplacian") -> None:
        super().__init__(
            f"Face {face} is degenerate: {reason}",
            "DEGENERATE_FACE",
            {"face": face, "reason": reason},
            operation=operation,
        )


class AlreadyClosedError(MeshError):
    """Raised when double covering a mesh without boundary."""

    def __init__(self) -> None:
        super().__init__(
            "Mesh is already closed",
            "ALREADY_CLOSED",
            operation="double_cover",
        )


class VanishingConformalFactorError(MeshError):
    """Raised when the conformal factor cannot be formed at a vertex."""

    def __init__(self, vertex: int, operation: str) -> None:
        super().__init__(
            f"Conformal factor vanishes or is undefined at vertex {vertex}",
            "VANISHING_CONFORMAL_FACTOR",
            {"vertex": vertex},
            operation=operation,
        )


# --- conformal ----------------------------------------------------------------


class ConformalError(MorphError):
    """Conformal parameterization errors."""

    module = "conformal"


class ZeroNormalError(ConformalError):
    """Raised when the face normals around a vertex cancel out."""

    def __init__(self, vertex: int) -> None:
        super().__init__(
            f"Normal sum vanishes at vertex {vertex}",
            "ZERO_NORMAL",
            {"vertex": vertex},
            operation="gauss_map",
        )


class NorthPoleError(ConformalError):
    """Raised when projecting the north pole stereographically."""

    def __init__(self) -> None:
        super().__init__(
            "Cannot project the north pole (0, 0, 1) to the plane",
            "NORTH_POLE",
            operation="stereographic_to_plane",
        )


class QiemSolveError(ConformalError):
    """Raised when a heat-flow linear system cannot be solved."""

    def __init__(self, iteration: int, reason: str) -> None:
        super().__init__(
            f"Heat-flow linear solve failed at iteration {iteration}: {reason}",
            "QIEM_SOLVE_ERROR",
            {"iteration": iteration, "reason": reason},
            operation="spherical_conformal_qiem",
        )


class EnergyIncreaseError(ConformalError):
    """Raised when step halving cannot restore energy decrease."""

    def __init__(self, iteration: int, energy: float, previous: float, halvings: int) -> None:
        super().__init__(
            f"Harmonic energy increased at iteration {iteration} "
            f"({previous:.6e} -> {energy:.6e}) after {halvings} step halvings",
            "ENERGY_INCREASE",
            {"iteration": iteration, "energy": energy, "previous": previous, "halvings": halvings},
            operation="spherical_conformal_qiem",
        )


class FoldOverError(ConformalError):
    """Raised when the converged map has inverted or degenerate triangles."""

    def __init__(self, faces: list[int], operation: str = "spherical_conformal_qiem") -> None:
        super().__init__(
            f"{len(faces)} folded or degenerate image triangle(s), first: {faces[:5]}",
            "FOLD_OVER",
            {"faces": faces[:50], "count": len(faces)},
            operation=operation,
        )


class EquatorSeparationError(ConformalError):
    """Raised when the boundary image cannot be placed on the equator."""

    def __init__(self, deviation: float) -> None:
        super().__init__(
            f"Boundary image not separable onto the equator (max deviation {deviation:.3e})",
            "EQUATOR_SEPARATION",
            {"max_deviation": deviation},
            operation="riemann_disk_map",
        )


# --- matching -----------------------------------------------------------------


class MatchingError(MorphError):
    """Landmark matching errors."""

    module = "matching"


class LandmarkCountError(MatchingError):
    """Raised when too few or unpaired landmarks are given."""

    def __init__(self, count: int, required: int, operation: str) -> None:
        super().__init__(
            f"{operation} needs at least {required} landmark pairs, got {count}",
            "LANDMARK_COUNT",
            {"count": count, "required": required},
            operation=operation,
        )


class RankDeficientError(MatchingError):
    """Raised when the thin-plate system is singular and unregularized."""

    def __init__(self, rank: int, columns: int) -> None:
        super().__init__(
            f"Thin-plate matrix is rank deficient ({rank} < {columns}); raise epsilon",
            "RANK_DEFICIENT",
            {"rank": rank, "columns": columns},
            operation="thin_plate_fit",
        )


class ThinPlateParameterError(MatchingError):
    """Raised for a grid side below 2 or a negative regularization."""

    def __init__(self, n: int, epsilon: float) -> None:
        super().__init__(
            f"Thin-plate fit needs n >= 2 and epsilon >= 0, got n={n}, epsilon={epsilon}",
            "THIN_PLATE_PARAMETER",
            {"n": n, "epsilon": epsilon},
            operation="thin_plate_fit",
        )


class OutsideDiskError(MatchingError):
    """Raised when a matched point leaves the unit disk."""

    def __init__(self, radius: float, index: int) -> None:
        super().__init__(
            f"Matched point {index} leaves the unit disk (|z| = {radius:.9f})",
            "OUTSIDE_DISK",
            {"radius": radius, "index": index},
            operation="matching_eval",
        )


# --- geodesic -----------------------------------------------------------------


class GeodesicError(MorphError):
    """Geodesic frame errors."""

    module = "geodesic"


class CoincidentFeaturesError(GeodesicError):
    """Raised when two paired features share a disk image."""

    def __init__(self, first: int, second: int) -> None:
        super().__init__(
            f"Features {first} and {second} coincide in the disk",
            "COINCIDENT_FEATURES",
            {"first": first, "second": second},
            operation="initial_paths",
        )


class SegmentExitError(GeodesicError):
    """Raised when a disk segment leaves the triangulated region."""

    def __init__(self, first: int, second: int, face: int) -> None:
        super().__init__(
            f"Segment {first}-{second} exits the triangulated disk after face {face}",
            "SEGMENT_EXIT",
            {"first": first, "second": second, "face": face},
            operation="initial_paths",
        )


class PathCrossingError(GeodesicError):
    """Raised when two corrected frame paths cross in the disk."""

    def __init__(self, first: tuple[int, int], second: tuple[int, int]) -> None:
        super().__init__(
            f"Frame paths {first} and {second} cross each other",
            "PATH_CROSSING",
            {"first": list(first), "second": list(second)},
            operation="build_frame",
        )


# --- registration -------------------------------------------------------------


class RegistrationError(MorphError):
    """Registration and transfer errors."""

    module = "registration"


class PointLocationError(RegistrationError):
    """Raised when a point lies outside every triangle."""

    def __init__(self, point: tuple[float, float], distance: float, operation: str = "locate") -> None:
        super().__init__(
            f"Point ({point[0]:.9f}, {point[1]:.9f}) is outside the triangulation "
            f"by {distance:.3e}",
            "POINT_LOCATION",
            {"point": list(point), "distance": distance},
            operation=operation,
        )


class FoldedPartitionError(RegistrationError):
    """Raised when the matched partition has inverted triangles."""

    def __init__(self, faces: list[int]) -> None:
        super().__init__(
            f"{len(faces)} folded target partition triangle(s), first: {faces[:5]}",
            "FOLDED_PARTITION",
            {"faces": faces[:50], "count": len(faces)},
            operation="build_registration",
        )


# --- homotopy -----------------------------------------------------------------


class HomotopyError(MorphError):
    """Keyframe interpolation errors."""

    module = "homotopy"


class KnotOrderError(HomotopyError):
    """Raised when keyframe times are not strictly increasing."""

    def __init__(self, times: list[float]) -> None:
        super().__init__(
            f"Keyframe times must be strictly increasing, got {times}",
            "KNOT_ORDER",
            {"times": times},
            operation="fit_track",
        )


class FieldLengthError(HomotopyError):
    """Raised when keyframe fields do not share the unified mesh."""

    def __init__(self, lengths: list[int], operation: str = "fit_track") -> None:
        super().__init__(
            f"Keyframe fields have mismatched lengths {lengths}",
            "FIELD_LENGTH",
            {"lengths": lengths},
            operation=operation,
        )


# --- reconstruction -----------------------------------------------------------


class ReconstructionError(MorphError):
    """Surface reconstruction and metric errors."""

    module = "reconstruction"


class SingularSystemError(ReconstructionError):
    """Raised when the interior Poisson system cannot be factorized."""

    def __init__(self, reason: str) -> None:
        super().__init__(
            f"Interior Laplace system is singular: {reason}",
            "SINGULAR_SYSTEM",
            {"reason": reason},
            operation="reconstruct",
        )


class DivergenceError(ReconstructionError):
    """Raised when the outer iteration keeps growing its displacement."""

    def __init__(self, history: list[float]) -> None:
        super().__init__(
            f"Outer iteration diverges, displacements {history[-4:]}",
            "DIVERGENCE",
            {"history": history},
            operation="reconstruct",
        )


class ConnectivityMismatchError(ReconstructionError):
    """Raised when compared surfaces do not share one parametric mesh."""

    def __init__(self, reason: str, operation: str = "surface_diff") -> None:
        super().__init__(
            f"Surfaces do not share a parametric mesh: {reason}",
            "CONNECTIVITY_MISMATCH",
            {"reason": reason},
            operation=operation,
        )


class ZeroDenominatorError(ReconstructionError):
    """Raised when the baseline difference of an improvement rate is zero."""

    def __init__(self) -> None:
        super().__init__(
            "Baseline surface difference is zero",
            "ZERO_DENOMINATOR",
            operation="improvement_rate",
        )


# --- cli ------------------------------------------------------------------------


class ConfigurationError(MorphError):
    """Configuration-related errors."""

    module = "cli"

    def __init__(self, message: str, config_key: str | None = None, operation: str | None = None) -> None:
        """
        Initialize configuration error.

        Args:
            message: Error message
            config_key: Configuration key that caused the error
            operation: Command that was being configured
        """
        super().__init__(message, "CONFIGURATION_ERROR", {"config_key": config_key}, operation=operation)


class ValidationError(MorphError):
    """Input data validation errors."""

    module = "cli"

    def __init__(
        self,
        message: str,
        field: str | None = None,
        value: Any | None = None,
        operation: str | None = None,
    ) -> None:
        """
        Initialize validation error.

        Args:
            message: Error message
            field: Field that failed validation
            value: Value that failed validation
            operation: Operation that rejected the value
        """
        super().__init__(message, "VALIDATION_ERROR", {"field": field, "value": value}, operation=operation)
