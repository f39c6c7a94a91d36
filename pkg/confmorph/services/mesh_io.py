"""
Mesh and table input/output.

OBJ (``v x y z [r g b]``, ``f i j k``, 1-based, negative indices relative to the
end of the vertex list) and ASCII PLY are read and written. Vertex colours are
floats in [0, 1]; PLY ``uchar`` colours are scaled by 1/255 on read.
"""

from pathlib import Path

import numpy as np

from confmorph.misc.exceptions import MeshParseError, MorphError, ValidationError
from confmorph.misc.logger import logger
from confmorph.models.mesh import FloatArray, IntArray, TriangleMesh
from confmorph.models.parameterization import DiskParameterization
from confmorph.services.export import atomic_write_text


def load_mesh(path: Path | str) -> TriangleMesh:
    """
    Read an OBJ or ASCII PLY file.

    Raises:
        MeshParseError: If the file is missing or malformed
        NonManifoldMeshError: If the mesh violates the manifold invariants
        BoundaryLoopError: If the mesh has more than one boundary loop
    """
    path = Path(path)
    if not path.is_file():
        raise MeshParseError(str(path), "file not found")
    suffix = path.suffix.lower()
    if suffix == ".obj":
        positions, faces, colors = _read_obj(path)
    elif suffix == ".ply":
        positions, faces, colors = _read_ply(path)
    else:
        raise MeshParseError(str(path), f"unsupported format {suffix!r}")
    try:
        mesh = TriangleMesh(positions, faces, colors)
    except MorphError as e:
        e.details["path"] = str(path)
        raise
    logger.info(
        "Loaded %s: %d vertices, %d faces, boundary of %d vertices",
        path.name, mesh.n_vertices, mesh.n_faces, len(mesh.boundary),
    )
    return mesh


def _read_obj(path: Path) -> tuple[FloatArray, IntArray, FloatArray | None]:
    positions: list[list[float]] = []
    colors: list[list[float]] = []
    faces: list[list[int]] = []
    with path.open(encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            parts = raw.split("#", 1)[0].split()
            if not parts:
                continue
            if parts[0] == "v":
                if len(parts) not in (4, 7):
                    raise MeshParseError(str(path), "vertex line needs 3 or 6 numbers", lineno)
                try:
                    values = [float(x) for x in parts[1:]]
                except ValueError:
                    raise MeshParseError(str(path), "non-numeric vertex coordinate", lineno) from None
                positions.append(values[:3])
                if len(values) == 6:
                    colors.append(values[3:])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise MeshParseError(str(path), "only triangular faces are supported", lineno)
                face = []
                for token in parts[1:]:
                    try:
                        index = int(token.split("/", 1)[0])
                    except ValueError:
                        raise MeshParseError(str(path), f"bad face index {token!r}", lineno) from None
                    if index == 0:
                        raise MeshParseError(str(path), "face index 0 in 1-based OBJ", lineno)
                    index = index - 1 if index > 0 else len(positions) + index
                    if not 0 <= index < len(positions):
                        raise MeshParseError(str(path), f"face index {token} out of range", lineno)
                    face.append(index)
                faces.append(face)
    if not positions or not faces:
        raise MeshParseError(str(path), "no vertices or no faces")
    if colors and len(colors) != len(positions):
        raise MeshParseError(str(path), "colours given for some vertices only")
    return (
        np.asarray(positions, dtype=np.float64),
        np.asarray(faces, dtype=np.int64),
        np.asarray(colors, dtype=np.float64) if colors else None,
    )


def _read_ply(path: Path) -> tuple[FloatArray, IntArray, FloatArray | None]:
    with path.open(encoding="utf-8", errors="replace") as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise MeshParseError(str(path), "missing 'ply' magic", 1)
    elements: list[tuple[str, int, list[tuple[str, str]]]] = []
    body_start = None
    for lineno, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "format":
            if len(parts) < 2 or parts[1] != "ascii":
                raise MeshParseError(str(path), "only ASCII PLY is supported", lineno)
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise MeshParseError(str(path), "property before element", lineno)
            name = parts[-1]
            kind = "list" if parts[1] == "list" else parts[1]
            elements[-1][2].append((name, kind))
        elif parts[0] == "end_header":
            body_start = lineno
            break
    if body_start is None:
        raise MeshParseError(str(path), "missing end_header")

    cursor = body_start
    positions = faces = colors = None
    for name, count, properties in elements:
        rows = []
        for _ in range(count):
            if cursor >= len(lines):
                raise MeshParseError(str(path), f"truncated {name} element")
            rows.append((cursor + 1, lines[cursor].split()))
            cursor += 1
        if name == "vertex":
            names = [p[0] for p in properties]
            try:
                data = np.array([[float(x) for x in r[: len(names)]] for _, r in rows], dtype=np.float64)
            except ValueError:
                raise MeshParseError(str(path), "non-numeric vertex property") from None
            try:
                positions = data[:, [names.index("x"), names.index("y"), names.index("z")]]
            except ValueError:
                raise MeshParseError(str(path), "vertex element lacks x, y or z") from None
            if {"red", "green", "blue"} <= set(names):
                colors = data[:, [names.index("red"), names.index("green"), names.index("blue")]]
                kind = dict(properties)["red"]
                if kind in ("uchar", "uint8", "char", "int8"):
                    colors = colors / 255.0
        elif name == "face":
            face_rows = []
            for lineno, r in rows:
                if not r or int(r[0]) != 3:
                    raise MeshParseError(str(path), "only triangular faces are supported", lineno)
                face_rows.append([int(x) for x in r[1:4]])
            faces = np.asarray(face_rows, dtype=np.int64)
    if positions is None or faces is None or len(faces) == 0:
        raise MeshParseError(str(path), "no vertices or no faces")
    if faces.min() < 0 or faces.max() >= len(positions):
        raise MeshParseError(str(path), "face index out of range")
    return positions, faces, colors


def save_mesh(mesh: TriangleMesh, path: Path | str) -> None:
    """Write OBJ or ASCII PLY by suffix; colours are written when present."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        text = _format_obj(mesh)
    elif suffix == ".ply":
        text = _format_ply(mesh)
    else:
        raise ValidationError(f"unsupported mesh format {suffix!r}", field="path", value=str(path), operation="save_mesh")
    atomic_write_text(path, text)


def _format_obj(mesh: TriangleMesh) -> str:
    lines = []
    if mesh.colors is None:
        lines.extend(f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.positions)
    else:
        lines.extend(
            f"v {x:.17g} {y:.17g} {z:.17g} {r:.17g} {g:.17g} {b:.17g}"
            for (x, y, z), (r, g, b) in zip(mesh.positions, mesh.colors, strict=True)
        )
    lines.extend(f"f {i + 1} {j + 1} {k + 1}" for i, j, k in mesh.faces)
    return "\n".join(lines) + "\n"


def _format_ply(mesh: TriangleMesh) -> str:
    header = ["ply", "format ascii 1.0", f"element vertex {mesh.n_vertices}"]
    header += ["property double x", "property double y", "property double z"]
    if mesh.colors is not None:
        header += ["property float red", "property float green", "property float blue"]
    header += [f"element face {mesh.n_faces}", "property list uchar int vertex_indices", "end_header"]
    data = mesh.positions if mesh.colors is None else np.hstack((mesh.positions, mesh.colors))
    body = [" ".join(f"{x:.17g}" for x in row) for row in data]
    body += [f"3 {i} {j} {k}" for i, j, k in mesh.faces]
    return "\n".join(header + body) + "\n"


# --- parameterization tables ------------------------------------------------------


def save_parameterization(param: DiskParameterization, path: Path | str) -> None:
    """Write ``u,v,lambda`` rows, one per vertex."""
    rows = ["u,v,lambda"]
    rows += [f"{u:.17g},{v:.17g},{lam:.17g}" for (u, v), lam in zip(param.image, param.lam, strict=True)]
    atomic_write_text(Path(path), "\n".join(rows) + "\n")


def load_parameterization(mesh: TriangleMesh, path: Path | str) -> DiskParameterization:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"parameterization file not found: {path}", field="param", value=str(path), operation="load_parameterization")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, dtype=np.float64)
    except ValueError as e:
        raise ValidationError(f"cannot parse {path}: {e}", field="param", operation="load_parameterization") from e
    if data.shape != (mesh.n_vertices, 3):
        raise ValidationError(
            f"{path} has shape {data.shape}, expected ({mesh.n_vertices}, 3)",
            field="param",
            operation="load_parameterization",
        )
    return DiskParameterization(mesh, data[:, :2], data[:, 2])


# --- landmark and feature tables ------------------------------------------------------


def read_landmark_pairs(path: Path | str) -> tuple[IntArray, IntArray]:
    """
    Read ``side,index,x,y,z`` rows; the i-th ``a`` row pairs with the i-th ``b`` row.

    Only the vertex indices are used, coordinates are informative.
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"landmark file not found: {path}", field="landmarks", value=str(path), operation="read_landmarks")
    sides: dict[str, list[int]] = {"a": [], "b": []}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        parts = [p.strip() for p in raw.split(",")]
        if not raw.strip() or (lineno == 1 and parts[0].lower() == "side"):
            continue
        if len(parts) < 2 or parts[0] not in sides:
            raise ValidationError(f"{path}:{lineno}: expected 'a' or 'b' side", field="side", value=parts[0], operation="read_landmarks")
        try:
            sides[parts[0]].append(int(parts[1]))
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad vertex index", field="index", value=parts[1], operation="read_landmarks") from None
    if len(sides["a"]) != len(sides["b"]):
        raise ValidationError(
            f"{path}: {len(sides['a'])} 'a' landmarks but {len(sides['b'])} 'b' landmarks",
            field="landmarks",
            operation="read_landmarks",
        )
    return np.asarray(sides["a"], dtype=np.int64), np.asarray(sides["b"], dtype=np.int64)


def read_features(path: Path | str) -> tuple[IntArray, list[tuple[int, int]]]:
    """
    Read a feature topology table.

    Rows are ``feature,<vertex>,`` declaring feature points in order and
    ``edge,<i>,<j>`` connecting features by their position in that list.
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"feature file not found: {path}", field="features", value=str(path), operation="read_features")
    features: list[int] = []
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        parts = [p.strip() for p in raw.split(",")]
        if not raw.strip() or (lineno == 1 and parts[0].lower() == "kind"):
            continue
        try:
            if parts[0] == "feature":
                features.append(int(parts[1]))
            elif parts[0] == "edge":
                pairs.append((int(parts[1]), int(parts[2])))
            else:
                raise ValidationError(f"{path}:{lineno}: unknown row kind", field="kind", value=parts[0], operation="read_features")
        except (ValueError, IndexError):
            raise ValidationError(f"{path}:{lineno}: malformed row", field="features", value=raw, operation="read_features") from None
    for i, j in pairs:
        if not (0 <= i < len(features) and 0 <= j < len(features)) or i == j:
            raise ValidationError(f"{path}: edge ({i}, {j}) does not join two declared features", field="edge", operation="read_features")
    return np.asarray(features, dtype=np.int64), pairs
