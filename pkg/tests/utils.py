"""
Test utilities and reference oracles.

Dense, textbook implementations used to check the library's factored or
library-backed computations, plus helpers that write run directories.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np

from confmorph.models.mesh import FloatArray, TriangleMesh
from tests.fixtures.sample_meshes import write_obj


def natural_spline_second_derivatives(times: FloatArray, values: FloatArray) -> FloatArray:
    """Second derivatives at the knots of the natural cubic spline, from the dense knot system."""
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    n = len(times)
    h = np.diff(times)
    system = np.zeros((n, n))
    rhs = np.zeros((n, *values.shape[1:]))
    system[0, 0] = system[-1, -1] = 1.0
    for i in range(1, n - 1):
        system[i, i - 1] = h[i - 1]
        system[i, i] = 2.0 * (h[i - 1] + h[i])
        system[i, i + 1] = h[i]
        rhs[i] = 6.0 * ((values[i + 1] - values[i]) / h[i] - (values[i] - values[i - 1]) / h[i - 1])
    return np.linalg.solve(system, rhs.reshape(n, -1)).reshape(rhs.shape)


def natural_spline(times: FloatArray, values: FloatArray, t: float) -> FloatArray:
    """Evaluate the natural cubic spline at ``t``; outside the knots the end pieces are continued."""
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    m = natural_spline_second_derivatives(times, values)
    i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
    h = times[i + 1] - times[i]
    a, b = times[i + 1] - t, t - times[i]
    return (
        m[i] * a**3 / (6.0 * h)
        + m[i + 1] * b**3 / (6.0 * h)
        + (values[i] / h - m[i] * h / 6.0) * a
        + (values[i + 1] / h - m[i + 1] * h / 6.0) * b
    )


def normal_equations(design: FloatArray, targets: FloatArray, epsilon: float) -> FloatArray:
    """Tikhonov solution (eps I + S^T S)^-1 S^T q by a dense solve."""
    columns = design.shape[1]
    return np.linalg.solve(epsilon * np.eye(columns) + design.T @ design, design.T @ targets)


def hemisphere_from_disk(uv: FloatArray) -> FloatArray:
    """Lower unit hemisphere point over each disk point (inverse stereographic projection)."""
    r2 = np.sum(uv**2, axis=1)
    return np.column_stack((2.0 * uv[:, 0], 2.0 * uv[:, 1], r2 - 1.0)) / (1.0 + r2)[:, np.newaxis]


def write_parameterization(path: Path, uv: FloatArray, lam: FloatArray) -> Path:
    rows = ["u,v,lambda"] + [f"{u!r},{v!r},{w!r}" for (u, v), w in zip(uv.tolist(), lam.tolist(), strict=True)]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


def write_landmarks(path: Path, mesh_a: TriangleMesh, mesh_b: TriangleMesh, pairs: list[tuple[int, int]]) -> Path:
    rows = ["side,index,x,y,z"]
    rows += [f"a,{i},{','.join(map(repr, mesh_a.positions[i].tolist()))}" for i, _ in pairs]
    rows += [f"b,{j},{','.join(map(repr, mesh_b.positions[j].tolist()))}" for _, j in pairs]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


def write_features(path: Path, features: list[int], edges: list[tuple[int, int]]) -> Path:
    rows = ["kind,first,second"] + [f"feature,{v}," for v in features] + [f"edge,{i},{j}" for i, j in edges]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


def write_run(
    directory: Path,
    meshes: list[TriangleMesh],
    times: list[float],
    landmarks: list[tuple[int, int]],
    features: list[int],
    edges: list[tuple[int, int]],
    params: list[tuple[FloatArray, FloatArray]] | None = None,
    **overrides: Any,
) -> Path:
    """
    Write keyframe meshes, pair tables and a pipeline document into ``directory``.

    Every pair reuses the same landmark indices and features. Returns the
    path of ``config.json``.
    """
    keyframes = []
    for i, (mesh, t) in enumerate(zip(meshes, times, strict=True)):
        write_obj(directory / f"key_{i}.obj", mesh)
        entry: dict[str, Any] = {"mesh": f"key_{i}.obj", "time": t}
        if params is not None:
            write_parameterization(directory / f"key_{i}_param.csv", *params[i])
            entry["param"] = f"key_{i}_param.csv"
        keyframes.append(entry)
    pairs = []
    for i in range(len(meshes) - 1):
        write_landmarks(directory / f"landmarks_{i}.csv", meshes[i], meshes[i + 1], landmarks)
        write_features(directory / f"features_{i}.csv", features, edges)
        pairs.append({"landmarks": f"landmarks_{i}.csv", "features": f"features_{i}.csv"})
    document: dict[str, Any] = {"keyframes": keyframes, "pairs": pairs, "output": "out", **overrides}
    path = directory / "config.json"
    path.write_text(json.dumps(document, indent=2), encoding="utf-8")
    return path
