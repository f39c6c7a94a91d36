"""
Integration tests for complete command line workflows.

Every test drives ``confmorph.__main__.main`` on a run directory written by
the ``self_morph_run`` fixture: the 5-ring hemisphere morphed into itself,
so every frame has the keyframe as exact answer.
"""

import csv
import json
from pathlib import Path

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from confmorph.__main__ import main
from confmorph.services.mesh_io import load_mesh
from confmorph.services.metrics import surface_diff
from tests.fixtures.sample_meshes import sphere, write_obj

pytestmark = pytest.mark.integration


def _update_run(config: Path, **changes) -> Path:
    document = json.loads(config.read_text(encoding="utf-8"))
    document.update(changes)
    config.write_text(json.dumps(document), encoding="utf-8")
    return config


def _read_rows(path: Path) -> list[dict[str, str]]:
    with path.open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


class TestMorphWorkflow:
    """Test the ``morph`` command end to end."""

    def test_self_morph(self, self_morph_run: Path):
        """Test that morphing a surface into itself gives the same frame at every time."""
        assert main(["morph", "--config", str(self_morph_run)]) == 0

        out = self_morph_run.parent / "out"
        names = ["frame_0000.0000.obj", "frame_0000.5000.obj", "frame_0001.0000.obj"]
        assert all((out / name).exists() for name in names)
        frames = [load_mesh(out / name) for name in names]
        uv = frames[0].positions[:, :2]
        for other in frames[1:]:
            l2, _ = surface_diff(frames[0], other, uv)
            assert l2 < 1e-8

        rows = _read_rows(out / "diagnostics.csv")
        assert [float(r["t"]) for r in rows] == [0.0, 0.5, 1.0]
        assert all(r["converged"] == "true" and r["extrapolated"] == "false" for r in rows)
        assert all(r["L2"] == "" and r["improvement_rate"] == "" for r in rows)

    def test_frames_close_to_keyframe(self, self_morph_run: Path):
        """Test that the frame at a keyframe time is the keyframe up to the round-trip error."""
        assert main(["morph", "--config", str(self_morph_run)]) == 0
        keyframe = load_mesh(self_morph_run.parent / "key_0.obj")
        frame = load_mesh(self_morph_run.parent / "out" / "frame_0000.0000.obj")
        np.testing.assert_array_equal(frame.faces, keyframe.faces)
        l2, _ = surface_diff(frame, keyframe, keyframe.positions[:, :2])
        assert l2 <= 1e-2 * pdist(keyframe.positions).max()

    def test_worker_count_does_not_change_output(self, self_morph_run: Path):
        """Test that one and two workers write byte-identical files."""
        out = self_morph_run.parent / "out"
        assert main(["morph", "--config", str(self_morph_run), "--jobs", "1"]) == 0
        serial = {p.name: p.read_bytes() for p in out.iterdir()}
        assert main(["morph", "--config", str(self_morph_run), "--jobs", "2"]) == 0
        parallel = {p.name: p.read_bytes() for p in out.iterdir()}
        assert serial == parallel

    def test_extrapolated_frame(self, self_morph_run: Path):
        """Test that a time past the last keyframe is reconstructed and flagged."""
        _update_run(self_morph_run, frames=[1.5])
        assert main(["morph", "--config", str(self_morph_run)]) == 0

        out = self_morph_run.parent / "out"
        assert (out / "frame_0001.5000.obj").exists()
        (row,) = _read_rows(out / "diagnostics.csv")
        assert row["extrapolated"] == "true"

    def test_reference_comparison(self, self_morph_run: Path):
        """Test L2/Linf columns and the improvement rate at a reference time."""
        _update_run(self_morph_run, references=[{"mesh": "key_1.obj", "time": 1.0}])
        assert main(["morph", "--config", str(self_morph_run)]) == 0

        rows = {float(r["t"]): r for r in _read_rows(self_morph_run.parent / "out" / "diagnostics.csv")}
        assert rows[0.5]["L2"] == ""
        compared = rows[1.0]
        assert 0.0 < float(compared["L2"]) < 0.1
        assert float(compared["Linf"]) >= 0.0
        assert float(compared["L2_omt"]) == pytest.approx(float(compared["L2"]), rel=1e-6)
        assert abs(float(compared["improvement_rate"])) < 1e-4

    def test_comparison_disabled(self, self_morph_run: Path):
        """Test that without the comparison only the composite variant is reported."""
        _update_run(
            self_morph_run,
            references=[{"mesh": "key_1.obj", "time": 1.0}],
            matching={"compare": False},
        )
        assert main(["morph", "--config", str(self_morph_run)]) == 0
        rows = {float(r["t"]): r for r in _read_rows(self_morph_run.parent / "out" / "diagnostics.csv")}
        assert rows[1.0]["L2"] != ""
        assert rows[1.0]["L2_omt"] == ""
        assert rows[1.0]["improvement_rate"] == ""

    @pytest.mark.parametrize(("keep", "expected"), [(False, set()), (True, {"frame_0000.0000.obj"})])
    def test_partial_output(self, self_morph_run: Path, mocker, keep: bool, expected: set[str]):
        """Test that a failed run removes its frames unless asked to keep them."""
        _update_run(self_morph_run, frames=[0.0])
        mocker.patch("confmorph.handlers.morph.write_csv", side_effect=RuntimeError("disk full"))
        argv = ["morph", "--config", str(self_morph_run)] + (["--keep-partial"] if keep else [])

        assert main(argv) == 1
        out = self_morph_run.parent / "out"
        present = {p.name for p in out.iterdir()} if out.exists() else set()
        assert present == expected


class TestStageCommands:
    """Test the ``match``, ``frame``, ``parameterize`` and ``metrics`` commands."""

    def test_match(self, self_morph_run: Path):
        """Test the matching files of the only keyframe pair."""
        assert main(["match", "--config", str(self_morph_run)]) == 0

        out = self_morph_run.parent / "out"
        payload = json.loads((out / "match_0.json").read_text(encoding="utf-8"))
        assert payload["pair"] == 0
        assert payload["times"] == [0.0, 1.0]
        assert payload["landmarks"] == 4
        assert set(payload) >= {"omt", "omgmf", "escalations"}

        energies = _read_rows(out / "energies_0.csv")
        assert [r["method"] for r in energies] == ["OMT", "OMGMF"]
        assert all(float(r["E"]) < 1e-10 for r in energies)

    def test_frame(self, self_morph_run: Path):
        """Test the partition and path files of the source keyframe."""
        assert main(["frame", "--config", str(self_morph_run)]) == 0

        out = self_morph_run.parent / "out"
        partition = load_mesh(out / "frame_0_partition.obj")
        assert np.all(partition.positions[:, 2] == 0.0)
        assert np.linalg.norm(partition.positions[:, :2], axis=1).max() <= 1.0 + 1e-9

        (path,) = _read_rows(out / "frame_0_paths.csv")
        assert (path["first"], path["second"]) == ("0", "1")
        points = _read_rows(out / "frame_0_points.csv")
        assert len(points) == int(path["points"])
        assert {r["path"] for r in points} == {"0"}

    def test_missing_landmark_file(self, self_morph_run: Path, capsys):
        """Test that a run naming a missing table is an input error."""
        (self_morph_run.parent / "landmarks_0.csv").unlink()
        assert main(["match", "--config", str(self_morph_run)]) == 2
        report = capsys.readouterr().err
        assert "failed in" in report
        assert "input file not found" in report.lower()

    def test_parameterize(self, tmp_path: Path, small_hemisphere):
        """Test the disk map and histogram files of one mesh."""
        mesh_path = write_obj(tmp_path / "bowl.obj", small_hemisphere.mesh)
        out = tmp_path / "maps"
        assert main(["parameterize", str(mesh_path), "--out", str(out), "--bin-width", "5"]) == 0

        rows = _read_rows(out / "bowl_param.csv")
        assert len(rows) == small_hemisphere.mesh.n_vertices
        uv = np.array([[float(r["u"]), float(r["v"])] for r in rows])
        assert np.linalg.norm(uv, axis=1).max() <= 1.0 + 1e-9
        assert all(float(r["lambda"]) > 0.0 for r in rows)
        assert len(_read_rows(out / "bowl_angles.csv")) == 36
        assert (out / "bowl_angles_summary.csv").exists()

    def test_parameterize_closed_mesh(self, tmp_path: Path, capsys):
        """Test that a closed mesh is reported as a numerical failure."""
        mesh_path = write_obj(tmp_path / "ball.obj", sphere(1))
        assert main(["parameterize", str(mesh_path), "--out", str(tmp_path)]) == 3
        report = capsys.readouterr().err.lower()
        assert "riemann_disk_map" in report
        assert "boundary loop" in report

    def test_metrics_to_stdout(self, self_morph_run: Path, capsys):
        """Test identical surfaces printed as a one-row table."""
        run = self_morph_run.parent
        argv = ["metrics", str(run / "key_0.obj"), str(run / "key_1.obj"), "--param", str(run / "key_0_param.csv")]
        assert main(argv) == 0
        assert capsys.readouterr().out == "L2,Linf\n0,0\n"

    def test_metrics_with_baseline(self, self_morph_run: Path, tmp_path: Path):
        """Test the improvement rate column written to a file."""
        run = self_morph_run.parent
        reference = load_mesh(run / "key_0.obj")
        write_obj(tmp_path / "shifted.obj", reference.with_positions(reference.positions + [0.0, 0.0, 0.2]))
        argv = [
            "metrics", str(run / "key_0.obj"), str(run / "key_1.obj"),
            "--param", str(run / "key_0_param.csv"),
            "--baseline", str(tmp_path / "shifted.obj"),
            "--out", str(tmp_path / "metrics.csv"),
        ]
        assert main(argv) == 0
        (row,) = _read_rows(tmp_path / "metrics.csv")
        assert float(row["improvement_rate"]) == pytest.approx(1.0)
