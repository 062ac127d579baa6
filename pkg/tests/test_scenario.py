import json

import numpy as np
import pytest

from nlkpp import (Field, ValidationError, build_uniform_grid, parse_scenario,
                   parse_scenario_dict, parse_sweep_dict, read_csv_rows,
                   read_field, run_scenario, run_sweep, write_field)
from nlkpp.diagnostics import Trace


def minimal_doc(**overrides):
    doc = {
        "grid": {"extents": [0.0, 1.0], "counts": 48},
        "kernel": {"family": "gaussian", "sigma": 0.2},
        "initial": {"kind": "constant", "value": 0.2},
        "sim": {"mu": 1.0, "dt": 1e-3, "t_end": 0.05},
    }
    doc.update(overrides)
    return doc


def write_doc(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


class TestParsing:
    def test_minimal_defaults(self, tmp_path):
        sc = parse_scenario(write_doc(tmp_path, minimal_doc()))
        assert sc.sim.snapshot_every == 100
        assert sc.kernel.normalization == "balanced"
        assert sc.kernel.certify is True
        assert sc.output.directory == "out"

    def test_negative_mu_names_field(self, tmp_path):
        doc = minimal_doc()
        doc["sim"]["mu"] = -1.0
        with pytest.raises(ValidationError, match="mu"):
            parse_scenario(write_doc(tmp_path, doc))

    def test_unknown_key_strict(self, tmp_path):
        doc = minimal_doc()
        doc["sim"]["mu_rate"] = 2.0
        with pytest.raises(ValidationError, match="mu_rate"):
            parse_scenario(write_doc(tmp_path, doc))

    def test_unknown_top_level_key(self):
        with pytest.raises(ValidationError, match="unknown key"):
            parse_scenario_dict(minimal_doc(extra={"a": 1}))

    def test_parse_error_reports_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"grid": {,}')
        with pytest.raises(ValidationError, match=r"line 1, column"):
            parse_scenario(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="no such file"):
            parse_scenario(tmp_path / "absent.json")

    def test_kernel_required_unless_local(self):
        doc = minimal_doc()
        del doc["kernel"]
        with pytest.raises(ValidationError, match="kernel"):
            parse_scenario_dict(doc)
        doc["sim"]["local_mode"] = True
        assert parse_scenario_dict(doc).kernel is None

    def test_bad_initial_kind(self):
        doc = minimal_doc(initial={"kind": "sine"})
        with pytest.raises(ValidationError, match="initial.kind"):
            parse_scenario_dict(doc)

    def test_bad_artifact_name(self):
        doc = minimal_doc(output={"artifacts": ["trace", "movie"]})
        with pytest.raises(ValidationError, match="movie"):
            parse_scenario_dict(doc)


class TestRunScenario:
    def test_writes_all_artifacts(self, tmp_path):
        sc = parse_scenario_dict(minimal_doc(), name="demo")
        out = tmp_path / "run"
        summary = run_scenario(sc, out_dir=out, quiet=True)
        assert summary["status"] == "ok"
        assert (out / "trace.csv").exists()
        assert (out / "certificate.csv").exists()
        assert (out / "final_field.bin").exists()
        assert (out / "summary.csv").exists()
        assert (out / "run_meta.json").exists()
        assert list((out / "snapshots").glob("snap_*.bin"))

    def test_artifacts_reload_with_own_loaders(self, tmp_path):
        sc = parse_scenario_dict(minimal_doc())
        out = tmp_path / "run"
        summary = run_scenario(sc, out_dir=out, quiet=True)
        trace = Trace.from_csv(out / "trace.csv")
        assert len(trace) == summary["steps"] + 1
        certs = read_csv_rows(out / "certificate.csv")
        assert {c["method"] for c in certs} == {"eigen", "bochner"}
        assert all(c["verdict"] == "positive" for c in certs)
        srows = read_csv_rows(out / "summary.csv")
        assert float(srows[0]["final_V"]) == summary["final_V"]
        field = read_field(out / "final_field.bin")
        assert field.values.size == 48

    def test_trace_is_bit_deterministic(self, tmp_path):
        doc = minimal_doc(initial={"kind": "random_uniform", "low": 0.5,
                                   "high": 1.5, "seed": 11})
        sc = parse_scenario_dict(doc)
        run_scenario(sc, out_dir=tmp_path / "a", quiet=True)
        run_scenario(sc, out_dir=tmp_path / "b", quiet=True)
        assert (tmp_path / "a/trace.csv").read_bytes() == \
            (tmp_path / "b/trace.csv").read_bytes()

    def test_mass_constant_in_heat_limit(self, tmp_path):
        doc = minimal_doc(initial={"kind": "random_uniform", "low": 0.5,
                                   "high": 1.5, "seed": 3})
        doc["sim"]["mu"] = 0.0
        sc = parse_scenario_dict(doc)
        run_scenario(sc, out_dir=tmp_path / "m", quiet=True)
        mass = Trace.from_csv(tmp_path / "m/trace.csv").column("mass")
        assert np.max(np.abs(np.diff(mass))) < 1e-10

    def test_env_var_overrides_directory(self, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv("NLKPP_OUT", str(target))
        sc = parse_scenario_dict(minimal_doc())
        run_scenario(sc, quiet=True)
        assert (target / "trace.csv").exists()

    def test_file_initial_round_trip(self, tmp_path):
        grid = build_uniform_grid((0, 1), 48)
        u0 = Field(grid, np.linspace(0.5, 1.5, 48))
        write_field(tmp_path / "u0.bin", u0)
        doc = minimal_doc(initial={"kind": "file", "path": "u0.bin"})
        sc = parse_scenario_dict(doc, base_dir=str(tmp_path))
        summary = run_scenario(sc, out_dir=tmp_path / "o", quiet=True)
        assert summary["status"] == "ok"

    def test_file_initial_layout_mismatch(self, tmp_path):
        grid = build_uniform_grid((0, 1), 32)
        write_field(tmp_path / "u0.bin", Field.constant(grid, 1.0))
        doc = minimal_doc(initial={"kind": "file", "path": "u0.bin"})
        sc = parse_scenario_dict(doc, base_dir=str(tmp_path))
        with pytest.raises(ValidationError, match="layout"):
            run_scenario(sc, out_dir=tmp_path / "o", quiet=True)

    def test_cosine_most_unstable_resolves(self, tmp_path):
        doc = minimal_doc(initial={"kind": "cosine", "amplitude": 0.02,
                                   "mode": "most_unstable"})
        sc = parse_scenario_dict(doc)
        summary = run_scenario(sc, out_dir=tmp_path / "c", quiet=True)
        meta = json.loads((tmp_path / "c/run_meta.json").read_text())
        assert meta["metadata"]["initial"]["mode"] >= 1
        assert summary["status"] == "ok"

    def test_2d_scenario_runs(self, tmp_path):
        doc = minimal_doc(grid={"extents": [[0, 1], [0, 1]],
                                "counts": [10, 10]})
        doc["kernel"]["sigma"] = 0.3
        sc = parse_scenario_dict(doc)
        summary = run_scenario(sc, out_dir=tmp_path / "d2", quiet=True)
        assert summary["status"] == "ok"
        field = read_field(tmp_path / "d2/final_field.bin")
        assert field.grid.counts == (10, 10)


class TestSweep:
    def base_sweep(self, values=(0.5, 1.0)):
        return {
            "base": minimal_doc(initial={"kind": "random_uniform", "low": 0.5,
                                         "high": 1.5, "seed": 5}),
            "parameters": [{"path": "sim.mu", "values": list(values)}],
        }

    def test_single_point_matches_scenario_run(self, tmp_path):
        sweep = parse_sweep_dict(self.base_sweep(values=(1.0,)))
        rows = run_sweep(sweep, out_dir=tmp_path / "s", quiet=True)
        assert len(rows) == 1
        doc = self.base_sweep()["base"]
        sc = parse_scenario_dict(doc)
        solo = run_scenario(sc, out_dir=tmp_path / "solo", quiet=True)
        assert rows[0]["final_V"] == solo["final_V"]
        assert rows[0]["final_sup_dist_one"] == solo["final_sup_dist_one"]

    def test_point_failures_recorded_and_sweep_continues(self, tmp_path):
        sweep = parse_sweep_dict(self.base_sweep(values=(-1.0, 1.0)))
        rows = run_sweep(sweep, out_dir=tmp_path / "s", quiet=True)
        assert rows[0]["status"] == "validation_error"
        assert "mu" in rows[0]["error"]
        assert rows[1]["status"] == "ok"

    def test_parallel_output_independent_of_jobs(self, tmp_path):
        spec = self.base_sweep(values=(0.5, 1.0, 2.0))
        rows_serial = run_sweep(parse_sweep_dict(spec),
                                out_dir=tmp_path / "s1", quiet=True)
        rows_par = run_sweep(parse_sweep_dict(spec), jobs=2,
                             out_dir=tmp_path / "s2", quiet=True)
        assert (tmp_path / "s1/sweep_summary.csv").read_bytes() == \
            (tmp_path / "s2/sweep_summary.csv").read_bytes()
        assert [r["point"] for r in rows_serial] == [r["point"] for r in rows_par]

    def test_two_parameter_grid(self, tmp_path):
        spec = self.base_sweep(values=(0.5, 1.0))
        spec["parameters"].append({"path": "kernel.sigma",
                                   "values": [0.15, 0.25]})
        rows = run_sweep(parse_sweep_dict(spec), out_dir=tmp_path / "s",
                         quiet=True)
        assert len(rows) == 4
        assert all(r["status"] == "ok" for r in rows)

    def test_sigma_sweep_all_positive_and_converging(self, tmp_path):
        base = minimal_doc(initial={"kind": "random_uniform", "low": 0.5,
                                    "high": 1.5, "seed": 9})
        base["grid"]["counts"] = 96
        base["sim"] = {"mu": 2.0, "dt": 2e-3, "t_end": 15.0}
        spec = {"base": base,
                "parameters": [{"path": "kernel.sigma", "values": [0.1, 0.3]}]}
        rows = run_sweep(parse_sweep_dict(spec), out_dir=tmp_path / "s",
                         quiet=True)
        for row in rows:
            assert row["status"] == "ok"
            assert row["eigen_verdict"] == "positive"
            assert row["bochner_verdict"] == "positive"
            assert row["final_sup_dist_one"] < 1e-2

    def test_requires_one_or_two_parameters(self):
        spec = self.base_sweep()
        spec["parameters"] = []
        with pytest.raises(ValidationError, match="one or two"):
            parse_sweep_dict(spec)

    def test_empty_values_rejected(self):
        spec = self.base_sweep()
        spec["parameters"][0]["values"] = []
        with pytest.raises(ValidationError, match="non-empty"):
            parse_sweep_dict(spec)
