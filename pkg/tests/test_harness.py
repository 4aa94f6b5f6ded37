"""Experiment configs, run orchestration, artifacts, certification, CLI."""

import csv
import json
import math

import numpy as np
import pytest

from descent_lab import (
    Geometry,
    make_power_norm_loss,
    ms_step_size,
    rgd_step_size,
)
from descent_lab.cli import main
from descent_lab.errors import ConfigError, SolverError
from descent_lab.harness import (
    CSV_HEADER,
    SEED_ENV_VAR,
    ExperimentConfig,
    RunRecord,
    build_dataset,
    build_figure_experiment,
    build_objective,
    certify_experiment,
    divergence_probe,
    emit_csv,
    emit_svg_plot,
    method_label,
    resolve_start,
    run_experiment,
    run_method,
    write_outputs,
)

QUARTIC_ETA = rgd_step_size([1.0, 3.0, 6.0, 6.0], 4)


def quartic_config(methods, **overrides):
    """An identity-design quartic regression experiment (minimum 0 at 0)."""
    base = dict(
        loss={
            "id": "lp_regression",
            "p": 4,
            "dataset": {"rows": 3, "cols": 3, "design": "identity",
                        "targets": "zeros"},
        },
        methods=methods,
        budget={"iterations": 40},
        start={"kind": "explicit", "values": [1.2, -0.8, 0.6]},
        reference={"policy": "known"},
        name="quartic",
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestExperimentConfig:
    def test_json_roundtrip_preserves_hash(self):
        config = quartic_config([{"id": "rgd", "p": 4, "eta": 0.006}])
        clone = ExperimentConfig.from_json(config.to_json())
        assert clone.payload() == config.payload()
        assert clone.config_hash == config.config_hash
        assert len(config.config_hash) == 12

    def test_hash_tracks_content(self):
        a = quartic_config([{"id": "gd", "eta": 0.1}])
        b = quartic_config([{"id": "gd", "eta": 0.1}], seed=1)
        assert a.config_hash != b.config_hash

    def test_validation_rejects_unknown_parts(self):
        good = [{"id": "gd", "eta": 0.1}]
        with pytest.raises(ConfigError):
            quartic_config(good, loss={"id": "ridge"})
        with pytest.raises(ConfigError):
            quartic_config([])
        with pytest.raises(ConfigError):
            quartic_config([{"id": "sgd"}])
        with pytest.raises(ConfigError):
            quartic_config([{"id": "gd"}, {"id": "gd"}])  # duplicate labels
        with pytest.raises(ConfigError):
            quartic_config(good, budget={"iterations": 0})
        with pytest.raises(ConfigError):
            quartic_config(good, budget={"iterations": 10, "max_grad_evals": -1})
        with pytest.raises(ConfigError):
            quartic_config(good, reference={"policy": "oracle"})
        with pytest.raises(ConfigError):
            quartic_config(good, reference={"policy": "value"})
        with pytest.raises(ConfigError):
            quartic_config(good, outputs={"formats": ["png"]})
        with pytest.raises(ConfigError):
            quartic_config(good, schema_version=2)

    def test_from_json_is_strict(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json("not json")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json("[1, 2]")
        payload = quartic_config([{"id": "gd", "eta": 0.1}]).payload()
        payload["typo_field"] = 1
        with pytest.raises(ConfigError, match="typo_field"):
            ExperimentConfig.from_json(json.dumps(payload))
        with pytest.raises(ConfigError, match="missing"):
            ExperimentConfig.from_json(json.dumps({"loss": {"id": "glm"}}))

    def test_labels_default_to_ids(self):
        assert method_label({"id": "gd"}) == "gd"
        assert method_label({"id": "gd", "label": "vanilla"}) == "vanilla"


class TestBuildDataset:
    def test_gaussian_design_is_seed_deterministic(self):
        spec = {"rows": 4, "cols": 3, "design": "gaussian", "seed": 9}
        first = build_dataset(spec, default_seed=0)
        second = build_dataset(spec, default_seed=99)
        assert np.array_equal(first.matrix, second.matrix)
        different = build_dataset({**spec, "seed": 10}, default_seed=0)
        assert not np.array_equal(first.matrix, different.matrix)

    def test_identity_design_and_target_rules(self):
        data = build_dataset(
            {"rows": 4, "cols": 4, "design": "identity", "targets": "ones"}, 0
        )
        assert np.array_equal(data.matrix, np.eye(4))
        assert np.array_equal(data.targets, np.ones(4))
        halves = build_dataset({"rows": 5, "cols": 2}, 0)
        assert np.array_equal(halves.targets, [0.0, 0.0, 1.0, 1.0, 1.0])
        explicit = build_dataset(
            {"rows": 2, "cols": 2, "targets": [3.0, -1.0]}, 0
        )
        assert np.array_equal(explicit.targets, [3.0, -1.0])

    def test_rejections(self):
        with pytest.raises(ConfigError):
            build_dataset({"rows": 3, "cols": 2, "design": "identity"}, 0)
        with pytest.raises(ConfigError):
            build_dataset({"rows": 2, "cols": 2, "design": "hadamard"}, 0)
        with pytest.raises(ConfigError):
            build_dataset({"rows": 2, "cols": 2, "targets": [1.0]}, 0)
        with pytest.raises(ConfigError):
            build_dataset({"rows": 0, "cols": 2}, 0)
        with pytest.raises(ConfigError):
            build_dataset({"rows": 2, "cols": 2, "targets": "parity"}, 0)


class TestResolveStart:
    def test_fixed_kinds(self):
        assert np.array_equal(resolve_start({"kind": "zeros"}, 3, 0), np.zeros(3))
        assert np.array_equal(resolve_start({"kind": "ones"}, 2, 0), np.ones(2))
        values = resolve_start({"kind": "explicit", "values": [1.0, 2.0]}, 2, 0)
        assert np.array_equal(values, [1.0, 2.0])
        with pytest.raises(ConfigError):
            resolve_start({"kind": "explicit", "values": [1.0]}, 2, 0)
        with pytest.raises(ConfigError):
            resolve_start({"kind": "sobol"}, 2, 0)

    def test_gaussian_start_scales_and_replays(self):
        a = resolve_start({"kind": "gaussian", "seed": 5}, 4, 0)
        b = resolve_start({"kind": "gaussian", "seed": 5, "scale": 2.0}, 4, 0)
        assert np.array_equal(2.0 * a, b)
        c = resolve_start({"kind": "gaussian"}, 4, 5)
        assert np.array_equal(a, c)


class TestRunMethodDispatch:
    def test_every_known_method_produces_a_trace(self):
        # One cheap smoke run per id; solver behavior has its own modules.
        geom_obj = lambda: build_objective(
            {
                "id": "lp_regression",
                "p": 4,
                "dataset": {"rows": 2, "cols": 2, "design": "identity",
                            "targets": "zeros"},
            },
            0,
        )
        x0 = np.array([1.0, -0.5])
        cases = [
            ({"id": "gd"}, 1 / 3),
            ({"id": "rgd", "p": 4}, QUARTIC_ETA),
            ({"id": "mirror_descent", "dgf": "power"}, 0.2),
            ({"id": "natural_gd"}, 0.2),
            ({"id": "natural_prox", "p": 2}, 0.5),
            ({"id": "bregman_prox", "dgf": "power"}, 0.5),
            ({"id": "tensor", "p": 3}, 0.05),
            ({"id": "nag"}, 1 / 3),
            ({"id": "argd", "p": 4}, QUARTIC_ETA),
            ({"id": "ms-rgd", "p": 4}, 1e-3),
            ({"id": "ms-prox", "p": 2}, 0.5),
            ({"id": "ms-tensor", "p": 3}, 0.05),
            ({"id": "restart-argd", "p": 4, "mu": 1.0, "epochs": 1}, QUARTIC_ETA),
            ({"id": "rcd", "p": 4}, QUARTIC_ETA),
            ({"id": "arcd", "p": 4}, QUARTIC_ETA),
        ]
        for spec, eta in cases:
            trace = run_method(spec, eta, geom_obj(), x0, 4)
            assert trace.records, spec["id"]
        with pytest.raises(ConfigError):
            run_method({"id": "sgd"}, 0.1, geom_obj(), x0, 4)

    def test_restart_needs_a_modulus_somewhere(self):
        obj = build_objective(
            {
                "id": "lp_regression",
                "p": 4,
                "dataset": {"rows": 2, "cols": 2, "design": "identity",
                            "targets": "zeros"},
            },
            0,
        )
        with pytest.raises(ConfigError, match="mu"):
            run_method({"id": "restart-argd", "p": 4}, 0.005, obj,
                       np.ones(2), 4)

    def test_restart_reads_the_losss_own_modulus(self):
        obj = make_power_norm_loss(4, Geometry.identity(2))
        trace = run_method({"id": "restart-argd", "p": 4, "epochs": 1},
                           1e-3, obj, np.array([1.0, 0.5]), 4)
        assert trace.records


class TestStepResolution:
    def test_auto_eta_per_method_family(self):
        records = run_experiment(
            quartic_config(
                [
                    {"id": "gd", "eta": "auto"},
                    {"id": "rgd", "label": "rgd-p4", "p": 4, "eta": "auto"},
                    {"id": "ms-rgd", "label": "ms", "p": 4, "eta": "auto"},
                ],
                budget={"iterations": 10},
            )
        )
        by_label = {r.method: r.metadata for r in records}
        ladder = [1.0, 3.0, 6.0, 6.0]
        assert by_label["gd"]["eta"] == pytest.approx(1 / 3)
        assert by_label["rgd-p4"]["eta"] == rgd_step_size(ladder, 4)
        assert by_label["ms"]["eta"] == ms_step_size(ladder, 4)
        assert all(m["eta_policy"] == "auto" for m in by_label.values())

    def test_auto_eta_without_a_ladder_is_an_isolated_error(self):
        records = run_experiment(
            quartic_config(
                [
                    {"id": "rgd", "label": "bad", "p": "inf", "eta": "auto"},
                    {"id": "rgd", "label": "ok", "p": 4, "eta": 0.006},
                ],
                budget={"iterations": 10},
            )
        )
        bad, ok = records
        assert bad.error is not None and bad.rows == []
        assert ok.error is None and len(ok.rows) == 11

    def test_explicit_eta_must_be_positive(self):
        records = run_experiment(
            quartic_config([{"id": "gd", "eta": -0.5}],
                           budget={"iterations": 5})
        )
        assert records[0].error is not None

    def test_divergence_probe_picks_the_best_survivor(self):
        # On (1/2)||x||^2 plain gd contracts by (1 - eta): eta = 1 nails the
        # minimum in one step, eta = 2 survives but orbits, eta = 4 blows
        # up. The probe must return 1, not the largest survivor.
        config = ExperimentConfig(
            loss={"id": "power_norm", "p": 2, "dim": 2},
            methods=[{"id": "gd", "eta": "probe"}],
            budget={"iterations": 12},
            start={"kind": "ones"},
            name="probe",
        )
        assert divergence_probe(config, config.methods[0], seed=0) == 1.0
        records = run_experiment(config)
        assert records[0].metadata["eta_policy"] == "probe"
        assert records[0].metadata["eta"] == 1.0


class TestRunExperiment:
    def test_metadata_and_reference_provenance(self):
        config = quartic_config([{"id": "rgd", "p": 4, "eta": 0.006}],
                                budget={"iterations": 15})
        record = run_experiment(config)[0]
        meta = record.metadata
        assert meta["config_hash"] == config.config_hash
        assert meta["method_id"] == "rgd"
        assert meta["seed"] == 0
        assert meta["eta_policy"] == "explicit"
        assert meta["grad_evals_total"] == 15
        assert meta["wall_time_s"] >= 0
        assert meta["reference"] == {"value": 0.0, "provenance": "known minimum"}

    def test_rows_follow_the_trace_and_share_the_reference(self):
        config = quartic_config(
            [
                {"id": "rgd", "label": "fast", "p": 4, "eta": 0.006},
                {"id": "gd", "label": "slow", "eta": 0.1},
            ],
            budget={"iterations": 25},
        )
        fast, slow = run_experiment(config)
        assert [row[0] for row in fast.rows] == list(range(26))
        assert fast.rows[-1][2] < slow.rows[-1][2]

    def test_grad_eval_cap_truncates_rows(self):
        config = quartic_config(
            [{"id": "gd", "eta": 0.1}],
            budget={"iterations": 30, "max_grad_evals": 12},
        )
        rows = run_experiment(config)[0].rows
        assert rows
        assert all(r[1] <= 12 for r in rows)
        assert len(rows) < 31

    def test_best_visited_and_explicit_value_references(self):
        methods = [{"id": "rgd", "p": 4, "eta": 0.006}]
        pinned = quartic_config(methods, reference={"policy": "value",
                                                    "value": -1.0})
        record = run_experiment(pinned)[0]
        assert record.metadata["reference"]["provenance"] == "explicit value"
        assert record.rows[-1][2] == pytest.approx(record.rows[-1][2])
        assert record.rows[0][2] == pytest.approx(
            float(record.trace.records[0].f_value) + 1.0
        )
        visited = quartic_config(methods, reference={"policy": "best_visited"})
        row = run_experiment(visited)[0].rows[-1]
        assert row[2] == 0.0  # the last iterate is the best visited point

    def test_known_reference_requires_a_known_minimum(self):
        config = quartic_config(
            [{"id": "gd", "eta": "probe"}],
            loss={
                "id": "lp_regression",
                "p": 4,
                # Overdetermined gaussian system: the minimum is unknown.
                "dataset": {"rows": 6, "cols": 3, "design": "gaussian",
                            "targets": "ones", "seed": 3},
            },
            budget={"iterations": 5},
            start={"kind": "zeros"},
        )
        with pytest.raises(ConfigError):
            run_experiment(config)

    def test_environment_seed_override(self, monkeypatch):
        config = quartic_config(
            [{"id": "rgd", "p": 4, "eta": 0.006}],
            loss={
                "id": "lp_regression",
                "p": 4,
                "dataset": {"rows": 3, "cols": 3, "design": "gaussian",
                            "targets": "zeros", "seed": 42},
            },
            reference={"policy": "best_visited"},
            budget={"iterations": 5},
        )
        plain = run_experiment(config)[0]
        monkeypatch.setenv(SEED_ENV_VAR, "7")
        forced = run_experiment(config)[0]
        assert plain.metadata["seed"] == 0
        assert forced.metadata["seed"] == 7
        assert forced.rows[0][2] != plain.rows[0][2]
        monkeypatch.setenv(SEED_ENV_VAR, "not-a-seed")
        with pytest.raises(ConfigError):
            run_experiment(config)


class TestArtifacts:
    def test_csv_shape_and_full_precision(self, tmp_path):
        config = quartic_config([{"id": "rgd", "p": 4, "eta": 0.006}],
                                budget={"iterations": 8})
        record = run_experiment(config)[0]
        path = tmp_path / "out.csv"
        emit_csv(record, path)
        with open(path, newline="") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == list(CSV_HEADER)
        assert len(rows) == len(record.rows) + 1
        for text_row, row in zip(rows[1:], record.rows):
            assert float(text_row[2]) == row[2]

    def test_svg_bytes_are_stable_and_clamped_gaps_flagged(self, tmp_path):
        config = ExperimentConfig(
            loss={"id": "power_norm", "p": 2, "dim": 2},
            methods=[{"id": "gd", "eta": 1.0}],
            budget={"iterations": 3},
            start={"kind": "ones"},
            name="flat",
        )
        records = run_experiment(config)
        first = tmp_path / "a.svg"
        second = tmp_path / "b.svg"
        emit_svg_plot(records, first)
        emit_svg_plot(records, second)
        assert first.read_bytes() == second.read_bytes()
        # eta = 1 lands exactly on the minimum, so the gap hits the floor.
        assert "plot_clamp" in records[0].metadata
        with pytest.raises(ConfigError):
            emit_svg_plot(records, tmp_path / "c.svg", x_axis="time")
        errored = [RunRecord("broken", [], {}, error="boom")]
        with pytest.raises(SolverError):
            emit_svg_plot(errored, tmp_path / "d.svg")

    def test_write_outputs_names_and_formats(self, tmp_path):
        config = quartic_config(
            [
                {"id": "rgd", "label": "rgd-p4", "p": 4, "eta": 0.006},
                {"id": "gd", "eta": 0.1},
            ],
            budget={"iterations": 6},
            outputs={"formats": ["csv", "svg"]},
        )
        records = run_experiment(config)
        written = write_outputs(config, records, tmp_path)
        names = sorted(p.rsplit("/", 1)[-1] for p in written)
        assert names == [
            "quartic_gd.csv",
            "quartic_grad_evals.svg",
            "quartic_iterations.svg",
            "quartic_rgd-p4.csv",
        ]
        csv_only = quartic_config([{"id": "gd", "eta": 0.1}],
                                  budget={"iterations": 4})
        paths = write_outputs(csv_only, run_experiment(csv_only), tmp_path)
        assert [p.rsplit("/", 1)[-1] for p in paths] == ["quartic_gd.csv"]


class TestFigureCatalog:
    def test_every_shipped_figure_validates(self):
        for name in ("fig_logistic", "fig_l4", "fig_hamiltonian"):
            config = build_figure_experiment(name, seed=0)
            assert config.name == name
            assert "svg" in config.outputs["formats"]
        with pytest.raises(ConfigError):
            build_figure_experiment("fig_unknown")


class TestCertifyExperiment:
    def test_certified_steps_pass_all_checks(self):
        config = quartic_config(
            [
                {"id": "rgd", "label": "rgd-p4", "p": 4, "eta": 0.006},
                {"id": "ms-rgd", "label": "ms", "p": 4, "eta": "auto"},
                {"id": "rcd", "p": 4, "eta": QUARTIC_ETA},
            ],
            budget={"iterations": 25},
        )
        ok, lines = certify_experiment(config)
        assert ok, lines
        assert all(line.startswith("PASS") for line in lines)

    def test_oversized_explicit_step_fails(self):
        config = quartic_config([{"id": "rgd", "p": 4, "eta": 0.2}],
                                budget={"iterations": 20})
        ok, lines = certify_experiment(config)
        assert not ok
        assert any(line.startswith("FAIL") for line in lines)

    def test_probed_steps_are_gated_not_certified(self):
        config = ExperimentConfig(
            loss={"id": "power_norm", "p": 2, "dim": 2},
            methods=[{"id": "gd", "eta": "probe"}],
            budget={"iterations": 10},
            start={"kind": "ones"},
            name="probed",
        )
        ok, lines = certify_experiment(config)
        assert ok
        assert any("probe run" in line for line in lines)

    def test_errored_method_fails_certification(self):
        config = quartic_config(
            [{"id": "rgd", "p": "inf", "eta": "auto"}],
            reference={"policy": "value", "value": 0.0},
            budget={"iterations": 5},
        )
        ok, lines = certify_experiment(config)
        assert not ok
        assert lines[0].startswith("FAIL")


class TestCli:
    def test_bound_prints_the_closed_form(self, capsys):
        code = main(["bound", "--kind", "b33", "--k", "2", "--p", "2",
                     "--delta", "0.5", "--e0", "1", "--mu", "1"])
        assert code == 0
        assert capsys.readouterr().out.strip() == repr(0.1353352832366127)

    def test_bound_rejects_missing_inputs(self, capsys):
        code = main(["bound", "--kind", "b22", "--k", "4", "--p", "2",
                     "--delta", "1", "--e0", "1"])  # convex bound needs R
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_run_writes_artifacts(self, tmp_path, capsys):
        config = quartic_config(
            [{"id": "rgd", "label": "rgd-p4", "p": 4, "eta": 0.006}],
            budget={"iterations": 10},
        )
        cfg_path = tmp_path / "exp.json"
        cfg_path.write_text(config.to_json())
        code = main(["run", "--config", str(cfg_path), "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert (tmp_path / "quartic_rgd-p4.csv").exists()
        assert "wrote" in out and "f_gap" in out

    def test_run_without_a_readable_config_is_a_config_error(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        assert main(["run", "--config", str(bad)]) == 2
        capsys.readouterr()

    def test_certify_exit_codes(self, tmp_path, capsys):
        good = quartic_config([{"id": "rgd", "p": 4, "eta": 0.006}],
                              budget={"iterations": 10})
        good_path = tmp_path / "good.json"
        good_path.write_text(good.to_json())
        assert main(["certify", "--config", str(good_path)]) == 0

        bad = quartic_config([{"id": "rgd", "p": 4, "eta": 0.2}],
                             budget={"iterations": 10})
        bad_path = tmp_path / "bad.json"
        bad_path.write_text(bad.to_json())
        assert main(["certify", "--config", str(bad_path)]) == 1
        capsys.readouterr()

    def test_solver_breakdown_maps_to_exit_three(self, tmp_path, capsys):
        # Every method errors, so the best-visited reference has nothing to
        # read and the run dies with a solver error.
        config = quartic_config(
            [{"id": "rgd", "p": "inf", "eta": "auto"}],
            reference={"policy": "best_visited"},
            budget={"iterations": 5},
        )
        path = tmp_path / "doomed.json"
        path.write_text(config.to_json())
        assert main(["run", "--config", str(path)]) == 3
        assert "solver error" in capsys.readouterr().err
