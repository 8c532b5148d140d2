"""Drivers, loaders, reports, and the cross-cutting statistical invariants."""

import json
import math

import numpy as np
import pytest

from gpadapt.basis import synth_signal
from gpadapt.errors import ConditioningError
from gpadapt.experiments import (
    DEFAULT_NOISE_SQ,
    ContractionReport,
    ExperimentConfig,
    RunReport,
    contraction_study,
    emit_report,
    load_running_csv,
    run_continuous,
    run_experiment,
    simulate_poly,
)


class TestSimulatePoly:
    def test_support_and_shapes(self):
        data, spec = simulate_poly(500, seed=3)
        assert data.n == 500
        assert np.all((0.0 <= data.x) & (data.x <= 2 * np.pi))
        assert data.sigma_sq == DEFAULT_NOISE_SQ

    def test_residual_variance_matches_noise(self):
        data, spec = simulate_poly(10_000, seed=11)
        resid = data.y - synth_signal(spec, data.x)
        assert 0.0085 <= float(np.var(resid)) <= 0.0115

    def test_residual_mean_clt_bound(self):
        n = 10_000
        data, spec = simulate_poly(n, seed=12)
        resid = data.y - synth_signal(spec, data.x)
        assert abs(float(np.mean(resid))) <= 3.0 * 0.1 / math.sqrt(n)

    def test_deterministic_given_seed(self):
        a, _ = simulate_poly(64, seed=9)
        b, _ = simulate_poly(64, seed=9)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.y, b.y)

    def test_validation(self):
        with pytest.raises(ValueError):
            simulate_poly(0, seed=0)
        with pytest.raises(ValueError):
            simulate_poly(10, seed=0, sigma_sq=0.0)


class TestLoadRunningCsv:
    def _write(self, tmp_path, text):
        p = tmp_path / "run.csv"
        p.write_text(text)
        return p

    def test_basic(self, tmp_path):
        p = self._write(tmp_path, "0,1.5\n1,2.5\n2,3.0\n")
        data = load_running_csv(p)
        assert data.n == 3
        np.testing.assert_allclose(data.x, [0.0, 1.0, 2.0])
        np.testing.assert_allclose(data.y, [1.5, 2.5, 3.0])

    def test_header_tolerated(self, tmp_path):
        p = self._write(tmp_path, "t_sec,speed_kmh\n0,1.5\n1,2.5\n")
        assert load_running_csv(p).n == 2

    def test_extra_columns_ignored(self, tmp_path):
        p = self._write(tmp_path, "0,1.5,99,foo\n1,2.5,98,bar\n")
        data = load_running_csv(p)
        assert data.n == 2
        np.testing.assert_allclose(data.y, [1.5, 2.5])

    def test_malformed_row_names_line(self, tmp_path):
        p = self._write(tmp_path, "1,abc\n")
        with pytest.raises(ValueError, match="line 1"):
            load_running_csv(p)

    def test_malformed_later_row(self, tmp_path):
        p = self._write(tmp_path, "t,v\n0,1.0\nbroken,2.0\n")
        with pytest.raises(ValueError, match="line 3"):
            load_running_csv(p)

    def test_single_column_rejected(self, tmp_path):
        p = self._write(tmp_path, "0,1.0\n42\n")
        with pytest.raises(ValueError, match="line 2"):
            load_running_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_running_csv(tmp_path / "absent.csv")

    def test_empty_file_gives_empty_dataset(self, tmp_path):
        p = self._write(tmp_path, "")
        data = load_running_csv(p)
        assert data.n == 0

    def test_blank_lines_skipped(self, tmp_path):
        p = self._write(tmp_path, "0,1.0\n\n1,2.0\n\n")
        assert load_running_csv(p).n == 2


class TestExperimentConfig:
    def test_defaults_valid(self):
        cfg = ExperimentConfig()
        assert cfg.estimate_noise

    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            ExperimentConfig(n=0)
        with pytest.raises(ValueError):
            ExperimentConfig(prior="spline")
        with pytest.raises(ValueError):
            ExperimentConfig(features="neither")
        with pytest.raises(ValueError):
            ExperimentConfig(beta_minus=2.0, beta_plus=1.0)
        with pytest.raises(ValueError):
            ExperimentConfig(c_m=0.0)
        with pytest.raises(ValueError):
            ExperimentConfig(m=0)
        with pytest.raises(ValueError):
            ExperimentConfig(sigma_sq="guess")
        with pytest.raises(ValueError):
            ExperimentConfig(sigma_sq=-0.5)
        with pytest.raises(ValueError):
            ExperimentConfig(query_points=0)

    def test_dim_requires_fixed_noise(self):
        with pytest.raises(ValueError):
            ExperimentConfig(prior="dim", sigma_sq="estimate")
        cfg = ExperimentConfig(prior="dim", sigma_sq=0.25)
        assert not cfg.estimate_noise


class TestRunReport:
    def _report(self, k=5, truth=True):
        q = np.linspace(0.0, 1.0, k)
        mean = np.sin(q)
        return RunReport(
            experiment="unit", chosen={"alpha": 1.0, "sigma_sq": 0.01},
            query=q, mean=mean, lo95=mean - 0.1, hi95=mean + 0.1,
            truth=mean * 0.99 if truth else None,
            l2_error=0.05 if truth else None,
            coverage=0.9 if truth else None,
            wall_time=1.25,
            selection=[{"lam": 1.0, "log_mass": -0.5, "elbo_lambda": -3.0,
                        "elbo": -3.5, "m": 4, "sigma_sq": None,
                        "wall_time": 0.01, "error": None}],
        )

    def test_json_round_trip_is_exact(self):
        rep = self._report()
        back = RunReport.from_json(rep.to_json())
        np.testing.assert_array_equal(back.query, rep.query)
        np.testing.assert_array_equal(back.mean, rep.mean)
        np.testing.assert_array_equal(back.truth, rep.truth)
        assert back.chosen == rep.chosen
        assert back.l2_error == rep.l2_error
        assert back.selection == rep.selection

    def test_round_trip_without_truth(self):
        back = RunReport.from_json(self._report(truth=False).to_json())
        assert back.truth is None and back.coverage is None

    def test_rejects_ragged_bands(self):
        q = np.linspace(0, 1, 4)
        with pytest.raises(ValueError):
            RunReport("u", {}, q, np.zeros(4), np.zeros(3), np.zeros(4),
                      None, None, None, 0.0)

    def test_rejects_bad_coverage(self):
        q = np.linspace(0, 1, 4)
        z = np.zeros(4)
        with pytest.raises(ValueError):
            RunReport("u", {}, q, z, z, z, z, 0.1, 1.7, 0.0)


def _strip_timing(report: RunReport) -> dict:
    raw = json.loads(report.to_json())
    raw.pop("wall_time")
    for row in raw["selection"]:
        row.pop("wall_time")
    return raw


class TestRunExperiment:
    def test_poly_fixed_noise_report_shape(self):
        cfg = ExperimentConfig(experiment="unit", n=400, seed=5,
                               sigma_sq=0.01, query_points=128)
        rep = run_experiment(cfg)
        assert rep.query.size == 128
        assert np.all(rep.lo95 <= rep.mean) and np.all(rep.mean <= rep.hi95)
        assert set(rep.chosen) == {"alpha", "sigma_sq", "m"}
        assert rep.chosen["sigma_sq"] == 0.01
        assert 0.0 <= rep.coverage <= 1.0
        assert rep.l2_error > 0
        # 1.0 + k/log(400) stays below 2.05 for k = 0..6
        assert len(rep.selection) == 7
        assert all(r["error"] is None for r in rep.selection)

    def test_poly_estimated_noise_lands_near_truth(self):
        cfg = ExperimentConfig(experiment="unit", n=2000, seed=1,
                               query_points=64)
        rep = run_experiment(cfg)
        assert 0.005 <= rep.chosen["sigma_sq"] <= 0.05
        chosen_row = [r for r in rep.selection
                      if r["lam"] == rep.chosen["alpha"]][0]
        assert chosen_row["sigma_sq"] == rep.chosen["sigma_sq"]

    def test_dim_prior_pipeline(self):
        cfg = ExperimentConfig(experiment="unit", n=300, seed=2, prior="dim",
                               sigma_sq=0.01, query_points=32)
        rep = run_experiment(cfg)
        assert isinstance(rep.chosen["dim"], int)
        assert 1 <= rep.chosen["dim"] <= int(math.isqrt(300))
        assert rep.coverage is not None

    def test_exp_prior_pipeline(self):
        cfg = ExperimentConfig(experiment="unit", n=400, seed=3, prior="exp",
                               sigma_sq=0.01, query_points=32)
        rep = run_experiment(cfg)
        assert 0.0 < rep.chosen["tau"] <= math.exp(-1.0) + 1e-12

    def test_sample_features_pipeline(self):
        cfg = ExperimentConfig(experiment="unit", n=200, seed=4,
                               features="sample", sigma_sq=0.01,
                               query_points=32)
        rep = run_experiment(cfg)
        assert set(rep.chosen) == {"alpha", "sigma_sq", "m"}

    def test_csv_source_has_no_truth_columns(self, tmp_path):
        data, spec = simulate_poly(150, seed=8, sigma_sq=0.04)
        p = tmp_path / "in.csv"
        rows = "\n".join(f"{x:.17g},{y:.17g}" for x, y in zip(data.x, data.y))
        p.write_text(rows + "\n")
        cfg = ExperimentConfig(experiment="unit", n=1, seed=0,
                               data_path=str(p), sigma_sq=0.04,
                               query_points=16)
        rep = run_experiment(cfg)
        assert rep.truth is None
        assert rep.l2_error is None and rep.coverage is None

    def test_artifacts_written(self, tmp_path):
        cfg = ExperimentConfig(experiment="unit", n=200, seed=6,
                               sigma_sq=0.01, query_points=16,
                               out_dir=str(tmp_path))
        run_experiment(cfg)
        for name in ("report.json", "band.csv", "selection.csv", "plot.svg"):
            assert (tmp_path / name).exists(), name

    def test_partial_report_on_failure(self, tmp_path):
        p = tmp_path / "tiny.csv"
        p.write_text("0.1,0.5\n")  # one row: the grid builder must refuse
        cfg = ExperimentConfig(experiment="unit", n=1, seed=0,
                               data_path=str(p), sigma_sq=0.01,
                               out_dir=str(tmp_path / "out"))
        with pytest.raises(ValueError):
            run_experiment(cfg)
        partial = json.loads((tmp_path / "out" / "partial_report.json")
                             .read_text())
        assert "failed" in partial

    def test_reproducible_bitwise(self):
        cfg = ExperimentConfig(experiment="unit", n=300, seed=7,
                               query_points=64)
        a = _strip_timing(run_experiment(cfg))
        b = _strip_timing(run_experiment(cfg))
        assert a == b


class TestRunContinuous:
    def test_synthetic_smoke(self):
        cfg = ExperimentConfig(experiment="unit", n=150, seed=3, m=12,
                               query_points=32)
        rep = run_continuous(cfg)
        assert set(rep.chosen) == {"sigma", "nu", "tau", "sigma_sq", "m"}
        assert rep.chosen["m"] == 12
        assert rep.query.size == 32

    def test_fixed_noise_pins_sigma(self):
        cfg = ExperimentConfig(experiment="unit", n=150, seed=3, m=12,
                               sigma_sq=0.04, query_points=16)
        rep = run_continuous(cfg)
        assert rep.chosen["sigma"] == pytest.approx(0.2)

    def test_rejects_tiny_data(self, tmp_path):
        p = tmp_path / "one.csv"
        p.write_text("0,1.0\n")
        cfg = ExperimentConfig(experiment="unit", data_path=str(p),
                               query_points=8)
        with pytest.raises(ValueError):
            run_continuous(cfg)


class TestContraction:
    def test_validation(self):
        with pytest.raises(ValueError):
            contraction_study("dim", 1.0, (100, 200), 5, seed=0)
        with pytest.raises(ValueError):
            contraction_study("dim", 1.0, (100, 200, 150), 5, seed=0)
        with pytest.raises(ValueError):
            contraction_study("dim", 1.0, (100, 200, 400), 4, seed=0)
        with pytest.raises(ValueError):
            contraction_study("wavelet", 1.0, (100, 200, 400), 5, seed=0)
        with pytest.raises(ValueError):
            contraction_study("dim", -1.0, (100, 200, 400), 5, seed=0)

    def test_target_formula(self):
        rep = contraction_study("dim", 0.6, (50, 100, 200), 5, seed=1)
        assert rep.target == pytest.approx(-0.6 / 2.2)
        assert rep.errors.shape == (5, 3)
        assert np.isfinite(rep.slope)

    def test_acceptance_scale_trend(self, contraction_dim):
        report, _ = contraction_dim
        assert report.mean_errors.shape == (3,)
        assert np.all(np.diff(report.mean_errors) < 0)
        assert report.slope < 0
        assert 0 < report.slope_se < 0.1

    def test_doubling_replicates_shrinks_slope_se(self):
        # frozen run: se ratio 0.786853 against the 1/sqrt(2) ideal
        a = contraction_study("dim", 1.0, (200, 400, 800), 6, seed=17)
        b = contraction_study("dim", 1.0, (200, 400, 800), 12, seed=17)
        ratio = b.slope_se / a.slope_se
        assert ratio == pytest.approx(0.786853, abs=1e-3)
        assert 0.5 <= ratio <= 0.95

    def test_workers_match_sequential(self):
        seq = contraction_study("dim", 0.8, (60, 120, 240), 5, seed=5)
        par = contraction_study("dim", 0.8, (60, 120, 240), 5, seed=5,
                                workers=2)
        np.testing.assert_array_equal(seq.errors, par.errors)


class TestEmitReport:
    def _report(self, k=7, truth=True):
        q = np.linspace(0.0, 2.0, k) if k else np.empty(0)
        mean = np.cos(q)
        return RunReport(
            experiment="emit", chosen={"alpha": 1.0},
            query=q, mean=mean, lo95=mean - 0.2, hi95=mean + 0.2,
            truth=np.sin(q) if truth and k else None,
            l2_error=None, coverage=None, wall_time=0.5,
            selection=[{"lam": 1.0, "log_mass": 0.0, "elbo_lambda": -1.0,
                        "elbo": -1.0, "m": 3, "sigma_sq": 0.01,
                        "wall_time": 0.02, "error": None}],
        )

    def test_csv_files_and_schema(self, tmp_path):
        paths = emit_report(self._report(), "csv", tmp_path)
        band = (tmp_path / "band.csv").read_text().splitlines()
        assert band[0] == "x,mean,lo95,hi95,truth"
        assert len(band) == 8
        assert [p.name for p in paths] == ["band.csv", "selection.csv"]

    def test_csv_round_trips_floats(self, tmp_path):
        rep = self._report()
        emit_report(rep, "csv", tmp_path)
        rows = (tmp_path / "band.csv").read_text().splitlines()[1:]
        means = np.array([float(r.split(",")[1]) for r in rows])
        np.testing.assert_array_equal(means, rep.mean)

    def test_truth_column_blank_for_real_data(self, tmp_path):
        emit_report(self._report(truth=False), "csv", tmp_path)
        first = (tmp_path / "band.csv").read_text().splitlines()[1]
        assert first.endswith(",")

    def test_empty_grid_header_only(self, tmp_path):
        rep = RunReport("emit", {}, np.empty(0), np.empty(0), np.empty(0),
                        np.empty(0), None, None, None, 0.0)
        emit_report(rep, "csv", tmp_path)
        assert (tmp_path / "band.csv").read_text() == "x,mean,lo95,hi95,truth\n"

    def test_byte_deterministic(self, tmp_path):
        rep = self._report()
        emit_report(rep, "csv", tmp_path / "a")
        emit_report(rep, "csv", tmp_path / "b")
        emit_report(rep, "svg", tmp_path / "a")
        emit_report(rep, "svg", tmp_path / "b")
        for name in ("band.csv", "selection.csv", "plot.svg"):
            assert ((tmp_path / "a" / name).read_bytes()
                    == (tmp_path / "b" / name).read_bytes())

    def test_svg_has_band_and_truth(self, tmp_path):
        (path,) = emit_report(self._report(), "svg", tmp_path)
        text = path.read_text()
        assert text.startswith("<svg")
        assert "<polygon" in text and "<polyline" in text
        assert "stroke-dasharray" in text  # truth overlay

    def test_bad_format(self, tmp_path):
        with pytest.raises(ValueError):
            emit_report(self._report(), "pdf", tmp_path)


class TestStatisticalInvariants:
    """Cross-module checks on the benchmark-scale fixtures."""

    def test_benchmark_windows(self, bench_reports):
        reports, _ = bench_reports
        alphas = [r.chosen["alpha"] for r in reports]
        noises = [r.chosen["sigma_sq"] for r in reports]
        hits = sum(0.8 <= a <= 1.3 and 0.008 <= s <= 0.022
                   for a, s in zip(alphas, noises))
        assert hits >= 8

    def test_coverage_median(self, bench_reports):
        reports, _ = bench_reports
        covs = [r.coverage for r in reports]
        assert float(np.median(covs)) >= 0.70

    def test_dense_feature_variant(self, bench_reports):
        # doubling c_m doubles the feature count and tightens the bands
        reports, _ = bench_reports
        base = reports[0]
        dense = run_experiment(ExperimentConfig(
            experiment="bench-dense", n=10_000, seed=0, c_m=2.0))
        assert abs(dense.chosen["m"] - 42) <= 2
        width_base = base.hi95 - base.lo95
        width_dense = dense.hi95 - dense.lo95
        frac = float(np.mean(width_dense <= width_base))
        assert frac >= 0.60

    def test_bound_vs_evidence_tuning_agree(self, vb_eb_runs):
        rows, _ = vb_eb_runs
        triple_rel = np.array([np.abs(r["vb"] - r["eb"]) / r["eb"]
                               for r in rows])
        assert np.all(np.median(triple_rel, axis=0) <= 0.15)
        pred_rel = [np.linalg.norm(r["vb_mean"] - r["eb_mean"])
                    / np.linalg.norm(r["eb_mean"]) for r in rows]
        assert float(np.median(pred_rel)) <= 0.02
