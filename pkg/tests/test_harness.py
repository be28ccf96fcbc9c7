#!/usr/bin/env python3
"""
Tests for configuration, instance generation, metrics, the benchmark runner and the CLI
"""

import os
import sys
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from osgaflow.benchmark import SUMMARY_COLUMNS, BenchmarkRunner, run_experiment, summary_profile
from osgaflow.checks import run_invariant_checks
from osgaflow.cli import EXIT_CONFIG, EXIT_OK, main
from osgaflow.config import (
    ExperimentConfig,
    LassoConfig,
    SpikeRecoveryConfig,
    TikhonovConfig,
    TVDeblurConfig,
    TVDenoiseConfig,
    TVInpaintConfig,
    apply_overrides,
    get_preset,
    load_config,
    preset_names,
)
from osgaflow.core.linop import Blur2DMap, MaskMap
from osgaflow.exceptions import ConfigError, ProfileError
from osgaflow.instances import (
    add_noise,
    build_instance,
    gen_random_system,
    gen_sensing_matrix,
    gen_spike_signal,
    inpainting_mask,
    make_phantom,
    read_image,
    write_image,
)
from osgaflow.metrics import (
    TRACE_COLUMNS,
    metric_isnr,
    metric_mse,
    metric_psnr,
    performance_profile,
    relative_value_error,
    support_recovery,
)


def small_lasso(**overrides):
    config = LassoConfig(m=20, n=40, density="dense", instances=2, max_iterations=20,
                         record_wall_time=False, reference_factor=2)
    return replace(config, **overrides)


class TestConfig(unittest.TestCase):
    """Test presets, overrides and config files"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, text):
        path = self.dir / "config.yaml"
        path.write_text(text)
        return path

    def test_presets(self):
        self.assertEqual(get_preset("tv_denoise").lam, 0.05)
        self.assertEqual(get_preset("tv_denoise").noise_snr_db, 15.0)
        self.assertEqual(get_preset("spike_recovery").lam_factor, 0.1)
        self.assertEqual(get_preset("spike_recovery").subgradient_rule, "min_norm")
        self.assertEqual(get_preset("spike_recovery").q0_rule, "backprojection")
        self.assertEqual(get_preset("lasso").subgradient_rule, "sign")
        self.assertEqual(get_preset("tikhonov_large").n, 10000)
        self.assertEqual(get_preset("spike_recovery_small_lambda").lam_factor, 0.001)
        self.assertIn("lasso_large", preset_names())
        with self.assertRaises(ConfigError):
            get_preset("nope")
        for name in preset_names():
            get_preset(name).validate()

    def test_resolved_defaults(self):
        self.assertEqual(LassoConfig().resolved_nsdsg_alpha0(), 1e-4)
        self.assertEqual(TikhonovConfig().resolved_nsdsg_alpha0(), 1e-7)
        self.assertEqual(LassoConfig().resolved_lipschitz_scale(), 1e2)
        self.assertEqual(TikhonovConfig().resolved_lipschitz_scale(), 1e4)
        self.assertEqual(TVDenoiseConfig().resolved_lipschitz_scale(), 1.0)
        self.assertEqual(SpikeRecoveryConfig().resolved_lipschitz_scale(), 1e2)

    def test_overrides(self):
        config = apply_overrides(LassoConfig(), {"solvers": "osga, fista", "seed": 3})
        self.assertEqual(config.solvers, ["osga", "fista"])
        self.assertEqual(config.seed, 3)
        with self.assertRaises(ConfigError):
            apply_overrides(LassoConfig(), {"iterations": 5})

    def test_validation(self):
        bad = [
            {"family": "ridge"},
            {"solvers": ["osga", "adam"]},
            {"solvers": []},
            {"density": "banded"},
            {"noise_snr_db": 10.0, "noise_variance": 0.1},
            {"max_iterations": None},
            {"q0_rule": "guess"},
            {"subgradient_rule": "random"},
            {"tv_prox": "pdhg"},
            {"nes83_rho": 1.0},
            {"lam": -1.0},
        ]
        for overrides in bad:
            with self.assertRaises(ConfigError, msg=str(overrides)):
                replace(ExperimentConfig(), **overrides).validate()

    def test_load_config(self):
        config = load_config(self.write("preset: tv_denoise\nimage_size: 16\nsolvers: osga,pga\n"))
        self.assertEqual(config.family, "tv_denoise")
        self.assertEqual(config.lam, 0.05)
        self.assertEqual(config.image_size, 16)
        self.assertEqual(config.solvers, ["osga", "pga"])
        # the family key alone selects the family preset
        self.assertEqual(load_config(self.write("family: lasso\n")).density, "sparse")

    def test_load_config_errors(self):
        for text in ("bogus: 1\n", "m: {rows: 3}\n", "- a\n- b\n", "m: [1, 2\n", "m: 0\n"):
            with self.assertRaises(ConfigError, msg=text):
                load_config(self.write(text))
        with self.assertRaises(ConfigError):
            load_config(self.dir / "missing.yaml")


class TestInstances(unittest.TestCase):
    """Test the instance generators"""

    def test_random_system(self):
        A, y, x0 = gen_random_system(30, 50, "dense", seed=1)
        self.assertEqual(A.matrix.shape, (30, 50))
        self.assertEqual((y.shape, x0.shape), ((30,), (50,)))
        self.assertTrue(np.all((A.matrix >= 0) & (A.matrix < 1)))
        A2, _, _ = gen_random_system(30, 50, "dense", seed=1)
        np.testing.assert_array_equal(A.matrix, A2.matrix)

    def test_sparse_density(self):
        A, _, _ = gen_random_system(200, 500, "sparse", seed=0, p=0.05)
        fraction = np.count_nonzero(A.matrix) / A.matrix.size
        self.assertGreater(fraction, 0.045)
        self.assertLess(fraction, 0.055)

    def test_spike_signal(self):
        x = gen_spike_signal(100, 7, seed=3)
        self.assertEqual(np.count_nonzero(x), 7)
        self.assertTrue(set(np.unique(x)) <= {-1.0, 0.0, 1.0})
        self.assertEqual(np.count_nonzero(gen_spike_signal(10, 0)), 0)
        with self.assertRaises(ValueError):
            gen_spike_signal(5, 6)

    def test_sensing_matrix_rows_orthonormal(self):
        A = gen_sensing_matrix(20, 60, seed=2).matrix
        np.testing.assert_allclose(A @ A.T, np.eye(20), atol=1e-12)
        with self.assertRaises(ValueError):
            gen_sensing_matrix(5, 4)

    def test_noise(self):
        y = 2.0 * np.ones(100_000)
        np.testing.assert_array_equal(add_noise(y, variance=0.0), y)
        np.testing.assert_array_equal(add_noise(y, snr_db=float("inf")), y)
        noisy = add_noise(y, snr_db=20.0, seed=4)
        snr = 10 * np.log10(4.0 / np.mean((noisy - y) ** 2))
        self.assertAlmostEqual(snr, 20.0, delta=0.2)
        noisy = add_noise(y, variance=1e-2, seed=5)
        self.assertAlmostEqual(np.var(noisy - y) / 1e-2, 1.0, delta=0.03)
        with self.assertRaises(ValueError):
            add_noise(y, snr_db=10.0, variance=1.0)

    def test_phantom(self):
        image = make_phantom(32)
        self.assertEqual(image.shape, (32, 32))
        self.assertEqual(image.min(), 0.0)
        self.assertEqual(image.max(), 1.0)
        self.assertEqual(image[0, 0], 0.0)
        self.assertAlmostEqual(image[16, 16], 0.2, places=12)
        levels = set(np.round(np.unique(image), 6))
        self.assertTrue(levels <= {0.0, 0.1, 0.2, 0.3, 0.4, 1.0})
        self.assertGreaterEqual(len(levels), 4)
        with self.assertRaises(ValueError):
            make_phantom(4)

    def test_image_round_trip(self):
        image = make_phantom(16)
        with tempfile.TemporaryDirectory() as tmp:
            for suffix in (".pgm", ".png"):
                path = Path(tmp) / f"phantom{suffix}"
                write_image(path, image)
                np.testing.assert_allclose(read_image(path), image, atol=0.5 / 255)

    def test_image_reading(self):
        with tempfile.TemporaryDirectory() as tmp:
            binary_path = Path(tmp) / "a.pgm"
            binary_path.write_bytes(b"P5\n3 1\n255\n" + bytes([0, 51, 255]))
            np.testing.assert_allclose(read_image(binary_path), [[0.0, 0.2, 1.0]])
            bad_path = Path(tmp) / "b.pgm"
            bad_path.write_bytes(b"not an image at all")
            with self.assertRaises(ValueError):
                read_image(bad_path)
            with self.assertRaises(ValueError):
                write_image(Path(tmp) / "c.png", np.zeros(4))

    def test_image_path_instance(self):
        image = make_phantom(12)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "phantom.png"
            write_image(path, image)
            instance = build_instance(TVDenoiseConfig(image_path=str(path)))
        self.assertEqual(instance.x_true.shape, (12, 12))
        np.testing.assert_allclose(instance.x_true, image, atol=0.5 / 255)
        self.assertEqual(instance.metadata["image"], str(path))

    def test_inpainting_mask(self):
        keep = inpainting_mask((10, 10), 0.4, seed=1)
        self.assertEqual(int(keep.sum()), 60)
        np.testing.assert_array_equal(keep, inpainting_mask((10, 10), 0.4, seed=1))

    def test_build_instances(self):
        lasso = build_instance(small_lasso(), index=1)
        self.assertEqual(lasso.name, "lasso_01")
        self.assertEqual(lasso.seed, 42 + 1000)
        self.assertEqual(lasso.x0.shape, (40,))
        self.assertEqual((lasso.problem.n1, lasso.problem.n2), (1, 1))

        spike = build_instance(SpikeRecoveryConfig(m=30, n=60, spikes=5))
        np.testing.assert_array_equal(spike.x0, np.zeros(60))
        self.assertAlmostEqual(spike.lam, 0.1 * np.max(np.abs(spike.A.adjoint(spike.observed))))
        self.assertEqual(np.count_nonzero(spike.x_true), 5)

        inpaint = build_instance(TVInpaintConfig(image_size=16))
        self.assertIsInstance(inpaint.A, MaskMap)
        self.assertTrue(np.all(inpaint.x0[~inpaint.A.keep] == 0.0))
        np.testing.assert_array_equal(inpaint.x0, inpaint.degraded)

        deblur = build_instance(TVDeblurConfig(image_size=16))
        self.assertIsInstance(deblur.A, Blur2DMap)
        self.assertEqual(deblur.x0.shape, (16, 16))


class TestMetrics(unittest.TestCase):
    """Test reconstruction metrics and performance profiles"""

    def test_psnr_and_isnr(self):
        X0 = np.zeros((4, 4))
        self.assertAlmostEqual(metric_psnr(np.full((4, 4), 0.1), X0), 20.0)
        self.assertAlmostEqual(metric_psnr(np.full((4, 4), 25.5), X0, scale="byte"), 20.0)
        self.assertEqual(metric_psnr(X0, X0), float("inf"))
        self.assertAlmostEqual(metric_isnr(np.full((4, 4), 0.1), np.full((4, 4), 0.2), X0),
                               20 * np.log10(2.0))
        self.assertAlmostEqual(metric_mse(np.array([1.0, 3.0]), np.array([0.0, 0.0])), 5.0)

    def test_relative_errors_and_support(self):
        self.assertEqual(relative_value_error(10.0, 2.0, 10.0), 1.0)
        self.assertEqual(relative_value_error(3.0, 3.0, 3.0), 0.0)
        self.assertEqual(support_recovery(np.array([0.9, -0.6, 0.1, 0.0]),
                                          np.array([1.0, -1.0, 1.0, 0.0])), 2 / 3)

    def test_performance_profile(self):
        table = pd.DataFrame({"a": [1.0, 4.0], "b": [2.0, 2.0]})
        profile = performance_profile(table, tau_grid=[1.0, 2.0])
        self.assertEqual(profile.loc[1.0, "a"], 0.5)
        self.assertEqual(profile.loc[1.0, "b"], 0.5)
        self.assertEqual(profile.loc[2.0, "a"], 1.0)
        failed = performance_profile(pd.DataFrame({"a": [1.0], "b": [np.inf]}), [1.0, 10.0])
        self.assertEqual(failed["b"].tolist(), [0.0, 0.0])

    def test_profile_errors(self):
        for table in (pd.DataFrame(), pd.DataFrame({"a": [np.nan]}), pd.DataFrame({"a": [0.0]})):
            with self.assertRaises(ProfileError):
                performance_profile(table)

    def test_summary_profile(self):
        summary = pd.DataFrame({
            "family": ["lasso"] * 4, "instance": [0, 0, 1, 1],
            "solver": ["osga", "fista"] * 2, "status": ["ok", "ok", "ok", "failed"],
            "best_objective": [1.0, 2.0, 3.0, np.nan],
        })
        profile = summary_profile(summary, tau_grid=[1.0, 2.0])
        self.assertEqual(list(profile.columns), ["fista", "osga"])
        self.assertEqual(profile.loc[1.0, "osga"], 1.0)
        self.assertEqual(profile.loc[2.0, "fista"], 0.5)


class TestBenchmark(unittest.TestCase):
    """Test the benchmark runner and its CSV bundle"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_bundle(self):
        result = run_experiment(small_lasso(), self.dir / "out")
        out = self.dir / "out"
        self.assertTrue((out / "config.yaml").exists())
        self.assertEqual(len(result.trace_files), 10)
        self.assertEqual(result.failures, 0)

        summary = pd.read_csv(out / "summary.csv")
        self.assertEqual(list(summary.columns), SUMMARY_COLUMNS)
        self.assertEqual(len(summary), 10)
        self.assertTrue((summary["seconds"] == 0).all())

        trace = pd.read_csv(out / "trace_lasso_00_osga.csv")
        self.assertEqual(list(trace.columns), TRACE_COLUMNS)
        self.assertEqual(len(trace), 21)
        row = summary[(summary["solver"] == "osga") & (summary["instance"] == 0)].iloc[0]
        self.assertEqual(row["best_objective"], trace["objective"].min())
        self.assertTrue(np.all(trace["rel2"] >= -1e-12))
        self.assertTrue((out / "profile.csv").exists())

    def test_deterministic_output(self):
        config = small_lasso(solvers=["osga", "fista", "nes83"])
        run_experiment(config, self.dir / "first")
        run_experiment(config, self.dir / "second")
        first = sorted(p.name for p in (self.dir / "first").iterdir())
        self.assertEqual(first, sorted(p.name for p in (self.dir / "second").iterdir()))
        for name in first:
            self.assertEqual((self.dir / "first" / name).read_bytes(),
                             (self.dir / "second" / name).read_bytes(), name)

    def test_failed_solver_is_recorded(self):
        # anisotropic TV has no proximal operator for PGA/FISTA
        config = TVDenoiseConfig(image_size=16, isotropic=False, max_iterations=10,
                                 record_wall_time=False, solvers=["osga", "pga", "fista"])
        result = run_experiment(config, self.dir / "atv")
        summary = result.summary.set_index("solver")
        self.assertEqual(result.failures, 2)
        self.assertEqual(summary.loc["osga", "status"], "ok")
        self.assertEqual(summary.loc["pga", "status"], "failed")
        self.assertIn("ConfigError", summary.loc["fista", "error"])
        self.assertEqual(len(result.trace_files), 1)
        self.assertTrue(np.isfinite(summary.loc["osga", "psnr"]))

    def test_no_usable_termination(self):
        config = small_lasso(max_iterations=None, max_seconds=1.0)
        with self.assertRaises(ConfigError):
            BenchmarkRunner(config)

    def test_distance_rule_without_estimate_falls_back(self):
        config = small_lasso(solvers=["osga"], q0_rule="distance", instances=1)
        runner = BenchmarkRunner(config)
        instance = build_instance(config)
        solver = runner.make_solver("osga", instance)
        self.assertAlmostEqual(solver.prox.q0, 0.5 * np.linalg.norm(instance.x0), places=12)

    def test_backprojection_rule(self):
        config = SpikeRecoveryConfig(m=30, n=60, spikes=5, solvers=["osga"])
        runner = BenchmarkRunner(config)
        instance = build_instance(config)
        solver = runner.make_solver("osga", instance)
        backprojection = instance.A.adjoint(instance.observed)
        self.assertAlmostEqual(solver.prox.q0, 0.5 * float(np.vdot(backprojection, backprojection)),
                               places=12)
        self.assertEqual(instance.problem.subgradient_rule, "min_norm")

    def test_spike_step_constant(self):
        config = SpikeRecoveryConfig(m=30, n=60, spikes=5)
        runner = BenchmarkRunner(config)
        instance = build_instance(config)
        column_bound = float(np.max(np.sum(instance.A.matrix ** 2, axis=0)))
        self.assertAlmostEqual(runner.lipschitz_constant(instance), 1e2 * column_bound, places=10)


class TestCommandLine(unittest.TestCase):
    """Test the CLI exit codes"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_run_and_profile(self):
        config = self.dir / "lasso.yaml"
        config.write_text("preset: lasso\nm: 10\nn: 20\ndensity: dense\nmax_iterations: 5\n"
                          "record_wall_time: false\n")
        out = self.dir / "out"
        self.assertEqual(main(["run", str(config), "--out-dir", str(out), "--no-progress",
                               "--solvers", "osga,fista"]), EXIT_OK)
        self.assertTrue((out / "summary.csv").exists())
        self.assertEqual(main(["profile", str(out / "summary.csv"),
                               "--output", str(self.dir / "p.csv")]), EXIT_OK)
        self.assertTrue((self.dir / "p.csv").exists())

    def test_config_error_exit_code(self):
        config = self.dir / "bad.yaml"
        config.write_text("bogus: 1\n")
        self.assertEqual(main(["run", str(config), "--out-dir", str(self.dir / "o")]),
                         EXIT_CONFIG)

    def test_check(self):
        self.assertEqual(main(["check"]), EXIT_OK)


class TestInvariantChecks(unittest.TestCase):
    """Test the invariant suites"""

    def test_all_pass(self):
        table = run_invariant_checks(seed=0)
        self.assertEqual(set(table["suite"]),
                         {"adjoint", "oracle", "subproblem", "pus", "chambolle", "osga"})
        failed = table[~table["passed"]]
        self.assertTrue(failed.empty, failed.to_string())


if __name__ == '__main__':
    unittest.main(verbosity=2)
