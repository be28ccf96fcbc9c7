#!/usr/bin/env python3
"""
End-to-end behaviour of OSGA and the baselines on the benchmark families

These runs use the full experiment sizes where that stays within a few seconds per
case, and reduced sizes for the 1000-iteration monotonicity sweep.
"""

import os
import sys
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from osgaflow.benchmark import BenchmarkRunner, run_experiment
from osgaflow.checks import brute_force_subproblem
from osgaflow.config import (
    ElasticNetConfig,
    LassoConfig,
    SpikeRecoveryConfig,
    TikhonovConfig,
    TVDeblurConfig,
    TVDenoiseConfig,
    TVInpaintConfig,
)
from osgaflow.core.base_solver import Termination
from osgaflow.core.linop import (
    Blur2DMap,
    DenseMap,
    DiagonalMap,
    IdentityMap,
    LinearMap,
    MaskMap,
    adjoint_consistency,
    compose,
    scale,
)
from osgaflow.core.osga import OSGASolver, OsgaParams, osga_solve
from osgaflow.core.problems import (
    L1,
    CompositeProblem,
    Indicator,
    L2Sq,
    QuadraticLoss,
    ScaledL2Sq,
    least_squares_problem,
)
from osgaflow.core.proxfun import QuadraticProx, default_prox
from osgaflow.instances import build_instance
from osgaflow.metrics import metric_mse, metric_psnr, support_recovery


class CountingMap(LinearMap):
    """Dense operator that counts its applications"""

    def __init__(self, matrix):
        self.inner = DenseMap(matrix)
        super().__init__(self.inner.domain, self.inner.codomain)
        self.forward = 0
        self.backward = 0

    def _apply(self, x):
        self.forward += 1
        return self.inner.apply(x)

    def _adjoint(self, y):
        self.backward += 1
        return self.inner.adjoint(y)


def first_hit(values, threshold):
    """First index where values <= threshold, inf when never"""
    hits = np.flatnonzero(np.asarray(values) <= threshold)
    return float(hits[0]) if hits.size else float("inf")


class TestSubproblemAgainstBruteForce(unittest.TestCase):
    """Closed-form subproblem solution against a numerical maximizer"""

    def test_random_tuples(self):
        rng = np.random.RandomState(11)
        for trial in range(200):
            weights = rng.uniform(0.5, 2.0, 5) if trial % 2 else None
            Q = QuadraticProx(rng.uniform(0.1, 2.0), rng.uniform(0.5, 2.0),
                              rng.standard_normal(5), weights)
            gamma, h = rng.standard_normal(), rng.standard_normal(5)
            solution = Q.solve_subproblem(gamma, h)
            e_ref, u_ref = brute_force_subproblem(Q, gamma, h, starts=4, seed=trial)
            self.assertLessEqual(abs(solution.e - e_ref), 1e-5 * max(1.0, abs(e_ref)))
            self.assertLessEqual(np.abs(solution.u - u_ref).max(),
                                 1e-4 * max(1.0, np.abs(u_ref).max()))


class TestCertifiedGap(unittest.TestCase):
    """Psi(x_b) - Psi* <= eta Q(x*) on quadratics with a known optimum"""

    def test_random_quadratics(self):
        rng = np.random.RandomState(5)
        n = 50
        for _ in range(20):
            M = np.eye(n) + 0.3 * rng.standard_normal((n, n)) / np.sqrt(n)
            b = rng.standard_normal(n)
            problem = least_squares_problem(DenseMap(M), b)
            x_star = np.linalg.solve(M, b)
            psi_star = problem.nfo_f(x_star).value
            x0 = rng.standard_normal(n)
            Q = default_prox(x0)
            q_star = Q.value(x_star)
            solver = OSGASolver(problem, prox=Q)
            trace = solver.run(x0, Termination(max_iterations=200)).trace
            gap = trace["objective"] - psi_star
            self.assertTrue((gap >= -1e-8).all())
            self.assertTrue((gap <= trace["eta"] * q_star + 1e-8).all())


class TestMonotonicity(unittest.TestCase):
    """Best value and eta never increase over 1000 iterations on every family"""

    CONFIGS = [
        TikhonovConfig(m=50, n=100),
        LassoConfig(m=50, n=100),
        ElasticNetConfig(m=50, n=100, density="sparse"),
        TVDenoiseConfig(image_size=24),
        TVInpaintConfig(image_size=24),
        TVDeblurConfig(image_size=24),
        SpikeRecoveryConfig(m=60, n=120, spikes=6),
    ]

    def test_all_families(self):
        for config in self.CONFIGS:
            with self.subTest(family=config.family):
                runner = BenchmarkRunner(replace(config, solvers=["osga"]))
                instance = build_instance(runner.config)
                solver = runner.make_solver("osga", instance)
                trace = solver.run(instance.x0, Termination(max_iterations=1000)).trace
                self.assertGreater(len(trace), 1)
                self.assertTrue((trace["objective"].diff().dropna() <= 0).all())
                self.assertTrue((trace["eta"].diff().dropna() <= 0).all())


class TestConvergenceRate(unittest.TestCase):
    """Accelerated rate on an ill-conditioned quadratic"""

    def test_iteration_ratio(self):
        n = 1000
        H = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
        lower = np.linalg.cholesky(H)
        b = np.linalg.solve(lower, np.eye(n)[0])
        # 1/2 ||L^T x - b||^2 = 1/2 x^T H x - x_1 + const, minimum 0
        problem = least_squares_problem(DenseMap(lower.T), b)
        x0 = np.ones(n)
        psi0 = problem.nfo_f(x0).value
        _, _, result = osga_solve(problem, None, OsgaParams(psi_target=1e-4 * psi0), x0,
                                  Termination(max_iterations=50_000))
        relative = result.trace["objective"] / psi0
        coarse = first_hit(relative, 1e-2)
        fine = first_hit(relative, 1e-4)
        self.assertTrue(np.isfinite(fine))
        self.assertGreaterEqual(fine / coarse, 3.0)
        self.assertLessEqual(fine / coarse, 30.0)


class TestRandomSystems(unittest.TestCase):
    """OSGA against the baselines on Tikhonov and lasso problems"""

    def compare(self, config):
        runner = BenchmarkRunner(replace(config, m=500, n=1000, max_iterations=500,
                                         record_wall_time=False))
        instance = build_instance(runner.config)
        best = {}
        for name in ("osga", "nsdsg", "pga", "fista", "nes83"):
            run = runner.execute(name, instance)
            if run.ok:
                best[name] = run.result.f_best
        self.assertIn("osga", best)
        self.assertLessEqual(best["osga"], best["nsdsg"])
        self.assertLessEqual(best["osga"], best["pga"])
        accelerated = min(best[name] for name in ("fista", "nes83") if name in best)
        self.assertLessEqual(best["osga"], 1.05 * accelerated)

    def test_tikhonov_dense(self):
        self.compare(TikhonovConfig(density="dense"))

    def test_tikhonov_sparse(self):
        self.compare(TikhonovConfig(density="sparse"))

    def test_lasso_dense(self):
        self.compare(LassoConfig(density="dense"))

    def test_lasso_sparse(self):
        self.compare(LassoConfig(density="sparse"))


class TestSpikeRecovery(unittest.TestCase):
    """Sparse spike recovery from orthonormal Gaussian measurements"""

    def test_recovery(self):
        config = SpikeRecoveryConfig(max_iterations=200, record_wall_time=False)
        runner = BenchmarkRunner(config)
        instance = build_instance(config)
        x_true = instance.x_true

        reference = runner.execute("fista", instance, runner._termination(10))
        self.assertTrue(reference.ok)
        mse_ref = metric_mse(reference.result.x_last, x_true)

        hits = {}
        for name in ("osga", "nes83", "fista"):
            run = runner.execute(name, instance)
            self.assertTrue(run.ok, run.error)
            mse = [metric_mse(x, x_true) for x in run.points]
            hits[name] = first_hit(mse, 2.0 * mse_ref)
            if name != "fista":
                self.assertLessEqual(metric_mse(run.result.x_best, x_true), 2.0 * mse_ref)
                self.assertGreaterEqual(support_recovery(run.result.x_best, x_true), 0.9)
        self.assertTrue(np.isfinite(hits["fista"]))
        self.assertLessEqual(hits["osga"], 0.5 * hits["fista"])


class TestTVDenoising(unittest.TestCase):
    """OSGA against FISTA with an inexact FGP prox"""

    def test_phantom(self):
        config = TVDenoiseConfig(image_size=64, lam=0.05, noise_snr_db=15.0, max_iterations=50,
                                 chit=5, record_wall_time=False)
        runner = BenchmarkRunner(config)
        instance = build_instance(config)
        osga = runner.execute("osga", instance)
        fista = runner.execute("fista", instance)
        self.assertTrue(osga.ok and fista.ok)
        self.assertLessEqual(osga.result.f_best, fista.result.f_best)
        psnr_osga = metric_psnr(osga.result.x_best, instance.x_true)
        psnr_fista = metric_psnr(fista.result.x_best, instance.x_true)
        self.assertLessEqual(abs(psnr_osga - psnr_fista), 1.0)


class TestOperatorAccounting(unittest.TestCase):
    """Adjoint consistency and operator counts of the composite oracle"""

    def test_adjoints(self):
        rng = np.random.RandomState(8)
        keep = rng.random_sample((16, 12)) < 0.6
        keep[0, 0] = True
        blur = Blur2DMap((16, 12), 4)
        for op in (DenseMap(rng.standard_normal((30, 20))), IdentityMap((16, 12)),
                   DiagonalMap(rng.uniform(0.1, 3.0, 20)), MaskMap(keep), blur,
                   scale(0.5, blur), compose(MaskMap(keep), blur)):
            self.assertLessEqual(adjoint_consistency(op, trials=20, seed=1), 1e-10)

    def test_multi_term_counts(self):
        rng = np.random.RandomState(9)
        A = CountingMap(rng.standard_normal((12, 6)))
        W = CountingMap(rng.standard_normal((4, 6)))
        problem = CompositeProblem(
            [(QuadraticLoss(rng.standard_normal(12)), A), (ScaledL2Sq(0.5), IdentityMap(6))],
            [(L1(0.2), W), (L2Sq(0.1), IdentityMap(6)), (Indicator(), IdentityMap(6))],
        )
        result = problem.nfo_fg(rng.standard_normal(6))
        self.assertEqual((result.forward_ops, result.adjoint_ops), (5, 5))
        self.assertEqual((A.forward, A.backward, W.forward, W.backward), (1, 1, 1, 1))
        problem.nfo_f(rng.standard_normal(6))
        self.assertEqual((A.forward, A.backward), (2, 1))


class TestDeterminism(unittest.TestCase):
    """Identical configurations give byte-identical CSV bundles"""

    def test_repeat_runs(self):
        configs = [
            TVDenoiseConfig(image_size=16, max_iterations=15, record_wall_time=False),
            SpikeRecoveryConfig(m=40, n=80, spikes=4, max_iterations=15,
                                record_wall_time=False),
        ]
        with tempfile.TemporaryDirectory() as tmp:
            for i, config in enumerate(configs):
                first = Path(tmp) / f"{i}_a"
                second = Path(tmp) / f"{i}_b"
                run_experiment(config, first)
                run_experiment(config, second)
                for path in sorted(first.glob("*.csv")):
                    self.assertEqual(path.read_bytes(), (second / path.name).read_bytes(),
                                     path.name)


def run_performance_test():
    """Time OSGA on the default lasso preset"""
    import time

    print("Running performance test...")
    config = LassoConfig(max_iterations=500, record_wall_time=False)
    runner = BenchmarkRunner(config)
    instance = build_instance(config)

    start_time = time.time()
    run = runner.execute("osga", instance)
    duration = time.time() - start_time

    print("Performance Test Results:")
    print(f"  Duration: {duration:.2f} seconds")
    print(f"  Iterations: {run.result.iterations}")
    print(f"  Operator applications: {run.result.forward_ops + run.result.adjoint_ops}")

    assert duration < 60, f"OSGA too slow: {duration:.2f} seconds"


if __name__ == '__main__':
    print("Running OSGAFlow acceptance tests...")
    unittest.main(verbosity=2, exit=False)

    print("\n" + "=" * 50)
    run_performance_test()
