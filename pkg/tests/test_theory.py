import numpy as np
import pytest

from conftest import fd_gradient
from multilook.errors import BadShapeError
from multilook.likelihood import nll_real
from multilook.measurement import LookSet, SensingMatrix, generate_looks, make_sensing
from multilook.rng import RngSpec
from multilook.theory import (
    LipschitzGenerator,
    MleOptions,
    SweepConfig,
    eigenvalue_bound_holds,
    lemma_checks,
    mle_solve_real,
    sweep_mse,
)


class TestLipschitzGenerator:
    def test_block_structure(self):
        gen = LipschitzGenerator(n=8, k=2, offset=0.5)
        x = gen(np.array([2.0, -2.0]))
        assert np.allclose(x[:4], 0.5 + 2.0 / 2.0)
        assert np.allclose(x[4:], 0.5 - 2.0 / 2.0)

    def test_one_lipschitz_100_random_pairs(self):
        gen = LipschitzGenerator(n=24, k=6)
        rng = np.random.default_rng(0)
        for _ in range(100):
            t1, t2 = rng.standard_normal((2, 6))
            lhs = np.linalg.norm(gen(t1) - gen(t2))
            assert lhs <= np.linalg.norm(t1 - t2) + 1e-12

    def test_outputs_stay_in_range_on_box(self):
        gen = LipschitzGenerator(n=16, k=4)
        rng = np.random.default_rng(1)
        for _ in range(50):
            x = gen(gen.random_theta(rng))
            assert x.min() >= gen.x_min - 1e-12 and x.max() <= gen.x_max + 1e-12

    def test_k_must_divide_n(self):
        with pytest.raises(BadShapeError):
            LipschitzGenerator(n=10, k=3)

    def test_chain_rule_matches_finite_differences(self):
        n, m, k = 16, 8, 4
        rng = RngSpec(2)
        gen = LipschitzGenerator(n=n, k=k)
        A = make_sensing(m, n, "gaussian-real", rng.child(1))
        x_o = gen(gen.random_theta(rng.child(2).generator()))
        looks = generate_looks(x_o, A, 3, 1.0, 0.0, True, rng.child(3))
        theta = gen.random_theta(rng.child(4).generator())
        from multilook.likelihood import grad_nll_real

        g = gen.pullback(grad_nll_real(gen(theta), looks, A))
        g_fd = fd_gradient(lambda t: nll_real(gen(t), looks, A), theta)
        assert np.linalg.norm(g - g_fd) / np.linalg.norm(g_fd) < 1e-6

    def test_nominal_radius(self):
        gen = LipschitzGenerator(n=64, k=4, x_max=1.0)
        assert gen.r_theta == pytest.approx(4.0)


class TestMleSolve:
    def test_scalar_closed_form(self):
        # scalar model: minimizer of the likelihood is sqrt(mean(y^2))
        gen = LipschitzGenerator(n=1, k=1, offset=1.0, x_min=0.5, x_max=2.0)
        A = SensingMatrix(np.array([[1.0 + 0j]]))
        looks = LookSet(np.array([[1.0], [np.sqrt(3.0)]]).astype(complex), 1.0, 0.0, real_valued=True)
        _, x_hat = mle_solve_real(looks, A, gen, MleOptions(iterations=600, restarts=3),
                                  rng=np.random.default_rng(0))
        assert x_hat[0] == pytest.approx(np.sqrt(2.0), abs=1e-6)

    def test_zero_iterations_returns_offset(self):
        gen = LipschitzGenerator(n=4, k=2, offset=0.6)
        A = make_sensing(2, 4, "gaussian-real", RngSpec(3))
        looks = generate_looks(np.full(4, 0.6), A, 2, 1.0, 0.0, True, RngSpec(4))
        _, x_hat = mle_solve_real(looks, A, gen, MleOptions(iterations=0, restarts=1))
        assert np.allclose(x_hat, 0.6)

    def test_more_looks_reduce_error_paired_seeds(self):
        n, m, k = 16, 8, 2
        gen = LipschitzGenerator(n=n, k=k)
        rng = RngSpec(5)
        A = make_sensing(m, n, "gaussian-real", rng.child(1))
        theta_o = gen.random_theta(rng.child(2).generator())
        x_o = gen(theta_o)
        looks_many = generate_looks(x_o, A, 256, 1.0, 0.0, True, rng.child(3))
        looks_few = LookSet(looks_many.looks[:4], 1.0, 0.0, real_valued=True)
        opt = MleOptions(iterations=400, restarts=3)
        _, x_many = mle_solve_real(looks_many, A, gen, opt, np.random.default_rng(0))
        _, x_few = mle_solve_real(looks_few, A, gen, opt, np.random.default_rng(0))
        assert np.linalg.norm(x_many - x_o) < np.linalg.norm(x_few - x_o)


class TestSweep:
    def test_determinism(self):
        cfg = SweepConfig(n_grid=(16,), m_grid=(8,), k_grid=(4,), L_grid=(1, 4), trials=2,
                          mle=MleOptions(iterations=60, restarts=2))
        c1 = sweep_mse(cfg)
        c2 = sweep_mse(cfg)
        assert [(a.L, a.median_mse) for a in c1] == [(b.L, b.median_mse) for b in c2]

    def test_cells_and_slope_present(self):
        cfg = SweepConfig(n_grid=(16,), m_grid=(8,), k_grid=(4,), L_grid=(1, 4, 16), trials=3,
                          mle=MleOptions(iterations=80, restarts=2))
        cells = sweep_mse(cfg)
        assert [c.L for c in cells] == [1, 4, 16]
        assert all(np.isfinite(c.median_mse) for c in cells)
        assert cells[0].slope is not None


class TestLemmaChecks:
    def test_equal_matrices_trivially_pass(self):
        B = np.diag([1.0, 2.0])
        assert eigenvalue_bound_holds(B, B)

    def test_hand_computed_diagonal_case(self):
        B, C = np.diag([1.0, 2.0]), np.diag([2.0, 1.0])
        # eigenvalues of B^-1 - C^-1 are +-1/2; bound is 1/(1*1) * 1 = 1
        assert eigenvalue_bound_holds(B, C)

    def test_report_thresholds(self):
        report = lemma_checks(trials=200, rng=RngSpec(6), sv_trials=100, cov_looks=10_000)
        assert report.eigenvalue_bound_passes == 200
        assert report.singular_band_passes >= 95
        assert report.covariance_rel_error < 0.05
        text = report.summary()
        assert "eigenvalue" in text and "singular" in text
