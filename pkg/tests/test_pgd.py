import numpy as np
import pytest

from multilook import likelihood as likelihood_mod
from multilook.bagging import BagSpec, bagged_project
from multilook.decoder import DecoderConfig
from multilook.errors import DivergedError
from multilook.measurement import SceneImage, generate_looks, init_estimate, make_sensing
from multilook.pgd import PgdConfig, default_step_size, pgd_run, pgd_step
from multilook.rng import RngSpec, STREAM_SENSING


def small_problem(L=4, seed=0, h=16, w=16):
    rng = RngSpec(seed)
    scene = SceneImage(rng.child(99).generator().uniform(0.1, 0.9, (h, w)))
    A = make_sensing(scene.n // 2, scene.n, "haar-rows", rng.child(STREAM_SENSING))
    looks = generate_looks(scene, A, L, 1.0, 0.0, False, rng)
    return scene, A, looks


def small_config(h=16, w=16, iterations=3, **kw):
    return PgdConfig(
        height=h,
        width=w,
        iterations=iterations,
        bag=BagSpec(((8, 8), (16, 16)), (15, 20)),
        decoder=DecoderConfig(h, w, (8, 8, 8, 8), 3),
        seed=1,
        **kw,
    )


class TestStepSizeRule:
    def test_small_L(self):
        assert default_step_size(8) == 0.001

    def test_large_L(self):
        assert default_step_size(9) == 0.01


class TestPgdStep:
    def test_first_iteration_exact(self):
        scene, A, looks = small_problem()
        cfg = small_config()
        x0 = init_estimate(A, looks, 16, 16).flat()
        _, state, record = pgd_step(x0, None, looks, A, cfg, 1)
        assert record.inverse_mode == "exact"
        assert record.iteration == 1
        assert record.dx_inf == float("inf")

    def test_zero_step_size_projects_initialization(self):
        scene, A, looks = small_problem(seed=2)
        cfg = small_config(iterations=1, step_size=0.0)
        cfg_single = PgdConfig(
            height=16, width=16, iterations=1,
            bag=BagSpec(((16, 16),), (20,)),
            decoder=cfg.decoder, seed=cfg.seed, step_size=0.0,
        )
        x0 = init_estimate(A, looks, 16, 16).flat()
        final, traj = pgd_run(looks, A, cfg_single)
        expected = bagged_project(
            x0.reshape(16, 16), cfg_single.bag, cfg_single.decoder, RngSpec(cfg.seed), outer_iteration=1
        )
        assert np.array_equal(final.pixels, expected.estimate)

    def test_gating_rule_modes(self):
        scene, A, looks = small_problem(seed=3)
        cfg = small_config()
        x0 = init_estimate(A, looks, 16, 16).flat()
        x1, state, rec1 = pgd_step(x0, None, looks, A, cfg, 1)
        assert rec1.inverse_mode == "exact"
        # small honest move -> Newton-Schulz with exactly one step
        x_small = np.clip(state.x + 0.05, 0.0, 1.0)
        x2, state2, rec2 = pgd_step(x_small, state, looks, A, cfg, 2)
        assert rec2.inverse_mode == "ns-approx"
        assert state2.ns_steps_used == 1
        assert rec2.dx_inf == pytest.approx(0.05)
        # large move -> exact rebuild
        x_big = np.clip(state2.x + 0.2, 0.0, 1.0)
        _, state3, rec3 = pgd_step(x_big, state2, looks, A, cfg, 3)
        assert rec3.inverse_mode == "exact"
        assert rec3.dx_inf == pytest.approx(0.2)

    def test_iterates_stay_in_range(self):
        scene, A, looks = small_problem(seed=4)
        cfg = small_config(iterations=3, ground_truth=scene.pixels)
        final, traj = pgd_run(looks, A, cfg)
        assert final.pixels.min() > 0.0 and final.pixels.max() < 1.0
        assert all(r.psnr is not None and r.ssim is not None for r in traj)


class TestPgdRun:
    def test_replay_determinism(self):
        scene, A, looks = small_problem(seed=5)
        cfg = small_config(iterations=3)
        final1, traj1 = pgd_run(looks, A, cfg)
        final2, traj2 = pgd_run(looks, A, cfg)
        assert np.array_equal(final1.pixels, final2.pixels)
        assert [r.nll for r in traj1] == [r.nll for r in traj2]
        assert [r.inverse_mode for r in traj1] == [r.inverse_mode for r in traj2]

    def test_force_exact_control_mode(self):
        scene, A, looks = small_problem(seed=6)
        cfg = small_config(iterations=3, force_exact=True)
        _, traj = pgd_run(looks, A, cfg)
        assert all(r.inverse_mode == "exact" for r in traj)

    def test_ns_divergence_falls_back_to_exact(self, monkeypatch):
        scene, A, looks = small_problem(seed=7)
        cfg = small_config(iterations=2)
        real_refresh = likelihood_mod.refresh_inverse
        calls = {"n": 0}

        def flaky_refresh(state, x_new, A_, sw, sz, delta_inf, delta_x, ns_steps=1):
            calls["n"] += 1
            if calls["n"] == 2 and np.isfinite(delta_inf):
                raise DivergedError("synthetic divergence")
            return real_refresh(state, x_new, A_, sw, sz, delta_inf, delta_x, ns_steps)

        monkeypatch.setattr("multilook.pgd.refresh_inverse", flaky_refresh)
        _, traj = pgd_run(looks, A, cfg)
        assert len(traj) == 2  # run survived the divergence

    def test_trajectory_metadata(self):
        scene, A, looks = small_problem(seed=8)
        cfg = small_config(iterations=2)
        _, traj = pgd_run(looks, A, cfg)
        assert [r.iteration for r in traj] == [1, 2]
        assert all(r.seconds > 0 for r in traj)
        assert all(np.isfinite(r.nll) for r in traj)
