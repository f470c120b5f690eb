import json

import numpy as np
import pytest

from multilook.cli import main
from multilook.formats import read_pgm, read_spkl, write_pgm
from multilook.measurement import SceneImage


@pytest.fixture()
def scene_pgm(tmp_path):
    rng = np.random.default_rng(0)
    base = rng.uniform(0.2, 0.8, (8, 8))
    path = tmp_path / "scene.pgm"
    write_pgm(path, SceneImage(base))
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestSimulate:
    def test_deterministic_container(self, tmp_path, scene_pgm):
        out1, out2 = tmp_path / "a.spkl", tmp_path / "b.spkl"
        args = ["simulate", "--image", scene_pgm, "--mn-ratio", "0.5", "--looks", "3",
                "--seed", "7"]
        assert run_cli(*args, "-o", out1) == 0
        assert run_cli(*args, "-o", out2) == 0
        assert out1.read_bytes() == out2.read_bytes()
        A, looks = read_spkl(out1)
        assert A.m == 32 and A.n == 64 and looks.L == 3

    def test_requires_exactly_one_size_flag(self, tmp_path, scene_pgm, capsys):
        rc = run_cli("simulate", "--image", scene_pgm, "--looks", "2", "-o", tmp_path / "x.spkl")
        assert rc == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "usage"

    def test_missing_subcommand_args_exit_1(self, capsys):
        rc = run_cli("simulate")
        assert rc == 1
        assert json.loads(capsys.readouterr().err)["error"] == "usage"


class TestReconstruct:
    def make_run(self, tmp_path, scene_pgm, outname, threads="1"):
        spkl = tmp_path / "meas.spkl"
        assert run_cli("simulate", "--image", scene_pgm, "--mn-ratio", "0.5",
                       "--looks", "4", "--seed", "3", "-o", spkl) == 0
        cfg = {
            "iterations": 2,
            "seed": 5,
            "bag": {"patch_sizes": [[8, 8]], "fit_iters": [10]},
            "decoder": {"channels": [6, 6, 6, 6], "kernel_size": 3},
            "ground_truth": str(scene_pgm),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        outdir = tmp_path / outname
        assert run_cli("--threads", threads, "reconstruct", spkl, "--config", cfg_path,
                       "-o", outdir) == 0
        return outdir

    def test_outputs_exist(self, tmp_path, scene_pgm):
        outdir = self.make_run(tmp_path, scene_pgm, "run1")
        assert (outdir / "final.pgm").exists()
        assert (outdir / "trajectory.csv").exists()
        assert (outdir / "resolved-config.json").exists()
        img = read_pgm(outdir / "final.pgm")
        assert img.pixels.shape == (8, 8)
        header = (outdir / "trajectory.csv").read_text().splitlines()[0]
        assert header == "iteration,inverse_mode,nll,dx_inf,psnr,ssim,seconds"

    def test_replay_from_resolved_config(self, tmp_path, scene_pgm):
        outdir = self.make_run(tmp_path, scene_pgm, "run1")
        replay = tmp_path / "replay"
        assert run_cli("--threads", "1", "reconstruct",
                       "--config", outdir / "resolved-config.json", "-o", replay) == 0

        def strip_seconds(path):
            lines = path.read_text().splitlines()
            return [",".join(line.split(",")[:-1]) for line in lines]

        assert strip_seconds(outdir / "trajectory.csv") == strip_seconds(replay / "trajectory.csv")
        assert (outdir / "final.pgm").read_bytes() == (replay / "final.pgm").read_bytes()

    def test_corrupt_container_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.spkl"
        bad.write_bytes(b"garbage")
        rc = run_cli("reconstruct", bad, "-o", tmp_path / "out")
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "CorruptFileError"

    def test_checkpoints_written(self, tmp_path, scene_pgm):
        spkl = tmp_path / "meas.spkl"
        run_cli("simulate", "--image", scene_pgm, "--mn-ratio", "0.5", "--looks", "2",
                "--seed", "1", "-o", spkl)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "iterations": 2, "checkpoint_stride": 1,
            "bag": {"patch_sizes": [[8, 8]], "fit_iters": [5]},
            "decoder": {"channels": [4, 4, 4, 4], "kernel_size": 1},
        }))
        outdir = tmp_path / "ck"
        assert run_cli("reconstruct", spkl, "--config", cfg_path, "-o", outdir) == 0
        assert (outdir / "checkpoint-0001.pgm").exists()
        assert (outdir / "checkpoint-0002.pgm").exists()


class TestOtherCommands:
    def test_gradcheck_passes(self, capsys):
        assert run_cli("gradcheck") == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 5 and "FAIL" not in out

    def test_lemmas_small(self, capsys):
        assert run_cli("lemmas", "--trials", "25") == 0
        assert "matrix fact checks" in capsys.readouterr().out

    def test_sweep_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        rc = run_cli("sweep", "--n", "16", "--m", "8", "--k", "4",
                     "--looks", "1", "4", "--trials", "2", "-o", out)
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "n,m,k,L,median_mse,q25,q75,failures,slope"
        assert len(lines) == 3
        assert out.with_suffix(".resolved-config.json").exists()

    def test_bench_small(self, capsys):
        assert run_cli("bench", "--m", "64", "--repeats", "2") == 0
        assert "speedup" in capsys.readouterr().out

    def test_unknown_config_key_exit_2(self, tmp_path, scene_pgm, capsys):
        spkl = tmp_path / "m.spkl"
        run_cli("simulate", "--image", scene_pgm, "--mn-ratio", "0.5", "--looks", "2",
                "--seed", "1", "-o", spkl)
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"iterations": 1, "wat": True}))
        rc = run_cli("reconstruct", spkl, "--config", cfg, "-o", tmp_path / "o")
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"] == "ConfigError"
