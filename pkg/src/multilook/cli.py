"""Command-line interface.

Subcommands: simulate (scene -> SPKL1 container), reconstruct (container ->
image + trajectory), sweep (error-scaling harness), gradcheck (gradient
oracle suite), lemmas (matrix fact checks), bench (inverse maintenance
timing).  Exit codes: 0 ok, 1 usage error, 2 runtime error; runtime errors
print a machine-readable JSON object on stderr.

Heavy imports are deferred so that --threads can pin the BLAS thread count
before numpy loads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        raise SystemExit(1)


def _set_threads(threads: int) -> None:
    if threads > 0:
        for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="multilook", description=__doc__.split("\n\n")[0])
    p.add_argument("--threads", type=int, default=0, help="BLAS threads (0 = leave to the library)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a measurement container from a PGM scene")
    s.add_argument("--image", required=True, help="input scene (binary PGM)")
    s.add_argument("--mn-ratio", type=float, default=None, help="m as a fraction of n")
    s.add_argument("--m", type=int, default=None, help="number of measurements per look")
    s.add_argument("--looks", type=int, required=True, help="number of looks L")
    s.add_argument("--ensemble", default="haar-rows",
                   choices=["haar-rows", "haar-rows-real", "gaussian-real", "gaussian-complex"])
    s.add_argument("--sigma-w", type=float, default=1.0)
    s.add_argument("--sigma-z", type=float, default=0.0)
    s.add_argument("--real", action="store_true", help="real-valued noise model")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)

    r = sub.add_parser("reconstruct", help="reconstruct a scene from a container")
    r.add_argument("input", nargs="?", default=None, help="SPKL1 container (or set in config)")
    r.add_argument("--config", default=None, help="JSON run configuration")
    r.add_argument("-o", "--output", required=True, help="output directory")

    w = sub.add_parser("sweep", help="error-scaling sweep on the real-valued model")
    w.add_argument("--n", type=int, nargs="+", default=[256])
    w.add_argument("--m", type=int, nargs="+", default=[128])
    w.add_argument("--k", type=int, nargs="+", default=[8])
    w.add_argument("--looks", type=int, nargs="+", default=[1, 4, 16, 64])
    w.add_argument("--trials", type=int, default=5)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("-o", "--output", required=True, help="output CSV path")

    g = sub.add_parser("gradcheck", help="gradient oracle suite")
    g.add_argument("--seed", type=int, default=0)

    le = sub.add_parser("lemmas", help="matrix fact checks")
    le.add_argument("--trials", type=int, default=200)
    le.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bench", help="time one Newton-Schulz step against dense inversion")
    b.add_argument("--m", type=int, action="append", default=None,
                   help="block size m (repeatable; default 512)")
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    return p


def cmd_simulate(args) -> int:
    from . import formats
    from .measurement import generate_looks, make_sensing
    from .rng import RngSpec, STREAM_SENSING

    if (args.m is None) == (args.mn_ratio is None):
        return _usage("give exactly one of --m or --mn-ratio")
    scene = formats.read_pgm(args.image)
    n = scene.n
    m = args.m if args.m is not None else int(round(args.mn_ratio * n))
    rng = RngSpec(args.seed)
    A = make_sensing(m, n, args.ensemble, rng.child(STREAM_SENSING))
    looks = generate_looks(scene, A, args.looks, args.sigma_w, args.sigma_z, args.real, rng)
    formats.write_spkl(args.output, A, looks)
    print(f"wrote {args.output}: m={m}, n={n}, L={args.looks}, ensemble={args.ensemble}")
    return 0


def _usage(message: str) -> int:
    print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
    return 1


def cmd_reconstruct(args) -> int:
    from pathlib import Path

    import numpy as np

    from . import formats
    from .config import RunConfig
    from .errors import ConfigError
    from .pgd import PgdConfig, pgd_run

    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.input is not None:
        cfg.input = args.input
    if cfg.input is None:
        raise ConfigError("no input container given (positional argument or config 'input')")
    A, looks = formats.read_spkl(cfg.input)
    cfg = cfg.resolve(A.n, looks.L)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)

    truth = None
    if cfg.ground_truth:
        truth = formats.read_pgm(cfg.ground_truth).pixels

    pgd_cfg = PgdConfig(
        height=cfg.height,
        width=cfg.width,
        iterations=cfg.iterations,
        bag=cfg.bag_spec(),
        decoder=cfg.decoder_config(),
        seed=cfg.seed,
        step_size=cfg.step_size,
        delta_x=cfg.delta_x,
        ns_steps=cfg.ns_steps,
        force_exact=cfg.force_exact,
        ground_truth=truth,
    )

    def checkpoint(t, image):
        if cfg.checkpoint_stride and t % cfg.checkpoint_stride == 0:
            formats.write_pgm(outdir / f"checkpoint-{t:04d}.pgm", image)

    final, trajectory = pgd_run(looks, A, pgd_cfg, on_iteration=checkpoint)
    formats.write_pgm(outdir / "final.pgm", final)
    formats.write_trajectory_csv(outdir / "trajectory.csv", trajectory)
    cfg.dump(outdir / "resolved-config.json")
    last = trajectory[-1]
    note = f", psnr={last.psnr:.2f} dB" if last.psnr is not None else ""
    print(f"wrote {outdir}/final.pgm after {cfg.iterations} iterations{note}")
    return 0


def cmd_sweep(args) -> int:
    from pathlib import Path

    from . import formats
    from .theory import SweepConfig, sweep_mse

    cfg = SweepConfig(
        n_grid=tuple(args.n),
        m_grid=tuple(args.m),
        k_grid=tuple(args.k),
        L_grid=tuple(args.looks),
        trials=args.trials,
        seed=args.seed,
    )
    cells = sweep_mse(cfg)
    out = Path(args.output)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    formats.write_sweep_csv(out, cells)
    resolved = {
        "n": list(cfg.n_grid),
        "m": list(cfg.m_grid),
        "k": list(cfg.k_grid),
        "looks": list(cfg.L_grid),
        "trials": cfg.trials,
        "seed": cfg.seed,
        "output": str(out),
    }
    out.with_suffix(".resolved-config.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")
    for c in cells:
        print(f"n={c.n} m={c.m} k={c.k} L={c.L}: median MSE {c.median_mse:.3e}")
    return 0


def cmd_gradcheck(args) -> int:
    from .gradcheck import run_all

    results = run_all(seed=args.seed)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 2


def cmd_lemmas(args) -> int:
    from .rng import RngSpec
    from .theory import lemma_checks

    report = lemma_checks(trials=args.trials, rng=RngSpec(args.seed))
    print(report.summary())
    ok = (
        report.eigenvalue_bound_passes == report.eigenvalue_bound_trials
        and report.singular_band_passes >= 0.95 * report.singular_band_trials
        and report.covariance_rel_error < 0.05
    )
    print("all checks passed" if ok else "CHECKS FAILED")
    return 0 if ok else 2


def bench_instance(m: int, seed: int):
    """A well-conditioned Hermitian covariance-like pair (B, M0) for timing."""
    import numpy as np

    from .linalg import BlockHermitian, exact_inverse_block

    rng = np.random.default_rng(seed)
    G = (rng.standard_normal((m, 2 * m)) + 1j * rng.standard_normal((m, 2 * m))) / np.sqrt(2)
    W = G @ G.conj().T / (2 * m) + 0.1 * np.eye(m)
    B = BlockHermitian.from_complex(W)
    return B, exact_inverse_block(B)


def cmd_bench(args) -> int:
    import numpy as np

    from .linalg import block_embed, newton_schulz_step

    sizes = args.m if args.m else [512]
    print(f"{'m':>6} {'dense inv (s)':>15} {'NS step (s)':>13} {'speedup':>9}")
    worst = float("inf")
    for m in sizes:
        B, M = bench_instance(m, args.seed)
        B_dense = block_embed(B)
        t_inv = _best_time(lambda: np.linalg.inv(B_dense), args.repeats)
        t_ns = _best_time(lambda: newton_schulz_step(M, B), args.repeats)
        speedup = t_inv / t_ns
        worst = min(worst, speedup)
        print(f"{m:>6} {t_inv:>15.4f} {t_ns:>13.4f} {speedup:>8.1f}x")
    print(f"one Newton-Schulz step is {worst:.1f}x faster than dense inversion (worst case)")
    return 0


def _best_time(fn, repeats: int) -> float:
    fn()  # warm up
    best = float("inf")
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


_COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "sweep": cmd_sweep,
    "gradcheck": cmd_gradcheck,
    "lemmas": cmd_lemmas,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse signals usage problems (and -h) this way
        return int(exc.code or 0)
    _set_threads(args.threads)
    from .errors import MultilookError

    try:
        return _COMMANDS[args.command](args)
    except MultilookError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "IoError", "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
