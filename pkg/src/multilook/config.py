"""Run configuration: a single JSON document that fully determines a run.

Unknown keys are rejected, and the resolved configuration (all defaults
filled in) is echoed into the run directory, so a finished run can be
replayed byte-for-byte from its own output.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import BadShapeError, ConfigError

_RUN_KEYS = {
    "input",
    "seed",
    "height",
    "width",
    "iterations",
    "step_size",
    "delta_x",
    "ns_steps",
    "force_exact",
    "checkpoint_stride",
    "ground_truth",
    "threads",
    "bag",
    "decoder",
}
_BAG_KEYS = {"patch_sizes", "fit_iters", "lr"}
_DECODER_KEYS = {"channels", "kernel_size", "dtype"}


@dataclass
class RunConfig:
    input: str | None = None
    seed: int = 0
    height: int | None = None
    width: int | None = None
    iterations: int = 100
    step_size: float | None = None
    delta_x: float = 0.12
    ns_steps: int = 1
    force_exact: bool = False
    checkpoint_stride: int = 0
    ground_truth: str | None = None
    threads: int = 0
    bag: dict | None = None
    decoder: dict = field(
        default_factory=lambda: {"channels": [128, 128, 128, 128], "kernel_size": 3, "dtype": "float64"}
    )

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("configuration document must be a JSON object")
        unknown = set(doc) - _RUN_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        cfg = cls(**doc)
        if cfg.bag is not None:
            bad = set(cfg.bag) - _BAG_KEYS
            if bad:
                raise ConfigError(f"unknown bag keys: {sorted(bad)}")
        bad = set(cfg.decoder) - _DECODER_KEYS
        if bad:
            raise ConfigError(f"unknown decoder keys: {sorted(bad)}")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_json_dict(doc)

    def resolve(self, n: int, L: int) -> "RunConfig":
        """Fill every default given the measurement dimensions."""
        from .bagging import BagSpec
        from .pgd import default_step_size

        height, width = self.height, self.width
        if height is None or width is None:
            side = int(round(n**0.5))
            if side * side != n:
                raise ConfigError(f"n={n} is not square; set height and width explicitly")
            height = width = side
        if height * width != n:
            raise ConfigError(f"height*width = {height * width} does not match n = {n}")
        bag = self.bag
        if bag is None:
            spec = BagSpec.default_for(height, width)
            bag = {
                "patch_sizes": [list(p) for p in spec.patch_sizes],
                "fit_iters": list(spec.fit_iters),
                "lr": spec.lr,
            }
        else:
            bag = {
                "patch_sizes": [list(map(int, p)) for p in bag["patch_sizes"]],
                "fit_iters": [int(i) for i in bag["fit_iters"]],
                "lr": float(bag.get("lr", 1e-3)),
            }
        decoder = {
            "channels": [int(c) for c in self.decoder.get("channels", [128, 128, 128, 128])],
            "kernel_size": int(self.decoder.get("kernel_size", 3)),
            "dtype": str(self.decoder.get("dtype", "float64")),
        }
        step = self.step_size if self.step_size is not None else default_step_size(L)
        return RunConfig(
            input=self.input,
            seed=int(self.seed),
            height=int(height),
            width=int(width),
            iterations=int(self.iterations),
            step_size=float(step),
            delta_x=float(self.delta_x),
            ns_steps=int(self.ns_steps),
            force_exact=bool(self.force_exact),
            checkpoint_stride=int(self.checkpoint_stride),
            ground_truth=self.ground_truth,
            threads=int(self.threads),
            bag=bag,
            decoder=decoder,
        )

    def bag_spec(self):
        from .bagging import BagSpec

        if self.bag is None:
            raise BadShapeError("configuration is not resolved")
        return BagSpec(
            tuple(tuple(p) for p in self.bag["patch_sizes"]),
            tuple(self.bag["fit_iters"]),
            self.bag["lr"],
        )

    def decoder_config(self):
        from .decoder import DecoderConfig

        return DecoderConfig(
            out_h=self.height,
            out_w=self.width,
            channels=tuple(self.decoder["channels"]),
            kernel_size=self.decoder["kernel_size"],
            dtype=self.decoder["dtype"],
        )

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
