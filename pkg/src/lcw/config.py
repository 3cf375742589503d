"""Run configuration files: flat TOML sections with strict key checking.

Sections: [dataset], [stage1], [stage2], [generator], [output].  Unknown
sections or keys are rejected by name; per-preset defaults fill in
anything omitted (e.g. the image presets default to latent 8, lr 1e-3,
lambda 1).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import datasets as dsmod
from .errors import ConfigError
from .training import TrainConfig

__all__ = ["RunConfig", "load_run_config"]

_SECTIONS = {
    "dataset": {
        "preset": str, "seed": int, "n": int, "k_modes": int, "radius": float,
        "std": float, "noise_std": float, "grid": int, "side": int,
        "n_classes": int, "images_path": str, "labels_path": str, "limit": int,
        "path": str, "embed_dim": int, "embed_seed": int, "standardize": bool,
        "validation_fraction": float,
    },
    "stage1": {
        "objective": str, "lr": float, "lambda": float, "batch_size": int,
        "epochs": int, "latent_dim": int, "eval_every": int, "seed": int,
        "log_both_terms": bool, "eval_samples": int,
    },
    "stage2": {
        "lr": float, "batch_size": int, "epochs": int, "noise_dim": int,
        "eval_every": int, "seed": int, "eval_samples": int,
    },
    "generator": {
        "distance": str, "lr": float, "batch_size": int, "epochs": int,
        "noise_dim": int, "sw_num_dirs": int, "eval_every": int, "seed": int,
        "eval_samples": int,
    },
    "output": {"dir": str},
}

_PRESETS = ("ring", "moons", "checkerboard", "synth_images", "mnist", "csv", "binary")
_PLANAR_PRESETS = ("ring", "moons", "checkerboard", "csv", "binary")

# hyperparameter defaults per preset family
_DEFAULTS = {
    "planar": {
        "stage1": {"objective": "cw2", "lr": 1e-3, "lambda": 1.0, "batch_size": 128,
                   "epochs": 60, "latent_dim": 2, "eval_every": 10},
        "stage2": {"lr": 5e-4, "batch_size": 128, "epochs": 60, "noise_dim": 2,
                   "eval_every": 10},
        "generator": {"distance": "cw", "lr": 5e-4, "batch_size": 128, "epochs": 60,
                      "noise_dim": 2, "sw_num_dirs": 1000, "eval_every": 10},
    },
    "image": {
        "stage1": {"objective": "cw2", "lr": 1e-3, "lambda": 1.0, "batch_size": 128,
                   "epochs": 30, "latent_dim": 8, "eval_every": 5},
        "stage2": {"lr": 5e-4, "batch_size": 128, "epochs": 50, "noise_dim": 8,
                   "eval_every": 5},
        "generator": {"distance": "cw", "lr": 5e-4, "batch_size": 128, "epochs": 30,
                      "noise_dim": 8, "sw_num_dirs": 1000, "eval_every": 5},
    },
}


def _check_section(name: str, entries: dict, path) -> dict:
    schema = _SECTIONS[name]
    out = {}
    for key, value in entries.items():
        if key not in schema:
            raise ConfigError(f"{path}: unknown key '{key}' in section [{name}]")
        want = schema[key]
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, want) or (want is int and isinstance(value, bool)):
            raise ConfigError(
                f"{path}: key '{key}' in [{name}] must be {want.__name__}")
        out[key] = value
    return out


@dataclass
class RunConfig:
    """Validated run configuration with per-preset defaults applied on access."""

    dataset: dict
    stage1: dict = field(default_factory=dict)
    stage2: dict = field(default_factory=dict)
    generator: dict = field(default_factory=dict)
    output_dir: str = "runs"
    source: str = "<memory>"

    @property
    def preset(self) -> str:
        return self.dataset["preset"]

    @property
    def is_planar(self) -> bool:
        return self.preset in _PLANAR_PRESETS and "embed_dim" not in self.dataset

    @property
    def is_image(self) -> bool:
        return self.preset in ("mnist", "synth_images")

    def _family(self) -> str:
        return "image" if self.is_image else "planar"

    def _merged(self, section: str) -> dict:
        merged = dict(_DEFAULTS[self._family()][section])
        merged.update(getattr(self, section))
        return merged

    def build_dataset(self):
        d = self.dataset
        preset = self.preset
        seed = d.get("seed", 1)
        if preset == "ring":
            ds = dsmod.gaussian_ring(d.get("k_modes", 8), d.get("radius", 5.0),
                                     d.get("std", 0.2), d.get("n", 5000), seed)
        elif preset == "moons":
            ds = dsmod.two_moons(d.get("n", 5000), d.get("noise_std", 0.05), seed)
        elif preset == "checkerboard":
            ds = dsmod.checkerboard(d.get("n", 5000), d.get("grid", 4), seed)
        elif preset == "synth_images":
            ds = dsmod.synthetic_images(d.get("n", 12000), d.get("side", 28),
                                        d.get("n_classes", 10), seed)
        elif preset == "mnist":
            if "images_path" not in d:
                raise ConfigError(f"{self.source}: mnist preset needs images_path")
            ds = dsmod.load_idx(d["images_path"], d.get("labels_path"),
                                d.get("limit"))
        elif preset in ("csv", "binary"):
            if "path" not in d:
                raise ConfigError(f"{self.source}: {preset} preset needs path")
            data = dsmod.load_points_file(d["path"])
            ds = dsmod.Dataset(Path(d["path"]).stem, data)
        else:
            raise ConfigError(f"{self.source}: unknown preset {preset!r}")
        # unbounded (linear-head) presets train at unit scale
        if d.get("standardize", not self.is_image):
            ds = dsmod.standardize(ds)
        if "embed_dim" in d:
            ds = dsmod.embed_rotation(ds, d["embed_dim"], d.get("embed_seed", seed + 100))
        frac = d.get("validation_fraction", 0.1)
        if frac > 0:
            ds = dsmod.split(ds, frac, seed + 200)
        return ds

    def _final_activation(self) -> str:
        return "sigmoid" if self.is_image else "linear"

    def stage1_config(self, objective: str | None = None) -> TrainConfig:
        s = self._merged("stage1")
        return TrainConfig(
            objective=objective or s["objective"],
            lr=s["lr"],
            lam=s["lambda"],
            batch_size=s["batch_size"],
            epochs=s["epochs"],
            latent_dim=s["latent_dim"],
            seed=s.get("seed", self.dataset.get("seed", 1)),
            eval_every=s["eval_every"],
            eval_samples=s.get("eval_samples", 2000),
            log_both_terms=s.get("log_both_terms", False),
            final_activation=self._final_activation(),
        )

    def stage2_config(self) -> TrainConfig:
        s = self._merged("stage2")
        return TrainConfig(
            objective="lt",
            lr=s["lr"],
            batch_size=s["batch_size"],
            epochs=s["epochs"],
            noise_dim=s["noise_dim"],
            seed=s.get("seed", self.dataset.get("seed", 1) + 1),
            eval_every=s["eval_every"],
            eval_samples=s.get("eval_samples", 2000),
            final_activation=self._final_activation(),
        )

    def generator_config(self, distance: str | None = None,
                         sw_num_dirs: int | None = None) -> TrainConfig:
        s = self._merged("generator")
        dist = distance or s["distance"]
        if dist not in ("cw", "sw"):
            raise ConfigError(f"{self.source}: generator distance must be cw or sw")
        return TrainConfig(
            objective="cw_gen" if dist == "cw" else "sw_gen",
            lr=s["lr"],
            batch_size=s["batch_size"],
            epochs=s["epochs"],
            noise_dim=s["noise_dim"],
            sw_num_dirs=sw_num_dirs or s["sw_num_dirs"],
            seed=s.get("seed", self.dataset.get("seed", 1) + 2),
            eval_every=s["eval_every"],
            eval_samples=s.get("eval_samples", 2000),
            final_activation=self._final_activation(),
        )

    def echo(self) -> dict:
        return {
            "dataset": self.dataset,
            "stage1": self.stage1,
            "stage2": self.stage2,
            "generator": self.generator,
            "output": {"dir": self.output_dir},
        }


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: TOML parse error: {e}") from None

    for section in raw:
        if section not in _SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        if not isinstance(raw[section], dict):
            raise ConfigError(f"{path}: top-level keys must live in a section "
                              f"(offending key '{section}')")

    dataset = _check_section("dataset", raw.get("dataset", {}), path)
    if "preset" not in dataset:
        raise ConfigError(f"{path}: [dataset] must set preset")
    if dataset["preset"] not in _PRESETS:
        raise ConfigError(f"{path}: unknown preset {dataset['preset']!r} "
                          f"(expected one of {', '.join(_PRESETS)})")
    return RunConfig(
        dataset=dataset,
        stage1=_check_section("stage1", raw.get("stage1", {}), path),
        stage2=_check_section("stage2", raw.get("stage2", {}), path),
        generator=_check_section("generator", raw.get("generator", {}), path),
        output_dir=_check_section("output", raw.get("output", {}), path).get("dir", "runs"),
        source=str(path),
    )
