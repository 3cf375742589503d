"""Versioned JSON checkpoints ("lcw-ckpt/1").

Floats are serialized with their shortest round-trip decimal
representation and keys are sorted, so save -> load -> save is
byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import CompatibilityError, DataError
from .nets import LayerSpec, Mlp, MlpSpec, ModelBundle
from .training import MetricsRecord

__all__ = ["FORMAT", "save_checkpoint", "load_checkpoint", "Checkpoint"]

FORMAT = "lcw-ckpt/1"


def _net_to_obj(mlp: Mlp) -> dict:
    layers = [
        {"in": l.in_dim, "out": l.out_dim, "activation": l.activation,
         "batchnorm": l.batchnorm}
        for l in mlp.spec.layers
    ]
    params = {}
    running = {}
    for i, (w, b, bn) in enumerate(zip(mlp.weights, mlp.biases, mlp.bn)):
        params[f"w{i}"] = {"shape": list(w.value.shape), "data": w.value.ravel().tolist()}
        params[f"b{i}"] = {"shape": list(b.value.shape), "data": b.value.ravel().tolist()}
        if bn is not None:
            params[f"bn{i}_gamma"] = {"shape": list(bn.gamma.value.shape),
                                      "data": bn.gamma.value.ravel().tolist()}
            params[f"bn{i}_beta"] = {"shape": list(bn.beta.value.shape),
                                     "data": bn.beta.value.ravel().tolist()}
            running[f"bn{i}_mean"] = bn.running_mean.tolist()
            running[f"bn{i}_var"] = bn.running_var.tolist()
    return {"layers": layers, "params": params, "running": running}


def _obj_to_net(obj: dict) -> Mlp:
    spec = MlpSpec(tuple(
        LayerSpec(l["in"], l["out"], l["activation"], l["batchnorm"])
        for l in obj["layers"]))
    mlp = Mlp(spec, seed=0)
    params = obj["params"]
    for i, layer in enumerate(spec.layers):
        for key, target in ((f"w{i}", mlp.weights[i]), (f"b{i}", mlp.biases[i])):
            entry = params[key]
            arr = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
            target.value = arr
            target.grad = np.zeros_like(arr)
        if layer.batchnorm:
            bn = mlp.bn[i]
            bn.gamma.value = np.asarray(params[f"bn{i}_gamma"]["data"], dtype=np.float64)
            bn.gamma.grad = np.zeros_like(bn.gamma.value)
            bn.beta.value = np.asarray(params[f"bn{i}_beta"]["data"], dtype=np.float64)
            bn.beta.grad = np.zeros_like(bn.beta.value)
            bn.running_mean = np.asarray(obj["running"][f"bn{i}_mean"], dtype=np.float64)
            bn.running_var = np.asarray(obj["running"][f"bn{i}_var"], dtype=np.float64)
    return mlp


class Checkpoint:
    """In-memory view of a checkpoint file."""

    def __init__(self, kind: str, networks: dict, config: dict,
                 metrics: list[dict], seed: int):
        self.kind = kind  # "bundle" or "generator"
        self.networks = networks  # name -> Mlp
        self.config = config
        self.metrics = metrics
        self.seed = seed

    def bundle(self) -> ModelBundle:
        if self.kind != "bundle":
            raise CompatibilityError("checkpoint does not hold an autoencoder bundle")
        enc = self.networks["encoder"]
        dec = self.networks["decoder"]
        return ModelBundle(enc, dec, enc.spec.input_dim, enc.spec.output_dim,
                           latent_generator=self.networks.get("latent_generator"))

    def generator(self) -> Mlp:
        if "generator" not in self.networks:
            raise CompatibilityError("checkpoint does not hold a direct generator")
        return self.networks["generator"]


def save_checkpoint(path, kind: str, networks: dict, config: dict,
                    metrics, seed: int) -> None:
    obj = {
        "format": FORMAT,
        "kind": kind,
        "config": config,
        "networks": {name: _net_to_obj(net) for name, net in networks.items()
                     if net is not None},
        "metrics": [asdict(m) if isinstance(m, MetricsRecord) else dict(m)
                    for m in metrics],
        "rng": {"seed": seed},
    }
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    Path(path).write_text(text)


def load_checkpoint(path) -> Checkpoint:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: not a valid checkpoint JSON ({e})") from None
    if obj.get("format") != FORMAT:
        raise CompatibilityError(
            f"{path}: unsupported checkpoint format {obj.get('format')!r}")
    networks = {name: _obj_to_net(net) for name, net in obj["networks"].items()}
    return Checkpoint(kind=obj["kind"], networks=networks, config=obj["config"],
                      metrics=obj["metrics"], seed=obj["rng"]["seed"])
