"""Run configuration: every knob of a training/eval run, JSON round-trippable."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field


@dataclass
class RunConfig:
    # data
    data_path: str = ""
    time_steps: int = 100
    bin_factor: int = 1
    binarize: bool = False
    # architecture
    n_layers: int = 2
    n_neurons: int = 256
    n_inputs: int = 140
    n_classes: int = 20
    kernel_kind: str = "conv"  # "conv" | "dense"
    kernel_size: int = 3
    has_batchnorm: bool = True
    dropout_ff: float = 0.0
    dropout_rec: float = 0.0
    sum_readout: bool = False
    # neuron
    tau: float = 2.0
    v_th: float = 1.0
    reset_mode: str = "hard"
    surrogate_alpha: float = 2.0
    # delays
    delay_mode: str = "learnable"  # "learnable" | "fixed"
    fixed_delay: float = 1.0
    d_max: float = 64.0
    delay_init: str = "half_normal"  # "half_normal" | "uniform"
    sigma_init: float = 10.0
    sigma_decay: float = 0.95
    sigma_floor: float = 0.01
    # optimization
    optimizer: str = "adam"  # "adam" | "adamw"
    lr_weights: float = 1e-3
    lr_delays: float = 5e-2
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    weight_decay: float = 0.01
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0

    def validate(self):
        if self.kernel_kind not in ("conv", "dense"):
            raise ValueError("kernel_kind must be conv or dense")
        if self.kernel_kind == "conv" and self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd")
        if self.reset_mode not in ("hard", "soft"):
            raise ValueError("reset_mode must be hard or soft")
        if not (0 <= self.dropout_ff < 1 and 0 <= self.dropout_rec < 1):
            raise ValueError("dropout rates must be in [0, 1)")
        if self.delay_mode not in ("learnable", "fixed"):
            raise ValueError("delay_mode must be learnable or fixed")
        if self.optimizer not in ("adam", "adamw"):
            raise ValueError("optimizer must be adam or adamw")
        if self.tau <= 1.0:
            raise ValueError("tau must be > 1")
        if self.lr_weights <= 0 or self.lr_delays <= 0:
            raise ValueError("learning rates must be positive")
        if self.time_steps < 1 or self.n_layers < 1:
            raise ValueError("time_steps and n_layers must be >= 1")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["adam_betas"] = list(d["adam_betas"])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "adam_betas" in d:
            d["adam_betas"] = tuple(d["adam_betas"])
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d).validate()

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    def digest(self) -> bytes:
        return hashlib.sha256(self.to_json().encode()).digest()


def preset(name: str) -> RunConfig:
    """Built-in configurations for the two speech benchmarks and the
    synthetic interval task."""
    if name == "shd":
        return RunConfig(
            time_steps=100, bin_factor=5, n_layers=2, n_neurons=256,
            n_inputs=140, n_classes=20, kernel_kind="conv", kernel_size=3,
            dropout_ff=0.44, dropout_rec=0.26, tau=1.17, reset_mode="hard",
            sigma_init=10.36, sigma_decay=0.971, d_max=64.0,
            optimizer="adamw", lr_weights=0.0013, lr_delays=0.0279,
            epochs=100, batch_size=128,
        ).validate()
    if name == "ssc":
        return RunConfig(
            time_steps=250, bin_factor=5, n_layers=3, n_neurons=256,
            n_inputs=140, n_classes=35, kernel_kind="conv", kernel_size=3,
            dropout_ff=0.1, dropout_rec=0.3, tau=2.0, reset_mode="soft",
            sigma_init=10.0, sigma_decay=0.95, d_max=64.0,
            optimizer="adam", lr_weights=0.001, lr_delays=0.05,
            epochs=100, batch_size=128,
        ).validate()
    if name == "synth":
        return RunConfig(
            time_steps=50, bin_factor=1, n_layers=2, n_neurons=32,
            n_inputs=16, n_classes=2, kernel_kind="conv", kernel_size=3,
            dropout_ff=0.0, dropout_rec=0.0, tau=2.0, reset_mode="soft",
            sigma_init=3.0, sigma_decay=0.9, d_max=16.0,
            delay_init="uniform",
            optimizer="adam", lr_weights=0.005, lr_delays=0.1,
            epochs=60, batch_size=32,
        ).validate()
    raise ValueError(f"unknown preset {name!r}")
