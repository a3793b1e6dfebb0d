"""Network assembly: hidden layers (linear -> batch norm -> LIF -> recurrent
delay unit -> dropout) plus the leaky-integrator readout, with parameter
accounting and a versioned binary container for serialization.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .config import RunConfig
from .delays import (DelayVector, SpreadConfig, init_delays, round_for_inference)
from .neuron import LifParams
from .recurrent import RecurrentKernel, init_kernel

MODEL_MAGIC = b"DSNN"
MODEL_VERSION = 1


class ModelFileError(ValueError):
    pass


@dataclass
class BatchNormState:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @classmethod
    def fresh(cls, n: int):
        return cls(np.ones(n), np.zeros(n), np.zeros(n), np.ones(n))


@dataclass
class Layer:
    w_ff: np.ndarray  # (N_in, N), no bias (BN shift absorbs it)
    bn: BatchNormState | None
    kernel: RecurrentKernel
    delays: DelayVector


class NetworkModel:
    def __init__(self, config: RunConfig, layers, w_out, b_out):
        self.config = config
        self.layers: list[Layer] = layers
        self.w_out = w_out  # (N, N_c)
        self.b_out = b_out  # (N_c,)
        self.spread = SpreadConfig.fresh(config.sigma_init, config.sigma_decay,
                                         config.sigma_floor)
        self.lif = LifParams(tau=config.tau, v_th=config.v_th,
                             reset_mode=config.reset_mode)
        self.readout_lif = LifParams(tau=config.tau, v_th=config.v_th,
                                     reset_mode=config.reset_mode,
                                     infinite_threshold=True)

    @property
    def n_layers(self) -> int:
        return len(self.layers)


def build_model(config: RunConfig, seed: int | None = None) -> NetworkModel:
    config.validate()
    rng = np.random.default_rng(config.seed if seed is None else seed)
    layers = []
    n_in = config.n_inputs
    for i in range(config.n_layers):
        n = config.n_neurons
        bound = np.sqrt(6.0 / n_in)
        w_ff = rng.uniform(-bound, bound, size=(n_in, n))
        bn = BatchNormState.fresh(n) if config.has_batchnorm else None
        kernel = init_kernel(config.kernel_kind, n, config.kernel_size,
                             seed=int(rng.integers(2**31)))
        if config.delay_mode == "learnable":
            delays = init_delays(n, config.d_max, config.delay_init,
                                 seed=int(rng.integers(2**31)))
        else:
            delays = DelayVector(np.full(n, float(config.fixed_delay)),
                                 d_max=config.d_max, trainable=False)
        layers.append(Layer(w_ff=w_ff, bn=bn, kernel=kernel, delays=delays))
        n_in = n
    bound = np.sqrt(6.0 / config.n_neurons)
    w_out = rng.uniform(-bound, bound, size=(config.n_neurons, config.n_classes))
    b_out = np.zeros(config.n_classes)
    return NetworkModel(config, layers, w_out, b_out)


def bn_eval(bn: BatchNormState, x: np.ndarray) -> np.ndarray:
    return bn.gamma * (x - bn.running_mean) / np.sqrt(bn.running_var + bn.eps) + bn.beta


def readout_potentials(model: NetworkModel, spikes: np.ndarray) -> np.ndarray:
    """Leaky-integrator membrane trace (B, T, N_c) of the readout layer."""
    cur = spikes @ model.w_out + model.b_out
    beta = model.readout_lif.beta
    # H[t] = beta H[t-1] + (1-beta) cur[t], zero initial state
    return lfilter([1.0 - beta], [1.0, -beta], cur, axis=1)


def readout_logits(model: NetworkModel, h_out: np.ndarray) -> np.ndarray:
    if model.config.sum_readout:
        return h_out.sum(axis=1)
    return h_out[:, -1, :]


def forward_eval(model: NetworkModel, x: np.ndarray) -> np.ndarray:
    """Deterministic eval-mode forward: rounded delays, sigma = 0, no dropout,
    batch-norm running statistics. Returns logits (B, N_c)."""
    from . import backend  # deferred: optional compiled kernels

    if x.shape[2] != model.config.n_inputs:
        raise ValueError(f"input has {x.shape[2]} channels, model expects "
                         f"{model.config.n_inputs}")
    spikes = x
    for li, layer in enumerate(model.layers):
        cur = spikes @ layer.w_ff
        if layer.bn is not None:
            cur = bn_eval(layer.bn, cur)
        offsets = 1 + round_for_inference(layer.delays).d.astype(np.int64)
        spikes = backend.lif_forward_eval(
            np.ascontiguousarray(cur), layer.kernel, offsets,
            model.lif.beta, model.lif.v_th, model.lif.reset_mode == "hard")
        if np.isnan(spikes).any():
            raise FloatingPointError(f"NaN in layer {li} output")
    return readout_logits(model, readout_potentials(model, spikes))


def count_params(model: NetworkModel) -> dict:
    cfg = model.config
    ff = sum(l.w_ff.size for l in model.layers)
    rec_per_layer = [l.kernel.w.size for l in model.layers]
    delays_per_layer = [len(l.delays.d) for l in model.layers]
    bn = sum(2 * len(l.bn.gamma) for l in model.layers if l.bn is not None)
    readout = model.w_out.size + model.b_out.size
    rec = sum(rec_per_layer)
    dl = sum(delays_per_layer)
    return {
        "feedforward": ff,
        "recurrent_weights": rec,
        "recurrent_weights_per_layer": rec_per_layer,
        "delays": dl,
        "delays_per_layer": delays_per_layer,
        "batchnorm": bn,
        "readout": readout,
        "total": ff + rec + dl + bn + readout,
        "kernel_kind": cfg.kernel_kind,
    }


def _named_blocks(model: NetworkModel):
    for i, layer in enumerate(model.layers):
        yield f"layer{i}.w_ff", layer.w_ff
        if layer.bn is not None:
            yield f"layer{i}.bn.gamma", layer.bn.gamma
            yield f"layer{i}.bn.beta", layer.bn.beta
            yield f"layer{i}.bn.running_mean", layer.bn.running_mean
            yield f"layer{i}.bn.running_var", layer.bn.running_var
        yield f"layer{i}.kernel.w", layer.kernel.w
        yield f"layer{i}.delays.d", layer.delays.d
    yield "w_out", model.w_out
    yield "b_out", model.b_out
    yield "sigma", np.array([model.spread.sigma])


def save_model(model: NetworkModel, path) -> None:
    cfg_json = model.config.to_json().encode()
    blocks = list(_named_blocks(model))
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<H", MODEL_VERSION))
        f.write(model.config.digest())
        f.write(struct.pack("<I", len(cfg_json)))
        f.write(cfg_json)
        f.write(struct.pack("<I", len(blocks)))
        for name, arr in blocks:
            nb = name.encode()
            arr = np.asarray(arr, dtype="<f8")
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            f.write(struct.pack("<B", arr.ndim))
            for d in arr.shape:
                f.write(struct.pack("<I", d))
            f.write(arr.tobytes())


def load_model(path, round_delays: bool = False) -> NetworkModel:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MODEL_MAGIC:
        raise ModelFileError(f"bad magic {raw[:4]!r}")
    (version,) = struct.unpack_from("<H", raw, 4)
    if version != MODEL_VERSION:
        raise ModelFileError(f"unsupported model version {version}")
    digest = raw[6:38]
    off = 38
    (cfg_len,) = struct.unpack_from("<I", raw, off)
    off += 4
    config = RunConfig.from_json(raw[off:off + cfg_len].decode())
    off += cfg_len
    if config.digest() != digest:
        raise ModelFileError("config digest mismatch")
    (n_blocks,) = struct.unpack_from("<I", raw, off)
    off += 4
    blocks = {}
    for _ in range(n_blocks):
        try:
            (nlen,) = struct.unpack_from("<H", raw, off)
            off += 2
            name = raw[off:off + nlen].decode()
            off += nlen
            (ndim,) = struct.unpack_from("<B", raw, off)
            off += 1
            shape = struct.unpack_from(f"<{ndim}I", raw, off)
            off += 4 * ndim
        except struct.error:
            raise ModelFileError(f"truncated block header at byte {off}")
        count = int(np.prod(shape)) if ndim else 1
        if off + 8 * count > len(raw):
            raise ModelFileError(f"truncated block {name!r} at byte {off}")
        blocks[name] = np.frombuffer(raw, "<f8", count=count, offset=off).reshape(shape).copy()
        off += 8 * count
    model = build_model(config)
    for i, layer in enumerate(model.layers):
        layer.w_ff = blocks[f"layer{i}.w_ff"]
        if layer.bn is not None:
            layer.bn.gamma = blocks[f"layer{i}.bn.gamma"]
            layer.bn.beta = blocks[f"layer{i}.bn.beta"]
            layer.bn.running_mean = blocks[f"layer{i}.bn.running_mean"]
            layer.bn.running_var = blocks[f"layer{i}.bn.running_var"]
        layer.kernel.w = blocks[f"layer{i}.kernel.w"]
        layer.delays.d = blocks[f"layer{i}.delays.d"]
    model.w_out = blocks["w_out"]
    model.b_out = blocks["b_out"]
    model.spread = SpreadConfig(sigma=float(blocks["sigma"][0]),
                                sigma_init=config.sigma_init,
                                sigma_decay=config.sigma_decay,
                                sigma_floor=config.sigma_floor)
    if round_delays:
        for layer in model.layers:
            layer.delays = round_for_inference(layer.delays)
    return model
