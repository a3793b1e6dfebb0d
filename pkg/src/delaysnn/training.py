"""Training engine: tape-based forward, reverse-mode BPTT with surrogate
gradients, cross-entropy loss, the train loop, evaluation, and the
finite-difference gradient-check harness.

The backward pass follows the only differentiable delay path: gradients flow
into d_j through the triangular spread coefficients, never through buffer
indexing. The post-spike reset is detached by default (treated as constant
during backward); the gradient checker runs a smoothed forward (Heaviside
replaced by the surrogate's smooth primitive) with the reset path attached
so analytic and finite-difference gradients describe the same function.
"""

from __future__ import annotations

import numpy as np

from .config import RunConfig
from .data import DatasetSplit, batch_iter
from .delays import anneal, delay_stats, max_offset, spread_matrix, spread_matrix_grad
from .model import NetworkModel, count_params, forward_eval, readout_logits
from .neuron import heaviside, smooth_spike, surrogate_grad
from .optim import AdamOptimizer
from .recurrent import apply_recurrent, apply_recurrent_transpose, kernel_weight_grad


class DivergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------- forward

def _dropout_mask(rng, shape, rate):
    if rate <= 0.0 or rng is None:
        return None
    keep = (rng.random(shape) >= rate).astype(np.float64)
    return keep / (1.0 - rate)


def forward_train(model: NetworkModel, x: np.ndarray, rng=None,
                  smooth: bool = False, update_bn_stats: bool = True):
    """Train-mode forward pass; returns (logits, tape).

    With smooth=True the binary spike function is replaced by the smooth
    primitive of the surrogate (gradient-check mode).
    """
    cfg = model.config
    beta = model.lif.beta
    v_th = model.lif.v_th
    hard = model.lif.reset_mode == "hard"
    alpha = cfg.surrogate_alpha
    sigma = model.spread.sigma
    B, T, _ = x.shape
    tape = {"layers": [], "input": x, "smooth": smooth}
    spikes = x
    for layer in model.layers:
        n = layer.kernel.n
        ff = spikes @ layer.w_ff  # (B, T, N)
        if np.isnan(ff).any():
            raise FloatingPointError("NaN in feedforward current")
        cache = {"s_prev": spikes, "ff": ff}
        if layer.bn is not None:
            mu = ff.mean(axis=(0, 1))
            var = ff.var(axis=(0, 1))
            xhat = (ff - mu) / np.sqrt(var + layer.bn.eps)
            out = layer.bn.gamma * xhat + layer.bn.beta
            if update_bn_stats:
                m = layer.bn.momentum
                layer.bn.running_mean = (1 - m) * layer.bn.running_mean + m * mu
                layer.bn.running_var = (1 - m) * layer.bn.running_var + m * var
            cache.update(var=var, xhat=xhat)
        else:
            out = ff
        mff = _dropout_mask(rng, (B, n), cfg.dropout_ff)
        mrec = _dropout_mask(rng, (B, n), cfg.dropout_rec)
        if mff is not None:
            out = out * mff[:, None, :]
        cache.update(mff=mff, mrec=mrec)

        ntau = max_offset(float(layer.delays.d.max(initial=0.0)), sigma)
        coefs = spread_matrix(layer.delays.d, sigma, ntau)  # (ntau, N)
        L = ntau + 1
        buf = np.zeros((B, n, L))
        v = np.zeros((B, n))
        h_all = np.empty((B, T, n))
        s_all = np.empty((B, T, n))
        active = np.flatnonzero(coefs.any(axis=1))
        for t in range(T):
            slot = t % L
            rec = buf[:, :, slot].copy()
            buf[:, :, slot] = 0.0
            if mrec is not None:
                rec = rec * mrec
            cur = out[:, t] + rec
            h = beta * v + (1.0 - beta) * cur
            if smooth:
                s = smooth_spike(h - v_th, alpha)
            else:
                s = heaviside(h - v_th)
            v = h * (1.0 - s) if hard else h - v_th * s
            h_all[:, t] = h
            s_all[:, t] = s
            if active.size:
                u = coefs[active][None, :, :] * s[:, None, :]  # (B, A, N)
                z = apply_recurrent(layer.kernel, u)
                tgt = (t + 1 + active) % L
                buf[:, :, tgt] += z.transpose(0, 2, 1)
        cache.update(h=h_all, s=s_all, ntau=ntau, coefs=coefs, sigma=sigma)
        tape["layers"].append(cache)
        spikes = s_all

    # readout: leaky integrator over W_out projection
    ff_out = spikes @ model.w_out + model.b_out
    rbeta = model.readout_lif.beta
    h_out = np.empty_like(ff_out)
    h = np.zeros((B, model.config.n_classes))
    for t in range(T):
        h = rbeta * h + (1.0 - rbeta) * ff_out[:, t]
        h_out[:, t] = h
    tape["s_last"] = spikes
    tape["h_out"] = h_out
    logits = readout_logits(model, h_out)
    return logits, tape


# ---------------------------------------------------------------- loss

def loss_ce(logits: np.ndarray, labels: np.ndarray) -> float:
    B, n_c = logits.shape
    if labels.min() < 0 or labels.max() >= n_c:
        raise ValueError("label out of range")
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(B), labels].mean())


def loss_ce_grad(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    B = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=1, keepdims=True)
    p[np.arange(B), labels] -= 1.0
    return p / B


# ---------------------------------------------------------------- backward

def backward(model: NetworkModel, tape: dict, g_logits: np.ndarray,
             include_reset_grad: bool = False) -> dict:
    """Reverse-mode BPTT; returns gradients keyed like the parameter blocks."""
    cfg = model.config
    beta = model.lif.beta
    v_th = model.lif.v_th
    hard = model.lif.reset_mode == "hard"
    alpha = cfg.surrogate_alpha
    grads = {}

    s_last = tape["s_last"]
    B, T, _ = s_last.shape
    # readout backward
    rbeta = model.readout_lif.beta
    g_ff_out = np.empty((B, T, cfg.n_classes))
    gh = np.zeros((B, cfg.n_classes))
    for t in reversed(range(T)):
        if cfg.sum_readout or t == T - 1:
            gh = gh + g_logits
        g_ff_out[:, t] = (1.0 - rbeta) * gh
        gh = rbeta * gh
    grads["w_out"] = np.einsum("btn,btc->nc", s_last, g_ff_out)
    grads["b_out"] = g_ff_out.sum(axis=(0, 1))
    g_s_out = g_ff_out @ model.w_out.T

    for li in reversed(range(len(model.layers))):
        layer = model.layers[li]
        cache = tape["layers"][li]
        n = layer.kernel.n
        h, s = cache["h"], cache["s"]
        ntau, coefs, sigma = cache["ntau"], cache["coefs"], cache["sigma"]
        mff, mrec = cache["mff"], cache["mrec"]
        sg = surrogate_grad(h - v_th, alpha)
        r_h = (1.0 - s) if hard else np.ones_like(s)

        g_i = np.empty((B, T, n))
        g_pop_pad = np.zeros((B, T + ntau, n))
        gr_pad = np.zeros((B, T + ntau, n))
        g_v = np.zeros((B, n))
        for t in reversed(range(T)):
            gs = g_s_out[:, t] + np.einsum("on,bon->bn", coefs,
                                           gr_pad[:, t + 1:t + 1 + ntau])
            if include_reset_grad:
                gs = gs + (g_v * (-h[:, t]) if hard else g_v * (-v_th))
            gh_t = gs * sg[:, t] + g_v * r_h[:, t]
            g_v = beta * gh_t
            g_i[:, t] = (1.0 - beta) * gh_t
            gp = g_i[:, t] if mrec is None else g_i[:, t] * mrec
            g_pop_pad[:, t] = gp
            gr_pad[:, t] = apply_recurrent_transpose(layer.kernel, gp)

        # kernel and delay gradients, accumulated per arrival offset
        dcoefs = spread_matrix_grad(layer.delays.d, sigma, ntau)
        g_kernel = np.zeros_like(layer.kernel.w)
        g_d = np.zeros(n)
        for i in range(ntau):
            if not coefs[i].any() and not dcoefs[i].any():
                continue
            g_z = g_pop_pad[:, i + 1:i + 1 + T]
            if coefs[i].any():
                g_kernel += kernel_weight_grad(layer.kernel, g_z, coefs[i] * s)
            if dcoefs[i].any():
                gr = gr_pad[:, i + 1:i + 1 + T]
                g_d += dcoefs[i] * np.einsum("btn,btn->n", s, gr)
        grads[f"layer{li}.kernel.w"] = g_kernel
        if layer.delays.trainable:
            grads[f"layer{li}.delays.d"] = g_d

        g_bn_out = g_i if mff is None else g_i * mff[:, None, :]
        if layer.bn is not None:
            xhat = cache["xhat"]
            ivar = 1.0 / np.sqrt(cache["var"] + layer.bn.eps)
            grads[f"layer{li}.bn.gamma"] = (g_bn_out * xhat).sum(axis=(0, 1))
            grads[f"layer{li}.bn.beta"] = g_bn_out.sum(axis=(0, 1))
            g_xhat = g_bn_out * layer.bn.gamma
            g_ff = ivar * (g_xhat - g_xhat.mean(axis=(0, 1))
                           - xhat * (g_xhat * xhat).mean(axis=(0, 1)))
        else:
            g_ff = g_bn_out
        s_prev = cache["s_prev"]
        grads[f"layer{li}.w_ff"] = np.einsum("btc,btn->cn", s_prev, g_ff)
        g_s_out = g_ff @ layer.w_ff.T
    return grads


# ---------------------------------------------------------------- evaluation

def evaluate(model: NetworkModel, split: DatasetSplit, batch_size: int = 64):
    """Eval-mode accuracy and confusion counts over a split."""
    cfg = model.config
    n_c = cfg.n_classes
    confusion = np.zeros((n_c, n_c), dtype=np.int64)
    correct = 0
    total = 0
    for x, labels in batch_iter(split, batch_size, cfg.time_steps,
                                cfg.bin_factor, cfg.binarize):
        pred = forward_eval(model, x).argmax(axis=1)
        for y, p in zip(labels, pred):
            confusion[y, p] += 1
        correct += int((pred == labels).sum())
        total += len(labels)
    acc = correct / total if total else 0.0
    return acc, confusion


# ---------------------------------------------------------------- training

def train(model: NetworkModel, splits: dict, config: RunConfig, seed: int | None = None):
    """Epoch loop; returns a TrainingReport dict."""
    seed = config.seed if seed is None else seed
    opt = AdamOptimizer(model, config)
    report = {
        "config": config.to_dict(),
        "seed": seed,
        "param_counts": count_params(model),
        "epochs": [],
    }
    train_split = splits["train"]
    for epoch in range(config.epochs):
        rng = np.random.default_rng([seed, epoch, 7919])
        losses = []
        n_batches = 0
        for bi, (x, labels) in enumerate(batch_iter(
                train_split, config.batch_size, config.time_steps,
                config.bin_factor, config.binarize, shuffle=True,
                seed=seed * 100003 + epoch)):
            logits, tape = forward_train(model, x, rng=rng)
            loss = loss_ce(logits, labels)
            if not np.isfinite(loss):
                raise DivergenceError(f"loss diverged at epoch {epoch} batch {bi}")
            grads = backward(model, tape, loss_ce_grad(logits, labels))
            opt.step(grads)
            losses.append(loss)
            n_batches += 1
        model.spread = anneal(model.spread)
        entry = {
            "epoch": epoch,
            "sigma": model.spread.sigma,
            "batches": n_batches,
            "train_loss": float(np.mean(losses)) if losses else None,
            "delay_stats": [delay_stats(l.delays) for l in model.layers],
        }
        if "valid" in splits and len(splits["valid"]):
            entry["valid_acc"], _ = evaluate(model, splits["valid"])
        report["epochs"].append(entry)
    if "test" in splits and len(splits["test"]):
        acc, confusion = evaluate(model, splits["test"])
        report["test_acc"] = acc
        report["confusion"] = confusion.tolist()
    return report


# ---------------------------------------------------------------- grad check

def _nudge_off_kinks(delays: np.ndarray, sigma: float, margin: float = 5e-3) -> np.ndarray:
    """Shift delays so no integer offset sits within `margin` of a spread kink."""
    d = delays.copy()
    for j in range(len(d)):
        for _ in range(100):
            taus = np.arange(0, int(np.ceil(d[j] + sigma + 3)) + 1)
            dist = np.abs(taus - (1.0 + d[j]))
            gap = np.minimum(dist, np.abs(dist - (1.0 + sigma))).min()
            if gap > margin:
                break
            d[j] += 2.5 * margin
    return d


def grad_check(config: RunConfig, seed: int = 0, fd_eps: float = 1e-5,
               max_coords: int = 200) -> dict:
    """Compare analytic BPTT gradients against central finite differences of
    the smoothed forward. Returns per-group max relative error; the delay
    group is skipped at sigma == 0 (kinks everywhere)."""
    from .model import build_model
    from .optim import parameter_groups

    model = build_model(config, seed=seed)
    sigma = model.spread.sigma
    for layer in model.layers:
        layer.delays.d = _nudge_off_kinks(layer.delays.d, sigma)
    rng = np.random.default_rng(seed + 1)
    B = 2
    x = (rng.random((B, config.time_steps, config.n_inputs)) < 0.3).astype(np.float64)
    labels = rng.integers(0, config.n_classes, size=B)

    def loss_fn():
        logits, _ = forward_train(model, x, rng=None, smooth=True,
                                  update_bn_stats=False)
        return loss_ce(logits, labels)

    logits, tape = forward_train(model, x, rng=None, smooth=True,
                                 update_bn_stats=False)
    grads = backward(model, tape, loss_ce_grad(logits, labels),
                     include_reset_grad=True)

    report = {"sigma": sigma, "groups": {}}
    group_names = {"weights": [], "delays": []}
    for name, _, group in parameter_groups(model):
        group_names[group].append(name)

    for group, names in group_names.items():
        if group == "delays" and (sigma == 0.0 or not names):
            report["groups"][group] = {"status": "skipped",
                                       "reason": "sigma == 0 (kinks everywhere)"
                                       if sigma == 0.0 else "no trainable delays"}
            continue
        max_rel = 0.0
        worst = None
        params = {name: arr for name, arr, _ in parameter_groups(model)}
        coords = []
        for name in names:
            for idx in range(params[name].size):
                coords.append((name, idx))
        if len(coords) > max_coords:
            pick = rng.choice(len(coords), size=max_coords, replace=False)
            coords = [coords[i] for i in pick]
        for name, idx in coords:
            flat = params[name].reshape(-1)
            orig = flat[idx]
            flat[idx] = orig + fd_eps
            lp = loss_fn()
            flat[idx] = orig - fd_eps
            lm = loss_fn()
            flat[idx] = orig
            fd = (lp - lm) / (2.0 * fd_eps)
            an = grads[name].reshape(-1)[idx]
            scale = max(abs(an), abs(fd))
            if scale < 1e-7:
                rel = abs(an - fd)  # absolute for vanishing gradients
            else:
                rel = abs(an - fd) / scale
            if rel > max_rel:
                max_rel = rel
                worst = (name, idx, an, fd)
        report["groups"][group] = {
            "status": "ok",
            "max_rel_error": max_rel,
            "checked": len(coords),
            "worst": None if worst is None else {
                "param": worst[0], "index": int(worst[1]),
                "analytic": float(worst[2]), "fd": float(worst[3]),
            },
        }
    return report
