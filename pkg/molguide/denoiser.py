# -*- coding: utf-8 -*-
"""
The trainable noise predictor ε_θ: a SiLU feedforward trunk over
[z_t, time embedding, projected condition, projected alignment embedding,
presence flags], with its reverse-mode gradients, the Adam optimizer and
the training loop.

All parameters live in one flat float64 array; layers read named views of it.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import logging
import time
from collections import namedtuple

import numpy as np
from scipy.special import expit
from tqdm import tqdm

from molguide.toolkit import (
    DimensionMismatch,
    EmptyInput,
    InvalidParameters,
    NonFiniteLoss,
    sha256_bytes,
)
from molguide.diffusion import dropout_presence, forward_noise

logger = logging.getLogger(__name__)

TrainingSet = namedtuple("TrainingSet", ["z0", "c", "a"])
Draws = namedtuple("Draws", ["t", "eps", "c_keep", "a_keep", "masks"])
TrainResult = namedtuple("TrainResult", ["model", "loss_curve", "optimizer", "raw_params"])

NORM_FLOOR = 1e-12


def silu(x):
    return x * expit(x)


def silu_grad(x):
    s = expit(x)
    return s + x * s * (1.0 - s)


def time_embedding(t, dim):
    """Sinusoidal embedding of integer steps, frequencies 10000^(−k/(half−1))."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    if half == 1:
        freqs = np.ones(1)
    else:
        freqs = 10000.0 ** (-np.arange(half) / (half - 1.0))
    angles = t[:, None] * freqs[None, :]
    emb = np.concatenate([np.sin(angles), np.cos(angles)], axis=1)
    if dim % 2:
        emb = np.concatenate([emb, np.zeros((len(t), 1))], axis=1)
    return emb


class DenoiserModel:
    """Noise predictor with separate condition and alignment pathways.

    Args:
       * **latent_dim** (int): latent dimension D
       * **cond_dim** (int): dimension of the condition vector c
       * **align_dim** (int): dimension A of the alignment embedding

    Keyword Args:
       * **hidden** (tuple): trunk hidden widths.  Defaults to (128, 128, 128).
       * **time_dim** (int): sinusoidal time-embedding width.  Defaults to 32.
       * **cond_proj_dim** (int): output width of the linear condition projection.  Defaults to 32.
       * **align_hidden** (int): hidden width of the two-layer projection ψ.  Defaults to 64.
       * **seed** (int): initialization seed.  Defaults to 0.

    """

    def __init__(
        self,
        latent_dim,
        cond_dim,
        align_dim,
        hidden=(128, 128, 128),
        time_dim=32,
        cond_proj_dim=32,
        align_hidden=64,
        seed=0,
    ):
        if min(latent_dim, cond_dim, align_dim, time_dim, cond_proj_dim, align_hidden) < 1:
            raise InvalidParameters("Warning! Every DenoiserModel dimension must be positive.")
        self.latent_dim = int(latent_dim)
        self.cond_dim = int(cond_dim)
        self.align_dim = int(align_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.time_dim = int(time_dim)
        self.cond_proj_dim = int(cond_proj_dim)
        self.align_hidden = int(align_hidden)
        self.seed = seed

        D = self.latent_dim
        self.trunk_in = D + self.time_dim + self.cond_proj_dim + D + 2
        layout = [
            ("c.W", (self.cond_dim, self.cond_proj_dim)),
            ("c.b", (self.cond_proj_dim,)),
            ("c.null", (self.cond_proj_dim,)),
            ("psi1.W", (self.align_dim, self.align_hidden)),
            ("psi1.b", (self.align_hidden,)),
            ("psi2.W", (self.align_hidden, D)),
            ("psi2.b", (D,)),
            ("a.null", (D,)),
        ]
        width = self.trunk_in
        for k, h in enumerate(self.hidden):
            layout.append(("trunk" + str(k) + ".W", (width, h)))
            layout.append(("trunk" + str(k) + ".b", (h,)))
            width = h
        layout.append(("out.W", (width, D)))
        layout.append(("out.b", (D,)))

        self._layout = []
        offset = 0
        for name, shape in layout:
            size = int(np.prod(shape))
            self._layout.append((name, offset, shape))
            offset += size
        self.params = np.zeros(offset)
        self._init_params()

    def _init_params(self):
        rng = np.random.default_rng(self.seed)
        P = self.views(self.params)
        fan_in = {
            "c": self.cond_dim,
            "psi1": self.align_dim,
            "psi2": self.align_hidden,
            "out": self.hidden[-1] if self.hidden else self.trunk_in,
        }
        widths = [self.trunk_in] + list(self.hidden)
        for k in range(len(self.hidden)):
            fan_in["trunk" + str(k)] = widths[k]
        for name, _, shape in self._layout:
            layer, kind = name.split(".")
            if kind == "null":
                bound = 1.0 / np.sqrt(shape[0])
            else:
                bound = 1.0 / np.sqrt(fan_in[layer])
            P[name][...] = rng.uniform(-bound, bound, size=shape)

    @property
    def num_params(self):
        return len(self.params)

    def views(self, params):
        """Named reshaped views into a flat array laid out like `self.params`."""
        return dict(
            (name, params[offset : offset + int(np.prod(shape))].reshape(shape))
            for name, offset, shape in self._layout
        )

    def config(self):
        return {
            "latent_dim": self.latent_dim,
            "cond_dim": self.cond_dim,
            "align_dim": self.align_dim,
            "hidden": list(self.hidden),
            "time_dim": self.time_dim,
            "cond_proj_dim": self.cond_proj_dim,
            "align_hidden": self.align_hidden,
            "seed": self.seed,
        }

    def copy(self):
        other = DenoiserModel(**self.config())
        other.params = self.params.copy()
        return other

    def checksum(self):
        return sha256_bytes(self.params.tobytes())

    def _slot(self, x, dim, n, name):
        if x is None:
            return np.zeros((n, dim)), np.zeros(n, dtype=bool)
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = np.tile(x, (n, 1))
        if x.shape != (n, dim):
            raise DimensionMismatch(
                "Warning! " + name + " has shape " + str(x.shape) + ", expected " + str((n, dim))
            )
        return x, np.ones(n, dtype=bool)

    def _run(self, params, z, t, c, c_keep, a, a_keep, masks=None):
        P = self.views(params)
        n = z.shape[0]
        emb = time_embedding(np.broadcast_to(t, (n,)), self.time_dim)
        pc_raw = c @ P["c.W"] + P["c.b"]
        pc = np.where(c_keep[:, None], pc_raw, P["c.null"][None, :])
        h1_pre = a @ P["psi1.W"] + P["psi1.b"]
        h1 = silu(h1_pre)
        psi = h1 @ P["psi2.W"] + P["psi2.b"]
        pa = np.where(a_keep[:, None], psi, P["a.null"][None, :])
        flags = np.stack([c_keep, a_keep], axis=1).astype(np.float64)
        x = np.concatenate([z, emb, pc, pa, flags], axis=1)
        acts = [x]
        pres = []
        for k in range(len(self.hidden)):
            pre = x @ P["trunk" + str(k) + ".W"] + P["trunk" + str(k) + ".b"]
            x = silu(pre)
            if masks is not None:
                x = x * masks[k]
            pres.append(pre)
            acts.append(x)
        out = x @ P["out.W"] + P["out.b"]
        cache = {
            "c": c,
            "a": a,
            "c_keep": c_keep,
            "a_keep": a_keep,
            "h1_pre": h1_pre,
            "h1": h1,
            "psi": psi,
            "acts": acts,
            "pres": pres,
            "masks": masks,
        }
        return out, cache

    def _backward(self, params, dout, cache, dpsi_extra=None):
        P = self.views(params)
        grads = np.zeros_like(params)
        G = self.views(grads)
        acts, pres, masks = cache["acts"], cache["pres"], cache["masks"]

        G["out.W"][...] = acts[-1].T @ dout
        G["out.b"][...] = dout.sum(axis=0)
        dx = dout @ P["out.W"].T
        for k in reversed(range(len(self.hidden))):
            if masks is not None:
                dx = dx * masks[k]
            dpre = dx * silu_grad(pres[k])
            G["trunk" + str(k) + ".W"][...] = acts[k].T @ dpre
            G["trunk" + str(k) + ".b"][...] = dpre.sum(axis=0)
            dx = dpre @ P["trunk" + str(k) + ".W"].T

        D = self.latent_dim
        off = D + self.time_dim
        dpc = dx[:, off : off + self.cond_proj_dim]
        dpa = dx[:, off + self.cond_proj_dim : off + self.cond_proj_dim + D]

        c_keep, a_keep = cache["c_keep"], cache["a_keep"]
        G["c.null"][...] = dpc[~c_keep].sum(axis=0)
        dpc_raw = dpc * c_keep[:, None]
        G["c.W"][...] = cache["c"].T @ dpc_raw
        G["c.b"][...] = dpc_raw.sum(axis=0)

        G["a.null"][...] = dpa[~a_keep].sum(axis=0)
        dpsi = dpa * a_keep[:, None]
        if dpsi_extra is not None:
            dpsi = dpsi + dpsi_extra
        G["psi2.W"][...] = cache["h1"].T @ dpsi
        G["psi2.b"][...] = dpsi.sum(axis=0)
        dh1_pre = (dpsi @ P["psi2.W"].T) * silu_grad(cache["h1_pre"])
        G["psi1.W"][...] = cache["a"].T @ dh1_pre
        G["psi1.b"][...] = dh1_pre.sum(axis=0)
        return grads

    def forward(self, z_t, t, c, a):
        """ε prediction.

        Args:
           * **z_t** (array): (D,) or (n, D) noisy latents
           * **t** (int or array): step, or one step per row
           * **c** (array or None): condition, `None` for the null token
           * **a** (array or None): alignment embedding, `None` for the null token

        Returns:
           array with the shape of `z_t`
        """
        z = np.asarray(z_t, dtype=np.float64)
        single = z.ndim == 1
        z = np.atleast_2d(z)
        n = z.shape[0]
        if z.shape[1] != self.latent_dim:
            raise DimensionMismatch(
                "Warning! z_t has dimension " + str(z.shape[1]) + ", expected " + str(self.latent_dim)
            )
        cz, ck = self._slot(c, self.cond_dim, n, "c")
        az, ak = self._slot(a, self.align_dim, n, "a")
        out, _ = self._run(self.params, z, t, cz, ck, az, ak)
        return out[0] if single else out

    def project_align(self, a):
        """ψ(a): the alignment embedding mapped into latent space."""
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        P = self.views(self.params)
        return silu(a @ P["psi1.W"] + P["psi1.b"]) @ P["psi2.W"] + P["psi2.b"]


class ConditionScaler:
    """Per-coordinate standardization of condition vectors.

    Fitted on the training targets; a zero spread is replaced by 1.
    """

    def __init__(self, mean, std):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        std = np.atleast_1d(np.asarray(std, dtype=np.float64))
        self.std = np.where(std > 0, std, 1.0)

    @classmethod
    def fit(cls, values):
        X = np.asarray(values, dtype=np.float64)
        X = X.reshape(len(X), -1)
        if len(X) == 0:
            raise EmptyInput("Warning! Cannot fit a condition scaler on no values.")
        return cls(X.mean(axis=0), X.std(axis=0))

    @classmethod
    def identity(cls, dim):
        return cls(np.zeros(dim), np.ones(dim))

    def transform(self, c):
        if c is None:
            return None
        return (np.asarray(c, dtype=np.float64) - self.mean) / self.std

    def inverse(self, c):
        return np.asarray(c, dtype=np.float64) * self.std + self.mean

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}


class TrainConfig:
    """Training hyperparameters.

    Keyword Args:
       * **learning_rate** (float): Adam step size.  Defaults to 1e-3.
       * **epochs** (int): number of epochs.  Defaults to 100.
       * **batch_size** (int): mini-batch size.  Defaults to 512.
       * **gamma** (float): alignment-loss weight.  Defaults to 0.
       * **p_uncond** (float): per-slot condition dropout probability.  Defaults to 0.1.
       * **tau** (float): alignment cosine margin.  Defaults to 0.8.
       * **ema_decay** (float): EMA decay in [0, 1), `None` disables.  Defaults to `None`.
       * **warmup_epochs** (int): epochs of linear learning-rate warmup.  Defaults to 0.
       * **dropout_rate** (float): trunk dropout in [0, 1).  Defaults to 0.
       * **patience** (int): early-stopping patience on the training loss, `None` disables.  Defaults to `None`.
       * **rng_seed** (int): seed of batches, steps, noise and dropout.  Defaults to 0.

    """

    def __init__(
        self,
        learning_rate=1e-3,
        epochs=100,
        batch_size=512,
        gamma=0.0,
        p_uncond=0.1,
        tau=0.8,
        ema_decay=None,
        warmup_epochs=0,
        dropout_rate=0.0,
        patience=None,
        rng_seed=0,
    ):
        if not learning_rate > 0:
            raise InvalidParameters("Warning! learning_rate must be positive.")
        if int(epochs) != epochs or epochs < 1:
            raise InvalidParameters("Warning! epochs must be a positive integer.")
        if int(batch_size) != batch_size or batch_size < 1:
            raise InvalidParameters("Warning! batch_size must be a positive integer.")
        if gamma < 0:
            raise InvalidParameters("Warning! gamma must be nonnegative.")
        if not (0.0 <= p_uncond <= 1.0):
            raise InvalidParameters("Warning! p_uncond must lie in [0, 1].")
        if not (0.0 < tau <= 1.0):
            raise InvalidParameters("Warning! tau must lie in (0, 1].")
        if ema_decay is not None and not (0.0 <= ema_decay < 1.0):
            raise InvalidParameters("Warning! ema_decay must lie in [0, 1).")
        if warmup_epochs < 0:
            raise InvalidParameters("Warning! warmup_epochs must be nonnegative.")
        if not (0.0 <= dropout_rate < 1.0):
            raise InvalidParameters("Warning! dropout_rate must lie in [0, 1).")
        if patience is not None and patience < 1:
            raise InvalidParameters("Warning! patience must be positive.")
        self.learning_rate = float(learning_rate)
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.gamma = float(gamma)
        self.p_uncond = float(p_uncond)
        self.tau = float(tau)
        self.ema_decay = None if ema_decay is None else float(ema_decay)
        self.warmup_epochs = int(warmup_epochs)
        self.dropout_rate = float(dropout_rate)
        self.patience = None if patience is None else int(patience)
        self.rng_seed = int(rng_seed)

    def to_dict(self):
        return dict(self.__dict__)

    def replace(self, **overrides):
        values = self.to_dict()
        values.update(overrides)
        return TrainConfig(**values)


def draw_batch_randomness(model, batch, sched, config, rng):
    """Draws (t, ε, kept slots, dropout masks) for one batch."""
    n = batch.z0.shape[0]
    t = rng.integers(1, sched.T + 1, size=n)
    eps = rng.standard_normal(batch.z0.shape)
    c_keep, a_keep = dropout_presence(n, config.p_uncond, rng)
    masks = None
    if config.dropout_rate > 0:
        keep = 1.0 - config.dropout_rate
        masks = [(rng.random((n, h)) < keep) / keep for h in model.hidden]
    return Draws(t, eps, c_keep, a_keep, masks)


def loss_and_gradients(model, batch, sched, config, draws=None, rng=None, params=None):
    """Total loss L_diff + γ·L_align of a batch and its gradient.

    Args:
       * **model** (DenoiserModel): network
       * **batch** (TrainingSet): z0 (n, D), c (n, C) or None, a (n, A) or None
       * **sched** (NoiseSchedule): schedule
       * **config** (TrainConfig): loss settings (gamma, tau, p_uncond, dropout_rate)

    Keyword Args:
       * **draws** (Draws): explicit randomness; drawn from `rng` when omitted.
       * **rng** (numpy Generator): source for the draws.
       * **params** (array): flat parameters to evaluate at.  Defaults to `model.params`.

    Returns:
       tuple (loss, flat gradient array)
    """
    if params is None:
        params = model.params
    z0 = np.asarray(batch.z0, dtype=np.float64)
    n = z0.shape[0]
    if draws is None:
        draws = draw_batch_randomness(model, batch, sched, config, rng)

    cz, c_avail = model._slot(batch.c, model.cond_dim, n, "c")
    az, a_avail = model._slot(batch.a, model.align_dim, n, "a")
    c_keep = np.asarray(draws.c_keep, dtype=bool) & c_avail
    a_keep = np.asarray(draws.a_keep, dtype=bool) & a_avail

    t = np.asarray(draws.t)
    eps = np.asarray(draws.eps, dtype=np.float64)
    z_t = forward_noise(z0, t, eps, sched)
    out, cache = model._run(params, z_t, t, cz, c_keep, az, a_keep, draws.masks)

    diff = out - eps
    l_diff = float(np.mean(np.sum(diff * diff, axis=1)))
    dout = 2.0 * diff / n
    loss = l_diff
    dpsi_extra = None

    if config.gamma > 0 and batch.a is not None:
        ab = sched.alpha_bar[t][:, None]
        s = np.sqrt(1.0 - ab)
        r = np.sqrt(ab)
        u = (z_t - s * out) / r
        v = cache["psi"]
        nu = np.maximum(np.linalg.norm(u, axis=1), NORM_FLOOR)
        nv = np.maximum(np.linalg.norm(v, axis=1), NORM_FLOOR)
        cos = np.sum(u * v, axis=1) / (nu * nv)
        hinge = config.tau - cos
        active = hinge > 0
        l_align = float(np.mean(np.where(active, hinge, 0.0)))
        loss = l_diff + config.gamma * l_align
        dcos = (-config.gamma / n) * active.astype(np.float64)
        du = dcos[:, None] * (v / (nu * nv)[:, None] - cos[:, None] * u / (nu**2)[:, None])
        dv = dcos[:, None] * (u / (nu * nv)[:, None] - cos[:, None] * v / (nv**2)[:, None])
        dout = dout + du * (-s / r)
        dpsi_extra = dv

    if not np.isfinite(loss):
        raise NonFiniteLoss("Warning! Training loss is not finite.")
    grads = model._backward(params, dout, cache, dpsi_extra)
    return loss, grads


class AdamState:
    """First/second moment buffers and step counter of Adam."""

    def __init__(self, size, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.step = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps


def adam_step(params, gradients, state, lr):
    """One bias-corrected Adam update, applied to `params` in place.

    Returns:
       the updated `params`
    """
    if len(params) != len(gradients) or len(params) != len(state.m):
        raise DimensionMismatch("Warning! Adam received arrays of different lengths.")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1.0 - b1) * gradients
    state.v *= b2
    state.v += (1.0 - b2) * gradients * gradients
    m_hat = state.m / (1.0 - b1**state.step)
    v_hat = state.v / (1.0 - b2**state.step)
    params -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


def train(model, dataset, sched, config, optimizer=None, progress=False, stage=None):
    """Trains `model` on (z0, c, a) triples.

    Each epoch shuffles the data into mini-batches; every item draws its own
    step, noise and condition dropout.  With `ema_decay` set, the returned
    model carries the EMA shadow parameters.

    Args:
       * **model** (DenoiserModel): network, updated in place
       * **dataset** (TrainingSet): z0 is the target latent, c the target condition, a the seed embedding
       * **sched** (NoiseSchedule): schedule
       * **config** (TrainConfig): hyperparameters

    Keyword Args:
       * **optimizer** (AdamState): state to continue from (curriculum stages).  Defaults to a fresh state.
       * **progress** (boolean): show a tqdm progress bar.  Defaults to `False`.
       * **stage** (int): curriculum stage index, reported in errors and logs.

    Returns:
       TrainResult (model, loss_curve, optimizer, raw_params)
    """
    z0 = np.asarray(dataset.z0, dtype=np.float64)
    n = z0.shape[0]
    if n == 0:
        raise EmptyInput("Warning! Cannot train on an empty dataset.")
    if optimizer is None:
        optimizer = AdamState(model.num_params)
    rng = np.random.default_rng(config.rng_seed)
    ema = model.params.copy() if config.ema_decay is not None else None
    c = None if dataset.c is None else np.asarray(dataset.c, dtype=np.float64)
    a = None if dataset.a is None else np.asarray(dataset.a, dtype=np.float64)

    curve = []
    best = np.inf
    since_best = 0
    start = time.time()
    bar = tqdm(range(config.epochs), disable=not progress, desc="train", leave=False)
    for epoch in bar:
        if config.warmup_epochs > 0:
            lr = config.learning_rate * min(1.0, (epoch + 1.0) / config.warmup_epochs)
        else:
            lr = config.learning_rate
        order = rng.permutation(n)
        total = 0.0
        for b, lo in enumerate(range(0, n, config.batch_size)):
            idx = order[lo : lo + config.batch_size]
            batch = TrainingSet(
                z0[idx],
                None if c is None else c[idx],
                None if a is None else a[idx],
            )
            try:
                loss, grads = loss_and_gradients(model, batch, sched, config, rng=rng)
            except NonFiniteLoss:
                raise NonFiniteLoss(
                    "Warning! Training loss is not finite.", batch=b, epoch=epoch, stage=stage
                )
            if not np.all(np.isfinite(grads)):
                raise NonFiniteLoss("Warning! Non-finite gradient.", batch=b, epoch=epoch, stage=stage)
            adam_step(model.params, grads, optimizer, lr)
            if ema is not None:
                ema *= config.ema_decay
                ema += (1.0 - config.ema_decay) * model.params
            total += loss * len(idx)
        epoch_loss = total / n
        curve.append(epoch_loss)
        bar.set_postfix(loss=epoch_loss)
        logger.debug("epoch %d loss %.6g", epoch, epoch_loss)
        if config.patience is not None:
            if epoch_loss < best:
                best = epoch_loss
                since_best = 0
            else:
                since_best += 1
                if since_best >= config.patience:
                    logger.info("Early stop at epoch %d (no improvement for %d epochs)", epoch, since_best)
                    break

    logger.info(
        "Trained %d epochs on %d items in %.2f s, final loss %.6g",
        len(curve),
        n,
        time.time() - start,
        curve[-1],
    )
    raw = model.params.copy()
    if ema is not None:
        model.params = ema
    return TrainResult(model, curve, optimizer, raw)
