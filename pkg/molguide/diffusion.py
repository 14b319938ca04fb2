# -*- coding: utf-8 -*-
"""
Diffusion calculus: noise schedule, forward corruption, reverse steps,
losses, single-scale and compositional classifier-free guidance, and the
de novo / editing samplers.

Batched inputs have shape (n, D); single vectors have shape (D,).  Every
function returns the rank it was given.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import logging

import numpy as np

from molguide.toolkit import (
    InvalidParameters,
    MissingSeed,
    StepOutOfRange,
    check_same_shape,
    cosine,
)

logger = logging.getLogger(__name__)

MAX_BETA = 0.999
NULL_TOKEN = None


class NoiseSchedule:
    """Diffusion coefficients indexed by step t = 0..T.

    Index 0 holds the clean-data convention ᾱ_0 = α_0 = 1, β_0 = 0, so
    `alpha_bar[t]` is ᾱ_t for every t in [0, T].

    Args:
       * **betas** (array): β_1..β_T, each in (0, 1)

    """

    def __init__(self, betas):
        betas = np.asarray(betas, dtype=np.float64)
        if betas.ndim != 1 or len(betas) < 1:
            raise InvalidParameters("Warning! A schedule needs at least one step.")
        if np.any(betas <= 0.0) or np.any(betas >= 1.0):
            raise InvalidParameters("Warning! Every beta must lie in (0, 1).")
        self.beta = np.concatenate([[0.0], betas])
        self.alpha = 1.0 - self.beta
        self.alpha_bar = np.cumprod(self.alpha)
        self.kind = "custom"
        self.s = None

    @property
    def T(self):
        return len(self.beta) - 1

    def check_step(self, t, lowest=0):
        t_arr = np.asarray(t)
        if np.any(t_arr < lowest) or np.any(t_arr > self.T):
            raise StepOutOfRange(
                "Warning! Step "
                + str(t)
                + " outside ["
                + str(lowest)
                + ", "
                + str(self.T)
                + "]"
            )

    def sigma(self, t, rule="ddpm", eta=1.0):
        """Standard deviation of the reverse-step noise at step t (t >= 1)."""
        var = self.beta[t] * (1.0 - self.alpha_bar[t - 1]) / (1.0 - self.alpha_bar[t])
        s = np.sqrt(var)
        if rule == "ddim":
            s = eta * s
        return s

    def to_dict(self):
        return {"kind": self.kind, "T": self.T, "s": self.s}


def _cosine_f(t, T, s):
    return np.cos(((t / T + s) / (1.0 + s)) * np.pi / 2.0) ** 2


def cosine_schedule(T, s=0.008):
    """Cosine noise schedule.

    ᾱ_t = f(t)/f(0) with f(t) = cos²(((t/T + s)/(1 + s))·π/2); each
    β_t = 1 − ᾱ_t/ᾱ_{t−1} is clipped at 0.999 and ᾱ is then rebuilt as the
    running product of α_t, so the product identity holds exactly.

    Args:
       * **T** (int): number of steps, at least 2

    Keyword Args:
       * **s** (float): offset.  Defaults to 0.008.

    Returns:
       NoiseSchedule
    """
    if int(T) != T or T < 2:
        raise InvalidParameters("Warning! Cosine schedule needs T >= 2, got " + str(T))
    if not s > 0:
        raise InvalidParameters("Warning! Cosine schedule offset must be positive.")
    T = int(T)
    steps = np.arange(T + 1, dtype=np.float64)
    f = _cosine_f(steps, T, s)
    alpha_bar = f / f[0]
    betas = 1.0 - alpha_bar[1:] / alpha_bar[:-1]
    betas = np.minimum(betas, MAX_BETA)
    sched = NoiseSchedule(betas)
    sched.kind = "cosine"
    sched.s = s
    return sched


def forward_noise(z0, t, eps, sched):
    """√ᾱ_t·z0 + √(1−ᾱ_t)·eps.

    `t` may be a scalar or one step per row.
    """
    sched.check_step(t)
    z0 = np.asarray(z0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    check_same_shape(z0, eps, "z0 and eps")
    ab = _per_row(sched.alpha_bar, t, z0)
    return np.sqrt(ab) * z0 + np.sqrt(1.0 - ab) * eps


def predict_z0(z_t, eps_pred, t, sched):
    """(z_t − √(1−ᾱ_t)·eps_pred)/√ᾱ_t."""
    sched.check_step(t)
    z_t = np.asarray(z_t, dtype=np.float64)
    eps_pred = np.asarray(eps_pred, dtype=np.float64)
    check_same_shape(z_t, eps_pred, "z_t and eps_pred")
    ab = _per_row(sched.alpha_bar, t, z_t)
    return (z_t - np.sqrt(1.0 - ab) * eps_pred) / np.sqrt(ab)


def _per_row(table, t, like):
    vals = np.asarray(table)[np.asarray(t)]
    if np.ndim(vals) == 1 and np.ndim(like) == 2:
        return vals[:, None]
    return vals


def alignment_loss(z0_hat, projected_align, tau=0.8):
    """max(0, tau − cos(z0_hat, projected_align)).

    Raises `ZeroVector` when either argument is zero.
    """
    if not (0.0 < tau <= 1.0):
        raise InvalidParameters("Warning! Alignment margin must lie in (0, 1].")
    return max(0.0, tau - cosine(z0_hat, projected_align))


def diffusion_loss(eps_true, eps_pred):
    """Squared Euclidean error; mean over rows for batched inputs."""
    eps_true = np.asarray(eps_true, dtype=np.float64)
    eps_pred = np.asarray(eps_pred, dtype=np.float64)
    check_same_shape(eps_true, eps_pred, "eps_true and eps_pred")
    diff = eps_true - eps_pred
    if diff.ndim == 1:
        return float(np.dot(diff, diff))
    return float(np.mean(np.sum(diff * diff, axis=1)))


def total_loss(l_diff, l_align, gamma):
    if gamma < 0:
        raise InvalidParameters("Warning! Alignment weight gamma must be nonnegative.")
    return l_diff + gamma * l_align


def cfg_standard(eps_uncond, eps_cond, w):
    """eps_uncond + w·(eps_cond − eps_uncond)."""
    if w < 0:
        raise InvalidParameters("Warning! Guidance scale must be nonnegative.")
    eps_uncond = np.asarray(eps_uncond, dtype=np.float64)
    eps_cond = np.asarray(eps_cond, dtype=np.float64)
    check_same_shape(eps_uncond, eps_cond, "guidance inputs")
    if w == 0:
        return eps_uncond.copy()
    if w == 1:
        return eps_cond.copy()
    return eps_uncond + w * (eps_cond - eps_uncond)


def cfg_compositional(eps_null_null, eps_c_null, eps_null_a, w_c, w_a):
    """eps_∅∅ + w_c·(eps_c∅ − eps_∅∅) + w_a·(eps_∅a − eps_∅∅)."""
    if w_c < 0 or w_a < 0:
        raise InvalidParameters("Warning! Guidance scales must be nonnegative.")
    eps_null_null = np.asarray(eps_null_null, dtype=np.float64)
    eps_c_null = np.asarray(eps_c_null, dtype=np.float64)
    eps_null_a = np.asarray(eps_null_a, dtype=np.float64)
    check_same_shape(eps_null_null, eps_c_null, "guidance inputs")
    check_same_shape(eps_null_null, eps_null_a, "guidance inputs")
    # boundary scales reproduce single evaluations exactly
    if w_a == 0:
        return cfg_standard(eps_null_null, eps_c_null, w_c)
    if w_c == 0:
        return cfg_standard(eps_null_null, eps_null_a, w_a)
    return (
        eps_null_null
        + w_c * (eps_c_null - eps_null_null)
        + w_a * (eps_null_a - eps_null_null)
    )


class GuidanceConfig:
    """Guidance mode and scales.

    Keyword Args:
       * **mode** (string): `'standard'` (single scale `w`) or `'compositional'` (scales `w_c` and `w_a`).  Defaults to `'compositional'`.
       * **w** (float): standard-mode scale.
       * **w_c** (float): condition scale.
       * **w_a** (float): alignment scale.

    """

    def __init__(self, mode="compositional", w=None, w_c=None, w_a=None):
        if mode == "standard":
            if w is None or w_c is not None or w_a is not None:
                raise InvalidParameters("Warning! Standard guidance takes exactly one scale 'w'.")
            if w < 0:
                raise InvalidParameters("Warning! Guidance scale w must be nonnegative.")
        elif mode == "compositional":
            if w is not None or w_c is None or w_a is None:
                raise InvalidParameters(
                    "Warning! Compositional guidance takes exactly the scales 'w_c' and 'w_a'."
                )
            if w_c < 0 or w_a < 0:
                raise InvalidParameters("Warning! Guidance scales must be nonnegative.")
        else:
            raise InvalidParameters("Warning! Unknown guidance mode '" + str(mode) + "'")
        self.mode = mode
        self.w = None if w is None else float(w)
        self.w_c = None if w_c is None else float(w_c)
        self.w_a = None if w_a is None else float(w_a)

    @classmethod
    def standard(cls, w):
        return cls(mode="standard", w=w)

    @classmethod
    def compositional(cls, w_c, w_a):
        return cls(mode="compositional", w_c=w_c, w_a=w_a)

    def to_dict(self):
        return {"mode": self.mode, "w": self.w, "w_c": self.w_c, "w_a": self.w_a}


class SamplerConfig:
    """Reverse-process settings.

    Keyword Args:
       * **sigma_rule** (string): `'ddpm'` or `'ddim'`.  Defaults to `'ddpm'`.
       * **ddim_eta** (float): noise scale in [0, 1] for `'ddim'`.  Defaults to 0.
       * **edit_t_star** (int): forward steps applied to the seed in editing mode, `None` for de novo.  Defaults to `None`.

    """

    def __init__(self, sigma_rule="ddpm", ddim_eta=0.0, edit_t_star=None):
        if sigma_rule not in ("ddpm", "ddim"):
            raise InvalidParameters("Warning! sigma_rule must be 'ddpm' or 'ddim'.")
        if not (0.0 <= ddim_eta <= 1.0):
            raise InvalidParameters("Warning! ddim_eta must lie in [0, 1].")
        if edit_t_star is not None and (int(edit_t_star) != edit_t_star or edit_t_star < 0):
            raise InvalidParameters("Warning! edit_t_star must be a nonnegative integer.")
        self.sigma_rule = sigma_rule
        self.ddim_eta = float(ddim_eta)
        self.edit_t_star = None if edit_t_star is None else int(edit_t_star)

    def validate(self, sched):
        if self.edit_t_star is not None and self.edit_t_star >= sched.T:
            raise InvalidParameters(
                "Warning! edit_t_star must be < T (" + str(sched.T) + "), got " + str(self.edit_t_star)
            )

    def to_dict(self):
        return {
            "sigma_rule": self.sigma_rule,
            "ddim_eta": self.ddim_eta,
            "edit_t_star": self.edit_t_star,
        }


def reverse_step(z_t, eps_tilde, t, sched, cfg, eta_noise):
    """One reverse step from z_t to z_{t−1}.

    ddpm: (1/√α_t)·(z_t − (β_t/√(1−ᾱ_t))·eps_tilde) + σ_t·eta_noise with
    σ_t² = β_t(1−ᾱ_{t−1})/(1−ᾱ_t); σ_1 = 0.

    ddim: √ᾱ_{t−1}·ẑ0 + √(1−ᾱ_{t−1}−σ²)·eps_tilde + σ·eta_noise with
    σ = ddim_eta·σ_t.  ddim_eta = 1 reproduces the ddpm rule and
    ddim_eta = 0 is deterministic.
    """
    if int(t) != t or t < 1 or t > sched.T:
        raise StepOutOfRange("Warning! Reverse step " + str(t) + " outside [1, " + str(sched.T) + "]")
    t = int(t)
    z_t = np.asarray(z_t, dtype=np.float64)
    eps_tilde = np.asarray(eps_tilde, dtype=np.float64)
    check_same_shape(z_t, eps_tilde, "z_t and eps_tilde")
    a = sched.alpha[t]
    ab = sched.alpha_bar[t]
    ab_prev = sched.alpha_bar[t - 1]
    if cfg.sigma_rule == "ddpm":
        sigma = sched.sigma(t)
        mean = (z_t - (sched.beta[t] / np.sqrt(1.0 - ab)) * eps_tilde) / np.sqrt(a)
    else:
        sigma = sched.sigma(t, "ddim", cfg.ddim_eta)
        z0_hat = (z_t - np.sqrt(1.0 - ab) * eps_tilde) / np.sqrt(ab)
        direction = np.sqrt(max(1.0 - ab_prev - sigma**2, 0.0))
        mean = np.sqrt(ab_prev) * z0_hat + direction * eps_tilde
    if sigma == 0.0:
        return mean
    return mean + sigma * np.asarray(eta_noise, dtype=np.float64)


def _broadcast_slot(slot, n):
    if slot is None:
        return None
    v = np.asarray(slot, dtype=np.float64)
    if v.ndim == 1:
        return np.tile(v, (n, 1))
    if v.shape[0] != n:
        raise InvalidParameters(
            "Warning! Condition batch of " + str(v.shape[0]) + " rows for " + str(n) + " samples."
        )
    return v


def guided_epsilon(model, z_t, t, c, a, guidance):
    """Guided noise estimate for a batch at step t.

    Standard mode mixes ε(∅,∅) and ε(c,a) with scale w.  Compositional mode
    queries ε(∅,∅), ε(c,∅) and ε(∅,a); evaluations whose scale is zero are
    skipped.
    """
    n = z_t.shape[0]
    ts = np.full(n, t, dtype=np.int64)
    uncond = model.forward(z_t, ts, None, None)
    if guidance.mode == "standard":
        if guidance.w == 0.0:
            return uncond
        cond = model.forward(z_t, ts, c, a)
        return cfg_standard(uncond, cond, guidance.w)
    eps_c = uncond
    eps_a = uncond
    if guidance.w_c != 0.0 and c is not None:
        eps_c = model.forward(z_t, ts, c, None)
    if guidance.w_a != 0.0 and a is not None:
        eps_a = model.forward(z_t, ts, None, a)
    return cfg_compositional(uncond, eps_c, eps_a, guidance.w_c, guidance.w_a)


def _denoise(model, z, start, c, a, sched, guidance, sampler, rng):
    for t in range(start, 0, -1):
        eps_tilde = guided_epsilon(model, z, t, c, a, guidance)
        noise = rng.standard_normal(z.shape)
        z = reverse_step(z, eps_tilde, t, sched, sampler, noise)
    return z


def sample(model, c, a, sched, guidance, sampler, rng_seed, num_samples=1):
    """De novo generation from ẑ_T ~ N(0, I).

    Args:
       * **model** (DenoiserModel): trained noise predictor
       * **c** (array or None): condition vector (or one per sample), `None` for ∅
       * **a** (array or None): alignment embedding (or one per sample), `None` for ∅
       * **sched** (NoiseSchedule): schedule the model was trained with
       * **guidance** (GuidanceConfig): guidance mode and scales
       * **sampler** (SamplerConfig): reverse-process settings, `edit_t_star` must be `None`
       * **rng_seed** (int): seed of the private generator

    Keyword Args:
       * **num_samples** (int): number of latents to draw.  Defaults to 1.

    Returns:
       (num_samples, D) array, or (D,) when num_samples is 1
    """
    if sampler.edit_t_star is not None:
        raise MissingSeed("Warning! Editing mode (edit_t_star set) needs a seed latent; use edit().")
    rng = np.random.default_rng(rng_seed)
    z = rng.standard_normal((num_samples, model.latent_dim))
    cb = _broadcast_slot(c, num_samples)
    ab = _broadcast_slot(a, num_samples)
    z = _denoise(model, z, sched.T, cb, ab, sched, guidance, sampler, rng)
    return z[0] if num_samples == 1 else z


def edit(model, z_seed, c, a, sched, guidance, sampler, rng_seed):
    """Editing mode: noise the seed latent to t* then denoise t* steps.

    `z_seed` is (D,) or (n, D).  t* = 0 returns the seeds unchanged.
    """
    if z_seed is None:
        raise MissingSeed("Warning! Editing mode needs a seed latent.")
    if sampler.edit_t_star is None:
        raise InvalidParameters("Warning! Editing mode needs edit_t_star.")
    sampler.validate(sched)
    z_seed = np.asarray(z_seed, dtype=np.float64)
    single = z_seed.ndim == 1
    z0 = np.atleast_2d(z_seed)
    t_star = sampler.edit_t_star
    if t_star == 0:
        return z_seed.copy()
    rng = np.random.default_rng(rng_seed)
    n = z0.shape[0]
    eps = rng.standard_normal(z0.shape)
    z = forward_noise(z0, t_star, eps, sched)
    z = _denoise(
        model, z, t_star, _broadcast_slot(c, n), _broadcast_slot(a, n), sched, guidance, sampler, rng
    )
    return z[0] if single else z


def condition_dropout(c, a, p_uncond, rng):
    """Independently replaces each slot by ∅ (`None`) with probability p_uncond."""
    if not (0.0 <= p_uncond <= 1.0):
        raise InvalidParameters("Warning! p_uncond must lie in [0, 1].")
    u = rng.random(2)
    return (NULL_TOKEN if u[0] < p_uncond else c, NULL_TOKEN if u[1] < p_uncond else a)


def dropout_presence(n, p_uncond, rng):
    """Batched condition dropout: two boolean arrays, True where the slot is kept."""
    if not (0.0 <= p_uncond <= 1.0):
        raise InvalidParameters("Warning! p_uncond must lie in [0, 1].")
    u = rng.random((n, 2))
    return u[:, 0] >= p_uncond, u[:, 1] >= p_uncond
