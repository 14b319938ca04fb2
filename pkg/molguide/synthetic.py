# -*- coding: utf-8 -*-
"""
Synthetic benchmark: a seeded Gaussian-mixture latent world with a linear
scalar property, plus a small fragment-based SMILES corpus generator for
exercising the chemistry path end to end.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import itertools
import logging

import numpy as np

from molguide.toolkit import InvalidParameters, derive_seed
from molguide.chem import canonical_form, is_valid, parse_smiles, surrogate_property
from molguide.latent import GaussianMixtureCodec
from molguide.pairing import mine_latent_pairs, percentile_threshold, split_by_threshold
from molguide.denoiser import ConditionScaler, DenoiserModel, TrainingSet, train
from molguide.diffusion import edit
from molguide.evaluation import TargetRegion, latent_edit_metrics

logger = logging.getLogger(__name__)

CHAINS = ("C", "CC", "CCC", "CO", "CCO", "CN", "CCN", "OCC", "CC(C)", "NC(=O)", "CC(=O)", "C=C", "C#C")
CORES = ("c1ccccc1", "c1ccncc1", "C1CCCCC1", "C1CCNCC1", "C1CCOCC1", "c1ccsc1", "C1CC1")
SUBSTITUENTS = ("", "F", "Cl", "Br", "O", "N", "C", "OC", "C(F)(F)F", "C(=O)O")


def toy_smiles_corpus(n, seed=0, condition_dim=0):
    """Distinct valid molecules assembled from chain, core and substituent fragments.

    Args:
       * **n** (int): number of molecules

    Keyword Args:
       * **seed** (int): shuffling seed.  Defaults to 0.
       * **condition_dim** (int): length of the synthetic condition vector per molecule.  Defaults to 0.

    Returns:
       list of (smiles, surrogate property, condition vector or None)
    """
    candidates = []
    seen = set()
    for chain, core, sub in itertools.product(CHAINS, CORES, SUBSTITUENTS):
        text = chain + core + sub
        if not is_valid(text):
            continue
        key = canonical_form(parse_smiles(text))
        if key in seen:
            continue
        seen.add(key)
        candidates.append(text)
    if n > len(candidates):
        raise InvalidParameters(
            "Warning! Only " + str(len(candidates)) + " distinct toy molecules are available."
        )
    rng = np.random.default_rng(seed)
    picked = [candidates[i] for i in sorted(rng.choice(len(candidates), size=n, replace=False))]
    out = []
    for text in picked:
        p = surrogate_property(parse_smiles(text))
        cond = None
        if condition_dim > 0:
            cond = np.concatenate([[p], rng.standard_normal(condition_dim - 1)])
        out.append((text, p, cond))
    return out


class SyntheticWorld:
    """Two-component Gaussian mixture in latent space; the property is the projection on the first axis.

    Keyword Args:
       * **D** (int): latent dimension.  Defaults to 2.
       * **separation** (float): distance between the two centers along the property axis.  Defaults to 3.
       * **offset** (float): shift of both centers along the second axis, keeping latent cosines informative.  Defaults to 3.
       * **spread** (float): isotropic standard deviation.  Defaults to 0.6.
       * **num_points** (int): number of corpus latents.  Defaults to 1000.
       * **seed** (int): root seed of the world.  Defaults to 0.

    """

    def __init__(self, D=2, separation=3.0, offset=3.0, spread=0.6, num_points=1000, seed=0):
        if D < 2:
            raise InvalidParameters("Warning! SyntheticWorld needs D >= 2.")
        if num_points < 2:
            raise InvalidParameters("Warning! SyntheticWorld needs at least two points.")
        centers = np.zeros((2, D))
        centers[0, 0] = -separation / 2.0
        centers[1, 0] = separation / 2.0
        centers[:, 1] = offset
        self.codec = GaussianMixtureCodec(centers, spread)
        self.seed = seed
        rng = np.random.default_rng(derive_seed(seed, "synthetic.points"))
        self.points, self.labels = self.codec.sample(num_points, rng)
        self.values = self.property(self.points)
        self.threshold = percentile_threshold(self.values, 0.5)
        self.low, self.high = split_by_threshold(self.points, self.values, self.threshold)

    @property
    def D(self):
        return self.codec.D

    def property(self, Z):
        return np.asarray(Z, dtype=np.float64)[..., 0]

    def pairs(self):
        """Nearest cross-threshold counterparts of every point, conditions on the targets."""
        return mine_latent_pairs(self.low, self.high, self.points, conditions=self.values[:, None])

    def training_set(self, pairs, scaler):
        seeds = np.array([p.seed_id for p in pairs])
        targets = np.array([p.target_id for p in pairs])
        c = scaler.transform(self.values[targets][:, None])
        return TrainingSet(self.points[targets], c, self.points[seeds])

    def edit_targets(self, seed_ids):
        """Flip targets: each seed is steered to the mean property of the opposite partition.

        Returns:
           tuple (raw condition values of shape (n, 1), list of TargetRegion)
        """
        low_mean = float(np.mean(self.values[self.low]))
        high_mean = float(np.mean(self.values[self.high]))
        conds = []
        regions = []
        for i in seed_ids:
            if self.values[i] < self.threshold:
                conds.append([high_mean])
                regions.append(TargetRegion.above(self.threshold))
            else:
                conds.append([low_mean])
                regions.append(TargetRegion.below(self.threshold))
        return np.array(conds), regions


def train_world_model(world, config, sched, hidden=(64, 64), model_seed=0, progress=False):
    """Mines the world's pairs and trains a denoiser on them.

    Returns:
       tuple (TrainResult, ConditionScaler)
    """
    pairs = world.pairs()
    targets = [p.target_id for p in pairs]
    scaler = ConditionScaler.fit(world.values[targets][:, None])
    data = world.training_set(pairs, scaler)
    model = DenoiserModel(
        world.D,
        1,
        world.D,
        hidden=hidden,
        time_dim=16,
        cond_proj_dim=16,
        align_hidden=32,
        seed=model_seed,
    )
    result = train(model, data, sched, config, progress=progress)
    logger.info("Synthetic model trained on %d pairs", len(pairs))
    return result, scaler


def edit_world(model, world, scaler, seed_ids, sched, guidance, sampler, rng_seed):
    """Edits the given world points toward the opposite partition and scores the outputs.

    Returns:
       tuple (outputs of shape (n, D), OrderedDict of latent editing metrics)
    """
    seed_ids = list(seed_ids)
    Z = world.points[seed_ids]
    conds, regions = world.edit_targets(seed_ids)
    out = edit(model, Z, scaler.transform(conds), Z, sched, guidance, sampler, rng_seed)
    metrics = latent_edit_metrics(Z, out, world.property, regions, train_latents=world.points)
    return out, metrics
