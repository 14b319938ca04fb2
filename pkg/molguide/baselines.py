# -*- coding: utf-8 -*-
"""
Retrieval baselines for the editing benchmarks.  Each returns a
GenerationSet that the metrics in :mod:`molguide.evaluation` score exactly
like model output.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import logging

from molguide.toolkit import EmptyInput, InvalidParameters
from molguide.chem import (
    canonical_form,
    morgan_fingerprint,
    parse_smiles,
    tanimoto_matrix,
    DEFAULT_RADIUS,
    DEFAULT_WIDTH,
)
from molguide.evaluation import GenerationRecord, GenerationSet

logger = logging.getLogger(__name__)

METHODS = ("model", "nearest_target", "random_target", "reconstruction")


def _pools_for(seeds, pools):
    if len(pools) and isinstance(pools[0], str):
        return [list(pools)] * len(seeds)
    if len(pools) != len(seeds):
        raise InvalidParameters("Warning! One candidate pool per seed is required.")
    return [list(p) for p in pools]


def _conditions(conditions, n):
    return [None] * n if conditions is None else list(conditions)


def random_target_class(seeds, pools, rng, conditions=None):
    """Picks a uniformly random molecule of each seed's target partition.

    Args:
       * **seeds** (list): seed SMILES strings
       * **pools** (list): one shared list of target-partition SMILES, or one list per seed
       * **rng** (numpy Generator): source of the picks

    Returns:
       GenerationSet
    """
    pools = _pools_for(seeds, pools)
    conds = _conditions(conditions, len(seeds))
    records = []
    for seed, pool, cond in zip(seeds, pools, conds):
        if not pool:
            raise EmptyInput("Warning! Empty target pool for seed " + seed)
        records.append(GenerationRecord(seed, pool[int(rng.integers(len(pool)))], True, cond))
    return GenerationSet(records)


def nearest_target_class(seeds, pools, conditions=None, radius=DEFAULT_RADIUS, width=DEFAULT_WIDTH):
    """Picks the most Tanimoto-similar molecule of each seed's target partition.

    Ties go to the smaller canonical string, then to the earlier pool entry.
    """
    pools = _pools_for(seeds, pools)
    conds = _conditions(conditions, len(seeds))
    fps = {}

    def fp(text):
        if text not in fps:
            mol = parse_smiles(text)
            fps[text] = (morgan_fingerprint(mol, radius, width), canonical_form(mol))
        return fps[text]

    records = []
    for seed, pool, cond in zip(seeds, pools, conds):
        if not pool:
            raise EmptyInput("Warning! Empty target pool for seed " + seed)
        sims = tanimoto_matrix([fp(seed)[0]], [fp(p)[0] for p in pool])[0]
        best = min(range(len(pool)), key=lambda j: (-sims[j], fp(pool[j])[1], j))
        records.append(GenerationRecord(seed, pool[best], True, cond))
    return GenerationSet(records)


def reconstruction(seeds, codec, conditions=None):
    """Encodes each seed and decodes it again, without any property steering."""
    conds = _conditions(conditions, len(seeds))
    records = []
    for seed, cond in zip(seeds, conds):
        z = codec.encode_molecule(parse_smiles(seed))
        records.append(GenerationRecord(seed, codec.decode_label(z), True, cond))
    logger.info("Reconstructed %d seeds through the codec", len(records))
    return GenerationSet(records)

