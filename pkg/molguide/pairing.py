# -*- coding: utf-8 -*-
"""
Training-pair construction: property-threshold partitions, nearest
cross-partition counterparts, condition-dissimilar counterparts and
percentile curricula.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import logging
import math
from collections import namedtuple

import numpy as np

from molguide.toolkit import (
    EmptyInput,
    EmptyPartition,
    InvalidParameters,
    ZeroConditionVector,
    cosine_matrix,
)
from molguide.chem import Molecule, canonical_form, parse_smiles
from molguide.chem.fingerprint import tanimoto_matrix

logger = logging.getLogger(__name__)

TrainingPair = namedtuple("TrainingPair", ["seed_id", "target_id", "structural_sim", "condition"])
CurriculumStage = namedtuple(
    "CurriculumStage", ["stage_index", "percentile", "resolved_threshold", "train_config_overrides"]
)

# Docking-score hit thresholds of the novel-hit-ratio metric.
HIT_THRESHOLDS = {
    "PARP1": 10.0,
    "FA7": 8.5,
    "5HT1B": 8.7845,
    "JAK2": 9.1,
    "BRAF": 10.3,
}

# Three-stage docking curricula: (threshold, learning rate, epochs) per stage.
STAGE_SCHEDULES = {
    "PARP1": ((8.2, 1e-3, 1000), (10.9, 1e-3, 500), (11.5, 1e-6, 500)),
    "FA7": ((7.4, 1e-3, 1000), (8.5, 1e-3, 500), (8.7, 1e-4, 800)),
    "5HT1B": ((7.9, 1e-3, 1000), (10.8, 1e-3, 1500), (11.4, 1e-6, 500)),
    "BRAF": ((9.0, 1e-3, 1000), (10.5, 1e-4, 500), (11.0, 1e-5, 800)),
    "JAK2": ((7.9, 1e-3, 1000), (10.0, 1e-3, 900), (10.5, 1e-6, 500)),
}
DEFAULT_PERCENTILES = (0.5, 0.9, 0.998)
CONDITION_CUTOFFS = (-0.3, -0.6)


def split_by_threshold(corpus, property_values, theta):
    """Splits ids into low (p < θ) and high (p ≥ θ), each ascending.

    Args:
       * **corpus** (list): corpus items (only the length is used)
       * **property_values** (array): one finite value per item
       * **theta** (float): threshold

    Returns:
       tuple (low ids, high ids)
    """
    values = np.asarray(property_values, dtype=np.float64)
    if len(values) != len(corpus):
        raise InvalidParameters(
            "Warning! "
            + str(len(values))
            + " property values for "
            + str(len(corpus))
            + " corpus items."
        )
    if not np.all(np.isfinite(values)):
        raise InvalidParameters("Warning! Property values must be finite.")
    low = [int(i) for i in np.flatnonzero(values < theta)]
    high = [int(i) for i in np.flatnonzero(values >= theta)]
    if not low or not high:
        raise EmptyPartition(
            "Warning! Threshold "
            + str(theta)
            + " leaves the "
            + ("low" if not low else "high")
            + " partition empty."
        )
    return low, high


def corpus_keys(corpus):
    """Canonical string per corpus item; items are SMILES text or `Molecule`."""
    return [canonical_form(item if isinstance(item, Molecule) else parse_smiles(item)) for item in corpus]


def _ranked_candidates(sims, cand_ids, keys, allowed=None):
    order = []
    for k, j in enumerate(cand_ids):
        if allowed is not None and not allowed[k]:
            continue
        key = keys[j] if keys is not None else ""
        order.append((-sims[k], key, j))
    order.sort()
    return order


def _attach(conditions, target):
    if conditions is None:
        return None
    return np.asarray(conditions[target], dtype=np.float64)


def mine_pairs(low, high, fingerprints, keys=None, conditions=None):
    """Pairs every molecule with its most Tanimoto-similar counterpart across the threshold.

    Both directions are emitted (low seeds first, then high seeds, each in
    ascending id order), so there are `len(low) + len(high)` pairs.  Ties
    go to the smaller canonical string, then the smaller id.  Without `keys`
    the fingerprint bit pattern stands in for the canonical string, so only
    molecules sharing a fingerprint fall back to id order.

    Args:
       * **low** (list): ids below the threshold
       * **high** (list): ids at or above the threshold
       * **fingerprints** (list): Fingerprint per corpus id

    Keyword Args:
       * **keys** (list): canonical string per corpus id, used for tie-breaking.
       * **conditions** (array): condition vector per corpus id, attached to the target.

    Returns:
       list of TrainingPair
    """
    if not low or not high:
        raise EmptyPartition("Warning! mine_pairs needs two nonempty partitions.")
    if keys is None:
        keys = dict((i, fingerprints[i].bits.tobytes()) for i in list(low) + list(high))
    S = tanimoto_matrix([fingerprints[i] for i in low], [fingerprints[j] for j in high])
    pairs = []
    for r, i in enumerate(low):
        best = _ranked_candidates(S[r, :], high, keys)[0]
        pairs.append(TrainingPair(i, best[2], -best[0], _attach(conditions, best[2])))
    for r, j in enumerate(high):
        best = _ranked_candidates(S[:, r], low, keys)[0]
        pairs.append(TrainingPair(j, best[2], -best[0], _attach(conditions, best[2])))
    return pairs


def mine_condition_pairs(corpus, condition_vectors, fingerprints, cos_cutoff=0.5, max_pairs=3, keys=None):
    """Pairs molecules that are structurally close but condition-dissimilar.

    For each molecule i, candidates are the j with cos(g_i, g_j) < cos_cutoff;
    the `max_pairs` most Tanimoto-similar are emitted as (seed i, target j),
    with the tie-breaking of `mine_pairs`.  Self-pairs are never emitted.

    Args:
       * **corpus** (list): corpus items (canonical strings are used as tie-break keys when `keys` is omitted)
       * **condition_vectors** (array): (n, C) nonzero condition vectors
       * **fingerprints** (list): Fingerprint per item

    Keyword Args:
       * **cos_cutoff** (float): exclusive upper bound on condition cosine.  Defaults to 0.5.
       * **max_pairs** (int): partners per molecule.  Defaults to 3.

    Returns:
       list of TrainingPair
    """
    G = np.atleast_2d(np.asarray(condition_vectors, dtype=np.float64))
    n = len(corpus)
    if G.shape[0] != n or len(fingerprints) != n:
        raise InvalidParameters("Warning! Corpus, conditions and fingerprints differ in length.")
    if max_pairs < 1:
        raise InvalidParameters("Warning! max_pairs must be positive.")
    norms = np.linalg.norm(G, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ZeroConditionVector("Warning! Condition vector of item " + str(bad) + " is zero.")
    if keys is None:
        keys = corpus_keys(corpus)
    C = cosine_matrix(G, G)
    S = tanimoto_matrix(fingerprints, fingerprints)
    ids = list(range(n))
    pairs = []
    for i in ids:
        allowed = C[i, :] < cos_cutoff
        allowed[i] = False
        for neg_sim, _, j in _ranked_candidates(S[i, :], ids, keys, allowed)[:max_pairs]:
            pairs.append(TrainingPair(i, j, -neg_sim, G[j].copy()))
    return pairs


def percentile_threshold(values, p):
    """Nearest-rank percentile: element ceil(p·n) − 1 of the ascending sort.

    Args:
       * **values** (array): nonempty finite values
       * **p** (float): fraction in (0, 1]

    Returns:
       float, always an element of `values`
    """
    v = np.sort(np.asarray(values, dtype=np.float64))
    if len(v) == 0:
        raise EmptyInput("Warning! percentile_threshold of an empty sequence.")
    if not (0.0 < p <= 1.0):
        raise InvalidParameters("Warning! Percentile must lie in (0, 1].")
    idx = int(math.ceil(p * len(v) - 1e-9)) - 1
    idx = min(max(idx, 0), len(v) - 1)
    return float(v[idx])


def build_curriculum(stages, corpus, property_values, fingerprints, keys=None, conditions=None):
    """Resolves each stage's threshold, splits, and mines its pairs.

    Args:
       * **stages** (list): (percentile, overrides) tuples with strictly increasing percentiles.  A stage whose percentile is `None` must carry an explicit `'threshold'` in its overrides.
       * **corpus** (list): corpus items
       * **property_values** (array): property per item
       * **fingerprints** (list): Fingerprint per item

    Returns:
       list of (CurriculumStage, list of TrainingPair)
    """
    if keys is None:
        keys = corpus_keys(corpus)
    last_p = -np.inf
    last_theta = -np.inf
    out = []
    for k, (p, overrides) in enumerate(stages):
        overrides = dict(overrides or {})
        if p is None:
            if "threshold" not in overrides:
                raise InvalidParameters(
                    "Warning! Stage " + str(k) + " needs a percentile or an explicit threshold."
                )
            theta = float(overrides.pop("threshold"))
        else:
            if p <= last_p:
                raise InvalidParameters("Warning! Curriculum percentiles must strictly increase.")
            last_p = p
            theta = percentile_threshold(property_values, p)
        if theta < last_theta:
            raise InvalidParameters("Warning! Curriculum thresholds must not decrease.")
        last_theta = theta
        try:
            low, high = split_by_threshold(corpus, property_values, theta)
        except EmptyPartition as e:
            raise EmptyPartition(str(e) + " (curriculum stage " + str(k) + ")", stage=k)
        pairs = mine_pairs(low, high, fingerprints, keys=keys, conditions=conditions)
        logger.info(
            "Stage %d: threshold %.6g, %d low / %d high, %d pairs", k, theta, len(low), len(high), len(pairs)
        )
        out.append((CurriculumStage(k, p, theta, overrides), pairs))
    return out


def stage_schedule(target):
    """Curriculum stages of a docking target as `build_curriculum` input."""
    if target not in STAGE_SCHEDULES:
        raise InvalidParameters("Warning! No stage schedule for target '" + str(target) + "'")
    return [
        (None, {"threshold": theta, "learning_rate": lr, "epochs": epochs})
        for theta, lr, epochs in STAGE_SCHEDULES[target]
    ]


def build_condition_curriculum(cutoffs, corpus, condition_vectors, fingerprints, max_pairs=1, keys=None):
    """Condition-dissimilarity mining at successively stricter cosine cutoffs.

    The default cutoffs (-0.3, -0.6) give a broad general stage followed by a
    fine-tuning stage.

    Returns:
       list of (cutoff, list of TrainingPair)
    """
    if keys is None:
        keys = corpus_keys(corpus)
    out = []
    last = np.inf
    for k, cutoff in enumerate(cutoffs):
        if cutoff >= last:
            raise InvalidParameters("Warning! Condition cutoffs must strictly decrease.")
        last = cutoff
        pairs = mine_condition_pairs(
            corpus, condition_vectors, fingerprints, cos_cutoff=cutoff, max_pairs=max_pairs, keys=keys
        )
        logger.info("Condition stage %d: cutoff %.3g, %d pairs", k, cutoff, len(pairs))
        out.append((cutoff, pairs))
    return out


def balance_partitions(low, high, rng):
    """Undersamples the larger partition to the size of the smaller one (ids stay ascending)."""
    low, high = list(low), list(high)
    m = min(len(low), len(high))
    if len(low) > m:
        low = sorted(int(i) for i in rng.choice(low, size=m, replace=False))
    if len(high) > m:
        high = sorted(int(i) for i in rng.choice(high, size=m, replace=False))
    return low, high


def remove_overlap(ids, keys, reference_keys):
    """Drops ids whose canonical string also appears among the references."""
    refs = set(reference_keys)
    return [i for i in ids if keys[i] not in refs]


def mine_latent_pairs(low, high, latents, conditions=None):
    """`mine_pairs` over latent vectors, similarity 1/(1 + Euclidean distance), ties by id."""
    Z = np.asarray(latents, dtype=np.float64)
    if not low or not high:
        raise EmptyPartition("Warning! mine_latent_pairs needs two nonempty partitions.")
    L = Z[low]
    H = Z[high]
    d = np.sqrt(np.maximum(np.sum(L**2, 1)[:, None] - 2 * L @ H.T + np.sum(H**2, 1)[None, :], 0.0))
    S = 1.0 / (1.0 + d)
    pairs = []
    for r, i in enumerate(low):
        best = _ranked_candidates(S[r, :], high, None)[0]
        pairs.append(TrainingPair(i, best[2], -best[0], _attach(conditions, best[2])))
    for r, j in enumerate(high):
        best = _ranked_candidates(S[:, r], low, None)[0]
        pairs.append(TrainingPair(j, best[2], -best[0], _attach(conditions, best[2])))
    return pairs
