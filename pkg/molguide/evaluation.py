# -*- coding: utf-8 -*-
"""
Generation and editing metrics, hit metrics with caller-supplied oracles,
and class-retrieval metrics over pluggable similarity spaces.

Every ratio is returned as a :class:`MetricValue` carrying its denominator;
undefined ratios (empty denominators) are NaN values with a flag rather than
exceptions.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import json
import logging
import math
from collections import namedtuple, OrderedDict

import numpy as np

from molguide.toolkit import (
    DataError,
    EmptyBinderSet,
    InvalidK,
    InvalidParameters,
    MissingSeed,
    OracleUnavailable,
    UnknownClassLabel,
    cosine,
)
from molguide.chem import (
    canonical_form,
    is_valid,
    morgan_fingerprint,
    parse_smiles,
    tanimoto,
    tanimoto_matrix,
    DEFAULT_RADIUS,
    DEFAULT_WIDTH,
)

logger = logging.getLogger(__name__)

NOVELTY_CUTOFF = 0.4
TOP_FRACTION = 0.05
DIR_NOTE = "fraction of valid edits whose property moved toward the target side of the seed (interpretation)"

GenerationRecord = namedtuple("GenerationRecord", ["seed", "generated", "decoded_valid", "condition", "target"])
GenerationRecord.__new__.__defaults__ = (True, None, None)


class MetricValue(namedtuple("MetricValue", ["value", "count", "flag"])):
    """A metric value, the size of its denominator and an optional flag."""

    __slots__ = ()

    def __new__(cls, value, count, flag=None):
        return super(MetricValue, cls).__new__(cls, float(value), int(count), flag)

    @classmethod
    def undefined(cls, flag="undefined"):
        return cls(float("nan"), 0, flag)

    @property
    def defined(self):
        return not math.isnan(self.value)

    def __float__(self):
        return self.value


def _ratio(numerator, denominator):
    if denominator == 0:
        return MetricValue.undefined()
    return MetricValue(numerator / denominator, denominator)


class GenerationSet:
    """Generated strings with their seeds and conditions.

    Raw strings are stored verbatim; molecules, canonical forms and
    fingerprints are computed on first use and cached.

    Args:
       * **records** (list): GenerationRecord items

    Keyword Args:
       * **radius** (int): fingerprint radius.  Defaults to 2.
       * **width** (int): fingerprint width.  Defaults to 2048.

    """

    def __init__(self, records, radius=DEFAULT_RADIUS, width=DEFAULT_WIDTH):
        self.records = [GenerationRecord(*r) for r in records]
        self.radius = radius
        self.width = width
        self._mols = {}
        self._fps = {}

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def _molecule(self, text):
        if text not in self._mols:
            self._mols[text] = parse_smiles(text) if is_valid(text) else None
        return self._mols[text]

    def is_valid(self, i):
        return self._molecule(self.records[i].generated) is not None

    def valid_indices(self):
        return [i for i in range(len(self.records)) if self.is_valid(i)]

    def molecule(self, i):
        return self._molecule(self.records[i].generated)

    def canonical(self, i):
        """Canonical form of output `i`, `None` when it is invalid."""
        mol = self.molecule(i)
        return None if mol is None else canonical_form(mol)

    def fingerprint_of(self, text):
        if text not in self._fps:
            mol = self._molecule(text)
            self._fps[text] = None if mol is None else morgan_fingerprint(mol, self.radius, self.width)
        return self._fps[text]

    def fingerprint(self, i):
        return self.fingerprint_of(self.records[i].generated)

    def seed_fingerprint(self, i):
        seed = self.records[i].seed
        if seed is None:
            raise MissingSeed("Warning! Record " + str(i) + " has no seed.")
        fp = self.fingerprint_of(seed)
        if fp is None:
            raise DataError("Warning! Seed of record " + str(i) + " is not a valid molecule.")
        return fp


def validity(gen):
    """Fraction of records whose raw string passes `is_valid`."""
    return _ratio(len(gen.valid_indices()), len(gen))


def uniqueness(gen):
    """Distinct canonical forms over valid records."""
    canon = [gen.canonical(i) for i in gen.valid_indices()]
    return _ratio(len(set(canon)), len(canon))


def novelty(gen, train_canonicals):
    """Distinct canonical forms absent from training, over all valid records.

    Repeats of one novel molecule count once, so {A, A, B} against a training
    set {B} scores 1/3.
    """
    train = set(train_canonicals)
    canon = [gen.canonical(i) for i in gen.valid_indices()]
    return _ratio(len(set(c for c in canon if c not in train)), len(canon))


def internal_diversity(gen):
    """One minus the mean pairwise Tanimoto similarity among valid outputs."""
    fps = [gen.fingerprint(i) for i in gen.valid_indices()]
    n = len(fps)
    if n < 2:
        return MetricValue.undefined()
    S = tanimoto_matrix(fps, fps)
    iu = np.triu_indices(n, k=1)
    return MetricValue(1.0 - float(np.mean(S[iu])), len(iu[0]))


class TargetRegion:
    """Half-open property interval [lower, upper) with an intended direction.

    Keyword Args:
       * **lower** (float): inclusive lower bound.  Defaults to -inf.
       * **upper** (float): exclusive upper bound.  Defaults to +inf.
       * **direction** (int): +1 to increase the property, -1 to decrease it, 0 when the direction follows from the region.  Defaults to 0.

    """

    def __init__(self, lower=-np.inf, upper=np.inf, direction=0):
        if not lower < upper:
            raise InvalidParameters("Warning! Empty target region [" + str(lower) + ", " + str(upper) + ")")
        if direction not in (-1, 0, 1):
            raise InvalidParameters("Warning! direction must be -1, 0 or +1.")
        self.lower = float(lower)
        self.upper = float(upper)
        self.direction = direction

    @classmethod
    def above(cls, theta):
        return cls(lower=theta, direction=1)

    @classmethod
    def below(cls, theta):
        return cls(upper=theta, direction=-1)

    def contains(self, value):
        return self.lower <= value < self.upper

    def distance(self, value):
        if value < self.lower:
            return self.lower - value
        if value >= self.upper:
            return value - self.upper
        return 0.0

    def moved_toward(self, before, after):
        if self.direction > 0:
            return after > before
        if self.direction < 0:
            return after < before
        return self.distance(after) < self.distance(before)

    def __repr__(self):
        return "TargetRegion([%r, %r), direction=%d)" % (self.lower, self.upper, self.direction)


def _regions_for(gen, target_region):
    if isinstance(target_region, TargetRegion):
        return [target_region] * len(gen)
    regions = list(target_region)
    if len(regions) != len(gen):
        raise InvalidParameters("Warning! One target region per record is required.")
    return regions


def edit_metrics(gen, property_oracle, target_region, train_canonicals, similarity=None):
    """Novelty, target success, seed similarity, direction and their NTS product.

    Tgt divides by every record (invalid outputs count as failures); Sim and
    Dir average over valid outputs only.  NTS is the product of the three
    stored values.

    Args:
       * **gen** (GenerationSet): records that all carry a seed
       * **property_oracle** (callable): Molecule -> float
       * **target_region** (TargetRegion or list): one region, or one per record
       * **train_canonicals** (iterable): canonical strings of the training set

    Keyword Args:
       * **similarity** (callable): (seed string, output string) -> float.  Defaults to ECFP Tanimoto.

    Returns:
       OrderedDict of MetricValue keyed Nov, Tgt, Sim, Dir, NTS
    """
    for i, rec in enumerate(gen.records):
        if rec.seed is None:
            raise MissingSeed("Warning! Record " + str(i) + " has no seed.")
    regions = _regions_for(gen, target_region)
    valid = gen.valid_indices()
    hits = 0
    sims = []
    moved = 0
    for i in valid:
        rec = gen.records[i]
        after = float(property_oracle(gen.molecule(i)))
        if regions[i].contains(after):
            hits += 1
        if similarity is None:
            sims.append(tanimoto(gen.seed_fingerprint(i), gen.fingerprint(i)))
        else:
            sims.append(float(similarity(rec.seed, rec.generated)))
        seed_mol = gen._molecule(rec.seed)
        if seed_mol is None:
            raise DataError("Warning! Seed of record " + str(i) + " is not a valid molecule.")
        if regions[i].moved_toward(float(property_oracle(seed_mol)), after):
            moved += 1
    nov = novelty(gen, train_canonicals)
    tgt = _ratio(hits, len(gen))
    sim = MetricValue(float(np.mean(sims)), len(sims)) if sims else MetricValue.undefined()
    direction = _ratio(moved, len(valid))
    return _with_nts(nov, tgt, sim, direction)


def _with_nts(nov, tgt, sim, direction):
    out = OrderedDict()
    out["Nov"] = nov
    out["Tgt"] = tgt
    out["Sim"] = sim
    out["Dir"] = direction
    if nov.defined and tgt.defined and sim.defined:
        out["NTS"] = MetricValue(nov.value * tgt.value * sim.value, tgt.count)
    else:
        out["NTS"] = MetricValue.undefined()
    return out


def latent_edit_metrics(seeds, outputs, property_fn, target_region, train_latents=None, novelty_tol=1e-6):
    """Editing metrics computed directly in a latent space.

    Sim is the cosine between seed and output latents, validity is finiteness
    and an output is novel when it lies farther than `novelty_tol` from every
    training latent.

    Returns:
       OrderedDict of MetricValue keyed Val, Nov, Tgt, Sim, Dir, NTS
    """
    S = np.atleast_2d(np.asarray(seeds, dtype=np.float64))
    O = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
    n = O.shape[0]
    regions = [target_region] * n if isinstance(target_region, TargetRegion) else list(target_region)
    finite = np.all(np.isfinite(O), axis=1)
    valid = np.flatnonzero(finite)
    val = _ratio(len(valid), n)
    p_out = np.asarray(property_fn(O), dtype=np.float64)
    p_seed = np.asarray(property_fn(S), dtype=np.float64)
    hits = sum(1 for i in valid if regions[i].contains(p_out[i]))
    moved = sum(1 for i in valid if regions[i].moved_toward(p_seed[i], p_out[i]))
    sims = [cosine(S[i], O[i]) for i in valid]
    if train_latents is None or len(valid) == 0:
        nov = _ratio(len(valid), len(valid))
    else:
        Tr = np.atleast_2d(np.asarray(train_latents, dtype=np.float64))
        V = O[valid]
        d2 = np.sum(V**2, 1)[:, None] - 2 * V @ Tr.T + np.sum(Tr**2, 1)[None, :]
        nearest = np.sqrt(np.maximum(d2.min(axis=1), 0.0))
        nov = _ratio(int(np.sum(nearest > novelty_tol)), len(valid))
    tgt = _ratio(hits, n)
    sim = MetricValue(float(np.mean(sims)), len(sims)) if sims else MetricValue.undefined()
    out = OrderedDict([("Val", val)])
    out.update(_with_nts(nov, tgt, sim, _ratio(moved, len(valid))))
    return out


def objective_report(gen, condition_oracle, d="l2", lam=0.0, similarity=None):
    """Per-record d(φ(m'), c) + λ·(1 − sim(m, m')).

    Invalid outputs get NaN.  The λ term needs a seed on every record
    whenever λ is nonzero.

    Args:
       * **gen** (GenerationSet): records carrying their condition vectors
       * **condition_oracle** (callable): Molecule -> condition vector
       * **d** (str): 'l2' or 'cosine' (cosine distance 1 − cos)
       * **lam** (float): weight of the structural term

    Returns:
       numpy array of objective values, one per record
    """
    if condition_oracle is None:
        raise OracleUnavailable("Warning! objective_report needs a condition oracle.")
    if d not in ("l2", "cosine"):
        raise InvalidParameters("Warning! Divergence must be 'l2' or 'cosine', got '" + str(d) + "'")
    values = np.full(len(gen), np.nan)
    for i in gen.valid_indices():
        rec = gen.records[i]
        phi = condition_oracle(gen.molecule(i))
        if phi is None:
            raise OracleUnavailable("Warning! Condition oracle has no value for record " + str(i))
        phi = np.asarray(phi, dtype=np.float64)
        c = np.asarray(rec.condition, dtype=np.float64)
        div = float(np.linalg.norm(phi - c)) if d == "l2" else 1.0 - cosine(phi, c)
        term = 0.0
        if lam != 0.0:
            if similarity is None:
                sim = tanimoto(gen.seed_fingerprint(i), gen.fingerprint(i))
            else:
                if rec.seed is None:
                    raise MissingSeed("Warning! Record " + str(i) + " has no seed.")
                sim = float(similarity(rec.seed, rec.generated))
            term = lam * (1.0 - sim)
        values[i] = div + term
    return values


def top_count(n, fraction=TOP_FRACTION):
    """Number of items in the top `fraction` of `n`, at least one."""
    return max(1, int(math.ceil(fraction * n - 1e-9)))


def novel_hit_metrics(gen, score_oracle, filters, hit_threshold, train_fps, top_fraction=TOP_FRACTION):
    """Novel top-fraction score and novel hit ratio.

    Survivors are valid outputs whose maximum Tanimoto similarity to the
    training set is below 0.4 and that pass every caller filter.  The hit
    ratio divides by every generated record.

    Args:
       * **gen** (GenerationSet): generations
       * **score_oracle** (callable): Molecule -> score, higher is better
       * **filters** (list): predicates Molecule -> bool
       * **hit_threshold** (float): score a hit must reach
       * **train_fps** (list): training Fingerprints

    Returns:
       tuple (novel_top_score, novel_hit_ratio) of MetricValue
    """
    if score_oracle is None:
        raise OracleUnavailable("Warning! novel_hit_metrics needs a score oracle.")
    valid = gen.valid_indices()
    survivors = []
    if valid:
        fps = [gen.fingerprint(i) for i in valid]
        if train_fps:
            max_sim = tanimoto_matrix(fps, list(train_fps)).max(axis=1)
        else:
            max_sim = np.zeros(len(valid))
        for k, i in enumerate(valid):
            if max_sim[k] >= NOVELTY_CUTOFF:
                continue
            mol = gen.molecule(i)
            if all(f(mol) for f in filters or ()):
                survivors.append(i)
    if not survivors:
        logger.info("No generation survived the novelty filters")
        return MetricValue.undefined("no survivors"), MetricValue.undefined("no survivors")
    scores = np.array([float(score_oracle(gen.molecule(i))) for i in survivors])
    m = top_count(len(scores), top_fraction)
    top = np.sort(scores)[::-1][:m]
    hits = int(np.sum(scores >= hit_threshold))
    return MetricValue(float(np.mean(top)), m), MetricValue(hits / len(gen), len(gen))


def max_sim_to_binders(gen, binder_fps):
    """Maximum Tanimoto similarity over (valid output, known binder) pairs."""
    binder_fps = list(binder_fps)
    if not binder_fps:
        raise EmptyBinderSet("Warning! The binder set is empty.")
    fps = [gen.fingerprint(i) for i in gen.valid_indices()]
    if not fps:
        return MetricValue.undefined("empty")
    S = tanimoto_matrix(fps, binder_fps)
    return MetricValue(float(S.max()), S.size)


def max_sim_to_binders_by_target(gen, binders_by_target):
    """`max_sim_to_binders` for each target of a {target: fingerprints} map."""
    return OrderedDict(
        (target, max_sim_to_binders(gen, binders_by_target[target])) for target in sorted(binders_by_target)
    )


ReferenceItem = namedtuple("ReferenceItem", ["canonical", "fingerprint", "embeddings"])


class ReferenceLibrary:
    """Reference compounds grouped by class label.

    Args:
       * **classes** (dict): label -> list of SMILES strings or ReferenceItem

    Keyword Args:
       * **radius** (int): fingerprint radius.  Defaults to 2.
       * **width** (int): fingerprint width.  Defaults to 2048.

    """

    def __init__(self, classes, radius=DEFAULT_RADIUS, width=DEFAULT_WIDTH):
        self.classes = OrderedDict()
        seen = {}
        for label in sorted(classes):
            items = []
            for entry in classes[label]:
                item = entry if isinstance(entry, ReferenceItem) else self._item(entry, radius, width)
                if item.canonical in seen and seen[item.canonical] != label:
                    raise DataError(
                        "Warning! Reference "
                        + item.canonical
                        + " appears in classes "
                        + str(seen[item.canonical])
                        + " and "
                        + str(label)
                    )
                seen[item.canonical] = label
                items.append(item)
            if not items:
                raise DataError("Warning! Reference class " + str(label) + " is empty.")
            self.classes[label] = items

    @staticmethod
    def _item(text, radius, width):
        mol = parse_smiles(text)
        return ReferenceItem(canonical_form(mol), morgan_fingerprint(mol, radius, width), {})

    @property
    def labels(self):
        return list(self.classes)

    def items(self):
        """Pooled (label, item) pairs in label order."""
        return [(label, item) for label, members in self.classes.items() for item in members]

    def smallest_class(self):
        return min(len(v) for v in self.classes.values())

    def check_label(self, label):
        if label not in self.classes:
            raise UnknownClassLabel("Warning! Unknown class label '" + str(label) + "'")


class SimilaritySpace:
    """A named pairwise similarity in [0, 1] over molecules.

    Args:
       * **name** (str): label of the space
       * **represent** (callable): (canonical string, ReferenceItem or None) -> representation, `None` if unavailable
       * **sim** (callable): (representation, representation) -> float

    Keyword Args:
       * **matrix** (callable): bulk form (list, list) -> array, used when given.

    """

    def __init__(self, name, represent, sim, matrix=None):
        self.name = name
        self.represent = represent
        self.sim = sim
        self._matrix = matrix

    def matrix(self, left, right):
        if self._matrix is not None:
            return np.asarray(self._matrix(left, right), dtype=np.float64)
        return np.array([[self.sim(a, b) for b in right] for a in left], dtype=np.float64).reshape(
            len(left), len(right)
        )


def ecfp_space(radius=DEFAULT_RADIUS, width=DEFAULT_WIDTH):
    """Tanimoto over circular fingerprints."""

    def represent(canonical, item=None):
        if item is not None and item.fingerprint is not None:
            return item.fingerprint
        if not is_valid(canonical):
            return None
        return morgan_fingerprint(parse_smiles(canonical), radius, width)

    return SimilaritySpace("ECFP", represent, tanimoto, matrix=tanimoto_matrix)


def cosine_space(name, vectors):
    """Cosine similarity over supplied vectors, mapped to [0, 1] as (1 + cos) / 2.

    Args:
       * **name** (str): space name, also the key looked up in ReferenceItem embeddings
       * **vectors** (dict): canonical string -> vector

    """

    def represent(canonical, item=None):
        if item is not None and name in item.embeddings:
            return np.asarray(item.embeddings[name], dtype=np.float64)
        v = vectors.get(canonical)
        return None if v is None else np.asarray(v, dtype=np.float64)

    def sim(a, b):
        return 0.5 * (1.0 + cosine(a, b))

    return SimilaritySpace(name, represent, sim)


def _similarities(gen, refs, space):
    """(n_records, n_refs) similarity matrix and per-record availability."""
    pooled = refs.items()
    ref_reps = []
    for label, item in pooled:
        rep = space.represent(item.canonical, item)
        if rep is None:
            raise DataError("Warning! Reference " + item.canonical + " has no representation in " + space.name)
        ref_reps.append(rep)
    rows = []
    reps = []
    for i in range(len(gen)):
        canon = gen.canonical(i)
        rep = None if canon is None else space.represent(canon)
        if rep is not None:
            rows.append(i)
            reps.append(rep)
    S = np.full((len(gen), len(pooled)), np.nan)
    if reps:
        S[rows, :] = space.matrix(reps, ref_reps)
    return S, [label for label, _ in pooled]


def _targets(gen, refs):
    targets = []
    for i, rec in enumerate(gen.records):
        if rec.target is None:
            raise UnknownClassLabel("Warning! Record " + str(i) + " has no target class.")
        refs.check_label(rec.target)
        targets.append(rec.target)
    return targets


def _class_scores(row, ref_labels, labels, n=None):
    """Mean of the `n` largest similarities to each class (all members when `n` is None)."""
    ref_labels = np.asarray(ref_labels)
    scores = []
    for label in labels:
        s = np.sort(row[ref_labels == label])[::-1]
        scores.append(float(np.mean(s[: (len(s) if n is None else n)])))
    return np.array(scores)


def _pessimistic_rank(scores, index):
    others = np.delete(scores, index)
    return 1 + int(np.sum(others >= scores[index]))


def _labels_of(ref_labels):
    return sorted(set(ref_labels))


def top1_from_similarities(S, ref_labels, targets):
    """Top-1 cluster accuracy on a precomputed similarity matrix (NaN rows count as wrong)."""
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    labels = _labels_of(ref_labels)
    correct = 0
    for row, target in zip(S, targets):
        if np.any(np.isnan(row)):
            continue
        scores = _class_scores(row, ref_labels, labels)
        if _pessimistic_rank(scores, labels.index(target)) == 1:
            correct += 1
    return _ratio(correct, len(targets))


def retrieval_from_similarities(S, ref_labels, targets, k, n=3):
    """MoA retrieval rate at `k` with top-`n` class scores on a precomputed matrix."""
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    labels = _labels_of(ref_labels)
    if not (1 <= k <= len(labels)):
        raise InvalidK("Warning! k=" + str(k) + " outside [1, " + str(len(labels)) + "]")
    smallest = min(list(ref_labels).count(label) for label in labels)
    if not (1 <= n <= smallest):
        raise InvalidK("Warning! n=" + str(n) + " outside [1, " + str(smallest) + "]")
    success = 0
    for row, target in zip(S, targets):
        if np.any(np.isnan(row)):
            continue
        scores = _class_scores(row, ref_labels, labels, n)
        if _pessimistic_rank(scores, labels.index(target)) <= k:
            success += 1
    return _ratio(success, len(targets))


def knn_vote(row, ref_labels, k):
    """Majority class among the `k` most similar references.

    Neighbours are taken by descending similarity (pooled order on ties);
    vote ties go to the higher mean neighbour similarity, then the smaller label.
    """
    order = sorted(range(len(row)), key=lambda j: (-row[j], j))[:k]
    votes = OrderedDict()
    for j in order:
        votes.setdefault(ref_labels[j], []).append(row[j])
    return min(votes, key=lambda label: (-len(votes[label]), -float(np.mean(votes[label])), label))


def knn_from_similarities(S, ref_labels, targets, k):
    """k-NN accuracy on a precomputed similarity matrix."""
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    if not (1 <= k <= len(ref_labels)):
        raise InvalidK("Warning! k=" + str(k) + " outside [1, " + str(len(ref_labels)) + "]")
    success = 0
    for row, target in zip(S, targets):
        if np.any(np.isnan(row)):
            continue
        if knn_vote(row, list(ref_labels), k) == target:
            success += 1
    return _ratio(success, len(targets))


def top1_cluster_accuracy(gen, refs, space):
    """Fraction of records whose most similar class (mean over members) is the target.

    Ties count as incorrect; outputs with no representation in the space count as incorrect.
    """
    targets = _targets(gen, refs)
    S, ref_labels = _similarities(gen, refs, space)
    return top1_from_similarities(S, ref_labels, targets)


def moa_retrieval_rate(gen, refs, space, k, n=3):
    """Fraction of records whose target class ranks within the top `k` (pessimistic ties)."""
    targets = _targets(gen, refs)
    S, ref_labels = _similarities(gen, refs, space)
    return retrieval_from_similarities(S, ref_labels, targets, k, n)


def knn_accuracy(gen, refs, space, k):
    """Fraction of records whose k-nearest-reference majority class is the target."""
    targets = _targets(gen, refs)
    S, ref_labels = _similarities(gen, refs, space)
    return knn_from_similarities(S, ref_labels, targets, k)


class MetricsReport:
    """Named metric values with notes, written as JSON or aligned text.

    Example::

        report = MetricsReport()
        report.update(edit_metrics(gen, oracle, region, train))
        report.note("Dir", DIR_NOTE)
        open("report.json", "w").write(report.to_json())

    """

    def __init__(self, values=None, notes=None):
        self.values = OrderedDict(values or ())
        self.notes = OrderedDict(notes or ())

    def __getitem__(self, name):
        return self.values[name]

    def __contains__(self, name):
        return name in self.values

    def __len__(self):
        return len(self.values)

    def add(self, name, value):
        if not isinstance(value, MetricValue):
            value = MetricValue(value, 1)
        self.values[name] = value

    def update(self, mapping, prefix=""):
        for name, value in mapping.items():
            self.add(prefix + name, value)

    def note(self, name, text):
        self.notes[name] = text

    def to_dict(self):
        metrics = OrderedDict()
        for name, v in self.values.items():
            metrics[name] = OrderedDict(
                [("value", v.value if v.defined else None), ("count", v.count), ("flag", v.flag)]
            )
        return OrderedDict([("metrics", metrics), ("notes", self.notes)])

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        data = json.loads(text, object_pairs_hook=OrderedDict)
        report = cls(notes=data.get("notes", {}))
        for name, v in data["metrics"].items():
            value = float("nan") if v["value"] is None else v["value"]
            report.values[name] = MetricValue(value, v["count"], v["flag"])
        return report

    def to_text(self):
        width = max([len("metric")] + [len(n) for n in self.values])
        lines = ["%-*s  %-22s  %8s  %s" % (width, "metric", "value", "count", "flag")]
        for name, v in self.values.items():
            shown = repr(v.value) if v.defined else "NaN"
            lines.append("%-*s  %-22s  %8d  %s" % (width, name, shown, v.count, v.flag or ""))
        for name, text in self.notes.items():
            lines.append("# " + name + ": " + text)
        return "\n".join(lines) + "\n"
