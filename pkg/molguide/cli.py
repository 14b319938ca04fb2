# -*- coding: utf-8 -*-
"""
Command-line entry point: ``molguide {pairs,train,sample,edit,eval,sweep}``.

Every subcommand reads one run configuration (see :mod:`molguide.config`),
writes its outputs into the output directory (``--out-dir``, else
``$PHAME_OUT_DIR``, else the working directory) together with the resolved
configuration and a JSON manifest of checksums.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import argparse
import itertools
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from tqdm import tqdm

from molguide.toolkit import (
    ChecksumMismatch,
    DataError,
    InvalidConfigValue,
    MissingEmbeddingSpace,
    MolguideError,
    OracleUnavailable,
    derive_seed,
    sha256_file,
)
from molguide.config import RunConfig
from molguide.chem import morgan_fingerprint, surrogate_property, try_parse
from molguide.latent import AlignEmbedder, ALIGN_SEED, fit_pca_codec
from molguide.diffusion import GuidanceConfig, SamplerConfig, cosine_schedule, edit, sample
from molguide.denoiser import ConditionScaler, DenoiserModel, TrainConfig, TrainingSet, train
from molguide.pairing import (
    balance_partitions,
    build_condition_curriculum,
    build_curriculum,
    mine_condition_pairs,
    mine_pairs,
    percentile_threshold,
    split_by_threshold,
)
from molguide.evaluation import (
    DIR_NOTE,
    GenerationRecord,
    GenerationSet,
    MetricValue,
    MetricsReport,
    TargetRegion,
    cosine_space,
    ecfp_space,
    edit_metrics,
    internal_diversity,
    knn_accuracy,
    latent_edit_metrics,
    max_sim_to_binders_by_target,
    moa_retrieval_rate,
    novel_hit_metrics,
    novelty,
    objective_report,
    top1_cluster_accuracy,
    uniqueness,
    validity,
)
from molguide import baselines, storage
from molguide.synthetic import SyntheticWorld, edit_world, train_world_model

logger = logging.getLogger(__name__)

COMMANDS = ("pairs", "train", "sample", "edit", "eval", "sweep")
METRICS = ("validity", "uniqueness", "novelty", "diversity", "edit", "objective", "hits", "retrieval", "binders")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class RunContext:
    """Configuration, output directory and timing of one subcommand run."""

    def __init__(self, cfg, out_dir, command):
        self.cfg = cfg
        self.out_dir = out_dir
        self.command = command
        self.seed = cfg["run"]["seed"]
        self.started = time.time()
        if not os.path.exists(out_dir):
            os.makedirs(out_dir)

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def input_path(self, value, default_name):
        return value if value else self.path(default_name)

    def finish(self, artifacts, inputs=(), stages=None, extra=None):
        self.cfg.write(self.path("resolved.cfg"))
        manifest = self.path("manifest_" + self.command + ".json")
        storage.write_manifest(
            manifest,
            self.cfg.to_dict(),
            inputs=[p for p in inputs if p and os.path.exists(p)],
            artifacts=list(artifacts) + [self.path("resolved.cfg")],
            wall_clock=round(time.time() - self.started, 3),
            stages=stages,
            extra=extra,
        )
        logger.info("%s finished in %.2f s, %d artifacts", self.command, time.time() - self.started, len(artifacts))
        return manifest


def is_synthetic(cfg):
    return cfg["codec"]["kind"] == "gaussian_mixture"


def make_world(cfg):
    s = cfg["synthetic"]
    return SyntheticWorld(
        D=s["D"],
        separation=s["separation"],
        offset=s["offset"],
        spread=s["spread"],
        num_points=s["num_points"],
        seed=cfg["run"]["seed"],
    )


def make_schedule(cfg):
    return cosine_schedule(cfg["schedule"]["T"], cfg["schedule"]["s"])


def make_guidance(cfg, w_c=None, w_a=None):
    g = cfg["guidance"]
    if g["mode"] == "standard" and w_c is None:
        return GuidanceConfig.standard(g["w"])
    return GuidanceConfig.compositional(g["w_c"] if w_c is None else w_c, g["w_a"] if w_a is None else w_a)


def make_train_config(cfg, rng_seed, **overrides):
    t = cfg["train"]
    values = dict(
        learning_rate=t["learning_rate"],
        epochs=t["epochs"],
        batch_size=t["batch_size"],
        gamma=t["gamma"],
        p_uncond=t["p_uncond"],
        tau=t["tau"],
        ema_decay=t["ema_decay"],
        warmup_epochs=t["warmup_epochs"],
        dropout_rate=t["dropout_rate"],
        patience=t["patience"],
        rng_seed=rng_seed,
    )
    values.update(overrides)
    return TrainConfig(**values)


def load_corpus(cfg, path=None):
    path = path or cfg["corpus"]["path"]
    if not path:
        raise InvalidConfigValue("Warning! [corpus] path is required.")
    return storage.read_corpus(path)


def corpus_fingerprints(cfg, corpus):
    return [morgan_fingerprint(m, cfg["corpus"]["radius"], cfg["corpus"]["width"]) for m in corpus.molecules]


def property_values(cfg, corpus, required=True):
    col = cfg["corpus"]["property_column"]
    if col is None:
        if required:
            raise InvalidConfigValue("Warning! [corpus] property_column is required.")
        return None
    available = corpus.columns.shape[1]
    if col < 1 or col > available:
        if not required:
            return None
        raise InvalidConfigValue(
            "Warning! [corpus] property_column = "
            + str(col)
            + " but the corpus has "
            + str(available)
            + " numeric column(s)."
        )
    return corpus.columns[:, col - 1]


def condition_values(cfg, corpus):
    cols = cfg["corpus"]["condition_columns"]
    if not cols:
        return None
    available = corpus.columns.shape[1]
    if max(cols) > available:
        raise InvalidConfigValue(
            "Warning! [corpus] condition_columns reaches column "
            + str(max(cols))
            + " but the corpus has "
            + str(available)
            + " numeric column(s)."
        )
    return corpus.columns[:, [c - 1 for c in cols]]


def resolve_threshold(setting, values):
    if setting == "median":
        return percentile_threshold(values, 0.5)
    return float(setting)


def _stage_overrides(cfg, k):
    c = cfg["curriculum"]
    out = {}
    if k < len(c["learning_rates"]):
        out["learning_rate"] = c["learning_rates"][k]
    if k < len(c["epochs"]):
        out["epochs"] = c["epochs"][k]
    return out


def cmd_pairs(ctx):
    """Splits/mines the corpus and writes the pairs CSV(s) plus the curriculum file."""
    cfg = ctx.cfg
    if is_synthetic(cfg):
        world = make_world(cfg)
        pairs = world.pairs()
        storage.write_pairs(ctx.path("pairs.csv"), pairs, None)
        stages = [{"threshold": world.threshold, "pairs": "pairs.csv"}]
        storage.write_curriculum(ctx.path("curriculum.cfg"), stages)
        ctx.finish([ctx.path("pairs.csv"), ctx.path("curriculum.cfg")], stages=stages)
        return

    corpus = load_corpus(cfg)
    fps = corpus_fingerprints(cfg, corpus)
    keys = corpus.canonical
    conditions = condition_values(cfg, corpus)
    cur = cfg["curriculum"]
    stage_rows = []
    outputs = []

    if cfg["pairs"]["mode"] == "threshold":
        values = property_values(cfg, corpus)
        if conditions is None:
            conditions = values[:, None]
        if cur["percentiles"] or cur["thresholds"]:
            if cur["percentiles"]:
                stages = [(p, _stage_overrides(cfg, k)) for k, p in enumerate(cur["percentiles"])]
            else:
                stages = []
                for k, theta in enumerate(cur["thresholds"]):
                    overrides = _stage_overrides(cfg, k)
                    overrides["threshold"] = theta
                    stages.append((None, overrides))
            built = build_curriculum(stages, corpus.smiles, values, fps, keys=keys, conditions=conditions)
            for stage, pairs in built:
                name = "pairs_stage" + str(stage.stage_index) + ".csv"
                storage.write_pairs(ctx.path(name), pairs, corpus.smiles)
                outputs.append(ctx.path(name))
                row = {"percentile": stage.percentile, "threshold": stage.resolved_threshold, "pairs": name}
                row.update(stage.train_config_overrides)
                stage_rows.append(row)
        else:
            theta = resolve_threshold(cfg["pairs"]["threshold"], values)
            low, high = split_by_threshold(corpus.smiles, values, theta)
            if cfg["pairs"]["balance"]:
                rng = np.random.default_rng(derive_seed(ctx.seed, "pairs.balance"))
                low, high = balance_partitions(low, high, rng)
            pairs = mine_pairs(low, high, fps, keys=keys, conditions=conditions)
            storage.write_pairs(ctx.path("pairs.csv"), pairs, corpus.smiles)
            outputs.append(ctx.path("pairs.csv"))
            stage_rows.append({"percentile": None, "threshold": theta, "pairs": "pairs.csv"})
    else:
        if conditions is None:
            raise InvalidConfigValue("Warning! [corpus] condition_columns is required for [pairs] mode = condition.")
        if cur["cos_cutoffs"]:
            built = build_condition_curriculum(
                cur["cos_cutoffs"], corpus.smiles, conditions, fps, max_pairs=cfg["pairs"]["max_pairs"], keys=keys
            )
            for k, (cutoff, pairs) in enumerate(built):
                name = "pairs_stage" + str(k) + ".csv"
                storage.write_pairs(ctx.path(name), pairs, corpus.smiles)
                outputs.append(ctx.path(name))
                row = {"cos_cutoff": cutoff, "pairs": name}
                row.update(_stage_overrides(cfg, k))
                stage_rows.append(row)
        else:
            pairs = mine_condition_pairs(
                corpus.smiles,
                conditions,
                fps,
                cos_cutoff=cfg["pairs"]["cos_cutoff"],
                max_pairs=cfg["pairs"]["max_pairs"],
                keys=keys,
            )
            storage.write_pairs(ctx.path("pairs.csv"), pairs, corpus.smiles)
            outputs.append(ctx.path("pairs.csv"))
            stage_rows.append({"cos_cutoff": cfg["pairs"]["cos_cutoff"], "pairs": "pairs.csv"})

    storage.write_curriculum(ctx.path("curriculum.cfg"), stage_rows)
    outputs.append(ctx.path("curriculum.cfg"))
    ctx.finish(outputs, inputs=[cfg["corpus"]["path"]], stages=stage_rows)


def _stages_for_training(ctx):
    """(stage dict, pairs path) for each stage to train."""
    given = ctx.cfg["train"]["pairs"]
    root = os.path.dirname(given) if given else ctx.out_dir
    curriculum = os.path.join(root, "curriculum.cfg")
    if given and not os.path.exists(curriculum):
        return [({"threshold": None}, given)]
    if not os.path.exists(curriculum):
        raise DataError("Warning! No curriculum file at " + curriculum + "; run 'molguide pairs' first.")
    stages = storage.read_curriculum(curriculum)
    if given and len(stages) == 1:
        return [(stages[0], given)]
    return [(s, os.path.join(root, s["pairs"])) for s in stages]


def _align_vectors(cfg, fps, Z, codec_dim):
    """(alignment vectors per corpus item, embedder metadata)."""
    if cfg["model"]["align_space"] == "latent":
        return Z, {"align_space": "latent", "align_dim": codec_dim}
    embedder = AlignEmbedder(
        dim=cfg["model"]["align_dim"], width=cfg["corpus"]["width"], radius=cfg["corpus"]["radius"], seed=ALIGN_SEED
    ).fit(fps)
    meta = {
        "align_space": "fingerprint",
        "align_dim": embedder.dim,
        "align_seed": embedder.seed,
        "align_mean": embedder.mean.tolist(),
        "align_scale": embedder.scale.tolist(),
    }
    return embedder.embed_fingerprints(fps), meta


def embedder_from_metadata(cfg, meta):
    embedder = AlignEmbedder(
        dim=meta["align_dim"], width=cfg["corpus"]["width"], radius=cfg["corpus"]["radius"], seed=meta["align_seed"]
    )
    embedder.mean = np.asarray(meta["align_mean"])
    embedder.scale = np.asarray(meta["align_scale"])
    return embedder


def _side_conditions(conds, target_values, threshold):
    if threshold is None or target_values is None:
        return None, None
    low = target_values < threshold
    low_c = conds[low].mean(axis=0).tolist() if np.any(low) else None
    high_c = conds[~low].mean(axis=0).tolist() if np.any(~low) else None
    return low_c, high_c


def _build_model(cfg, D, C, A, seed):
    m = cfg["model"]
    return DenoiserModel(
        D,
        C,
        A,
        hidden=tuple(m["hidden"]),
        time_dim=m["time_dim"],
        cond_proj_dim=m["cond_proj_dim"],
        align_hidden=m["align_hidden"],
        seed=derive_seed(seed, "model.init"),
    )


def cmd_train(ctx):
    """Trains (optionally in curriculum stages) and writes checkpoints and the loss curve."""
    cfg = ctx.cfg
    sched = make_schedule(cfg)
    progress = cfg["run"]["progress"]
    curves = []
    summaries = []
    outputs = []

    if is_synthetic(cfg):
        world = make_world(cfg)
        tc = make_train_config(cfg, derive_seed(ctx.seed, "train", 0))
        result, scaler = train_world_model(
            world, tc, sched, hidden=tuple(cfg["model"]["hidden"]), model_seed=derive_seed(ctx.seed, "model.init")
        )
        storage.save_codec(ctx.path("codec.bin"), world.codec, seed=ctx.seed)
        low_c = [float(np.mean(world.values[world.low]))]
        high_c = [float(np.mean(world.values[world.high]))]
        meta = {
            "condition_mean": scaler.mean.tolist(),
            "condition_std": scaler.std.tolist(),
            "threshold": world.threshold,
            "low_condition": low_c,
            "high_condition": high_c,
            "align_space": "latent",
            "codec_checksum": world.codec.checksum(),
            "stage": 0,
            "epochs": len(result.loss_curve),
            "final_loss": result.loss_curve[-1],
            "rng_seed": tc.rng_seed,
            "schedule": sched.to_dict(),
        }
        ema = result.model.params if tc.ema_decay is not None else None
        raw = result.raw_params if tc.ema_decay is not None else None
        storage.save_checkpoint(ctx.path("checkpoint.bin"), result.model, result.optimizer, ema, meta, raw_params=raw)
        storage.write_loss_curve(ctx.path("loss.csv"), [(0, result.loss_curve)])
        outputs = [ctx.path(n) for n in ("codec.bin", "checkpoint.bin", "loss.csv")]
        ctx.finish(outputs, stages=[{"epochs": meta["epochs"], "final_loss": meta["final_loss"]}])
        return

    corpus = load_corpus(cfg)
    fps = corpus_fingerprints(cfg, corpus)
    if cfg["codec"]["path"]:
        codec = storage.load_codec(cfg["codec"]["path"])
    else:
        codec = fit_pca_codec(fps, cfg["codec"]["dim"], labels=corpus.canonical, radius=cfg["corpus"]["radius"])
        storage.save_codec(
            ctx.path("codec.bin"), codec, corpus_hash=sha256_file(cfg["corpus"]["path"]), seed=ctx.seed
        )
        outputs.append(ctx.path("codec.bin"))
    Z = codec.encode(fps)
    align, align_meta = _align_vectors(cfg, fps, Z, codec.D)
    values = property_values(cfg, corpus, required=False)

    staged = []
    for stage, path in _stages_for_training(ctx):
        pairs, _, _ = storage.read_pairs(path)
        if not pairs or pairs[0].condition is None:
            raise DataError("Warning! Pairs file " + path + " carries no condition columns.")
        staged.append((stage, pairs))
    all_conds = np.concatenate([np.array([p.condition for p in pairs]) for _, pairs in staged])
    scaler = ConditionScaler.fit(all_conds)

    model = _build_model(cfg, codec.D, all_conds.shape[1], align.shape[1], ctx.seed)
    optimizer = None
    for k, (stage, pairs) in enumerate(staged):
        seeds = np.array([p.seed_id for p in pairs])
        targets = np.array([p.target_id for p in pairs])
        conds = np.array([p.condition for p in pairs])
        data = TrainingSet(Z[targets], scaler.transform(conds), align[seeds])
        overrides = dict((key, stage[key]) for key in ("learning_rate", "epochs") if stage.get(key) is not None)
        tc = make_train_config(cfg, derive_seed(ctx.seed, "train", k), **overrides)
        result = train(model, data, sched, tc, optimizer=optimizer, progress=progress, stage=k)
        optimizer = result.optimizer
        threshold = stage.get("threshold")
        low_c, high_c = _side_conditions(conds, None if values is None else values[targets], threshold)
        meta = {
            "condition_mean": scaler.mean.tolist(),
            "condition_std": scaler.std.tolist(),
            "threshold": threshold,
            "low_condition": low_c,
            "high_condition": high_c,
            "codec_checksum": codec.checksum(),
            "stage": k,
            "epochs": len(result.loss_curve),
            "final_loss": result.loss_curve[-1],
            "rng_seed": tc.rng_seed,
            "schedule": sched.to_dict(),
            "train": tc.to_dict(),
        }
        meta.update(align_meta)
        ema = result.model.params.copy() if tc.ema_decay is not None else None
        raw = result.raw_params if tc.ema_decay is not None else None
        name = "checkpoint_stage" + str(k) + ".bin" if len(staged) > 1 else "checkpoint.bin"
        storage.save_checkpoint(ctx.path(name), result.model, optimizer, ema, meta, raw_params=raw)
        outputs.append(ctx.path(name))
        curves.append((k, result.loss_curve))
        summaries.append({"stage": k, "threshold": threshold, "epochs": meta["epochs"], "final_loss": meta["final_loss"]})
        if k == len(staged) - 1 and len(staged) > 1:
            storage.save_checkpoint(ctx.path("checkpoint.bin"), result.model, optimizer, ema, meta, raw_params=raw)
            outputs.append(ctx.path("checkpoint.bin"))
        model.params = result.raw_params.copy()

    storage.write_loss_curve(ctx.path("loss.csv"), curves)
    outputs.append(ctx.path("loss.csv"))
    ctx.finish(outputs, inputs=[cfg["corpus"]["path"]], stages=summaries)


def _load_model(ctx, section):
    cfg = ctx.cfg
    ckpt = storage.load_checkpoint(ctx.input_path(cfg[section]["checkpoint"], "checkpoint.bin"))
    codec = storage.load_codec(ctx.input_path(cfg[section]["codec"], "codec.bin"))
    expected = ckpt.metadata.get("codec_checksum")
    if expected and expected != codec.checksum():
        raise ChecksumMismatch("Warning! The codec does not match the one the checkpoint was trained with.")
    scaler = storage.scaler_from_metadata(ckpt.metadata, ckpt.model.cond_dim)
    return ckpt, codec, scaler


def cmd_sample(ctx):
    """De novo generation from the prior, decoded through the codec."""
    cfg = ctx.cfg
    g = cfg["guidance"]
    if g["mode"] == "compositional" and g["w_a"] > 0:
        raise InvalidConfigValue("Warning! [guidance] w_a must be 0 for de novo sampling (there is no seed).")
    ckpt, codec, scaler = _load_model(ctx, "sample")
    raw_c = cfg["sample"]["condition"]
    c = None
    if raw_c:
        if len(raw_c) != ckpt.model.cond_dim:
            raise InvalidConfigValue(
                "Warning! [sample] condition has " + str(len(raw_c)) + " values, the model expects " + str(ckpt.model.cond_dim)
            )
        c = scaler.transform(np.array(raw_c))
    guidance = make_guidance(cfg, w_a=0.0 if g["mode"] == "compositional" else None)
    sampler = SamplerConfig(cfg["sampler"]["sigma_rule"], cfg["sampler"]["ddim_eta"], None)
    rng_seed = derive_seed(ctx.seed, "sample")
    n = cfg["sample"]["num_samples"]
    Z = np.atleast_2d(sample(ckpt.model, c, None, make_schedule(cfg), guidance, sampler, rng_seed, num_samples=n))
    if is_synthetic(cfg):
        texts = [storage.format_latent(z) for z in Z]
    else:
        texts = list(codec.decode_label(Z))
    label = cfg["sample"]["target_label"] or None
    cond = None if not raw_c else np.array(raw_c)
    gen = GenerationSet([GenerationRecord(None, t, True, cond, label) for t in texts])
    storage.write_generations(ctx.path("generations.csv"), gen, [rng_seed] * len(gen))
    ctx.finish([ctx.path("generations.csv")])


def _synthetic_seed_ids(ctx, world):
    rng = np.random.default_rng(derive_seed(ctx.seed, "edit.seeds"))
    n = min(ctx.cfg["edit"]["num_seeds"], len(world.points))
    return sorted(int(i) for i in rng.choice(len(world.points), size=n, replace=False))


def _seed_targets(cfg, meta, seed_values, n):
    """Raw target condition per seed and the flip direction."""
    target = cfg["edit"]["target"]
    if target == "flip":
        threshold = meta.get("threshold")
        if threshold is None or meta.get("low_condition") is None or meta.get("high_condition") is None:
            raise InvalidConfigValue(
                "Warning! [edit] target = flip needs a threshold-trained checkpoint; give explicit target values."
            )
        if seed_values is None:
            raise InvalidConfigValue("Warning! [edit] target = flip needs seed property values.")
        conds = [meta["high_condition"] if v < threshold else meta["low_condition"] for v in seed_values]
        return np.array(conds, dtype=np.float64)
    return np.tile(np.array(target, dtype=np.float64), (n, 1))


class CorpusEditor:
    """Loaded seeds, codec, embeddings and conditions for repeated corpus edits."""

    def __init__(self, ctx):
        cfg = ctx.cfg
        self.cfg = cfg
        self.ckpt, self.codec, self.scaler = _load_model(ctx, "edit")
        seeds_path = cfg["edit"]["seeds"] or cfg["corpus"]["path"]
        self.seeds = load_corpus(cfg, seeds_path)
        self.seeds_path = seeds_path
        self.seed_values = seed_property_values(cfg, self.seeds)
        fps = corpus_fingerprints(cfg, self.seeds)
        self.Z = self.codec.encode(fps)
        meta = self.ckpt.metadata
        if meta.get("align_space") == "latent":
            self.align = self.Z
        else:
            self.align = embedder_from_metadata(cfg, meta).embed_fingerprints(fps)
        self.raw_conds = _seed_targets(cfg, meta, self.seed_values, len(self.seeds.smiles))
        if self.raw_conds.shape[1] != self.ckpt.model.cond_dim:
            raise InvalidConfigValue("Warning! [edit] target does not match the model condition dimension.")
        self.conds = self.scaler.transform(self.raw_conds)
        self.sched = make_schedule(cfg)

    def run(self, guidance, t_star, rng_seed):
        """GenerationSet of one edit pass over every seed."""
        smiles = self.seeds.smiles
        if t_star == 0:
            texts = list(smiles)
        else:
            sampler = SamplerConfig(self.cfg["sampler"]["sigma_rule"], self.cfg["sampler"]["ddim_eta"], t_star)
            out = edit(self.ckpt.model, self.Z, self.conds, self.align, self.sched, guidance, sampler, rng_seed)
            texts = list(self.codec.decode_label(np.atleast_2d(out)))
        return GenerationSet(
            [GenerationRecord(s, t, True, c) for s, t, c in zip(smiles, texts, self.raw_conds)],
            radius=self.cfg["corpus"]["radius"],
            width=self.cfg["corpus"]["width"],
        )


def seed_property_values(cfg, corpus):
    values = property_values(cfg, corpus, required=False)
    if values is None:
        values = np.array([surrogate_property(m) for m in corpus.molecules])
    return values


def _merge(sets):
    records = [r for s in sets for r in s.records]
    return GenerationSet(records, radius=sets[0].radius, width=sets[0].width)


def _baseline_edit(ctx):
    cfg = ctx.cfg
    method = cfg["edit"]["method"]
    corpus = load_corpus(cfg)
    seeds = load_corpus(cfg, cfg["edit"]["seeds"] or cfg["corpus"]["path"])
    seed_values = seed_property_values(cfg, seeds)
    kwargs = dict(radius=cfg["corpus"]["radius"], width=cfg["corpus"]["width"])
    if method == "reconstruction":
        codec = storage.load_codec(ctx.input_path(cfg["edit"]["codec"], "codec.bin"))
        return baselines.reconstruction(seeds.smiles, codec), 0
    values = property_values(cfg, corpus)
    theta = resolve_threshold(cfg["pairs"]["threshold"], values)
    low = [corpus.smiles[i] for i in range(len(values)) if values[i] < theta]
    high = [corpus.smiles[i] for i in range(len(values)) if values[i] >= theta]
    pools = [high if v < theta else low for v in seed_values]
    if method == "nearest_target":
        return baselines.nearest_target_class(seeds.smiles, pools, **kwargs), 0
    rng_seed = derive_seed(ctx.seed, "edit.baseline")
    return baselines.random_target_class(seeds.smiles, pools, np.random.default_rng(rng_seed)), rng_seed


def cmd_edit(ctx):
    """Editing mode over every seed, `samples_per_seed` passes, or a retrieval baseline."""
    cfg = ctx.cfg
    t_star = cfg["sampler"]["edit_t_star"]
    reps = cfg["edit"]["samples_per_seed"]
    inputs = []
    if is_synthetic(cfg):
        world = make_world(cfg)
        ids = _synthetic_seed_ids(ctx, world)
        records, rng_seeds = [], []
        if cfg["edit"]["method"] != "model":
            out, rs = _synthetic_baseline(ctx, world, ids)
            outs = [(out, rs)]
        else:
            ckpt = storage.load_checkpoint(ctx.input_path(cfg["edit"]["checkpoint"], "checkpoint.bin"))
            scaler = storage.scaler_from_metadata(ckpt.metadata, 1)
            sampler = SamplerConfig(cfg["sampler"]["sigma_rule"], cfg["sampler"]["ddim_eta"], t_star)
            outs = []
            for k in range(reps):
                rs = derive_seed(ctx.seed, "edit", k)
                out, _ = edit_world(ckpt.model, world, scaler, ids, make_schedule(cfg), make_guidance(cfg), sampler, rs)
                outs.append((out, rs))
        conds, _ = world.edit_targets(ids)
        for out, rs in outs:
            for i, z, c in zip(ids, out, conds):
                records.append(GenerationRecord(storage.format_latent(world.points[i]), storage.format_latent(z), True, c))
                rng_seeds.append(rs)
        gen = GenerationSet(records)
    elif cfg["edit"]["method"] != "model":
        gen, rs = _baseline_edit(ctx)
        rng_seeds = [rs] * len(gen)
        inputs = [cfg["corpus"]["path"], cfg["edit"]["seeds"]]
    else:
        editor = CorpusEditor(ctx)
        sets, rng_seeds = [], []
        for k in range(reps):
            rs = derive_seed(ctx.seed, "edit", k)
            sets.append(editor.run(make_guidance(cfg), t_star, rs))
            rng_seeds.extend([rs] * len(sets[-1]))
        gen = _merge(sets)
        inputs = [editor.seeds_path]
    storage.write_generations(ctx.path("generations.csv"), gen, rng_seeds)
    ctx.finish([ctx.path("generations.csv")], inputs=inputs)


def _synthetic_baseline(ctx, world, ids):
    method = ctx.cfg["edit"]["method"]
    Z = world.points
    if method == "reconstruction":
        return Z[ids].copy(), 0
    out = []
    rng_seed = derive_seed(ctx.seed, "edit.baseline")
    rng = np.random.default_rng(rng_seed)
    for i in ids:
        pool = world.high if world.values[i] < world.threshold else world.low
        if method == "random_target":
            out.append(Z[pool[int(rng.integers(len(pool)))]])
        else:
            d = np.linalg.norm(Z[pool] - Z[i], axis=1)
            out.append(Z[pool[int(np.argmin(d))]])
    return np.array(out), rng_seed if method == "random_target" else 0


def synthetic_scores(world, seeds, outputs):
    regions = [
        TargetRegion.above(world.threshold) if world.property(z) < world.threshold else TargetRegion.below(world.threshold)
        for z in seeds
    ]
    return latent_edit_metrics(seeds, outputs, world.property, regions, train_latents=world.points)


def corpus_edit_scores(gen, threshold, train_canonicals):
    """Validity plus editing metrics of a corpus GenerationSet, surrogate property as oracle."""
    regions = []
    for rec in gen.records:
        seed_mol = try_parse(rec.seed)
        if seed_mol is None:
            raise DataError("Warning! Seed " + str(rec.seed) + " is not a valid molecule.")
        seed_value = surrogate_property(seed_mol)
        regions.append(TargetRegion.above(threshold) if seed_value < threshold else TargetRegion.below(threshold))
    scores = edit_metrics(gen, surrogate_property, regions, train_canonicals)
    scores["Val"] = validity(gen)
    return scores


def _resolve_spaces(cfg):
    """{space name: SimilaritySpace} for every requested space, before any scoring."""
    vectors = {}
    for path in cfg["eval"]["embeddings"]:
        name, table = storage.read_embeddings(path)
        vectors.setdefault(name, {}).update(table)
    ref_spaces = storage.reference_space_names(cfg["eval"]["references"])
    spaces = {}
    for name in cfg["eval"]["spaces"]:
        if name == "ECFP":
            spaces[name] = ecfp_space(cfg["corpus"]["radius"], cfg["corpus"]["width"])
        elif name in vectors or name in ref_spaces:
            spaces[name] = cosine_space(name, vectors.get(name, {}))
        else:
            raise MissingEmbeddingSpace(
                "Warning! [eval] spaces names '" + name + "' but no embedding file or reference column provides it."
            )
    return spaces


def cmd_eval(ctx):
    """Scores a generations file and writes report.json / report.txt."""
    cfg = ctx.cfg
    requested = cfg["eval"]["metrics"]
    for m in requested:
        if m not in METRICS:
            raise InvalidConfigValue("Warning! [eval] metrics names unknown metric '" + m + "'")
    if "retrieval" in requested and not cfg["eval"]["references"]:
        raise InvalidConfigValue("Warning! [eval] references is required for the retrieval metrics.")
    if "binders" in requested and not cfg["eval"]["binders"]:
        raise InvalidConfigValue("Warning! [eval] binders is required for the binder metrics.")
    spaces = _resolve_spaces(cfg) if "retrieval" in requested else {}
    gen_path = ctx.input_path(cfg["eval"]["generations"], "generations.csv")
    report = MetricsReport()

    if is_synthetic(cfg):
        world = make_world(cfg)
        gen, _ = storage.read_generations(gen_path)
        seeds = np.array([storage.parse_latent(r.seed) for r in gen.records])
        outs = np.array([storage.parse_latent(r.generated) for r in gen.records])
        report.update(synthetic_scores(world, seeds, outs))
        report.note("Sim", "cosine between seed and output latents")
        report.note("Dir", DIR_NOTE)
        storage.write_report(ctx.path("report"), report)
        ctx.finish([ctx.path("report.json"), ctx.path("report.txt")], inputs=[gen_path])
        return

    gen, _ = storage.read_generations(gen_path, radius=cfg["corpus"]["radius"], width=cfg["corpus"]["width"])
    corpus = load_corpus(cfg)
    train_canon = corpus.canonical
    if "validity" in requested:
        report.add("validity", validity(gen))
    if "uniqueness" in requested:
        report.add("uniqueness", uniqueness(gen))
    if "novelty" in requested:
        report.add("novelty", novelty(gen, train_canon))
    if "diversity" in requested:
        report.add("internal_diversity", internal_diversity(gen))
    if "edit" in requested:
        surrogate = np.array([surrogate_property(m) for m in corpus.molecules])
        theta = resolve_threshold(cfg["eval"]["threshold"], surrogate)
        scores = corpus_edit_scores(gen, theta, train_canon)
        scores.pop("Val")
        report.update(scores)
        report.note("Tgt", "denominator: all generated records")
        report.note("Sim", "mean Tanimoto to the seed over valid outputs")
        report.note("Dir", DIR_NOTE)
    if "objective" in requested:
        if any(r.condition is None or len(np.atleast_1d(r.condition)) != 1 for r in gen.records):
            raise OracleUnavailable("Warning! The surrogate oracle only covers scalar conditions.")
        values = objective_report(
            gen, lambda mol: [surrogate_property(mol)], d=cfg["eval"]["divergence"], lam=cfg["eval"]["lam"]
        )
        finite = values[np.isfinite(values)]
        report.add(
            "objective_mean",
            MetricValue(float(np.mean(finite)), len(finite)) if len(finite) else MetricValue.undefined(),
        )
    if "hits" in requested:
        fps = corpus_fingerprints(cfg, corpus)
        top, ratio = novel_hit_metrics(
            gen,
            surrogate_property,
            [],
            cfg["eval"]["hit_threshold"],
            fps,
            top_fraction=cfg["eval"]["top_fraction"],
        )
        report.add("novel_top_score", top)
        report.add("novel_hit_ratio", ratio)
        report.note("novel_hit_ratio", "denominator: all generated records")
    if "retrieval" in requested:
        refs = storage.read_reference_library(
            cfg["eval"]["references"], radius=cfg["corpus"]["radius"], width=cfg["corpus"]["width"]
        )
        n = cfg["eval"]["retrieval_n"]
        for name, space in spaces.items():
            report.add(name + ".top1_cluster_accuracy", top1_cluster_accuracy(gen, refs, space))
            for k in cfg["eval"]["retrieval_k"]:
                report.add(name + ".moa_retrieval@" + str(k), moa_retrieval_rate(gen, refs, space, k, n))
            for k in cfg["eval"]["knn_k"]:
                report.add(name + ".knn_accuracy@" + str(k), knn_accuracy(gen, refs, space, k))
    if "binders" in requested:
        binders = storage.read_reference_library(
            cfg["eval"]["binders"], radius=cfg["corpus"]["radius"], width=cfg["corpus"]["width"]
        )
        by_target = dict((label, [item.fingerprint for item in items]) for label, items in binders.classes.items())
        report.update(max_sim_to_binders_by_target(gen, by_target), prefix="max_sim_to_binders.")
    outputs = storage.write_report(ctx.path("report"), report)
    ctx.finish(outputs, inputs=[gen_path, cfg["corpus"]["path"]])


def cmd_sweep(ctx):
    """Edits and scores every (w_c, w_a, t*, rng seed) grid point; writes grid.csv."""
    cfg = ctx.cfg
    sw = cfg["sweep"]
    grid = list(itertools.product(sw["w_c"], sw["w_a"], sw["t_star"], sw["seeds"]))
    if is_synthetic(cfg):
        world = make_world(cfg)
        ids = _synthetic_seed_ids(ctx, world)
        ckpt = storage.load_checkpoint(ctx.input_path(cfg["edit"]["checkpoint"], "checkpoint.bin"))
        scaler = storage.scaler_from_metadata(ckpt.metadata, 1)
        sched = make_schedule(cfg)

        def run(point):
            w_c, w_a, t_star, k = point
            sampler = SamplerConfig(cfg["sampler"]["sigma_rule"], cfg["sampler"]["ddim_eta"], t_star)
            guidance = GuidanceConfig.compositional(w_c, w_a)
            _, scores = edit_world(ckpt.model, world, scaler, ids, sched, guidance, sampler, derive_seed(ctx.seed, "edit", k))
            return scores

    else:
        editor = CorpusEditor(ctx)
        corpus = load_corpus(cfg)
        surrogate = np.array([surrogate_property(m) for m in corpus.molecules])
        theta = resolve_threshold(cfg["eval"]["threshold"], surrogate)

        def run(point):
            w_c, w_a, t_star, k = point
            gen = editor.run(GuidanceConfig.compositional(w_c, w_a), t_star, derive_seed(ctx.seed, "edit", k))
            return corpus_edit_scores(gen, theta, corpus.canonical)

    workers = max(1, sw["workers"])
    bar = tqdm(total=len(grid), disable=not cfg["run"]["progress"], desc="sweep", leave=False)
    if workers == 1:
        results = []
        for point in grid:
            results.append(run(point))
            bar.update(1)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, grid))
        bar.update(len(grid))
    bar.close()

    rows = []
    for (w_c, w_a, t_star, k), scores in zip(grid, results):
        row = {"w_c": w_c, "w_a": w_a, "t_star": t_star, "rng_seed": k}
        for name in ("Tgt", "Sim", "Val", "NTS", "Nov", "Dir"):
            row[name] = scores[name].value
        rows.append(row)
    storage.write_grid(ctx.path("grid.csv"), rows)
    ctx.finish([ctx.path("grid.csv")])


HANDLERS = {
    "pairs": cmd_pairs,
    "train": cmd_train,
    "sample": cmd_sample,
    "edit": cmd_edit,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="molguide", description="Guided latent diffusion for molecular editing.")
    sub = parser.add_subparsers(dest="command")
    sub.required = True
    for name in COMMANDS:
        p = sub.add_parser(name, help=HANDLERS[name].__doc__.splitlines()[0])
        p.add_argument("--config", type=str, default=None, help="Run configuration file (default=all defaults)")
        p.add_argument(
            "--out-dir",
            type=str,
            default=None,
            help="Output directory (default=$PHAME_OUT_DIR, else the working directory)",
        )
        p.add_argument("--seed-override", type=int, default=None, help="Replaces [run] seed (default=None)")
        p.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    return parser


def run_command(command, cfg, out_dir):
    """Runs one subcommand on an already parsed RunConfig."""
    ctx = RunContext(cfg, out_dir, command)
    HANDLERS[command](ctx)
    return ctx


def main(argv=None):
    """Console entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT, stream=sys.stderr
    )
    try:
        cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
        if args.seed_override is not None:
            cfg.set("run", "seed", str(args.seed_override))
        out_dir = args.out_dir or os.environ.get("PHAME_OUT_DIR") or os.getcwd()
        run_command(args.command, cfg, out_dir)
    except MolguideError as e:
        logger.error("%s", e)
        return e.exit_code
    except (IOError, OSError) as e:
        logger.error("%s", e)
        return DataError.exit_code
    return 0
