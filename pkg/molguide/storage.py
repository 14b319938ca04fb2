# -*- coding: utf-8 -*-
"""
Readers and writers for every file molguide consumes or produces: corpora,
pairs, generations, loss curves, sweep grids, reference libraries,
embedding files, codec and checkpoint binaries and JSON manifests.

Tabular outputs are written through pandas with a fixed column order so
that identical inputs give byte-identical files.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import configparser
import io
import json
import logging
import os
import struct
from collections import namedtuple, OrderedDict

import numpy as np
import pandas as pd

from molguide.toolkit import (
    ChecksumMismatch,
    CorpusFormatError,
    DataError,
    format_float,
    sha256_file,
)
from molguide.chem import SmilesError, canonical_form, morgan_fingerprint, parse_smiles
from molguide.latent import GaussianMixtureCodec, PCACodec
from molguide.denoiser import AdamState, ConditionScaler, DenoiserModel
from molguide.pairing import TrainingPair
from molguide.evaluation import GenerationRecord, GenerationSet, ReferenceItem, ReferenceLibrary

logger = logging.getLogger(__name__)

CODEC_MAGIC = b"PHAMEC1"
CHECKPOINT_MAGIC = b"PHAMED1"
_KIND_CODES = {"pca": 0, "gaussian_mixture": 1}

Corpus = namedtuple("Corpus", ["smiles", "molecules", "canonical", "columns"])
Checkpoint = namedtuple("Checkpoint", ["model", "optimizer", "ema", "metadata", "raw_params"])
Checkpoint.__new__.__defaults__ = (None,)


def read_corpus(path):
    """Reads a molecule corpus.

    One SMILES per line, optionally followed by tab-separated numeric
    columns; blank lines and lines starting with '#' are skipped.  Every
    data line must carry the same number of columns.

    Returns:
       Corpus (smiles, molecules, canonical, columns of shape (n, k))
    """
    smiles, mols, canon, rows = [], [], [], []
    width = None
    with io.open(path, "r", encoding="utf-8", newline="\n") as f:
        for lineno, line in enumerate(f, start=1):
            text = line.rstrip("\n").rstrip("\r")
            if not text.strip() or text.lstrip().startswith("#"):
                continue
            fields = text.split("\t")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise CorpusFormatError(
                    "expected " + str(width) + " columns, found " + str(len(fields)), line=lineno
                )
            try:
                mol = parse_smiles(fields[0].strip())
            except SmilesError as e:
                raise CorpusFormatError(str(e), line=lineno)
            try:
                values = [float(v) for v in fields[1:]]
            except ValueError:
                raise CorpusFormatError("non-numeric column", line=lineno)
            if not np.all(np.isfinite(values)):
                raise CorpusFormatError("non-finite column", line=lineno)
            smiles.append(fields[0].strip())
            mols.append(mol)
            canon.append(canonical_form(mol))
            rows.append(values)
    if not smiles:
        raise CorpusFormatError("corpus " + str(path) + " holds no molecules")
    columns = np.array(rows, dtype=np.float64).reshape(len(rows), (width or 1) - 1)
    logger.info("Read %d molecules with %d numeric columns from %s", len(smiles), columns.shape[1], path)
    return Corpus(smiles, mols, canon, columns)


def write_corpus(path, entries):
    """Writes (smiles, values...) entries in the corpus format."""
    with io.open(path, "w", encoding="utf-8", newline="\n") as f:
        for entry in entries:
            smiles, values = entry[0], entry[1:]
            flat = []
            for v in values:
                if v is None:
                    continue
                flat.extend(np.atleast_1d(v).tolist())
            f.write("\t".join([smiles] + [format_float(v) for v in flat]) + "\n")


def _condition_columns(width):
    return ["cond_" + str(k) for k in range(width)]


def write_pairs(path, pairs, smiles):
    """Pairs CSV: seed_id, target_id, seed_smiles, target_smiles, tanimoto, cond_*."""
    width = 0
    for p in pairs:
        if p.condition is not None:
            width = len(np.atleast_1d(p.condition))
            break
    rows = []
    for p in pairs:
        row = [p.seed_id, p.target_id, smiles[p.seed_id] if smiles else "", smiles[p.target_id] if smiles else ""]
        row.append(float(p.structural_sim))
        if width:
            row.extend(np.atleast_1d(p.condition).tolist())
        rows.append(row)
    columns = ["seed_id", "target_id", "seed_smiles", "target_smiles", "tanimoto"] + _condition_columns(width)
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False)


def read_pairs(path):
    df = pd.read_csv(path, keep_default_na=False, dtype={"seed_smiles": str, "target_smiles": str})
    cond_cols = [c for c in df.columns if c.startswith("cond_")]
    pairs = []
    for row in df.itertuples(index=False):
        rec = row._asdict()
        cond = np.array([rec[c] for c in cond_cols], dtype=np.float64) if cond_cols else None
        pairs.append(TrainingPair(int(rec["seed_id"]), int(rec["target_id"]), float(rec["tanimoto"]), cond))
    return pairs, list(df["seed_smiles"]), list(df["target_smiles"])


def write_generations(path, gen, rng_seeds):
    """Generations CSV: seed, generated, decoded_valid, rng_seed, target, cond_*."""
    width = 0
    for r in gen.records:
        if r.condition is not None:
            width = len(np.atleast_1d(r.condition))
            break
    rows = []
    for r, s in zip(gen.records, rng_seeds):
        row = [
            "" if r.seed is None else r.seed,
            r.generated,
            int(bool(r.decoded_valid)),
            int(s),
            "" if r.target is None else str(r.target),
        ]
        if width:
            row.extend(np.atleast_1d(r.condition).tolist() if r.condition is not None else [np.nan] * width)
        rows.append(row)
    columns = ["seed", "generated", "decoded_valid", "rng_seed", "target"] + _condition_columns(width)
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False)


def read_generations(path, radius=None, width=None):
    """Reads a generations CSV back into a GenerationSet and its rng seeds."""
    df = pd.read_csv(path, keep_default_na=False, dtype={"seed": str, "generated": str, "target": str})
    cond_cols = [c for c in df.columns if c.startswith("cond_")]
    records = []
    for row in df.itertuples(index=False):
        rec = row._asdict()
        cond = None
        if cond_cols:
            cond = np.array([float(rec[c]) if rec[c] != "" else np.nan for c in cond_cols])
            if np.all(np.isnan(cond)):
                cond = None
        records.append(
            GenerationRecord(
                rec["seed"] or None,
                rec["generated"],
                bool(int(rec["decoded_valid"])),
                cond,
                rec["target"] or None,
            )
        )
    kwargs = {}
    if radius is not None:
        kwargs["radius"] = radius
    if width is not None:
        kwargs["width"] = width
    return GenerationSet(records, **kwargs), [int(s) for s in df["rng_seed"]]


def write_loss_curve(path, curves):
    """Loss CSV from a list of (stage, per-epoch losses)."""
    rows = []
    for stage, curve in curves:
        for epoch, loss in enumerate(curve):
            rows.append([stage, epoch, float(loss)])
    pd.DataFrame(rows, columns=["stage", "epoch", "loss"]).to_csv(path, index=False)


def read_loss_curve(path):
    return pd.read_csv(path)


GRID_COLUMNS = ["w_c", "w_a", "t_star", "rng_seed", "Tgt", "Sim", "Val", "NTS", "Nov", "Dir"]


def write_grid(path, rows):
    """Sweep grid CSV, one dict per (grid point, rng seed)."""
    pd.DataFrame([[r[c] for c in GRID_COLUMNS] for r in rows], columns=GRID_COLUMNS).to_csv(path, index=False)


def read_grid(path):
    return pd.read_csv(path)


def read_reference_library(path, radius=None, width=None):
    """Reference CSV: label, smiles, then optional `<space>_<k>` embedding columns."""
    df = pd.read_csv(path, keep_default_na=False, dtype={"label": str, "smiles": str})
    for required in ("label", "smiles"):
        if required not in df.columns:
            raise DataError("Warning! Reference library " + str(path) + " lacks a '" + required + "' column.")
    spaces = OrderedDict()
    for col in df.columns[2:]:
        name, _, k = col.rpartition("_")
        if not name or not k.isdigit():
            raise DataError("Warning! Embedding column '" + col + "' is not named <space>_<k>.")
        spaces.setdefault(name, []).append(col)
    fp_kwargs = {}
    if radius is not None:
        fp_kwargs["radius"] = radius
    if width is not None:
        fp_kwargs["width"] = width
    classes = OrderedDict()
    for row in df.itertuples(index=False):
        rec = row._asdict()
        mol = parse_smiles(rec["smiles"])
        emb = dict((name, np.array([float(rec[c]) for c in cols])) for name, cols in spaces.items())
        item = ReferenceItem(canonical_form(mol), morgan_fingerprint(mol, **fp_kwargs), emb)
        classes.setdefault(rec["label"], []).append(item)
    return ReferenceLibrary(classes)


def write_embeddings(path, space, vectors):
    """Embedding file: 'space<TAB>name' header, then key<TAB>v1<TAB>v2... per line."""
    with io.open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("space\t" + space + "\n")
        for key in sorted(vectors):
            f.write("\t".join([key] + [format_float(v) for v in vectors[key]]) + "\n")


def read_embeddings(path):
    """Returns (space name, {canonical string: vector})."""
    with io.open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split("\t")
    if len(header) != 2 or header[0] != "space":
        raise CorpusFormatError("embedding file header must be 'space<TAB>name'", line=1)
    df = pd.read_csv(path, sep="\t", skiprows=1, header=None, keep_default_na=False, dtype={0: str})
    vectors = OrderedDict()
    for row in df.itertuples(index=False):
        vectors[row[0]] = np.array(row[1:], dtype=np.float64)
    return header[1], vectors


def _pack_array(arr):
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def _unpack_array(buf, offset, count):
    arr = np.frombuffer(buf, dtype="<f8", count=count, offset=offset).astype(np.float64)
    return arr, offset + 8 * count


def _write_json(path, data):
    with io.open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with io.open(path, "r", encoding="utf-8") as f:
        return json.load(f, object_pairs_hook=OrderedDict)


def save_codec(path, codec, corpus_hash="", seed=None):
    """Writes the codec binary and its `<path>.json` sidecar."""
    out = [CODEC_MAGIC, struct.pack("<B", _KIND_CODES[codec.kind])]
    if codec.kind == "pca":
        n = codec.encodings.shape[0]
        out.append(struct.pack("<IIII", codec.D, codec.width, n, codec.radius))
        out.append(_pack_array(codec.components))
        out.append(_pack_array(codec.mean))
        out.append(_pack_array(codec.encodings))
        for label in codec.labels:
            raw = label.encode("utf-8")
            out.append(struct.pack("<I", len(raw)) + raw)
    else:
        k = codec.centers.shape[0]
        out.append(struct.pack("<II", codec.D, k))
        out.append(struct.pack("<d", codec.spread))
        out.append(_pack_array(codec.centers))
    with open(path, "wb") as f:
        f.write(b"".join(out))
    _write_json(
        path + ".json",
        {
            "format": CODEC_MAGIC.decode("ascii"),
            "kind": codec.kind,
            "dimension": codec.D,
            "corpus_hash": corpus_hash,
            "seed": seed,
            "checksum": codec.checksum(),
            "file_sha256": sha256_file(path),
        },
    )
    logger.info("Saved %s codec (D=%d) to %s", codec.kind, codec.D, path)


def load_codec(path):
    with open(path, "rb") as f:
        buf = f.read()
    if buf[: len(CODEC_MAGIC)] != CODEC_MAGIC:
        raise DataError("Warning! " + str(path) + " is not a codec file.")
    _verify_sidecar(path)
    off = len(CODEC_MAGIC)
    (kind,) = struct.unpack_from("<B", buf, off)
    off += 1
    if kind == _KIND_CODES["pca"]:
        D, width, n, radius = struct.unpack_from("<IIII", buf, off)
        off += 16
        comps, off = _unpack_array(buf, off, D * width)
        mean, off = _unpack_array(buf, off, width)
        enc, off = _unpack_array(buf, off, n * D)
        labels = []
        for _ in range(n):
            (size,) = struct.unpack_from("<I", buf, off)
            off += 4
            labels.append(buf[off : off + size].decode("utf-8"))
            off += size
        return PCACodec(mean, comps.reshape(D, width), enc.reshape(n, D), labels, radius=radius)
    D, k = struct.unpack_from("<II", buf, off)
    off += 8
    (spread,) = struct.unpack_from("<d", buf, off)
    off += 8
    centers, off = _unpack_array(buf, off, k * D)
    return GaussianMixtureCodec(centers.reshape(k, D), spread)


def _verify_sidecar(path):
    sidecar = path + ".json"
    if not os.path.exists(sidecar):
        return None
    meta = read_json(sidecar)
    expected = meta.get("file_sha256")
    if expected and expected != sha256_file(path):
        raise ChecksumMismatch("Warning! " + str(path) + " does not match its manifest checksum.")
    return meta


def save_checkpoint(path, model, optimizer=None, ema=None, metadata=None, raw_params=None):
    """Writes the checkpoint binary and its `<path>.json` manifest.

    Layout: magic, config block (length-prefixed JSON), parameter array,
    optimizer state (step, first and second moments), optional EMA array,
    optional raw training parameters.  With EMA on, `model` carries the
    shadow weights used for sampling and `raw_params` the weights the
    optimizer state belongs to.
    """
    metadata = dict(metadata or {})
    block = json.dumps({"model": model.config(), "metadata": metadata}, sort_keys=True).encode("utf-8")
    out = [CHECKPOINT_MAGIC, struct.pack("<I", len(block)), block]
    out.append(struct.pack("<Q", model.num_params))
    out.append(_pack_array(model.params))
    if optimizer is None:
        out.append(struct.pack("<B", 0))
    else:
        out.append(struct.pack("<BQ", 1, optimizer.step))
        out.append(_pack_array(optimizer.m))
        out.append(_pack_array(optimizer.v))
    if ema is None:
        out.append(struct.pack("<B", 0))
    else:
        out.append(struct.pack("<B", 1))
        out.append(_pack_array(ema))
    if raw_params is None:
        out.append(struct.pack("<B", 0))
    else:
        out.append(struct.pack("<B", 1))
        out.append(_pack_array(raw_params))
    with open(path, "wb") as f:
        f.write(b"".join(out))
    manifest = {
        "format": CHECKPOINT_MAGIC.decode("ascii"),
        "model_checksum": model.checksum(),
        "file_sha256": sha256_file(path),
    }
    for key in ("epochs", "final_loss", "stage", "threshold", "rng_seed", "codec_checksum"):
        if key in metadata:
            manifest[key] = metadata[key]
    _write_json(path + ".json", manifest)
    logger.info("Saved checkpoint with %d parameters to %s", model.num_params, path)


def load_checkpoint(path):
    with open(path, "rb") as f:
        buf = f.read()
    if buf[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise DataError("Warning! " + str(path) + " is not a checkpoint file.")
    _verify_sidecar(path)
    off = len(CHECKPOINT_MAGIC)
    (size,) = struct.unpack_from("<I", buf, off)
    off += 4
    block = json.loads(buf[off : off + size].decode("utf-8"))
    off += size
    config = block["model"]
    config["hidden"] = tuple(config["hidden"])
    model = DenoiserModel(**config)
    (count,) = struct.unpack_from("<Q", buf, off)
    off += 8
    if count != model.num_params:
        raise DataError("Warning! Checkpoint parameter count does not match its model config.")
    model.params, off = _unpack_array(buf, off, count)
    (has_opt,) = struct.unpack_from("<B", buf, off)
    off += 1
    optimizer = None
    if has_opt:
        (step,) = struct.unpack_from("<Q", buf, off)
        off += 8
        optimizer = AdamState(count)
        optimizer.step = step
        optimizer.m, off = _unpack_array(buf, off, count)
        optimizer.v, off = _unpack_array(buf, off, count)
    (has_ema,) = struct.unpack_from("<B", buf, off)
    off += 1
    ema = None
    if has_ema:
        ema, off = _unpack_array(buf, off, count)
    raw = None
    if off < len(buf):
        (has_raw,) = struct.unpack_from("<B", buf, off)
        off += 1
        if has_raw:
            raw, off = _unpack_array(buf, off, count)
    return Checkpoint(model, optimizer, ema, block["metadata"], raw)


def resume_state(ckpt):
    """Model and optimizer to continue training from a checkpoint.

    The model carries the raw training parameters when the checkpoint holds
    them, so a later curriculum stage resumed from disk matches one run in
    the same process.

    Returns:
       tuple (DenoiserModel, AdamState or None)
    """
    model = ckpt.model.copy()
    if ckpt.raw_params is not None:
        model.params = ckpt.raw_params.copy()
    return model, ckpt.optimizer


def scaler_from_metadata(metadata, dim):
    if "condition_mean" in metadata:
        return ConditionScaler(metadata["condition_mean"], metadata["condition_std"])
    return ConditionScaler.identity(dim)


def write_manifest(path, resolved_config, inputs=(), artifacts=(), wall_clock=None, stages=None, extra=None):
    """Run manifest: resolved config, sha256 of every input and artifact, timings and stage summaries."""
    data = OrderedDict()
    data["config"] = resolved_config
    data["inputs"] = OrderedDict((str(p), sha256_file(p)) for p in inputs)
    data["artifacts"] = OrderedDict((os.path.basename(str(p)), sha256_file(p)) for p in artifacts)
    if wall_clock is not None:
        data["wall_clock_seconds"] = wall_clock
    if stages:
        data["stages"] = stages
    if extra:
        data.update(extra)
    _write_json(path, data)


def verify_manifest(path):
    """Recomputes every artifact checksum listed in a manifest next to it."""
    data = read_json(path)
    root = os.path.dirname(path)
    for name, digest in data.get("artifacts", {}).items():
        if sha256_file(os.path.join(root, name)) != digest:
            raise ChecksumMismatch("Warning! Artifact " + name + " does not match " + str(path))
    return data


def write_report(prefix, report):
    """Writes `<prefix>.json` and `<prefix>.txt`."""
    with io.open(prefix + ".json", "w", encoding="utf-8", newline="\n") as f:
        f.write(report.to_json())
    with io.open(prefix + ".txt", "w", encoding="utf-8", newline="\n") as f:
        f.write(report.to_text())
    return [prefix + ".json", prefix + ".txt"]


def write_curriculum(path, stages):
    """Curriculum file: one `[stageK]` section per stage in the run-config format."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for k, stage in enumerate(stages):
        section = "stage" + str(k)
        parser.add_section(section)
        for key, value in stage.items():
            parser.set(section, key, "none" if value is None else _text(value))
    with io.open(path, "w", encoding="utf-8", newline="\n") as f:
        parser.write(f)


def _text(value):
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def read_curriculum(path):
    """Stages of a curriculum file in order, numeric values parsed."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    with io.open(path, "r", encoding="utf-8") as f:
        parser.read_file(f)
    stages = []
    for section in sorted(parser.sections(), key=lambda s: int(s[len("stage") :])):
        stage = OrderedDict()
        for key, text in parser.items(section):
            if text == "none":
                stage[key] = None
                continue
            try:
                stage[key] = int(text)
            except ValueError:
                try:
                    stage[key] = float(text)
                except ValueError:
                    stage[key] = text
        stages.append(stage)
    return stages


def format_latent(z):
    """Latent vector as space-separated round-trip floats (synthetic generations)."""
    return " ".join(format_float(v) for v in np.atleast_1d(z))


def parse_latent(text):
    try:
        return np.array([float(v) for v in text.split()], dtype=np.float64)
    except ValueError:
        raise DataError("Warning! '" + text + "' is not a latent vector.")


def reference_space_names(path):
    """Embedding space names carried as `<space>_<k>` columns of a reference CSV."""
    if not path or not os.path.exists(path):
        return set()
    columns = list(pd.read_csv(path, nrows=0).columns)[2:]
    return set(col.rpartition("_")[0] for col in columns)
