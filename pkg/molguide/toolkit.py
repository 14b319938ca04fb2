# -*- coding: utf-8 -*-
"""
Set of helper functions shared by every module of **molguide**: the error
hierarchy, small vector utilities, the frozen 64-bit hash used by the
fingerprints, seed derivation and file checksums.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import hashlib
import logging

import numpy as np

logger = logging.getLogger(__name__)

TOL = 1e-12
MASK64 = 0xFFFFFFFFFFFFFFFF
HASH_SEED = 0x9E3779B97F4A7C15  # frozen, changing it changes every fingerprint


class MolguideError(ValueError):
    """Base class for every error raised by molguide."""

    exit_code = 1


class ConfigError(MolguideError):
    exit_code = 2


class DataError(MolguideError):
    exit_code = 3


class NumericError(MolguideError):
    exit_code = 4


class InvalidParameters(ConfigError):
    pass


class UnknownConfigKey(ConfigError):
    pass


class InvalidConfigValue(ConfigError):
    pass


class MissingEmbeddingSpace(ConfigError):
    pass


class DimensionMismatch(DataError):
    pass


class WidthMismatch(DataError):
    pass


class InsufficientData(DataError):
    pass


class ZeroVector(DataError):
    pass


class EmptyInput(DataError):
    pass


class EmptyPartition(DataError):
    """Raised when a threshold leaves one side of a split empty.

    Keyword Args:
       * **stage** (int): curriculum stage index that failed, or `None` outside a curriculum.
    """

    def __init__(self, message, stage=None):
        MolguideError.__init__(self, message)
        self.stage = stage


class ZeroConditionVector(DataError):
    pass


class MissingSeed(DataError):
    pass


class UnknownClassLabel(DataError):
    pass


class InvalidK(DataError):
    pass


class EmptyBinderSet(DataError):
    pass


class OracleUnavailable(DataError):
    pass


class ChecksumMismatch(DataError):
    pass


class CorpusFormatError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = "line " + str(line) + ": " + message
        MolguideError.__init__(self, message)
        self.line = line


class NonConvergence(NumericError):
    pass


class StepOutOfRange(NumericError):
    pass


class NonFiniteLoss(NumericError):
    """Raised when the training loss stops being finite.

    Keyword Args:
       * **batch** (int): index of the offending batch within its epoch.
       * **epoch** (int): epoch index.
       * **stage** (int): curriculum stage index, when training in stages.
    """

    def __init__(self, message, batch=None, epoch=None, stage=None):
        MolguideError.__init__(self, message)
        self.batch = batch
        self.epoch = epoch
        self.stage = stage

    def __str__(self):
        context = []
        if self.stage is not None:
            context.append("stage " + str(self.stage))
        if self.epoch is not None:
            context.append("epoch " + str(self.epoch))
        if self.batch is not None:
            context.append("batch " + str(self.batch))
        msg = MolguideError.__str__(self)
        if context:
            msg = msg + " (" + ", ".join(context) + ")"
        return msg


def as_vector(x, name="vector"):
    """Returns `x` as a finite 1-D float64 numpy array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(
            "Warning! " + name + " must be one-dimensional, got shape " + str(v.shape)
        )
    return v


def check_same_shape(a, b, what="inputs"):
    if np.shape(a) != np.shape(b):
        raise DimensionMismatch(
            "Warning! "
            + what
            + " have shapes "
            + str(np.shape(a))
            + " and "
            + str(np.shape(b))
        )


def cosine(a, b):
    """Cosine of the angle between two nonzero vectors.

    Args:
       * **a** (array): first vector
       * **b** (array): second vector

    Returns:
       float in [-1, 1]
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b, "cosine arguments")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("Warning! Cosine is undefined for a zero vector.")
    c = float(np.dot(a, b) / (na * nb))
    return min(1.0, max(-1.0, c))


def cosine_matrix(A, B):
    """Pairwise cosines between the rows of `A` and the rows of `B`."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    if np.any(na == 0.0) or np.any(nb == 0.0):
        raise ZeroVector("Warning! Cosine is undefined for a zero vector.")
    return np.clip((A @ B.T) / np.outer(na, nb), -1.0, 1.0)


def mix64(x):
    """splitmix64 finalizer on a 64-bit unsigned integer."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def hash_ints(values, seed=HASH_SEED):
    """Order-sensitive 64-bit hash of a sequence of integers.

    Negative integers are reduced modulo 2**64 first, so the result is the
    same on every platform.
    """
    h = mix64(seed & MASK64)
    for v in values:
        h = mix64(h ^ (int(v) & MASK64))
    return h


def derive_seed(root_seed, component, counter=0):
    """Splits one root seed into independent per-component seeds.

    The seed for (root, component, counter) is the first 63-bit word drawn
    from `numpy.random.SeedSequence([root, crc(component), counter])`.

    Args:
       * **root_seed** (int): run-level seed
       * **component** (string): name of the consumer, e.g. `'train'` or `'edit'`

    Keyword Args:
       * **counter** (int): index for repeated draws by the same component.  Defaults to 0.

    Returns:
       int
    """
    tag = int(hashlib.sha256(component.encode("utf-8")).hexdigest()[:8], 16)
    ss = np.random.SeedSequence([int(root_seed) & MASK64, tag, int(counter)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def str2bool(v):
    """Allow proper handling of boolean inputs in config files and flags"""
    if isinstance(v, bool):
        return v
    if v.lower() in ("yes", "true", "t", "y", "1", "on"):
        return True
    elif v.lower() in ("no", "false", "f", "n", "0", "off"):
        return False
    else:
        raise InvalidConfigValue("Boolean value expected, got '" + str(v) + "'")


def format_float(x):
    """Shortest round-trip text form of a float, used by every CSV writer."""
    return repr(float(x))
