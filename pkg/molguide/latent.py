# -*- coding: utf-8 -*-
"""
Latent codecs that stand in for a frozen encoder/decoder pair, and the
fingerprint-projection embedder used as the structural anchor.
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import logging

import numpy as np

from molguide.toolkit import (
    DimensionMismatch,
    InsufficientData,
    InvalidParameters,
    NonConvergence,
    sha256_bytes,
)
from molguide.chem import morgan_fingerprint, DEFAULT_RADIUS, DEFAULT_WIDTH
from molguide.chem.fingerprint import Fingerprint, fingerprint_matrix

logger = logging.getLogger(__name__)

POWER_TOL = 1e-8
POWER_MAX_ITER = 10000
START_SEED = 20240601
ALIGN_SEED = 7919


def _as_bit_matrix(data):
    if len(data) and isinstance(data[0], Fingerprint):
        return fingerprint_matrix(data).astype(np.float64)
    return np.atleast_2d(np.asarray(data, dtype=np.float64))


def principal_directions(X, k, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    """Top-`k` principal directions of the rows of a centered matrix.

    Runs power iteration with deflation on the Gram matrix X Xᵀ, so the cost
    per iteration scales with the number of rows, and maps each converged
    vector back to feature space.

    Args:
       * **X** (array): (n, d) centered data
       * **k** (int): number of directions

    Keyword Args:
       * **tol** (float): convergence threshold on the change of the unit iterate.  Defaults to 1e-8.
       * **max_iter** (int): iteration cap per direction.  Defaults to 10000.

    Returns:
       tuple (components, singular_values) with components of shape (k, d), rows orthonormal
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    G = X @ X.T
    floor = 1e-12 * max(float(np.trace(G)), 1.0)
    rng = np.random.default_rng(START_SEED)
    found_u = []
    components = []
    singular = []
    for comp in range(k):
        u = rng.standard_normal(n)
        for w in found_u:
            u -= np.dot(w, u) * w
        u /= np.linalg.norm(u)
        converged = False
        for it in range(max_iter):
            nxt = G @ u
            for w in found_u:
                nxt -= np.dot(w, nxt) * w
            norm = np.linalg.norm(nxt)
            if norm <= floor:
                u = np.zeros(n)
                converged = True
                break
            nxt /= norm
            if np.linalg.norm(nxt - u) < tol:
                u = nxt
                converged = True
                break
            u = nxt
        if not converged:
            raise NonConvergence(
                "Warning! Power iteration for direction "
                + str(comp)
                + " did not reach tolerance "
                + str(tol)
                + " within "
                + str(max_iter)
                + " iterations."
            )
        found_u.append(u)
        v = X.T @ u
        sigma = float(np.linalg.norm(v))
        if sigma > 1e-10:
            v = v / sigma
        else:
            # data exhausted: any unit vector orthogonal to the previous ones
            sigma = 0.0
            v = None
            for j in range(d):
                e = np.zeros(d)
                e[j] = 1.0
                for c in components:
                    e -= np.dot(c, e) * c
                if np.linalg.norm(e) > 1e-6:
                    v = e / np.linalg.norm(e)
                    break
            if v is None:
                raise InsufficientData("Warning! More directions requested than dimensions.")
        components.append(v)
        singular.append(sigma)
        logger.debug("direction %d: singular value %.6g", comp, sigma)
    return np.array(components).reshape(k, d), np.array(singular)


class PCACodec:
    """Nearest-neighbour codec over a PCA projection of fingerprint bits.

    Args:
       * **mean** (array): (width,) mean bit vector of the corpus
       * **components** (array): (D, width) orthonormal principal directions
       * **encodings** (array): (n, D) encoded corpus
       * **labels** (list): corpus canonical strings, one per row of `encodings`

    Keyword Args:
       * **singular_values** (array): singular values of the directions.
       * **radius** (int): fingerprint radius used to encode molecules.  Defaults to 2.

    """

    kind = "pca"

    def __init__(self, mean, components, encodings, labels, singular_values=None, radius=DEFAULT_RADIUS):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.components = np.atleast_2d(np.asarray(components, dtype=np.float64))
        self.encodings = np.asarray(encodings, dtype=np.float64).reshape(-1, self.components.shape[0])
        self.labels = list(labels)
        self.singular_values = singular_values
        self.radius = radius

    @property
    def D(self):
        return self.components.shape[0]

    @property
    def width(self):
        return self.components.shape[1]

    def encode(self, x):
        """Encodes a Fingerprint, a list of them, or raw bit rows."""
        if isinstance(x, Fingerprint):
            return self.encode([x])[0]
        single = isinstance(x, np.ndarray) and x.ndim == 1
        bits = _as_bit_matrix(x)
        if bits.shape[1] != self.width:
            raise DimensionMismatch(
                "Warning! Codec expects " + str(self.width) + " bits, got " + str(bits.shape[1])
            )
        z = (bits - self.mean) @ self.components.T
        return z[0] if single else z

    def encode_molecule(self, mol):
        return self.encode(morgan_fingerprint(mol, self.radius, self.width))

    def decode(self, z):
        """Index of the nearest encoded corpus item (smallest index on ties)."""
        z = np.asarray(z, dtype=np.float64)
        single = z.ndim == 1
        Z = np.atleast_2d(z)
        if Z.shape[1] != self.D:
            raise DimensionMismatch("Warning! Latent dimension " + str(Z.shape[1]) + " != " + str(self.D))
        d2 = (
            np.sum(Z**2, axis=1)[:, None]
            - 2.0 * Z @ self.encodings.T
            + np.sum(self.encodings**2, axis=1)[None, :]
        )
        idx = np.argmin(d2, axis=1)
        return int(idx[0]) if single else idx

    def decode_label(self, z):
        idx = self.decode(z)
        if np.ndim(idx) == 0:
            return self.labels[idx]
        return [self.labels[i] for i in idx]

    def checksum(self):
        return sha256_bytes(self.components.tobytes() + self.mean.tobytes())


def fit_pca_codec(corpus, D, labels=None, radius=DEFAULT_RADIUS):
    """Fits a PCACodec on a list of fingerprints.

    Args:
       * **corpus** (list): Fingerprints (or an (n, width) 0/1 array)
       * **D** (int): latent dimension

    Keyword Args:
       * **labels** (list): one canonical string per corpus item.  Defaults to the item indices as strings.
       * **radius** (int): radius of the fingerprints.  Defaults to 2.

    Returns:
       PCACodec
    """
    if D < 1:
        raise InvalidParameters("Warning! Latent dimension must be at least 1.")
    X = _as_bit_matrix(corpus)
    n = X.shape[0]
    if n < D:
        raise InsufficientData(
            "Warning! Corpus of " + str(n) + " items cannot support " + str(D) + " directions."
        )
    mean = X.mean(axis=0)
    Xc = X - mean
    components, sv = principal_directions(Xc, D)
    encodings = Xc @ components.T
    if labels is None:
        labels = [str(i) for i in range(n)]
    logger.info("Fitted PCA codec: %d items, D=%d", n, D)
    return PCACodec(mean, components, encodings, labels, singular_values=sv, radius=radius)


class GaussianMixtureCodec:
    """Identity codec over a labeled Gaussian mixture of latent points.

    Args:
       * **centers** (array): (k, D) mixture centers
       * **spread** (float): isotropic standard deviation around each center

    """

    kind = "gaussian_mixture"

    def __init__(self, centers, spread):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        if self.centers.shape[0] < 1:
            raise InvalidParameters("Warning! A mixture needs at least one center.")
        if spread < 0:
            raise InvalidParameters("Warning! Mixture spread must be nonnegative.")
        self.spread = float(spread)

    @property
    def D(self):
        return self.centers.shape[1]

    def encode(self, x):
        return np.array(x, dtype=np.float64)

    def decode(self, z):
        return np.array(z, dtype=np.float64)

    def sample(self, n, rng, weights=None):
        """Draws `n` labeled points.

        Returns:
           tuple (points of shape (n, D), integer labels of shape (n,))
        """
        k = self.centers.shape[0]
        labels = rng.choice(k, size=n, p=weights)
        noise = rng.standard_normal((n, self.D))
        return self.centers[labels] + self.spread * noise, labels

    def checksum(self):
        return sha256_bytes(self.centers.tobytes() + np.float64(self.spread).tobytes())


def gaussian_mixture_codec(centers, spread):
    return GaussianMixtureCodec(centers, spread)


class AlignEmbedder:
    """Frozen random projection of fingerprints, standardized over a corpus.

    Keyword Args:
       * **dim** (int): embedding dimension A.  Defaults to 16.
       * **width** (int): fingerprint width.  Defaults to 2048.
       * **radius** (int): fingerprint radius.  Defaults to 2.
       * **seed** (int): seed of the projection matrix.  Defaults to a frozen constant.

    """

    def __init__(self, dim=16, width=DEFAULT_WIDTH, radius=DEFAULT_RADIUS, seed=ALIGN_SEED):
        self.dim = dim
        self.width = width
        self.radius = radius
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.matrix = rng.standard_normal((width, dim)) / np.sqrt(width)
        self.mean = np.zeros(dim)
        self.scale = np.ones(dim)

    def project(self, fps):
        return fingerprint_matrix(fps).astype(np.float64) @ self.matrix

    def fit(self, fps):
        """Sets the per-coordinate standardization from the training corpus."""
        P = self.project(fps)
        self.mean = P.mean(axis=0)
        std = P.std(axis=0)
        self.scale = np.where(std > 0, std, 1.0)
        return self

    def embed_fingerprints(self, fps):
        return (self.project(fps) - self.mean) / self.scale

    def embed(self, mol):
        fp = morgan_fingerprint(mol, self.radius, self.width)
        return self.embed_fingerprints([fp])[0]


_default_embedder = None


def default_embedder():
    """Shared unfitted AlignEmbedder: the frozen projection with no standardization."""
    global _default_embedder
    if _default_embedder is None:
        _default_embedder = AlignEmbedder()
    return _default_embedder


def align_embed(mol, embedder=None):
    """AlignEmbedding of a molecule.

    Args:
       * **mol** (Molecule): molecule to embed

    Keyword Args:
       * **embedder** (AlignEmbedder): fitted embedder.  Defaults to `default_embedder()`.

    Returns:
       numpy.ndarray of length `embedder.dim`
    """
    if embedder is None:
        embedder = default_embedder()
    return embedder.embed(mol)
