"""Reference construction that materializes the full shift families.

This is the slow oracle the spectral implementation must agree with: every
sample is expanded into the explicit (doubly) block-circulant matrix of all
its cyclic shifts, the dense expansion/compression operators are formed by
direct matrix inversion, and the update runs column by column. Class scores
use the per-copy norm (family Frobenius norm divided by sqrt of the family
size) so the softmin temperature means the same thing in both routes.
"""

import numpy as np

from redunet import Membership, RateParams, compression_operator, expansion_operator
from redunet.datagen import translate2d
from redunet.spectral import circulant


def family_1d(z):
    """(C, T) sample -> (C*T, T) matrix of all cyclic shifts, stacked by channel."""
    return np.vstack([circulant(zc) for zc in z])


def family_2d(z):
    """(C, H, W) sample -> (C*H*W, H*W) matrix of all cyclic translations."""
    C, H, W = z.shape
    cols = [
        np.concatenate([translate2d(zc, p, q).ravel() for zc in z])
        for p in range(H)
        for q in range(W)
    ]
    return np.stack(cols, axis=1)


def _softmin(scaled):
    w = np.exp(-(scaled - scaled.min(axis=0)))
    return w / w.sum(axis=0)


def reference_construct(Z, labels, L, eta, eps, lam, family):
    """Run L update steps on the materialized families; returns the list of
    per-layer feature tensors (the unshifted copy of every sample)."""
    Z = np.asarray(Z, dtype=float)
    m = Z.shape[0]
    sample_shape = Z.shape[1:]
    fams = [family(z) for z in Z]
    T = fams[0].shape[1]  # copies per sample
    A = np.hstack(fams)
    k = int(np.max(labels)) + 1
    Pi_big = Membership.from_labels(np.repeat(labels, T), k=k)
    n = A.shape[0]

    outputs = []
    for _ in range(L):
        params = RateParams.compute(n, Pi_big, eps)
        E = expansion_operator(A, params)
        Cs = [compression_operator(A, Pi_big, j, params) for j in range(k)]
        CA = np.stack([Cj @ A for Cj in Cs])  # (k, n, T*m)
        scores = np.empty((k, m))
        for i in range(m):
            block = CA[:, :, i * T : (i + 1) * T]
            scores[:, i] = np.linalg.norm(block, axis=(1, 2)) / np.sqrt(T)
        pi_cols = np.repeat(_softmin(lam * scores), T, axis=1)  # (k, T*m)
        inc = E @ A - np.einsum("j,jm,jnm->nm", params.gamma_j, pi_cols, CA)
        A = A + eta * inc
        A = A / np.linalg.norm(A, axis=0)
        outputs.append(
            np.stack([A[:, i * T].reshape(sample_shape) for i in range(m)])
        )
    return outputs
