"""Shift- and translation-invariant network construction in the spectral domain.

Imposing invariance to cyclic shifts means working with the full shift
family of every multi-channel signal. The resulting expansion/compression
operators are (doubly) block circulant, so after a unitary DFT along the
signal axes they act frequency by frequency as small channel-space matrices.
Construction therefore only ever inverts C x C blocks, one per frequency.

Scaling convention: features are carried as unitary DFTs (Parseval holds, so
spherical normalization can be done in either domain), while the eigenvalues
of a circulant built from z are the UNSCALED DFT of z. The per-frequency
covariance of the shift family is therefore P * V(p) V(p)^H where P is the
number of frequencies; the factor is fixed by the explicit-circulant oracle
in the test suite.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagicError,
    DataError,
    NumericError,
    ShapeError,
    TruncatedFileError,
    VersionError,
)
from .rate import Membership

INV_MAGIC = b"RNS1"
INV_VERSION = 1

KIND_SHIFT1D = "shift1d"
KIND_TRANSLATE2D = "translate2d"
_KIND_CODES = {KIND_SHIFT1D: 1, KIND_TRANSLATE2D: 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}

UNIT_NORM_TOL = 1e-9


# ---------------------------------------------------------------------------
# DFT utilities and circulant structure


def dft_1d(x: np.ndarray) -> np.ndarray:
    """Unitary DFT along the last axis (1/sqrt(T) scaling)."""
    x = np.asarray(x)
    return np.fft.fft(x, axis=-1) / np.sqrt(x.shape[-1])


def idft_1d(v: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`dft_1d`."""
    v = np.asarray(v)
    return np.fft.ifft(v, axis=-1) * np.sqrt(v.shape[-1])


def dft_2d(x: np.ndarray) -> np.ndarray:
    """Unitary 2D DFT over the last two axes."""
    x = np.asarray(x)
    return np.fft.fft2(x, axes=(-2, -1)) / np.sqrt(x.shape[-2] * x.shape[-1])


def idft_2d(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    return np.fft.ifft2(v, axes=(-2, -1)) * np.sqrt(v.shape[-2] * v.shape[-1])


def circulant(z: np.ndarray) -> np.ndarray:
    """T x T matrix whose column t is z cyclically shifted down by t;
    multiplication by it performs circular convolution with z."""
    z = np.asarray(z, dtype=float).ravel()
    T = z.size
    idx = (np.arange(T)[:, None] - np.arange(T)[None, :]) % T
    return z[idx]


def circular_convolve_1d(z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """z conv x on the cyclic group of order T, via the FFT."""
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    return np.real(np.fft.ifft(np.fft.fft(z) * np.fft.fft(x, axis=-1), axis=-1))


def circular_convolve_2d(kernel: np.ndarray, image: np.ndarray) -> np.ndarray:
    """2D circular convolution over the last two axes of ``image``."""
    kernel = np.asarray(kernel, dtype=float)
    image = np.asarray(image, dtype=float)
    return np.real(
        np.fft.ifft2(np.fft.fft2(kernel) * np.fft.fft2(image, axes=(-2, -1)), axes=(-2, -1))
    )


def soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    """sign(v) * max(|v| - tau, 0), applied entrywise."""
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


# ---------------------------------------------------------------------------
# Random-filter lifting


def lift_random_filters_1d(
    X: np.ndarray, C: int, K: int, seed: int, tau: float = 0.0
) -> np.ndarray:
    """Lift samples to C channels by circular convolution with seeded
    standard-normal kernels of length K (zero-padded to T), followed by a
    soft threshold at ``tau``.

    ``X`` may be (m, T) single-channel or (m, C_in, T) multi-channel; in the
    latter case each output channel sums the responses over input channels.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[:, None, :]
    if X.ndim != 3:
        raise ShapeError("expected (m, T) or (m, C_in, T) input")
    m, c_in, T = X.shape
    if K > T:
        raise DataError(f"kernel length {K} exceeds signal length {T}")
    rng = np.random.default_rng(seed)
    kernels = np.zeros((C, c_in, T))
    kernels[:, :, :K] = rng.standard_normal((C, c_in, K))
    # (C, c_in, T) x (m, c_in, T) -> (m, C, T), summing over input channels
    kf = np.fft.fft(kernels, axis=-1)
    xf = np.fft.fft(X, axis=-1)
    out = np.real(np.fft.ifft(np.einsum("kct,mct->mkt", kf, xf), axis=-1))
    return soft_threshold(out, tau)


def lift_random_filters_2d(
    X: np.ndarray, C: int, K: int, seed: int, tau: float = 0.0
) -> np.ndarray:
    """2D analog of :func:`lift_random_filters_1d` for (m, H, W) images,
    with K x K kernels; returns (m, C, H, W)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 3:
        raise ShapeError("expected (m, H, W) input")
    m, H, W = X.shape
    if K > H or K > W:
        raise DataError(f"kernel size {K} exceeds image extent {H}x{W}")
    rng = np.random.default_rng(seed)
    kernels = np.zeros((C, H, W))
    kernels[:, :K, :K] = rng.standard_normal((C, K, K))
    kf = np.fft.fft2(kernels)
    xf = np.fft.fft2(X)
    out = np.real(np.fft.ifft2(kf[None, :, :, :] * xf[:, None, :, :]))
    return soft_threshold(out, tau)


# ---------------------------------------------------------------------------
# Spectral-domain model


@dataclass(frozen=True)
class SpectralLayer:
    """Per-frequency operators: E_hat is (P, C, C), C_hat is (k, P, C, C)."""

    E_hat: np.ndarray
    C_hat: np.ndarray
    gamma_j: np.ndarray


@dataclass(frozen=True)
class InvariantModel:
    kind: str
    layers: tuple[SpectralLayer, ...]
    eta: float
    lam: float
    eps: float
    channels: int
    dims: tuple[int, ...]  # (T,) or (H, W)
    k: int

    @property
    def depth(self) -> int:
        return len(self.layers)


def _hpd_inverse_stack(A: np.ndarray) -> np.ndarray:
    """Inverse of a stack of Hermitian positive definite matrices via
    Cholesky, failing loudly if definiteness is lost."""
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError("per-frequency operator argument is not positive definite") from exc
    Linv = np.linalg.inv(L)
    return np.einsum("...ba,...bc->...ac", Linv.conj(), Linv)


def _build_spectral_ops(
    V: np.ndarray, Pi: Membership, eps: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-frequency expansion and compression operators from spectral
    features V of shape (P, C, m)."""
    P, C, m = V.shape
    alpha = C / (m * eps**2)
    eye = np.eye(C)
    cov = np.einsum("pcm,pdm->pcd", V, V.conj())
    E_hat = alpha * _hpd_inverse_stack(eye + (alpha * P) * cov)
    sizes = Pi.class_sizes
    C_hat = np.empty((Pi.k, P, C, C), dtype=complex)
    for j in range(Pi.k):
        if sizes[j] <= 0:
            raise DataError(f"class {j} has zero total membership")
        aj = C / (sizes[j] * eps**2)
        cov_j = np.einsum("pcm,m,pdm->pcd", V, Pi.weights[j], V.conj())
        C_hat[j] = aj * _hpd_inverse_stack(eye + (aj * P) * cov_j)
    return E_hat, C_hat, Pi.class_sizes / m


def spectral_rate_reduction(
    V: np.ndarray, Pi: Membership, eps: float
) -> tuple[float, float, float]:
    """Shift-invariant rate reduction evaluated from spectral features
    (P, C, m): the rates of the full shift family, divided by the number of
    copies it contains."""
    P, C, m = V.shape
    alpha = C / (m * eps**2)
    eye = np.eye(C)

    def stack_logdet(A: np.ndarray) -> float:
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError as exc:
            raise NumericError("rate argument is not positive definite") from exc
        return 2.0 * float(np.sum(np.log(np.real(np.diagonal(L, axis1=-2, axis2=-1)))))

    cov = np.einsum("pcm,pdm->pcd", V, V.conj())
    R = stack_logdet(eye + (alpha * P) * cov) / (2 * P)
    Rc = 0.0
    sizes = Pi.class_sizes
    for j in range(Pi.k):
        if sizes[j] <= 0:
            continue
        aj = C / (sizes[j] * eps**2)
        cov_j = np.einsum("pcm,m,pdm->pcd", V, Pi.weights[j], V.conj())
        Rc += (sizes[j] / m) * stack_logdet(eye + (aj * P) * cov_j) / (2 * P)
    return R, Rc, R - Rc


def _softmin(scaled_scores: np.ndarray) -> np.ndarray:
    shifted = scaled_scores - scaled_scores.min(axis=0)
    w = np.exp(-shifted)
    return w / w.sum(axis=0)


def _spectral_increment(V: np.ndarray, layer: SpectralLayer, lam: float) -> np.ndarray:
    """Update direction in the spectral domain with estimated memberships,
    aggregating projection energy over all frequencies for the softmin."""
    CV = np.einsum("jpab,pbm->jpam", layer.C_hat, V)
    scores = np.sqrt(np.sum(np.abs(CV) ** 2, axis=(1, 2)))  # (k, m)
    pi_hat = _softmin(lam * scores)
    EV = np.einsum("pab,pbm->pam", layer.E_hat, V)
    return EV - np.einsum("j,jm,jpam->pam", layer.gamma_j, pi_hat, CV)


def _normalize_samples(V: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.sum(np.abs(V) ** 2, axis=(0, 1)))
    if np.any(norms == 0):
        raise NumericError("a sample collapsed to zero during the update")
    return V / norms


def _run_construction(
    V: np.ndarray, Pi: Membership, L: int, eta: float, eps: float, lam: float
) -> tuple[list[SpectralLayer], np.ndarray, list[tuple[float, float, float]]]:
    layers: list[SpectralLayer] = []
    curve: list[tuple[float, float, float]] = []
    for _ in range(L):
        E_hat, C_hat, gamma = _build_spectral_ops(V, Pi, eps)
        layer = SpectralLayer(E_hat=E_hat, C_hat=C_hat, gamma_j=gamma)
        curve.append(spectral_rate_reduction(V, Pi, eps))
        layers.append(layer)
        V = _normalize_samples(V + eta * _spectral_increment(V, layer, lam))
    return layers, V, curve


def _to_spectral_1d(Zbar: np.ndarray) -> np.ndarray:
    """(m, C, T) real -> (T, C, m) complex unitary spectra."""
    V = dft_1d(Zbar)  # (m, C, T)
    return np.ascontiguousarray(np.transpose(V, (2, 1, 0)))


def _from_spectral_1d(V: np.ndarray) -> np.ndarray:
    Z = idft_1d(np.transpose(V, (2, 1, 0)))
    return np.real(Z)


def _to_spectral_2d(Zbar: np.ndarray) -> np.ndarray:
    """(m, C, H, W) real -> (H*W, C, m) complex unitary spectra."""
    m, C, H, W = Zbar.shape
    V = dft_2d(Zbar).reshape(m, C, H * W)
    return np.ascontiguousarray(np.transpose(V, (2, 1, 0)))


def _from_spectral_2d(V: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    H, W = dims
    P, C, m = V.shape
    Z = np.transpose(V, (2, 1, 0)).reshape(m, C, H, W)
    return np.real(idft_2d(Z))


def _check_unit_samples(Zbar: np.ndarray) -> None:
    norms = np.sqrt(np.sum(Zbar**2, axis=tuple(range(1, Zbar.ndim))))
    if np.max(np.abs(norms - 1.0)) > UNIT_NORM_TOL:
        raise DataError("each sample must have unit Frobenius norm")


def normalize_samples_time(Zbar: np.ndarray) -> np.ndarray:
    """Scale every sample (first axis) to unit Frobenius norm."""
    Zbar = np.asarray(Zbar, dtype=float)
    norms = np.sqrt(np.sum(Zbar**2, axis=tuple(range(1, Zbar.ndim)), keepdims=True))
    if np.any(norms == 0):
        raise NumericError("cannot normalize a zero sample")
    return Zbar / norms


def construct_inv1d(
    Zbar: np.ndarray, Pi: Membership, L: int, eta: float, eps: float, lam: float = 500.0
) -> tuple[InvariantModel, np.ndarray, list[tuple[float, float, float]]]:
    """Build the shift-invariant network from (m, C, T) unit-norm samples.

    All work happens on the per-frequency spectra; the returned features are
    transformed back to the time domain.
    """
    Zbar = np.asarray(Zbar, dtype=float)
    if Zbar.ndim != 3:
        raise ShapeError("expected (m, C, T) input")
    if L < 1:
        raise DataError("at least one layer is required")
    _check_unit_samples(Zbar)
    m, C, T = Zbar.shape
    layers, V, curve = _run_construction(_to_spectral_1d(Zbar), Pi, L, eta, eps, lam)
    model = InvariantModel(
        kind=KIND_SHIFT1D,
        layers=tuple(layers),
        eta=eta,
        lam=lam,
        eps=eps,
        channels=C,
        dims=(T,),
        k=Pi.k,
    )
    return model, _from_spectral_1d(V), curve


def construct_inv2d(
    Zbar: np.ndarray, Pi: Membership, L: int, eta: float, eps: float, lam: float = 500.0
) -> tuple[InvariantModel, np.ndarray, list[tuple[float, float, float]]]:
    """2D analog of :func:`construct_inv1d` for (m, C, H, W) samples."""
    Zbar = np.asarray(Zbar, dtype=float)
    if Zbar.ndim != 4:
        raise ShapeError("expected (m, C, H, W) input")
    if L < 1:
        raise DataError("at least one layer is required")
    _check_unit_samples(Zbar)
    m, C, H, W = Zbar.shape
    layers, V, curve = _run_construction(_to_spectral_2d(Zbar), Pi, L, eta, eps, lam)
    model = InvariantModel(
        kind=KIND_TRANSLATE2D,
        layers=tuple(layers),
        eta=eta,
        lam=lam,
        eps=eps,
        channels=C,
        dims=(H, W),
        k=Pi.k,
    )
    return model, _from_spectral_2d(V, (H, W)), curve


def _forward_spectral(model: InvariantModel, V: np.ndarray) -> np.ndarray:
    for layer in model.layers:
        V = _normalize_samples(V + model.eta * _spectral_increment(V, layer, model.lam))
    return V


def forward_inv1d(model: InvariantModel, Zbar: np.ndarray) -> np.ndarray:
    """Evaluate the stored layers on new (m, C, T) samples; commutes exactly
    with cyclic shifts of the input."""
    Zbar = np.asarray(Zbar, dtype=float)
    if model.kind != KIND_SHIFT1D:
        raise ShapeError("model was built for 2D translation invariance")
    if Zbar.ndim != 3 or Zbar.shape[1] != model.channels or Zbar.shape[2] != model.dims[0]:
        raise ShapeError(
            f"expected (m, {model.channels}, {model.dims[0]}) input, got {Zbar.shape}"
        )
    V = _forward_spectral(model, _to_spectral_1d(Zbar))
    return _from_spectral_1d(V)


def forward_inv2d(model: InvariantModel, Zbar: np.ndarray) -> np.ndarray:
    Zbar = np.asarray(Zbar, dtype=float)
    if model.kind != KIND_TRANSLATE2D:
        raise ShapeError("model was built for 1D shift invariance")
    if Zbar.ndim != 4 or Zbar.shape[1:] != (model.channels, *model.dims):
        raise ShapeError(
            f"expected (m, {model.channels}, {model.dims[0]}, {model.dims[1]}) input, "
            f"got {Zbar.shape}"
        )
    V = _forward_spectral(model, _to_spectral_2d(Zbar))
    return _from_spectral_2d(V, model.dims)  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# RNS1 container


def save_invariant_model(path, model: InvariantModel) -> None:
    """RNS1 container; complex entries stored as interleaved re/im float64."""
    with open(path, "wb") as fh:
        fh.write(INV_MAGIC)
        fh.write(struct.pack("<I", INV_VERSION))
        fh.write(struct.pack("<B", _KIND_CODES[model.kind]))
        fh.write(struct.pack("<I", model.channels))
        fh.write(struct.pack(f"<{len(model.dims)}I", *model.dims))
        fh.write(struct.pack("<II", model.k, model.depth))
        fh.write(struct.pack("<ddd", model.eta, model.lam, model.eps))
        fh.write(np.ascontiguousarray(model.layers[0].gamma_j, dtype="<f8").tobytes())
        for layer in model.layers:
            fh.write(np.ascontiguousarray(layer.E_hat, dtype="<c16").tobytes())
            fh.write(np.ascontiguousarray(layer.C_hat, dtype="<c16").tobytes())


def load_invariant_model(path) -> InvariantModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != INV_MAGIC:
        raise BadMagicError(f"{path}: expected magic {INV_MAGIC!r}")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != INV_VERSION:
        raise VersionError(f"{path}: unsupported model version {version}")
    (kind_code,) = struct.unpack_from("<B", blob, 8)
    if kind_code not in _KIND_NAMES:
        raise BadMagicError(f"{path}: unknown model kind {kind_code}")
    kind = _KIND_NAMES[kind_code]
    ndims = 1 if kind == KIND_SHIFT1D else 2
    offset = 9
    (channels,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    dims = struct.unpack_from(f"<{ndims}I", blob, offset)
    offset += 4 * ndims
    k, L = struct.unpack_from("<II", blob, offset)
    offset += 8
    eta, lam, eps = struct.unpack_from("<ddd", blob, offset)
    offset += 24
    P = int(np.prod(dims))
    per_layer = (1 + k) * P * channels * channels * 16
    expected = offset + 8 * k + L * per_layer
    if len(blob) < expected:
        raise TruncatedFileError(
            f"{path}: file has {len(blob)} bytes, format requires {expected}"
        )
    gamma = np.frombuffer(blob, dtype="<f8", count=k, offset=offset).copy()
    offset += 8 * k
    layers = []
    for _ in range(L):
        E_hat = np.frombuffer(
            blob, dtype="<c16", count=P * channels * channels, offset=offset
        ).reshape(P, channels, channels).copy()
        offset += P * channels * channels * 16
        C_hat = np.frombuffer(
            blob, dtype="<c16", count=k * P * channels * channels, offset=offset
        ).reshape(k, P, channels, channels).copy()
        offset += k * P * channels * channels * 16
        layers.append(SpectralLayer(E_hat=E_hat, C_hat=C_hat, gamma_j=gamma))
    return InvariantModel(
        kind=kind,
        layers=tuple(layers),
        eta=eta,
        lam=lam,
        eps=eps,
        channels=channels,
        dims=tuple(int(d) for d in dims),
        k=k,
    )
