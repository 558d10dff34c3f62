"""FastICA and frontal blink-component removal.

Symmetric fixed-point FastICA with a tanh contrast: whiten via
eigendecomposition, update all rows at once, re-orthonormalize, and stop
when every row's direction is stable. Deterministic given the seed. The
blink component is the one whose activation tracks the Fp1/Fp2 mean;
with no EOG channel in the montage that frontal proxy is standard.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from gemmind.errors import AnalysisError
from gemmind.rng import substream_seed
from gemmind.synth.generator import MultichannelRecording

logger = logging.getLogger(__name__)

MIN_DURATION_S = 60.0
FRONTAL_CHANNELS = ("Fp1", "Fp2", "F7", "F8", "F3", "F4", "Fz")


@dataclass
class FastIcaResult:
    sources: np.ndarray        # components x samples
    unmixing: np.ndarray       # components x channels (applies to centered data)
    mixing: np.ndarray         # channels x components
    mean: np.ndarray           # per-channel mean removed before fitting
    converged: bool
    iterations: int


def _sym_orth(w: np.ndarray) -> np.ndarray:
    # (W W^T)^(-1/2) W via eigendecomposition of the (small) Gram matrix.
    vals, vecs = np.linalg.eigh(w @ w.T)
    vals = np.maximum(vals, 1e-12)
    return (vecs * (1.0 / np.sqrt(vals))) @ vecs.T @ w


def fast_ica(data: np.ndarray, seed: int = 0, tol: float = 1e-6,
             max_iter: int = 500) -> FastIcaResult:
    """Decompose ``data`` (samples x channels) into independent components."""
    x = np.asarray(data, dtype=np.float64).T  # channels x samples
    n_channels, n_samples = x.shape
    mean = x.mean(axis=1, keepdims=True)
    x = x - mean

    cov = (x @ x.T) / n_samples
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals = np.maximum(eigvals, 1e-12)
    whiten = (eigvecs * (1.0 / np.sqrt(eigvals))) @ eigvecs.T
    color = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    z = whiten @ x

    rng = np.random.Generator(np.random.Philox(key=substream_seed(seed, "fastica")))
    w = _sym_orth(rng.standard_normal((n_channels, n_channels)))

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        y = w @ z
        g = np.tanh(y)
        g_prime = (1.0 - g ** 2).mean(axis=1)
        w_new = _sym_orth((g @ z.T) / n_samples - g_prime[:, None] * w)
        drift = np.max(np.abs(np.abs(np.sum(w_new * w, axis=1)) - 1.0))
        w = w_new
        if drift < tol:
            converged = True
            break
    if not converged:
        logger.warning("FastICA did not converge in %d iterations", max_iter)

    sources = w @ z
    unmixing = w @ whiten
    mixing = color @ w.T
    return FastIcaResult(sources=sources, unmixing=unmixing, mixing=mixing,
                         mean=mean[:, 0], converged=converged, iterations=iterations)


def _frontal_reference(recording: MultichannelRecording) -> np.ndarray:
    fp1 = recording.channel("Fp1")
    fp2 = recording.channel("Fp2")
    return (fp1 + fp2) / 2.0


def _kurtosis(x: np.ndarray) -> np.ndarray:
    centered = x - x.mean(axis=1, keepdims=True)
    m2 = (centered ** 2).mean(axis=1)
    m4 = (centered ** 4).mean(axis=1)
    return m4 / np.maximum(m2 ** 2, 1e-24) - 3.0


def remove_blink_component(recording: MultichannelRecording,
                           seed: int = 0) -> tuple[MultichannelRecording, int]:
    """Zero the blink component and back-project.

    On convergence the component is selected by |correlation| with the
    frontal mean; otherwise it falls back to the highest-kurtosis
    frontal-dominant component, with a logged warning.
    """
    if recording.duration < MIN_DURATION_S:
        raise AnalysisError(
            f"need >= {MIN_DURATION_S:.0f} s for stable ICA, got {recording.duration:.1f} s")
    result = fast_ica(recording.data, seed=seed)

    if result.converged:
        reference = _frontal_reference(recording)
        reference = reference - reference.mean()
        src = result.sources - result.sources.mean(axis=1, keepdims=True)
        norms = np.linalg.norm(src, axis=1) * np.linalg.norm(reference)
        corr = (src @ reference) / np.maximum(norms, 1e-24)
        blink_idx = int(np.argmax(np.abs(corr)))
    else:
        kurt = _kurtosis(result.sources)
        dominant = np.argmax(np.abs(result.mixing), axis=0)
        frontal_idx = [recording.channel_labels.index(ch)
                       for ch in FRONTAL_CHANNELS if ch in recording.channel_labels]
        candidates = [i for i in range(len(kurt)) if dominant[i] in frontal_idx]
        if not candidates:
            candidates = list(range(len(kurt)))
        blink_idx = int(max(candidates, key=lambda i: kurt[i]))
        logger.warning("FastICA fell back to max-kurtosis frontal component %d", blink_idx)

    sources = result.sources.copy()
    sources[blink_idx] = 0.0
    cleaned = (result.mixing @ sources) + result.mean[:, None]
    return recording.copy_with(cleaned.T), blink_idx
