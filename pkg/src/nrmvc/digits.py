"""Three-view handwritten-digits dataset built from scikit-learn's bundled
8x8 digit images (1797 samples, 10 classes).

The views follow the classic multi-feature digit setup: raw pixels, 2-D
Fourier magnitudes, and a Karhunen-Loeve (PCA) projection. All transforms
are deterministic, so repeated builds are bit-identical.
"""

from __future__ import annotations

import numpy as np

from .data import MultiViewDataset


def build_digits_dataset(num_fourier: int = 36, num_components: int = 40) -> MultiViewDataset:
    try:
        from sklearn.datasets import load_digits
    except ImportError as exc:  # pragma: no cover
        raise ImportError(
            "building the digits dataset requires scikit-learn "
            "(pip install scikit-learn)"
        ) from exc

    digits = load_digits()
    pixels = digits.data.astype(np.float64)  # (N, 64)
    labels = digits.target.astype(np.int64)
    n = pixels.shape[0]

    images = pixels.reshape(n, 8, 8)
    spectrum = np.abs(np.fft.fft2(images)).reshape(n, 64)
    fourier = spectrum[:, :num_fourier]

    centered = pixels - pixels.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    # fix the sign convention so the projection is reproducible
    signs = np.sign(vt[np.arange(vt.shape[0]), np.argmax(np.abs(vt), axis=1)])
    vt = vt * signs[:, None]
    karhunen = centered @ vt[:num_components].T

    return MultiViewDataset(
        views=[pixels, fourier, karhunen],
        labels=labels,
        num_clusters=10,
        name="digits3v",
    )
