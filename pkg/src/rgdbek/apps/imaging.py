"""Gaussian-Toeplitz deblurring, image metrics and plain-text PNM I/O."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..solvers import SolveConfig, rgdbek
from ..sparse import SparseMatrix, spmv


@dataclass(frozen=True)
class PsfSpec:
    sigma: float
    half_width: int
    size: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.half_width < 0 or self.size < 1:
            raise ValueError("half_width must be >= 0 and size >= 1")
        if not self.half_width < self.size:
            raise ValueError(f"half_width ({self.half_width}) must be < size ({self.size})")


def build_gaussian_toeplitz(spec: PsfSpec) -> SparseMatrix:
    """Banded symmetric Toeplitz blur ``A_ij = exp(-(i-j)^2 / 2s^2) / (s sqrt(2 pi))``, ``|i-j| <= r``."""
    N, r, s = spec.size, spec.half_width, spec.sigma
    offs = np.arange(-r, r + 1)
    kernel = np.exp(-(offs.astype(np.float64) ** 2) / (2 * s * s)) / (s * np.sqrt(2 * np.pi))
    rows = np.repeat(np.arange(N), offs.size)
    cols = rows + np.tile(offs, N)
    vals = np.tile(kernel, N)
    keep = (cols >= 0) & (cols < N)
    return SparseMatrix.from_coo(rows[keep], cols[keep], vals[keep], (N, N))


def _as_hwc(image):
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3:
        raise ValueError(f"expected an HxW or HxWxC image, got shape {img.shape}")
    return img


def blur_image(image, spec: PsfSpec) -> np.ndarray:
    """Apply the Toeplitz blur to each row-major vectorized channel."""
    img = _as_hwc(image)
    H, W, C = img.shape
    if spec.size != H * W:
        raise ValueError(f"PSF size {spec.size} != H*W = {H * W}")
    A = build_gaussian_toeplitz(spec)
    out = np.stack([spmv(A, img[:, :, c].ravel()).reshape(H, W) for c in range(C)], axis=2)
    return out if np.ndim(image) == 3 else out[:, :, 0]


def deblur_image(image, spec: PsfSpec, cfg: SolveConfig = SolveConfig()):
    """Blur ``image`` and recover it channel by channel with RGDBEK.

    Returns
    -------
    restored : ndarray, same shape as ``image``
    traces : list of SolveTrace, one per channel
    """
    img = _as_hwc(image)
    H, W, C = img.shape
    if spec.size != H * W:
        raise ValueError(f"PSF size {spec.size} != H*W = {H * W}")
    A = build_gaussian_toeplitz(spec)
    restored = np.empty_like(img)
    traces = []
    for c in range(C):
        b = spmv(A, img[:, :, c].ravel())
        res = rgdbek(A, b, cfg)
        restored[:, :, c] = res.x.reshape(H, W)
        traces.append(res.trace)
    return (restored if np.ndim(image) == 3 else restored[:, :, 0]), traces


def synthetic_image(size: int = 16, channels: int = 3) -> np.ndarray:
    """Smooth test image in [0, 1]: one low-frequency profile per channel.

    The blur acts on the vectorized image, whose high-frequency content sits
    in the near-null space of the Toeplitz operator, so only slowly varying
    vectorized signals can be restored to high fidelity.
    """
    t = np.linspace(0.0, 1.0, size * size)
    profiles = [
        np.full_like(t, 0.6),
        0.25 + 0.5 * t,
        0.5 + 0.3 * np.cos(np.pi * t),
    ]
    chans = [profiles[c % len(profiles)].reshape(size, size) for c in range(channels)]
    return np.stack(chans, axis=2)


def psnr(x, y) -> float:
    """Peak signal-to-noise ratio in dB for peak value 1; ``inf`` for identical images."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(1.0 / mse)


SSIM_WINDOW = 8
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def ssim(x, y, window: int = SSIM_WINDOW) -> float:
    """Mean SSIM over all ``window x window`` patches (stride 1), averaged across channels."""
    x, y = _as_hwc(x), _as_hwc(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    if min(x.shape[:2]) < window:
        raise ValueError(f"image smaller than the {window}x{window} window")
    vals = []
    for c in range(x.shape[2]):
        px = sliding_window_view(x[:, :, c], (window, window)).reshape(-1, window * window)
        py = sliding_window_view(y[:, :, c], (window, window)).reshape(-1, window * window)
        mx, my = px.mean(1), py.mean(1)
        vx = ((px - mx[:, None]) ** 2).mean(1)
        vy = ((py - my[:, None]) ** 2).mean(1)
        cxy = ((px - mx[:, None]) * (py - my[:, None])).mean(1)
        num = (2 * mx * my + SSIM_C1) * (2 * cxy + SSIM_C2)
        den = (mx ** 2 + my ** 2 + SSIM_C1) * (vx + vy + SSIM_C2)
        vals.append(num / den)
    return float(np.mean(vals))


# -- P2 / P3 text images --------------------------------------------------

def read_pnm(path) -> np.ndarray:
    """Read a P2 (gray, HxW) or P3 (RGB, HxWx3) file scaled to [0, 1]."""
    with open(path, "r") as fh:
        toks = []
        for ln in fh:
            toks.extend(ln.split("#", 1)[0].split())
    if not toks or toks[0] not in ("P2", "P3"):
        raise ValueError("not a plain-text P2/P3 file")
    try:
        w, h, maxval = int(toks[1]), int(toks[2]), int(toks[3])
        data = np.array([int(t) for t in toks[4:]], dtype=np.float64)
    except (IndexError, ValueError):
        raise ValueError("malformed PNM header or pixel data") from None
    ch = 1 if toks[0] == "P2" else 3
    if maxval <= 0 or data.size != w * h * ch:
        raise ValueError(f"expected {w * h * ch} samples with maxval > 0, got {data.size}")
    img = data / maxval
    return img.reshape(h, w) if ch == 1 else img.reshape(h, w, 3)


def write_pnm(path, image, maxval: int = 255) -> None:
    """Write a [0, 1] image as P2 (2-D) or P3 (3 channels); values are clipped."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.ndim == 2:
        magic = "P2"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = "P3"
    else:
        raise ValueError(f"cannot write image of shape {img.shape}")
    q = np.rint(np.clip(img, 0.0, 1.0) * maxval).astype(np.int64)
    h, w = img.shape[:2]
    with open(path, "w") as fh:
        fh.write(f"{magic}\n{w} {h}\n{maxval}\n")
        for row in q.reshape(h, -1):
            fh.write(" ".join(map(str, row)) + "\n")
