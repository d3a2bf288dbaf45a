"""Synthetic test images, noise injection, and the PSNR metric."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import as_scalar_field

SYNTH_KINDS = ("staircase", "ramp", "disk")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a generated image: kind, grid size, and band count."""

    kind: str
    height: int
    width: int
    levels: int = 4

    def __post_init__(self):
        if self.kind not in SYNTH_KINDS:
            raise ValueError(f"unknown synthetic kind {self.kind!r}, expected one of {SYNTH_KINDS}")
        if self.height < 1 or self.width < 1:
            raise ValueError(f"grid size must be positive, got {self.height}x{self.width}")
        if self.kind == "staircase" and self.levels < 2:
            raise ValueError("staircase needs at least 2 levels")


def synth(spec: SyntheticSpec) -> np.ndarray:
    """Generate the image described by spec, values in [0, 1].

    staircase: horizontal bands at `levels` equally spaced intensities;
    ramp: linear left-to-right gradient; disk: unit disk of radius
    min(H, W)/4 centred on the grid, on a zero background.
    """
    h, w = spec.height, spec.width
    if spec.kind == "staircase":
        band = (np.arange(h) * spec.levels) // h
        rows = band / (spec.levels - 1)
        return np.repeat(rows[:, None], w, axis=1)
    if spec.kind == "ramp":
        if w == 1:
            return np.zeros((h, w))
        cols = np.arange(w) / (w - 1)
        return np.repeat(cols[None, :], h, axis=0)
    # disk
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    radius = min(h, w) / 4.0
    yy, xx = np.mgrid[0:h, 0:w]
    dist = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
    return (dist <= radius).astype(np.float64)


def add_noise(u: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """Add i.i.d. Gaussian noise drawn from NumPy's PCG64 generator.

    The generator and draw order are fixed so a (seed, sigma, shape) triple
    reproduces the same field on any platform.  Values are not clamped; the
    model accepts unconstrained data.
    """
    u = as_scalar_field(u)
    if sigma < 0:
        raise ValueError("noise sigma must be nonnegative")
    if sigma == 0:
        return u.copy()
    rng = np.random.Generator(np.random.PCG64(seed))
    return u + sigma * rng.standard_normal(u.shape)


def psnr(u: np.ndarray, reference: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB against a clean reference."""
    u = as_scalar_field(u)
    reference = as_scalar_field(reference)
    mse = float(np.mean((u - reference) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)
