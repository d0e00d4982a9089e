"""Frequency-domain steerable pyramid decomposition.

A scalar plane is split into ``scales`` x ``orientations`` oriented
band-pass sub-bands plus a high-pass and a low-pass residual.  The
construction uses raised-cosine radial masks and cos^(K-1) angular masks
evaluated directly on the FFT grid, which makes the transform an exact
tight frame: ``reconstruct(decompose(x))`` recovers ``x`` to floating
point precision (circular boundary handling).

Band ordering is scale-major, orientation-minor, finest scale first:
``bands[s * orientations + k]`` is orientation ``k`` at scale ``s``, with
plane dimensions halving per scale.  Oriented bands are zero-mean by
construction (no DC response).  Input planes are cropped (bottom/right)
to multiples of ``2**scales`` so every level has even dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractError

_MIN_COARSE_DIM = 8  # coarsest level must keep at least this many samples


@dataclass(frozen=True)
class PyramidConfig:
    scales: int = 2
    orientations: int = 3

    def __post_init__(self):
        if self.scales < 1 or self.orientations < 1:
            raise ConfigurationError(
                f"scales and orientations must be >= 1, got {self.scales}, {self.orientations}")

    @property
    def num_bands(self) -> int:
        return self.scales * self.orientations


@dataclass(frozen=True)
class SubbandSet:
    """Oriented band-pass planes plus the two residuals."""

    cfg: PyramidConfig
    bands: tuple  # num_bands real matrices, scale-major order
    residual_high: np.ndarray
    residual_low: np.ndarray

    def band(self, scale: int, orientation: int) -> np.ndarray:
        return self.bands[scale * self.cfg.orientations + orientation]


def _crop_even(plane: np.ndarray, factor: int) -> np.ndarray:
    h = plane.shape[0] - plane.shape[0] % factor
    w = plane.shape[1] - plane.shape[1] % factor
    return plane[:h, :w]


def _polar_grid(h: int, w: int):
    cy = math.ceil((h + 0.5) / 2) - 1
    cx = math.ceil((w + 0.5) / 2) - 1
    yv = ((np.arange(h) - cy) * (2.0 / h))[:, None]
    xv = ((np.arange(w) - cx) * (2.0 / w))[None, :]
    rad = np.hypot(yv, xv)
    rad[cy, cx] = rad[cy, cx - 1]  # patch DC so log2 stays finite
    return np.log2(rad), np.arctan2(yv, xv)


def _hi_mask(log_rad: np.ndarray, edge: float) -> np.ndarray:
    # raised cosine: 0 below edge-1, 1 above edge (in log2 radius)
    return np.cos(0.5 * np.pi * np.clip(log_rad - edge, -1.0, 0.0))


def _lo_mask(log_rad: np.ndarray, edge: float) -> np.ndarray:
    hi = _hi_mask(log_rad, edge)
    return np.sqrt(np.clip(1.0 - hi * hi, 0.0, None))


def _angle_masks(angle: np.ndarray, orientations: int) -> list[np.ndarray]:
    order = orientations - 1
    const = (2.0 ** (2 * order)) * math.factorial(order) ** 2 / (
        orientations * math.factorial(2 * order))
    alpha = math.sqrt(const)
    return [alpha * np.cos(angle - np.pi * k / orientations) ** order
            for k in range(orientations)]


def _crop_slices(dims):
    dims = np.asarray(dims)
    start = np.ceil((dims + 0.5) / 2) - np.ceil((np.ceil((dims - 0.5) / 2) + 0.5) / 2)
    end = start + np.ceil((dims - 0.5) / 2)
    start = start.astype(int)
    end = end.astype(int)
    return slice(start[0], end[0]), slice(start[1], end[1])


def _level_grids(shape, cfg: PyramidConfig):
    """Per-level (log_rad, angle) grids after successive spectrum crops."""
    log_rad, angle = _polar_grid(*shape)
    grids = [(log_rad, angle)]
    for _ in range(cfg.scales):
        sy, sx = _crop_slices(log_rad.shape)
        log_rad = log_rad[sy, sx]
        angle = angle[sy, sx]
        grids.append((log_rad, angle))
    return grids


def _prepare(plane: np.ndarray, cfg: PyramidConfig) -> np.ndarray:
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ContractError(f"expected a 2-D plane, got shape {plane.shape}")
    plane = _crop_even(plane, 2 ** cfg.scales)
    if min(plane.shape) < _MIN_COARSE_DIM * 2 ** cfg.scales:
        raise ConfigurationError(
            f"plane {plane.shape} too small for {cfg.scales} scales "
            f"(needs >= {_MIN_COARSE_DIM * 2 ** cfg.scales} on each side)")
    return plane


def decompose(plane: np.ndarray, cfg: PyramidConfig = PyramidConfig()) -> SubbandSet:
    """Steerable pyramid decomposition of one scalar plane."""
    plane = _prepare(plane, cfg)
    grids = _level_grids(plane.shape, cfg)
    order = cfg.orientations - 1
    rot = (-1j) ** order

    dft = np.fft.fftshift(np.fft.fft2(plane))
    log_rad, angle = grids[0]
    residual_high = np.fft.ifft2(np.fft.ifftshift(dft * _hi_mask(log_rad, 0.0))).real
    lodft = dft * _lo_mask(log_rad, 0.0)

    bands = []
    for s in range(cfg.scales):
        log_rad, angle = grids[s]
        edge = -(s + 1.0)
        himask = _hi_mask(log_rad, edge)
        for amask in _angle_masks(angle, cfg.orientations):
            banddft = rot * lodft * amask * himask
            bands.append(np.fft.ifft2(np.fft.ifftshift(banddft)).real)
        sy, sx = _crop_slices(lodft.shape)
        lodft = lodft[sy, sx] * _lo_mask(grids[s + 1][0], edge)
    residual_low = np.fft.ifft2(np.fft.ifftshift(lodft)).real
    return SubbandSet(cfg, tuple(bands), residual_high, residual_low)


def reconstruct(subbands: SubbandSet, cfg: PyramidConfig | None = None) -> np.ndarray:
    """Invert :func:`decompose` (tight-frame adjoint)."""
    cfg = cfg or subbands.cfg
    if cfg != subbands.cfg:
        raise ContractError(f"config mismatch: {cfg} vs {subbands.cfg}")
    if len(subbands.bands) != cfg.num_bands:
        raise ContractError(
            f"expected {cfg.num_bands} bands, got {len(subbands.bands)}")
    shape = subbands.residual_high.shape
    grids = _level_grids(shape, cfg)
    order = cfg.orientations - 1
    rot = 1j ** order

    lodft = np.fft.fftshift(np.fft.fft2(subbands.residual_low))
    for s in reversed(range(cfg.scales)):
        log_rad, angle = grids[s]
        if subbands.bands[s * cfg.orientations].shape != log_rad.shape:
            raise ContractError(
                f"band shape {subbands.bands[s * cfg.orientations].shape} does not "
                f"match level {s} grid {log_rad.shape}")
        edge = -(s + 1.0)
        up = np.zeros(log_rad.shape, dtype=complex)
        sy, sx = _crop_slices(log_rad.shape)
        up[sy, sx] = lodft * _lo_mask(grids[s + 1][0], edge)
        himask = _hi_mask(log_rad, edge)
        for k, amask in enumerate(_angle_masks(angle, cfg.orientations)):
            banddft = np.fft.fftshift(np.fft.fft2(subbands.bands[s * cfg.orientations + k]))
            up += rot * banddft * amask * himask
        lodft = up
    log_rad, _ = grids[0]
    out = lodft * _lo_mask(log_rad, 0.0)
    out += np.fft.fftshift(np.fft.fft2(subbands.residual_high)) * _hi_mask(log_rad, 0.0)
    return np.fft.ifft2(np.fft.ifftshift(out)).real


def stack_color_subbands(bands_c1: SubbandSet, bands_c2: SubbandSet,
                         bands_c3: SubbandSet, band_index: int) -> np.ndarray:
    """Row-major (n, 3) stack of one sub-band across three color planes."""
    planes = [s.bands[band_index] for s in (bands_c1, bands_c2, bands_c3)]
    if not (planes[0].shape == planes[1].shape == planes[2].shape):
        raise ContractError(
            f"band {band_index} dimensions differ: "
            f"{[p.shape for p in planes]}")
    return np.stack([p.ravel() for p in planes], axis=1)
