"""End-to-end reduced-reference pipeline.

``extract_features`` turns a color image into L = scales x orientations
trivariate MGGD parameter sets (one per oriented sub-band, 8 scalars
each, 48 for the default 6-band configuration).  ``score`` compares a
distorted image against a transmitted feature set and pools per-band
dissimilarities into the distortion sum D and the quality index
Q = log2(1 + D / d0).

The feature side channel is a versioned little-endian binary format::

    magic  b"RRF1"      4 bytes
    version u8          currently 1
    space   u8          0=RGB 1=HSV 2=CIELAB 3=YCRCB
    scales  u8
    orients u8
    width   u32
    height  u32
    bands   L x 8 f64:  beta, scale, s11, s12, s13, s22, s23, s33
                        (upper triangle of the unit-determinant sigma,
                        row-major, band order scale-major/orientation-minor)
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass

import numpy as np

from . import mggd
from .color import ColorImage, ColorSpace, analysis_planes, convert
from .distance import geodesic, kld
from .errors import ContractError, DecodeError, RriqaError
from .pyramid import PyramidConfig, decompose, stack_color_subbands

MAGIC = b"RRF1"
VERSION = 1
DEFAULT_D0 = 0.1

_SPACE_IDS = {ColorSpace.RGB: 0, ColorSpace.HSV: 1,
              ColorSpace.CIELAB: 2, ColorSpace.YCRCB: 3}
_IDS_SPACE = {v: k for k, v in _SPACE_IDS.items()}

_HEADER = struct.Struct("<4sBBBBII")
_BAND = struct.Struct("<8d")


class DistanceKind(enum.Enum):
    KLD = "kld"
    GD = "gd"


@dataclass(frozen=True)
class FeatureSet:
    """The reduced-reference side channel for one image."""

    color_space: ColorSpace
    pyramid_cfg: PyramidConfig
    features: tuple  # num_bands MggdParams, scale-major band order
    source_dims: tuple  # (width, height)

    def __post_init__(self):
        if len(self.features) != self.pyramid_cfg.num_bands:
            raise ContractError(
                f"expected {self.pyramid_cfg.num_bands} band features, "
                f"got {len(self.features)}")

    @property
    def num_scalars(self) -> int:
        return 8 * len(self.features)


@dataclass(frozen=True)
class QualityResult:
    d_total: float
    q: float
    per_band: tuple
    distance_kind: DistanceKind


def extract_features(img: ColorImage, space: ColorSpace = ColorSpace.CIELAB,
                     cfg: PyramidConfig = PyramidConfig()) -> FeatureSet:
    """Convert, decompose and fit each oriented sub-band."""
    converted = convert(img, space)
    planes = analysis_planes(converted)
    subbands = [decompose(planes[:, :, i], cfg) for i in range(3)]
    features = []
    for band_index in range(cfg.num_bands):
        vectors = stack_color_subbands(*subbands, band_index=band_index)
        try:
            features.append(mggd.estimate(vectors))
        except RriqaError as exc:
            raise type(exc)(f"band {band_index}: {exc}") from exc
    return FeatureSet(color_space=space, pyramid_cfg=cfg,
                      features=tuple(features),
                      source_dims=(img.width, img.height))


def band_distance(ref: mggd.MggdParams, dist: mggd.MggdParams,
                  kind: DistanceKind) -> float:
    """One sub-band dissimilarity; the geodesic uses the reference shape.

    The geodesic is taken without its |H| prefactor: the prefactor is a
    pure function of the reference determinant and drives the pooled
    distance to 0 or overflow for band scales far from 1, destroying the
    monotone response the metric needs.  The eigenvalue part is the
    congruence-invariant Rao distance and is scale-sensitive through the
    generalized spectrum.
    """
    if kind is DistanceKind.KLD:
        return kld(ref, dist)
    return geodesic(ref, dist, beta_shared=ref.beta, include_h_prefactor=False)


def score_features(ref: FeatureSet, dist: FeatureSet,
                   kind: DistanceKind = DistanceKind.KLD,
                   d0: float = DEFAULT_D0) -> QualityResult:
    """Pool per-band dissimilarities between two extracted feature sets."""
    if ref.color_space is not dist.color_space or ref.pyramid_cfg != dist.pyramid_cfg:
        raise ContractError(
            f"feature configuration mismatch: "
            f"{ref.color_space.name}/{ref.pyramid_cfg} vs "
            f"{dist.color_space.name}/{dist.pyramid_cfg}")
    if not d0 > 0.0:
        raise ContractError(f"d0 must be positive, got {d0!r}")
    per_band = []
    for index, (pr, pd) in enumerate(zip(ref.features, dist.features)):
        try:
            per_band.append(band_distance(pr, pd, kind))
        except RriqaError as exc:
            raise type(exc)(f"band {index}: {exc}") from exc
    d_total = float(sum(per_band))
    q = float(np.log2(1.0 + d_total / d0))
    return QualityResult(d_total=d_total, q=q, per_band=tuple(per_band),
                         distance_kind=kind)


def score(ref_features: FeatureSet, distorted: ColorImage,
          distance_kind: DistanceKind = DistanceKind.KLD,
          d0: float = DEFAULT_D0) -> QualityResult:
    """Quality of a distorted image against transmitted reference features."""
    if (distorted.width, distorted.height) != tuple(ref_features.source_dims):
        raise ContractError(
            f"dimension mismatch: features for {ref_features.source_dims}, "
            f"image is {(distorted.width, distorted.height)} "
            "(no resampling is attempted)")
    dist_features = extract_features(distorted, ref_features.color_space,
                                     ref_features.pyramid_cfg)
    return score_features(ref_features, dist_features, distance_kind, d0)


def encode_features(fs: FeatureSet) -> bytes:
    """Serialize a FeatureSet; bit-exact round trip with decode_features."""
    out = [_HEADER.pack(MAGIC, VERSION, _SPACE_IDS[fs.color_space],
                        fs.pyramid_cfg.scales, fs.pyramid_cfg.orientations,
                        fs.source_dims[0], fs.source_dims[1])]
    for params in fs.features:
        s = params.sigma
        out.append(_BAND.pack(params.beta, params.scale,
                              s[0, 0], s[0, 1], s[0, 2],
                              s[1, 1], s[1, 2], s[2, 2]))
    return b"".join(out)


def decode_features(raw: bytes) -> FeatureSet:
    """Inverse of encode_features; validates every invariant on load."""
    if len(raw) < _HEADER.size:
        raise DecodeError(f"truncated header: {len(raw)} bytes at offset 0")
    magic, version, space_id, scales, orients, width, height = \
        _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise DecodeError(f"bad magic {magic!r} at offset 0")
    if version != VERSION:
        raise DecodeError(f"unsupported version {version} at offset 4")
    if space_id not in _IDS_SPACE:
        raise DecodeError(f"unknown color space id {space_id} at offset 5")
    cfg = PyramidConfig(scales=scales, orientations=orients)
    offset = _HEADER.size
    features = []
    for band in range(cfg.num_bands):
        if len(raw) < offset + _BAND.size:
            raise DecodeError(
                f"truncated stream: band {band} needs {_BAND.size} bytes "
                f"at offset {offset}, have {len(raw) - offset}")
        beta, scl, s11, s12, s13, s22, s23, s33 = _BAND.unpack_from(raw, offset)
        sigma = np.array([[s11, s12, s13], [s12, s22, s23], [s13, s23, s33]])
        eigvals = np.linalg.eigvalsh(sigma)
        if eigvals[0] <= 0.0:
            raise DecodeError(
                f"band {band} at offset {offset}: non-positive-definite sigma")
        det = float(np.linalg.det(sigma))
        if abs(det - 1.0) > 1e-9:
            raise DecodeError(
                f"band {band} at offset {offset}: sigma determinant {det!r} != 1")
        try:
            features.append(mggd.MggdParams(beta=beta, sigma=sigma, scale=scl))
        except ContractError as exc:
            raise DecodeError(f"band {band} at offset {offset}: {exc}") from exc
        offset += _BAND.size
    if len(raw) != offset:
        raise DecodeError(f"{len(raw) - offset} trailing bytes at offset {offset}")
    return FeatureSet(color_space=_IDS_SPACE[space_id], pyramid_cfg=cfg,
                      features=tuple(features), source_dims=(width, height))


def features_to_json(fs: FeatureSet) -> str:
    """Human-readable export of the side-channel payload (debugging aid)."""
    doc = {
        "color_space": fs.color_space.name,
        "scales": fs.pyramid_cfg.scales,
        "orientations": fs.pyramid_cfg.orientations,
        "source_dims": list(fs.source_dims),
        "bands": [
            {"beta": p.beta, "scale": p.scale,
             "sigma": [[p.sigma[i, j] for j in range(3)] for i in range(3)]}
            for p in fs.features
        ],
    }
    return json.dumps(doc, indent=2)
