"""Subjective-score validation protocol and dataset plumbing.

Implements the FRTV Phase I style regression: a five-parameter logistic
mapping from objective quality Q to predicted opinion scores, fit with a
Nelder-Mead simplex from several deterministic starts, plus Pearson and
Spearman correlation, a directory/manifest dataset reader, the
end-to-end evaluation driver, and seeded synthetic distortion
generators for self-contained experiments.

Convention: PLCC is computed between the fitted predictions and the
subjective scores; SRCC between raw Q and the subjective scores (ranks
are unaffected by a monotone remapping).
"""

from __future__ import annotations

import enum
import hashlib
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.ndimage

from . import metric
from .color import ColorImage, ColorSpace, load_image
from .errors import ContractError, DatasetError, DegenerateFitError, RriqaError
from .metric import DistanceKind, FeatureSet
from .pyramid import PyramidConfig

_NM_REFLECT = 1.0
_NM_EXPAND = 2.0
_NM_CONTRACT = 0.5
_NM_SHRINK = 0.5
_NM_MAX_ITER = 5000
_NM_DIAM_TOL = 1e-8


def logistic_fn(tau: float, q: float) -> float:
    """Odd sigmoid 1/2 - 1/(1 + exp(tau * q)), overflow-safe."""
    x = tau * q
    if x >= 0.0:
        e = math.exp(-x)
        return 0.5 - e / (1.0 + e)
    return 0.5 - 1.0 / (1.0 + math.exp(x))


def _logistic_vec(tau: float, q: np.ndarray) -> np.ndarray:
    x = tau * q
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 0.5 - np.exp(-x[pos]) / (1.0 + np.exp(-x[pos]))
    out[~pos] = 0.5 - 1.0 / (1.0 + np.exp(x[~pos]))
    return out


@dataclass(frozen=True)
class LogisticFit:
    """Five regression coefficients and the achieved squared error."""

    b1: float
    b2: float
    b3: float
    b4: float
    b5: float
    residual: float
    converged: bool

    def predict(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        return (self.b1 * _logistic_vec(self.b2, q - self.b3)
                + self.b4 * q + self.b5)


def nelder_mead(fn, x0: np.ndarray, max_iter: int = _NM_MAX_ITER,
                diameter_tol: float = _NM_DIAM_TOL, history: list | None = None):
    """Simplex minimizer (reflection 1, expansion 2, contraction and
    shrink 1/2); stops when the simplex diameter drops below
    ``diameter_tol`` or after ``max_iter`` iterations.

    Returns ``(x_best, f_best, converged)``.  When ``history`` is given,
    the best vertex value is appended after every iteration.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    dim = x0.size
    simplex = [x0]
    for i in range(dim):
        step = x0.copy()
        step[i] = step[i] * 1.05 if step[i] != 0.0 else 0.00025
        simplex.append(step)
    values = [fn(v) for v in simplex]

    converged = False
    for _ in range(max_iter):
        order = np.argsort(values, kind="stable")
        simplex = [simplex[k] for k in order]
        values = [values[k] for k in order]
        if history is not None:
            history.append(values[0])
        diameter = max(np.max(np.abs(v - simplex[0])) for v in simplex[1:])
        if diameter < diameter_tol:
            converged = True
            break

        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        reflected = centroid + _NM_REFLECT * (centroid - worst)
        f_reflected = fn(reflected)
        if values[0] <= f_reflected < values[-2]:
            simplex[-1], values[-1] = reflected, f_reflected
            continue
        if f_reflected < values[0]:
            expanded = centroid + _NM_EXPAND * (centroid - worst)
            f_expanded = fn(expanded)
            if f_expanded < f_reflected:
                simplex[-1], values[-1] = expanded, f_expanded
            else:
                simplex[-1], values[-1] = reflected, f_reflected
            continue
        contracted = centroid + _NM_CONTRACT * (worst - centroid)
        f_contracted = fn(contracted)
        if f_contracted < values[-1]:
            simplex[-1], values[-1] = contracted, f_contracted
            continue
        best = simplex[0]
        simplex = [best] + [best + _NM_SHRINK * (v - best) for v in simplex[1:]]
        values = [values[0]] + [fn(v) for v in simplex[1:]]

    order = np.argsort(values, kind="stable")
    return simplex[order[0]], values[order[0]], converged


def _fit_starts(q: np.ndarray, mos: np.ndarray) -> list[np.ndarray]:
    spread = float(np.ptp(mos))
    center = float(np.mean(q))
    q_std = float(np.std(q)) or 1.0
    mos_mean = float(np.mean(mos))
    # least-squares line as a sane linear component
    slope, intercept = np.polyfit(q, mos, 1)
    return [
        np.array([spread, 1.0 / q_std, center, 0.0, mos_mean]),
        np.array([-spread, -1.0 / q_std, center, 0.0, mos_mean]),
        np.array([spread, 1.0 / q_std, center, slope, intercept]),
        np.array([0.0, 1.0, center, slope, intercept]),
        np.array([2.0 * spread, 0.5 / q_std, float(np.median(q)), -slope, mos_mean]),
    ]


def fit_logistic(q, mos) -> LogisticFit:
    """Least-squares fit of the five-parameter logistic regression.

    Runs Nelder-Mead from five deterministic starts (the surface is
    multimodal) and keeps the best residual.
    """
    q = np.asarray(q, dtype=np.float64)
    mos = np.asarray(mos, dtype=np.float64)
    if q.shape != mos.shape or q.ndim != 1:
        raise ContractError(f"q and mos must be equal-length vectors, got {q.shape}, {mos.shape}")
    if q.size < 10:
        raise ContractError(f"need at least 10 samples to fit, got {q.size}")
    if np.ptp(q) < 1e-12 * max(1.0, float(np.max(np.abs(q)))):
        raise DegenerateFitError("objective scores are constant; nothing to fit")
    if np.ptp(mos) < 1e-12 * max(1.0, float(np.max(np.abs(mos)))):
        raise DegenerateFitError("subjective scores are constant; nothing to fit")

    def sse(b: np.ndarray) -> float:
        pred = (b[0] * _logistic_vec(b[1], q - b[2]) + b[3] * q + b[4])
        err = pred - mos
        return float(err @ err)

    best = None
    for start in _fit_starts(q, mos):
        x, value, converged = nelder_mead(sse, start)
        if best is None or value < best[1]:
            best = (x, value, converged)
    x, value, converged = best
    fit = LogisticFit(*(float(v) for v in x), residual=float(value), converged=converged)
    if not np.all(np.isfinite(fit.predict(q))):
        raise DegenerateFitError("fitted regression is not finite on the training range")
    return fit


def plcc(a, b) -> float:
    """Pearson linear correlation coefficient."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ContractError(f"need two equal-length vectors, got {a.shape}, {b.shape}")
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0:
        raise DegenerateFitError("correlation undefined for constant input")
    return float(da @ db) / denom


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def srcc(a, b) -> float:
    """Spearman rank-order correlation; ties get average (fractional) ranks."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ContractError(f"need two equal-length vectors, got {a.shape}, {b.shape}")
    return plcc(_average_ranks(a), _average_ranks(b))


# --------------------------------------------------------------------------
# dataset ingestion (TID2008 directory layout)

NUM_DISTORTION_TYPES = 17
NUM_LEVELS = 4

_NAME_RE = re.compile(r"^i(\d{2})_(\d{2})_(\d)\.(bmp|png)$", re.IGNORECASE)


@dataclass(frozen=True)
class LabeledSample:
    ref_id: int
    ref_path: Path
    distorted_path: Path
    distortion_type: int
    level: int
    mos: float


def _resolve(root: Path, subdir: str, name: str) -> Path | None:
    for candidate in (root / subdir / name, root / name,
                      root / subdir / name.lower(), root / subdir / name.upper(),
                      root / name.lower(), root / name.upper()):
        if candidate.is_file():
            return candidate
    return None


def load_dataset(root, manifest) -> list[LabeledSample]:
    """Parse a ``<mos> <distorted-filename>`` manifest under ``root``.

    Filenames follow the iRR_TT_L naming convention (reference RR,
    distortion type TT in 1..17, level L in 1..4).  Reference images are
    resolved as ``reference_images/IRR.bmp`` (case-insensitive, png
    accepted).  All malformed lines and missing files are collected and
    reported together.
    """
    root = Path(root)
    manifest = Path(manifest)
    problems: list[str] = []
    samples: list[LabeledSample] = []
    lines = manifest.read_text().splitlines()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            problems.append(f"line {lineno}: expected '<mos> <filename>', got {line!r}")
            continue
        mos_text, name = parts
        try:
            mos = float(mos_text)
        except ValueError:
            problems.append(f"line {lineno}: bad MOS value {mos_text!r}")
            continue
        match = _NAME_RE.match(name)
        if not match:
            problems.append(f"line {lineno}: filename {name!r} does not follow iRR_TT_L")
            continue
        ref_id, dtype, level = int(match[1]), int(match[2]), int(match[3])
        if not 1 <= dtype <= NUM_DISTORTION_TYPES:
            problems.append(f"line {lineno}: distortion type {dtype} outside 1..{NUM_DISTORTION_TYPES}")
            continue
        if not 1 <= level <= NUM_LEVELS:
            problems.append(f"line {lineno}: level {level} outside 1..{NUM_LEVELS}")
            continue
        distorted = _resolve(root, "distorted_images", name)
        if distorted is None:
            problems.append(f"line {lineno}: distorted file {name!r} not found under {root}")
            continue
        ref_name = f"I{ref_id:02d}.bmp"
        ref_path = _resolve(root, "reference_images", ref_name) \
            or _resolve(root, "reference_images", f"I{ref_id:02d}.png")
        if ref_path is None:
            problems.append(f"line {lineno}: reference {ref_name!r} not found under {root}")
            continue
        samples.append(LabeledSample(ref_id=ref_id, ref_path=ref_path,
                                     distorted_path=distorted,
                                     distortion_type=dtype, level=level, mos=mos))
    if problems:
        raise DatasetError("dataset ingestion failed:\n  " + "\n  ".join(problems))
    if not samples:
        warnings.warn(f"manifest {manifest} produced no samples", stacklevel=2)
    return samples


# --------------------------------------------------------------------------
# evaluation driver

@dataclass(frozen=True)
class EvalConfig:
    color_space: ColorSpace = ColorSpace.CIELAB
    distance: DistanceKind = DistanceKind.KLD
    pyramid_cfg: PyramidConfig = PyramidConfig()
    d0: float = metric.DEFAULT_D0
    per_type_fit: bool = False


@dataclass(frozen=True)
class TypeResult:
    plcc: float
    srcc: float
    n: int


@dataclass
class EvaluationReport:
    config: EvalConfig
    per_type: dict = field(default_factory=dict)  # distortion type -> TypeResult
    overall: TypeResult | None = None
    fit: LogisticFit | None = None
    failures: list = field(default_factory=list)  # (sample, message)

    def to_text(self) -> str:
        lines = [
            f"color space : {self.config.color_space.name}",
            f"distance    : {self.config.distance.value}",
            f"pyramid     : {self.config.pyramid_cfg.scales} scales x "
            f"{self.config.pyramid_cfg.orientations} orientations",
            "",
            f"{'type':>4s} {'n':>5s} {'plcc':>8s} {'srcc':>8s}",
        ]
        for dtype in sorted(self.per_type):
            r = self.per_type[dtype]
            lines.append(f"{dtype:>4d} {r.n:>5d} {r.plcc:>8.4f} {r.srcc:>8.4f}")
        r = self.overall
        lines.append(f"{'all':>4s} {r.n:>5d} {r.plcc:>8.4f} {r.srcc:>8.4f}")
        if self.failures:
            lines.append("")
            lines.append(f"failed samples: {len(self.failures)}")
            lines.extend(f"  {path}: {msg}" for path, msg in self.failures)
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        rows = ["type,n,plcc,srcc"]
        for dtype in sorted(self.per_type):
            r = self.per_type[dtype]
            rows.append(f"{dtype},{r.n},{r.plcc:.6f},{r.srcc:.6f}")
        r = self.overall
        rows.append(f"all,{r.n},{r.plcc:.6f},{r.srcc:.6f}")
        return "\n".join(rows) + "\n"


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _FeatureCache:
    """Reference features keyed by (content hash, space, pyramid cfg)."""

    def __init__(self, config: EvalConfig):
        self.config = config
        self._store: dict = {}

    def get(self, path: Path) -> FeatureSet:
        key = (_file_digest(path), self.config.color_space,
               self.config.pyramid_cfg)
        if key not in self._store:
            image = load_image(path)
            self._store[key] = metric.extract_features(
                image, self.config.color_space, self.config.pyramid_cfg)
        return self._store[key]


def _correlations(qs: np.ndarray, mos: np.ndarray, fit: LogisticFit) -> TypeResult:
    return TypeResult(plcc=plcc(fit.predict(qs), mos), srcc=srcc(qs, mos),
                      n=int(qs.size))


def evaluate(samples: list[LabeledSample], config: EvalConfig = EvalConfig()) -> EvaluationReport:
    """Score every sample, fit the regression, report correlations.

    Per-sample scoring failures are collected into the report and the
    correlations are computed over the successful subset.
    """
    report = EvaluationReport(config=config)
    cache = _FeatureCache(config)
    scored: list[tuple[LabeledSample, float]] = []
    for sample in samples:
        try:
            features = cache.get(sample.ref_path)
            distorted = load_image(sample.distorted_path)
            result = metric.score(features, distorted, config.distance, config.d0)
            scored.append((sample, result.q))
        except RriqaError as exc:
            report.failures.append((str(sample.distorted_path), str(exc)))
    if not scored:
        raise DatasetError("no sample could be scored; see report.failures")

    qs = np.array([q for _, q in scored])
    mos = np.array([s.mos for s, _ in scored])
    fit = fit_logistic(qs, mos)
    report.fit = fit
    report.overall = _correlations(qs, mos, fit)
    types = sorted({s.distortion_type for s, _ in scored})
    for dtype in types:
        mask = np.array([s.distortion_type == dtype for s, _ in scored])
        type_fit = fit_logistic(qs[mask], mos[mask]) if config.per_type_fit else fit
        report.per_type[dtype] = _correlations(qs[mask], mos[mask], type_fit)
    return report


# --------------------------------------------------------------------------
# synthetic distortions

class DistortionKind(enum.Enum):
    GAUSSIAN_NOISE = "gaussian_noise"
    GAUSSIAN_BLUR = "gaussian_blur"
    QUANTIZATION = "quantization"


def distort(img: ColorImage, kind: DistortionKind, level: float, seed: int = 0) -> ColorImage:
    """Apply a seeded synthetic distortion to an RGB image.

    ``level`` is the noise standard deviation in [0, 1] units for
    gaussian_noise, the kernel standard deviation in pixels for
    gaussian_blur, and the number of uniform bins for quantization.
    """
    if img.space is not ColorSpace.RGB:
        raise ContractError(f"distort expects an RGB image, got {img.space.name}")
    if not level > 0.0:
        raise ContractError(f"level must be positive, got {level!r}")
    if kind is DistortionKind.GAUSSIAN_NOISE:
        rng = np.random.default_rng(seed)
        data = np.clip(img.data + level * rng.standard_normal(img.data.shape), 0.0, 1.0)
    elif kind is DistortionKind.GAUSSIAN_BLUR:
        data = np.stack([scipy.ndimage.gaussian_filter(img.data[:, :, i], sigma=level)
                         for i in range(3)], axis=-1)
    elif kind is DistortionKind.QUANTIZATION:
        bins = max(2, int(round(level)))
        data = (np.clip(np.floor(img.data * bins), 0, bins - 1) + 0.5) / bins
    else:
        raise ContractError(f"unknown distortion kind {kind!r}")
    return ColorImage(ColorSpace.RGB, data)
