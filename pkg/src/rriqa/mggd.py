"""Zero-mean trivariate multivariate generalized Gaussian model.

Density, maximum-likelihood estimation (recursive fixed point for the
scatter matrix alternating with a bisection solve for the shape), exact
sampling, and a Kolmogorov-Smirnov adequacy statistic.

Parameters are stored normalized: ``sigma`` has unit determinant and the
working scatter matrix is ``scale * sigma``.  The mean is fixed at zero
(band-pass coefficients are zero-mean), so one sub-band costs exactly
eight scalars: shape, scale, and the six free entries of ``sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ConvergenceError, EstimationError
from .special import digamma, log_gamma, regularized_lower_incomplete_gamma

DIM = 3

BETA_MIN = 0.1
BETA_MAX = 3.0

_OUTER_MAX = 500
_INNER_MAX = 200
_OUTER_TOL = 1e-6
_INNER_TOL = 1e-8


@dataclass(frozen=True)
class MggdParams:
    """Shape, unit-determinant scatter ``sigma`` and its scale factor."""

    beta: float
    sigma: np.ndarray  # (3, 3), symmetric positive definite, det == 1
    scale: float

    def __post_init__(self):
        if not (BETA_MIN <= self.beta <= BETA_MAX):
            raise ContractError(f"beta {self.beta!r} outside [{BETA_MIN}, {BETA_MAX}]")
        if not self.scale > 0.0:
            raise ContractError(f"scale must be positive, got {self.scale!r}")
        sig = np.asarray(self.sigma, dtype=np.float64)
        if sig.shape != (DIM, DIM):
            raise ContractError(f"sigma must be 3x3, got {sig.shape}")
        if not np.allclose(sig, sig.T, atol=1e-12, rtol=0.0):
            raise ContractError("sigma must be symmetric")
        eigvals = np.linalg.eigvalsh(sig)
        if eigvals[0] <= 0.0:
            raise ContractError("sigma must be positive definite")
        det = float(np.linalg.det(sig))
        if abs(det - 1.0) > 1e-9:
            raise ContractError(f"sigma must have unit determinant, det={det!r}")
        object.__setattr__(self, "sigma", sig)

    @property
    def covariance_form(self) -> np.ndarray:
        """The working scatter matrix scale * sigma."""
        return self.scale * self.sigma


def normalized_params(beta: float, full_sigma: np.ndarray) -> MggdParams:
    """Build MggdParams from an arbitrary SPD scatter matrix."""
    full_sigma = np.asarray(full_sigma, dtype=np.float64)
    det = float(np.linalg.det(full_sigma))
    if det <= 0.0:
        raise ContractError("scatter matrix must be positive definite")
    scale = det ** (1.0 / DIM)
    return MggdParams(beta=float(beta), sigma=full_sigma / scale, scale=scale)


def _log_normalizer(beta: float, log_det: float) -> float:
    m = DIM
    return (log_gamma(m / 2.0) - (m / 2.0) * math.log(math.pi)
            - log_gamma(m / (2.0 * beta)) - (m / (2.0 * beta)) * math.log(2.0)
            + math.log(beta) - 0.5 * log_det)


def log_density(params: MggdParams, x: np.ndarray):
    """Log density at ``x`` (a 3-vector or an (n, 3) array of points)."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != DIM:
        raise ContractError(f"points must have 3 components, got shape {x.shape}")
    full = params.covariance_form
    solved = np.linalg.solve(full, pts.T).T
    u = np.einsum("ij,ij->i", pts, solved)
    log_det = DIM * math.log(params.scale)  # det(sigma) == 1
    out = _log_normalizer(params.beta, log_det) - 0.5 * u ** params.beta
    return float(out[0]) if squeeze else out


@dataclass(frozen=True)
class FitDiagnostics:
    iterations: int
    converged: bool
    beta_clamped: bool


def _quad_form(x: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    solved = np.linalg.solve(matrix, x.T).T
    return np.einsum("ij,ij->i", x, solved)


def shape_score(beta: float, u: np.ndarray) -> float:
    """Scaled negative shape derivative of the profiled log-likelihood.

    ``u`` holds the quadratic forms against a unit-determinant scatter;
    the optimal scale for the candidate shape is concentrated out, which
    removes the slowly-converging scale/shape ridge from the alternation.
    Increasing in ``beta``; its root is the conditional ML shape.
    """
    n = u.shape[0]
    p = DIM
    u_pow = u ** beta
    t_sum = float(np.sum(u_pow))
    ratio = float(np.sum(u_pow * np.log(u))) / t_sum
    half_p = p / (2.0 * beta)
    return (0.5 * p * ratio
            - half_p * (math.log(2.0) + digamma(half_p))
            - 1.0
            - half_p * math.log(beta * t_sum / (p * n)))


def _solve_beta(u: np.ndarray) -> tuple[float, bool]:
    """Bisection root of the shape score on [BETA_MIN, BETA_MAX]."""
    lo, hi = BETA_MIN, BETA_MAX
    if shape_score(lo, u) >= 0.0:
        return lo, True
    if shape_score(hi, u) <= 0.0:
        return hi, True
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if shape_score(mid, u) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9:
            break
    return 0.5 * (lo + hi), False


def fit(samples: np.ndarray, fixed_beta: float | None = None):
    """Maximum-likelihood fit; returns ``(MggdParams, FitDiagnostics)``.

    The scatter fixed point is iterated to 1e-8 at fixed shape, then the
    shape is re-solved from the likelihood stationarity condition; the
    alternation stops when both the scatter (relative Frobenius) and the
    shape move by less than 1e-6.  Samples are put in a canonical row
    order first, so the result is invariant to input row permutation,
    bit for bit.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != DIM:
        raise ContractError(f"samples must be (n, 3), got {x.shape}")
    n = x.shape[0]
    if n < 100:
        raise EstimationError(f"need at least 100 samples, got {n}")
    x = x[np.lexsort((x[:, 2], x[:, 1], x[:, 0]))]

    cov = (x.T @ x) / n
    det = float(np.linalg.det(cov))
    if not det > 0.0 or not np.isfinite(det):
        raise EstimationError("sample covariance is singular")

    sigma = cov / det ** (1.0 / DIM)
    beta = 1.0 if fixed_beta is None else float(fixed_beta)
    clamped = False
    full_prev = None
    beta_prev = beta

    for outer in range(1, _OUTER_MAX + 1):
        for _ in range(_INNER_MAX):
            u = _quad_form(x, sigma)
            u = np.maximum(u, np.finfo(np.float64).tiny)
            weights = u ** (beta - 1.0)
            scatter = (x * weights[:, None]).T @ x
            scatter = 0.5 * (scatter + scatter.T)
            det = float(np.linalg.det(scatter))
            if not det > 0.0:
                raise EstimationError("scatter fixed point became singular")
            sigma_new = scatter / det ** (1.0 / DIM)
            delta = np.linalg.norm(sigma_new - sigma) / np.linalg.norm(sigma)
            sigma = sigma_new
            if delta < _INNER_TOL:
                break

        u = np.maximum(_quad_form(x, sigma), np.finfo(np.float64).tiny)
        if fixed_beta is None:
            beta_new, clamped = _solve_beta(u)
        else:
            beta_new = beta
        scale = (beta_new * float(np.sum(u ** beta_new)) / (DIM * n)) ** (1.0 / beta_new)
        full = scale * sigma

        if full_prev is not None:
            move = np.linalg.norm(full - full_prev) / np.linalg.norm(full_prev)
            if move < _OUTER_TOL and abs(beta_new - beta_prev) < _OUTER_TOL:
                params = MggdParams(beta=beta_new, sigma=sigma, scale=scale)
                return params, FitDiagnostics(outer, True, clamped)
        full_prev = full
        beta_prev = beta
        beta = beta_new

    last = MggdParams(beta=beta, sigma=sigma, scale=scale)
    raise ConvergenceError(
        f"MGGD fit did not converge in {_OUTER_MAX} outer iterations", last=last)


def estimate(samples: np.ndarray, fixed_beta: float | None = None) -> MggdParams:
    """Maximum-likelihood MggdParams for an (n, 3) sample array."""
    params, _ = fit(samples, fixed_beta=fixed_beta)
    return params


def sample(params: MggdParams, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` i.i.d. vectors.

    Stochastic representation: x = r * sqrt(Sigma) * s with s uniform on
    the unit sphere and r**(2 beta) / 2 gamma-distributed with shape
    m / (2 beta).  Deterministic for a fixed seed.
    """
    if n < 1:
        raise ContractError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    shape = DIM / (2.0 * params.beta)
    t = rng.gamma(shape=shape, scale=1.0, size=n)
    radius = (2.0 * t) ** (1.0 / (2.0 * params.beta))
    z = rng.standard_normal((n, DIM))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    eigvals, eigvecs = np.linalg.eigh(params.covariance_form)
    root = eigvecs @ (np.sqrt(eigvals)[:, None] * eigvecs.T)
    return radius[:, None] * (z @ root.T)


def ks_adequacy(samples: np.ndarray, params: MggdParams) -> float:
    """KS sup-distance between the model radial law and the sample.

    Under the model, t = (x' Sigma^-1 x)^beta / 2 is Gamma(m / (2 beta), 1);
    the statistic is the sup difference between the empirical CDF of t and
    that Gamma CDF.
    """
    x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if x.shape[1] != DIM:
        raise ContractError(f"samples must be (n, 3), got {samples.shape}")
    n = x.shape[0]
    if n < 1:
        raise EstimationError("need at least one sample")
    u = _quad_form(x, params.covariance_form)
    if not np.all(np.isfinite(u)) or np.any(u < 0.0):
        raise EstimationError("degenerate samples: quadratic form not positive")
    t = np.sort(0.5 * u ** params.beta)
    shape = DIM / (2.0 * params.beta)
    cdf = np.array([regularized_lower_incomplete_gamma(shape, v) for v in t])
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - cdf, cdf - (i - 1) / n)))
