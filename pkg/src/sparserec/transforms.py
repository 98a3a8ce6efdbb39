"""Orthonormal DCT-II analysis/synthesis, k-term approximation and power-law fits.

The analysis matrix ``Psi.T`` has rows

    psi_j(t) = s_j * cos(pi * (2t + 1) * j / (2n)),   s_0 = sqrt(1/n), s_j = sqrt(2/n)

so ``Psi`` is orthogonal and every squared error measured on coefficients is
the same squared error measured on samples.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import fft

from sparserec.errors import DegenerateFitError, InvalidArgumentError, InvalidInputError

ArrayLike = Union[np.ndarray, Sequence[float]]

#: magnitudes below this are treated as zero by :func:`fit_power_law`
FIT_FLOOR = 1e-12


def _frozen_vector(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidInputError(f"{what} must be a non-empty 1-D vector, got shape {arr.shape}")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise InvalidInputError(f"{what} has a non-finite entry at index {bad[0]}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Signal:
    """Time-domain real signal of length n."""

    samples: np.ndarray
    sample_rate_hz: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen_vector(self.samples, "signal"))
        if self.sample_rate_hz is not None and int(self.sample_rate_hz) <= 0:
            raise InvalidArgumentError("sample_rate_hz must be positive")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def n(self) -> int:
        return self.samples.size


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Transform-domain coefficients ``theta`` with ``x = Psi @ theta``."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen_vector(self.coeffs, "coefficient vector"))

    def __len__(self) -> int:
        return self.coeffs.size

    @property
    def n(self) -> int:
        return self.coeffs.size

    def support(self, tol: float = 0.0) -> np.ndarray:
        """Indices with ``|theta_i| > tol``, ascending."""
        return np.flatnonzero(np.abs(self.coeffs) > tol)

    def sparsity(self, tol: float = 0.0) -> int:
        """``||theta||_0``, counting entries with magnitude above ``tol``."""
        return int(self.support(tol).size)


@dataclass(frozen=True)
class PowerLawFit:
    """Sorted magnitudes modelled as ``c * i**(-q)`` for 1-based rank ``i``."""

    c: float
    q: float
    residual_rms: float
    rank_range: tuple = (1, 1)

    def predict(self, ranks) -> np.ndarray:
        return self.c * np.asarray(ranks, dtype=float) ** (-self.q)


def _as_vector(x, what: str) -> np.ndarray:
    if isinstance(x, Signal):
        return x.samples
    if isinstance(x, CoefficientVector):
        return x.coeffs
    return _frozen_vector(x, what)


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II analysis matrix (``Psi.T``); its transpose synthesizes."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    t = np.arange(n)
    j = t[:, None]
    mat = np.cos(np.pi * (2 * t[None, :] + 1) * j / (2 * n)) * np.sqrt(2.0 / n)
    mat[0, :] = np.sqrt(1.0 / n)
    return mat


def dct_forward(x: Union[Signal, ArrayLike]) -> CoefficientVector:
    """Analysis ``theta = Psi.T @ x``."""
    samples = _as_vector(x, "signal")
    return CoefficientVector(fft.dct(samples, type=2, norm="ortho"))


def dct_inverse(theta: Union[CoefficientVector, ArrayLike], sample_rate_hz: Optional[int] = None) -> Signal:
    """Synthesis ``x = Psi @ theta``."""
    coeffs = _as_vector(theta, "coefficient vector")
    return Signal(fft.idct(coeffs, type=2, norm="ortho"), sample_rate_hz)


def hard_threshold(theta: Union[CoefficientVector, ArrayLike], k: int) -> CoefficientVector:
    """Keep the ``k`` largest-magnitude entries in place, zero the rest.

    Among equal magnitudes the lower index wins.
    """
    coeffs = _as_vector(theta, "coefficient vector")
    n = coeffs.size
    if not 1 <= k <= n:
        raise InvalidArgumentError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    # stable sort on -|theta| keeps lower indices first within a tie
    keep = np.argsort(-np.abs(coeffs), kind="stable")[:k]
    out = np.zeros(n)
    out[keep] = coeffs[keep]
    return CoefficientVector(out)


def sorted_magnitudes(theta: Union[CoefficientVector, ArrayLike]) -> np.ndarray:
    coeffs = _as_vector(theta, "coefficient vector")
    return np.sort(np.abs(coeffs))[::-1]


def fit_power_law(
    theta: Union[CoefficientVector, ArrayLike],
    rank_range: Optional[tuple] = None,
) -> PowerLawFit:
    """Least-squares fit of ``log|theta|_sorted`` against ``log(rank)``.

    Parameters
    ----------
    theta : CoefficientVector or array
        Coefficients; only magnitudes are used.
    rank_range : (lo, hi), optional
        Inclusive 1-based rank window. Defaults to ``(1, n)``, in which case
        trailing magnitudes below ``FIT_FLOOR`` are dropped with a warning.
        An explicit window containing such a magnitude is an error.

    Returns
    -------
    PowerLawFit
        ``c = exp(intercept)``, ``q = -slope``.
    """
    mags = sorted_magnitudes(theta)
    n = mags.size
    explicit = rank_range is not None
    lo, hi = (1, n) if rank_range is None else (int(rank_range[0]), int(rank_range[1]))
    if not 1 <= lo <= hi <= n:
        raise InvalidArgumentError(f"rank_range must satisfy 1 <= lo <= hi <= {n}, got ({lo}, {hi})")

    window = mags[lo - 1:hi]
    tiny = window < FIT_FLOOR
    if tiny.any():
        if explicit:
            rank = lo + int(np.flatnonzero(tiny)[0])
            raise DegenerateFitError(f"zero magnitude at rank {rank} inside the fitted range")
        hi = lo - 1 + int(np.flatnonzero(tiny)[0])
        warnings.warn(f"dropping {int(tiny.sum())} trailing near-zero magnitudes from the fit", RuntimeWarning)
        window = mags[lo - 1:hi]
    if window.size < 2:
        raise DegenerateFitError("a power-law fit needs at least two positive magnitudes")

    log_rank = np.log(np.arange(lo, hi + 1, dtype=float))
    log_mag = np.log(window)
    design = np.column_stack([np.ones_like(log_rank), log_rank])
    (intercept, slope), *_ = np.linalg.lstsq(design, log_mag, rcond=None)
    resid = log_mag - (intercept + slope * log_rank)
    return PowerLawFit(
        c=float(np.exp(intercept)),
        q=float(-slope),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        rank_range=(lo, hi),
    )
