"""Sparse recovery: Basis Pursuit, OMP, reweighted l1 and an exhaustive l0 oracle.

All solvers take a :class:`RecoveryProblem` ``(A, y)`` with ``A = Phi @ Psi``
and return a :class:`RecoveryResult` in the coefficient domain.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import linalg

from sparserec.errors import InfeasibleFactorizationError, InstanceTooLargeError, InvalidArgumentError, InvalidInputError
from sparserec.sensing import SUPPORT_BUDGET, MeasurementVector
from sparserec.transforms import CoefficientVector

CONVERGED = "converged"
MAX_ITERS = "max_iters"
INFEASIBLE = "infeasible"

# Cholesky of A A^T squares cond(A); below this pivot ratio hand over to QR
_CHOL_RTOL = 1e-6
# relative R pivot below which A is treated as rank deficient
_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 5000
    abs_tol: float = 1e-7
    rel_tol: float = 1e-5
    penalty: float = 1.0
    support_tol: float = 1e-6

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be positive")
        for name in ("abs_tol", "rel_tol", "penalty", "support_tol"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class RecoveryResult:
    theta_hat: CoefficientVector
    status: str
    iterations: int
    primal_residual: float
    dual_residual: float
    objective: float

    def support(self, tol: float) -> np.ndarray:
        return self.theta_hat.support(tol)


@dataclass(frozen=True)
class _RowSpace:
    """``A = T @ Q.T`` with ``Q`` (n x m) orthonormal and ``T`` (m x m) invertible."""

    Q: np.ndarray
    T: np.ndarray
    lower: bool  # T is lower triangular (Cholesky path)
    perm: Optional[np.ndarray] = None  # row permutation for the QR path

    def coords(self, y: np.ndarray) -> np.ndarray:
        """``c`` with ``A x = y  <=>  Q.T x = c``."""
        if self.lower:
            return linalg.solve_triangular(self.T, y, lower=True)
        # T = P R^T, hence c = R^-T P^T y
        return linalg.solve_triangular(self.T[self.perm], y[self.perm], lower=True)


@dataclass(frozen=True, eq=False)
class RecoveryProblem:
    """Measurement operator ``A`` (m x n, m <= n) and measurements ``y``."""

    A: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float, copy=True)
        yv = self.y.values if isinstance(self.y, MeasurementVector) else self.y
        y = np.array(yv, dtype=float, copy=True).reshape(-1)
        if A.ndim != 2:
            raise InvalidInputError(f"A must be 2-D, got shape {A.shape}")
        m, n = A.shape
        if m > n:
            raise InvalidArgumentError(f"recovery needs m <= n, got A of shape {A.shape}")
        if y.size != m:
            raise InvalidArgumentError(f"y has length {y.size}, A has {m} rows")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
            raise InvalidInputError("A and y must be finite")
        A.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)

    @property
    def shape(self) -> tuple:
        return self.A.shape

    @cached_property
    def row_space(self) -> _RowSpace:
        """Factorization of ``A A^T``: Cholesky, falling back to pivoted QR of ``A^T``."""
        A = self.A
        m = A.shape[0]
        try:
            L = linalg.cholesky(A @ A.T, lower=True)
            d = np.abs(np.diag(L))
            if d.min() > _CHOL_RTOL * d.max():
                Q = linalg.solve_triangular(L, A, lower=True).T
                return _RowSpace(np.ascontiguousarray(Q), L, lower=True)
        except linalg.LinAlgError:
            pass
        Q, R, piv = linalg.qr(A.T, mode="economic", pivoting=True)
        d = np.abs(np.diag(R))
        rank = int(np.sum(d > _RANK_RTOL * max(d[0], np.finfo(float).tiny)))
        if rank < m:
            raise InfeasibleFactorizationError(f"A has rank {rank} < m = {m}; A A^T is singular")
        # A^T[:, piv] = Q R  =>  A[piv] = R^T Q^T  =>  A = P R^T Q^T
        T = np.empty((m, m))
        T[piv] = R.T
        return _RowSpace(np.ascontiguousarray(Q), T, lower=False, perm=piv)


def _soft(v: np.ndarray, thr) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


def _feasibility_tol(p: RecoveryProblem, cfg: SolverConfig) -> float:
    return cfg.abs_tol + cfg.rel_tol * float(np.linalg.norm(p.y))


def _polish(p: RecoveryProblem, z: np.ndarray, feasible: np.ndarray, cfg: SolverConfig, weights) -> Optional[np.ndarray]:
    """Re-solve ``A_S theta_S = y`` exactly on the support of the sparse iterate ``z``.

    Accepted only when it is feasible and its (weighted) l1 norm is no worse
    than that of ``feasible``, the last projected iterate.
    """
    m = p.A.shape[0]
    tol = _feasibility_tol(p, cfg)
    w = 1.0 if weights is None else weights
    best = float(np.sum(w * np.abs(feasible)))
    for support in (np.flatnonzero(z), np.flatnonzero(np.abs(z) > cfg.support_tol)):
        if support.size == 0 or support.size > m:
            continue
        sub = p.A[:, support]
        coef, _, rank, _ = np.linalg.lstsq(sub, p.y, rcond=None)
        if rank < support.size:
            continue
        cand = np.zeros_like(z)
        cand[support] = coef
        if np.linalg.norm(p.A @ cand - p.y) > tol:
            continue
        if float(np.sum(w * np.abs(cand))) <= best * (1.0 + cfg.rel_tol) + cfg.abs_tol:
            return cand
    return None


def _weighted_bp(
    p: RecoveryProblem,
    cfg: SolverConfig,
    weights: Optional[np.ndarray] = None,
    z0: Optional[np.ndarray] = None,
) -> RecoveryResult:
    """ADMM for ``min sum w_i |theta_i|  s.t.  A theta = y``.

    Splitting ``theta = z`` with the affine constraint on ``theta`` and the
    weighted l1 term on ``z``::

        theta <- proj_{A theta = y}(z - u)
        z     <- soft(theta + u, w / penalty)
        u     <- u + theta - z

    The projection is carried out in the orthonormal row-space coordinates
    ``Q`` of the cached factorization, so an iteration costs two products
    with an ``n x m`` matrix. ``Q.T u`` is updated by recursion, using
    ``Q.T theta = c`` after every projection.
    """
    fac = p.row_space
    Q, c = fac.Q, fac.coords(p.y)
    n = p.A.shape[1]
    rho = cfg.penalty
    thr = (1.0 / rho) if weights is None else np.asarray(weights, dtype=float) / rho
    tol_primal = _feasibility_tol(p, cfg)

    z = np.zeros(n) if z0 is None else np.array(z0, dtype=float)
    u = np.zeros(n)
    qz = Q.T @ z
    qu = np.zeros_like(c)
    theta = z
    status = MAX_ITERS
    primal = dual = math.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        theta = (z - u) - Q @ (qz - qu - c)
        w = theta + u
        z_prev = z
        z = _soft(w, thr)
        u = w - z
        qz = Q.T @ z
        qu = qu + c - qz
        primal = float(np.linalg.norm(fac.T @ (qz - c)))
        dual = rho * float(np.linalg.norm(z - z_prev))
        if primal <= tol_primal and dual <= cfg.abs_tol + cfg.rel_tol * rho * float(np.linalg.norm(u)):
            primal = float(np.linalg.norm(p.A @ z - p.y))
            if primal <= tol_primal:
                status = CONVERGED
                break

    polished = _polish(p, z, theta, cfg, weights)
    if polished is not None:
        z = polished
    primal = float(np.linalg.norm(p.A @ z - p.y))
    if status == CONVERGED and primal > tol_primal:
        status = MAX_ITERS
    return RecoveryResult(
        theta_hat=CoefficientVector(z),
        status=status,
        iterations=it,
        primal_residual=primal,
        dual_residual=dual,
        objective=float(np.sum(np.abs(z))),
    )


def basis_pursuit(p: RecoveryProblem, cfg: SolverConfig = SolverConfig()) -> RecoveryResult:
    """Solve ``min ||theta||_1  s.t.  A theta = y`` by ADMM.

    The returned coefficients are the sparse ADMM iterate, re-fit exactly on
    its support when that is feasible and no worse in l1. Reaching
    ``max_iters`` is reported through ``status``, not raised.

    Raises
    ------
    InfeasibleFactorizationError
        If ``A`` is rank deficient.
    """
    return _weighted_bp(p, cfg)


def reweighted_l1(
    p: RecoveryProblem,
    rounds: int = 4,
    epsilon: Optional[float] = None,
    cfg: SolverConfig = SolverConfig(),
) -> RecoveryResult:
    """Iteratively reweighted l1.

    Round 1 is :func:`basis_pursuit`. Round ``r > 1`` solves the weighted
    problem with ``w_i = 1 / (|theta_i| + epsilon)`` from round ``r - 1``,
    warm-started at the previous solution. With ``epsilon=None`` it is reset
    each round to ``0.1 * max|theta|`` of the previous round. Weights are
    rescaled to mean 1, which leaves the minimizer unchanged and keeps the
    ADMM thresholds on the same scale as plain BP.
    """
    if rounds < 1:
        raise InvalidArgumentError("rounds must be >= 1")
    if epsilon is not None and not epsilon > 0:
        raise InvalidArgumentError("epsilon must be positive")
    result = basis_pursuit(p, cfg)
    total = result.iterations
    for _ in range(rounds - 1):
        prev = result.theta_hat.coeffs
        peak = float(np.max(np.abs(prev)))
        if peak == 0.0:
            break
        eps = 0.1 * peak if epsilon is None else epsilon
        weights = 1.0 / (np.abs(prev) + eps)
        weights /= weights.mean()
        result = _weighted_bp(p, cfg, weights=weights, z0=prev)
        total += result.iterations
    if rounds == 1:
        return result
    return RecoveryResult(
        theta_hat=result.theta_hat,
        status=result.status,
        iterations=total,
        primal_residual=result.primal_residual,
        dual_residual=result.dual_residual,
        objective=result.objective,
    )


def omp(p: RecoveryProblem, k_max: int, cfg: SolverConfig = SolverConfig()) -> RecoveryResult:
    """Orthogonal Matching Pursuit.

    Each step picks the column with the largest normalized correlation with
    the residual (lowest index on ties) and re-fits ``y`` by least squares on
    all selected columns. Stops after ``k_max`` picks, once the residual norm
    is at most ``abs_tol + rel_tol * ||y||``, or if an already-selected column
    would be picked again.
    """
    A, y = p.A, p.y
    m, n = A.shape
    if not 1 <= k_max <= m:
        raise InvalidArgumentError(f"k_max must satisfy 1 <= k_max <= m={m}, got {k_max}")
    norms = np.linalg.norm(A, axis=0)
    scaled = np.divide(A, norms, out=np.zeros_like(A), where=norms > 0)
    tol = _feasibility_tol(p, cfg)

    selected: list[int] = []
    coef = np.zeros(0)
    residual = y.copy()
    res_norm = float(np.linalg.norm(residual))
    status = MAX_ITERS if res_norm > tol else CONVERGED
    while status == MAX_ITERS and len(selected) < k_max:
        j = int(np.argmax(np.abs(scaled.T @ residual)))
        if j in selected:
            status = CONVERGED
            break
        selected.append(j)
        coef, *_ = np.linalg.lstsq(A[:, selected], y, rcond=None)
        residual = y - A[:, selected] @ coef
        res_norm = float(np.linalg.norm(residual))
        if res_norm <= tol:
            status = CONVERGED

    theta = np.zeros(n)
    theta[selected] = coef
    return RecoveryResult(
        theta_hat=CoefficientVector(theta),
        status=status,
        iterations=len(selected),
        primal_residual=res_norm,
        dual_residual=0.0,
        objective=float(np.count_nonzero(np.abs(theta) > cfg.support_tol)),
    )


def l0_oracle(
    p: RecoveryProblem,
    k: int,
    cfg: SolverConfig = SolverConfig(),
    budget: int = SUPPORT_BUDGET,
) -> RecoveryResult:
    """Exhaustive search over all size-``k`` supports for the best least-squares fit.

    Supports are visited in lexicographic order and a later one replaces the
    incumbent only if its residual is smaller by more than rounding noise, so
    ties resolve to the lexicographically smallest support.

    Raises
    ------
    InstanceTooLargeError
        If ``C(n, k)`` exceeds ``budget``.
    """
    A, y = p.A, p.y
    m, n = A.shape
    if not 1 <= k <= m:
        raise InvalidArgumentError(f"k must satisfy 1 <= k <= m={m}, got {k}")
    count = math.comb(n, k)
    if count > budget:
        raise InstanceTooLargeError(f"C({n},{k}) = {count} supports exceeds budget {budget}")

    tie = 64 * np.finfo(float).eps * max(1.0, float(np.linalg.norm(y)))
    best_res = math.inf
    best_support: tuple = ()
    best_coef = np.zeros(k)
    combos = itertools.combinations(range(n), k)
    while True:
        chunk = np.array(list(itertools.islice(combos, 2048)), dtype=np.intp)
        if chunk.size == 0:
            break
        sub = A[:, chunk].transpose(1, 0, 2)  # (batch, m, k)
        Qs, Rs = np.linalg.qr(sub)
        diag = np.abs(np.diagonal(Rs, axis1=1, axis2=2))
        scale = np.maximum(np.max(diag, axis=1), np.finfo(float).tiny)
        full_rank = np.all(diag > 1e-12 * scale[:, None], axis=1)
        qty = np.einsum("bmk,m->bk", Qs, y)
        res = np.linalg.norm(y[None, :] - np.einsum("bmk,bk->bm", Qs, qty), axis=1)
        for b in np.flatnonzero(~full_rank):
            # reduced QR overstates the span of a rank-deficient block
            coef_b, *_ = np.linalg.lstsq(sub[b], y, rcond=None)
            res[b] = np.linalg.norm(y - sub[b] @ coef_b)
        lowest = float(res.min())
        if lowest < best_res - tie:
            b = int(np.flatnonzero(res <= lowest + tie)[0])
            best_res = float(res[b])
            best_support = tuple(chunk[b])
            if full_rank[b]:
                best_coef = linalg.solve_triangular(Rs[b], qty[b])
            else:
                best_coef, *_ = np.linalg.lstsq(sub[b], y, rcond=None)

    theta = np.zeros(n)
    theta[list(best_support)] = best_coef
    residual = float(np.linalg.norm(A @ theta - y))
    return RecoveryResult(
        theta_hat=CoefficientVector(theta),
        status=CONVERGED if residual <= cfg.abs_tol else INFEASIBLE,
        iterations=count,
        primal_residual=residual,
        dual_residual=0.0,
        objective=float(np.count_nonzero(np.abs(theta) > cfg.support_tol)),
    )
