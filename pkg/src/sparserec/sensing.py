"""Sensing matrices: generation, measurement, coherence and RIP analysis.

Binary layout used by :func:`save_matrix` / :func:`load_matrix`::

    offset  size  field
    0       4     magic b"CSMX"
    4       4     version (uint32 LE, currently 1)
    8       4     m       (uint32 LE)
    12      4     n       (uint32 LE)
    16      8*m*n row-major float64 LE entries
"""

from __future__ import annotations

import itertools
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from sparserec import rng as _rng
from sparserec.errors import FileFormatError, InstanceTooLargeError, InvalidArgumentError, InvalidInputError
from sparserec.transforms import Signal, dct_matrix

KINDS = ("gaussian", "bernoulli", "subsampled_orthobasis")

MAGIC = b"CSMX"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")

#: exhaustive paths refuse to enumerate more supports than this
SUPPORT_BUDGET = 10**6

UNIT_NORM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    """Dense ``m x n`` measurement operator plus the parameters that made it.

    ``kind`` is one of :data:`KINDS`, or ``"external"`` for matrices read
    from disk or wrapped by hand. ``scale`` is the entry standard deviation
    for the random kinds and is unused by ``subsampled_orthobasis``.
    """

    entries: np.ndarray
    kind: str = "external"
    seed: int = 0
    scale: float = 1.0

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float, copy=True)
        if arr.ndim != 2 or min(arr.shape) < 1:
            raise InvalidInputError(f"sensing matrix must be 2-D and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("sensing matrix has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def shape(self) -> tuple:
        return self.entries.shape

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True, eq=False)
class MeasurementVector:
    values: np.ndarray

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class CoherenceResult:
    mu: float
    argmax_pair: tuple


@dataclass(frozen=True)
class RipEstimate:
    """Monte-Carlo lower bound on the restricted isometry constant."""

    k: int
    delta_lower: float
    trials: int
    seed: int


def _matrix(phi) -> np.ndarray:
    return phi.entries if isinstance(phi, SensingMatrix) else np.asarray(phi, dtype=float)


def generate_matrix(kind: str, m: int, n: int, seed: int, scale: float = 1.0) -> SensingMatrix:
    """Draw a seeded sensing matrix.

    ``gaussian`` entries are N(0, scale**2); ``bernoulli`` entries are
    ``+-scale``; ``subsampled_orthobasis`` keeps ``m`` distinct rows of the
    orthonormal DCT analysis matrix, chosen uniformly without replacement and
    kept in ascending row order, multiplied by ``sqrt(n/m)``.
    """
    if kind not in KINDS:
        raise InvalidArgumentError(f"unknown matrix kind {kind!r}; expected one of {KINDS}")
    m, n = int(m), int(n)
    if m < 1 or n < 1:
        raise InvalidArgumentError("m and n must be positive")
    if m > n:
        raise InvalidArgumentError(f"sensing needs m <= n, got m={m}, n={n}")
    if not scale > 0:
        raise InvalidArgumentError(f"scale must be positive, got {scale}")
    seed = _rng.check_seed(seed)
    gen = _rng.make_rng(seed)

    if kind == "gaussian":
        entries = scale * _rng.normal(gen, (m, n))
    elif kind == "bernoulli":
        entries = scale * _rng.signs(gen, (m, n))
    else:
        rows = np.sort(_rng.permutation(gen, n)[:m])
        entries = dct_matrix(n)[rows] * math.sqrt(n / m)
    return SensingMatrix(entries, kind=kind, seed=seed, scale=float(scale))


def measure(phi: Union[SensingMatrix, np.ndarray], x: Union[Signal, np.ndarray]) -> MeasurementVector:
    """``y = Phi @ x``."""
    mat = _matrix(phi)
    samples = x.samples if isinstance(x, Signal) else np.asarray(x, dtype=float)
    if samples.ndim != 1 or samples.size != mat.shape[1]:
        raise InvalidArgumentError(f"signal length {samples.size} does not match matrix with n={mat.shape[1]}")
    return MeasurementVector(mat @ samples)


def _check_unit(vectors: np.ndarray, axis: int, label: str) -> None:
    norms = np.linalg.norm(vectors, axis=axis)
    bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
    if bad.size:
        i = int(bad[0])
        raise InvalidArgumentError(f"{label} {i} is not unit norm (norm={norms[i]:.12g})")


def _argmax_pair(gram: np.ndarray) -> tuple:
    # np.argmax on the flattened array returns the first maximum in row-major order
    flat = int(np.argmax(np.abs(gram)))
    return divmod(flat, gram.shape[1])


def mutual_coherence(phi, psi) -> CoherenceResult:
    """``sqrt(n) * max |<phi_k, psi_j>|`` over sensing rows and basis columns.

    ``phi`` supplies the sensing vectors as rows, ``psi`` the representation
    vectors as columns (so ``psi`` is a synthesis matrix). Both must be
    ``n x n`` with unit-norm rows / columns respectively.
    """
    a = _matrix(phi)
    b = _matrix(psi)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape != a.shape:
        raise InvalidArgumentError(f"coherence needs two n x n bases, got {a.shape} and {b.shape}")
    _check_unit(a, 1, "sensing row")
    _check_unit(b, 0, "basis column")
    gram = a @ b
    i, j = _argmax_pair(gram)
    return CoherenceResult(mu=float(math.sqrt(a.shape[1]) * abs(gram[i, j])), argmax_pair=(i, j))


def coherence_rectangular(phi, psi) -> CoherenceResult:
    """Coherence of ``m x n`` sensing rows against an ``n x n`` basis.

    Rows of ``phi`` and columns of ``psi`` are normalized first. The
    ``sqrt(n)`` upper bound still holds; the lower bound of 1 does not, since
    ``m < n`` rows need not span the space.
    """
    a = _matrix(phi)
    b = _matrix(psi)
    if a.shape[1] != b.shape[0]:
        raise InvalidArgumentError(f"shape mismatch: {a.shape} rows vs basis {b.shape}")
    an = a / np.linalg.norm(a, axis=1, keepdims=True)
    bn = b / np.linalg.norm(b, axis=0, keepdims=True)
    gram = an @ bn
    i, j = _argmax_pair(gram)
    return CoherenceResult(mu=float(math.sqrt(a.shape[1]) * abs(gram[i, j])), argmax_pair=(i, j))


def estimate_rip(phi, k: int, trials: int, seed: int, canonical: bool = False) -> RipEstimate:
    """Monte-Carlo lower bound on ``delta_k``.

    Trial ``i`` draws, from its own stream derived from ``(seed, i)``, a
    uniformly random support of size ``k`` and a unit-norm vector on it
    (Gaussian direction, or a signed canonical vector when ``canonical`` is
    set and ``k == 1``), and records ``| ||Phi x||^2 - 1 |``. The running max
    over trials is returned, so extending ``trials`` never lowers it.
    """
    mat = _matrix(phi)
    m, n = mat.shape
    if not 1 <= k <= m:
        raise InvalidArgumentError(f"RIP order must satisfy 1 <= k <= m={m}, got {k}")
    if trials < 1:
        raise InvalidArgumentError("trials must be positive")
    if canonical and k != 1:
        raise InvalidArgumentError("canonical-vector trials require k == 1")
    seed = _rng.check_seed(seed)

    delta = 0.0
    for t in range(int(trials)):
        gen = _rng.make_rng(seed, t)
        support = _rng.permutation(gen, n)[:k]
        if canonical:
            coef = _rng.signs(gen, 1)
        else:
            coef = _rng.normal(gen, k)
            coef /= np.linalg.norm(coef)
        energy = float(np.sum((mat[:, support] @ coef) ** 2))
        delta = max(delta, abs(energy - 1.0))
    return RipEstimate(k=int(k), delta_lower=delta, trials=int(trials), seed=seed)


def exact_rip(phi, k: int, budget: int = SUPPORT_BUDGET) -> float:
    """Exact ``delta_k`` from extremal singular values over every k-column submatrix."""
    mat = _matrix(phi)
    m, n = mat.shape
    if not 1 <= k <= m:
        raise InvalidArgumentError(f"RIP order must satisfy 1 <= k <= m={m}, got {k}")
    count = math.comb(n, k)
    if count > budget:
        raise InstanceTooLargeError(f"C({n},{k}) = {count} supports exceeds budget {budget}")

    delta = 0.0
    combos = itertools.combinations(range(n), k)
    while True:
        chunk = np.array(list(itertools.islice(combos, 4096)), dtype=np.intp)
        if chunk.size == 0:
            break
        sub = mat[:, chunk].transpose(1, 0, 2)  # (batch, m, k)
        sv = np.linalg.svd(sub, compute_uv=False)
        delta = max(delta, float(np.max(sv[:, 0] ** 2 - 1.0)), float(np.max(1.0 - sv[:, -1] ** 2)))
    return delta


def measurement_bound(mu: float, k: int, n: int, c: float = 1.0) -> int:
    """Measurement count ``ceil(c * mu**2 * k * ln n)`` for incoherent sampling."""
    if mu < 1:
        raise InvalidArgumentError(f"mu must be >= 1, got {mu}")
    if not 1 <= k <= n:
        raise InvalidArgumentError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not c > 0:
        raise InvalidArgumentError("c must be positive")
    return int(math.ceil(c * mu * mu * k * math.log(n)))


def save_matrix(phi, path: Union[str, Path]) -> None:
    mat = np.ascontiguousarray(_matrix(phi), dtype="<f8")
    m, n = mat.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, m, n))
        fh.write(mat.tobytes(order="C"))


def load_matrix(path: Union[str, Path]) -> SensingMatrix:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FileFormatError(f"{path}: truncated matrix header")
    magic, version, m, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FileFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise FileFormatError(f"{path}: unsupported matrix format version {version}")
    expected = _HEADER.size + 8 * m * n
    if len(data) != expected:
        raise FileFormatError(f"{path}: expected {expected} bytes for a {m}x{n} matrix, found {len(data)}")
    entries = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(m, n)
    return SensingMatrix(entries.astype(float), kind="external")
