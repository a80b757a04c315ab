"""Dense complex-matrix kernels.

Everything above this module talks to numpy arrays of complex dtype. The
Hermitian eigensolver is a cyclic Jacobi sweep so that results are
reproducible bit for bit; the remaining kernels are thin wrappers that add
the tolerance conventions used across the app.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .conf import pick
from .exceptions import InvalidMatrix, NearSingular, NoConvergence, NotPSD

logger = logging.getLogger(__name__)

MAX_SWEEPS = 60
EPS = np.finfo(float).eps
TINY = np.finfo(float).tiny
PSD_CLAMP = 1e-10


def as_matrix(value) -> np.ndarray:
    """Return a fresh complex 2-d array, rejecting NaN/Inf."""
    matrix = np.array(value, dtype=complex)
    if matrix.ndim != 2:
        raise InvalidMatrix(f'expected a matrix, got an array of dimension {matrix.ndim}')
    if not np.all(np.isfinite(matrix)):
        raise InvalidMatrix('matrix has non-finite entries')
    return matrix


def as_square(value) -> np.ndarray:
    matrix = as_matrix(value)
    if matrix.shape[0] != matrix.shape[1]:
        raise InvalidMatrix(f'expected a square matrix, got shape {matrix.shape}')
    return matrix


def adjoint(matrix: np.ndarray) -> np.ndarray:
    return matrix.conj().T


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return (matrix + adjoint(matrix)) / 2


def norm2(matrix: np.ndarray) -> float:
    """Spectral norm that tolerates empty matrices."""
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.norm(matrix, 2))


def hermitian(value, tol: float | None = None) -> np.ndarray:
    """Validate ``value`` as Hermitian within SYMMETRY_TOL and return (A + A*)/2."""
    matrix = as_square(value)
    tol = pick(tol, 'SYMMETRY_TOL')
    skew = norm2(matrix - adjoint(matrix))
    if skew > tol * max(1.0, norm2(matrix)):
        raise InvalidMatrix(f'matrix is not Hermitian (||A - A*|| = {skew:.3e})')
    return symmetrize(matrix)


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.eigenvalues) @ adjoint(self.vectors)

    def __len__(self) -> int:
        return len(self.eigenvalues)


def _off_diagonal_norm(work: np.ndarray) -> float:
    return float(np.linalg.norm(work - np.diag(np.diag(work))))


def _rotate(work: np.ndarray, vectors: np.ndarray, p: int, q: int) -> bool:
    """Zero work[p, q] with a complex Jacobi rotation, updating work and vectors in place.

    Returns False when the entry is already negligible next to its diagonal.
    """
    b = work[p, q]
    modulus = abs(b)
    app, aqq = work[p, p].real, work[q, q].real
    if modulus < TINY or modulus <= EPS * np.sqrt(abs(app * aqq)):
        work[p, q] = work[q, p] = 0.0
        return False
    phase = np.exp(1j * np.angle(b))
    diff = aqq - app
    theta = diff / (2.0 * modulus)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    rotation = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)
    pair = [p, q]
    work[:, pair] = work[:, pair] @ rotation
    work[pair, :] = adjoint(rotation) @ work[pair, :]
    vectors[:, pair] = vectors[:, pair] @ rotation
    work[p, q] = work[q, p] = 0.0
    work[p, p] = work[p, p].real
    work[q, q] = work[q, q].real
    return True


def _normalize_phases(vectors: np.ndarray) -> np.ndarray:
    for column in range(vectors.shape[1]):
        v = vectors[:, column]
        k = int(np.argmax(np.abs(v)))
        if abs(v[k]) > 0:
            vectors[:, column] = v * (np.conj(v[k]) / abs(v[k]))
            vectors[k, column] = abs(v[k])
    return vectors


def eigh(value) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Eigenvalues come back ascending (stable order for ties) and every
    eigenvector has its first largest-modulus component real and
    nonnegative.
    """
    work = symmetrize(as_square(value))
    n = work.shape[0]
    vectors = np.eye(n, dtype=complex)
    if n == 0:
        return EigenDecomposition(np.zeros(0), vectors)

    scale = float(np.linalg.norm(work))
    target = EPS * scale
    off = _off_diagonal_norm(work)
    sweeps = 0
    while off > target and sweeps < MAX_SWEEPS:
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                rotated = _rotate(work, vectors, p, q) or rotated
        sweeps += 1
        off = _off_diagonal_norm(work)
        if not rotated:
            break
    if off > np.sqrt(EPS) * scale:
        raise NoConvergence(f'Jacobi sweeps did not converge (off-diagonal norm {off:.3e})')
    logger.debug('eigh: n=%d converged in %d sweeps (off=%.2e)', n, sweeps, off)

    eigenvalues = np.diag(work).real.copy()
    order = np.argsort(eigenvalues, kind='stable')
    return EigenDecomposition(eigenvalues[order], _normalize_phases(vectors[:, order]))


def _psd_scale(decomposition: EigenDecomposition) -> float:
    if len(decomposition) == 0:
        return 1.0
    return max(1.0, float(np.max(np.abs(decomposition.eigenvalues))))


def _clamped_eigenvalues(decomposition: EigenDecomposition) -> np.ndarray:
    values = decomposition.eigenvalues
    if len(values) and values[0] < -PSD_CLAMP * _psd_scale(decomposition):
        raise NotPSD(f'matrix is not PSD (smallest eigenvalue {values[0]:.3e})')
    return np.clip(values, 0.0, None)


def psd_sqrt(value) -> np.ndarray:
    """Positive square root; eigenvalues slightly below zero are clamped."""
    decomposition = eigh(value)
    roots = np.sqrt(_clamped_eigenvalues(decomposition))
    vectors = decomposition.vectors
    return symmetrize((vectors * roots) @ adjoint(vectors))


def pinv(value, rtol: float | None = None) -> np.ndarray:
    """Moore-Penrose inverse with singular values below rtol * sigma_max treated as zero."""
    matrix = as_matrix(value)
    rows, cols = matrix.shape
    if matrix.size == 0:
        return np.zeros((cols, rows), dtype=complex)
    rtol = pick(rtol, 'RTOL')
    u, sigma, vh = np.linalg.svd(matrix, full_matrices=False)
    if sigma[0] == 0.0:
        return np.zeros((cols, rows), dtype=complex)
    keep = sigma > rtol * sigma[0]
    inverse = np.zeros_like(sigma)
    inverse[keep] = 1.0 / sigma[keep]
    return (adjoint(vh) * inverse) @ adjoint(u)


def _kept_indices(decomposition: EigenDecomposition, cutoff: float) -> np.ndarray:
    values = _clamped_eigenvalues(decomposition)
    if len(values) == 0:
        return np.zeros(0, dtype=int)
    return np.flatnonzero(values > cutoff)[::-1]


def range_embed(value, rtol: float | None = None) -> np.ndarray:
    """Isometric embedding onto the numerical range of a PSD matrix.

    Columns are eigenvectors ordered by descending eigenvalue. Eigenvalues
    at or below rtol * lambda_max are dropped.
    """
    decomposition = eigh(value)
    largest = float(decomposition.eigenvalues[-1]) if len(decomposition) else 0.0
    keep = _kept_indices(decomposition, pick(rtol, 'RTOL') * max(largest, 0.0))
    return decomposition.vectors[:, keep]


def opnorm(value) -> float:
    """Largest singular value, from the eigenvalues of the smaller Gram matrix."""
    matrix = as_matrix(value)
    if matrix.size == 0:
        return 0.0
    rows, cols = matrix.shape
    gram = adjoint(matrix) @ matrix if cols <= rows else matrix @ adjoint(matrix)
    return float(np.sqrt(max(eigh(gram).eigenvalues[-1], 0.0)))


@dataclass(frozen=True)
class DefectSpace:
    """Range of the defect operator D_X = (I - X*X)^(1/2) in eigen-coordinates.

    ``embedding`` is the isometry E onto ran D_X and ``values`` the matching
    eigenvalues of D_X, so that D_X E = E diag(values).
    """

    embedding: np.ndarray
    values: np.ndarray

    @property
    def rank(self) -> int:
        return self.embedding.shape[1]

    @property
    def ambient(self) -> int:
        return self.embedding.shape[0]

    def operator(self) -> np.ndarray:
        return (self.embedding * self.values) @ adjoint(self.embedding)

    def to_coordinates(self) -> np.ndarray:
        """D_X as a map from the ambient space into defect coordinates."""
        return self.values[:, None] * adjoint(self.embedding)

    def from_coordinates(self) -> np.ndarray:
        """D_X as a map from defect coordinates into the ambient space."""
        return self.embedding * self.values

    def restrict(self, matrix: np.ndarray) -> np.ndarray:
        return adjoint(self.embedding) @ matrix @ self.embedding

    def divide(self, matrix: np.ndarray) -> np.ndarray:
        """diag(values)^-1 @ matrix, the restricted inverse of D_X acting from the left."""
        return matrix / self.values[:, None]


def defect_operator(value) -> np.ndarray:
    matrix = as_matrix(value)
    cols = matrix.shape[1]
    return psd_sqrt(np.eye(cols) - adjoint(matrix) @ matrix)


def defect_space(value, rtol: float | None = None) -> DefectSpace:
    """DefectSpace of a contraction, read off the eigenvalues of I - X*X.

    Working from I - X*X rather than its square root keeps the rank decision
    on the unamplified eigenvalues. I - X*X never exceeds I, so the cutoff is
    rtol itself.
    """
    matrix = as_matrix(value)
    cols = matrix.shape[1]
    decomposition = eigh(np.eye(cols) - adjoint(matrix) @ matrix)
    keep = _kept_indices(decomposition, pick(rtol, 'RTOL'))
    values = np.sqrt(np.clip(decomposition.eigenvalues[keep], 0.0, None))
    return DefectSpace(decomposition.vectors[:, keep], values)


def _check_condition(matrix: np.ndarray, what: str) -> None:
    limit = pick(None, 'COND_LIMIT')
    condition = np.linalg.cond(matrix)
    if not np.isfinite(condition) or condition > limit:
        raise NearSingular(f'{what} is near-singular (condition number {condition:.3e})')


def solve(matrix, rhs, what: str = 'matrix') -> np.ndarray:
    """matrix^-1 @ rhs with a condition-number guard."""
    matrix = np.asarray(matrix, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if matrix.shape[0] == 0:
        return np.zeros(rhs.shape, dtype=complex)
    _check_condition(matrix, what)
    return np.linalg.solve(matrix, rhs)


def right_divide(lhs, matrix, what: str = 'matrix') -> np.ndarray:
    return adjoint(solve(adjoint(np.asarray(matrix, dtype=complex)), adjoint(np.asarray(lhs, dtype=complex)), what))


def inv(matrix, what: str = 'matrix') -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    return solve(matrix, np.eye(matrix.shape[0], dtype=complex), what)
