"""Passive discrete-time systems and their transfer functions.

A system is a contraction T = [[D, C], [B, A]] on M + K, where M is the
input/output space of dimension ``dim_input`` and K the state space. The
transfer function is Omega(z) = D + z C (I - z A)^-1 B.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import grids, numkit
from .conf import pick
from .exceptions import (
    DimensionMismatch,
    InvalidMatrix,
    MinimalityRequired,
    NotContraction,
    NotSelfadjoint,
    OutsideCutPlane,
)

logger = logging.getLogger(__name__)

SIMILARITY_TOL = 1e-8


@dataclass(frozen=True)
class PassiveSystem:
    """Block operator of a passive system.

    Instances built directly skip validation; use ``validate_passive`` for
    anything that comes from outside the library.
    """

    matrix: np.ndarray
    dim_input: int
    selfadjoint: bool = False

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        matrix.flags.writeable = False
        object.__setattr__(self, 'matrix', matrix)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim_state(self) -> int:
        return self.size - self.dim_input

    @property
    def D(self) -> np.ndarray:
        m = self.dim_input
        return self.matrix[:m, :m].copy()

    @property
    def C(self) -> np.ndarray:
        m = self.dim_input
        return self.matrix[:m, m:].copy()

    @property
    def B(self) -> np.ndarray:
        m = self.dim_input
        return self.matrix[m:, :m].copy()

    @property
    def A(self) -> np.ndarray:
        m = self.dim_input
        return self.matrix[m:, m:].copy()

    def __repr__(self) -> str:  # pragma: no cover - trivial
        kind = 'selfadjoint' if self.selfadjoint else 'general'
        return f'PassiveSystem(m={self.dim_input}, n={self.dim_state}, {kind})'


def from_blocks(D, C, B, A, selfadjoint: bool = False) -> PassiveSystem:
    D = np.atleast_2d(np.asarray(D, dtype=complex))
    m = D.shape[0]
    A = np.asarray(A, dtype=complex)
    n = A.shape[0] if A.size else 0
    A = A.reshape(n, n)
    C = np.asarray(C, dtype=complex).reshape(m, n)
    B = np.asarray(B, dtype=complex).reshape(n, m)
    return PassiveSystem(np.block([[D, C], [B, A]]), m, selfadjoint)


def validate_passive(matrix, dim_input: int, require_selfadjoint: bool = False) -> PassiveSystem:
    T = numkit.as_square(matrix)
    if not 0 <= dim_input <= T.shape[0]:
        raise InvalidMatrix(f'input dimension {dim_input} does not fit a {T.shape[0]}x{T.shape[0]} matrix')
    norm = numkit.opnorm(T)
    if norm > 1 + pick(None, 'CONTRACTION_TOL'):
        raise NotContraction(f'not a contraction (||T|| = {norm:.12g})')
    if require_selfadjoint:
        skew = numkit.norm2(T - numkit.adjoint(T))
        if skew > pick(None, 'SYMMETRY_TOL') * max(1.0, norm):
            raise NotSelfadjoint(f'not selfadjoint (||T - T*|| = {skew:.3e})')
        T = numkit.symmetrize(T)
    return PassiveSystem(T, dim_input, require_selfadjoint)


def require_selfadjoint(sys: PassiveSystem, what: str) -> None:
    if not sys.selfadjoint:
        raise NotSelfadjoint(f'{what} requires a selfadjoint system')


def check_cut_plane(z) -> complex:
    """Return z as a complex number, rejecting the cuts (-inf, -1] and [1, inf)."""
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise OutsideCutPlane(f'{z} is not a finite point')
    if z.imag == 0.0 and abs(z.real) >= 1.0:
        raise OutsideCutPlane(f'{z} lies on a cut of the plane')
    return z


def check_off_interval(xi) -> complex:
    """Return xi as a complex number, rejecting points of [-1, 1]."""
    xi = complex(xi)
    if not (np.isfinite(xi.real) and np.isfinite(xi.imag)):
        raise OutsideCutPlane(f'{xi} is not a finite point')
    if xi.imag == 0.0 and abs(xi.real) <= 1.0:
        raise OutsideCutPlane(f'{xi} lies on [-1, 1]')
    return xi


def _state_resolvent(sys: PassiveSystem, z: complex, rhs: np.ndarray) -> np.ndarray:
    n = sys.dim_state
    return numkit.solve(np.eye(n) - z * sys.A, rhs, 'resolvent (I - zA)')


def transfer(sys: PassiveSystem, z) -> np.ndarray:
    z = check_cut_plane(z)
    if sys.dim_state == 0:
        return sys.D
    return sys.D + z * (sys.C @ _state_resolvent(sys, z, sys.B))


def transfer_derivative(sys: PassiveSystem, z) -> np.ndarray:
    """Omega'(z) = C (I - zA)^-2 B."""
    z = check_cut_plane(z)
    m = sys.dim_input
    if sys.dim_state == 0:
        return np.zeros((m, m), dtype=complex)
    once = _state_resolvent(sys, z, sys.B)
    return sys.C @ _state_resolvent(sys, z, once)


def compressed_resolvent(matrix, dim_input: int, xi) -> np.ndarray:
    """M(xi) = P_M (T - xi I)^-1 restricted to M, for a selfadjoint contraction T."""
    T = numkit.hermitian(matrix)
    xi = check_off_interval(xi)
    norm = numkit.opnorm(T)
    if norm > 1 + pick(None, 'CONTRACTION_TOL'):
        raise NotContraction(f'not a contraction (||T|| = {norm:.12g})')
    size = T.shape[0]
    columns = np.eye(size, dtype=complex)[:, :dim_input]
    return numkit.solve(T - xi * np.eye(size), columns, 'resolvent (T - xi I)')[:dim_input]


def schur_frobenius_residual(sys: PassiveSystem, z) -> float:
    """|| P_M (I - zT)^-1|_M (I - z Omega(z)) - I ||."""
    z = check_cut_plane(z)
    m, size = sys.dim_input, sys.size
    compressed = numkit.solve(np.eye(size) - z * sys.matrix, np.eye(size)[:, :m], 'I - zT')[:m]
    product = compressed @ (np.eye(m) - z * transfer(sys, z))
    return numkit.norm2(product - np.eye(m))


def transfer_gap(lhs: Callable[[complex], np.ndarray], rhs: Callable[[complex], np.ndarray], points: Iterable[complex]) -> float:
    return max((numkit.norm2(lhs(z) - rhs(z)) for z in points), default=0.0)


@dataclass(frozen=True)
class KrylovReport:
    controllable_dim: int
    observable_dim: int
    dim_state: int
    simple: bool
    ambiguous: bool
    smallest_direction: float | None = None

    @property
    def minimal(self) -> bool:
        return self.controllable_dim == self.dim_state and self.observable_dim == self.dim_state


@dataclass
class _KrylovBasis:
    basis: np.ndarray
    norms: list[float] = field(default_factory=list)
    margins: list[float] = field(default_factory=list)
    mirror: np.ndarray | None = None


def _kept_directions(values: np.ndarray, rtol: float, floor: float) -> np.ndarray:
    """Gram eigenvalues (descending) above max(rtol * lambda_max, floor)."""
    if len(values) == 0:
        return np.zeros(0, dtype=bool)
    return values > max(rtol * values[0], floor)


def _block_krylov(
    A: np.ndarray,
    B: np.ndarray,
    rtol: float,
    floor: float,
    mirror: tuple[np.ndarray, np.ndarray] | None = None,
) -> _KrylovBasis:
    """Orthonormal basis of span{A^k B}, built block by block with full reorthogonalization.

    ``mirror`` replays every projection and every new direction, using the
    coefficients of (A, B), on a second pair (A2, B2). When the two pairs
    have matching moments the mirrored vectors are orthonormal as well.
    """
    n = A.shape[0]
    basis = np.zeros((n, 0), dtype=complex)
    block = B
    result = _KrylovBasis(basis)
    mirror_basis = mirror_block = None
    if mirror is not None:
        mirror_basis = np.zeros((n, 0), dtype=complex)
        mirror_block = mirror[1]

    while block.shape[1] and basis.shape[1] < n:
        for _ in range(2):
            coefficients = numkit.adjoint(basis) @ block
            block = block - basis @ coefficients
            if mirror is not None:
                mirror_block = mirror_block - mirror_basis @ coefficients
        decomposition = numkit.eigh(numkit.adjoint(block) @ block)
        values = np.clip(decomposition.eigenvalues, 0.0, None)[::-1]
        vectors = decomposition.vectors[:, ::-1]
        keep = _kept_directions(values, rtol, floor)
        # the state space holds at most n directions
        keep[n - basis.shape[1]:] = False
        threshold = max(rtol * values[0], floor) if len(values) else floor
        result.norms.extend(float(np.sqrt(v)) for v in values[keep])
        if threshold > 0:
            result.margins.extend(float(v / threshold) for v in values)
        if not keep.any():
            break
        directions = vectors[:, keep] / np.sqrt(values[keep])
        fresh = block @ directions
        basis = np.hstack([basis, fresh])
        block = A @ fresh
        if mirror is not None:
            fresh_mirror = mirror_block @ directions
            mirror_basis = np.hstack([mirror_basis, fresh_mirror])
            mirror_block = mirror[0] @ fresh_mirror

    result.basis = basis
    result.mirror = mirror_basis
    return result


def _krylov_floor(sys: PassiveSystem, rtol: float) -> float:
    # absolute floor for blocks that are pure rounding noise
    return (rtol * max(1.0, numkit.norm2(sys.matrix))) ** 2


def _rank(columns: np.ndarray, rtol: float, floor: float) -> int:
    if columns.size == 0:
        return 0
    values = numkit.eigh(numkit.adjoint(columns) @ columns).eigenvalues[::-1]
    return int(np.count_nonzero(_kept_directions(np.clip(values, 0.0, None), rtol, floor)))


def krylov_analysis(sys: PassiveSystem, rtol: float | None = None) -> KrylovReport:
    """Dimensions of the controllable and observable subspaces.

    The subspaces are span{A^k B M} and span{A*^k C* M}; the system is
    minimal when both fill the state space and simple when their sum does.
    A direction counts when its Gram eigenvalue exceeds rtol times the
    largest one in its block.
    """
    rtol = pick(rtol, 'RTOL')
    n = sys.dim_state
    floor = _krylov_floor(sys, rtol)
    controllable = _block_krylov(sys.A, sys.B, rtol, floor)
    if sys.selfadjoint:
        observable = controllable
    else:
        observable = _block_krylov(numkit.adjoint(sys.A), numkit.adjoint(sys.C), rtol, floor)
    c_dim = controllable.basis.shape[1]
    o_dim = observable.basis.shape[1]
    if max(c_dim, o_dim) == n:
        simple = True
    else:
        simple = _rank(np.hstack([controllable.basis, observable.basis]), rtol, floor) == n

    near = [m for m in controllable.margins + observable.margins if 0.1 <= m <= 10]
    kept = controllable.norms + observable.norms
    if near:
        logger.warning('Krylov directions within a factor 10 of the rank cutoff: %s', near)
    logger.debug('krylov_analysis: n=%d controllable=%d observable=%d', n, c_dim, o_dim)
    return KrylovReport(
        controllable_dim=c_dim,
        observable_dim=o_dim,
        dim_state=n,
        simple=simple,
        ambiguous=bool(near),
        smallest_direction=min(kept) if kept else None,
    )


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray
    outputs: np.ndarray
    inputs: np.ndarray
    energy_defect: np.ndarray

    @property
    def steps(self) -> int:
        return self.inputs.shape[0]

    @property
    def min_energy_defect(self) -> float:
        return float(self.energy_defect.min()) if self.energy_defect.size else 0.0


def simulate(sys: PassiveSystem, h0, inputs: Sequence) -> Trajectory:
    """Run h_{k+1} = A h_k + B xi_k, sigma_k = C h_k + D xi_k.

    energy_defect[k] = |h_k|^2 + |xi_k|^2 - |h_{k+1}|^2 - |sigma_k|^2, which a
    passive system keeps nonnegative up to rounding.
    """
    m, n = sys.dim_input, sys.dim_state
    state = np.asarray(h0, dtype=complex).reshape(-1)
    if state.shape[0] != n:
        raise DimensionMismatch(f'initial state has length {state.shape[0]}, expected {n}')
    xs = np.asarray(inputs, dtype=complex).reshape(len(inputs), -1) if len(inputs) else np.zeros((0, m), dtype=complex)
    if xs.shape[1] != m:
        raise DimensionMismatch(f'inputs have length {xs.shape[1]}, expected {m}')

    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    states = [state]
    outputs = []
    defects = []
    for xi in xs:
        output = C @ state + D @ xi
        following = A @ state + B @ xi
        defects.append(
            np.vdot(state, state).real + np.vdot(xi, xi).real
            - np.vdot(following, following).real - np.vdot(output, output).real
        )
        outputs.append(output)
        states.append(following)
        state = following
    return Trajectory(
        states=np.array(states).reshape(len(states), n),
        outputs=np.array(outputs).reshape(len(outputs), m),
        inputs=xs,
        energy_defect=np.array(defects, dtype=float),
    )


def conjugate_state(sys: PassiveSystem, unitary) -> PassiveSystem:
    """The system with state space rotated by ``unitary``: T -> (I + U) T (I + U*)."""
    U = np.asarray(unitary, dtype=complex)
    m = sys.dim_input
    frame = np.block([
        [np.eye(m), np.zeros((m, U.shape[0]))],
        [np.zeros((U.shape[0], m)), U],
    ])
    return PassiveSystem(frame @ sys.matrix @ numkit.adjoint(frame), m, sys.selfadjoint)


def unitary_similarity(sys1: PassiveSystem, sys2: PassiveSystem, rtol: float | None = None) -> np.ndarray | None:
    """Unitary U with A2 = U A1 U*, B2 = U B1, C2 = C1 U*, D2 = D1, or None.

    Both systems must be minimal and selfadjoint. U maps the Krylov basis of
    the first system onto the basis built for the second with the same
    coefficients; it is returned only after all four relations check out.
    """
    for sys in (sys1, sys2):
        require_selfadjoint(sys, 'unitary similarity')
    if sys1.dim_input != sys2.dim_input:
        raise DimensionMismatch(f'input dimensions differ ({sys1.dim_input} vs {sys2.dim_input})')
    for sys in (sys1, sys2):
        if not krylov_analysis(sys).minimal:
            raise MinimalityRequired('unitary similarity requires minimal systems')

    rtol = pick(rtol, 'MATCH_TOL')
    gap = transfer_gap(lambda z: transfer(sys1, z), lambda z: transfer(sys2, z), grids.sample_grid())
    if gap > rtol:
        logger.debug('unitary_similarity: transfer functions differ by %.3e', gap)
        return None
    if sys1.dim_state != sys2.dim_state:
        return None

    rank_tol = pick(None, 'RTOL')
    matched = _block_krylov(sys1.A, sys1.B, rank_tol, _krylov_floor(sys1, rank_tol), mirror=(sys2.A, sys2.B))
    if matched.basis.shape[1] != sys1.dim_state:
        return None
    U = matched.mirror @ numkit.adjoint(matched.basis)

    n = sys1.dim_state
    residual = max(
        numkit.norm2(numkit.adjoint(U) @ U - np.eye(n)),
        numkit.norm2(sys2.A - U @ sys1.A @ numkit.adjoint(U)),
        numkit.norm2(sys2.B - U @ sys1.B),
        numkit.norm2(sys2.C - sys1.C @ numkit.adjoint(U)),
        numkit.norm2(sys2.D - sys1.D),
    )
    if residual > SIMILARITY_TOL:
        logger.warning('unitary_similarity: candidate failed verification (residual %.3e)', residual)
        return None
    return U


def beta_circle_bound(sys: PassiveSystem, beta: float, sign: int) -> float:
    """max ||Omega(z) sin(beta) + sign i cos(beta) I|| over points of the beta-circle."""
    m = sys.dim_input
    shift = sign * 1j * np.cos(beta) * np.eye(m)
    return max(numkit.norm2(transfer(sys, z) * np.sin(beta) + shift) for z in grids.beta_circle(beta, sign))


def derivative_inequality_min(sys: PassiveSystem) -> float:
    """Smallest eigenvalue of I - Omega(x)* Omega(x) - (1 - x^2) Omega'(x) over the real grid."""
    m = sys.dim_input
    if m == 0:
        return 0.0
    smallest = np.inf
    for x in grids.real_grid():
        omega = transfer(sys, x)
        value = np.eye(m) - numkit.adjoint(omega) @ omega - (1 - x * x) * transfer_derivative(sys, x)
        smallest = min(smallest, float(numkit.eigh(value).eigenvalues[0]))
    return smallest
