"""Transforms of realizable functions, each with an explicit realization.

Every ``*_realize`` here takes a selfadjoint passive system and returns a new
selfadjoint passive system whose transfer function is the transformed
function. ``*_value`` / ``*_eval`` helpers compute the same transform
pointwise so the two paths can be compared on sample grids.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import grids, numkit
from .conf import pick
from .exceptions import (
    DimensionMismatch,
    InfeasibleCoupler,
    InvalidMatrix,
    InvalidParameter,
    MinimalityRequired,
    NotContraction,
)
from .rsclass import NFunction, to_nfunction
from .systems import (
    PassiveSystem,
    check_cut_plane,
    check_off_interval,
    krylov_analysis,
    require_selfadjoint,
    transfer,
    transfer_gap,
    validate_passive,
)

logger = logging.getLogger(__name__)

# below this ||D|| counts as Omega(0) = 0 for coupler feasibility
ZERO_VALUE_TOL = 1e-10


def _check_a(a) -> float:
    a = float(a)
    if not -1.0 < a < 1.0:
        raise InvalidParameter(f'a must lie in (-1, 1), got {a}')
    return a


def _identity(size: int) -> np.ndarray:
    return np.eye(size, dtype=complex)


def moebius_value(value: np.ndarray, a: float) -> np.ndarray:
    """W_a(X) = (X + aI)(I + aX)^-1 for a square matrix X."""
    size = value.shape[0]
    return numkit.right_divide(value + a * _identity(size), _identity(size) + a * value, 'I + aX')


def moebius_operator(T, a) -> np.ndarray:
    """W_a(T) for a selfadjoint contraction T; fundamental symmetries are fixed points."""
    a = _check_a(a)
    T = numkit.hermitian(T)
    return numkit.symmetrize(moebius_value(T, a))


# -- Phi ---------------------------------------------------------------------


def phi_value(value: np.ndarray, z) -> np.ndarray:
    """(zI - X)(I - zX)^-1."""
    z = check_cut_plane(z)
    m = value.shape[0]
    return numkit.right_divide(z * _identity(m) - value, _identity(m) - z * value, 'I - z Omega(z)')


def phi_eval(sys: PassiveSystem, z) -> np.ndarray:
    return phi_value(transfer(sys, z), z)


def phi_realize(sys: PassiveSystem, rtol: float | None = None) -> PassiveSystem:
    """T_Phi = [[-P_M T|_M, P_M D_T], [D_T|_M, T]] on M + ran D_T."""
    require_selfadjoint(sys, 'the Phi transform')
    m = sys.dim_input
    T = sys.matrix
    space = numkit.defect_space(T, rtol)
    top_right = space.from_coordinates()[:m]
    matrix = np.block([
        [-T[:m, :m], top_right],
        [numkit.adjoint(top_right), space.restrict(T)],
    ])
    logger.debug('phi_realize: m=%d, state %d -> %d', m, sys.dim_state, space.rank)
    return validate_passive(matrix, m, True)


# -- Xi_a and the operator Moebius map -----------------------------------------


def _resolvent_blocks(sys: PassiveSystem, a: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Omega(a), C (I - aF)^-1 and F_a = (F - aI)(I - aF)^-1."""
    n = sys.dim_state
    F, C = sys.A, sys.C
    omega_a = transfer(sys, a)
    c_resolved = numkit.right_divide(C, _identity(n) - a * F, 'I - aF')
    f_a = numkit.right_divide(F - a * _identity(n), _identity(n) - a * F, 'I - aF')
    return omega_a, c_resolved, numkit.symmetrize(f_a)


def xi_realize(sys: PassiveSystem, a) -> PassiveSystem:
    """Realization of z -> Omega((z + a) / (1 + az)); minimality is preserved."""
    require_selfadjoint(sys, 'the Xi transform')
    a = _check_a(a)
    scale = np.sqrt(1 - a * a)
    omega_a, c_resolved, f_a = _resolvent_blocks(sys, a)
    matrix = np.block([
        [numkit.symmetrize(omega_a), scale * c_resolved],
        [scale * numkit.adjoint(c_resolved), f_a],
    ])
    return validate_passive(matrix, sys.dim_input, True)


def operator_moebius(sys: PassiveSystem, a) -> PassiveSystem:
    """The system with block operator T_a = (T - aI)(I - aT)^-1."""
    require_selfadjoint(sys, 'the operator Moebius map')
    a = _check_a(a)
    return validate_passive(moebius_operator(sys.matrix, -a), sys.dim_input, True)


def attrns_blocks(sys: PassiveSystem, a) -> np.ndarray:
    require_selfadjoint(sys, 'the operator Moebius map')
    a = _check_a(a)
    m = sys.dim_input
    omega_a, c_resolved, f_a = _resolvent_blocks(sys, a)
    pivot = numkit.inv(_identity(m) - a * omega_a, 'I - a Omega(a)')
    gain = 1 - a * a
    top_right = gain * pivot @ c_resolved
    return np.block([
        [(omega_a - a * _identity(m)) @ pivot, top_right],
        [numkit.adjoint(top_right), f_a + a * gain * numkit.adjoint(c_resolved) @ pivot @ c_resolved],
    ])


def zeta_realize(sys: PassiveSystem, a) -> PassiveSystem:
    """Realization of (Omega(z) - aI)(I - a Omega(z))^-1."""
    a = _check_a(a)
    return operator_moebius(xi_realize(sys, -a), a)


# -- Redheffer product -------------------------------------------------------


@dataclass(frozen=True)
class RedhefferCoupler:
    """Selfadjoint contraction [[K11, K12], [K12*, K22]] on M + H."""

    k11: np.ndarray
    k12: np.ndarray
    k22: np.ndarray

    @classmethod
    def build(cls, k11, k12, k22) -> 'RedhefferCoupler':
        k11 = numkit.hermitian(k11)
        k22 = numkit.hermitian(k22)
        k12 = numkit.as_matrix(k12)
        if k12.shape != (k11.shape[0], k22.shape[0]):
            raise DimensionMismatch(f'K12 has shape {k12.shape}, expected {(k11.shape[0], k22.shape[0])}')
        coupler = cls(k11, k12, k22)
        norm = numkit.opnorm(coupler.matrix)
        if norm > 1 + pick(None, 'CONTRACTION_TOL'):
            raise NotContraction(f'coupler is not a contraction (norm {norm:.12g})')
        return coupler

    @classmethod
    def from_matrix(cls, matrix, dim_input: int) -> 'RedhefferCoupler':
        K = numkit.as_square(matrix)
        if not 0 <= dim_input <= K.shape[0]:
            raise InvalidMatrix(f'input dimension {dim_input} does not fit a {K.shape[0]}x{K.shape[0]} coupler')
        m = dim_input
        return cls.build(K[:m, :m], K[:m, m:], K[m:, m:])

    @property
    def dim_input(self) -> int:
        return self.k11.shape[0]

    @property
    def dim_inner(self) -> int:
        return self.k22.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.k11, self.k12], [numkit.adjoint(self.k12), self.k22]])


def k_a_coupler(a, dim_input: int = 1) -> RedhefferCoupler:
    """K_a = [[aI, sI], [sI, -aI]] with s = sqrt(1 - a^2); Theta becomes W_a(Omega)."""
    a = _check_a(a)
    scale = np.sqrt(1 - a * a)
    eye = _identity(dim_input)
    return RedhefferCoupler.build(a * eye, scale * eye, -a * eye)


def theta_value(coupler: RedhefferCoupler, value: np.ndarray) -> np.ndarray:
    """Theta = K11 + K12 X (I - K22 X)^-1 K12*."""
    h = coupler.dim_inner
    closed = numkit.right_divide(value, _identity(h) - coupler.k22 @ value, 'I - K22 Omega')
    return coupler.k11 + coupler.k12 @ closed @ numkit.adjoint(coupler.k12)


def redheffer(coupler: RedhefferCoupler, sys: PassiveSystem) -> PassiveSystem:
    """K . S: feedback of the coupler's inner port through the system's input port."""
    require_selfadjoint(sys, 'the Redheffer product')
    if coupler.dim_inner != sys.dim_input:
        raise DimensionMismatch(f'coupler inner port has dimension {coupler.dim_inner}, system input {sys.dim_input}')
    k22_norm = numkit.opnorm(coupler.k22)
    d_norm = numkit.norm2(sys.D)
    if not (k22_norm < 1.0 or d_norm <= ZERO_VALUE_TOL):
        raise InfeasibleCoupler(f'||K22|| = {k22_norm:.12g} and Omega(0) != 0')

    h, n = sys.dim_input, sys.dim_state
    A, B, G = sys.D, sys.C, sys.A
    K11, K12, K22 = coupler.k11, coupler.k12, coupler.k22
    left = numkit.inv(_identity(h) - K22 @ A, 'I - K22 A')
    right = numkit.inv(_identity(h) - A @ K22, 'I - A K22')
    top_right = K12 @ right @ B
    matrix = np.block([
        [K11 + K12 @ A @ left @ numkit.adjoint(K12), top_right],
        [numkit.adjoint(top_right), G + numkit.adjoint(B) @ K22 @ right @ B],
    ])
    logger.debug('redheffer: m=%d, inner=%d, state=%d', coupler.dim_input, h, n)
    return validate_passive(matrix, coupler.dim_input, True)


def pi_a_realize(sys: PassiveSystem, a) -> PassiveSystem:
    """Realization of (aI + Omega(z))(I + a Omega(z))^-1, equal to redheffer(k_a_coupler(a), sys)."""
    require_selfadjoint(sys, 'the Pi_a transform')
    a = _check_a(a)
    m = sys.dim_input
    D, C, F = sys.D, sys.C, sys.A
    pivot = numkit.inv(_identity(m) + a * D, 'I + aD')
    scale = np.sqrt(1 - a * a)
    top_right = scale * pivot @ C
    matrix = np.block([
        [(a * _identity(m) + D) @ pivot, top_right],
        [numkit.adjoint(top_right), F - a * numkit.adjoint(C) @ pivot @ C],
    ])
    return validate_passive(matrix, m, True)


# -- Fixed points and the Jacobi realization -------------------------------------


def omega0_eval(z, dim_input: int = 1) -> np.ndarray:
    """Omega_0(z) = z / (1 + sqrt(1 - z^2)), the fixed point of Phi."""
    z = check_cut_plane(z)
    return z / (1 + np.sqrt(1 - z * z)) * _identity(dim_input)


def m0_eval(xi, dim_input: int = 1) -> np.ndarray:
    """M_0(xi) = -1 / sqrt(xi^2 - 1) with xi M_0(xi) -> -1, the fixed point of Gamma."""
    xi = check_off_interval(xi)
    return -1 / (xi * np.sqrt(1 - 1 / (xi * xi))) * _identity(dim_input)


def jacobi_system(n: int, dim_input: int = 1) -> PassiveSystem:
    """Truncated Jacobi matrix with first off-diagonal 1/sqrt(2) and the rest 1/2, times I_m."""
    if n < 0:
        raise InvalidParameter(f'truncation order must be nonnegative, got {n}')
    off = np.full(n, 0.5)
    if n:
        off[0] = 1 / np.sqrt(2)
    scalar = np.diag(off, 1) + np.diag(off, -1)
    return validate_passive(np.kron(scalar, np.eye(dim_input)), dim_input, True)


@dataclass(frozen=True)
class FixedPointReport:
    a: float
    composition_fixed: bool
    conjugated_fixed: bool
    reflected_fixed: bool
    residuals: dict[str, float] = field(default_factory=dict)


def fixed_point_tests(sys: PassiveSystem, a) -> FixedPointReport:
    """Sample Omega o w_a = Omega, W_-a o Omega o w_a = Omega and W_-a o Omega o w_-a = Omega."""
    require_selfadjoint(sys, 'fixed-point tests')
    a = _check_a(a)
    if a == 0.0:
        raise InvalidParameter('fixed-point tests need a != 0')
    tol = pick(None, 'INNER_TOL')
    points = grids.sample_grid()

    def omega(z):
        return transfer(sys, z)

    residuals = {
        'composition': transfer_gap(omega, lambda z: omega(grids.moebius_point(z, a)), points),
        'conjugated': transfer_gap(
            omega, lambda z: moebius_value(omega(grids.moebius_point(z, a)), -a), points
        ),
        'reflected': transfer_gap(
            omega, lambda z: moebius_value(omega(grids.moebius_point(z, -a)), -a), points
        ),
    }
    return FixedPointReport(
        a=a,
        composition_fixed=residuals['composition'] <= tol,
        conjugated_fixed=residuals['conjugated'] <= tol,
        reflected_fixed=residuals['reflected'] <= tol,
        residuals=residuals,
    )


# -- Dilation and spectral measure ---------------------------------------------


@dataclass(frozen=True)
class InnerDilation:
    """Omega(z) = P_M (zI + A~)(I + z A~)^-1 |_M with A~ selfadjoint on M~ = M + ran D_T."""

    dim_ambient: int
    dim_input: int
    a_tilde: np.ndarray
    reconstruction_residual: float = 0.0
    simple: bool = True

    def value(self, z) -> np.ndarray:
        z = check_cut_plane(z)
        size, m = self.dim_ambient, self.dim_input
        full = numkit.right_divide(z * _identity(size) + self.a_tilde, _identity(size) + z * self.a_tilde, 'I + z A~')
        return full[:m, :m]


def dilation_system(dil: InnerDilation) -> PassiveSystem:
    """A~ as a selfadjoint system over M, for comparing dilations up to unitary equivalence."""
    return validate_passive(dil.a_tilde, dil.dim_input, True)


def inner_dilate(sys: PassiveSystem) -> InnerDilation:
    require_selfadjoint(sys, 'inner dilation')
    if not krylov_analysis(sys).minimal:
        raise MinimalityRequired('inner dilation requires a minimal system')
    realized = phi_realize(sys)
    a_tilde = -realized.matrix
    draft = InnerDilation(realized.size, sys.dim_input, a_tilde)
    residual = transfer_gap(draft.value, lambda z: transfer(sys, z), grids.sample_grid())
    report = krylov_analysis(dilation_system(draft))
    simple = report.controllable_dim == report.dim_state
    logger.debug('inner_dilate: ambient=%d residual=%.2e simple=%s', draft.dim_ambient, residual, simple)
    return InnerDilation(draft.dim_ambient, draft.dim_input, a_tilde, residual, simple)


@dataclass(frozen=True)
class SpectralMeasure:
    """Atoms (t_j, dsigma_j) with dsigma_j PSD on M and t_j ascending in [-1, 1]."""

    atoms: tuple[tuple[float, np.ndarray], ...]
    dim_input: int

    def total(self) -> np.ndarray:
        return sum((weight for _, weight in self.atoms), np.zeros((self.dim_input, self.dim_input), dtype=complex))

    def distribution(self, t: float) -> np.ndarray:
        """sigma(t), the sum of the atoms at or below t."""
        return sum(
            (weight for point, weight in self.atoms if point <= t),
            np.zeros((self.dim_input, self.dim_input), dtype=complex),
        )

    def evaluate(self, z) -> np.ndarray:
        """Omega(z) = sum_j (z + t_j) / (1 + z t_j) dsigma_j."""
        z = check_cut_plane(z)
        return sum(
            ((z + t) / (1 + z * t) * weight for t, weight in self.atoms),
            np.zeros((self.dim_input, self.dim_input), dtype=complex),
        )


def spectral_measure(dil: InnerDilation) -> SpectralMeasure:
    decomposition = numkit.eigh(dil.a_tilde)
    merge = pick(None, 'MERGE_TOL')
    m = dil.dim_input
    groups: list[list[int]] = []
    for index, value in enumerate(decomposition.eigenvalues):
        if groups and value - decomposition.eigenvalues[groups[-1][-1]] <= merge:
            groups[-1].append(index)
        else:
            groups.append([index])

    atoms = []
    for group in groups:
        top = decomposition.vectors[:m, group]
        t = float(np.clip(np.mean(decomposition.eigenvalues[group]), -1.0, 1.0))
        atoms.append((t, numkit.symmetrize(top @ numkit.adjoint(top))))
    return SpectralMeasure(tuple(atoms), m)


# -- Gamma realized --------------------------------------------------------------


def gamma_realize(nf: NFunction) -> NFunction:
    """Gamma(M) backed by T_Phi of the backing operator of M."""
    sys = validate_passive(nf.backing, nf.dim_input, True)
    return to_nfunction(phi_realize(sys))
