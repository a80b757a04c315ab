"""Analytics for functions of the combined Nevanlinna-Schur class.

Everything here takes a realization (a PassiveSystem or a parametrization of
one) and samples the function it produces. Certificates and inner tests are
grid-relative: they report what holds on the sample grids in ``grids``.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import grids, numkit
from .blocks import KYParam, NXParam, extract_ky, extract_nx
from .conf import pick
from .exceptions import IllConditioned, InvalidMatrix, MinimalityRequired, NotContraction, PolePoint
from .systems import (
    PassiveSystem,
    check_cut_plane,
    check_off_interval,
    compressed_resolvent,
    krylov_analysis,
    require_selfadjoint,
    transfer,
    transfer_gap,
    validate_passive,
)

logger = logging.getLogger(__name__)

# Moebius reconstruction above this is rejected
RECONSTRUCTION_LIMIT = 1e-8
# sample point for the Omega(a) -> Omega(0) identity
INNER_TEST_A = 0.5
UNITARY_SAMPLE = complex(np.exp(1j * np.pi / 3))


def characteristic_fn(F, z, space: numkit.DefectSpace | None = None) -> np.ndarray:
    """Delta_F(z) = (zI - F)(I - zF)^-1 in the eigen-coordinates of ran D_F."""
    F = numkit.hermitian(F)
    norm = numkit.opnorm(F)
    if norm > 1 + pick(None, 'CONTRACTION_TOL'):
        raise NotContraction(f'F is not a contraction (norm {norm:.12g})')
    z = check_cut_plane(z)
    space = space or numkit.defect_space(F)
    n = F.shape[0]
    value = numkit.solve(np.eye(n) - z * F, z * np.eye(n) - F, 'I - zF')
    return space.restrict(value)


def _pick_factor(z: complex, w: complex) -> complex:
    denominator = z - w.conjugate()
    if denominator == 0:
        raise PolePoint(f'kernel has a pole at z = conj(w) = {z}')
    return (1 - w.conjugate() * z) / denominator


def _kernel_block(omega_z: np.ndarray, omega_w: np.ndarray, z: complex, w: complex) -> np.ndarray:
    m = omega_z.shape[0]
    omega_w_star = numkit.adjoint(omega_w)
    return np.eye(m) - omega_w_star @ omega_z - _pick_factor(z, w) * (omega_z - omega_w_star)


def pick_kernel(sys: PassiveSystem, z, w) -> np.ndarray:
    """K(z, w) = I - Omega(w)* Omega(z) - ((1 - conj(w) z) / (z - conj(w))) (Omega(z) - Omega(w)*)."""
    z, w = check_cut_plane(z), check_cut_plane(w)
    _pick_factor(z, w)
    return _kernel_block(transfer(sys, z), transfer(sys, w), z, w)


def kernel_matrix(sys: PassiveSystem, points) -> np.ndarray:
    """Block Gram matrix with block (l, k) = K(z_k, z_l)."""
    points = [check_cut_plane(z) for z in points]
    values = [transfer(sys, z) for z in points]
    rows = [
        [_kernel_block(values[k], values[l], points[k], points[l]) for k in range(len(points))]
        for l in range(len(points))
    ]
    return np.block(rows) if rows else np.zeros((0, 0), dtype=complex)


def _inequality_block(omega: np.ndarray, z: complex) -> np.ndarray:
    """I - Omega* Omega - (1 - |z|^2) Im(Omega) / Im(z), made Hermitian."""
    m = omega.shape[0]
    imaginary = (omega - numkit.adjoint(omega)) / (2j * z.imag)
    return numkit.symmetrize(np.eye(m) - numkit.adjoint(omega) @ omega - (1 - abs(z) ** 2) * imaginary)


@dataclass(frozen=True)
class RSCertificate:
    grid: tuple[complex, ...]
    min_kernel_eig: float
    min_inequality_eig: float
    schur_norm_max: float
    passed: bool
    tol_psd: float
    tol_norm: float

    @property
    def verdict(self) -> str:
        return 'pass' if self.passed else 'fail'


def certify_rs(sys: PassiveSystem, grid: tuple[tuple[complex, ...], tuple[complex, ...]] | None = None) -> RSCertificate:
    """Sampled evidence that the transfer function of ``sys`` lies in the class.

    Kernels are assembled separately on the upper and lower half of the grid.
    A failing verdict is returned as data, never raised.
    """
    upper, lower = grid or grids.certificate_grid()
    # real points lie on a cut or on [-1, 1]
    upper = tuple(check_off_interval(check_cut_plane(z)) for z in upper)
    lower = tuple(check_off_interval(check_cut_plane(z)) for z in lower)
    min_kernel = np.inf
    block_scale = 1.0
    for half in (upper, lower):
        if not half:
            continue
        matrix = numkit.symmetrize(kernel_matrix(sys, half))
        if matrix.size == 0:
            continue
        block_scale = max(block_scale, numkit.norm2(matrix))
        min_kernel = min(min_kernel, float(numkit.eigh(matrix).eigenvalues[0]))

    min_inequality = np.inf
    for z in upper + lower:
        block = _inequality_block(transfer(sys, z), z)
        if block.size:
            min_inequality = min(min_inequality, float(numkit.eigh(block).eigenvalues[0]))

    schur_max = max((numkit.norm2(transfer(sys, z)) for z in grids.disk_grid()), default=0.0)

    min_kernel = 0.0 if min_kernel == np.inf else min_kernel
    min_inequality = 0.0 if min_inequality == np.inf else min_inequality
    tol_psd = pick(None, 'PSD_TOL') * block_scale
    tol_norm = pick(None, 'NORM_TOL')
    passed = min_kernel >= -tol_psd and min_inequality >= -tol_psd and schur_max <= 1 + tol_norm
    logger.info(
        'certify_rs: %s (kernel %.3e, inequality %.3e, norm %.12g)',
        'pass' if passed else 'fail', min_kernel, min_inequality, schur_max,
    )
    return RSCertificate(upper + lower, min_kernel, min_inequality, schur_max, passed, tol_psd, tol_norm)


@dataclass(frozen=True)
class LimitValues:
    omega_minus: np.ndarray
    omega_plus: np.ndarray

    def ordering_gap(self, omega_zero: np.ndarray) -> float:
        """Smallest eigenvalue along -I <= Omega(-1) <= Omega(0) <= Omega(1) <= I; >= 0 when ordered."""
        m = omega_zero.shape[0]
        if m == 0:
            return 0.0
        chain = (-np.eye(m), self.omega_minus, omega_zero, self.omega_plus, np.eye(m))
        return min(
            float(numkit.eigh(upper - lower).eigenvalues[0]) for lower, upper in zip(chain, chain[1:])
        )


def limit_values(p: KYParam) -> LimitValues:
    """Omega(-1) = -KK* + D_K* Y D_K* and Omega(1) = KK* + D_K* Y D_K*."""
    spread = p.K @ numkit.adjoint(p.K)
    constant = p.constant_part()
    return LimitValues(numkit.symmetrize(constant - spread), numkit.symmetrize(constant + spread))


@dataclass(frozen=True)
class MoebiusRep:
    """Omega(z) = Omega(0) + D Lambda(z) (I + Omega(0) Lambda(z))^-1 D with D the defect of Omega(0).

    Lambda lives on the defect coordinates of Omega(0) and is realized by
    ``lambda_system``.
    """

    omega0: np.ndarray
    lambda_system: PassiveSystem
    nx: NXParam
    reconstruction_residual: float = 0.0
    inverse_residual: float = 0.0

    def lambda_value(self, z) -> np.ndarray:
        return transfer(self.lambda_system, z)

    def reconstruct(self, z) -> np.ndarray:
        space = self.nx.d_space
        lam = self.lambda_value(z)
        r = space.rank
        inner = lam @ numkit.inv(np.eye(r) + self.nx.d_restricted @ lam, 'I + Omega(0) Lambda(z)')
        return self.omega0 + space.from_coordinates() @ inner @ space.to_coordinates()

    def lambda_from_value(self, omega: np.ndarray) -> np.ndarray:
        """Lambda from a value of Omega, using Moore-Penrose inverses of the defect and of I - Omega(0) Omega."""
        m = self.omega0.shape[0]
        defect = numkit.psd_sqrt(np.eye(m) - self.omega0 @ self.omega0)
        value = numkit.pinv(defect) @ (omega - self.omega0) @ numkit.pinv(np.eye(m) - self.omega0 @ omega) @ defect
        return self.nx.d_space.restrict(value)


def moebius_rep(sys: PassiveSystem) -> MoebiusRep:
    require_selfadjoint(sys, 'Moebius representation')
    nx = extract_nx(sys)
    lambda_matrix = np.block([
        [np.zeros((nx.d_space.rank, nx.d_space.rank)), numkit.adjoint(nx.N)],
        [nx.N, nx.f_hat],
    ])
    rep = MoebiusRep(sys.D, validate_passive(lambda_matrix, nx.d_space.rank, True), nx)

    points = grids.sample_grid()
    residual = transfer_gap(rep.reconstruct, lambda z: transfer(sys, z), points)
    if residual > RECONSTRUCTION_LIMIT:
        raise IllConditioned(f'Moebius reconstruction residual {residual:.3e} exceeds {RECONSTRUCTION_LIMIT:g}')
    inverse = transfer_gap(rep.lambda_value, lambda z: rep.lambda_from_value(transfer(sys, z)), grids.disk_grid())
    logger.debug('moebius_rep: reconstruction %.2e, inverse formula %.2e', residual, inverse)
    return MoebiusRep(rep.omega0, rep.lambda_system, nx, residual, inverse)


@dataclass(frozen=True)
class InnerReport:
    is_inner: bool
    d_fit: np.ndarray | None
    fit_residual: float
    limit_criteria: dict[str, bool]
    moebius_identity_at_a: bool
    unitary_sample: bool
    normal: bool
    limit_identities: bool
    limits: LimitValues | None = field(repr=False, default=None)


def _inner_form(D: np.ndarray, z: complex) -> np.ndarray:
    m = D.shape[0]
    return numkit.right_divide(z * np.eye(m) + D, np.eye(m) + z * D, 'I + zD')


def _close(lhs: np.ndarray, rhs: np.ndarray, tol: float) -> bool:
    return numkit.norm2(lhs - rhs) <= tol


def _limit_criteria(p: KYParam, limits: LimitValues, tol: float) -> dict[str, bool]:
    m = p.dim_input
    plus, minus = limits.omega_plus, limits.omega_minus
    half_gap = (plus - minus) / 2
    half_sum = (plus + minus) / 2
    K = p.K
    return {
        'unitary_limits': _close(plus @ plus, np.eye(m), tol) and _close(minus @ minus, np.eye(m), tol),
        'projection_identities': (
            _close(half_gap @ half_gap, half_gap, tol) and _close(half_sum @ half_sum, np.eye(m) - half_gap, tol)
        ),
        'partial_isometry': (
            _close(K @ numkit.adjoint(K) @ K, K, tol) and _close(p.Y @ p.Y, np.eye(p.k_space.rank), tol)
        ),
    }


def inner_test(sys: PassiveSystem) -> InnerReport:
    """Decide whether Omega has the form (zI + D)(I + zD)^-1 and report the related criteria."""
    require_selfadjoint(sys, 'inner test')
    if not krylov_analysis(sys).minimal:
        raise MinimalityRequired('inner test requires a minimal system')
    tol = pick(None, 'INNER_TOL')
    m = sys.dim_input
    D = sys.D

    fit = transfer_gap(lambda z: transfer(sys, z), lambda z: _inner_form(D, z), grids.sample_grid())
    is_inner = fit <= tol

    p = extract_ky(sys)
    limits = limit_values(p)
    criteria = _limit_criteria(p, limits, tol)
    if len(set(criteria.values())) > 1:
        logger.warning('inner_test: limit criteria disagree: %s', criteria)

    a = INNER_TEST_A
    omega_a = transfer(sys, a)
    moved = numkit.right_divide(omega_a - a * np.eye(m), np.eye(m) - a * omega_a, 'I - a Omega(a)')
    moebius_identity = _close(moved, D, tol)

    sample = transfer(sys, UNITARY_SAMPLE)
    unitary_sample = _close(numkit.adjoint(sample) @ sample, np.eye(m), tol)

    normal_tol = pick(None, 'MATCH_TOL')
    points = grids.disk_grid()
    values = [transfer(sys, z) for z in points]
    commuting = all(_close(x @ y, y @ x, normal_tol) for x, y in itertools.combinations(values, 2))
    normal = commuting and all(
        _close(x @ numkit.adjoint(x), numkit.adjoint(x) @ x, normal_tol) for x in values
    )

    plus, minus = limits.omega_plus, limits.omega_minus
    half_gap = (plus - minus) / 2
    total = plus + minus
    limit_identities = _close(half_gap @ half_gap, half_gap, tol) and _close(
        numkit.adjoint(total) @ total, 4 * np.eye(m) - 2 * (plus - minus), tol
    )

    return InnerReport(
        is_inner=is_inner,
        d_fit=numkit.symmetrize(D) if is_inner else None,
        fit_residual=fit,
        limit_criteria=criteria,
        moebius_identity_at_a=moebius_identity,
        unitary_sample=unitary_sample,
        normal=normal,
        limit_identities=limit_identities,
        limits=limits,
    )


@dataclass(frozen=True)
class NFunction:
    """M(xi) = P_M (T - xi I)^-1 restricted to M, backed by a selfadjoint contraction T."""

    backing: np.ndarray
    dim_input: int

    @classmethod
    def build(cls, backing, dim_input: int) -> 'NFunction':
        T = numkit.hermitian(backing)
        if not 0 <= dim_input <= T.shape[0]:
            raise InvalidMatrix(f'input dimension {dim_input} does not fit a {T.shape[0]}x{T.shape[0]} matrix')
        norm = numkit.opnorm(T)
        if norm > 1 + pick(None, 'CONTRACTION_TOL'):
            raise NotContraction(f'backing operator is not a contraction (norm {norm:.12g})')
        return cls(T, dim_input)

    def value(self, xi) -> np.ndarray:
        return compressed_resolvent(self.backing, self.dim_input, xi)


def to_nfunction(sys: PassiveSystem) -> NFunction:
    """U: Omega -> M with M(xi) = (Omega(1/xi) - xi)^-1, backed by the same T."""
    require_selfadjoint(sys, 'the U transform')
    return NFunction.build(sys.matrix, sys.dim_input)


def u_transform_value(sys: PassiveSystem, xi) -> np.ndarray:
    xi = check_off_interval(xi)
    m = sys.dim_input
    return numkit.inv(transfer(sys, 1 / xi) - xi * np.eye(m), 'Omega(1/xi) - xi')


def from_nfunction(nf: NFunction) -> Callable[[complex], np.ndarray]:
    """U^-1: Omega(z) = M(1/z)^-1 + 1/z, with Omega(0) read off the backing operator."""
    m = nf.dim_input

    def evaluate(z) -> np.ndarray:
        z = check_cut_plane(z)
        if z == 0:
            return nf.backing[:m, :m].copy()
        return numkit.inv(nf.value(1 / z), 'M(1/z)') + np.eye(m) / z

    return evaluate


def gamma_value(value: np.ndarray, xi) -> np.ndarray:
    """Gamma applied to one value: M(xi)^-1 / (xi^2 - 1)."""
    xi = check_off_interval(xi)
    return numkit.inv(value, 'M(xi)') / (xi * xi - 1)


def gamma_transform(nf: NFunction, xi) -> np.ndarray:
    return gamma_value(nf.value(xi), xi)
