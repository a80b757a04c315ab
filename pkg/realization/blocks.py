"""Free parametrizations of contractive 2x2 block operators.

Defect spaces are carried as ``numkit.DefectSpace`` coordinates, so the
parameters K, Y, N, X, G and L live at the dimension of the subspace they
act on. Zero-dimensional defect spaces are ordinary 0 x k arrays.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import numkit
from .conf import pick
from .exceptions import DimensionMismatch, IllConditioned, NotContraction
from .systems import PassiveSystem, check_cut_plane, require_selfadjoint, validate_passive

logger = logging.getLogger(__name__)

# reassembly residual above which extraction is rejected
REASSEMBLY_LIMIT = 1e-8


def _require_contraction(name: str, matrix: np.ndarray) -> None:
    norm = numkit.opnorm(matrix)
    if norm > 1 + pick(None, 'CONTRACTION_TOL'):
        raise NotContraction(f'parameter {name} is not a contraction (norm {norm:.12g})')


def _require_shape(name: str, matrix: np.ndarray, shape: tuple[int, int]) -> None:
    if matrix.shape != shape:
        raise DimensionMismatch(f'parameter {name} has shape {matrix.shape}, expected {shape}')


def _reassembly_residual(built: np.ndarray, target: np.ndarray) -> float:
    return numkit.norm2(built - target) / max(1.0, numkit.norm2(target))


@dataclass(frozen=True)
class KYParam:
    """T = [[-K F K* + D_K* Y D_K*, K D_F], [D_F K*, F]].

    K maps defect coordinates of F into M; Y acts on defect coordinates of K*.
    """

    F: np.ndarray
    K: np.ndarray
    Y: np.ndarray
    f_space: numkit.DefectSpace
    k_space: numkit.DefectSpace

    @classmethod
    def build(cls, F, K, Y, rtol: float | None = None) -> 'KYParam':
        F = numkit.hermitian(F)
        K = numkit.as_matrix(K)
        Y = numkit.hermitian(Y)
        _require_contraction('F', F)
        f_space = numkit.defect_space(F, rtol)
        _require_shape('K', K, (K.shape[0], f_space.rank))
        _require_contraction('K', K)
        k_space = numkit.defect_space(numkit.adjoint(K), rtol)
        _require_shape('Y', Y, (k_space.rank, k_space.rank))
        _require_contraction('Y', Y)
        return cls(F, K, Y, f_space, k_space)

    @property
    def dim_input(self) -> int:
        return self.K.shape[0]

    def constant_part(self) -> np.ndarray:
        """D_K* Y D_K* on M."""
        return self.k_space.from_coordinates() @ self.Y @ self.k_space.to_coordinates()


def fundamental_jf(F, space: numkit.DefectSpace | None = None) -> np.ndarray:
    """J_F = [[-F, D_F], [D_F, F]] on (defect coordinates of F) + K; selfadjoint and unitary."""
    F = numkit.hermitian(F)
    _require_contraction('F', F)
    space = space or numkit.defect_space(F)
    return np.block([
        [-space.restrict(F), space.to_coordinates()],
        [space.from_coordinates(), F],
    ])


def assemble_selfadjoint_ky(p: KYParam, dim_input: int | None = None) -> PassiveSystem:
    """diag(K, I) J_F diag(K*, I) + diag(D_K* Y D_K*, 0) as a selfadjoint system."""
    m = p.dim_input
    if dim_input is not None and dim_input != m:
        raise DimensionMismatch(f'K has {m} rows, expected {dim_input}')
    n = p.F.shape[0]
    frame = np.block([
        [p.K, np.zeros((m, n))],
        [np.zeros((n, p.f_space.rank)), np.eye(n)],
    ])
    T = frame @ fundamental_jf(p.F, p.f_space) @ numkit.adjoint(frame)
    T[:m, :m] += p.constant_part()
    return validate_passive(T, m, True)


def ky_transfer(p: KYParam, z) -> np.ndarray:
    """Omega(z) = K Delta_F(z) K* + D_K* Y D_K*, evaluated from the parameters."""
    from .rsclass import characteristic_fn

    z = check_cut_plane(z)
    delta = characteristic_fn(p.F, z, p.f_space)
    return p.K @ delta @ numkit.adjoint(p.K) + p.constant_part()


def extract_ky(sys: PassiveSystem, rtol: float | None = None) -> KYParam:
    """Recover (F, K, Y) from a selfadjoint system and verify by reassembly."""
    require_selfadjoint(sys, 'KY extraction')
    F, C, D = sys.A, sys.C, sys.D
    f_space = numkit.defect_space(F, rtol)
    K = numkit.adjoint(f_space.divide(numkit.adjoint(C @ f_space.embedding)))
    k_space = numkit.defect_space(numkit.adjoint(K), rtol)
    inner = D + K @ f_space.restrict(F) @ numkit.adjoint(K)
    Y = k_space.divide(numkit.adjoint(k_space.divide(numkit.adjoint(k_space.restrict(inner)))))
    p = KYParam(F, K, numkit.symmetrize(Y), f_space, k_space)

    residual = _reassembly_residual(assemble_selfadjoint_ky(p).matrix, sys.matrix)
    logger.debug('extract_ky: rank D_F=%d rank D_K*=%d residual=%.2e', f_space.rank, k_space.rank, residual)
    if residual > REASSEMBLY_LIMIT:
        raise IllConditioned(f'KY reassembly residual {residual:.3e} exceeds {REASSEMBLY_LIMIT:g}')
    return p


@dataclass(frozen=True)
class NXParam:
    """T = [[D, D_D N*], [N D_D, -N D N* + D_N* X D_N*]].

    N maps defect coordinates of D into the state space; X acts on defect
    coordinates of N*.
    """

    D: np.ndarray
    N: np.ndarray
    X: np.ndarray
    d_space: numkit.DefectSpace
    n_space: numkit.DefectSpace

    @property
    def d_restricted(self) -> np.ndarray:
        """D acting on its own defect coordinates."""
        return self.d_space.restrict(self.D)

    @property
    def f_hat(self) -> np.ndarray:
        """F^ = D_N* X D_N*, the mean of the limit values of the state-side transfer function."""
        return self.n_space.from_coordinates() @ self.X @ self.n_space.to_coordinates()

    @property
    def F(self) -> np.ndarray:
        return -self.N @ self.d_restricted @ numkit.adjoint(self.N) + self.f_hat

    def assemble(self) -> np.ndarray:
        C = self.d_space.from_coordinates() @ numkit.adjoint(self.N)
        return np.block([[self.D, C], [numkit.adjoint(C), self.F]])


def extract_nx(sys: PassiveSystem, rtol: float | None = None) -> NXParam:
    require_selfadjoint(sys, 'NX extraction')
    D, C, F = sys.D, sys.C, sys.A
    d_space = numkit.defect_space(D, rtol)
    N = numkit.adjoint(d_space.divide(numkit.adjoint(d_space.embedding) @ C))
    n_space = numkit.defect_space(numkit.adjoint(N), rtol)
    inner = F + N @ d_space.restrict(D) @ numkit.adjoint(N)
    X = n_space.divide(numkit.adjoint(n_space.divide(numkit.adjoint(n_space.restrict(inner)))))
    p = NXParam(D, N, numkit.symmetrize(X), d_space, n_space)

    residual = _reassembly_residual(p.assemble(), sys.matrix)
    logger.debug('extract_nx: rank D_D=%d rank D_N*=%d residual=%.2e', d_space.rank, n_space.rank, residual)
    if residual > REASSEMBLY_LIMIT:
        raise IllConditioned(f'NX reassembly residual {residual:.3e} exceeds {REASSEMBLY_LIMIT:g}')
    return p


def lemma_w(p: NXParam, z) -> np.ndarray:
    """W(z) = I + z D N* (I - z F^)^-1 N on the defect coordinates of D."""
    z = check_cut_plane(z)
    n = p.N.shape[0]
    resolved = numkit.solve(np.eye(n) - z * p.f_hat, p.N, 'I - z F^')
    return np.eye(p.d_space.rank) + z * p.d_restricted @ numkit.adjoint(p.N) @ resolved


def lemma_w_inverse(p: NXParam, z) -> np.ndarray:
    """W(z)^-1 = I - z D N* (I - z F)^-1 N."""
    z = check_cut_plane(z)
    n = p.N.shape[0]
    resolved = numkit.solve(np.eye(n) - z * p.F, p.N, 'I - z F')
    return np.eye(p.d_space.rank) - z * p.d_restricted @ numkit.adjoint(p.N) @ resolved


@dataclass(frozen=True)
class GeneralBlockParam:
    """Free parameters of a contraction T: M + K -> N + L.

    T = [[D, D_D* G], [N D_D, -N D* G + D_N* L D_G]] with D: M -> N,
    N: D_D -> L, G: K -> D_D* and L: D_G -> D_N*.
    """

    D: np.ndarray
    N: np.ndarray
    G: np.ndarray
    L: np.ndarray
    d_space: numkit.DefectSpace
    d_star_space: numkit.DefectSpace
    n_star_space: numkit.DefectSpace
    g_space: numkit.DefectSpace

    @classmethod
    def build(cls, D, N, G, L, rtol: float | None = None) -> 'GeneralBlockParam':
        D, N, G, L = (numkit.as_matrix(x) for x in (D, N, G, L))
        for name, value in (('D', D), ('N', N), ('G', G), ('L', L)):
            _require_contraction(name, value)
        d_space = numkit.defect_space(D, rtol)
        d_star_space = numkit.defect_space(numkit.adjoint(D), rtol)
        _require_shape('N', N, (N.shape[0], d_space.rank))
        _require_shape('G', G, (d_star_space.rank, G.shape[1]))
        n_star_space = numkit.defect_space(numkit.adjoint(N), rtol)
        g_space = numkit.defect_space(G, rtol)
        _require_shape('L', L, (n_star_space.rank, g_space.rank))
        return cls(D, N, G, L, d_space, d_star_space, n_star_space, g_space)

    @property
    def coupling(self) -> np.ndarray:
        """D* from defect coordinates of D* to defect coordinates of D."""
        return numkit.adjoint(self.d_space.embedding) @ numkit.adjoint(self.D) @ self.d_star_space.embedding

    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        top_right = self.d_star_space.from_coordinates() @ self.G
        bottom_left = self.N @ self.d_space.to_coordinates()
        bottom_right = (
            -self.N @ self.coupling @ self.G
            + self.n_star_space.from_coordinates() @ self.L @ self.g_space.to_coordinates()
        )
        return self.D, top_right, bottom_left, bottom_right


def assemble_contraction(p: GeneralBlockParam) -> np.ndarray:
    top_left, top_right, bottom_left, bottom_right = p.blocks()
    T = np.block([[top_left, top_right], [bottom_left, bottom_right]])
    norm = numkit.opnorm(T)
    if norm > 1 + pick(None, 'NORM_TOL'):
        raise NotContraction(f'assembled operator has norm {norm:.12g}')
    return T


def general_param_from(sys: PassiveSystem, rtol: float | None = None) -> GeneralBlockParam:
    """Recover (D, N, G, L) of any passive system with N = M, L = K."""
    D, C, B, A = sys.D, sys.C, sys.B, sys.A
    d_space = numkit.defect_space(D, rtol)
    d_star_space = numkit.defect_space(numkit.adjoint(D), rtol)
    N = numkit.adjoint(d_space.divide(numkit.adjoint(B @ d_space.embedding)))
    G = d_star_space.divide(numkit.adjoint(d_star_space.embedding) @ C)
    n_star_space = numkit.defect_space(numkit.adjoint(N), rtol)
    g_space = numkit.defect_space(G, rtol)
    coupling = numkit.adjoint(d_space.embedding) @ numkit.adjoint(D) @ d_star_space.embedding
    inner = numkit.adjoint(n_star_space.embedding) @ (A + N @ coupling @ G) @ g_space.embedding
    L = numkit.adjoint(g_space.divide(numkit.adjoint(n_star_space.divide(inner))))
    p = GeneralBlockParam(D, N, G, L, d_space, d_star_space, n_star_space, g_space)

    top_left, top_right, bottom_left, bottom_right = p.blocks()
    built = np.block([[top_left, top_right], [bottom_left, bottom_right]])
    residual = _reassembly_residual(built, sys.matrix)
    if residual > REASSEMBLY_LIMIT:
        raise IllConditioned(f'general reassembly residual {residual:.3e} exceeds {REASSEMBLY_LIMIT:g}')
    return p


def defect_identity_residual(p: GeneralBlockParam, f, h) -> float:
    """Scale-relative gap in the norm identity of a block contraction.

    Compares |(f,h)|^2 - |T(f,h)|^2 with
    |D_N (D_D f - D* G h) - N* L D_G h|^2 + |D_L D_G h|^2.
    """
    f = np.asarray(f, dtype=complex).reshape(-1)
    h = np.asarray(h, dtype=complex).reshape(-1)
    top_left, top_right, bottom_left, bottom_right = p.blocks()
    if f.shape[0] != top_left.shape[1] or h.shape[0] != top_right.shape[1]:
        raise DimensionMismatch('vectors do not match the block operator')
    image_top = top_left @ f + top_right @ h
    image_bottom = bottom_left @ f + bottom_right @ h
    lhs = (np.vdot(f, f) + np.vdot(h, h) - np.vdot(image_top, image_top) - np.vdot(image_bottom, image_bottom)).real

    d_n = numkit.defect_operator(p.N)
    d_l = numkit.defect_operator(p.L)
    g_part = p.g_space.to_coordinates() @ h
    first = (
        d_n @ (p.d_space.to_coordinates() @ f - p.coupling @ (p.G @ h))
        - numkit.adjoint(p.N) @ p.n_star_space.embedding @ (p.L @ g_part)
    )
    second = d_l @ g_part
    rhs = (np.vdot(first, first) + np.vdot(second, second)).real
    scale = max(1.0, (np.vdot(f, f) + np.vdot(h, h)).real)
    return float(abs(lhs - rhs) / scale)
