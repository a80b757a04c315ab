"""Seeded fixtures: random contractions, selfadjoint systems and parameter tuples.

All randomness flows through ``rng(seed)``, a PCG64 bit generator, so every
fixture can be regenerated from its seed.
"""
from __future__ import annotations

import numpy as np

from . import numkit
from .blocks import GeneralBlockParam, KYParam
from .systems import PassiveSystem, validate_passive
from .transforms import RedhefferCoupler

PRNG = 'PCG64'
# keeps generated operators strictly inside the unit ball
MARGIN = 1e-3


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def complex_gaussian(generator: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return generator.standard_normal((rows, cols)) + 1j * generator.standard_normal((rows, cols))


def random_contraction(generator: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    matrix = complex_gaussian(generator, rows, cols)
    return matrix / (numkit.opnorm(matrix) + MARGIN)


def random_hermitian_contraction(generator: np.random.Generator, size: int) -> np.ndarray:
    matrix = numkit.symmetrize(complex_gaussian(generator, size, size))
    return numkit.symmetrize(matrix / (numkit.opnorm(matrix) + MARGIN))


def random_unitary(generator: np.random.Generator, size: int) -> np.ndarray:
    q, r = np.linalg.qr(complex_gaussian(generator, size, size))
    diagonal = np.diag(r)
    return q * (diagonal / np.abs(diagonal))


def random_selfadjoint_system(generator: np.random.Generator, dim_input: int, dim_state: int) -> PassiveSystem:
    return validate_passive(random_hermitian_contraction(generator, dim_input + dim_state), dim_input, True)


def random_system(generator: np.random.Generator, dim_input: int, dim_state: int) -> PassiveSystem:
    size = dim_input + dim_state
    return validate_passive(random_contraction(generator, size, size), dim_input)


def random_ky_param(generator: np.random.Generator, dim_input: int, dim_state: int) -> KYParam:
    F = random_hermitian_contraction(generator, dim_state)
    f_space = numkit.defect_space(F)
    K = random_contraction(generator, dim_input, f_space.rank)
    k_space = numkit.defect_space(numkit.adjoint(K))
    Y = random_hermitian_contraction(generator, k_space.rank)
    return KYParam.build(F, K, Y)


def random_general_param(generator: np.random.Generator, dims: tuple[int, int, int, int]) -> GeneralBlockParam:
    """Random (D, N, G, L) for T: M + K -> N + L with dims = (dim M, dim K, dim N, dim L)."""
    dim_m, dim_k, dim_n, dim_l = dims
    D = random_contraction(generator, dim_n, dim_m)
    d_space = numkit.defect_space(D)
    d_star_space = numkit.defect_space(numkit.adjoint(D))
    N = random_contraction(generator, dim_l, d_space.rank)
    G = random_contraction(generator, d_star_space.rank, dim_k)
    n_star_space = numkit.defect_space(numkit.adjoint(N))
    g_space = numkit.defect_space(G)
    L = random_contraction(generator, n_star_space.rank, g_space.rank)
    return GeneralBlockParam.build(D, N, G, L)


def random_coupler(generator: np.random.Generator, dim_input: int, dim_inner: int) -> RedhefferCoupler:
    """Selfadjoint contraction [[K11, K12], [K12*, K22]] with ||K22|| < 1."""
    matrix = random_hermitian_contraction(generator, dim_input + dim_inner)
    return RedhefferCoupler.from_matrix(matrix, dim_input)


def constant_system(D) -> PassiveSystem:
    """Stateless system with Omega identically D."""
    D = np.atleast_2d(np.asarray(D, dtype=complex))
    return validate_passive(D, D.shape[0], True)


def inner_system(D) -> PassiveSystem:
    """Minimal unitary selfadjoint realization of (zI + D)(I + zD)^-1."""
    D = numkit.hermitian(np.atleast_2d(np.asarray(D, dtype=complex)))
    space = numkit.defect_space(D)
    C = space.from_coordinates()
    F = -space.restrict(D)
    T = np.block([[D, C], [numkit.adjoint(C), F]])
    return validate_passive(T, D.shape[0], True)
