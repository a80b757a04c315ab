"""Report assembly for the ``rsys`` command.

Each handler takes a ReportContext, reads its inputs through it (so they end
up in the inputs digest) and returns a JSON-ready result dict. ``dispatch``
wraps the result, or the error, in the common report envelope.
"""
from __future__ import annotations

import hashlib
import json
import logging
import sys as _sys
from typing import Any, Callable

import numpy as np

from . import blocks, generators, grids, numkit, rsclass, systems, transforms
from .conf import tolerances
from .exceptions import DimensionMismatch, InvalidParameter, RealizationError
from .serializers import (
    CouplerDocumentSerializer,
    InputDocumentSerializer,
    SystemDocumentSerializer,
    read_text,
    save_system,
    system_from_text,
    validated,
)

logger = logging.getLogger(__name__)

JACOBI_POINT = 0.5j
FIXED_POINT_Z = 1j


def encode(value: Any) -> Any:
    """Numpy arrays and complex scalars to nested [re, im] lists; everything else to plain JSON types."""
    if isinstance(value, dict):
        return {key: encode(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(item) for item in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return encode(value.tolist())
        return [encode(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [encode(value.real), encode(value.imag)]
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    return value


def parse_point(text: str) -> complex:
    """Parse '0.3+0.2i', '2i', '-i' or '0' into a complex number."""
    cleaned = text.strip().replace(' ', '').replace('I', 'i').replace('j', 'i')
    if cleaned.endswith('i'):
        body = cleaned[:-1]
        if body in ('', '+', '-') or body[-1] in '+-':
            body += '1'
        cleaned = body + 'j'
    return complex(cleaned)


class ReportContext:
    """Inputs of one command: option values and loaded documents, both recorded for the digest."""

    def __init__(self, command: str, options: dict[str, Any]):
        self.command = command
        self.options = options
        self._documents: list[bytes] = []
        self._params: dict[str, Any] = {}

    def option(self, name: str, default: Any = None) -> Any:
        value = self.options.get(name)
        if value is None:
            value = default
        self._params[name] = value
        return value

    def record(self, name: str, value: Any) -> None:
        self._params[name] = value

    def require(self, name: str, what: str) -> Any:
        value = self.option(name)
        if value is None:
            raise InvalidParameter(f'{self.command} --kind {what} needs --{name.replace("_", "-")}')
        return value

    def _read(self, path) -> str:
        text = read_text(path)
        self._documents.append(text.encode('utf-8'))
        return text

    def system(self, name: str = 'system') -> systems.PassiveSystem:
        path = self.options[name]
        return system_from_text(self._read(path), str(path))

    def coupler(self, path) -> transforms.RedhefferCoupler:
        return validated(CouplerDocumentSerializer, self._read(path), str(path))['coupler']

    def trajectory_inputs(self, path) -> dict[str, Any]:
        return validated(InputDocumentSerializer, self._read(path), str(path))

    def digest(self) -> str:
        sha = hashlib.sha256()
        for document in self._documents:
            sha.update(document)
        sha.update(json.dumps(encode(self._params), sort_keys=True).encode('utf-8'))
        return sha.hexdigest()


def _document(sys: systems.PassiveSystem) -> dict[str, Any]:
    return SystemDocumentSerializer(sys).data


def _krylov(report: systems.KrylovReport) -> dict[str, Any]:
    return {
        'controllable_dim': report.controllable_dim,
        'observable_dim': report.observable_dim,
        'dim_state': report.dim_state,
        'minimal': report.minimal,
        'simple': report.simple,
        'ambiguous': report.ambiguous,
        'smallest_direction': report.smallest_direction,
    }


def _write_output(ctx: ReportContext, sys: systems.PassiveSystem) -> str | None:
    output = ctx.options.get('output')
    if output:
        save_system(sys, output)
    return output


# -- gen / jacobi ----------------------------------------------------------------


def gen(ctx: ReportContext) -> dict[str, Any]:
    seed = ctx.option('seed')
    dim_input = ctx.option('dim_input')
    dim_state = ctx.option('dim_state')
    sys = generators.random_selfadjoint_system(generators.rng(seed), dim_input, dim_state)
    return {
        'generator': {'prng': generators.PRNG, 'seed': seed},
        'document': _document(sys),
        'output': _write_output(ctx, sys),
    }


def jacobi(ctx: ReportContext) -> dict[str, Any]:
    n = ctx.option('n')
    dim_input = ctx.option('dim_input', 1)
    sys = transforms.jacobi_system(n, dim_input)
    error = numkit.norm2(systems.transfer(sys, JACOBI_POINT) - transforms.omega0_eval(JACOBI_POINT, dim_input))
    return {
        'n': n,
        'document': _document(sys),
        'minimal': systems.krylov_analysis(sys).minimal,
        'z': JACOBI_POINT,
        'fixed_point_error': error,
        'output': _write_output(ctx, sys),
    }


# -- eval ------------------------------------------------------------------------


def _stdin_points(stream) -> list[complex]:
    points = []
    for number, line in enumerate(stream, start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 2:
            raise InvalidParameter(f'stdin line {number}: expected "re im", got {line.strip()!r}')
        try:
            points.append(complex(float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise InvalidParameter(f'stdin line {number}: {exc}') from exc
    return points


def _evaluate_point(
    sys: systems.PassiveSystem, z: complex, nf: rsclass.NFunction | None, gamma_nf: rsclass.NFunction | None
) -> dict[str, Any]:
    entry: dict[str, Any] = {
        'z': z,
        'omega': systems.transfer(sys, z),
        'derivative': systems.transfer_derivative(sys, z),
        'phi': transforms.phi_eval(sys, z),
    }
    if nf is None:
        return entry
    entry['characteristic'] = rsclass.characteristic_fn(sys.A, z)
    entry['inverse_u'] = rsclass.from_nfunction(nf)(z)
    if z != 0:
        # 1/z is off [-1, 1] for every z of the cut plane
        xi = 1 / z
        entry['xi'] = xi
        entry['nfunction'] = nf.value(xi)
        entry['compressed_resolvent'] = systems.compressed_resolvent(sys.matrix, sys.dim_input, xi)
        entry['gamma'] = rsclass.gamma_transform(nf, xi)
        entry['gamma_realized'] = gamma_nf.value(xi)
    return entry


def evaluate(ctx: ReportContext) -> dict[str, Any]:
    sys = ctx.system()
    points = [complex(z) for z in (ctx.option('at') or [])]
    if ctx.option('stdin', False):
        points.extend(_stdin_points(_sys.stdin))
        ctx.record('stdin_points', points)
    if not points:
        raise InvalidParameter('eval needs at least one point (--at or --stdin)')
    nf = gamma_nf = None
    if sys.selfadjoint:
        nf = rsclass.to_nfunction(sys)
        gamma_nf = transforms.gamma_realize(nf)
    return {'points': [_evaluate_point(sys, systems.check_cut_plane(z), nf, gamma_nf) for z in points]}


# -- check -----------------------------------------------------------------------


def _certificate(cert: rsclass.RSCertificate) -> dict[str, Any]:
    return {
        'verdict': cert.verdict,
        'min_kernel_eig': cert.min_kernel_eig,
        'min_inequality_eig': cert.min_inequality_eig,
        'schur_norm_max': cert.schur_norm_max,
        'tol_psd': cert.tol_psd,
        'tol_norm': cert.tol_norm,
        'grid': list(cert.grid),
    }


def _inner(report: rsclass.InnerReport) -> dict[str, Any]:
    return {
        'is_inner': report.is_inner,
        'd_fit': report.d_fit,
        'fit_residual': report.fit_residual,
        'limit_criteria': report.limit_criteria,
        'moebius_identity_at_a': report.moebius_identity_at_a,
        'unitary_sample': report.unitary_sample,
        'normal': report.normal,
        'limit_identities': report.limit_identities,
    }


def _general_block(sys: systems.PassiveSystem) -> dict[str, Any]:
    p = blocks.general_param_from(sys)
    assembled = blocks.assemble_contraction(p)
    f = np.ones(sys.dim_input, dtype=complex)
    h = np.full(sys.dim_state, 0.5 - 0.5j)
    return {
        'reassembly_residual': numkit.norm2(assembled - sys.matrix),
        'defect_identity_residual': blocks.defect_identity_residual(p, f, h),
    }


def _lemma_w_residual(nx: blocks.NXParam) -> float:
    r = nx.d_space.rank
    return max(
        numkit.norm2(blocks.lemma_w(nx, z) @ blocks.lemma_w_inverse(nx, z) - np.eye(r)) for z in grids.disk_grid()
    )


def _selfadjoint_checks(sys: systems.PassiveSystem, minimal: bool) -> dict[str, Any]:
    ky = blocks.extract_ky(sys)
    nx = blocks.extract_nx(sys)
    limits = rsclass.limit_values(ky)
    rep = rsclass.moebius_rep(sys)
    pick_sample = rsclass.pick_kernel(sys, 0.5j, 1j / 3)
    return {
        'certificate': _certificate(rsclass.certify_rs(sys)),
        'inner': _inner(rsclass.inner_test(sys)) if minimal else None,
        'limit_values': {
            'omega_minus': limits.omega_minus,
            'omega_plus': limits.omega_plus,
            'ordering_gap': limits.ordering_gap(sys.D),
        },
        'ky_reassembly_residual': numkit.norm2(blocks.assemble_selfadjoint_ky(ky).matrix - sys.matrix),
        'nx_reassembly_residual': numkit.norm2(nx.assemble() - sys.matrix),
        'ky_transfer_residual': systems.transfer_gap(
            lambda z: blocks.ky_transfer(ky, z), lambda z: systems.transfer(sys, z), grids.sample_grid()
        ),
        'lemma_w_residual': _lemma_w_residual(nx),
        'moebius': {
            'reconstruction_residual': rep.reconstruction_residual,
            'inverse_formula_residual': rep.inverse_residual,
        },
        'pick_kernel_sample': {'z': 0.5j, 'w': 1j / 3, 'value': pick_sample},
        'beta_circle_bounds': {
            f'{beta:.6f}': {
                'plus': systems.beta_circle_bound(sys, beta, 1),
                'minus': systems.beta_circle_bound(sys, beta, -1),
            }
            for beta in grids.BETA_ANGLES
        },
        'derivative_inequality_min': systems.derivative_inequality_min(sys),
    }


def check(ctx: ReportContext) -> dict[str, Any]:
    sys = ctx.system()
    krylov = systems.krylov_analysis(sys)
    result = {
        'krylov': _krylov(krylov),
        'opnorm': numkit.opnorm(sys.matrix),
        'schur_frobenius_residual': max(systems.schur_frobenius_residual(sys, z) for z in grids.sample_grid()),
        'general_block': _general_block(sys),
    }
    if sys.selfadjoint:
        result.update(_selfadjoint_checks(sys, krylov.minimal))
    return result


# -- transform ---------------------------------------------------------------------


def _expected(kind: str, sys: systems.PassiveSystem, a, coupler) -> Callable[[complex], np.ndarray]:
    def omega(z):
        return systems.transfer(sys, z)

    return {
        'phi': lambda z: transforms.phi_eval(sys, z),
        'xi': lambda z: omega(grids.moebius_point(z, a)),
        'pia': lambda z: transforms.moebius_value(omega(z), a),
        'eta': lambda z: transforms.moebius_value(omega(grids.moebius_point(z, a)), -a),
        'zeta': lambda z: transforms.moebius_value(omega(z), -a),
        'redheffer': lambda z: transforms.theta_value(coupler, omega(z)),
    }[kind]


def transform(ctx: ReportContext) -> dict[str, Any]:
    sys = ctx.system()
    kind = ctx.option('kind')
    a = coupler = None
    extra: dict[str, Any] = {}
    if kind == 'phi':
        realized = transforms.phi_realize(sys)
    elif kind == 'redheffer':
        coupler = ctx.coupler(ctx.require('coupler', kind))
        realized = transforms.redheffer(coupler, sys)
    else:
        a = float(ctx.require('a', kind))
        if kind == 'xi':
            realized = transforms.xi_realize(sys, a)
        elif kind == 'pia':
            realized = transforms.pi_a_realize(sys, a)
            via_coupler = transforms.redheffer(transforms.k_a_coupler(a, sys.dim_input), sys)
            extra['coupler_agreement'] = systems.transfer_gap(
                lambda z: systems.transfer(realized, z), lambda z: systems.transfer(via_coupler, z), grids.sample_grid()
            )
        elif kind == 'eta':
            realized = transforms.operator_moebius(sys, a)
            extra['block_form_residual'] = numkit.norm2(transforms.attrns_blocks(sys, a) - realized.matrix)
        else:
            realized = transforms.zeta_realize(sys, a)

    residual = systems.transfer_gap(
        lambda z: systems.transfer(realized, z), _expected(kind, sys, a, coupler), grids.sample_grid()
    )
    return {
        'kind': kind,
        'a': a,
        'document': _document(realized),
        'transfer_residual': residual,
        'minimal': systems.krylov_analysis(realized).minimal,
        **extra,
        'output': _write_output(ctx, realized),
    }


# -- simulate / similar --------------------------------------------------------------


def simulate(ctx: ReportContext) -> dict[str, Any]:
    sys = ctx.system()
    steps = ctx.option('steps')
    path = ctx.option('input')
    if path:
        document = ctx.trajectory_inputs(path)
        h0, inputs = document['h0'], document['inputs']
        if steps is not None:
            if steps > len(inputs):
                raise DimensionMismatch(f'--steps {steps} exceeds the {len(inputs)} inputs of {path}')
            inputs = inputs[:steps]
    else:
        seed = ctx.option('seed')
        if seed is None or steps is None:
            raise InvalidParameter('simulate needs --input or --seed with --steps')
        generator = generators.rng(seed)
        h0 = generators.complex_gaussian(generator, sys.dim_state, 1).reshape(-1)
        inputs = generators.complex_gaussian(generator, steps, sys.dim_input)
    trajectory = systems.simulate(sys, h0, inputs)
    return {
        'steps': trajectory.steps,
        'min_energy_defect': trajectory.min_energy_defect,
        'energy_defect': trajectory.energy_defect,
        'outputs': trajectory.outputs,
        'final_state': trajectory.states[-1],
    }


def similar(ctx: ReportContext) -> dict[str, Any]:
    first = ctx.system('system')
    second = ctx.system('other')
    unitary = systems.unitary_similarity(first, second)
    return {'similar': unitary is not None, 'unitary': unitary}


# -- dilate / measure / fixedpoint ---------------------------------------------------


def _dilation(dil: transforms.InnerDilation) -> dict[str, Any]:
    return {
        'dim_ambient': dil.dim_ambient,
        'dim_input': dil.dim_input,
        'a_tilde': dil.a_tilde,
        'reconstruction_residual': dil.reconstruction_residual,
        'simple': dil.simple,
    }


def dilate(ctx: ReportContext) -> dict[str, Any]:
    sys = ctx.system()
    dil = transforms.inner_dilate(sys)
    defect = np.eye(sys.size) - sys.matrix @ sys.matrix
    # a unitary T has an empty defect range; its I - T^2 is rounding noise
    if numkit.opnorm(defect) <= tolerances.RTOL:
        defect_range = np.zeros((sys.size, 0), dtype=complex)
    else:
        defect_range = numkit.range_embed(defect)
    return {**_dilation(dil), 'defect_range_embedding': defect_range, 'inner': dil.dim_ambient == dil.dim_input}


def measure(ctx: ReportContext) -> dict[str, Any]:
    sys = ctx.system()
    dil = transforms.inner_dilate(sys)
    spectral = transforms.spectral_measure(dil)
    m = sys.dim_input
    return {
        'atoms': [{'t': t, 'weight': weight} for t, weight in spectral.atoms],
        'total_residual': numkit.norm2(spectral.total() - np.eye(m)),
        'reconstruction_residual': systems.transfer_gap(
            spectral.evaluate, lambda z: systems.transfer(sys, z), grids.sample_grid()
        ),
    }


def fixedpoint(ctx: ReportContext) -> dict[str, Any]:
    sys = ctx.system()
    a = ctx.option('a')
    report = transforms.fixed_point_tests(sys, a)
    m = sys.dim_input
    omega0 = transforms.omega0_eval(FIXED_POINT_Z, m)
    m0 = transforms.m0_eval(FIXED_POINT_Z, m)
    return {
        'a': report.a,
        'composition_fixed': report.composition_fixed,
        'conjugated_fixed': report.conjugated_fixed,
        'reflected_fixed': report.reflected_fixed,
        'residuals': report.residuals,
        'sample_grid': list(grids.sample_grid()),
        'reference': {
            'z': FIXED_POINT_Z,
            'omega0': omega0,
            'm0': m0,
            'phi_residual': numkit.norm2(transforms.phi_value(omega0, FIXED_POINT_Z) - omega0),
            'gamma_residual': numkit.norm2(rsclass.gamma_value(m0, FIXED_POINT_Z) - m0),
        },
    }


HANDLERS: dict[str, Callable[[ReportContext], dict[str, Any]]] = {
    'gen': gen,
    'eval': evaluate,
    'check': check,
    'transform': transform,
    'simulate': simulate,
    'dilate': dilate,
    'measure': measure,
    'jacobi': jacobi,
    'fixedpoint': fixedpoint,
    'similar': similar,
}

# library operation -> the one command that reaches it
OPERATION_COVERAGE: dict[str, str] = {
    'numkit.eigh': 'measure',
    'numkit.psd_sqrt': 'check',
    'numkit.pinv': 'check',
    'numkit.range_embed': 'dilate',
    'numkit.opnorm': 'check',
    'systems.validate_passive': 'gen',
    'systems.transfer': 'eval',
    'systems.transfer_derivative': 'eval',
    'systems.compressed_resolvent': 'eval',
    'systems.krylov_analysis': 'check',
    'systems.simulate': 'simulate',
    'systems.unitary_similarity': 'similar',
    'systems.schur_frobenius_residual': 'check',
    'systems.beta_circle_bound': 'check',
    'systems.derivative_inequality_min': 'check',
    'blocks.fundamental_jf': 'check',
    'blocks.assemble_selfadjoint_ky': 'check',
    'blocks.extract_ky': 'check',
    'blocks.extract_nx': 'check',
    'blocks.assemble_contraction': 'check',
    'blocks.general_param_from': 'check',
    'blocks.defect_identity_residual': 'check',
    'blocks.ky_transfer': 'check',
    'blocks.lemma_w': 'check',
    'blocks.lemma_w_inverse': 'check',
    'rsclass.characteristic_fn': 'eval',
    'rsclass.pick_kernel': 'check',
    'rsclass.certify_rs': 'check',
    'rsclass.limit_values': 'check',
    'rsclass.moebius_rep': 'check',
    'rsclass.inner_test': 'check',
    'rsclass.to_nfunction': 'eval',
    'rsclass.from_nfunction': 'eval',
    'rsclass.gamma_transform': 'eval',
    'transforms.phi_eval': 'eval',
    'transforms.phi_realize': 'transform',
    'transforms.xi_realize': 'transform',
    'transforms.operator_moebius': 'transform',
    'transforms.moebius_operator': 'transform',
    'transforms.attrns_blocks': 'transform',
    'transforms.redheffer': 'transform',
    'transforms.k_a_coupler': 'transform',
    'transforms.theta_value': 'transform',
    'transforms.pi_a_realize': 'transform',
    'transforms.zeta_realize': 'transform',
    'transforms.omega0_eval': 'fixedpoint',
    'transforms.m0_eval': 'fixedpoint',
    'transforms.jacobi_system': 'jacobi',
    'transforms.inner_dilate': 'dilate',
    'transforms.dilation_system': 'dilate',
    'transforms.gamma_realize': 'eval',
    'transforms.spectral_measure': 'measure',
    'transforms.fixed_point_tests': 'fixedpoint',
    'serializers.load_system': 'eval',
    'serializers.save_system': 'gen',
}


def envelope(command: str, digest: str, body: dict[str, Any]) -> dict[str, Any]:
    return {
        'command': command,
        'inputs_digest': digest,
        'tolerances': tolerances.as_dict(),
        **body,
    }


def dispatch(command: str, options: dict[str, Any]) -> dict[str, Any]:
    """Run one command and return its report; domain errors become an ``error`` entry."""
    ctx = ReportContext(command, options)
    try:
        result = HANDLERS[command](ctx)
    except RealizationError as exc:
        logger.info('%s failed: %s (%s)', command, exc, exc.code)
        return envelope(command, ctx.digest(), {'error': exc.as_dict()})
    result = {key: value for key, value in result.items() if value is not None}
    return envelope(command, ctx.digest(), {'result': encode(result)})


def render_report(report: dict[str, Any]) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + '\n'
