import json
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from importlib import import_module
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from realization import grids, systems
from realization.management.commands import rsys
from realization.reports import HANDLERS, OPERATION_COVERAGE, parse_point
from realization.serializers import dump_system, load_system

FIXTURES = Path(__file__).resolve().parent.parent / 'fixtures'


def run(*argv):
    """Run ``manage.py rsys`` in-process; returns (parsed stdout or None, exit code)."""
    out, err = StringIO(), StringIO()
    code = 0
    with redirect_stdout(out), redirect_stderr(err):
        try:
            rsys.Command().run_from_argv(['manage.py', 'rsys', *map(str, argv)])
        except SystemExit as exc:
            code = exc.code
    text = out.getvalue()
    return (json.loads(text) if text.strip() else None), code


def fixture(name):
    return str(FIXTURES / name)


def as_complex(pair):
    return complex(pair[0], pair[1])


class ExitCodeTests(SimpleTestCase):
    def test_success(self):
        report, code = run('check', fixture('shift.json'))
        self.assertEqual(code, 0)
        self.assertEqual(report['command'], 'check')
        self.assertIn('result', report)

    def test_domain_error_prints_report_and_exits_one(self):
        report, code = run('check', fixture('not_contraction.json'))
        self.assertEqual(code, 1)
        self.assertEqual(report['error']['code'], 'not_contraction')
        self.assertNotIn('result', report)

    def test_unknown_subcommand(self):
        report, code = run('nosuch')
        self.assertEqual(code, 2)
        self.assertIsNone(report)

    def test_unknown_option(self):
        _, code = run('eval', fixture('shift.json'), '--at', '0.1', '--bogus')
        self.assertEqual(code, 2)

    def test_bad_point(self):
        _, code = run('eval', fixture('shift.json'), '--at', 'zero')
        self.assertEqual(code, 2)

    def test_bad_transform_kind(self):
        _, code = run('transform', fixture('shift.json'), '--kind', 'nope')
        self.assertEqual(code, 2)

    def test_missing_parameter_is_a_domain_error(self):
        report, code = run('transform', fixture('shift.json'), '--kind', 'xi')
        self.assertEqual(code, 1)
        self.assertEqual(report['error']['code'], 'invalid_parameter')

    def test_missing_file(self):
        report, code = run('check', fixture('does_not_exist.json'))
        self.assertEqual(code, 1)
        self.assertEqual(report['error']['code'], 'unreadable_document')

    def test_document_that_is_not_utf8(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'latin1.json'
            path.write_bytes(b'{"format_version": "\xff"}')
            report, code = run('check', path)
        self.assertEqual(code, 1)
        self.assertEqual(report['error']['code'], 'unreadable_document')
        self.assertIn('not UTF-8', report['error']['message'])

    def test_call_command_raises_command_error(self):
        with self.assertRaises(CommandError):
            call_command('rsys', 'check', fixture('not_contraction.json'), stdout=StringIO())


class EnvelopeTests(SimpleTestCase):
    def test_envelope_fields(self):
        report, _ = run('check', fixture('constant_0.json'))
        self.assertEqual(set(report), {'command', 'inputs_digest', 'tolerances', 'result'})
        self.assertEqual(len(report['inputs_digest']), 64)
        self.assertIn('match_tol', report['tolerances'])

    def test_digest_tracks_inputs(self):
        first, _ = run('gen', '--seed', 3, '--dim-input', 1, '--dim-state', 2)
        again, _ = run('gen', '--seed', 3, '--dim-input', 1, '--dim-state', 2)
        other, _ = run('gen', '--seed', 4, '--dim-input', 1, '--dim-state', 2)
        self.assertEqual(first, again)
        self.assertNotEqual(first['inputs_digest'], other['inputs_digest'])

    def test_parse_point(self):
        self.assertEqual(parse_point('0.3+0.2i'), 0.3 + 0.2j)
        self.assertEqual(parse_point('2i'), 2j)
        self.assertEqual(parse_point('-i'), -1j)
        self.assertEqual(parse_point('0'), 0j)
        self.assertEqual(parse_point('-1.5-0.5i'), -1.5 - 0.5j)


class GenAndJacobiTests(SimpleTestCase):
    def test_gen_writes_canonical_document(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'random.json'
            report, code = run('gen', '--seed', 5, '--dim-input', 2, '--dim-state', 3, '--output', path)
            self.assertEqual(code, 0)
            self.assertEqual(report['result']['generator'], {'prng': 'PCG64', 'seed': 5})
            text = path.read_text(encoding='utf-8')
            self.assertEqual(json.loads(text), report['result']['document'])
            self.assertEqual(dump_system(load_system(path)), text)

    def test_jacobi(self):
        report, code = run('jacobi', '--n', 8)
        self.assertEqual(code, 0)
        self.assertTrue(report['result']['minimal'])
        self.assertLess(report['result']['fixed_point_error'], 1e-8)


class EvalTests(SimpleTestCase):
    def test_value_at_zero_is_d_block(self):
        report, _ = run('eval', fixture('constant_0_4.json'), '--at', '0')
        point = report['result']['points'][0]
        self.assertEqual(point['omega'], [[[0.4, 0.0]]])
        self.assertNotIn('nfunction', point)

    def test_shift(self):
        report, _ = run('eval', fixture('shift.json'), '--at', '0.5i', '--at=-0.2+0.1i')
        points = report['result']['points']
        self.assertEqual(len(points), 2)
        self.assertAlmostEqual(as_complex(points[0]['omega'][0][0]), 0.5j)
        self.assertAlmostEqual(as_complex(points[0]['phi'][0][0]), 0.0)
        self.assertAlmostEqual(as_complex(points[0]['xi']), -2j)
        for key in ('nfunction', 'compressed_resolvent'):
            # M(xi) = xi / (1 - xi^2) at xi = -2i
            self.assertAlmostEqual(as_complex(points[0][key][0][0]), -2j / 5)

    def test_points_from_stdin(self):
        with mock.patch('sys.stdin', StringIO('0.1 0.2\n\n-0.3 0\n')):
            report, code = run('eval', fixture('scaled_shift.json'), '--stdin')
        self.assertEqual(code, 0)
        values = [as_complex(p['omega'][0][0]) for p in report['result']['points']]
        assert_allclose(values, [(0.1 + 0.2j) / 4, -0.3 / 4])

    def test_cut_rejected(self):
        report, code = run('eval', fixture('shift.json'), '--at', '2')
        self.assertEqual(code, 1)
        self.assertEqual(report['error']['code'], 'outside_cut_plane')

    def test_needs_a_point(self):
        report, code = run('eval', fixture('shift.json'))
        self.assertEqual(code, 1)
        self.assertEqual(report['error']['code'], 'invalid_parameter')


class CheckTests(SimpleTestCase):
    def test_inner_fixture(self):
        result = run('check', fixture('inner_0_6.json'))[0]['result']
        self.assertTrue(result['krylov']['minimal'])
        self.assertEqual(result['certificate']['verdict'], 'pass')
        self.assertTrue(result['inner']['is_inner'])
        self.assertAlmostEqual(result['inner']['d_fit'][0][0][0], 0.6)
        self.assertLess(result['ky_reassembly_residual'], 1e-9)
        self.assertLess(result['nx_reassembly_residual'], 1e-9)

    def test_scaled_shift(self):
        result = run('check', fixture('scaled_shift.json'))[0]['result']
        self.assertFalse(result['inner']['is_inner'])
        self.assertIsNone(result['inner']['d_fit'])
        self.assertGreaterEqual(result['derivative_inequality_min'], -1e-9)
        for bounds in result['beta_circle_bounds'].values():
            self.assertLessEqual(bounds['plus'], 1 + 1e-9)
            self.assertLessEqual(bounds['minus'], 1 + 1e-9)

    def test_general_system_skips_selfadjoint_checks(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'general.json'
            path.write_text(json.dumps({
                'format_version': '1',
                'dim_input': 1,
                'dim_state': 1,
                'selfadjoint': False,
                'matrix': [[[0.0, 0.0], [0.5, 0.0]], [[0.0, 0.0], [0.3, 0.0]]],
            }))
            result = run('check', path)[0]['result']
        self.assertNotIn('certificate', result)
        self.assertLess(result['general_block']['defect_identity_residual'], 1e-9)


class TransformTests(SimpleTestCase):
    def test_phi_twice_restores_transfer(self):
        with tempfile.TemporaryDirectory() as directory:
            base = Path(directory)
            run('gen', '--seed', 17, '--dim-input', 2, '--dim-state', 3, '--output', base / 'sys.json')
            first, code = run('transform', base / 'sys.json', '--kind', 'phi', '--output', base / 'phi.json')
            self.assertEqual(code, 0)
            self.assertLess(first['result']['transfer_residual'], 1e-9)
            run('transform', base / 'phi.json', '--kind', 'phi', '--output', base / 'phi2.json')
            original = load_system(base / 'sys.json')
            twice = load_system(base / 'phi2.json')
        gap = systems.transfer_gap(
            lambda z: systems.transfer(twice, z), lambda z: systems.transfer(original, z), grids.sample_grid()
        )
        self.assertLess(gap, 1e-9)

    def test_parameter_kinds(self):
        for kind in ('xi', 'pia', 'eta', 'zeta'):
            with self.subTest(kind=kind):
                report, code = run('transform', fixture('shift.json'), '--kind', kind, '--a', '0.4')
                self.assertEqual(code, 0)
                self.assertLess(report['result']['transfer_residual'], 1e-9)
        report, _ = run('transform', fixture('shift.json'), '--kind', 'pia', '--a', '0.4')
        self.assertLess(report['result']['coupler_agreement'], 1e-9)
        report, _ = run('transform', fixture('shift.json'), '--kind', 'eta', '--a', '0.4')
        self.assertLess(report['result']['block_form_residual'], 1e-9)

    def test_parameter_out_of_range(self):
        report, code = run('transform', fixture('shift.json'), '--kind', 'zeta', '--a', '1')
        self.assertEqual(code, 1)
        self.assertEqual(report['error']['code'], 'invalid_parameter')

    def test_redheffer_with_coupler_document(self):
        with tempfile.TemporaryDirectory() as directory:
            call_command('generate_fixtures', directory, '--count', '1', stdout=StringIO())
            report, code = run(
                'transform', fixture('shift.json'), '--kind', 'redheffer', '--coupler', Path(directory) / 'coupler_1.json'
            )
        self.assertEqual(code, 0)
        self.assertLess(report['result']['transfer_residual'], 1e-9)

    def test_infeasible_coupler(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'coupler.json'
            path.write_text(json.dumps({'k11': [[[0, 0]]], 'k12': [[[0, 0]]], 'k22': [[[1, 0]]]}))
            report, code = run('transform', fixture('constant_0_4.json'), '--kind', 'redheffer', '--coupler', path)
        self.assertEqual(code, 1)
        self.assertEqual(report['error']['code'], 'infeasible_coupler')


class SimulateAndSimilarTests(SimpleTestCase):
    def test_input_document(self):
        report, code = run('simulate', fixture('shift.json'), '--input', fixture('inputs_shift.json'))
        self.assertEqual(code, 0)
        self.assertEqual(report['result']['steps'], 3)
        self.assertGreaterEqual(report['result']['min_energy_defect'], -1e-12)

    def test_seeded_inputs(self):
        report, _ = run('simulate', fixture('scaled_shift.json'), '--seed', 3, '--steps', 50)
        self.assertEqual(report['result']['steps'], 50)
        self.assertGreaterEqual(report['result']['min_energy_defect'], -1e-10)

    def test_too_many_steps(self):
        report, code = run('simulate', fixture('shift.json'), '--input', fixture('inputs_shift.json'), '--steps', 9)
        self.assertEqual(code, 1)
        self.assertEqual(report['error']['code'], 'dimension_mismatch')

    def test_similar_to_itself(self):
        report, _ = run('similar', fixture('inner_0_6.json'), fixture('inner_0_6.json'))
        self.assertTrue(report['result']['similar'])
        assert_allclose([[abs(as_complex(report['result']['unitary'][0][0]))]], [[1.0]])

    def test_not_similar(self):
        report, _ = run('similar', fixture('shift.json'), fixture('scaled_shift.json'))
        self.assertFalse(report['result']['similar'])


class DilationCommandTests(SimpleTestCase):
    def test_dilate_zero_function(self):
        result = run('dilate', fixture('constant_0.json'))[0]['result']
        self.assertEqual(result['dim_ambient'], 2)
        self.assertFalse(result['inner'])
        self.assertEqual(result['defect_range_embedding'], [[[1.0, 0.0]]])

    def test_dilate_inner_function(self):
        result = run('dilate', fixture('shift.json'))[0]['result']
        self.assertEqual(result['dim_ambient'], 1)
        self.assertTrue(result['inner'])
        self.assertEqual(result['defect_range_embedding'], [[], []])

    def test_measure(self):
        result = run('measure', fixture('constant_0.json'))[0]['result']
        assert_allclose([atom['t'] for atom in result['atoms']], [-1.0, 1.0])
        self.assertLess(result['total_residual'], 1e-12)

    def test_non_minimal_system(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'decoupled.json'
            path.write_text(json.dumps({
                'format_version': '1',
                'dim_input': 1,
                'dim_state': 1,
                'selfadjoint': True,
                'matrix': [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.3, 0.0]]],
            }))
            report, code = run('dilate', path)
        self.assertEqual(code, 1)
        self.assertEqual(report['error']['code'], 'minimality_required')


class FixedPointCommandTests(SimpleTestCase):
    def test_reference_values(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'jacobi.json'
            run('jacobi', '--n', 16, '--output', path)
            report, code = run('fixedpoint', path, '--a', 0.5)
        self.assertEqual(code, 0)
        reference = report['result']['reference']
        self.assertAlmostEqual(reference['omega0'][0][0][0], 0.0)
        self.assertAlmostEqual(reference['omega0'][0][0][1], 0.41421356, places=8)
        self.assertAlmostEqual(reference['m0'][0][0][1], 0.70710678, places=8)
        self.assertLess(reference['phi_residual'], 1e-12)

    def test_zero_parameter(self):
        report, code = run('fixedpoint', fixture('shift.json'), '--a', 0)
        self.assertEqual(code, 1)
        self.assertEqual(report['error']['code'], 'invalid_parameter')


class CorpusTests(SimpleTestCase):
    def test_generated_corpus_certifies_and_round_trips(self):
        with tempfile.TemporaryDirectory() as directory:
            out = StringIO()
            call_command('generate_fixtures', directory, '--count', '4', '--seed', '10', stdout=out)
            self.assertIn('Wrote jacobi_pinned.json', out.getvalue())
            out = StringIO()
            call_command('certify_corpus', directory, stdout=out)
            self.assertIn('Certified random_10.json', out.getvalue())
            self.assertIn('Skipped coupler_1.json', out.getvalue())
            for path in Path(directory).glob('*.json'):
                if path.name.startswith('coupler'):
                    continue
                with self.subTest(name=path.name):
                    self.assertEqual(dump_system(load_system(path)), path.read_text(encoding='utf-8'))

    def test_bundled_fixtures(self):
        with tempfile.TemporaryDirectory() as directory:
            for path in FIXTURES.glob('*.json'):
                if path.name != 'not_contraction.json':
                    (Path(directory) / path.name).write_text(path.read_text())
            out = StringIO()
            call_command('certify_corpus', directory, stdout=out)
        self.assertIn('Certified shift.json', out.getvalue())
        self.assertIn('Skipped inputs_shift.json', out.getvalue())

    def test_certify_corpus_needs_directory(self):
        with self.assertRaises(CommandError):
            call_command('certify_corpus', str(FIXTURES / 'shift.json'), stdout=StringIO())


class OperationCoverageTests(SimpleTestCase):
    def test_every_operation_resolves(self):
        for operation, command in OPERATION_COVERAGE.items():
            with self.subTest(operation=operation):
                module_name, name = operation.split('.')
                module = import_module(f'realization.{module_name}')
                self.assertTrue(callable(getattr(module, name)))
                self.assertIn(command, HANDLERS)

    def test_every_command_reaches_an_operation(self):
        self.assertEqual(set(OPERATION_COVERAGE.values()), set(HANDLERS))
