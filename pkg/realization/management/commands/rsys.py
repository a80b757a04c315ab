import argparse

from django.core.management.base import BaseCommand, CommandError

from realization.reports import HANDLERS, dispatch, parse_point, render_report

TRANSFORM_KINDS = ('phi', 'xi', 'pia', 'eta', 'zeta', 'redheffer')


def point(text: str) -> complex:
    try:
        return parse_point(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f'not a complex number: {text!r}') from exc


def count(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f'expected a nonnegative integer, got {value}')
    return value


class Command(BaseCommand):
    help = 'Realize, transform and check passive selfadjoint systems; prints a JSON report.'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='subcommand', required=True)

        gen = subparsers.add_parser('gen', help='Seeded random passive selfadjoint system.')
        gen.add_argument('--seed', type=count, required=True)
        gen.add_argument('--dim-input', type=count, required=True)
        gen.add_argument('--dim-state', type=count, required=True)
        gen.add_argument('--output')

        evaluate = subparsers.add_parser('eval', help='Transfer function and its transforms at points.')
        evaluate.add_argument('system')
        evaluate.add_argument('--at', type=point, action='append', help='Point like 0.3+0.2i; repeatable.')
        evaluate.add_argument('--stdin', action='store_true', help='Read one "re im" point per line.')

        check = subparsers.add_parser('check', help='Certificate, inner test, Krylov and parametrization checks.')
        check.add_argument('system')

        transform = subparsers.add_parser('transform', help='Realize a transform of the transfer function.')
        transform.add_argument('system')
        transform.add_argument('--kind', choices=TRANSFORM_KINDS, required=True)
        transform.add_argument('--a', type=float)
        transform.add_argument('--coupler')
        transform.add_argument('--output')

        simulate = subparsers.add_parser('simulate', help='Run the system and audit the energy balance.')
        simulate.add_argument('system')
        source = simulate.add_mutually_exclusive_group(required=True)
        source.add_argument('--input')
        source.add_argument('--seed', type=count)
        simulate.add_argument('--steps', type=count)

        for name, text in (('dilate', 'Bi-inner dilation.'), ('measure', 'Spectral measure atoms.')):
            subparsers.add_parser(name, help=text).add_argument('system')

        jacobi = subparsers.add_parser('jacobi', help='Truncated Jacobi realization of the Phi fixed point.')
        jacobi.add_argument('--n', type=count, required=True)
        jacobi.add_argument('--dim-input', type=count, default=1)
        jacobi.add_argument('--output')

        fixedpoint = subparsers.add_parser('fixedpoint', help='Fixed-point identities under the Moebius maps.')
        fixedpoint.add_argument('system')
        fixedpoint.add_argument('--a', type=float, required=True)

        similar = subparsers.add_parser('similar', help='Unitary similarity of two minimal systems.')
        similar.add_argument('system')
        similar.add_argument('other')

    def handle(self, *args, **options):
        command = options['subcommand']
        if command not in HANDLERS:
            raise CommandError(f'Unknown subcommand {command}', returncode=2)
        report = dispatch(command, options)
        self.stdout.write(render_report(report), ending='')
        if 'error' in report:
            error = report['error']
            raise CommandError(f'{error["code"]}: {error["message"]}', returncode=1)
