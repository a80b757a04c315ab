from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from realization.exceptions import RealizationError
from realization.rsclass import certify_rs
from realization.serializers import load_system


class Command(BaseCommand):
    help = 'Run the class certificate over every system document in a directory.'

    def add_arguments(self, parser):
        parser.add_argument('directory')

    def handle(self, *args, **options):
        directory = Path(options['directory'])
        if not directory.is_dir():
            raise CommandError(f'{directory} is not a directory')
        failures = 0
        for path in sorted(directory.glob('*.json')):
            try:
                sys = load_system(path)
            except RealizationError as exc:
                # couplers and trajectory inputs share the directory
                self.stdout.write(f'Skipped {path.name}: {exc.code}')
                continue
            certificate = certify_rs(sys)
            if certificate.passed:
                self.stdout.write(self.style.SUCCESS(f'Certified {path.name}'))
            else:
                failures += 1
                self.stdout.write(self.style.ERROR(
                    f'Failed {path.name} (kernel {certificate.min_kernel_eig:.3e}, '
                    f'inequality {certificate.min_inequality_eig:.3e}, norm {certificate.schur_norm_max:.12g})'
                ))
        if failures:
            raise CommandError(f'{failures} document(s) failed certification')
