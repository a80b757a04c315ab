from pathlib import Path

import numpy as np
from django.core.management.base import BaseCommand

from realization import generators
from realization.serializers import CouplerDocumentSerializer, render_document, save_system
from realization.transforms import jacobi_system

# truncation order of the fixed-point fixture; its transfer is within 1e-8 of the Phi fixed point at z = 0.5i
JACOBI_PINNED_N = 8
JACOBI_ORDERS = (1, 2, 4, 8, 16, 32)
INNER_VALUES = {
    'inner_0': [[0.0]],
    'inner_0_3': [[0.3]],
    'inner_diag': [[0.5, 0.0], [0.0, -0.5]],
}


class Command(BaseCommand):
    help = 'Write the seeded fixture corpus: random systems, inner systems, Jacobi truncations and couplers.'

    def add_arguments(self, parser):
        parser.add_argument('directory')
        parser.add_argument('--count', type=int, default=8, help='Number of random systems.')
        parser.add_argument('--seed', type=int, default=0, help='First seed of the random systems.')

    def handle(self, *args, **options):
        directory = Path(options['directory'])
        directory.mkdir(parents=True, exist_ok=True)

        for offset in range(options['count']):
            seed = options['seed'] + offset
            dim_input = 1 + offset % 3
            dim_state = offset % 5
            sys = generators.random_selfadjoint_system(generators.rng(seed), dim_input, dim_state)
            self._save(sys, directory / f'random_{seed}.json')

        self._save(generators.constant_system(np.zeros((1, 1))), directory / 'constant_0.json')
        self._save(generators.constant_system(np.diag([1.0, -1.0])), directory / 'symmetry.json')
        for name, value in INNER_VALUES.items():
            self._save(generators.inner_system(value), directory / f'{name}.json')

        for n in JACOBI_ORDERS:
            self._save(jacobi_system(n), directory / f'jacobi_{n}.json')
        self._save(jacobi_system(JACOBI_PINNED_N), directory / 'jacobi_pinned.json')

        coupler = generators.random_coupler(generators.rng(options['seed']), 1, 1)
        path = directory / 'coupler_1.json'
        path.write_text(render_document(CouplerDocumentSerializer(coupler).data), encoding='utf-8')
        self.stdout.write(self.style.SUCCESS(f'Wrote {path.name}'))

    def _save(self, sys, path: Path) -> None:
        save_system(sys, path)
        self.stdout.write(self.style.SUCCESS(f'Wrote {path.name}'))
