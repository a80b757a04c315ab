#!/usr/bin/env python
import os
import sys


def main():
    """Run the passivekit command line (rsys, generate_fixtures, certify_corpus, test)."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'passivekit.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install the packages from requirements.txt into the active virtual environment."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
