import sys
from pathlib import Path

from invoke import task

from .util import print_and_run

PROJECT_DIR = Path(__file__).resolve().parent.parent
sys.path.append(str(PROJECT_DIR))

# WARNING: Do not import from twpa_flux_sim at this level; tasks should work before the
# package's runtime dependencies are installed.


@task(aliases=['mypy'])
def typecheck(ctx):
    """Run mypy static type analysis."""
    from twpa_flux_sim.constants.paths import PACKAGE_DIR

    print_and_run(f'cd {PROJECT_DIR} && mypy {PACKAGE_DIR}')
    print('🎉🦆 Type checking passed.')


@task(aliases=['pytest'])
def unit(ctx, *, slow=False, update_goldens=False):
    """Run the pytest suite; `--slow` adds the full-device and transient oracle tests.

    `--update-goldens` rewrites tests/goldens/ from this run; implies `--slow`.
    """
    # pyproject deselects slow tests by default; a later -m wins.
    marker = ' -m "slow or not slow"' if slow or update_goldens else ''
    goldens = ' --update-goldens' if update_goldens else ''
    print_and_run(f'cd {PROJECT_DIR} && pytest{marker}{goldens}')
    print('🎉🧪 Unit tests passed.')


@task(
    pre=[typecheck, unit],
    default=True,
)
def default(ctx):
    """Run all tasks."""
    print('🎉❤️  All tests passed!')
