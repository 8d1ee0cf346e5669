"""``stokes-bench`` entry point.

Exit codes: 0 on success, 2 for bad configuration or input (including mesh
files), 3 when a linear solve fails.
"""

import sys

from .errors import ConfigError, PrStokesError, SolverError
from .study import emit_table, parse_config, run_study

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def main(argv=None):
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"stokes-bench: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_study(config)
    except SolverError as exc:
        print(f"stokes-bench: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except PrStokesError as exc:
        # bad mesh files and unsupported element/space choices are input errors
        print(f"stokes-bench: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text = emit_table(result, config.output, config.out)
    except OSError as exc:
        print(f"stokes-bench: cannot write {config.out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if config.out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
