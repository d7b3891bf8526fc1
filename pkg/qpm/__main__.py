"""Entry point for `python -m qpm`."""

import sys

from qpm.cli import main

sys.exit(main())
