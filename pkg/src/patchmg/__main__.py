"""Module entry point: `python -m patchmg` runs the experiment CLI."""

import sys

from .cli import main

sys.exit(main())
