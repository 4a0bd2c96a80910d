"""``python -m sill`` entry point."""

import sys

from sill.cli import main

sys.exit(main())
