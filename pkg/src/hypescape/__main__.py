"""Module entry point: ``python -m hypescape`` delegates to the CLI."""

import sys

from .cli import main

sys.exit(main())
