"""Permite `python -m app <verbo> ...`."""

import sys

from app.cli import main

sys.exit(main())
