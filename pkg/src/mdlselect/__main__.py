"""Module entry point: ``python -m mdlselect`` behaves like ``mdlselect``."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
