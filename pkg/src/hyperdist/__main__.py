"""Permite ejecutar la CLI con: python -m hyperdist <subcomando> ..."""

import sys

from hyperdist.cli import main

if __name__ == "__main__":
    sys.exit(main())
