"""Entry point for ``python -m psiotdr``."""
import sys

from psiotdr.app import main

if __name__ == "__main__":
    sys.exit(main())
