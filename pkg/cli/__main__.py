"""Allow ``python -m cli <subcommand>``."""

import sys

from .main import main

if __name__ == "__main__":
    sys.exit(main())
