"""Allow running as python -m distributed_observer."""

import sys

from distributed_observer.cli import main

if __name__ == "__main__":
    sys.exit(main())
