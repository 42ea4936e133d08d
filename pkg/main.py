#!/usr/bin/env python3
"""
Main script for distributed observer synthesis, simulation and verification.
Uses the pipeline in src/distributed_observer; run from project root.
"""

import sys
from pathlib import Path

# Ensure src is on path when running from a checkout without installing
_SRC = Path(__file__).resolve().parent / "src"
if str(_SRC) not in sys.path:
    sys.path.insert(0, str(_SRC))


def main() -> int:
    from distributed_observer.cli import main as cli_main

    return cli_main()


if __name__ == "__main__":
    sys.exit(main())
