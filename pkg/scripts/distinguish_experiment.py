"""Likelihood-ratio test error against the Case-1 mixture for shrinking M.

Equivalent to ``drbounds distinguish --config configs/distinguish.toml``.
"""

import sys
from pathlib import Path

from drbounds.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    sys.exit(main(["distinguish", "--config", str(ROOT / "configs" / "distinguish.toml"), *sys.argv[1:]]))
