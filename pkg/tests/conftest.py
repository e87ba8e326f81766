"""Test configuration: ensure the src layout is importable for IDE runs."""
from __future__ import annotations

import sys
from pathlib import Path

# Add repository src to sys.path so `import elicitest` works regardless of CWD.
ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"

for path in (SRC, ROOT):
    if str(path) not in sys.path:
        sys.path.insert(0, str(path))
