"""Centralised optional-dependency imports.

Each library is imported once at module level.  Consumers check the
``HAS_*`` flags before using the corresponding module reference.
"""
from __future__ import annotations

# ---------------------------------------------------------------------------
# tqdm  (epoch progress bars in the CLI)
# ---------------------------------------------------------------------------
try:
    from tqdm import tqdm as tqdm    # type: ignore[import]
    HAS_TQDM = True
except ImportError:
    tqdm = None  # type: ignore[assignment]
    HAS_TQDM = False
