"""Backend selection for the packet-episode kernel.

The compiled extension is used when it imports; otherwise the pure-Python
twin runs.  ``RELAYSEL_BACKEND=python`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _episode_py

BACKEND = "python"
run_batch = _episode_py.run_batch

if os.environ.get("RELAYSEL_BACKEND", "").lower() != "python":
    try:
        from . import _episode as _compiled
    except ImportError:
        _compiled = None
    if _compiled is not None:
        BACKEND = "cython"
        run_batch = _compiled.run_batch

python_run_batch = _episode_py.run_batch


def compiled_run_batch():
    """The compiled kernel, or None when the extension is not built."""
    try:
        from . import _episode
    except ImportError:
        return None
    return _episode.run_batch
