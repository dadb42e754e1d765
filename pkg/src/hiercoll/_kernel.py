"""Selects the event-loop kernel: compiled if importable, else pure Python.

Set ``HIERCOLL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernel_py

if os.environ.get("HIERCOLL_PURE_PYTHON") == "1":
    run = _kernel_py.run
    BACKEND = "python"
else:
    try:
        from ._kernel_c import run
    except ImportError:
        run = _kernel_py.run
        BACKEND = "python"
    else:
        BACKEND = "compiled"

KERNELS = {"python": _kernel_py.run}
if BACKEND == "compiled":
    KERNELS["compiled"] = run
