"""Backend selection for the jet kernels.

The compiled extension is used when importable; setting the environment
variable ``QUARTOP_PURE_PYTHON=1`` forces the numpy fallback.
"""
from __future__ import annotations

import os

from quartop._kernels import _jetcore_py as python_backend

compiled_backend = None
if os.environ.get("QUARTOP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from quartop._kernels import _jetcore as compiled_backend  # type: ignore[no-redef]
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND_NAME = "compiled" if compiled_backend is not None else "python"

mul = backend.mul
div = backend.div
compose = backend.compose

__all__ = ["BACKEND_NAME", "backend", "compiled_backend", "python_backend", "mul", "div", "compose"]
