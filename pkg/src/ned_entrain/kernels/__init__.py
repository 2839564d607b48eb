"""Numerical kernel backend selection.

Two interchangeable backends implement the hot loops: `_ckernels` (compiled
Cython extension) and `_pykernels` (pure numpy). The compiled backend is
preferred when importable; the env var NED_BACKEND forces a choice:

  NED_BACKEND=auto     compiled if available, else pure Python (default)
  NED_BACKEND=cython   compiled, ImportError if the extension is missing
  NED_BACKEND=python   pure numpy

`BACKEND` names the backend actually in use.
"""

from __future__ import annotations

import os as _os

_requested = _os.environ.get("NED_BACKEND", "auto").strip().lower() or "auto"
if _requested not in {"auto", "cython", "python"}:
    raise ImportError(
        f"NED_BACKEND must be one of auto/cython/python, got {_requested!r}"
    )

if _requested == "python":
    from . import _pykernels as _impl

    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _pykernels as _impl  # type: ignore[no-redef]

        BACKEND = "python"

bn_train = _impl.bn_train
bn_eval = _impl.bn_eval
bn_backward = _impl.bn_backward
relu = _impl.relu
relu_backward = _impl.relu_backward
smooth_l1 = _impl.smooth_l1
kl_softmax = _impl.kl_softmax
adam_update = _impl.adam_update
column_functionals = _impl.column_functionals

__all__ = [
    "BACKEND",
    "adam_update",
    "bn_backward",
    "bn_eval",
    "bn_train",
    "column_functionals",
    "kl_softmax",
    "relu",
    "relu_backward",
    "smooth_l1",
]
