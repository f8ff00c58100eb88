"""Backend selection for the boosting split search.

The compiled extension is used when it was built; otherwise the numpy
implementation is. Set ``HYBRIDTRANSFER_PURE_PYTHON=1`` to force the
fallback.
"""

import os

from . import _split_py

BACKEND = "python"
best_split = _split_py.best_split

if os.environ.get("HYBRIDTRANSFER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _split as _compiled
    except ImportError:
        pass
    else:
        best_split = _compiled.best_split
        BACKEND = "cython"

python_best_split = _split_py.best_split


def compiled_best_split():
    """The compiled kernel, or None if the extension is unavailable."""
    try:
        from . import _split
    except ImportError:
        return None
    return _split.best_split
