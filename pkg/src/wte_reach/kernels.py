"""Backend selection for the update sweep.

The compiled extension is used when it imports; setting ``WTE_REACH_PURE=1``
forces the numpy implementation.
"""
import os

from . import _llf_py

try:
    from . import _llf as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and os.environ.get("WTE_REACH_PURE", "") in ("", "0"):
    BACKEND = "compiled"
    llf_update = _compiled.llf_update
else:
    BACKEND = "numpy"
    llf_update = _llf_py.llf_update


def available_backends():
    return ["compiled", "numpy"] if _compiled is not None else ["numpy"]


def get_kernel(name):
    if name == "numpy":
        return _llf_py.llf_update
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled backend not built; run `pip install -e .`")
        return _compiled.llf_update
    raise ValueError(f"unknown backend {name!r}")
