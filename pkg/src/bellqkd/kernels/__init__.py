"""Batch detection kernels.

Two interchangeable implementations of the per-pulse hot loop exist: a
compiled Cython extension (``_fast``) and a pure-NumPy fallback
(``_reference``).  Both consume identical pre-drawn uniform arrays and apply
identical table-lookup rules, so their tallies match exactly, not just
statistically.  Selection order: the ``BELLQKD_BACKEND`` environment variable
(``compiled`` / ``python``) wins, otherwise the compiled kernel is used when
importable.
"""

import os

from . import _reference

try:
    from . import _fast as _compiled
except ImportError:
    _compiled = None


def compiled_available() -> bool:
    return _compiled is not None


def get_backend(name=None):
    """Resolve a kernel module by name ('compiled', 'python', 'auto'/None)."""
    if name is None or name == "auto":
        name = os.environ.get("BELLQKD_BACKEND", "")
    if name in ("", "auto", None):
        return _compiled if _compiled is not None else _reference
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel requested but not built")
        return _compiled
    if name == "python":
        return _reference
    raise ValueError(f"unknown backend {name!r} (expected 'compiled' or 'python')")


def backend_name(module) -> str:
    return "compiled" if (_compiled is not None and module is _compiled) else "python"
