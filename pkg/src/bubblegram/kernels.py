"""Kernel backend selection.

The compiled extension is used when importable; set ``BUBBLEGRAM_PURE=1`` to
force the pure-Python fallback.
"""
from __future__ import annotations

import os

from . import _purekernels as pure

if os.environ.get("BUBBLEGRAM_PURE", "") not in ("", "0"):
    impl = pure
else:
    try:
        from . import _ckernels as impl  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        impl = pure

BACKEND = "pure" if impl is pure else "compiled"

pack_ints = impl.pack_ints
pack_bytes = impl.pack_bytes
pack_contexts = impl.pack_contexts
earley_recognize = impl.earley_recognize
set_sim = impl.set_sim
best_sims = impl.best_sims
pair_sims = impl.pair_sims


def backend(name: str):
    """Return the kernel module for ``name`` ('pure' or 'compiled')."""
    if name == "pure":
        return pure
    from . import _ckernels  # type: ignore[attr-defined]
    return _ckernels
