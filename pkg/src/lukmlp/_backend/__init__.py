"""Backend selection: compiled kernels when available, pure Python otherwise.

Both backends implement the same two functions with bit-identical float
semantics; LUKMLP_BACKEND=pure|fast forces the choice (forcing "fast"
without the built extension is an error rather than a silent fallback).
"""

from __future__ import annotations

import os

from . import pure

_requested = os.environ.get("LUKMLP_BACKEND", "").strip().lower()

_impl = None
if _requested in ("", "fast"):
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "fast":
            raise ImportError(
                "LUKMLP_BACKEND=fast but the compiled extension is not built; "
                "reinstall the package or unset LUKMLP_BACKEND"
            )
elif _requested != "pure":
    raise ValueError(f"unknown LUKMLP_BACKEND {_requested!r} (use 'fast' or 'pure')")

if _impl is None:
    _impl = pure

NAME: str = _impl.NAME
batch_gradients = _impl.batch_gradients
forward_outputs = _impl.forward_outputs


def available_backends() -> list[str]:
    names = []
    try:
        from . import _kernels  # noqa: F401

        names.append("fast")
    except ImportError:
        pass
    names.append("pure")
    return names


def get_backend(name: str):
    """Fetch a specific backend module by name (for benchmarks/tests)."""
    if name == "pure":
        return pure
    if name == "fast":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
