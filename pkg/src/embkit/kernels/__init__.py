"""Training kernel backends.

The hot inner loops exist twice: a compiled Cython module (_fastkern) and a
pure-numpy fallback (pure).  Both consume identical PRNG streams and apply
updates in the same order; they differ only in floating-point reduction
order, so results agree statistically but not bit-for-bit.  Each backend is
bit-reproducible on its own for a fixed seed.

Selection happens once at import time.  Set EMBKIT_KERNELS=pure to force the
fallback (e.g. for benchmarking) or EMBKIT_KERNELS=cython to fail loudly when
the extension is missing.
"""

import os

from embkit.kernels import pure

_choice = os.environ.get("EMBKIT_KERNELS", "auto").lower()

if _choice == "pure":
    _impl = pure
    BACKEND = "pure"
elif _choice == "cython":
    from embkit.kernels import _fastkern as _impl

    BACKEND = "cython"
elif _choice == "auto":
    try:
        from embkit.kernels import _fastkern as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = pure
        BACKEND = "pure"
else:
    raise RuntimeError(
        f"EMBKIT_KERNELS={_choice!r} not understood (use auto, pure or cython)"
    )

sgns_epoch = _impl.sgns_epoch
cbow_epoch = _impl.cbow_epoch
subword_epoch = _impl.subword_epoch
glove_epoch = _impl.glove_epoch


def backends():
    """Names of the importable backends, compiled one first."""
    names = []
    try:
        from embkit.kernels import _fastkern  # noqa: F401

        names.append("cython")
    except ImportError:
        pass
    names.append("pure")
    return names
