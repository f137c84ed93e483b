"""Texture-matrix kernels with a compiled fast path.

The Cython extension is used when importable unless CIRCA_NO_EXT=1 forces
the numpy fallback. Both implementations produce bit-identical integer
count matrices; a parity test and benchmark compare them.
"""

import os

from . import texture_py

if os.environ.get("CIRCA_NO_EXT"):
    _impl = texture_py
else:
    try:
        from . import texture_cy as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = texture_py

glcm_counts = _impl.glcm_counts
glrlm_counts = _impl.glrlm_counts
glszm_counts = _impl.glszm_counts
ngtdm_sums = _impl.ngtdm_sums


def backend_name() -> str:
    return "compiled" if _impl.__name__.endswith("texture_cy") else "python"
