"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the pure-Python
reference implementation is imported. Set ``LGES_PURE_PYTHON=1`` to force the
fallback (used by the parity tests and the benchmark).
"""

import os

if os.environ.get("LGES_PURE_PYTHON", "") not in ("", "0"):
    from ._kernels_py import *  # noqa: F401,F403
    from ._kernels_py import BACKEND
else:
    try:
        from ._kernels import *  # noqa: F401,F403
        from ._kernels import BACKEND
    except ImportError:
        from ._kernels_py import *  # noqa: F401,F403
        from ._kernels_py import BACKEND

__all__ = [
    "BACKEND",
    "cpdag_from_dag",
    "d_reachable",
    "delete_candidates",
    "descendant_matrix",
    "insert_candidates",
    "is_clique",
    "meek_close",
    "pdag_to_dag",
    "residual_variance",
    "semi_directed_blocked",
    "turn_candidates",
]
