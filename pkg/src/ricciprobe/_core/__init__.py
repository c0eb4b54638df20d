"""Solver core with compiled/pure-Python backend selection.

The compiled extension is preferred when present; setting the environment
variable ``RICCIPROBE_PURE_PYTHON=1`` forces the pure-Python twin (used by
the benchmark and for debugging).
"""

import os

if os.environ.get("RICCIPROBE_PURE_PYTHON", "").strip() in ("1", "true", "yes"):
    from . import _pyref as _impl
else:
    try:
        from . import _speedups as _impl
    except ImportError:
        from . import _pyref as _impl

BACKEND = _impl.BACKEND
network_simplex = _impl.network_simplex
quantile_plan_1d = _impl.quantile_plan_1d

__all__ = ["BACKEND", "network_simplex", "quantile_plan_1d"]
