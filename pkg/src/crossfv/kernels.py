"""Backend selection for the stencil kernels.

Prefers the compiled extension; falls back to the numpy implementation when
the extension is missing or CROSSFV_PURE_PYTHON is set to a non-empty value.
Both backends are bitwise-equivalent, so the choice only affects speed.
"""

import os

if os.environ.get("CROSSFV_PURE_PYTHON"):
    from . import _core_numpy as _impl
    BACKEND = "numpy"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        from . import _core_numpy as _impl
        BACKEND = "numpy"

grad_1d = _impl.grad_1d
div_1d = _impl.div_1d
upwind_1d = _impl.upwind_1d
apply_tensor_1d = _impl.apply_tensor_1d
grad_2d = _impl.grad_2d
div_2d = _impl.div_2d
upwind_2d = _impl.upwind_2d
apply_tensor_2d = _impl.apply_tensor_2d
