"""Hot evaluation kernels with a compiled core and a pure-Python fallback.

The compiled module is selected at import when available; setting the
environment variable ``DIRACMECH_PURE_PYTHON=1`` forces the numpy fallback.
Both expose the same functions with identical semantics (see ``_ref``).
"""

import os

from . import _ref

if os.environ.get("DIRACMECH_PURE_PYTHON"):
    _impl = _ref
else:
    try:
        from . import _speed as _impl
    except ImportError:
        _impl = _ref

BACKEND = "pure" if _impl is _ref else "compiled"

MIDPOINT = _ref.MIDPOINT
BACKWARD_EULER = _ref.BACKWARD_EULER

poly_value = _impl.poly_value
poly_grad_q = _impl.poly_grad_q
poly_grad_v = _impl.poly_grad_v
poly_covector = _impl.poly_covector
step_residual = _impl.step_residual
