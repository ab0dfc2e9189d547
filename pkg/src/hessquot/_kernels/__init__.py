"""Batch kernel selection.

Imports the compiled extension when available, otherwise the numpy
reference implementation.  ``HESSQUOT_PURE_PYTHON=1`` in the environment
forces the reference path (useful for debugging and benchmarking).
"""

import os

from . import reference

if os.environ.get("HESSQUOT_PURE_PYTHON"):
    _impl = reference
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = reference

IMPLEMENTATION = _impl.IMPLEMENTATION

sigma12 = _impl.sigma12
quotient_value_grad = _impl.quotient_value_grad
sigma2_value_grad = _impl.sigma2_value_grad
eigvals_sym2 = _impl.eigvals_sym2
eigvals_sym3 = _impl.eigvals_sym3
hessian_fields_2d = _impl.hessian_fields_2d
hessian_fields_3d = _impl.hessian_fields_3d

__all__ = [
    "IMPLEMENTATION",
    "reference",
    "sigma12",
    "quotient_value_grad",
    "sigma2_value_grad",
    "eigvals_sym2",
    "eigvals_sym3",
    "hessian_fields_2d",
    "hessian_fields_3d",
]
