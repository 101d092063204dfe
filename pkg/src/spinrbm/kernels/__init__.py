"""Hot sampling kernel with a compiled (Cython) and a pure-numpy backend.

The compiled backend is selected at import when available; set the
environment variable ``SPINRBM_PURE_PYTHON=1`` to force the numpy path.
Both backends implement the same contract: given a field matrix ``phi``
and uniform variates ``u`` of the same shape, return int8 spins that are
+1 where ``u < sigma(2 * phi)`` and -1 elsewhere (``sigma`` the logistic
function).  The factor of 2 comes from P(s=+1)/P(s=-1) = exp(2*phi) for
+/-1 units.
"""

import os

from ._spin_py import draw_spins as _draw_spins_py

if os.environ.get("SPINRBM_PURE_PYTHON"):
    draw_spins = _draw_spins_py
    BACKEND = "python"
else:
    try:
        from ._spin_cy import draw_spins

        BACKEND = "cython"
    except ImportError:
        draw_spins = _draw_spins_py
        BACKEND = "python"

draw_spins_python = _draw_spins_py

__all__ = ["draw_spins", "draw_spins_python", "BACKEND"]
