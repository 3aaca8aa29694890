"""Kernel backend selection: compiled extension when built, numpy otherwise.

Both backends implement the same contract; ``scenario_exposures`` routes to
the active one and normalizes array dtypes/contiguity for the compiled path.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernel_py

if os.environ.get("CCPNET_FORCE_NUMPY") == "1":
    _ckernel = None
    HAVE_COMPILED = False
else:
    try:
        from . import _ckernel

        HAVE_COMPILED = True
    except ImportError:  # extension not built; fall back to numpy
        _ckernel = None
        HAVE_COMPILED = False

DEFAULT_BACKEND = "cython" if HAVE_COMPILED else "numpy"


def available_backends() -> tuple[str, ...]:
    return ("numpy", "cython") if HAVE_COMPILED else ("numpy",)


def scenario_exposures(
    y,
    s_plus,
    s_minus,
    pair_i,
    pair_j,
    resid_w,
    ccp_w,
    ccp_offsets,
    n_dealers,
    backend: str | None = None,
) -> np.ndarray:
    """Realized exposures (paths, scenarios, dealers) on the chosen backend."""
    name = backend or DEFAULT_BACKEND
    if name == "numpy":
        return _kernel_py.scenario_exposures(
            y, s_plus, s_minus, pair_i, pair_j, resid_w, ccp_w, ccp_offsets, n_dealers
        )
    if name == "cython":
        if not HAVE_COMPILED:
            raise RuntimeError(
                "compiled kernel requested but ccpnet._ckernel is not built; "
                "run `pip install -e .` with a C compiler or use backend='numpy'"
            )
        y = np.ascontiguousarray(y, dtype=np.float64)
        out = np.empty((y.shape[0], resid_w.shape[0], n_dealers))
        _ckernel.scenario_exposures(
            y,
            np.ascontiguousarray(s_plus, dtype=np.float64),
            np.ascontiguousarray(s_minus, dtype=np.float64),
            np.ascontiguousarray(pair_i, dtype=np.intp),
            np.ascontiguousarray(pair_j, dtype=np.intp),
            np.ascontiguousarray(resid_w, dtype=np.float64),
            np.ascontiguousarray(ccp_w, dtype=np.float64),
            np.ascontiguousarray(ccp_offsets, dtype=np.intp),
            n_dealers,
            out,
        )
        return out
    raise ValueError(f"unknown kernel backend {name!r}")
