"""Pure-numpy scenario-exposure kernel (fallback backend).

Given a chunk of standardized pair shocks, computes every dealer's realized
net exposure under every clearing scenario. Same contract as the compiled
kernel in ``_ckernel``; selection happens in :mod:`ccpnet.kernels`.
"""

from __future__ import annotations

import numpy as np


def scenario_exposures(
    y: np.ndarray,          # (paths, pairs, classes) standardized shocks
    s_plus: np.ndarray,     # (pairs, classes) scale, owner -> counterparty
    s_minus: np.ndarray,    # (pairs, classes) scale for the reverse direction
    pair_i: np.ndarray,     # (pairs,) owning dealer of the + direction
    pair_j: np.ndarray,     # (pairs,) owning dealer of the - direction
    resid_w: np.ndarray,    # (scenarios, classes) bilateral remainders 1-w
    ccp_w: np.ndarray,      # (groups, classes) per-CCP clearing weights
    ccp_offsets: np.ndarray,  # (scenarios+1,) group slice per scenario
    n_dealers: int,
) -> np.ndarray:
    """Return realized exposures with shape (paths, scenarios, dealers)."""
    n_paths, n_pairs, _ = y.shape
    n_scen = resid_w.shape[0]

    owner_plus = np.zeros((n_pairs, n_dealers))
    owner_plus[np.arange(n_pairs), pair_i] = 1.0
    owner_minus = np.zeros((n_pairs, n_dealers))
    owner_minus[np.arange(n_pairs), pair_j] = 1.0

    out = np.empty((n_paths, n_scen, n_dealers))
    for s in range(n_scen):
        vp = np.einsum("cpk,pk->cp", y, s_plus * resid_w[s])
        vm = -np.einsum("cpk,pk->cp", y, s_minus * resid_w[s])
        e = np.maximum(vp, 0.0) @ owner_plus + np.maximum(vm, 0.0) @ owner_minus
        for g in range(ccp_offsets[s], ccp_offsets[s + 1]):
            cp = np.einsum("cpk,pk->cp", y, s_plus * ccp_w[g])
            cm = -np.einsum("cpk,pk->cp", y, s_minus * ccp_w[g])
            net = cp @ owner_plus + cm @ owner_minus
            e += np.maximum(net, 0.0)
        out[:, s, :] = e
    return out
