"""Reference values for test_diagnostics.cpp, from ArviZ.

The chains come from an integer LCG so the C++ test rebuilds them exactly.
"""
import numpy as np
import arviz as az


def lcg_chains(n_chains, n_draws, rho, seed):
    state = seed
    out = np.zeros((n_chains, n_draws))
    for c in range(n_chains):
        x = 0.0
        for d in range(n_draws):
            state = (state * 1103515245 + 12345) % 2**31
            u = state / 2**31 - 0.5
            x = rho * x + u
            out[c, d] = x + 0.1 * c
    return out


for label, args in {"ar": (4, 100, 0.6, 12345), "iid": (3, 60, 0.0, 777)}.items():
    ch = lcg_chains(*args)
    print(label,
          "rhat_split", repr(float(az.rhat(ch, method="split"))),
          "ess_bulk", repr(float(az.ess(ch, method="bulk"))),
          "ess_identity", repr(float(az.ess(ch, method="identity"))))
