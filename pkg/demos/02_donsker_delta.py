"""S-transform of the Donsker delta: closed form, Monte Carlo and growth bound.

Run with ``python3 demos/02_donsker_delta.py``.
"""
import numpy as np

from fbmcurrent.stransform import (
    DonskerSpec,
    TestFunction,
    donsker_functional,
    donsker_s,
    donsker_s_truncated,
    growth_bound_check,
    mc_donsker_s,
)

phi = TestFunction.hermite([[0.3, 0.1]], center=0.2)
spec = DonskerSpec(x=0.5, h=0.3, t=1.0)

for z in (0.0, 0.5, 1.0, 2.0):
    exact = donsker_s(spec, z, phi)
    est, se = mc_donsker_s(spec, z, phi, n_samples=400_000, seed=1)
    print("z = %.1f  closed form %.6f   Monte Carlo %.6f +- %.6f" % (z, exact.real, est.real, se))

# complex z: the functional is entire in z
print("\nS at z = 1 + 2i:", donsker_s(spec, 1 + 2j, phi))

# removing the first N chaos levels at x = 0
for N in range(4):
    s = DonskerSpec(0.0, 0.3, 1.0, truncation=N)
    print("N = %d  truncated S(z=2) = %.3e" % (N, donsker_s_truncated(s, 2.0, phi).real))

# growth bound |S| <= K1 exp(K2 |z|^2 |phi|^2) on a complex probe set
u = donsker_functional(spec)
z = (np.linspace(-3, 3, 13)[:, None] + 1j * np.linspace(-3, 3, 13)[None, :]).ravel()
rep = growth_bound_check(u, phi, z)
print("\ngrowth bound: K1 = %.4f, K2 = %g, passed = %s, max ratio %.3f" % (u.K1, u.K2, rep.passed, rep.max_ratio))
