"""The fractional operators and the fBm kernels eta_t.

Run with ``python3 demos/01_operators_and_kernels.py``.
"""
import math

import numpy as np

from fbmcurrent.frac_ops import apply_m_minus, apply_m_plus, duality_residual, eta, k_constant
from fbmcurrent.functions import HermiteSeries, Indicator

# K_H from its defining integral, next to the closed form sqrt(Gamma(2H+1) sin(pi H))
print("H      K_H (quadrature)     closed form")
for h in (0.1, 0.3, 0.5, 0.7, 0.9):
    print("%.1f  %.15f  %.15f" % (h, k_constant(h), math.sqrt(math.gamma(2 * h + 1) * math.sin(math.pi * h))))

# eta_t = M_- 1_[0,t): singular at 0 and t when H < 1/2, kinked when H > 1/2
x = np.array([-2.0, -0.5, -0.01, 0.01, 0.5, 0.99, 1.01])
for h in (0.3, 0.7):
    print("\neta_1 for H = %.1f" % h)
    for xi, v in zip(x, eta(h, 1.0)(x)):
        print("  x = %5.2f  eta = % .6f" % (xi, v))

# |eta_t|^2 reproduces the fBm variance t^{2H}
print("\n|eta_t|^2 / t^2H:")
for h in (0.2, 0.8):
    print("  H = %.1f:" % h, [round(eta(h, t).norm2() / t ** (2 * h), 14) for t in (0.5, 1.0, 2.0)])

# M_- and M_+ are adjoint: int f (M_- g) = int (M_+ f) g
f = HermiteSeries((0.5, -0.3, 0.2), 0.4, 0.8)
g = Indicator(-0.5, 1.0)
for h in (0.25, 0.75):
    print("duality residual at H = %.2f: %.2e" % (h, duality_residual(h, f, g)))

# a smooth function under both operators
psi0 = HermiteSeries((1.0,))
print("\nM_- psi0(0.5), M_+ psi0(0.5) at H = 0.3:", apply_m_minus(0.3, psi0, 0.5), apply_m_plus(0.3, psi0, 0.5))
