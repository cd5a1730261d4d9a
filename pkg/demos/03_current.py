"""Membership, S-transform and boundary behaviour of the stochastic current.

Run with ``python3 demos/03_current.py``.
"""
import numpy as np

from fbmcurrent.current import (
    CurrentSpec,
    divergence_probe,
    gamma_identity_check,
    membership,
    s_current,
    s_current_truncated,
)
from fbmcurrent.errors import NotAMemberError
from fbmcurrent.stransform import TestFunction

# which (x, H, d, N) give a Hida distribution
print("x      H    d  N     verdict")
for x, h, d, N in [((1.0, 0.0), 0.4, 2, None), ((1.0, 0.0), 0.7, 2, None), ((0.0,), 0.9, 1, None),
                   ((0.0, 0.0), 0.4, 2, None), ((0.0, 0.0), 0.6, 2, None), ((0.0, 0.0), 0.6, 2, 1)]:
    v = membership(x, h, d, N)
    print("%-6s %.1f  %d  %-4s  %s" % ("0" if not any(x) else "x!=0", h, d, N, v.describe()))

phi = TestFunction.hermite([[0.3, 0.1], [0.2, 0.0, 0.1]], center=0.1, scale=0.9)
spec = CurrentSpec(x=(0.3, -0.2), h=0.3, T=1.0, i=1)
print("\nS(xi_1(x))(z phi):")
for z in (0.5, 1.0, 1j):
    val, err = s_current(spec, z, phi, return_error=True)
    print("  z = %-4s  %s  (error estimate %.1e)" % (z, np.round(val, 10), err))

# above the threshold Hd < 1 the origin needs truncation
bad = CurrentSpec((0.0, 0.0), 0.6, 1.0)
try:
    s_current(bad, 1.0, phi)
except NotAMemberError as e:
    print("\nrefused:", e)
trunc = CurrentSpec((0.0, 0.0), 0.6, 1.0, truncation=1)
print("truncated N = 1:", s_current_truncated(trunc, 1.0, phi))

# the time integral in closed form through Gamma((Hd-1)/(2H), .)
rep = gamma_identity_check((1.0, 0.0), 0.3, 2, 2.0)
print("\ngamma identity: lhs %.12f rhs %.12f residual %.1e" % (rep.lhs, rep.rhs, rep.residual))
print("  ", rep.note)

# divergence at the boundary: logarithmic for Hd = 1, eps^{-0.2} for H = 0.6, d = 2
cuts = 2.0 ** -np.arange(1, 25)
for s in (CurrentSpec((0.0, 0.0), 0.5, 1.0), bad, trunc):
    r = divergence_probe(s, cuts, mode="integrand", phi=phi)
    print("H = %.1f N = %s: predicted exponent %.2f, fitted %.4f, log slope %s, converges %s"
          % (s.h.h, s.truncation, r.predicted_exponent, r.fitted_exponent, r.log_slope, r.converges))
