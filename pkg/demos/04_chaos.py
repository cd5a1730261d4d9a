"""Chaos kernels of the current and the reconstruction of its S-transform.

Run with ``python3 demos/04_chaos.py``.
"""
from fbmcurrent.chaos import multi_indices, taylor_reconstruct, truncated_kernel_pairing
from fbmcurrent.current import CurrentSpec
from fbmcurrent.stransform import TestFunction

phi = TestFunction.hermite([[0.2]])
rep = taylor_reconstruct(CurrentSpec((0.8,), 0.4, 1.0), phi, 12)
print("d = 1, H = 0.4, x = 0.8: closed form", rep.closed_form.real)
for k, s, e in zip(rep.orders, rep.partial_sums, rep.errors):
    print("  through order %2d: %.16f   error %.1e" % (k, s, e))

# truncated current at the origin: only m = 2n + e_i with |n| >= N survive
spec = CurrentSpec((0.0, 0.0), 0.6, 1.0, i=1, truncation=1)
phi2 = TestFunction.hermite([[0.3, 0.1], [0.2, 0.0, 0.1]], center=0.1, scale=0.9)
print("\nnonzero kernels of the truncated current (d = 2, H = 0.6, N = 1):")
for k in range(8):
    for m in multi_indices(2, k):
        p = truncated_kernel_pairing(spec, m, phi2)
        if not p.exact_zero:
            print("  m = %-6s value % .3e" % (m, p.value))

rep = taylor_reconstruct(spec, phi2, 9)
print("\ntruncated reconstruction errors:", ["%.1e" % e for e in rep.errors])
