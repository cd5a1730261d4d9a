"""Chaos kernels of the stochastic current, seen through their pairings.

Expanding the Gaussian factor of the current's S-transform with the
Hermite generating function

    exp(2 X tau - tau^2) = sum_n H_n(X) tau^n / n!,   X = x_j s, tau = z <phi_j, eta_t> s,
    s = (2 t^{2H})^{-1/2},

turns S(xi_i(x))(z phi) into a power series in z. The coefficient of
z^{|m|} collects the kernels Xi_{m,i} with kernel multi-index m; their
pairings with phi^{(x) m} are what this module computes. Throughout, ``m``
is the kernel index (its total is the chaos order and the power of z) and
``n = m - e_i`` is the Hermite index appearing in the formula; the factor
(M_+ phi_i)(t) supplies the extra unit in slot i. Indices with m_i = 0,
in particular Xi_0, pair to zero.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .current import CurrentSpec, require_member, s_current, s_current_truncated, time_quadrature
from .errors import PreconditionError
from .numerics import adaptive_integrate
from .stransform import TestFunction, time_profile

__all__ = [
    "HERMITE_MAX",
    "hermite",
    "MultiIndex",
    "KernelPairing",
    "kernel_pairing",
    "truncated_kernel_pairing",
    "multi_indices",
    "ReconstructionReport",
    "taylor_reconstruct",
]

HERMITE_MAX = 60


def hermite(n: int, x):
    """Physicists' Hermite polynomial H_n(x) by H_{k+1} = 2x H_k - 2k H_{k-1}."""
    n = int(n)
    if n < 0:
        raise PreconditionError("Hermite degree must be >= 0")
    if n > HERMITE_MAX:
        raise PreconditionError("Hermite degree %d exceeds the double-precision guard %d" % (n, HERMITE_MAX))
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 2.0 * x
    for k in range(1, n):
        prev, cur = cur, 2.0 * x * cur - 2.0 * k * prev
    return cur if cur.ndim else float(cur)


@dataclass(frozen=True)
class MultiIndex:
    entries: tuple

    def __post_init__(self):
        e = tuple(int(v) for v in self.entries)
        if not e:
            raise PreconditionError("a multi-index needs at least one entry")
        if any(v < 0 for v in e) or any(int(v) != v for v in self.entries):
            raise PreconditionError("multi-index entries must be nonnegative integers")
        object.__setattr__(self, "entries", e)

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def total(self) -> int:
        return sum(self.entries)

    def factorial(self) -> int:
        return math.prod(math.factorial(v) for v in self.entries)

    def minus_unit(self, i: int) -> "MultiIndex | None":
        """m - e_i (1-based i), or None when m_i = 0."""
        if self.entries[i - 1] == 0:
            return None
        e = list(self.entries)
        e[i - 1] -= 1
        return MultiIndex(tuple(e))

    def __iter__(self):
        return iter(self.entries)

    def __str__(self):
        return "(" + ",".join(str(v) for v in self.entries) + ")"


def multi_indices(d: int, total: int):
    """All m in N_0^d with |m| = total, in lexicographically decreasing order."""
    if total == 0:
        yield MultiIndex((0,) * d)
        return
    for cut in itertools.combinations(range(total + d - 1), d - 1):
        bounds = (-1,) + cut + (total + d - 1,)
        yield MultiIndex(tuple(bounds[k + 1] - bounds[k] - 1 for k in range(d)))


@dataclass(frozen=True)
class KernelPairing:
    spec: CurrentSpec
    index: MultiIndex
    i: int
    value: float
    error: float
    exact_zero: bool = False
    note: str = field(default="")


def _as_index(index, d) -> MultiIndex:
    m = index if isinstance(index, MultiIndex) else MultiIndex(tuple(index))
    if m.d != d:
        raise PreconditionError("multi-index has %d entries, dimension is %d" % (m.d, d))
    return m


def _zero(spec, m, note):
    return KernelPairing(spec, m, spec.i, 0.0, 0.0, True, note)


def kernel_pairing(spec: CurrentSpec, index, phi: TestFunction) -> KernelPairing:
    """<Xi_{m,i}, phi^{(x) m}> for the untruncated current, m = ``index``.

    With n = m - e_i the value is

        (2 pi)^{-d/2} int_0^T t^{-Hd} e^{-|x|^2/(2t^{2H})}
            prod_j H_{n_j}(x_j s) s^{n_j} <phi_j, eta_t>^{n_j} / n_j!  (M_+ phi_i)(t) dt.

    At x = 0 the odd Hermite values vanish, so any odd n_j gives an exact 0.
    """
    require_member(spec, truncated=False)
    m = _as_index(index, spec.d)
    n = m.minus_unit(spec.i)
    if n is None:
        return _zero(spec, m, "m_i = 0")
    if spec.x_is_zero and any(v % 2 for v in n):
        return _zero(spec, m, "odd Hermite index at x = 0")
    if phi.is_zero():
        return _zero(spec, m, "phi = 0")
    if phi.d != spec.d:
        raise PreconditionError("test function dimension mismatch")
    if n.total > HERMITE_MAX:
        raise PreconditionError("order too high for the Hermite guard")
    prof = time_profile(spec.h, phi, spec.T)
    hv, d = spec.h.h, spec.d
    pref = (2.0 * math.pi) ** (-d / 2.0)
    x = spec.x
    x2 = spec.x_norm2
    fact = float(n.factorial())

    def integrand(t):
        v = t ** (2.0 * hv)
        s = 1.0 / np.sqrt(2.0 * v)
        expo = -x2 / (2.0 * v)
        live = expo > -745.0
        prod = np.ones_like(t)
        for j, nj in enumerate(n):
            if nj:
                a = prof.pairing(j, t)
                prod = prod * hermite(nj, x[j] * s) * (s * a) ** nj
        out = pref * t ** (-hv * d) * np.exp(np.where(live, expo, 0.0)) * prod / fact * prof.noise(spec.i - 1, t)
        return np.where(live, out, 0.0)

    beta = hv * d - n.total * (1.0 - hv)
    val, err = adaptive_integrate(integrand, 0.0, spec.T, time_quadrature(spec, beta))
    return KernelPairing(spec, m, spec.i, float(val), float(err))


def truncated_kernel_pairing(spec: CurrentSpec, index, phi: TestFunction) -> KernelPairing:
    """<Xi_{m,i}, phi^{(x) m}> for the truncated current at x = 0.

    Only kernel indices m = 2n + e_i with |n| >= N survive:

        (2 pi)^{-d/2} int_0^T (-1/2)^{|n|} t^{-2H|n| - Hd}
            prod_j <phi_j, eta_t>^{2 n_j} / n_j!  (M_+ phi_i)(t) dt;

    every other index gives exactly 0.
    """
    require_member(spec, truncated=True)
    m = _as_index(index, spec.d)
    r = m.minus_unit(spec.i)
    if r is None:
        return _zero(spec, m, "m_i = 0")
    if any(v % 2 for v in r):
        return _zero(spec, m, "m - e_i not even")
    n = MultiIndex(tuple(v // 2 for v in r))
    if n.total < spec.truncation:
        return _zero(spec, m, "order below truncation")
    if phi.is_zero():
        return _zero(spec, m, "phi = 0")
    if phi.d != spec.d:
        raise PreconditionError("test function dimension mismatch")
    prof = time_profile(spec.h, phi, spec.T)
    hv, d, k = spec.h.h, spec.d, n.total
    pref = (2.0 * math.pi) ** (-d / 2.0) * (-0.5) ** k / float(n.factorial())

    def integrand(t):
        prod = np.ones_like(t)
        for j, nj in enumerate(n):
            if nj:
                prod = prod * prof.pairing(j, t) ** (2 * nj)
        return pref * t ** (-2.0 * hv * k - hv * d) * prod * prof.noise(spec.i - 1, t)

    beta = hv * d - 2 * k * (1.0 - hv)
    val, err = adaptive_integrate(integrand, 0.0, spec.T, time_quadrature(spec, beta))
    return KernelPairing(spec, m, spec.i, float(val), float(err))


@dataclass(frozen=True)
class ReconstructionReport:
    orders: tuple
    partial_sums: tuple
    closed_form: complex
    errors: tuple
    pairings: tuple = field(repr=False, default=())

    @property
    def final_error(self) -> float:
        return self.errors[-1]


def taylor_reconstruct(spec: CurrentSpec, phi: TestFunction, max_order: int) -> ReconstructionReport:
    """Partial sums of sum_m <Xi_{m,i}, phi^{(x) m}> (the S-transform at z = 1)
    through chaos order ``max_order``, against the quadrature value."""
    if max_order < 0:
        raise PreconditionError("max_order must be >= 0")
    truncated = spec.truncation is not None
    pair = truncated_kernel_pairing if truncated else kernel_pairing
    closed = s_current_truncated(spec, 1.0, phi) if truncated else s_current(spec, 1.0, phi)
    sums, errs, orders, table = [], [], [], []
    acc = 0.0
    for k in range(max_order + 1):
        for m in multi_indices(spec.d, k):
            p = pair(spec, m, phi)
            table.append(p)
            acc += p.value
        orders.append(k)
        sums.append(acc)
        errs.append(abs(acc - closed))
    return ReconstructionReport(tuple(orders), tuple(sums), complex(closed), tuple(errs), tuple(table))
