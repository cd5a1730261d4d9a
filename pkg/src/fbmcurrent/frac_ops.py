"""Fractional operators M_-^H, M_+^H and the fBm kernels eta_t.

For H > 1/2 the operators are K_H-scaled Riemann-Liouville integrals of
order H - 1/2, for H < 1/2 K_H-scaled Marchaud derivatives of order
1/2 - H, and the identity at H = 1/2. ``M_-`` looks to the right of ``x``
(``f(x + t)``), ``M_+`` to the left; we implement ``M_-`` once and obtain
``M_+ f(x) = (M_- Rf)(-x)`` with ``Rf(y) = f(-y)``.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConvergenceError, PreconditionError
from .functions import GridFunction, Indicator, RealFunction1D, sample_on_grid
from .numerics import EndpointTransform, QuadratureSpec, adaptive_integrate

__all__ = [
    "Regime",
    "HurstParam",
    "EtaKernel",
    "k_constant",
    "apply_m_minus",
    "apply_m_plus",
    "eta",
    "eta_inner",
    "duality_residual",
    "MARCHAUD_EPS0",
    "MARCHAUD_LEVELS",
]

MARCHAUD_EPS0 = 1e-2
MARCHAUD_LEVELS = 8

_DE = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-12, endpoint_transform=EndpointTransform.DOUBLE_EXPONENTIAL)


class Regime(str, enum.Enum):
    SUB_HALF = "sub_half"
    HALF = "half"
    SUPER_HALF = "super_half"


@dataclass(frozen=True)
class HurstParam:
    h: float

    def __post_init__(self):
        h = float(self.h)
        if not 0.0 < h < 1.0:
            raise PreconditionError("H out of (0,1): got %r" % self.h)
        object.__setattr__(self, "h", h)

    @classmethod
    def of(cls, h) -> "HurstParam":
        return h if isinstance(h, HurstParam) else cls(h)

    @property
    def regime(self) -> Regime:
        if self.h < 0.5:
            return Regime.SUB_HALF
        if self.h > 0.5:
            return Regime.SUPER_HALF
        return Regime.HALF

    @property
    def order(self) -> float:
        """|H - 1/2|, the order of the fractional integral/derivative."""
        return abs(self.h - 0.5)

    def __float__(self):
        return self.h


@functools.lru_cache(maxsize=256)
def _k_constant(h: float) -> float:
    a = h - 0.5
    if a == 0.0:
        return 1.0

    def head(s):
        # the s^{2a} part (nearly non-integrable as H -> 0) is integrated exactly
        return (1.0 + s) ** (2.0 * a) - 2.0 * s ** a * (1.0 + s) ** a

    def tail(u):
        # s = 1/u on [1, inf): u^{-2a-2} expm1(a log1p(u))^2, whose leading term
        # a^2 u^{-2a} is integrated exactly; the slow s^{2a-2} decay near H = 1
        # would otherwise defeat the quadrature
        with np.errstate(divide="ignore", invalid="ignore"):
            core = np.expm1(a * np.log1p(u)) / (a * u)
            out = a * a * u ** (-2.0 * a) * (core * core - 1.0)
        return np.where(u > 0, out, 0.0)

    v_head, _ = adaptive_integrate(head, 0.0, 1.0, _DE)
    v_tail, _ = adaptive_integrate(tail, 0.0, 1.0, _DE)
    val = v_head + 1.0 / (1.0 + 2.0 * a) + v_tail + a * a / (1.0 - 2.0 * a)
    return float(special.gamma(h + 0.5) / math.sqrt(1.0 / (2.0 * h) + val))


def k_constant(h) -> float:
    """Normalisation K_H making |eta_t|_0^2 = t^{2H}.

    K_H = Gamma(H + 1/2) (1/(2H) + int_0^inf ((1+s)^{H-1/2} - s^{H-1/2})^2 ds)^{-1/2};
    the s-integral is done by quadrature on [0, inf).
    """
    return _k_constant(HurstParam.of(h).h)


def _pos_pow(u, p):
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(u > 0, np.abs(u) ** p, 0.0)


# --- M_- on the individual representations -------------------------------

def _indicator_kernel(h: HurstParam, db, da, width):
    """K/Gamma(H+1/2) ((db)_+^{H-1/2} - (da)_+^{H-1/2}) with db = b - x, da = a - x.

    This is M_-^H 1_[a,b) at x for every H; taking the offsets as inputs keeps
    full precision next to the singular points a and b.
    """
    p = h.h - 0.5
    c0 = k_constant(h) / special.gamma(h.h + 0.5)
    db = np.asarray(db, dtype=float)
    da = np.asarray(da, dtype=float)
    left = da > 0
    out = _pos_pow(db, p)
    # left of the support both powers are large and nearly equal
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.log1p(width / np.where(left, da, 1.0))
        diff = _pos_pow(da, p) * np.expm1(p * ratio)
    return c0 * np.where(left, diff, out)


def _m_minus_indicator(h: HurstParam, f: Indicator, x):
    return f.height * _indicator_kernel(h, f.b - x, f.a - x, f.b - f.a)


def _m_minus_grid(h: HurstParam, f: GridFunction, x):
    if f.decay is None:
        raise PreconditionError("grid function lacks decay metadata")
    alpha = h.order
    g = f.nodes
    v = f.values
    slopes = np.diff(v) / f.dx
    out = np.empty(x.shape)
    flat_x = x.ravel()
    res = np.empty(flat_x.shape)
    chunk = max(1, 2_000_000 // g.size)
    for start in range(0, flat_x.size, chunk):
        xs = flat_x[start:start + chunk][:, None]
        lo = np.maximum(g[:-1][None, :] - xs, 0.0)
        hi = np.maximum(g[1:][None, :] - xs, 0.0)
        if h.regime is Regime.SUPER_HALF:
            base = v[:-1][None, :] + slopes[None, :] * (xs - g[:-1][None, :])
            seg = base * (hi ** alpha - lo ** alpha) / alpha + slopes[None, :] * (
                hi ** (alpha + 1) - lo ** (alpha + 1)) / (alpha + 1)
            res[start:start + chunk] = seg.sum(axis=1) * k_constant(h) / special.gamma(alpha)
        else:
            one = 1.0 - alpha
            cont = (slopes[None, :] * (hi ** one - lo ** one)).sum(axis=1) / one
            d = -cont / alpha
            x1 = xs[:, 0]
            # boundary jumps of the zero extension: +v0 at x0, -vM at x1
            d -= v[0] * _pos_pow(g[0] - x1, -alpha) / alpha
            d += v[-1] * _pos_pow(g[-1] - x1, -alpha) / alpha
            res[start:start + chunk] = d * alpha * k_constant(h) / special.gamma(h.h + 0.5)
    out[...] = res.reshape(x.shape)
    return out


def _rl_smooth(alpha, f, x, tol):
    """int_0^inf f(x+t) t^{alpha-1} dt via u = t^alpha (so dt t^{alpha-1} = du/alpha)."""
    lo, hi = f.support()
    u_lo = _pos_pow(lo - x, alpha)
    u_hi = _pos_pow(hi - x, alpha)
    width = u_hi - u_lo
    live = width > 0
    out = np.zeros(x.shape)
    if not np.any(live):
        return out
    xl, ul, wl = x[live], u_lo[live], width[live]
    inv = 1.0 / alpha

    def integrand(v):
        u = ul[None, :] + v[:, None] * wl[None, :]
        return f(xl[None, :] + u ** inv) * (wl / alpha)[None, :]

    val, _ = adaptive_integrate(integrand, 0.0, 1.0, QuadratureSpec(abs_tol=tol, rel_tol=1e-13, max_subdivisions=20000))
    out[live] = val
    return out


def _marchaud_smooth(alpha, f, x, tol, eps0, levels):
    """lim_{eps->0} int_eps^inf (f(x) - f(x+y)) y^{-1-alpha} dy.

    The truncated integrals J(eps) are taken on eps_k = eps0 / 2^k and
    extrapolated: J(eps) = J(0) - sum_j c_j eps^{j - alpha} for smooth f.
    """
    lo, hi = f.support()
    fx = np.asarray(f(x), dtype=float)
    a = np.maximum(eps0, lo - x)
    b = np.maximum(eps0, hi - x)
    width = b - a
    spec = QuadratureSpec(abs_tol=tol * 1e-2, rel_tol=1e-13, max_subdivisions=20000)

    def far(v):
        y = a[None, :] + v[:, None] * width[None, :]
        return f(x[None, :] + y) * y ** (-1.0 - alpha) * width[None, :]

    tail, _ = adaptive_integrate(far, 0.0, 1.0, spec)
    current = fx * eps0 ** (-alpha) / alpha - tail
    table = [[current]]
    eps = eps0
    for k in range(1, levels + 1):
        e_lo = eps / 2.0

        def near(v, e_lo=e_lo):
            y = e_lo * (1.0 + v)[:, None]
            return (fx[None, :] - f(x[None, :] + y)) * y ** (-1.0 - alpha) * e_lo

        inc, _ = adaptive_integrate(near, 0.0, 1.0, spec)
        current = current + inc
        eps = e_lo
        row = [current]
        for j in range(1, k + 1):
            factor = 2.0 ** (j - alpha) - 1.0
            row.append(row[j - 1] + (row[j - 1] - table[k - 1][j - 1]) / factor)
        table.append(row)
        diff = np.max(np.abs(row[-1] - table[k - 1][-1]))
        if diff < tol * max(1.0, float(np.max(np.abs(row[-1])))):
            return row[-1]
    raise ConvergenceError(
        "Marchaud extrapolation did not settle after %d levels (last change %.3g)" % (levels, diff),
        partial=table[-1][-1], error=diff)


def _m_minus_smooth(h: HurstParam, f, x, tol, eps0, levels):
    alpha = h.order
    if h.regime is Regime.SUPER_HALF:
        return k_constant(h) / special.gamma(alpha) * _rl_smooth(alpha, f, x, tol)
    scale = getattr(f, "scale", 1.0)
    d = _marchaud_smooth(alpha, f, x, tol, eps0 * scale, levels)
    return alpha * k_constant(h) / special.gamma(h.h + 0.5) * d


def apply_m_minus(h, f: RealFunction1D, x, *, tol: float = 1e-12,
                  eps0: float = MARCHAUD_EPS0, levels: int = MARCHAUD_LEVELS):
    """(M_-^H f)(x) for scalar or array ``x``.

    Indicators use the exact antiderivative, grids the exact result for
    their piecewise-linear interpolant; smooth series go through quadrature
    (H > 1/2) or Richardson-extrapolated truncated Marchaud integrals
    (H < 1/2) started at ``eps0`` with at most ``levels`` halvings.
    """
    h = HurstParam.of(h)
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if h.regime is Regime.HALF:
        out = np.asarray(f(x), dtype=float)
    elif isinstance(f, Indicator):
        out = _m_minus_indicator(h, f, x)
    elif isinstance(f, GridFunction):
        out = _m_minus_grid(h, f, x)
    else:
        if getattr(f, "decay", None) is None:
            raise PreconditionError("function lacks decay metadata; cannot bound the operator integral")
        shape = x.shape
        out = _m_minus_smooth(h, f, x.ravel(), tol, eps0, levels).reshape(shape)
    return float(out[0]) if scalar else out


def apply_m_plus(h, f: RealFunction1D, x, **kw):
    """(M_+^H f)(x), computed as (M_-^H Rf)(-x) with Rf(y) = f(-y)."""
    h = HurstParam.of(h)
    if h.regime is Regime.HALF:
        return f(x)
    return apply_m_minus(h, f.reflect(), -np.asarray(x, dtype=float), **kw)


@dataclass(frozen=True)
class EtaKernel:
    """eta_t = M_-^H 1_[0,t); vanishes for x >= t and is singular (H < 1/2)
    or kinked (H > 1/2) at 0 and t."""

    h: HurstParam
    t: float
    _grid: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "h", HurstParam.of(self.h))
        if not self.t > 0:
            raise PreconditionError("eta needs t > 0")

    @property
    def indicator(self) -> Indicator:
        return Indicator(0.0, self.t)

    @property
    def singular_points(self):
        return 0.0, self.t

    def __call__(self, x):
        return apply_m_minus(self.h, self.indicator, x)

    def at_offsets(self, t_minus_x, minus_x):
        """eta_t at the point x given by its offsets t - x and -x (no rounding
        of x next to the singular points)."""
        if self.h.regime is Regime.HALF:
            return np.where((np.asarray(minus_x) <= 0) & (np.asarray(t_minus_x) > 0), 1.0, 0.0)
        return _indicator_kernel(self.h, t_minus_x, minus_x, self.t)

    def norm2(self) -> float:
        return eta_inner(self.h, self.t, self.t)

    def on_grid(self, spacing: float = 2.0 ** -10, pad: float = 8.0) -> GridFunction:
        """Cached samples on [-pad, t + pad]; for export and plotting only."""
        key = (spacing, pad)
        if key not in self._grid:
            self._grid[key] = sample_on_grid(self, -pad, self.t + pad, spacing)
        return self._grid[key]


def eta(h, t: float) -> EtaKernel:
    return EtaKernel(HurstParam.of(h), float(t))


@functools.lru_cache(maxsize=4096)
def _eta_inner(h: float, s: float, t: float) -> float:
    hp = HurstParam(h)
    m = min(s, t)
    # x <= 0 as x = -u, and 0 <= x <= m as x = m - u: singular points sit at u = 0
    left, _ = adaptive_integrate(
        lambda u: _indicator_kernel(hp, s + u, u, s) * _indicator_kernel(hp, t + u, u, t), 0.0, np.inf, _DE)
    right, _ = adaptive_integrate(
        lambda u: _indicator_kernel(hp, s - m + u, u - m, s) * _indicator_kernel(hp, t - m + u, u - m, t),
        0.0, m, _DE)
    return float(left + right)


def eta_inner(h, s: float, t: float) -> float:
    """<eta_s, eta_t> by quadrature over (-inf, min(s, t)]."""
    if not (s > 0 and t > 0):
        raise PreconditionError("eta_inner needs s, t > 0")
    return _eta_inner(HurstParam.of(h).h, float(s), float(t))


def _outer_points(*fs):
    pts = set()
    for f in fs:
        pts.update(float(p) for p in f.breakpoints)
    return sorted(pts)


def duality_residual(h, f1: RealFunction1D, f2: RealFunction1D, spec: QuadratureSpec | None = None) -> float:
    """|int f1 (M_- f2) - int (M_+ f1) f2|, each side by quadrature."""
    h = HurstParam.of(h)
    spec = spec or QuadratureSpec(abs_tol=1e-11, rel_tol=1e-11,
                                  endpoint_transform=EndpointTransform.DOUBLE_EXPONENTIAL)
    lo1, hi1 = f1.support()
    lo2, hi2 = f2.support()
    pts_lhs = [p for p in _outer_points(f1, f2) if lo1 < p < hi1]
    pts_rhs = [p for p in _outer_points(f1, f2) if lo2 < p < hi2]
    lhs, _ = adaptive_integrate(lambda x: f1(x) * apply_m_minus(h, f2, x), lo1, hi1, spec, points=pts_lhs)
    rhs, _ = adaptive_integrate(lambda x: apply_m_plus(h, f1, x) * f2(x), lo2, hi2, spec, points=pts_rhs)
    return abs(lhs - rhs)
