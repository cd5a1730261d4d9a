"""Special functions and quadrature primitives used by the other modules.

The integrator here is a globally adaptive Gauss-Kronrod (7/15) scheme that
evaluates the integrand on whole batches of nodes at once. Integrands are
therefore written as numpy functions ``f(t) -> array`` where ``t`` is 1-d;
the return value may carry extra trailing axes (vector-valued integrands)
and may be complex.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import special

from .errors import ConvergenceError, DomainError, EvaluationError, PreconditionError

__all__ = [
    "EndpointTransform",
    "QuadratureSpec",
    "ComplexSeries",
    "adaptive_integrate",
    "upper_incomplete_gamma",
    "truncated_exp",
    "cauchy_taylor_coefficients",
    "chebyshev_proxy",
]

# Kronrod 15-point nodes (nonnegative half, descending) and weights; the
# embedded 7-point Gauss rule uses every other node.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13])
_WG_FULL = np.concatenate([_WG[:-1], _WG[::-1]])

_DE_HALF_WIDTH = 6.0


class EndpointTransform(str, enum.Enum):
    NONE = "none"
    POWER_SUBSTITUTION = "power_substitution"
    DOUBLE_EXPONENTIAL = "double_exponential"


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and endpoint handling for :func:`adaptive_integrate`.

    ``power`` is the exponent ``p`` of the left-endpoint substitution
    ``t = a + (b - a) * w**p``; choosing ``p = 1 / (1 - beta)`` turns an
    integrable ``t**-beta`` singularity into a bounded integrand.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 4000
    endpoint_transform: EndpointTransform = EndpointTransform.NONE
    power: float = 2.0

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise PreconditionError("abs_tol must be > 0")
        if not self.rel_tol > 0:
            raise PreconditionError("rel_tol must be > 0")
        if int(self.max_subdivisions) < 1:
            raise PreconditionError("max_subdivisions must be >= 1")
        if not self.power >= 1:
            raise PreconditionError("power substitution exponent must be >= 1")
        object.__setattr__(self, "endpoint_transform", EndpointTransform(self.endpoint_transform))

    def with_(self, **changes) -> "QuadratureSpec":
        data = dict(self.__dict__)
        data.update(changes)
        return QuadratureSpec(**data)


@dataclass(frozen=True)
class ComplexSeries:
    coefficients: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise PreconditionError("radius must be > 0")
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in self.coefficients))

    def __len__(self):
        return len(self.coefficients)

    def __getitem__(self, n):
        return self.coefficients[n]

    def as_array(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=complex)

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.as_array())


class _Piece:
    """Maps a reference variable ``s`` onto one integration sub-interval."""

    def __init__(self, a, b, transform, power):
        self.a, self.b = a, b
        self.transform = transform
        self.power = power

    def s_range(self):
        if self.transform is EndpointTransform.DOUBLE_EXPONENTIAL:
            return -_DE_HALF_WIDTH, _DE_HALF_WIDTH
        return 0.0, 1.0

    def map(self, s):
        tr = self.transform
        if tr is EndpointTransform.NONE:
            wl = s
            wr = 1.0 - s
            jac = np.ones_like(s)
        elif tr is EndpointTransform.POWER_SUBSTITUTION:
            p = self.power
            wl = s ** p
            wr = 1.0 - wl
            jac = p * s ** (p - 1.0)
        else:
            psi = 0.5 * np.pi * np.sinh(s)
            wl = special.expit(2.0 * psi)
            wr = special.expit(-2.0 * psi)
            jac = np.pi * np.cosh(s) * wl * wr
        a, b = self.a, self.b
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if np.isfinite(a) and np.isfinite(b):
                width = b - a
                t = np.where(wl <= 0.5, a + width * wl, b - width * wr)
                jac = jac * width
            elif np.isfinite(a):
                t = a + wl / wr
                jac = jac / wr ** 2
            else:
                t = b - wr / wl
                jac = jac / wl ** 2
        valid = (wl > 0) & (wr > 0) & np.isfinite(t) & np.isfinite(jac)
        return t, jac, valid


def _build_pieces(a, b, spec, points):
    cuts = sorted({float(p) for p in (points or ()) if a < p < b})
    if not np.isfinite(a) and not np.isfinite(b) and 0.0 not in cuts:
        cuts = sorted(cuts + [0.0])
    edges = [a] + cuts + [b]
    return [_Piece(lo, hi, spec.endpoint_transform, spec.power)
            for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]


def _gk_batch(f, pieces, pidx, lo, hi):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    s = center[:, None] + half[:, None] * _NODES[None, :]
    t = np.empty_like(s)
    jac = np.empty_like(s)
    valid = np.empty(s.shape, dtype=bool)
    for k in np.unique(pidx):
        sel = pidx == k
        t[sel], jac[sel], valid[sel] = pieces[k].map(s[sel])
    tv = t[valid]
    fv = np.asarray(f(tv))
    if fv.ndim == 0:
        fv = np.full(tv.shape, fv)
    if fv.shape[0] != tv.shape[0]:
        raise EvaluationError("integrand returned %d values for %d nodes" % (fv.shape[0], tv.shape[0]))
    if not np.all(np.isfinite(fv)):
        bad = tv[~np.all(np.isfinite(fv.reshape(fv.shape[0], -1)), axis=1)]
        raise EvaluationError("integrand is not finite at t=%r" % (bad[:3],))
    out_shape = fv.shape[1:]
    full = np.zeros(s.shape + out_shape, dtype=np.result_type(fv.dtype, float))
    full[valid] = fv
    jac = np.where(valid, jac, 0.0).reshape(jac.shape + (1,) * len(out_shape))
    full = full * jac
    wk = _WK.reshape((1, 15) + (1,) * len(out_shape))
    wg = _WG_FULL.reshape((1, 7) + (1,) * len(out_shape))
    hb = half.reshape((-1,) + (1,) * len(out_shape))
    kron = hb * np.sum(wk * full, axis=1)
    gauss = hb * np.sum(wg * full[:, _GAUSS_IDX], axis=1)
    return kron, np.abs(kron - gauss), out_shape


def adaptive_integrate(f: Callable, a: float, b: float, spec: QuadratureSpec | None = None,
                       points: Sequence[float] | None = None):
    """Integrate a vectorized ``f`` over ``[a, b]``; infinite limits allowed.

    ``points`` are interior breakpoints (jumps, kinks, integrable
    singularities); each sub-interval receives the endpoint transform of
    ``spec``. Returns ``(value, error_estimate)``; both carry the trailing
    shape of ``f``'s output. Raises :class:`ConvergenceError` with the partial
    value if the subdivision budget runs out.
    """
    spec = spec or QuadratureSpec()
    if not a < b:
        raise PreconditionError("integration limits must satisfy a < b (got %r, %r)" % (a, b))
    pieces = _build_pieces(float(a), float(b), spec, points)
    lo, hi, pidx = [], [], []
    nsplit = 4 if spec.endpoint_transform is EndpointTransform.DOUBLE_EXPONENTIAL else 1
    for k, piece in enumerate(pieces):
        s0, s1 = piece.s_range()
        edges = np.linspace(s0, s1, nsplit + 1)
        lo.extend(edges[:-1])
        hi.extend(edges[1:])
        pidx.extend([k] * nsplit)
    lo = np.array(lo)
    hi = np.array(hi)
    pidx = np.array(pidx)
    vals, errs, out_shape = _gk_batch(f, pieces, pidx, lo, hi)
    eps = np.finfo(float).eps

    while True:
        total = vals.sum(axis=0)
        err_tot = errs.sum(axis=0)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        if np.all(err_tot <= tol):
            break
        width = hi - lo
        frozen = (width <= 64 * eps * np.maximum(np.abs(lo), np.abs(hi))) | (width < 1e-280)
        score = (errs / tol).reshape(len(lo), -1).max(axis=1)
        score = np.where(frozen, 0.0, score)
        if not np.any(score > 0):
            break
        if len(lo) >= spec.max_subdivisions:
            raise ConvergenceError(
                "adaptive_integrate: %d subdivisions exhausted (error %.3g > tol %.3g)"
                % (len(lo), float(np.max(err_tot)), float(np.max(tol))),
                partial=total, error=err_tot,
            )
        order = np.argsort(-score)
        remaining = score.sum() - np.cumsum(score[order])
        n_pick = int(np.searchsorted(-remaining, -0.5) + 1)
        n_pick = max(1, min(n_pick, len(order), spec.max_subdivisions - len(lo) + 1))
        pick = order[:n_pick]
        keep = np.ones(len(lo), dtype=bool)
        keep[pick] = False
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        new_pidx = np.concatenate([pidx[pick], pidx[pick]])
        nv, ne, _ = _gk_batch(f, pieces, new_pidx, new_lo, new_hi)
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        pidx = np.concatenate([pidx[keep], new_pidx])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])

    total = vals.sum(axis=0)
    err_tot = errs.sum(axis=0)
    if out_shape == ():
        return total.item(), float(err_tot)
    return total, err_tot


def upper_incomplete_gamma(a: float, u: float) -> float:
    """Gamma(a, u) = int_u^inf y**(a-1) exp(-y) dy for u > 0.

    Nonpositive non-integer ``a`` is reached from the positive region by the
    downward recurrence Gamma(a, u) = (Gamma(a+1, u) - u**a e**-u) / a.
    """
    a = float(a)
    u = float(u)
    if not u > 0 or not np.isfinite(u):
        raise DomainError("upper_incomplete_gamma needs u > 0 (got %r)" % u)
    if a > 0:
        return float(special.gamma(a) * special.gammaincc(a, u))
    steps = int(math.floor(-a)) + 1
    top = a + steps
    if top == 1.0 and a == float(round(a)):
        raise DomainError("recurrence reaches a = 0 (a=%r is a nonpositive integer)" % a)
    value = float(special.gamma(top) * special.gammaincc(top, u))
    log_u = math.log(u)
    b = top
    for _ in range(steps):
        b -= 1.0
        value = (value - math.exp(b * log_u - u)) / b
    return value


def _neumaier_sum(terms):
    total = np.zeros_like(terms[0])
    comp = np.zeros_like(terms[0])
    for term in terms:
        t = total + term
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, (total - t) + term, (term - t) + total)
        total = t
    return total + comp


def _compensated(terms):
    terms = [np.asarray(t) for t in terms]
    if np.iscomplexobj(terms[0]):
        re = _neumaier_sum([t.real for t in terms])
        im = _neumaier_sum([t.imag for t in terms])
        return re + 1j * im
    return _neumaier_sum(terms)


def truncated_exp(N: int, z):
    """Tail of the exponential series, sum_{n >= N} z**n / n!.

    Small arguments (|z| < (N+1)/2) sum the tail directly, which keeps full
    relative accuracy as z -> 0; larger ones subtract the leading Taylor
    terms from exp(z) with compensated summation. Accepts arrays.
    """
    N = int(N)
    if N < 0:
        raise PreconditionError("N must be >= 0")
    scalar = np.ndim(z) == 0
    zz = np.asarray(z)
    if not np.iscomplexobj(zz):
        zz = zz.astype(float)
    if N == 0:
        out = np.exp(zz)
        return out.item() if scalar else out

    out = np.empty_like(zz)
    small = np.abs(zz) < 0.5 * (N + 1)
    if np.any(small):
        w = zz[small]
        term = w ** N / math.factorial(N)
        acc = term.copy()
        for n in range(N + 1, N + 120):
            term = term * w / n
            acc = acc + term
            if np.all(np.abs(term) <= 1e-17 * np.abs(acc)):
                break
        out[small] = acc
    if np.any(~small):
        w = zz[~small]
        terms = [np.exp(w)]
        term = np.ones_like(w)
        for n in range(N):
            if n > 0:
                term = term * w / n
            terms.append(-term)
        out[~small] = _compensated(terms)
    return out.item() if scalar else out


def cauchy_taylor_coefficients(g: Callable, radius: float, count: int,
                               n_nodes: int | None = None) -> ComplexSeries:
    """Taylor coefficients of an entire ``g`` from its values on |z| = radius.

    ``g`` is called once with the full array of circle nodes. The periodic
    trapezoid rule is spectrally accurate here; at least ``4 * count`` nodes
    are used.
    """
    if not radius > 0:
        raise PreconditionError("radius must be > 0")
    count = int(count)
    if count < 1:
        raise PreconditionError("count must be >= 1")
    m = max(int(n_nodes or 0), 4 * count, 16)
    theta = 2.0 * np.pi * np.arange(m) / m
    z = radius * np.exp(1j * theta)
    vals = np.asarray(g(z), dtype=complex)
    if vals.shape != z.shape:
        raise EvaluationError("g must return one value per circle node")
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("g is not finite on the circle |z| = %g" % radius)
    coeffs = np.fft.fft(vals)[:count] / m
    coeffs = coeffs / radius ** np.arange(count)
    return ComplexSeries(tuple(coeffs), float(radius))


class ChebyshevProxy:
    """Chebyshev interpolant of a smooth function on [a, b]."""

    def __init__(self, series: C.Chebyshev, tail: float):
        self.series = series
        self.tail = tail

    @property
    def degree(self):
        return self.series.degree()

    @property
    def domain(self):
        return tuple(self.series.domain)

    def __call__(self, t):
        return self.series(t)

    def deriv(self):
        return ChebyshevProxy(self.series.deriv(), self.tail)


def chebyshev_proxy(func: Callable, a: float, b: float, rtol: float = 1e-13,
                    start_degree: int = 32, max_degree: int = 512) -> ChebyshevProxy:
    """Interpolate a vectorized smooth ``func`` on [a, b], doubling the degree
    until the trailing coefficients fall below ``rtol`` of the largest one."""
    deg = start_degree
    while True:
        series = C.Chebyshev.interpolate(func, deg, domain=[a, b])
        coef = np.abs(series.coef)
        scale = max(coef.max(), 1e-300)
        tail = coef[-4:].max()
        if tail <= rtol * scale or deg >= max_degree:
            return ChebyshevProxy(series, float(tail))
        deg *= 2
