"""Test functions, U-functionals and the S-transforms of Gaussian objects.

Every Hida distribution in this package is handled through its S-transform
evaluated along a ray, ``z -> S(Phi)(z phi)``. A :class:`UFunctional` wraps
such a map together with the constants of its quadratic-exponential growth
bound ``|u(z, phi)| <= K1 exp(K2 |z|^2 ||phi||^2)``.

The pairings ``<phi_j, eta_t>`` enter every formula linearly in ``z``, so
they are computed once for real ``phi`` and multiplied by ``z`` afterwards.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import PreconditionError
from .frac_ops import EtaKernel, HurstParam, apply_m_plus, eta, eta_inner
from .functions import GridFunction, HermiteSeries, RealFunction1D
from .gaussian import JointGaussianSpec, make_rng
from .numerics import (ChebyshevProxy, EndpointTransform, QuadratureSpec, adaptive_integrate,
                       chebyshev_proxy, truncated_exp)

__all__ = [
    "TestFunction",
    "UFunctional",
    "DonskerSpec",
    "TimeProfile",
    "GrowthReport",
    "l2_inner",
    "donsker_s",
    "donsker_s_truncated",
    "fractional_noise_s",
    "donsker_functional",
    "noise_functional",
    "unit_functional",
    "wick_product",
    "growth_bound_check",
    "mc_donsker_s",
    "time_profile",
]

_PAIR = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-13, max_subdivisions=8000,
                       endpoint_transform=EndpointTransform.DOUBLE_EXPONENTIAL)


def _grid_norm2(g: GridFunction) -> float:
    a, b = g.values[:-1], g.values[1:]
    return float(g.dx * np.sum(a * a + a * b + b * b) / 3.0)


@dataclass(frozen=True)
class TestFunction:
    """A d-component test function; component ``j`` is ``components[j]``.

    Components are Hermite series (the default family). A component may be
    replaced by a :class:`GridFunction` for experiments with sampled data;
    norms then use the exact formula for the piecewise-linear interpolant.
    """

    __test__ = False  # keep pytest from collecting the class

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise PreconditionError("a test function needs at least one component")
        for c in comps:
            if not isinstance(c, (HermiteSeries, GridFunction)):
                raise PreconditionError("components must be HermiteSeries or GridFunction")
        object.__setattr__(self, "components", comps)

    @classmethod
    def hermite(cls, coeffs: Sequence[Sequence[float]], center: float = 0.0, scale: float = 1.0):
        """One Hermite series per row of ``coeffs``, all in the same frame."""
        return cls(tuple(HermiteSeries(tuple(c), center, scale) for c in coeffs))

    @classmethod
    def zero(cls, d: int):
        return cls(tuple(HermiteSeries((0.0,)) for _ in range(d)))

    @property
    def d(self) -> int:
        return len(self.components)

    def __getitem__(self, j) -> RealFunction1D:
        return self.components[j]

    def __call__(self, x):
        return np.stack([np.asarray(c(x), dtype=float) for c in self.components])

    def component_norm2(self, j: int) -> float:
        c = self.components[j]
        return c.norm2() if isinstance(c, HermiteSeries) else _grid_norm2(c)

    def norm2(self) -> float:
        """|phi|_0^2 = sum_j |phi_j|^2, in closed form."""
        return float(sum(self.component_norm2(j) for j in range(self.d)))

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def is_zero(self) -> bool:
        return self.norm2() == 0.0

    def __mul__(self, a: float) -> "TestFunction":
        a = float(a)
        out = []
        for c in self.components:
            out.append(c * a if isinstance(c, HermiteSeries) else GridFunction(c.x0, c.dx, a * c.values, c.decay))
        return TestFunction(tuple(out))

    __rmul__ = __mul__


def _eta_pairing(f: RealFunction1D, k: EtaKernel) -> float:
    """int f eta_t over (-inf, t), with the kernel evaluated from exact
    offsets so that its singular points 0 and t stay resolved."""
    t = k.t
    lo, hi = f.support()
    total = 0.0
    if lo < 0.0:
        # x = -u, u in [0, -lo]
        pts = [-p for p in f.breakpoints if lo < p < 0.0]
        val, _ = adaptive_integrate(lambda u: f(-u) * k.at_offsets(t + u, u), 0.0, -lo, _PAIR, points=pts)
        total += val
    a, b = max(lo, 0.0), min(hi, t)
    if a < b:
        # x = t - u, u in [t - b, t - a]
        pts = [t - p for p in f.breakpoints if a < p < b]
        val, _ = adaptive_integrate(lambda u: f(t - u) * k.at_offsets(u, u - t), t - b, t - a, _PAIR, points=pts)
        total += val
    return float(total)


def l2_inner(f: RealFunction1D, g) -> float:
    """<f, g> on the line: closed form for Hermite series sharing a frame,
    quadrature otherwise (in particular whenever ``g`` is an eta kernel)."""
    if isinstance(g, EtaKernel):
        return _eta_pairing(f, g)
    if isinstance(f, HermiteSeries) and f.same_frame(g):
        return f.inner(g)
    lo = max(f.support()[0], g.support()[0])
    hi = min(f.support()[1], g.support()[1])
    if not lo < hi:
        return 0.0
    pts = sorted({p for p in tuple(f.breakpoints) + tuple(g.breakpoints) if lo < p < hi})
    val, _ = adaptive_integrate(lambda x: f(x) * g(x), lo, hi, _PAIR.with_(endpoint_transform=EndpointTransform.NONE),
                                points=pts)
    return float(val)


# --- time profiles -----------------------------------------------------------

class TimeProfile:
    """Smooth proxies of the two time functions every current formula needs.

    For each component j on [0, T]:

    * ``noise(j, t)  = (M_+ phi_j)(t)``, a smooth function;
    * ``pairing(j, t) = <phi_j, eta_t> = t * B_j(t)``, where ``B_j`` is
      interpolated from direct quadrature values divided by ``t``. The
      factor ``t`` keeps the relative accuracy near ``t = 0``.

    Both are Chebyshev interpolants; the duality ``d/dt <phi_j, eta_t> =
    (M_+ phi_j)(t)`` is available as :meth:`consistency` for checking.
    """

    def __init__(self, h, phi: TestFunction, T: float, rtol: float = 1e-13):
        self.h = HurstParam.of(h)
        self.phi = phi
        self.T = float(T)
        self.rtol = rtol
        self._noise: dict[int, ChebyshevProxy] = {}
        self._ratio: dict[int, ChebyshevProxy] = {}

    def _noise_proxy(self, j: int) -> ChebyshevProxy:
        if j not in self._noise:
            f = self.phi[j]
            self._noise[j] = chebyshev_proxy(lambda t: np.asarray(apply_m_plus(self.h, f, t), dtype=float),
                                             0.0, self.T, self.rtol)
        return self._noise[j]

    def _ratio_proxy(self, j: int) -> ChebyshevProxy:
        if j not in self._ratio:
            f = self.phi[j]

            def ratio(t):
                return np.array([l2_inner(f, eta(self.h, ti)) / ti for ti in np.atleast_1d(t)])

            self._ratio[j] = chebyshev_proxy(ratio, 0.0, self.T, self.rtol)
        return self._ratio[j]

    def noise(self, j: int, t):
        return self._noise_proxy(j)(t)

    def pairing(self, j: int, t):
        t = np.asarray(t, dtype=float)
        return t * self._ratio_proxy(j)(t)

    def pairings(self, t) -> np.ndarray:
        """Array of shape ``(d,) + t.shape``."""
        return np.stack([self.pairing(j, t) for j in range(self.phi.d)])

    def consistency(self, j: int, n: int = 257) -> float:
        """max |d/dt (t B_j) - M_+ phi_j| / max |M_+ phi_j| on a uniform grid."""
        t = np.linspace(0.0, self.T, n)
        rb = self._ratio_proxy(j)
        deriv = rb(t) + t * rb.deriv()(t)
        m = self.noise(j, t)
        return float(np.max(np.abs(deriv - m)) / max(np.max(np.abs(m)), 1e-300))


@functools.lru_cache(maxsize=64)
def _cached_profile(h: float, phi: TestFunction, T: float) -> TimeProfile:
    return TimeProfile(h, phi, T)


def time_profile(h, phi: TestFunction, T: float) -> TimeProfile:
    """Shared (cached) :class:`TimeProfile` for ``(H, phi, T)``."""
    return _cached_profile(HurstParam.of(h).h, phi, float(T))


# --- Donsker delta -------------------------------------------------------------

@dataclass(frozen=True)
class DonskerSpec:
    """delta(x - B_H(t)) in R^d, optionally with the first N chaos levels removed."""

    x: tuple
    h: HurstParam
    t: float
    truncation: int | None = None

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        if not x:
            raise PreconditionError("x must have at least one component")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "h", HurstParam.of(self.h))
        if not self.t > 0:
            raise PreconditionError("t must be > 0")
        object.__setattr__(self, "t", float(self.t))
        if self.truncation is not None:
            if int(self.truncation) != self.truncation or self.truncation < 0:
                raise PreconditionError("truncation N must be a nonnegative integer")
            object.__setattr__(self, "truncation", int(self.truncation))

    @property
    def d(self) -> int:
        return len(self.x)

    @property
    def variance(self) -> float:
        return self.t ** (2.0 * self.h.h)


def _check_dims(spec, phi: TestFunction):
    if phi.d != spec.d:
        raise PreconditionError("test function has %d components, point has %d" % (phi.d, spec.d))


def _donsker_exponent(spec: DonskerSpec, z, phi: TestFunction):
    """-(1/(2 t^{2H})) sum_j (x_j - z <phi_j, eta_t>)^2 for (array) z."""
    _check_dims(spec, phi)
    k = eta(spec.h, spec.t)
    z = np.asarray(z)
    acc = np.zeros(z.shape, dtype=complex if np.iscomplexobj(z) else float)
    for j in range(spec.d):
        a = l2_inner(phi[j], k)
        acc = acc + (spec.x[j] - z * a) ** 2
    return -acc / (2.0 * spec.variance)


def _scalar(v):
    v = np.asarray(v)
    return v.item() if v.ndim == 0 else v


def donsker_s(spec: DonskerSpec, z, phi: TestFunction):
    """S(delta(x - B_H(t)))(z phi) = (2 pi t^{2H})^{-d/2} exp(-|x - z<phi, eta_t>|^2 / (2 t^{2H}))."""
    if spec.truncation is not None:
        raise PreconditionError("use donsker_s_truncated for a truncated spec")
    pref = (2.0 * math.pi * spec.variance) ** (-spec.d / 2.0)
    return _scalar(pref * np.exp(_donsker_exponent(spec, z, phi)))


def donsker_s_truncated(spec: DonskerSpec, z, phi: TestFunction):
    """As :func:`donsker_s` with exp replaced by the tail sum_{n >= N} w^n / n!."""
    if spec.truncation is None:
        raise PreconditionError("spec carries no truncation N")
    pref = (2.0 * math.pi * spec.variance) ** (-spec.d / 2.0)
    return _scalar(pref * truncated_exp(spec.truncation, _donsker_exponent(spec, z, phi)))


def fractional_noise_s(h, t: float, i: int, phi: TestFunction) -> float:
    """S(W_H^{(i)}(t))(phi) = (M_+ phi_i)(t); ``i`` is 1-based."""
    if not 1 <= i <= phi.d:
        raise PreconditionError("component index i must be in 1..%d" % phi.d)
    if not t > 0:
        raise PreconditionError("t must be > 0")
    return float(apply_m_plus(h, phi[i - 1], t))


# --- U-functionals -------------------------------------------------------------

def l2_norm(phi: TestFunction) -> float:
    return phi.norm()


@dataclass(frozen=True, eq=False)
class UFunctional:
    """``evaluator(z, phi)`` is S(Phi)(z phi); ``z`` may be a complex array.

    ``norm`` is the continuous norm used in the growth bound and
    ``norm_id`` a readable name for it.
    """

    evaluator: Callable
    K1: float
    K2: float
    norm_id: str = "L2"
    norm: Callable = field(default=l2_norm)
    label: str = ""

    def __post_init__(self):
        if not (self.K1 >= 0 and self.K2 >= 0):
            raise PreconditionError("growth constants must be nonnegative")

    def __call__(self, z, phi: TestFunction):
        return self.evaluator(z, phi)

    def bound(self, z, phi: TestFunction):
        z = np.asarray(z)
        return self.K1 * np.exp(self.K2 * np.abs(z) ** 2 * self.norm(phi) ** 2)


def unit_functional() -> UFunctional:
    """S-transform of the constant 1."""
    return UFunctional(lambda z, phi: _scalar(np.ones(np.shape(z), dtype=complex)), 1.0, 0.0, label="1")


def donsker_functional(spec: DonskerSpec) -> UFunctional:
    """Donsker delta as a U-functional in the norm |.|_0 with K2 = 1.

    Untruncated: K1 = (2 pi t^{2H})^{-d/2}, since Re (x_j - z a_j)^2 >= -|z|^2 a_j^2
    and a_j^2 <= t^{2H} |phi_j|^2. Truncated: |exp_N(w)| <= e^{|w|} and
    |w| <= |x|^2 / t^{2H} + |z|^2 |phi|_0^2 give K1 = (2 pi t^{2H})^{-d/2} e^{|x|^2 / t^{2H}}.
    """
    k1 = (2.0 * math.pi * spec.variance) ** (-spec.d / 2.0)
    if spec.truncation is None:
        return UFunctional(lambda z, phi: donsker_s(spec, z, phi), k1, 1.0, label="donsker")
    k1 *= math.exp(sum(v * v for v in spec.x) / spec.variance)
    return UFunctional(lambda z, phi: donsker_s_truncated(spec, z, phi), k1, 1.0,
                       label="donsker_N%d" % spec.truncation)


def mplus_sup_norm(h, T: float, i: int | None = None) -> Callable:
    """phi -> sqrt(sum_j sup_[0,T] |M_+ phi_j|^2), over component ``i`` only if given."""

    def norm(phi: TestFunction) -> float:
        prof = time_profile(h, phi, T)
        t = np.linspace(0.0, T, 1025)
        comps = range(phi.d) if i is None else [i - 1]
        return math.sqrt(sum(float(np.max(np.abs(prof.noise(j, t)))) ** 2 for j in comps))

    return norm


def noise_functional(h, t: float, i: int, T: float | None = None) -> UFunctional:
    """z -> z (M_+ phi_i)(t), bounded by exp(|z|^2 sup|M_+ phi_i|^2) since y <= e^{y^2}."""
    T = float(T if T is not None else t)
    if not 0 < t <= T:
        raise PreconditionError("need 0 < t <= T")
    return UFunctional(lambda z, phi: _scalar(np.asarray(z) * fractional_noise_s(h, t, i, phi)), 1.0, 1.0,
                       norm_id="sup_Mplus_i%d_T%g" % (i, T), norm=mplus_sup_norm(h, T, i), label="noise")


def wick_product(u1: UFunctional, u2: UFunctional) -> UFunctional:
    """S(Phi <> Psi) = S(Phi) S(Psi); K1 multiplies, K2 adds.

    When the two factors use different norms the product is bounded in the
    norm sqrt(n1^2 + n2^2), which dominates both.
    """
    if u1.norm_id == u2.norm_id:
        norm_id, norm = u1.norm_id, u1.norm
    else:
        norm_id = "%s+%s" % (u1.norm_id, u2.norm_id)

        def norm(phi, a=u1.norm, b=u2.norm):
            return math.sqrt(a(phi) ** 2 + b(phi) ** 2)

    def evaluator(z, phi):
        return u1(z, phi) * u2(z, phi)

    return UFunctional(evaluator, u1.K1 * u2.K1, u1.K2 + u2.K2, norm_id, norm,
                       label="(%s)<>(%s)" % (u1.label, u2.label))


@dataclass(frozen=True)
class GrowthReport:
    passed: bool
    max_ratio: float
    witness_z: complex | None
    n_probes: int
    ratios: tuple = field(repr=False, default=())


def growth_bound_check(u: UFunctional, phi: TestFunction, z_samples) -> GrowthReport:
    """Test |u(z, phi)| <= K1 exp(K2 |z|^2 ||phi||^2) at every sample z.

    The reported ratio is |u| / bound; the witness is the z of the largest
    ratio (the first violation when the check fails).
    """
    z = np.atleast_1d(np.asarray(z_samples, dtype=complex))
    vals = np.abs(np.asarray(u(z, phi), dtype=complex))
    bound = u.bound(z, phi)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(bound > 0, vals / bound, np.where(vals > 0, np.inf, 0.0))
    bad = np.nonzero(vals > bound)[0]
    k = int(bad[0]) if bad.size else int(np.argmax(ratios))
    return GrowthReport(passed=not bad.size, max_ratio=float(np.max(ratios)), witness_z=complex(z[k]),
                        n_probes=z.size, ratios=tuple(float(r) for r in ratios))


# --- Monte Carlo oracle ------------------------------------------------------------

MC_EPSILONS = (0.05, 0.025)
_MC_CHUNK = 1 << 16


def mc_donsker_s(spec: DonskerSpec, z: float, phi: TestFunction, n_samples: int, seed: int):
    """Monte Carlo estimate of S(delta(x - B_H(t)))(z phi) for real ``z``.

    Per component j the pair (G_j, Y_j) = (<w, eta_t>, <w, phi_j>) is Gaussian
    with covariance [[<eta_t, eta_t>, <phi_j, eta_t>], [<phi_j, eta_t>,
    |phi_j|^2]]. The estimator averages

        prod_j N(x_j - G_j; 0, eps^2) * exp(z sum_j Y_j - z^2 |phi|_0^2 / 2)

    at eps and eps/2 on the same draws and combines them as
    (4 I(eps/2) - I(eps)) / 3, cancelling the O(eps^2) mollifier bias.
    Returns ``(estimate, standard_error)``.
    """
    if spec.truncation is not None:
        raise PreconditionError("the Monte Carlo oracle covers the untruncated delta only")
    if np.iscomplexobj(z) and np.imag(z) != 0:
        raise PreconditionError("the Monte Carlo oracle needs real z")
    z = float(np.real(z))
    if n_samples < 1000:
        raise PreconditionError("n_samples must be >= 1000")
    _check_dims(spec, phi)
    d = spec.d
    k = eta(spec.h, spec.t)
    var_g = eta_inner(spec.h, spec.t, spec.t)
    factors = []
    for j in range(d):
        a = l2_inner(phi[j], k)
        factors.append(JointGaussianSpec([[var_g, a], [a, phi.component_norm2(j)]]).factor())
    x = np.asarray(spec.x)
    e1, e2 = MC_EPSILONS
    n_chunks = (n_samples + _MC_CHUNK - 1) // _MC_CHUNK
    children = np.random.SeedSequence(int(seed)).spawn(n_chunks)
    total = 0.0
    total_sq = 0.0
    for c, child in enumerate(children):
        count = min(_MC_CHUNK, n_samples - c * _MC_CHUNK)
        rng = make_rng(child)
        sq = np.zeros(count)
        y_sum = np.zeros(count)
        for j in range(d):
            g, y = (rng.standard_normal((count, 2)) @ factors[j].T).T
            sq += (x[j] - g) ** 2
            y_sum += y
        weight = np.exp(z * y_sum - 0.5 * z * z * phi.norm2())
        m1 = (2 * math.pi * e1 * e1) ** (-d / 2) * np.exp(-sq / (2 * e1 * e1))
        m2 = (2 * math.pi * e2 * e2) ** (-d / 2) * np.exp(-sq / (2 * e2 * e2))
        v = weight * (4.0 * m2 - m1) / 3.0
        total += float(np.sum(v))
        total_sq += float(np.sum(v * v))
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0)
    return complex(mean), math.sqrt(var / (n_samples - 1))
