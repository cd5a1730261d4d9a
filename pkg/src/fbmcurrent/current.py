"""The stochastic current xi(x) = int_0^T delta(x - B_H(t)) dB_H(t) of d-dimensional fBm.

Its i-th component is handled through the S-transform

    S(xi_i(x))(z phi) = (2 pi)^{-d/2} int_0^T t^{-Hd}
                        exp(-|x - z <phi, eta_t>|^2 / (2 t^{2H})) z (M_+ phi_i)(t) dt,

and, at x = 0, through the truncated variant where exp is replaced by the
tail exp_N of its series. Which parameter combinations give a Hida
distribution is decided by :func:`membership`; evaluations for other
combinations are refused rather than returned unflagged.
"""
from __future__ import annotations

import enum
import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .errors import NotAMemberError, PreconditionError
from .frac_ops import HurstParam
from .numerics import EndpointTransform, QuadratureSpec, adaptive_integrate, truncated_exp, upper_incomplete_gamma
from .stransform import TestFunction, UFunctional, time_profile

__all__ = [
    "Rule",
    "CurrentSpec",
    "MembershipVerdict",
    "membership",
    "s_current",
    "s_current_truncated",
    "current_functional",
    "GammaReport",
    "gamma_identity_check",
    "DivergenceReport",
    "divergence_probe",
    "singular_exponent",
    "proof_bound_constant",
]

_QUAD = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=20000)
NEGLIGIBLE = 1e-80


class Rule(str, enum.Enum):
    NONZERO_X = "thm_3_1_nonzero_x"
    COR_D1 = "cor_d1"
    COR_SMALL_HD = "cor_small_Hd"
    THM_TRUNC = "thm_trunc"
    OUTSIDE_SCOPE = "outside_scope"


@dataclass(frozen=True)
class CurrentSpec:
    """Component ``i`` (1-based) of xi(x) on [0, T], or of xi^{(N)}(0) when
    ``truncation`` is set. ``N = 0`` is accepted as the formal untruncated case."""

    x: tuple
    h: HurstParam
    T: float
    i: int = 1
    truncation: int | None = None

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        if not x:
            raise PreconditionError("x must have at least one component")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "h", HurstParam.of(self.h))
        if not (self.T > 0 and math.isfinite(self.T)):
            raise PreconditionError("T must be positive and finite")
        object.__setattr__(self, "T", float(self.T))
        if not 1 <= int(self.i) <= len(x):
            raise PreconditionError("component index i must be in 1..%d" % len(x))
        object.__setattr__(self, "i", int(self.i))
        if self.truncation is not None:
            n = self.truncation
            if int(n) != n or n < 0:
                raise PreconditionError("truncation N must be a nonnegative integer")
            object.__setattr__(self, "truncation", int(n))
            if self.x_is_zero and len(x) == 1:
                raise PreconditionError("the truncated current at x = 0 needs d >= 2")

    @property
    def d(self) -> int:
        return len(self.x)

    @property
    def x_is_zero(self) -> bool:
        return all(v == 0.0 for v in self.x)

    @property
    def x_norm2(self) -> float:
        return float(sum(v * v for v in self.x))


@dataclass(frozen=True)
class MembershipVerdict:
    member: bool
    rule: Rule
    inequality_slack: float | None = None

    def describe(self) -> str:
        s = "member" if self.member else "not a member"
        if self.inequality_slack is not None:
            s += " (rule %s, slack %.6g)" % (self.rule.value, self.inequality_slack)
        else:
            s += " (rule %s)" % self.rule.value
        return s


def membership(x, h, d: int | None = None, N: int | None = None) -> MembershipVerdict:
    """Decide whether xi_i(x) (or xi_i^{(N)}(0)) is a Hida distribution.

    * x != 0: member iff H <= 1/2; slack 1/2 - H (larger H is outside the
      proven range and reported as ``outside_scope``).
    * x = 0, d = 1: member for every H.
    * x = 0, d >= 2: member iff Hd < 1, slack 1 - Hd.
    * x = 0, d >= 2, truncation N: member iff 2N(H - 1) + Hd < 1,
      slack 1 - (2N(H - 1) + Hd).
    """
    hv = HurstParam.of(h).h
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if d is None:
        d = xs.size
    d = int(d)
    if d < 1:
        raise PreconditionError("d must be >= 1")
    if xs.size not in (1, d):
        raise PreconditionError("x has %d components but d = %d" % (xs.size, d))
    if N is not None and (int(N) != N or N < 0):
        raise PreconditionError("truncation N must be a nonnegative integer")
    zero = bool(np.all(xs == 0.0))
    # verdicts come from exact rational arithmetic on the binary value of H,
    # so a boundary such as 2N(H - 1) + Hd = 1 is never decided by rounding
    hq = Fraction(hv)
    if not zero:
        if N is not None:
            return MembershipVerdict(False, Rule.OUTSIDE_SCOPE, None)
        exact = Fraction(1, 2) - hq
        rule = Rule.NONZERO_X if exact >= 0 else Rule.OUTSIDE_SCOPE
        return MembershipVerdict(exact >= 0, rule, float(exact))
    if d == 1:
        if N is not None:
            return MembershipVerdict(False, Rule.OUTSIDE_SCOPE, None)
        return MembershipVerdict(True, Rule.COR_D1, float(1 - hq))
    if N is None:
        exact = 1 - hq * d
        return MembershipVerdict(exact > 0, Rule.COR_SMALL_HD, float(exact))
    exact = 1 - (2 * int(N) * (hq - 1) + hq * d)
    return MembershipVerdict(exact > 0, Rule.THM_TRUNC, float(exact))


def _verdict(spec: CurrentSpec) -> MembershipVerdict:
    return membership(spec.x, spec.h, spec.d, spec.truncation)


def require_member(spec: CurrentSpec, truncated: bool) -> MembershipVerdict:
    if truncated and spec.truncation is None:
        raise PreconditionError("spec carries no truncation N")
    if not truncated and spec.truncation is not None:
        raise PreconditionError("use s_current_truncated for a truncated spec")
    v = _verdict(spec)
    if not v.member:
        raise NotAMemberError("not a Hida distribution: %s" % v.describe(), v)
    return v


def singular_exponent(spec: CurrentSpec, order: int = 0) -> float:
    """beta with |integrand| ~ t^{-beta} as t -> 0 at x = 0.

    ``order`` counts extra powers of <phi, eta_t> / t^H in the integrand,
    each contributing a factor t^{1 - H}."""
    hv = spec.h.h
    return hv * spec.d - order * (1.0 - hv)


def time_quadrature(spec: CurrentSpec, beta: float) -> QuadratureSpec:
    """Plain Gauss-Kronrod away from x = 0 (the integrand vanishes to all
    orders at t = 0); for x = 0 a power substitution t = T w^p, p = 1/(1 - beta),
    which makes a t^{-beta} endpoint bounded."""
    if spec.x_is_zero and beta > 0:
        if beta >= 1:
            raise PreconditionError("time integrand is not integrable at 0 (exponent %.3g)" % -beta)
        return _QUAD.with_(endpoint_transform=EndpointTransform.POWER_SUBSTITUTION, power=1.0 / (1.0 - beta))
    return _QUAD


def _exponent(spec: CurrentSpec, z, A, t):
    """-sum_j (x_j - z A_j)^2 / (2 t^{2H}) for t of shape (nt,), z of shape (nz,)."""
    acc = 0.0
    for j in range(spec.d):
        acc = acc + (spec.x[j] - z[None, :] * A[j][:, None]) ** 2
    return -acc / (2.0 * t[:, None] ** (2.0 * spec.h.h))


def _integrate_over_time(spec: CurrentSpec, integrand, beta: float):
    val, err = adaptive_integrate(integrand, 0.0, spec.T, time_quadrature(spec, beta))
    return val, err


def _check_phi(spec: CurrentSpec, phi: TestFunction):
    if phi.d != spec.d:
        raise PreconditionError("test function has %d components, point has %d" % (phi.d, spec.d))


def s_current(spec: CurrentSpec, z, phi: TestFunction, *, return_error: bool = False):
    """S(xi_i(x))(z phi) by quadrature in t; ``z`` may be a complex array.

    Refuses (``NotAMemberError``) when the parameters do not give a Hida distribution.
    """
    require_member(spec, truncated=False)
    _check_phi(spec, phi)
    return _s_current(spec, z, phi, None, return_error)


def s_current_truncated(spec: CurrentSpec, z, phi: TestFunction, *, return_error: bool = False):
    """S(xi_i^{(N)}(0))(z phi): the exponential replaced by exp_N."""
    require_member(spec, truncated=True)
    _check_phi(spec, phi)
    if not spec.x_is_zero:
        raise PreconditionError("the truncated current is defined at x = 0")
    return _s_current(spec, z, phi, spec.truncation, return_error)


def _s_current(spec, z, phi, N, return_error):
    scalar = np.ndim(z) == 0
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    if phi.is_zero():
        out = np.zeros(zz.shape, dtype=complex)
        err = np.zeros(zz.shape)
    else:
        prof = time_profile(spec.h, phi, spec.T)
        i = spec.i - 1
        pref = (2.0 * math.pi) ** (-spec.d / 2.0)
        hd = spec.h.h * spec.d

        def integrand(t):
            A = prof.pairings(t)
            e = _exponent(spec, zz, A, t)
            core = np.exp(e) if N is None else truncated_exp(N, e)
            return pref * t[:, None] ** (-hd) * core * (zz[None, :] * prof.noise(i, t)[:, None])

        beta = hd if N is None else singular_exponent(spec, 2 * N)
        out, err = _integrate_over_time(spec, integrand, beta)
        out = np.asarray(out, dtype=complex)
        err = np.asarray(err, dtype=float)
    if scalar:
        out, err = complex(out[0]), float(err[0])
    return (out, err) if return_error else out


# --- growth-bound metadata -------------------------------------------------------

def current_functional(spec: CurrentSpec) -> UFunctional:
    """The current's S-transform as a U-functional with explicit constants.

    With S^2 = sum_j sup_[0,T] |M_+ phi_j|^2 one has |<phi_j, eta_t>| <= t S_j
    and |<phi_j, eta_t>| <= t^H |phi_j|_0, which give

        |integrand| <= (2 pi t^{2H})^{-d/2} e^{-|x|^2/(2t^{2H})} e^{|x|^2 T^{2-4H}/2}
                       exp(|z|^2 (|phi|_0^2 + S^2)),

    (for x != 0 this uses H <= 1/2). Hence K2 = 1 in the norm
    sqrt(|phi|_0^2 + S^2) and K1 the time integral of the prefactor. The
    truncated case uses |exp_N(w)| <= |w|^N e^{|w|} / N! instead and gets
    K1 = (2 pi)^{-d/2} T^{b+1} / (b+1), b = 2N(1-H) - dH.
    """
    v = _verdict(spec)
    if not v.member:
        raise NotAMemberError("not a Hida distribution: %s" % v.describe(), v)
    hv, d, T = spec.h.h, spec.d, spec.T
    pref = (2.0 * math.pi) ** (-d / 2.0)
    if spec.truncation is not None:
        b = 2 * spec.truncation * (1.0 - hv) - d * hv
        k1 = pref * T ** (b + 1.0) / (b + 1.0)
    elif spec.x_is_zero:
        k1 = pref * T ** (1.0 - hv * d) / (1.0 - hv * d)
    else:
        x2 = spec.x_norm2
        integral, _ = adaptive_integrate(
            lambda t: pref * t ** (-hv * d) * np.exp(-x2 / (2.0 * t ** (2 * hv))), 0.0, T, _QUAD)
        k1 = math.exp(0.5 * x2 * T ** (2.0 - 4.0 * hv)) * integral

    def norm(phi: TestFunction) -> float:
        prof = time_profile(spec.h, phi, T)
        t = np.linspace(0.0, T, 2049)
        s2 = sum(float(np.max(np.abs(prof.noise(j, t)))) ** 2 for j in range(phi.d))
        return math.sqrt(phi.norm2() + s2)

    if spec.truncation is None:
        def evaluator(z, phi):
            return s_current(spec, z, phi)
    else:
        def evaluator(z, phi):
            return s_current_truncated(spec, z, phi)

    return UFunctional(evaluator, k1, 1.0, norm_id="L2+sup_Mplus_T%g" % T, norm=norm, label="current")


def proof_bound_constant(spec: CurrentSpec, phi: TestFunction, t_grid, z_grid) -> float:
    """Smallest C with |integrand(z, t)| <= (2 pi t^{2H})^{-d/2} e^{-|x|^2/(2t^{2H})}
    e^{C |x|^2} e^{C |z|^2 |phi|_0^2} on the probe grid (a reported fit; the
    constant is existential in the estimate this mirrors)."""
    _check_phi(spec, phi)
    prof = time_profile(spec.h, phi, spec.T)
    t = np.asarray(t_grid, dtype=float)
    z = np.asarray(z_grid, dtype=complex)
    hv = spec.h.h
    A = prof.pairings(t)
    e = _exponent(spec, z, A, t)
    noise = np.abs(z[None, :] * prof.noise(spec.i - 1, t)[:, None])
    with np.errstate(divide="ignore"):
        log_int = e.real + np.log(noise)  # the (2 pi t^{2H})^{-d/2} factor cancels
    log_env = -spec.x_norm2 / (2.0 * t ** (2 * hv))
    denom = spec.x_norm2 + np.abs(z[None, :]) ** 2 * phi.norm2()
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (log_int - log_env[:, None]) / denom
    c = c[np.isfinite(c)]
    return float(max(c.max(), 0.0)) if c.size else 0.0


# --- the incomplete-gamma identity ------------------------------------------------

@dataclass(frozen=True)
class GammaReport:
    lhs: float
    rhs: float
    residual: float
    both_negligible: bool
    shape_parameter: float
    printed_shape_parameter: float
    printed_rhs: float | None
    note: str = ""


def gamma_identity_check(x, h, d: int, T: float) -> GammaReport:
    """Compare int_0^T t^{-Hd} e^{-|x|^2/(2t^{2H})} dt with
    (1/(2H)) (|x|^2/2)^{-d/2 + 1/(2H)} Gamma((Hd - 1)/(2H), |x|^2/(2T^{2H})).

    The substitution y = |x|^2 / (2 t^{2H}) fixes the first argument of
    Gamma at (Hd - 1)/(2H); the report also carries the value obtained with
    (Hd + 1)/(2H) to document how far that variant is off.
    """
    hv = HurstParam.of(h).h
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    r2 = float(np.dot(xs, xs))
    if r2 == 0.0:
        raise PreconditionError("gamma_identity_check needs x != 0")
    if not T > 0:
        raise PreconditionError("T must be > 0")
    d = int(d)
    lhs, _ = adaptive_integrate(lambda t: t ** (-hv * d) * np.exp(-r2 / (2.0 * t ** (2 * hv))), 0.0, T, _QUAD)
    u = r2 / (2.0 * T ** (2 * hv))
    a = (hv * d - 1.0) / (2 * hv)
    a_printed = (hv * d + 1.0) / (2 * hv)
    scale = (r2 / 2.0) ** (-d / 2.0 + 1.0 / (2 * hv)) / (2 * hv)

    def rhs_for(a_):
        try:
            return scale * upper_incomplete_gamma(a_, u)
        except PreconditionError:
            return None

    rhs = rhs_for(a)
    printed = rhs_for(a_printed)
    if rhs is None:
        raise PreconditionError("Gamma((Hd-1)/(2H), .) hits a nonpositive integer shape (Hd = %g)" % (hv * d))
    if abs(lhs) < NEGLIGIBLE and abs(rhs) < NEGLIGIBLE:
        return GammaReport(lhs, rhs, 0.0, True, a, a_printed, printed, "both negligible")
    residual = abs(lhs - rhs) / abs(lhs)
    note = ""
    if printed is not None:
        note = "shape (Hd+1)/(2H) would give relative residual %.3g" % (abs(lhs - printed) / abs(lhs))
    return GammaReport(lhs, rhs, residual, False, a, a_printed, printed, note)


# --- divergence probes ---------------------------------------------------------------

@dataclass(frozen=True)
class DivergenceReport:
    cutoffs: tuple
    integrals: tuple
    predicted_exponent: float
    fitted_exponent: float
    log_slope: float | None
    converges: bool
    mode: str
    local_exponents: tuple = field(default=(), repr=False)


def divergence_probe(spec: CurrentSpec, cutoffs, *, mode: str = "envelope",
                     phi: TestFunction | None = None, z: float = 1.0) -> DivergenceReport:
    """Growth of int_eps^T |integrand| dt as eps decreases, at x = 0.

    ``mode="envelope"`` integrates the bare power t^alpha with alpha = -Hd
    (untruncated) or 2N(1-H) - dH (truncated); ``mode="integrand"``
    integrates the modulus of the actual S-transform integrand for ``phi``
    and real ``z``. Successive differences over the cutoffs give local
    exponents of the law eps^{alpha+1}; their last value is reported with
    the prediction alpha + 1. Geometric cutoffs make these exact for a pure
    power. When alpha = -1 the growth is logarithmic and ``log_slope`` is
    reported as well: the last difference over the log cutoff ratio, divided
    by the amplitude of the integrand near the smallest cutoff (1 for ln(T/eps)).

    Untruncated member specs are refused: their integral converges and
    there is nothing to probe. Truncated specs are accepted either way so
    that the plateau on the member side can be confirmed.
    """
    if not spec.x_is_zero:
        raise PreconditionError("divergence probes are defined at x = 0")
    v = _verdict(spec)
    if spec.truncation is None and v.member:
        raise PreconditionError("spec is a member (%s); nothing diverges" % v.describe())
    eps = np.asarray(cutoffs, dtype=float)
    if eps.ndim != 1 or eps.size < 3:
        raise PreconditionError("need at least three cutoffs")
    if np.any(np.diff(eps) >= 0) or eps[0] >= spec.T or eps[-1] <= 0:
        raise PreconditionError("cutoffs must decrease strictly inside (0, T)")
    hv, d = spec.h.h, spec.d
    alpha = -hv * d if spec.truncation is None else 2 * spec.truncation * (1.0 - hv) - d * hv
    if mode == "envelope":
        def f(t):
            return t ** alpha
    elif mode == "integrand":
        if phi is None:
            raise PreconditionError("integrand mode needs a test function")
        _check_phi(spec, phi)
        prof = time_profile(spec.h, phi, spec.T)
        N = spec.truncation
        zz = np.array([complex(z)])

        def f(t):
            A = prof.pairings(t)
            e = _exponent(spec, zz, A, t)[:, 0]
            core = np.exp(e) if N is None else truncated_exp(N, e)
            return np.abs((2 * math.pi) ** (-d / 2) * t ** (-hv * d) * core * z * prof.noise(spec.i - 1, t))
    else:
        raise PreconditionError("mode must be 'envelope' or 'integrand'")
    # integrate panel by panel [eps_{k+1}, eps_k] and accumulate
    edges = np.concatenate([[spec.T], eps])
    pieces = [adaptive_integrate(f, lo, hi, _QUAD)[0] for hi, lo in zip(edges[:-1], edges[1:])]
    integrals = np.cumsum(pieces)
    diffs = np.asarray(pieces[1:])
    logr = np.log(eps[:-1] / eps[1:])
    # D_k ~ c eps^{alpha+1} => log(D_{k+1}/D_k) / log(eps_{k+1}/eps_k) = alpha + 1
    local = np.log(diffs[1:] / diffs[:-1]) / np.log(eps[2:] / eps[1:-1])
    fitted = float(local[-1]) if local.size else float("nan")
    log_slope = None
    if abs(alpha + 1.0) < 1e-12:
        # normalize by the local amplitude c of f ~ c t^alpha so that ln(T/eps) has slope 1
        amp = float(np.asarray(f(np.array([eps[-1]])))[0]) * eps[-1] ** (-alpha)
        log_slope = float(diffs[-1] / (logr[-1] * amp))
    return DivergenceReport(tuple(eps), tuple(float(v) for v in integrals), alpha + 1.0, fitted, log_slope,
                            converges=alpha + 1.0 > 0, mode=mode, local_exponents=tuple(float(v) for v in local))
