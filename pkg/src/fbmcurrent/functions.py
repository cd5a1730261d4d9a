"""Real functions on the line that the fractional operators act on.

Three representations are supported:

* :class:`HermiteSeries` -- finite combinations of Hermite functions in a
  shifted/scaled frame (Gaussian decay, closed-form L2 products);
* :class:`Indicator` -- a weighted indicator of ``[a, b)``;
* :class:`GridFunction` -- samples on a uniform grid, linearly interpolated
  and zero outside the grid.

Every representation is vectorized, knows its (effective) support and the
points where it is not smooth, and can be reflected ``x -> -x``. The
reflection turns right-sided operators into left-sided ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError

__all__ = [
    "RealFunction1D",
    "HermiteSeries",
    "Indicator",
    "GridFunction",
    "hermite_functions",
    "sample_on_grid",
]

_PI_QUARTER = math.pi ** -0.25


def hermite_functions(kmax: int, x):
    """Orthonormal Hermite functions psi_0..psi_kmax at ``x``.

    Returns an array of shape ``(kmax + 1,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = _PI_QUARTER * np.exp(-0.5 * x * x)
    if kmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, kmax):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


class RealFunction1D:
    """Interface shared by the representations below."""

    decay: str | None = None

    def __call__(self, x):
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def reflect(self) -> "RealFunction1D":
        raise NotImplementedError


@dataclass(frozen=True)
class HermiteSeries(RealFunction1D):
    """sum_k c_k psi_k((x - center) / scale) / sqrt(scale)."""

    coeffs: tuple
    center: float = 0.0
    scale: float = 1.0
    decay = "gaussian"

    def __post_init__(self):
        coeffs = tuple(float(c) for c in np.atleast_1d(self.coeffs))
        if not coeffs:
            raise PreconditionError("HermiteSeries needs at least one coefficient")
        if not self.scale > 0:
            raise PreconditionError("scale must be > 0")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "center", float(self.center))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.center) / self.scale
        psi = hermite_functions(self.degree, u)
        c = np.asarray(self.coeffs).reshape((-1,) + (1,) * u.ndim)
        out = np.sum(c * psi, axis=0) / math.sqrt(self.scale)
        return out if out.ndim else float(out)

    def support(self):
        radius = self.scale * (math.sqrt(2 * self.degree + 1) + 9.0)
        return self.center - radius, self.center + radius

    def reflect(self):
        signs = [(-1) ** k for k in range(len(self.coeffs))]
        return HermiteSeries(tuple(s * c for s, c in zip(signs, self.coeffs)), -self.center, self.scale)

    def derivative(self) -> "HermiteSeries":
        c = self.coeffs
        d = np.zeros(len(c) + 1)
        for k, ck in enumerate(c):
            if k > 0:
                d[k - 1] += ck * math.sqrt(k / 2.0)
            d[k + 1] -= ck * math.sqrt((k + 1) / 2.0)
        return HermiteSeries(tuple(d / self.scale), self.center, self.scale)

    def same_frame(self, other) -> bool:
        return isinstance(other, HermiteSeries) and other.center == self.center and other.scale == self.scale

    def inner(self, other: "HermiteSeries") -> float:
        """Closed-form L2 product; both series must share centre and scale."""
        if not self.same_frame(other):
            raise PreconditionError("closed-form inner product needs a common Hermite frame")
        n = min(len(self.coeffs), len(other.coeffs))
        return float(np.dot(self.coeffs[:n], other.coeffs[:n]))

    def norm2(self) -> float:
        return float(np.dot(self.coeffs, self.coeffs))

    def __mul__(self, a):
        return HermiteSeries(tuple(a * c for c in self.coeffs), self.center, self.scale)

    __rmul__ = __mul__

    def __add__(self, other):
        if not self.same_frame(other):
            raise PreconditionError("can only add Hermite series in a common frame")
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n)
        b = np.zeros(n)
        a[: len(self.coeffs)] = self.coeffs
        b[: len(other.coeffs)] = other.coeffs
        return HermiteSeries(tuple(a + b), self.center, self.scale)


@dataclass(frozen=True)
class Indicator(RealFunction1D):
    """height * 1_[a, b)."""

    a: float
    b: float
    height: float = 1.0
    decay = "compact"

    def __post_init__(self):
        if not self.a < self.b:
            raise PreconditionError("indicator needs a < b")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where((x >= self.a) & (x < self.b), self.height, 0.0)
        return out if out.ndim else float(out)

    def support(self):
        return self.a, self.b

    @property
    def breakpoints(self):
        return self.a, self.b

    def reflect(self):
        return Indicator(-self.b, -self.a, self.height)


@dataclass(frozen=True, eq=False)
class GridFunction(RealFunction1D):
    """Linear interpolation of samples on ``x0 + k * dx``, zero outside.

    ``decay`` must be declared (``"compact"`` for data that really stops at
    the grid ends); operators refuse grids without it because the zero
    extension would otherwise be an unchecked assumption.
    """

    x0: float
    dx: float
    values: np.ndarray = field(repr=False)
    decay: str | None = "compact"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise PreconditionError("grid needs at least two samples")
        if not self.dx > 0:
            raise PreconditionError("grid spacing must be > 0")
        if not np.all(np.isfinite(values)):
            raise PreconditionError("grid samples must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def nodes(self):
        return self.x0 + self.dx * np.arange(self.values.size)

    @property
    def x1(self):
        return self.x0 + self.dx * (self.values.size - 1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.nodes, self.values, left=0.0, right=0.0)
        out = np.where((x >= self.x0) & (x <= self.x1), out, 0.0)
        return out if out.ndim else float(out)

    def support(self):
        return self.x0, self.x1

    @property
    def breakpoints(self):
        return self.x0, self.x1

    def reflect(self):
        return GridFunction(-self.x1, self.dx, self.values[::-1].copy(), self.decay)


def sample_on_grid(f, lo: float, hi: float, spacing: float, decay: str = "compact") -> GridFunction:
    n = int(math.ceil((hi - lo) / spacing)) + 1
    x = lo + spacing * np.arange(n)
    return GridFunction(lo, spacing, np.asarray(f(x), dtype=float), decay)
