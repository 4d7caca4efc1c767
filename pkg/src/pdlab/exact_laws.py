"""Exact densities, tails and moments of the ranked frequencies.

The density of the largest frequency satisfies a band-recursive functional
equation: on (1/2, 1) it is theta*(1-p)^(theta-1)/p in closed form, and on
each lower band (1/(k+1), 1/k] its value at p is determined by the CDF at
p/(1-p), which lies one band higher.  The grid construction walks bands from
the top down, stopping once the unresolved mass below the deepest band edge
drops under a target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.special import gammaln

_EULER_GAMMA = 0.5772156649015328606

_GL_NODES, _GL_WEIGHTS = leggauss(64)


def _gauss_legendre(f, a: float, b: float) -> float:
    if b <= a:
        return 0.0
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.sum(_GL_WEIGHTS * f(mid + half * _GL_NODES)))


def exp_integral_J(u: float) -> float:
    """Exponential integral of e^{-x}/x from u to infinity, u > 0.

    Power series below the switchover, modified-Lentz continued fraction
    above; both target relative error 1e-10 or better.
    """
    if u <= 0:
        raise ValueError("u must be positive (the integral diverges at 0)")
    if u <= 1.0:
        total = -_EULER_GAMMA - math.log(u)
        term = 1.0
        for n in range(1, 60):
            term *= -u / n
            contrib = -term / n
            total += contrib
            if abs(contrib) < 1e-18 * max(abs(total), 1e-300):
                break
        return total
    # Continued fraction e^{-u} / (u + 1 - 1/(u + 3 - 4/(u + 5 - ...)))
    tiny = 1e-300
    b = u + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 200):
        a = -i * i
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        if c == 0.0:
            c = tiny
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return math.exp(-u) * h


@dataclass(frozen=True)
class MomentQuery:
    k: int
    n: int
    theta: float

    def __post_init__(self) -> None:
        if self.k < 1 or self.n < 1:
            raise ValueError("k and n must be >= 1")
        if self.theta <= 0:
            raise ValueError("theta must be positive")


def moment_pk(q: MomentQuery) -> float:
    """E[P_k^n] by quadrature of the Griffiths integral representation.

    The Gamma-ratio prefactor is evaluated in log space so it survives large
    theta.
    """
    k, n, theta = q.k, q.n, q.theta
    log_pref = k * math.log(theta) + gammaln(theta) - gammaln(theta + n)

    def log_integrand(u: float) -> float:
        J = exp_integral_J(u)
        logv = -u - theta * J + log_pref
        if k > 1:
            if J <= 0.0:
                return -math.inf
            logv += (k - 1) * math.log(J) - gammaln(k)
        if n > 1:
            logv += (n - 1) * math.log(u)
        return logv

    # Substitute u = e^{-s}: deep ranks concentrate at exponentially small u
    # (J(u) must reach about (k-1)/theta), where the s-parametrization keeps
    # the peak wide enough for adaptive quadrature to see it.
    def integrand_s(s: float) -> float:
        logv = log_integrand(math.exp(-s)) - s
        return math.exp(logv) if logv > -745.0 else 0.0

    peak_u = math.log(theta) if theta > 1 else 1.0
    lower_s = -math.log(peak_u + 60.0)
    upper_s = (k - 1) / theta + 40.0 * math.sqrt(k) / theta + 60.0
    val1, err1 = quad(
        integrand_s,
        lower_s,
        0.0,
        limit=400,
        epsabs=1e-14,
        epsrel=1e-11,
        points=[-math.log(peak_u)] if peak_u > 1 else None,
    )
    val2, err2 = quad(integrand_s, 0.0, upper_s, limit=400, epsabs=1e-14, epsrel=1e-11)
    total = val1 + val2
    # absolute floor: quad never reports below its epsabs target
    if total > 0 and (err1 + err2) > 1e-6 * total + 1e-13:
        raise ArithmeticError(
            f"moment quadrature did not converge: value={total:.3e} err={err1 + err2:.3e}"
        )
    return total


def homozygosity_moment(m: int, theta: float) -> float:
    """E[sum_k P_k^m] = Gamma(m) / ((theta+1)(theta+2)...(theta+m-1))."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if theta <= 0:
        raise ValueError("theta must be positive")
    return math.exp(gammaln(m) + gammaln(theta + 1) - gammaln(theta + m))


@dataclass(frozen=True)
class _Band:
    k: int
    lo: float
    hi: float
    nodes: np.ndarray
    values: np.ndarray
    tail_at_hi: float  # integral of the density from hi up to 1
    # interpolant and its antiderivative; None on the top band, which is
    # served in closed form
    interp: PchipInterpolator | None
    anti: PchipInterpolator | None


@dataclass(frozen=True)
class DensityGrid:
    """Band-resolved density of the largest ranked frequency and its tails.

    ``leftover`` is the unresolved mass below the deepest band edge; tails
    below that edge extrapolate it flatly (diagnostic only, kept < the
    construction target).
    """

    theta: float
    bands: tuple[_Band, ...]
    leftover: float
    deepest_edge: float

    def _top_tail(self, x: float) -> float:
        # Tail on [1/2, 1): substitute w = (1-p)^theta, which removes the
        # endpoint singularity at p = 1 for theta < 1:
        # T(x) = int_0^{(1-x)^theta} dw / (1 - w^(1/theta)).
        theta = self.theta
        if x >= 1.0:
            return 0.0
        wmax = math.exp(theta * math.log1p(-x))
        return _gauss_legendre(lambda w: 1.0 / (1.0 - w ** (1.0 / theta)), 0.0, wmax)

    def tail(self, x: float) -> float:
        """P{P_1 >= x}."""
        if x <= 0.0:
            return 1.0
        if x >= 1.0:
            return 0.0
        if x >= 0.5:
            return self._top_tail(x)
        for band in self.bands[1:]:
            if x >= band.lo:
                inner = float(band.anti(band.hi) - band.anti(max(x, band.nodes[0])))
                return band.tail_at_hi + inner
        # below the deepest resolved edge: flat extrapolation of the leftover
        edge = self.deepest_edge
        tail_edge = self.bands[-1].tail_at_hi + float(
            self.bands[-1].anti(self.bands[-1].hi) - self.bands[-1].anti(self.bands[-1].nodes[0])
        ) if len(self.bands) > 1 else self._top_tail(edge)
        return tail_edge + self.leftover * (edge - x) / edge

    def cdf(self, x: float) -> float:
        return 1.0 - self.tail(x)

    def density(self, p: float) -> float:
        """Interpolated density value; closed form on the top band."""
        theta = self.theta
        if p <= 0.0 or p >= 1.0:
            return 0.0
        if p > 0.5:
            return theta * math.exp((theta - 1.0) * math.log1p(-p)) / p
        for band in self.bands[1:]:
            if p >= band.lo:
                return max(0.0, float(band.interp(min(max(p, band.nodes[0]), band.hi))))
        return self.leftover / self.deepest_edge  # flat extrapolation

    def rows(self):
        """(band_k, p, g1, tail) rows for export."""
        for band in self.bands:
            for p, v in zip(band.nodes, band.values):
                yield band.k, float(p), float(v), self.tail(float(p))


def g1_density(
    theta: float,
    resolution: int = 160,
    *,
    mass_target: float = 1e-8,
    max_bands: int = 400,
) -> DensityGrid:
    """Build the band-recursive density grid for the largest frequency."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    if resolution < 8:
        raise ArithmeticError("resolution too coarse for the normalization target")

    def closed_form(p: np.ndarray) -> np.ndarray:
        return theta * np.exp((theta - 1.0) * np.log1p(-p)) / p

    def cheb_nodes(lo: float, hi: float, n: int) -> np.ndarray:
        # Chebyshev extrema: clustered at both edges, where the kinks sit.
        t = 0.5 * (1.0 - np.cos(np.pi * np.arange(n) / (n - 1)))
        return lo + (hi - lo) * t

    # Top band (1/2, 1): closed form values; tail handled exactly.
    top_nodes = cheb_nodes(0.5, 1.0 - 1e-12, resolution)
    top_values = closed_form(top_nodes)
    top = _Band(
        k=1,
        lo=0.5,
        hi=1.0,
        nodes=top_nodes,
        values=top_values,
        tail_at_hi=0.0,
        interp=None,
        anti=None,
    )

    grid = DensityGrid(theta=theta, bands=(top,), leftover=0.0, deepest_edge=0.5)
    bands = [top]
    tail_at_edge = grid._top_tail(0.5)

    for k in range(2, max_bands + 2):
        lo, hi = 1.0 / (k + 1), 1.0 / k
        nodes = cheb_nodes(lo, hi, resolution)
        # cdf argument p/(1-p) lives one band higher, already resolved
        args = nodes / (1.0 - nodes)
        partial = DensityGrid(
            theta=theta, bands=tuple(bands), leftover=0.0, deepest_edge=lo_prev(bands)
        )
        cdf_vals = np.array([1.0 - partial.tail(min(a, 1.0)) for a in args])
        values = closed_form(nodes) * np.clip(cdf_vals, 0.0, 1.0)
        interp = PchipInterpolator(nodes, values)
        band = _Band(
            k=k,
            lo=lo,
            hi=hi,
            nodes=nodes,
            values=values,
            tail_at_hi=tail_at_edge,
            interp=interp,
            anti=interp.antiderivative(),
        )
        bands.append(band)
        tail_at_edge = band.tail_at_hi + float(band.anti(hi) - band.anti(nodes[0]))
        leftover = max(0.0, 1.0 - tail_at_edge)
        if leftover < mass_target:
            return DensityGrid(
                theta=theta, bands=tuple(bands), leftover=leftover, deepest_edge=lo
            )
    raise ArithmeticError(
        f"band recursion did not resolve the mass target within {max_bands} bands"
    )


def lo_prev(bands) -> float:
    return bands[-1].lo


def tail_p1(grid: DensityGrid, x: float) -> float:
    """P{P_1 >= x} by cumulative lookup on the grid."""
    if x < 0.0 or x > 1.0:
        raise ValueError("x must lie in [0, 1]")
    return grid.tail(x)


def gn_density(theta: float, p, grid: DensityGrid) -> float:
    """Joint density of the top-n ranked frequencies at a descending vector."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("p must be a nonempty vector")
    n = p.size
    s = float(p.sum())
    interior = (
        np.all(p[:-1] >= p[1:]) and p[-1] > 0.0 and p[0] < 1.0 and s < 1.0
    )
    if not interior:
        return 0.0
    rem = 1.0 - s
    logv = n * math.log(theta) + (theta - 1.0) * math.log(rem) - float(np.log(p).sum())
    arg = min(p[-1] / rem, 1.0)
    cdf = grid.cdf(arg)
    if cdf <= 0.0:
        return 0.0
    logv += math.log(cdf)
    return math.exp(logv) if logv > -745.0 else 0.0


def marginal_pk(theta: float, k: int, x: float, grid: DensityGrid) -> float:
    """Density of the k-th ranked frequency at x by quadrature over the
    larger coordinates.  Supported for k in {2, 3} only."""
    if k not in (2, 3):
        raise NotImplementedError("marginal_pk supports k in {2, 3}")
    if x <= 0.0 or x >= 1.0 / k:
        return 0.0
    if k == 2:
        val, _ = quad(
            lambda p1: gn_density(theta, (p1, x), grid),
            x,
            1.0 - x,
            limit=200,
        )
        return val

    def inner(p1: float) -> float:
        hi = min(p1, 1.0 - p1 - x)
        if hi <= x:
            return 0.0
        v, _ = quad(lambda p2: gn_density(theta, (p1, p2, x), grid), x, hi, limit=100)
        return v

    val, _ = quad(inner, x, 1.0 - 2.0 * x, limit=100)
    return val


def log_tail_pk(theta: float, k: int, x: float, grid: DensityGrid) -> float:
    """log P{P_k >= x} by quadrature, scaled so that very small tails stay
    representable.  Returns -inf when x is outside the support."""
    if k == 1:
        t = grid.tail(x)
        return math.log(t) if t > 0.0 else -math.inf
    if k not in (2, 3):
        raise NotImplementedError("log_tail_pk supports k in {1, 2, 3}")
    if x >= 1.0 / k:
        return -math.inf
    if x <= 0.0:
        return 0.0
    # factor out the corner magnitude (1 - kx)^(theta-1)
    log_scale = (theta - 1.0) * math.log1p(-k * x)

    def scaled(pvec) -> float:
        v = gn_density(theta, pvec, grid)
        return v * math.exp(-log_scale) if v > 0.0 else 0.0

    if k == 2:

        def inner(p1: float) -> float:
            hi = min(p1, 1.0 - p1)
            if hi <= x:
                return 0.0
            v, _ = quad(lambda p2: scaled((p1, p2)), x, hi, limit=100)
            return v

        val, _ = quad(inner, x, 1.0 - x, limit=200)
    else:

        def inner2(p1: float, p2: float) -> float:
            hi = min(p2, 1.0 - p1 - p2)
            if hi <= x:
                return 0.0
            v, _ = quad(lambda p3: scaled((p1, p2, p3)), x, hi, limit=60)
            return v

        def inner1(p1: float) -> float:
            hi = min(p1, 1.0 - p1 - x)
            if hi <= x:
                return 0.0
            v, _ = quad(lambda p2: inner2(p1, p2), x, hi, limit=60)
            return v

        val, _ = quad(inner1, x, 1.0 - 2.0 * x, limit=60)
    if val <= 0.0:
        return -math.inf
    return log_scale + math.log(val)


def log_band_probability_p1(theta: float, p: float, delta: float, grid: DensityGrid) -> float:
    """log P{|P_1 - p| <= delta} from the grid tails."""
    lo, hi = max(p - delta, 0.0), min(p + delta, 1.0)
    prob = grid.tail(lo) - grid.tail(hi)
    return math.log(prob) if prob > 0.0 else -math.inf


def log_band_probability_pk(
    theta: float, k: int, p: float, delta: float, grid: DensityGrid
) -> float:
    """log P{|P_k - p| <= delta} via the quadrature tails."""
    lo, hi = max(p - delta, 0.0), p + delta
    log_lo = log_tail_pk(theta, k, lo, grid) if lo > 0.0 else 0.0
    log_hi = log_tail_pk(theta, k, hi, grid)
    if log_hi == -math.inf:
        return log_lo
    # log(e^a - e^b) with a > b
    return log_lo + math.log1p(-math.exp(log_hi - log_lo))
