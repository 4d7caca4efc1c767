"""Large-deviation rate functions, the selection variational problem and the
critical selection constant.

Infinite rate values are reported as ``math.inf``; optimizers never feed an
infinite value into arithmetic, they restrict themselves to the finite
domain first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

GrowthClass = Literal["sublinear", "linear", "superlinear"]
HKind = Literal["minus_phi", "plus_phi", "custom"]


@dataclass(frozen=True)
class HSpec:
    """Fitness functional: +/- sum_k p_k^m, or a user-supplied callable."""

    kind: HKind
    m: int = 2
    func: Callable[[np.ndarray], float] | None = None

    def __post_init__(self) -> None:
        if self.kind in ("minus_phi", "plus_phi") and self.m < 2:
            raise ValueError("m must be >= 2")
        if self.kind == "custom" and self.func is None:
            raise ValueError("custom h needs a callable")

    def __call__(self, p) -> float:
        p = np.asarray(p, dtype=float)
        if self.kind == "minus_phi":
            return -float(np.sum(p**self.m))
        if self.kind == "plus_phi":
            return float(np.sum(p**self.m))
        return float(self.func(p))


def minus_phi(m: int = 2) -> HSpec:
    return HSpec(kind="minus_phi", m=m)


def plus_phi(m: int = 2) -> HSpec:
    return HSpec(kind="plus_phi", m=m)


@dataclass(frozen=True)
class SelectionRegime:
    growth_class: GrowthClass
    h_spec: HSpec
    c: float | None = None

    def __post_init__(self) -> None:
        if self.growth_class == "linear":
            if self.c is None or self.c <= 0:
                raise ValueError("linear growth needs c > 0")


@dataclass(frozen=True)
class VariationalSolution:
    s_star: float
    sup_value: float
    optimizer_shape: str


@dataclass(frozen=True)
class IntervalRate:
    """Rate value known only up to an interval (tail-sum uncertainty)."""

    lo: float
    hi: float
    ambiguous: bool = False

    @property
    def is_point(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi) and self.hi - self.lo < 1e-9

    @property
    def value(self) -> float:
        if self.is_point:
            return 0.5 * (self.lo + self.hi)
        if self.lo == self.hi:  # both infinite
            return self.lo
        raise ValueError("interval has not collapsed to a point")


def rate_I(x: float) -> float:
    """log 1/(1-x) on [0, 1); infinite outside."""
    if x < 0.0 or x >= 1.0:
        return math.inf
    return -math.log1p(-x)


def cgf_Lambda(lam: float) -> float:
    """lambda - 1 - log(lambda) for lambda > 1, zero otherwise."""
    if lam > 1.0:
        return lam - 1.0 - math.log(lam)
    return 0.0


def legendre_transform(x: float) -> float:
    """sup over lambda of lambda*x - cgf_Lambda(lambda), by derivative
    bisection on the concave bracket [1, 2/(1-x)]."""
    if not (0.0 <= x < 1.0):
        raise ValueError("x must lie in [0, 1)")
    if x == 0.0:
        return 0.0

    def deriv(lam: float) -> float:
        # d/dlam [lam*x - (lam - 1 - log lam)] for lam > 1
        return x - 1.0 + 1.0 / lam

    lo, hi = 1.0, 2.0 / (1.0 - x)
    if deriv(hi) > 0.0:
        raise ArithmeticError("bracket does not enclose the maximizer")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if deriv(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * hi:
            break
    lam = 0.5 * (lo + hi)
    return lam * x - cgf_Lambda(lam)


def rate_Ik(k: int, x: float) -> float:
    """log 1/(1-kx) on [0, 1/k]; infinite outside."""
    if k < 1:
        raise ValueError("k must be >= 1")
    kx = k * x
    if x < 0.0 or x > 1.0 / k or kx >= 1.0:
        return math.inf
    return -math.log1p(-kx)


def rate_Sn(p: Sequence[float]) -> float:
    """log 1/(1 - sum p_k) on the descending finite simplex; infinite when
    the vector leaves the simplex or its mass reaches one."""
    p = np.asarray(p, dtype=float)
    if p.size == 0:
        return 0.0
    if np.any(p < 0.0) or np.any(p[:-1] < p[1:]):
        return math.inf
    s = float(p.sum())
    if s >= 1.0:
        return math.inf
    return -math.log1p(-s)


def rate_S(prefix: Sequence[float], tail_sum_bound: float = 0.0) -> IntervalRate:
    """Rate of the full sequence from a finite prefix plus a certified bound
    on the unseen tail sum.  Interval-valued: the tail bound moves the total
    mass, and the rate with it."""
    if tail_sum_bound < 0.0:
        raise ValueError("tail_sum_bound must be nonnegative")
    p = np.asarray(prefix, dtype=float)
    if p.size and (np.any(p < 0.0) or np.any(p[:-1] < p[1:])):
        return IntervalRate(lo=math.inf, hi=math.inf)
    s_lo = float(p.sum()) if p.size else 0.0
    s_hi = s_lo + tail_sum_bound
    lo = math.inf if s_lo >= 1.0 else -math.log1p(-s_lo)
    if s_hi >= 1.0:
        return IntervalRate(lo=lo, hi=math.inf, ambiguous=math.isfinite(lo))
    return IntervalRate(lo=lo, hi=-math.log1p(-s_hi))


def rate_homozygosity(m: int, y: float) -> float:
    """Rate for the m-th order homozygosity: rate_I(y^(1/m)) on [0, 1]."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if y < 0.0 or y > 1.0:
        return math.inf
    return rate_I(y ** (1.0 / m))


def _single_atom_objective(c: float, m: int, s: float) -> float:
    return c * s**m + math.log1p(-s)


def selection_sup(c: float, h: HSpec) -> VariationalSolution:
    """sup over configurations of c*H(q) - S(q).

    For H = +phi_m the problem collapses to one dimension (at fixed total
    mass a single atom maximizes phi_m), solved by derivative bisection and
    cross-checked against a dense grid.  For H = -phi_m the empty
    configuration is optimal and the sup is zero.  Custom H falls back to a
    coarse coordinate search with no optimality guarantee.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if h.kind == "minus_phi":
        # c*(-phi_m)(q) - S(q) <= 0 with equality at q = 0
        return VariationalSolution(s_star=0.0, sup_value=0.0, optimizer_shape="empty")
    if h.kind == "plus_phi":
        m = h.m

        def deriv(s: float) -> float:
            return c * m * s ** (m - 1) - 1.0 / (1.0 - s)

        # interior stationary points require deriv > 0 somewhere in (0, 1)
        grid = np.linspace(1e-6, 1.0 - 1e-12, 10_000)
        vals = c * grid**m + np.log1p(-grid)
        best_idx = int(np.argmax(vals))
        if vals[best_idx] <= 0.0:
            return VariationalSolution(s_star=0.0, sup_value=0.0, optimizer_shape="empty")
        # refine the grid winner by derivative bisection on its bracket
        lo = grid[max(best_idx - 1, 0)]
        hi = grid[min(best_idx + 1, grid.size - 1)]
        if deriv(lo) <= 0.0 or deriv(hi) >= 0.0:
            s_star = grid[best_idx]
        else:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if deriv(mid) > 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-15:
                    break
            s_star = 0.5 * (lo + hi)
        value = _single_atom_objective(c, m, s_star)
        if value <= 0.0:
            return VariationalSolution(s_star=0.0, sup_value=0.0, optimizer_shape="empty")
        return VariationalSolution(s_star=s_star, sup_value=value, optimizer_shape="single-atom")
    return _selection_sup_custom(c, h)


def _selection_sup_custom(
    c: float, h: HSpec, dim: int = 16, restarts: int = 8, sweeps: int = 60
) -> VariationalSolution:
    # Projected coordinate search over the truncated descending simplex.
    # Heuristic: no optimality guarantee for general H.
    rng = np.random.default_rng(0)

    def objective(q: np.ndarray) -> float:
        s = float(q.sum())
        if s >= 1.0:
            return -math.inf
        return c * h(q) - (-math.log1p(-s))

    def project(q: np.ndarray) -> np.ndarray:
        q = np.clip(q, 0.0, None)
        q = np.sort(q)[::-1]
        s = q.sum()
        if s >= 1.0:
            q = q * (1.0 - 1e-9) / s
        return q

    # restarts: the empty configuration, single atoms of varying mass, and
    # random descending profiles
    starts = [np.zeros(dim)]
    for s in (0.1, 0.3, 0.5, 0.7, 0.9):
        q = np.zeros(dim)
        q[0] = s
        starts.append(q)
    for _ in range(restarts):
        mass = rng.uniform(0.05, 0.95)
        raw = np.sort(rng.random(dim))[::-1]
        starts.append(mass * raw / raw.sum())

    best_q = np.zeros(dim)
    best_v = objective(best_q)
    for q in starts:
        v = objective(q)
        step = 0.25
        for _ in range(sweeps):
            improved = False
            for i in range(dim):
                for sign in (1.0, -1.0):
                    cand = q.copy()
                    cand[i] += sign * step
                    cand = project(cand)
                    cv = objective(cand)
                    if cv > v + 1e-15:
                        q, v = cand, cv
                        improved = True
            if not improved:
                step *= 0.5
                if step < 1e-10:
                    break
        if v > best_v:
            best_q, best_v = q, v
    return VariationalSolution(
        s_star=float(best_q.sum()), sup_value=best_v, optimizer_shape="custom"
    )


def superlinear_maximizer(h: HSpec, dim: int) -> np.ndarray:
    """The unique maximizer of H used in the degenerate regime."""
    if h.kind == "minus_phi":
        return np.zeros(dim)
    if h.kind == "plus_phi":
        p0 = np.zeros(dim)
        p0[0] = 1.0
        return p0
    raise NotImplementedError(
        "superlinear regime needs a certified unique maximizer; custom h unsupported"
    )


def rate_selection(p: Sequence[float], regime: SelectionRegime) -> float:
    """Selection rate function at a finitely-supported configuration."""
    p = np.asarray(p, dtype=float)
    if regime.growth_class == "sublinear":
        return rate_Sn(p) if p.size else 0.0
    if regime.growth_class == "linear":
        sup = selection_sup(regime.c, regime.h_spec).sup_value
        s_p = rate_Sn(p) if p.size else 0.0
        if math.isinf(s_p):
            return math.inf
        return sup - (regime.c * regime.h_spec(p) - s_p)
    # superlinear
    p0 = superlinear_maximizer(regime.h_spec, max(p.size, 1))
    if p.size == 0:
        p = np.zeros(1)
    if p.size != p0.size:
        q = np.zeros(max(p.size, p0.size))
        q[: p.size] = p
        p = q
        q0 = np.zeros(p.size)
        q0[: p0.size] = p0
        p0 = q0
    return 0.0 if np.allclose(p, p0, atol=1e-12, rtol=0.0) else math.inf


def critical_equation(c: float) -> float:
    """The transcendental whose root > 2 separates the homozygote-advantage
    phases: log((1-r)/2) + c((1+r)/2)^2 with r = sqrt(1-2/c)."""
    if c < 2.0:
        raise ValueError("defined for c >= 2")
    r = math.sqrt(1.0 - 2.0 / c)
    return math.log((1.0 - r) / 2.0) + c * ((1.0 + r) / 2.0) ** 2


def solve_c0() -> float:
    """Bisection root of the critical equation on (2, 10], residual <= 1e-12."""
    lo, hi = 2.0, 10.0
    flo = critical_equation(lo)
    fhi = critical_equation(hi)
    if not (flo < 0.0 < fhi):
        raise ArithmeticError("sign change certificate failed on (2, 10]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = critical_equation(mid)
        if abs(fmid) <= 1e-13:
            return mid
        if fmid < 0.0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    if abs(critical_equation(mid)) > 1e-12:
        raise ArithmeticError("bisection failed to reach the residual target")
    return mid
