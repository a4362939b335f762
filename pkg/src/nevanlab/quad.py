"""Deterministic quadrature over exhaustion domains, their boundaries and slices,
plus a seeded Monte Carlo estimator for heat-kernel expectations.

Domains are parameterized in polar coordinates about the base point. Along
each ray the integrand is integrated on Gauss-Legendre panels that are
geometrically graded toward o (ρ = e^u near the pole) and uniform beyond.
Angular rules are the trapezoid rule on S¹ and, on S^{2m-1} ⊂ ℂᵐ, the
product of a conical Gauss rule on the simplex of |z_k|² with trapezoid
rules in the phases. Levels double every resolution until two successive
estimates agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, UnsupportedOperation
from .models import gauss_legendre

Integrand = Callable[[np.ndarray], np.ndarray]
CHUNK = 400_000


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration settings.

    ``method`` is ``adaptive``, ``monte-carlo`` or ``both`` (only heat
    expectations use Monte Carlo). ``max_level`` bounds the refinement and
    ``max_points`` the size of a single angular rule.
    """

    method: str = "adaptive"
    rtol: float = 1e-7
    atol: float = 1e-13
    max_evals: int = 60_000_000
    seed: int = 0
    mc_samples: int = 2**17
    min_level: int = 1
    max_level: int = 6
    radial_step: float = 1.0
    max_points: int = 4_000_000

    def __post_init__(self):
        if self.method not in ("adaptive", "monte-carlo", "both"):
            raise DomainError(f"unknown quadrature method {self.method!r}")
        if not (self.rtol > 0):
            raise DomainError("tolerance must be positive")
        if self.mc_samples < 2:
            raise DomainError("Monte Carlo needs at least two samples")


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error: float
    evaluations: int
    converged: bool
    method: str = "adaptive"
    mc_value: float | None = None
    mc_error: float | None = None

    @property
    def agree(self) -> bool | None:
        """Dual-method consistency within 3× the combined error estimate."""
        if self.mc_value is None:
            return None
        return abs(self.value - self.mc_value) <= 3.0 * math.hypot(self.error, self.mc_error) + 1e-15

    def as_dict(self) -> dict:
        d = {"value": self.value, "error": self.error, "evaluations": self.evaluations, "converged": self.converged, "method": self.method}
        if self.mc_value is not None:
            d.update(mc_value=self.mc_value, mc_error=self.mc_error, agree=self.agree)
        return d


# ---------------------------------------------------------------------------
# rules


def _simplex_rule(dim: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Conical Gauss rule on {s_i >= 0, Σ s_i <= 1} ⊂ R^dim (weights sum to 1/dim!)."""
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    g, w = gauss_legendre(n)
    x = 0.5 * (g + 1.0)
    wx = 0.5 * w
    # s_1 = x_1, s_2 = (1 - x_1) x_2, ... with Jacobian Π (1 - x_1 - ...)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrid = np.meshgrid(*([wx] * dim), indexing="ij")
    X = np.stack([gg.ravel() for gg in grids], axis=-1)
    W = np.prod(np.stack([gg.ravel() for gg in wgrid], axis=-1), axis=-1)
    S = np.zeros_like(X)
    rem = np.ones(X.shape[0])
    for i in range(dim):
        S[:, i] = rem * X[:, i]
        W = W * rem
        rem = rem * (1.0 - X[:, i])
    return S, W


def rule_size(dim: int, level: int, widen: int = 1) -> int:
    """Number of directions in ``sphere_rule(dim, level, widen)``."""
    m = dim // 2
    if m == 1:
        return 32 * 2**level * max(1, int(widen))
    return (4 * 2**level) ** (m - 1) * (8 * 2**level) ** m


@lru_cache(maxsize=64)
def sphere_rule(dim: int, level: int, widen: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Directions on S^{dim-1} and weights summing to its area (dim even).

    On S¹ the node count is multiplied by ``widen`` (used for large disks).
    """
    if dim % 2:
        raise UnsupportedOperation("angular rules are provided for even real dimension")
    m = dim // 2
    if m == 1:
        n = 32 * 2**level * max(1, int(widen))
        phi = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return dirs, np.full(n, 2.0 * np.pi / n)
    n_s = 4 * 2**level
    n_phi = 8 * 2**level
    S, W = _simplex_rule(m - 1, n_s)
    s_last = np.clip(1.0 - S.sum(axis=-1, keepdims=True), 0.0, None)
    S = np.concatenate([S, s_last], axis=-1)
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    grids = np.meshgrid(*([phi] * m), indexing="ij")
    P = np.stack([gg.ravel() for gg in grids], axis=-1)
    amp = np.sqrt(S)[:, None, :]
    z = amp * np.exp(1j * P[None, :, :])
    dirs = np.empty((S.shape[0] * P.shape[0], dim))
    zz = z.reshape(-1, m)
    dirs[:, 0::2] = zz.real
    dirs[:, 1::2] = zz.imag
    wts = (W[:, None] * np.full(P.shape[0], (2 * np.pi / n_phi) ** m)[None, :]).ravel() * 2.0 ** (1 - m)
    return dirs, wts


def _radial_fractions(level: int, rmax_over_h: float, tau_min: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Nodes τ ∈ (0, 1] and weights for ∫_0^1 F(τ) dτ.

    Uniform panels of relative length 1/rmax_over_h down to τ_s = min(1/8, that
    length), then log-graded panels on [tau_min, τ_s].
    """
    nodes = 8
    g, w = gauss_legendre(nodes)
    tau_s = min(0.125, 1.0 / max(rmax_over_h, 1e-300))
    ua, ub = math.log(tau_min), math.log(tau_s)
    n_log = int(math.ceil((ub - ua) / 0.6)) + 8 * level
    edges = np.linspace(ua, ub, n_log + 1)
    h = np.diff(edges)[:, None]
    u = (edges[:-1, None] + 0.5 * h * (g[None, :] + 1.0)).ravel()
    wu = (0.5 * h * w[None, :]).ravel()
    t_log = np.exp(u)
    w_log = wu * t_log
    n_uniform = max(2, int(math.ceil((1.0 - tau_s) * rmax_over_h)))
    edges = np.linspace(tau_s, 1.0, n_uniform + 1)
    h = np.diff(edges)[:, None]
    t_lin = (edges[:-1, None] + 0.5 * h * (g[None, :] + 1.0)).ravel()
    w_lin = (0.5 * h * w[None, :]).ravel()
    return np.concatenate([t_log, t_lin]), np.concatenate([w_log, w_lin])


def smooth_bump(s: np.ndarray) -> np.ndarray:
    """C^∞ cutoff: 1 on [0, 1/2], 0 on [1, ∞)."""
    s = np.asarray(s, dtype=float)
    tau = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(tau < 1, np.exp(-1.0 / np.maximum(1.0 - tau, 1e-300)), 0.0)
        b = np.where(tau > 0, np.exp(-1.0 / np.maximum(tau, 1e-300)), 0.0)
    return a / (a + b)


# ---------------------------------------------------------------------------
# core polar integration


def _polar_integral(
    center: np.ndarray,
    dirs: np.ndarray,
    dw: np.ndarray,
    extent: np.ndarray,
    integrand: Integrand,
    level: int,
    step: float,
    weight_fn: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[float, int]:
    """∫ over the star {center + λu : 0 < λ < extent(u)} of integrand · weight_fn."""
    dim = dirs.shape[1]
    rmax = float(np.max(extent)) if extent.size else 0.0
    if rmax <= 0:
        return 0.0, 0
    tau, wt = _radial_fractions(level, rmax / step * 2**level)
    total = 0.0
    evals = 0
    per = max(1, CHUNK // tau.size)
    for a in range(0, dirs.shape[0], per):
        u = dirs[a : a + per]
        R = extent[a : a + per]
        lam = R[:, None] * tau[None, :]
        pts = center + lam[..., None] * u[:, None, :]
        flat = pts.reshape(-1, dim)
        vals = np.asarray(integrand(flat), dtype=float).reshape(lam.shape)
        if weight_fn is not None:
            vals = vals * weight_fn(flat).reshape(lam.shape)
        jac = lam ** (dim - 1) * R[:, None]
        contrib = np.where(jac > 0, vals * jac, 0.0)
        total += float(np.sum(np.sum(contrib * wt[None, :], axis=1) * dw[a : a + per]))
        evals += flat.shape[0]
    return total, evals


def _require_flat(domain):
    if not domain.manifold.is_flat:
        raise UnsupportedOperation("domain quadrature needs a flat chart metric")


def integrate_domain(
    domain,
    integrand: Integrand,
    spec: QuadratureSpec | None = None,
    centers: Sequence[np.ndarray] = (),
) -> IntegralResult:
    """∫_{Δ(r)} integrand dv with geometric refinement at o and at ``centers``.

    Each center c gets a smooth partition-of-unity bump of radius δ (at most
    half its distance to ∂Δ(r) and to the other singular points); the bump
    part is integrated in polar coordinates about c.
    """
    spec = spec or QuadratureSpec()
    _require_flat(domain)
    M = domain.manifold
    o = M.origin()
    dim = M.real_dim
    cs = [np.asarray(c, dtype=float) for c in centers]
    cs = [c for c in cs if np.linalg.norm(c - o) > 0]
    radii = _bump_radii(domain, cs)

    def cut(x):
        s = np.zeros(x.shape[0])
        for c, d in zip(cs, radii):
            s = s + smooth_bump(np.linalg.norm(x - c, axis=-1) / d)
        return 1.0 - s

    prev = None
    evals = 0
    value = math.nan
    err = math.inf
    widen = 1
    if dim == 2:
        d0, _ = sphere_rule(dim, 0)
        R0, _ = domain.ray_roots(d0, clip=True)
        widen = max(1, int(math.ceil(float(np.max(R0)) / (8.0 * spec.radial_step))))
    for level in range(spec.min_level - 1, spec.max_level + 1):
        if prev is not None and rule_size(dim, level, widen) > spec.max_points:
            break
        dirs, dw = sphere_rule(dim, level, widen)
        R, _ = domain.ray_roots(dirs, clip=True)
        val, n = _polar_integral(o, dirs, dw, R, integrand, level, spec.radial_step, cut if cs else None)
        evals += n
        for c, d in zip(cs, radii):
            v2, n2 = _polar_integral(
                c, dirs, dw, np.full(dirs.shape[0], d), integrand, level, spec.radial_step,
                lambda x, c=c, d=d: smooth_bump(np.linalg.norm(x - c, axis=-1) / d),
            )
            val += v2
            evals += n2
        if prev is not None:
            value, err = val, abs(val - prev)
            if err <= max(spec.rtol * abs(val), spec.atol):
                return IntegralResult(value, err, evals, True)
        prev = val
        if evals > spec.max_evals:
            break
    return IntegralResult(prev if math.isnan(value) else value, err, evals, False)


def integrate_disk(radius: float, integrand: Integrand, spec: QuadratureSpec | None = None) -> IntegralResult:
    """∫_{|x| < radius} integrand dx over a disk of ℝ² (log-graded at the center)."""
    spec = spec or QuadratureSpec()
    widen = max(1, int(math.ceil(radius / (8.0 * spec.radial_step))))
    prev = None
    evals = 0
    value, err = math.nan, math.inf
    for level in range(spec.min_level - 1, spec.max_level + 1):
        if prev is not None and rule_size(2, level, widen) > spec.max_points:
            break
        dirs, dw = sphere_rule(2, level, widen)
        val, n = _polar_integral(np.zeros(2), dirs, dw, np.full(dirs.shape[0], radius), integrand, level, spec.radial_step)
        evals += n
        if prev is not None:
            value, err = val, abs(val - prev)
            if err <= max(spec.rtol * abs(val), spec.atol):
                return IntegralResult(value, err, evals, True)
        prev = val
        if evals > spec.max_evals:
            break
    return IntegralResult(prev if math.isnan(value) else value, err, evals, False)


def _bump_radii(domain, cs: list[np.ndarray]) -> list[float]:
    M = domain.manifold
    o = M.origin()
    out = []
    for i, c in enumerate(cs):
        d = c - o
        lam = np.linalg.norm(d)
        u = d / lam
        R, found = domain.ray_roots(u[None, :], clip=True)
        exit_gap = float(R[0]) - lam
        others = [np.linalg.norm(c - c2) for j, c2 in enumerate(cs) if j != i] + [lam]
        rad = min(1.0, 0.5 * exit_gap, 0.45 * min(others))
        if rad <= 0:
            raise DomainError("a singular point lies on ∂Δ(r); perturb r")
        out.append(rad)
    return out


def integrate_boundary(domain, integrand: Integrand, spec: QuadratureSpec | None = None) -> IntegralResult:
    """∫_{∂Δ(r)} integrand dμ_r with μ_r = π_r or Θ_r.

    With an exact constant density the measure is const·dσ_r. Otherwise
    dσ_r = λ^{n-1} |∇w| / |∂_λ w| du and the density is ½|∇w|.
    """
    spec = spec or QuadratureSpec()
    _require_flat(domain)
    M = domain.manifold
    dim = M.real_dim
    const = domain.boundary_density_constant()
    prev = None
    evals = 0
    value, err = math.nan, math.inf
    for level in range(spec.min_level - 1, spec.max_level + 1):
        lv = level + 1 if dim == 2 else level
        if prev is not None and rule_size(dim, lv) > spec.max_points:
            break
        dirs, dw = sphere_rule(dim, lv)
        lam, found = domain.ray_roots(dirs, clip=True)
        idx = np.nonzero(found)[0]
        pts = M.origin() + lam[idx, None] * dirs[idx]
        f = np.asarray(integrand(pts), dtype=float)
        if not np.all(np.isfinite(f)):
            raise DomainError("integrand singular on ∂Δ(r); perturb r")
        if const is not None:
            meas = const * lam[idx] ** (dim - 1)
        else:
            grad, radial = domain.normal_derivatives(pts, dirs[idx])
            meas = 0.5 * grad**2 / radial * lam[idx] ** (dim - 1)
        val = float(np.sum(f * meas * dw[idx]))
        evals += idx.size
        if prev is not None:
            value, err = val, abs(val - prev)
            if err <= max(spec.rtol * abs(val), spec.atol):
                return IntegralResult(value, err, evals, True)
        prev = val
        if evals > spec.max_evals:
            break
    return IntegralResult(prev if math.isnan(value) else value, err, evals, False)


def integrate_slice(
    domain,
    coord: int,
    value: complex,
    integrand: Integrand,
    spec: QuadratureSpec | None = None,
) -> IntegralResult:
    """∫ over the complex hyperplane {z_coord = value} ∩ Δ(r) against its induced volume.

    Requires a Euclidean model ℂᵐ with m >= 2; the slice is ℂ^{m-1} in polar
    coordinates about its closest point to o.
    """
    spec = spec or QuadratureSpec()
    M = domain.manifold
    if not M.is_euclidean or M.complex_dim < 2:
        raise UnsupportedOperation("slice integrals are available on ℂᵐ, m >= 2")
    m = M.complex_dim
    keep = [k for k in range(m) if k != coord]
    sdim = 2 * (m - 1)
    base = np.zeros(2 * m)
    base[2 * coord] = value.real
    base[2 * coord + 1] = value.imag
    if np.linalg.norm(base) == 0:
        raise DomainError("the slice passes through the base point")

    def embed(y):
        x = np.tile(base, (y.shape[0], 1))
        for j, k in enumerate(keep):
            x[:, 2 * k] = y[:, 2 * j]
            x[:, 2 * k + 1] = y[:, 2 * j + 1]
        return x

    if not domain.contains(base[None, :])[0]:
        return IntegralResult(0.0, 0.0, 0, True)

    class _SliceDomain:
        def ray_roots(self, dirs, clip=True):
            # w decreases along slice rays on ℂᵐ
            lo = np.zeros(dirs.shape[0])
            hi = np.full(dirs.shape[0], 2.0 * domain.r + 1.0)
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                pos = domain.value(embed(mid[:, None] * dirs)) > 0
                lo = np.where(pos, mid, lo)
                hi = np.where(pos, hi, mid)
                if np.max(hi - lo) < 1e-14 * max(1.0, domain.r):
                    break
            return 0.5 * (lo + hi), np.ones(dirs.shape[0], dtype=bool)

    sd = _SliceDomain()
    prev = None
    evals = 0
    val = math.nan
    err = math.inf
    zero = np.zeros(sdim)
    for level in range(spec.min_level - 1, spec.max_level + 1):
        if prev is not None and rule_size(sdim, level) > spec.max_points:
            break
        dirs, dw = sphere_rule(sdim, level)
        R, _ = sd.ray_roots(dirs)
        v, n = _polar_integral(zero, dirs, dw, R, lambda y: integrand(embed(y)), level, spec.radial_step)
        evals += n
        if prev is not None:
            val, err = v, abs(v - prev)
            if err <= max(spec.rtol * abs(v), spec.atol):
                return IntegralResult(val, err, evals, True)
        prev = v
    return IntegralResult(val, err, evals, False)


# ---------------------------------------------------------------------------
# heat expectations


def monte_carlo_heat(domain, payoff: Integrand, n: int, seed: int, block_size: int = 2**15) -> tuple[float, float]:
    """Mean of payoff(X)·1{X ∈ Δ(r)} for X ~ p(r, o, ·) with its standard error.

    Blocks use independent counter-based streams keyed by (seed, block).
    """
    M = domain.manifold
    sums = []
    sq = []
    count = 0
    for b in range(int(math.ceil(n / block_size))):
        k = min(block_size, n - b * block_size)
        x = M.sample_heat(domain.r, k, seed, block=b)
        inside = domain.contains(x)
        v = np.zeros(k)
        if np.any(inside):
            v[inside] = payoff(x[inside])
        sums.append(np.sum(v))
        sq.append(np.sum(v * v))
        count += k
    mean = float(np.sum(sums)) / count
    var = max(float(np.sum(sq)) / count - mean * mean, 0.0)
    return mean, math.sqrt(var / (count - 1))


def heat_expectation(
    domain,
    payoff: Integrand,
    spec: QuadratureSpec | None = None,
    centers: Sequence[np.ndarray] = (),
) -> IntegralResult:
    """∫_{Δ(r)} p(r, o, x) payoff(x) dv by quadrature and/or Monte Carlo."""
    spec = spec or QuadratureSpec()
    M = domain.manifold
    if spec.method == "monte-carlo":
        mv, me = monte_carlo_heat(domain, payoff, spec.mc_samples, spec.seed)
        return IntegralResult(mv, me, spec.mc_samples, True, "monte-carlo", mv, me)
    q = integrate_domain(domain, lambda x: M.heat_kernel(domain.r, x) * payoff(x), spec, centers)
    if spec.method == "adaptive":
        return q
    mv, me = monte_carlo_heat(domain, payoff, spec.mc_samples, spec.seed)
    return IntegralResult(q.value, q.error, q.evaluations + spec.mc_samples, q.converged, "both", mv, me)
